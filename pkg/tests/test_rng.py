"""Golden-value and equivalence tests for the deterministic stream."""

import numpy as np
import pytest

from frontwalk._kernels import HAVE_NUMBA, fill_steps, fill_uniforms
from frontwalk.rng import RandomStream, member_stream

# Published SplitMix64 output vectors (Steele/Lea/Flood reference code).
SEED0_WORDS = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
SEED1234567_WORDS = [
    6457827717110365317,
    3203168211198807973,
    9817491932198370423,
]


def test_raw_stream_matches_published_vectors():
    s = RandomStream(0)
    assert [s.next_raw() for _ in range(3)] == SEED0_WORDS
    s = RandomStream(1234567)
    assert [s.next_raw() for _ in range(3)] == SEED1234567_WORDS


def test_seed_is_masked_to_64_bits():
    assert RandomStream(1 << 64).next_raw() == SEED0_WORDS[0]
    assert RandomStream((1 << 64) + 1234567).next_raw() == SEED1234567_WORDS[0]


def test_draw_step_is_sign_of_top_bit():
    words = RandomStream(0)
    steps = RandomStream(0)
    for _ in range(64):
        expected = 1 if words.next_raw() >> 63 else -1
        assert steps.draw_step() == expected


def test_draw_uniform_grid_and_range():
    words = RandomStream(99)
    uniforms = RandomStream(99)
    for _ in range(64):
        expected = ((words.next_raw() >> 12) + 0.5) * 2.0**-52
        got = uniforms.draw_uniform()
        assert got == expected
        assert 0.0 < got < 1.0


def test_draw_uniform_never_hits_zero_or_one():
    # every grid point is exact in float64, including both extreme words
    low = ((0 >> 12) + 0.5) * 2.0**-52
    high = ((0xFFFFFFFFFFFFFFFF >> 12) + 0.5) * 2.0**-52
    assert low == 2.0**-53 > 0.0
    assert high == 1.0 - 2.0**-53 < 1.0


def test_stream_statistics():
    s = RandomStream(7)
    n = 20000
    steps = [s.draw_step() for _ in range(n)]
    assert abs(sum(steps)) < 4 * n**0.5
    u = np.fromiter((s.draw_uniform() for _ in range(n)), dtype=np.float64)
    assert abs(u.mean() - 0.5) < 4 * (1.0 / 12.0 / n) ** 0.5
    assert abs(u.var() - 1.0 / 12.0) < 0.005


def test_member_stream_reproducible_and_decorrelated():
    a1 = member_stream(42, 0)
    a2 = member_stream(42, 0)
    b = member_stream(42, 1)
    seq1 = [a1.next_raw() for _ in range(4)]
    assert seq1 == [a2.next_raw() for _ in range(4)]
    assert seq1 != [b.next_raw() for _ in range(4)]


def test_member_stream_rejects_negative_member():
    with pytest.raises(ValueError):
        member_stream(1, -1)


def test_member_zero_differs_from_plain_seed():
    # member derivation hashes the base seed, it is not the identity
    plain = RandomStream(42)
    derived = member_stream(42, 0)
    assert plain.next_raw() != derived.next_raw()


@pytest.mark.skipif(not HAVE_NUMBA, reason="compiled path unavailable")
def test_kernel_uniforms_bit_identical_to_python():
    out = np.empty(257, dtype=np.float64)
    state = fill_uniforms(np.uint64(12345), out)
    py = RandomStream(12345)
    expected = np.array([py.draw_uniform() for _ in range(out.size)])
    assert np.array_equal(out, expected)
    assert int(state) == py.state


@pytest.mark.skipif(not HAVE_NUMBA, reason="compiled path unavailable")
def test_kernel_steps_bit_identical_to_python():
    out = np.empty(257, dtype=np.int64)
    state = fill_steps(np.uint64(987654321), out)
    py = RandomStream(987654321)
    expected = np.array([py.draw_step() for _ in range(out.size)])
    assert np.array_equal(out, expected)
    assert int(state) == py.state
