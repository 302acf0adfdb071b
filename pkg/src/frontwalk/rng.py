"""Deterministic random number stream for the walker simulation.

The generator is SplitMix64 (Steele, Lea, Flood 2014): a 64-bit counter
advanced by the golden-ratio increment, pushed through a fixed avalanche mix.
It is chosen over platform or library generators because the exact draw
sequence is part of this package's reproducibility contract: the same seed
must yield bit-identical trajectories across machines, Python versions, and
the compiled fast path in ``_kernels``, which inlines the identical update.

Draw conventions, fixed once and tested against golden values:

* ``draw_step``: sign of the top bit of the next 64-bit word (+1 if set).
* ``draw_uniform``: ``((word >> 12) + 0.5) * 2**-52``, uniform on a 2**52
  point grid strictly inside (0, 1). Every grid point is exact in float64
  (53-bit integers would round the topmost point up to 1.0), so zero and
  one are unreachable.
* one word is consumed per walker move; one extra word per in-range front
  evaluation. Consumers iterate node-major, walker-minor.
"""

from __future__ import annotations

from dataclasses import dataclass

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_52 = 2.0**-52


def _mix64(z: int) -> int:
    """SplitMix64 output function on a 64-bit word."""
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


@dataclass
class RandomStream:
    """Stateful SplitMix64 stream seeded with a 64-bit integer.

    The state is the raw counter; every draw advances it by the golden-ratio
    increment and mixes the result. No OS entropy is ever consulted.
    """

    state: int

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_raw(self) -> int:
        """Advance the counter and return the next mixed 64-bit word."""
        self.state = (self.state + _GOLDEN) & _MASK64
        return _mix64(self.state)

    def draw_step(self) -> int:
        """Return an equiprobable walker step, -1 or +1."""
        return 1 if (self.next_raw() >> 63) else -1

    def draw_uniform(self) -> float:
        """Return a uniform variate strictly inside (0, 1)."""
        return ((self.next_raw() >> 12) + 0.5) * _INV_2_52


def member_stream(base_seed: int, member: int) -> RandomStream:
    """Derive the stream for one ensemble member.

    Member streams are seeded with ``mix64(base_seed + member * MIX1)`` so
    that distinct members start at well-separated, reproducible points of the
    SplitMix64 orbit. Member 0 is the stream used by a plain single run.
    """
    if member < 0:
        raise ValueError(f"member index must be >= 0, got {member}")
    return RandomStream(_mix64((int(base_seed) + member * _MIX1) & _MASK64))
