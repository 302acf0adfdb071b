"""Compiled hot loop for the walker update.

The functions here are jitted mirrors of the pure-Python reference path in
``solver``. They inline the SplitMix64 update from ``rng`` and consume draws
in the identical node-major, walker-minor order, so a given seed produces a
bit-identical trajectory on either path (the test suite asserts this). All
floating point expressions are written in the same operation order as the
Python path; no fastmath.

When numba is not importable the module still imports cleanly with
``HAVE_NUMBA = False`` and the solver falls back to the Python path.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S63 = np.uint64(63)
_S12 = np.uint64(12)
_INV_2_52 = 2.0**-52

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _next_u64(state):
        state = state + _GOLDEN
        z = state
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        z = z ^ (z >> _S31)
        return state, z

    @njit(cache=True, nogil=True)
    def fill_uniforms(state, out):
        """Bulk uniform draws, for statistical tests. Returns the new state."""
        for i in range(out.shape[0]):
            state, z = _next_u64(state)
            out[i] = ((z >> _S12) + 0.5) * _INV_2_52
        return state

    @njit(cache=True, nogil=True)
    def fill_steps(state, out):
        """Bulk +-1 step draws, for statistical tests. Returns the new state."""
        for i in range(out.shape[0]):
            state, z = _next_u64(state)
            out[i] = 1 if (z >> _S63) != 0 else -1
        return state

    @njit(cache=True, nogil=True)
    def _sigma_eval(kind, coeff, xs, ys, h):
        # kind 0: linear coeff*h; kind 1: clamped piecewise-linear table.
        if kind == 0:
            return coeff * h
        if h <= xs[0]:
            return ys[0]
        if h >= xs[xs.shape[0] - 1]:
            return ys[xs.shape[0] - 1]
        lo = 0
        hi = xs.shape[0] - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if xs[mid] <= h:
                lo = mid
            else:
                hi = mid
        slope = (ys[lo + 1] - ys[lo]) / (xs[lo + 1] - xs[lo])
        return ys[lo] + slope * (h - xs[lo])

    @njit(cache=True, nogil=True)
    def advance_slice(
        counts,
        out,
        state,
        h,
        k,
        i_limit,
        dz,
        dtau,
        a0_over_n,
        sig_kind,
        sig_coeff,
        sig_xs,
        sig_ys,
        n_cells,
        length,
        pb_hist,
    ):
        """Move every walker of one time slice into ``out``.

        Walkers are processed node-major, walker-minor. Interior moves land at
        the drawn neighbor; arrivals at the front neighbor node evaluate the
        reaction probability and either push the front (sticking in place) or
        reflect one node left; destinations at or below node 0 are absorbed.
        The front position h and index k update immediately after each push.
        Returns the rng state, front state and step counters.
        """
        sqrt2dtau = math.sqrt(2.0 * dtau)
        absorbed_left = 0
        adsorbed = 0
        violators = 0
        arrivals = 0
        suppressed = 0
        pb_min = np.inf
        pb_max = -np.inf
        umax = -np.inf
        for i in range(i_limit + 1):
            c = counts[i]
            for _w in range(c):
                state, raw = _next_u64(state)
                p = 1 if (raw >> _S63) != 0 else -1
                dest = i + p
                if dest > 0 and dest <= k and i <= n_cells - 1:
                    out[dest] += 1
                elif dest == k + 1:
                    sig = _sigma_eval(sig_kind, sig_coeff, sig_xs, sig_ys, h)
                    excess = counts[k] - sig
                    pb = sqrt2dtau * a0_over_n * excess
                    arrivals += 1
                    if pb < pb_min:
                        pb_min = pb
                    if pb > pb_max:
                        pb_max = pb
                    if excess > umax:
                        umax = excess
                    if pb < 0.0:
                        pb_hist[0] += 1
                    elif pb >= 1.0:
                        pb_hist[11] += 1
                    else:
                        b = int(pb * 10.0) + 1
                        if b > 10:
                            b = 10
                        pb_hist[b] += 1
                    if pb > 0.0 and pb < 1.0:
                        state, raw2 = _next_u64(state)
                        r = ((raw2 >> _S12) + 0.5) * _INV_2_52
                        if r < pb:
                            dh = dtau * a0_over_n * excess
                            if h + dh < length:
                                h = h + dh
                                out[i] += 1
                                adsorbed += 1
                                nk = int(h / dz)
                                if nk != k:
                                    k = nk
                            else:
                                # push would exhaust the domain; drop it, keep the walker
                                out[i] += 1
                                suppressed += 1
                        else:
                            if k - 1 >= 1:
                                out[k - 1] += 1
                            else:
                                absorbed_left += 1
                    else:
                        # reaction probability outside (0,1): walker stays put
                        out[i] += 1
                        violators += 1
                else:
                    # destination at or below node 0
                    absorbed_left += 1
        return (
            state,
            h,
            k,
            absorbed_left,
            adsorbed,
            violators,
            arrivals,
            suppressed,
            pb_min,
            pb_max,
            umax,
        )

else:  # pragma: no cover - exercised only without numba
    fill_uniforms = None
    fill_steps = None
    advance_slice = None
