"""Monte-Carlo wave-function unraveling of the dissipative channel.

The two jump operators lower |n| toward zero on either momentum side with
amplitude g = sqrt(-ln gamma). Their rate sum g^2 |n| is diagonal in the
momentum basis, so between jumps the decay is exact and the jump time is
a 1-d root find on the survival function

    S(t) = sum_n |c_n|^2 exp(-g^2 |n| t),

a polynomial in q = exp(-g^2 t) solved by bisection. One call evolves a
single inter-kick interval of unit dissipation time; it applies no
kinetic phase (the free rotation is a separate diagonal step so that the
classical limit of the full period is exactly the dissipative standard
map).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..params import ModelParams, derive_quantities, validate_params
from .state import MomentumState

JUMP_TIME_TOL = 1e-10
_ACTIVE_EPS = 1e-30  # |c|^2 below this is treated as numerically dark


@njit(nogil=True, cache=True)
def _interval_kernel(c, N, g2, rng, tol):  # pragma: no cover - jitted
    dim = 2 * N + 1
    # active index range [lo, hi]
    lo = 0
    while lo < dim - 1 and c[lo].real ** 2 + c[lo].imag ** 2 <= _ACTIVE_EPS:
        lo += 1
    hi = dim - 1
    while hi > 0 and c[hi].real ** 2 + c[hi].imag ** 2 <= _ACTIVE_EPS:
        hi -= 1
    n_jumps = 0
    t = 0.0
    while True:
        rem = 1.0 - t
        # weights grouped by m = |n|
        m_max = max(abs(lo - N), abs(hi - N))
        w = np.zeros(m_max + 1)
        norm2 = 0.0
        for i in range(lo, hi + 1):
            a2 = c[i].real ** 2 + c[i].imag ** 2
            w[abs(i - N)] += a2
            norm2 += a2
        r = rng.random() * norm2
        q_end = math.exp(-g2 * rem)
        s = 0.0
        for m in range(m_max, -1, -1):
            s = s * q_end + w[m]
        if s >= r:
            dt = rem
            jump = False
        else:
            tlo, thi = 0.0, rem
            while thi - tlo > tol:
                mid = 0.5 * (tlo + thi)
                qm = math.exp(-g2 * mid)
                s = 0.0
                for m in range(m_max, -1, -1):
                    s = s * qm + w[m]
                if s > r:
                    tlo = mid
                else:
                    thi = mid
            dt = 0.5 * (tlo + thi)
            jump = True
        # exact no-jump decay over dt
        decay = math.exp(-0.5 * g2 * dt)
        for i in range(lo, hi + 1):
            m = abs(i - N)
            if m:
                c[i] *= decay**m
        t += dt
        if not jump:
            break
        n_jumps += 1
        # channel weights ||L_mu psi||^2 / g^2
        w1 = 0.0
        w2 = 0.0
        for i in range(lo, hi + 1):
            n = i - N
            a2 = c[i].real ** 2 + c[i].imag ** 2
            if n >= 1:
                w1 += n * a2
            elif n <= -1:
                w2 -= n * a2
        tot = w1 + w2
        if tot <= 0.0:
            break  # dark state |0>: no further jumps possible
        # the shift writes only inside the new active range and everything
        # outside is zeroed, so stale sub-threshold amplitudes can never be
        # re-amplified by the sqrt weights
        if rng.random() * tot < w1:
            # L1 |psi>: component sqrt(n+1) c_{n+1} at n for n >= 0, else 0
            new_lo = max(lo - 1, N)
            new_hi = max(hi - 1, N)
            for i in range(new_lo, new_hi + 1):
                c[i] = math.sqrt(i - N + 1.0) * c[i + 1]
        else:
            # L2 |psi>: component sqrt(n+1) c_{-n-1} at -n for n >= 0, else 0
            new_lo = min(lo + 1, N)
            new_hi = min(hi + 1, N)
            for i in range(new_hi, new_lo - 1, -1):
                c[i] = math.sqrt(N - i + 1.0) * c[i - 1]
        for i in range(0, new_lo):
            c[i] = 0.0
        for i in range(new_hi + 1, dim):
            c[i] = 0.0
        lo = new_lo
        hi = new_hi
        s = 0.0
        for i in range(lo, hi + 1):
            s += c[i].real ** 2 + c[i].imag ** 2
        s = 1.0 / math.sqrt(s)
        for i in range(lo, hi + 1):
            c[i] *= s
    # renormalize at the end of the interval
    s = 0.0
    for i in range(lo, hi + 1):
        s += c[i].real ** 2 + c[i].imag ** 2
    s = 1.0 / math.sqrt(s)
    for i in range(lo, hi + 1):
        c[i] *= s
    return n_jumps


def dissipative_interval(
    s: MomentumState,
    params: ModelParams,
    rng: np.random.Generator,
    leakage_threshold: float = 1e-8,
) -> MomentumState:
    """Evolve one unit-time dissipation interval in place; returns the state.

    For gamma = 1 (g = 0) this is the identity: no decay, no jumps.
    """
    validate_params(params, quantum=True).raise_if_invalid()
    if params.gamma == 1.0:
        return s
    g2 = derive_quantities(params, p_max=1.0, quantum=True).g ** 2
    s.check_leakage(leakage_threshold)
    _interval_kernel(s.amplitudes, s.N, g2, rng, JUMP_TIME_TOL)
    s.check_leakage(leakage_threshold)
    return s
