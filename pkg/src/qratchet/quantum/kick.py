"""Kick unitary applied spectrally, plus the free-rotation phase.

The kick U = exp(-i k_q [cos x + (a/2) cos(2x + phi)]) is diagonal in
position: transform to a uniform grid of >= 4N + 2 points (next power of
two), multiply by the phase, transform back. The banded Bessel
(Jacobi-Anger) form is kept out of the engine and used only as a test
oracle.
"""

from __future__ import annotations

import numpy as np

from .state import MomentumState

NORM_DRIFT_LIMIT = 1e-9


class NormDriftError(RuntimeError):
    """Kick application lost norm beyond tolerance (grid too coarse)."""


def _next_pow2(n: int) -> int:
    m = 1
    while m < n:
        m *= 2
    return m


class KickOperator:
    def __init__(self, k_quantum: float, a: float, phi: float, N: int, grid_size: int | None = None):
        self.k_quantum = k_quantum
        self.a = a
        self.phi = phi
        self.N = N
        self.grid_size = grid_size or _next_pow2(4 * N + 2)
        if self.grid_size < 2 * N + 1:
            raise ValueError("grid must hold at least 2N + 1 points")
        xg = 2.0 * np.pi * np.arange(self.grid_size) / self.grid_size
        self._phase = np.exp(
            -1j * k_quantum * (np.cos(xg) + (a / 2.0) * np.cos(2.0 * xg + phi))
        )
        self._fold = np.arange(-N, N + 1) % self.grid_size

    def apply(self, s: MomentumState, check_norm: bool = True) -> MomentumState:
        """U_kick |s>; unitarity asserted, never patched by renormalizing.

        check_norm=False skips the drift guard; it exists only for building
        the truncated dense matrix, whose edge columns leak by construction.
        """
        if s.N != self.N:
            raise ValueError("state and operator basis sizes differ")
        before = s.norm_sq()
        spec = np.zeros(self.grid_size, dtype=np.complex128)
        spec[self._fold] = s.amplitudes
        psi = np.fft.ifft(spec)
        psi *= self._phase
        spec = np.fft.fft(psi)
        out = MomentumState(amplitudes=spec[self._fold].copy(), N=self.N)
        if check_norm and abs(out.norm_sq() - before) > NORM_DRIFT_LIMIT:
            raise NormDriftError(
                f"norm drifted by {abs(out.norm_sq() - before):.3e} during kick; "
                "state reaches the basis edge or the grid is too coarse"
            )
        return out


def rotation_phases(N: int, hbar_eff: float) -> np.ndarray:
    """Diagonal free-rotation factors exp(-i hbar_eff n^2 / 2) for one period."""
    n = np.arange(-N, N + 1)
    return np.exp(-0.5j * hbar_eff * n.astype(float) ** 2)


def apply_free_rotation(s: MomentumState, hbar_eff: float) -> MomentumState:
    return MomentumState(amplitudes=s.amplitudes * rotation_phases(s.N, hbar_eff), N=s.N)
