"""Momentum-basis wave function for one stochastic trajectory."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BasisLeakageError(RuntimeError):
    """Amplitude piled up at the basis edge; rerun with a larger halfwidth."""


@dataclass
class MomentumState:
    """Complex amplitudes c_n for n in [-N, N]; index i maps to n = i - N."""

    amplitudes: np.ndarray
    N: int

    def __post_init__(self):
        if self.amplitudes.shape != (2 * self.N + 1,):
            raise ValueError("amplitudes must have length 2N + 1")

    @classmethod
    def eigenstate(cls, n0: int, N: int) -> "MomentumState":
        if abs(n0) > N:
            raise ValueError(f"|n0|={abs(n0)} exceeds basis halfwidth {N}")
        c = np.zeros(2 * N + 1, dtype=np.complex128)
        c[N + n0] = 1.0
        return cls(amplitudes=c, N=N)

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def mean_n(self) -> float:
        return float(np.sum(self.n_values * np.abs(self.amplitudes) ** 2))

    def mean_p(self, hbar_eff: float) -> float:
        return hbar_eff * self.mean_n()

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def edge_leakage(self) -> float:
        a = self.amplitudes
        return float(abs(a[0]) ** 2 + abs(a[-1]) ** 2)

    def check_leakage(self, threshold: float = 1e-8):
        leak = self.edge_leakage()
        if leak > threshold:
            raise BasisLeakageError(
                f"edge population {leak:.3e} exceeds {threshold:.1e}; "
                f"increase the basis halfwidth (N={self.N})"
            )

    def renormalize(self):
        self.amplitudes /= np.sqrt(self.norm_sq())
