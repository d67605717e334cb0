"""Husimi distributions from momentum-basis snapshots.

The probe is the minimum-uncertainty coherent state wrapped on the
cylinder x in [0, 2pi). In the integer-momentum basis its amplitudes are
exactly the discrete Gaussian

    A_n(x0, p0) ~ exp(-(hbar n - p0)^2 / (4 sigma_p^2)) exp(-i n x0),

normalized per center; discreteness of n already encodes the 2pi image
sum, so no explicit wrapping terms enter here (they only bound the
position-space reconstruction helper). H(x0, p0) is the snapshot average
of |<z(x0, p0)|psi>|^2 on cell centers, evaluated with one FFT per
momentum row by folding n modulo the number of x bins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import PhaseSpaceGrid
from .params import GridSpec

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CoherentFrame:
    """Coherent-state convention: momentum width and x-image truncation."""

    sigma_p: float
    wrap_terms: int = 8

    def __post_init__(self):
        if self.sigma_p <= 0:
            raise ValueError("sigma_p must be > 0")
        if self.wrap_terms < 1:
            raise ValueError("wrap_terms must be >= 1")

    @classmethod
    def default(cls, hbar_eff: float) -> "CoherentFrame":
        return cls(sigma_p=math.sqrt(hbar_eff / 2.0))

    def sigma_x(self, hbar_eff: float) -> float:
        return hbar_eff / (2.0 * self.sigma_p)

    def dropped_tail(self, hbar_eff: float) -> float:
        """Mass bound of the first neglected 2pi image of the position Gaussian."""
        sx = self.sigma_x(hbar_eff)
        return math.exp(-((TWO_PI * self.wrap_terms) ** 2) / (4.0 * sx**2))

    def position_density(
        self, x: np.ndarray, x0: float, p0: float, hbar_eff: float
    ) -> np.ndarray:
        """|<x|z>|^2 of the wrapped Gaussian, truncated at wrap_terms images."""
        sx = self.sigma_x(hbar_eff)
        psi = np.zeros_like(x, dtype=np.complex128)
        for j in range(-self.wrap_terms, self.wrap_terms + 1):
            d = x - x0 + TWO_PI * j
            psi += np.exp(-(d**2) / (4.0 * sx**2) + 1j * p0 * d / hbar_eff)
        dens = np.abs(psi) ** 2
        return dens / np.trapezoid(dens, x)


def momentum_kernel(
    nvals: np.ndarray, p_centers: np.ndarray, frame: CoherentFrame, hbar_eff: float
) -> np.ndarray:
    """Per-center normalized Gaussian weights W[p0, n] (phases excluded)."""
    W = np.exp(
        -((hbar_eff * nvals[None, :] - p_centers[:, None]) ** 2)
        / (4.0 * frame.sigma_p**2)
    )
    norms = np.sqrt(np.sum(W**2, axis=1))
    norms[norms == 0.0] = 1.0
    return W / norms[:, None]


def husimi_grid(
    snapshots: np.ndarray,
    grid_spec: GridSpec,
    hbar_eff: float,
    frame: CoherentFrame | None = None,
    metadata: dict | None = None,
) -> PhaseSpaceGrid:
    """Average Husimi distribution of the snapshot set, normalized to sum 1.

    snapshots: (count, 2N+1) complex amplitudes sharing one basis.
    """
    grid_spec.validate().raise_if_invalid()
    snapshots = np.atleast_2d(np.asarray(snapshots, dtype=np.complex128))
    dim = snapshots.shape[1]
    if dim % 2 != 1:
        raise ValueError("snapshot length must be odd (2N + 1)")
    N = (dim - 1) // 2
    if frame is None:
        frame = CoherentFrame.default(hbar_eff)

    xb, pb = grid_spec.x_bins, grid_spec.p_bins
    nvals = np.arange(-N, N + 1)
    p_centers = grid_spec.p_min + (np.arange(pb) + 0.5) * (
        (grid_spec.p_max - grid_spec.p_min) / pb
    )
    W = momentum_kernel(nvals, p_centers, frame, hbar_eff)

    # <z(x0, p0)|psi> = sum_n W[p0, n] e^{i n x0} c_n evaluated for all x0
    # cell centers at once: fold n modulo x_bins and FFT along that axis.
    half_cell = np.exp(1j * nvals * (math.pi / xb))
    fold = nvals % xb
    H = np.zeros((xb, pb))
    for c in snapshots:
        f = W * (c * half_cell)[None, :]
        folded = np.zeros((pb, xb), dtype=np.complex128)
        np.add.at(folded.T, fold, f.T)
        amp = np.fft.ifft(folded, axis=1) * xb
        H += (np.abs(amp) ** 2).T
    total = H.sum()
    if total <= 0:
        raise ValueError("Husimi grid is identically zero on this range")
    meta = dict(metadata or {})
    meta.setdefault("snapshots", int(snapshots.shape[0]))
    meta.setdefault("hbar_eff", hbar_eff)
    return PhaseSpaceGrid(
        values=H / total,
        x_bins=xb,
        p_bins=pb,
        p_min=grid_spec.p_min,
        p_max=grid_spec.p_max,
        kind="husimi",
        metadata=meta,
    )
