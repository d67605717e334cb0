"""Phase-space grids: shared container for Liouville and Husimi data,
the overlap measure, and grid file I/O (PGM heatmap + JSON sidecar + raw
float64 dump).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class PhaseSpaceGrid:
    """Discretized distribution over x in [0, 2pi) x p in [p_min, p_max].

    values[i, j] is the mass of x-bin i, p-bin j. Two grids are comparable
    iff bins and ranges match exactly.
    """

    values: np.ndarray
    x_bins: int
    p_bins: int
    p_min: float
    p_max: float
    kind: str  # "liouville" | "husimi"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (self.x_bins, self.p_bins):
            raise ValueError("values shape must be (x_bins, p_bins)")
        if np.any(self.values < 0):
            raise ValueError("grid values must be non-negative")

    def comparable(self, other: "PhaseSpaceGrid") -> bool:
        return (
            self.x_bins == other.x_bins
            and self.p_bins == other.p_bins
            and self.p_min == other.p_min
            and self.p_max == other.p_max
        )

    def normalized(self) -> "PhaseSpaceGrid":
        total = self.values.sum()
        if total <= 0:
            raise ValueError("cannot normalize an empty grid")
        return PhaseSpaceGrid(
            values=self.values / total,
            x_bins=self.x_bins,
            p_bins=self.p_bins,
            p_min=self.p_min,
            p_max=self.p_max,
            kind=self.kind,
            metadata=dict(self.metadata),
        )

    # --- persistence -----------------------------------------------------

    def save(self, stem: Path | str):
        """Write <stem>.pgm (16-bit heatmap), <stem>.json, <stem>.f64."""
        stem = Path(stem)
        raw = np.ascontiguousarray(self.values, dtype="<f8")
        stem.with_suffix(".f64").write_bytes(raw.tobytes())
        sidecar = {
            "kind": self.kind,
            "x_bins": self.x_bins,
            "p_bins": self.p_bins,
            "p_min": self.p_min,
            "p_max": self.p_max,
            "sum_before_normalization": float(self.values.sum()),
            "params": self.metadata.get("params"),
        }
        stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))
        vmax = self.values.max()
        scale = 65535.0 / vmax if vmax > 0 else 0.0
        # PGM rows scan p downward so higher p appears at the image top
        img = np.rint(self.values.T[::-1] * scale).astype(">u2")
        header = f"P5\n{self.x_bins} {self.p_bins}\n65535\n".encode()
        stem.with_suffix(".pgm").write_bytes(header + img.tobytes())

    @classmethod
    def load(cls, stem: Path | str) -> "PhaseSpaceGrid":
        stem = Path(stem)
        meta = json.loads(stem.with_suffix(".json").read_text())
        raw = np.frombuffer(stem.with_suffix(".f64").read_bytes(), dtype="<f8")
        values = raw.reshape(meta["x_bins"], meta["p_bins"]).copy()
        return cls(
            values=values,
            x_bins=meta["x_bins"],
            p_bins=meta["p_bins"],
            p_min=meta["p_min"],
            p_max=meta["p_max"],
            kind=meta["kind"],
            metadata={"params": meta.get("params")},
        )


def overlap_measure(
    L: PhaseSpaceGrid, H: PhaseSpaceGrid, mode: str = "normalized"
) -> float:
    """Overlap of two phase-space distributions on the same discretization.

    raw:        sum_i L_i H_i (literal discretized product integral)
    normalized: cosine form sum L H / sqrt(sum L^2 * sum H^2); equals 1
                iff the grids are proportional. Default for all
                headline-value comparisons.
    """
    if not L.comparable(H):
        raise ValueError("grids are not comparable (bins/ranges differ); no silent resampling")
    if mode not in ("normalized", "raw"):
        raise ValueError(f"unknown overlap mode {mode!r}")
    raw = float(np.sum(L.values * H.values))
    if mode == "raw":
        return raw
    denom = float(np.sqrt(np.sum(L.values**2) * np.sum(H.values**2)))
    if denom == 0.0:
        return 0.0
    return raw / denom


def comparison_report(
    classical_current,
    quantum_stats,
    L: PhaseSpaceGrid,
    H: PhaseSpaceGrid,
    similarity_threshold: float = 0.9,
) -> dict:
    """Bundle overlap + current summaries for a classical/quantum pair."""
    o_norm = overlap_measure(L, H, "normalized")
    o_raw = overlap_measure(L, H, "raw")
    report = {
        "overlap_normalized": o_norm,
        "overlap_raw": o_raw,
        "similar": o_norm > similarity_threshold,
        "similarity_threshold": similarity_threshold,
    }
    if classical_current is not None:
        report["J_classical_final"] = float(classical_current.values[-1])
    if quantum_stats is not None:
        report["J_quantum_final"] = float(quantum_stats.mean_p[-1])
        report["J_quantum_se_final"] = float(quantum_stats.std_err[-1])
    return report
