"""Registered parameter sets for the headline attractors.

Each preset carries the dissipation/kick pair, the finite temperature
used for its thermal companion run, and the momentum range of its phase
portrait. a = 0.5 and phi = pi/2 are the standard symmetry-breaking
choices for this map and are explicit config fields everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import GridSpec, ModelParams

DEFAULT_A = 0.5
DEFAULT_PHI = math.pi / 2.0
DEFAULT_HBAR = 0.082

# alternative effective Planck constants studied for QISS convergence
HBAR_CHOICES = (0.082, 0.246, 0.027)


@dataclass(frozen=True)
class Preset:
    name: str
    gamma: float
    bigK: float
    temperature: float      # thermal-companion T
    p_range: float          # phase portrait spans [-p_range, p_range]
    mean_momentum_units: int | None  # attractor mean p in units of 2pi; None if chaotic

    def params(
        self,
        hbar_eff: float = DEFAULT_HBAR,
        temperature: float | None = None,
        a: float = DEFAULT_A,
        phi: float = DEFAULT_PHI,
    ) -> ModelParams:
        return ModelParams(
            gamma=self.gamma,
            bigK=self.bigK,
            a=a,
            phi=phi,
            hbar_eff=hbar_eff,
            temperature=self.temperature if temperature is None else temperature,
        )

    def grid(self, x_bins: int = 256, p_bins: int = 256) -> GridSpec:
        return GridSpec(x_bins, p_bins, -self.p_range, self.p_range)


PRESETS = {
    "B1": Preset("B1", gamma=0.2, bigK=8.2, temperature=0.058, p_range=20.0, mean_momentum_units=1),
    "C-1": Preset("C-1", gamma=0.64, bigK=5.6, temperature=0.12, p_range=20.0, mean_momentum_units=-1),
    "D-1": Preset("D-1", gamma=0.29, bigK=11.9, temperature=0.07, p_range=30.0, mean_momentum_units=-1),
    "A": Preset("A", gamma=0.26, bigK=11.9, temperature=0.0, p_range=30.0, mean_momentum_units=None),
}

_ALIASES = {"CM1": "C-1", "C_-1": "C-1", "DM1": "D-1", "D_-1": "D-1", "CHAOTIC-A": "A", "CHAOTICA": "A"}


def get_preset(name: str) -> Preset:
    key = name.upper()
    key = _ALIASES.get(key, key)
    if key not in PRESETS:
        raise KeyError(
            f"unknown preset {name!r}; registered: {', '.join(sorted(PRESETS))}"
        )
    return PRESETS[key]
