"""Model parameters, validation, and derived physical quantities.

Conventions: the classical map acts on (x, p) with rescaled momentum
p = hbar_eff * n, so the kick strength entering the map is the classical
combination ``bigK``; the quantum kick strength is ``bigK / hbar_eff``.
All quantities are dimensionless (k_B = 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, fields


class SingularityError(ValueError):
    """Raised when gamma = 0 is used where g = sqrt(-ln gamma) is needed."""


class ValidationError(ValueError):
    """Raised when a parameter set fails validation."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.message for d in self.diagnostics))


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    diagnostics: tuple

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def raise_if_invalid(self):
        if self.diagnostics:
            raise ValidationError(self.diagnostics)


@dataclass(frozen=True)
class ModelParams:
    """Physical knobs of the dissipative kicked ratchet.

    gamma       dissipation, in [0, 1]; gamma = 1 is conservative
    bigK        classical kick strength K = k * hbar_eff
    a           second-harmonic amplitude (spatial symmetry broken iff
                a != 0 and phi != m*pi)
    phi         second-harmonic phase, radians
    hbar_eff    effective Planck constant (= kick period)
    temperature k_B T of the classical thermal noise, >= 0
    """

    gamma: float
    bigK: float
    a: float
    phi: float
    hbar_eff: float
    temperature: float = 0.0

    def spatial_symmetry_broken(self) -> bool:
        return self.a != 0.0 and not math.isclose(
            math.sin(self.phi), 0.0, abs_tol=1e-15
        )

    def temporal_symmetry_broken(self) -> bool:
        return self.gamma != 1.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(
                [Diagnostic("unknown_field", f"unknown field {u!r}") for u in sorted(unknown)]
            )
        missing = known - set(doc) - {"temperature"}
        if missing:
            raise ValidationError(
                [Diagnostic("missing_field", f"missing field {m!r}") for m in sorted(missing)]
            )
        return cls(**{k: float(v) for k, v in doc.items()})

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DerivedQuantities:
    """Quantities computed from ModelParams once and shared by both engines."""

    g: float                 # jump amplitude sqrt(-ln gamma); inf at gamma = 0
    k_quantum: float         # quantum kick strength K / hbar_eff
    noise_sigma: float       # thermal kick std sqrt(2 (1 - gamma) T), in p units
    basis_halfwidth: int     # smallest N with N * hbar_eff >= requested p_max


@dataclass(frozen=True)
class GridSpec:
    x_bins: int
    p_bins: int
    p_min: float
    p_max: float

    def validate(self):
        diags = []
        if self.x_bins < 1 or self.p_bins < 1:
            diags.append(Diagnostic("grid_bins", "grid bins must be >= 1"))
        if not self.p_min < self.p_max:
            diags.append(Diagnostic("grid_p_range", "p_min must be < p_max"))
        return ValidationResult(tuple(diags))


@dataclass(frozen=True)
class RunConfig:
    ensemble_size: int = 10_000
    steps: int = 100
    seed: int = 0
    grid: GridSpec = GridSpec(256, 256, -20.0, 20.0)
    trajectories: int = 500
    worker_hint: int = 1

    def validate(self) -> ValidationResult:
        diags = []
        if self.ensemble_size < 1:
            diags.append(Diagnostic("ensemble_size", "ensemble_size must be >= 1"))
        if self.steps < 0:
            diags.append(Diagnostic("steps", "steps must be >= 0"))
        if self.trajectories < 1:
            diags.append(Diagnostic("trajectories", "trajectories must be >= 1"))
        diags.extend(self.grid.validate().diagnostics)
        return ValidationResult(tuple(diags))

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(
                [Diagnostic("unknown_field", f"unknown field {u!r}") for u in sorted(unknown)]
            )
        if "grid" in doc:
            g = doc["grid"]
            if isinstance(g, (list, tuple)):
                doc["grid"] = GridSpec(int(g[0]), int(g[1]), float(g[2]), float(g[3]))
            elif isinstance(g, dict):
                doc["grid"] = GridSpec(**g)
        return cls(**doc)


def validate_params(params: ModelParams, quantum: bool = False) -> ValidationResult:
    """Check every ModelParams invariant; reports all violations, not just the first."""
    diags = []
    if not 0.0 <= params.gamma <= 1.0:
        diags.append(Diagnostic("gamma_range", f"gamma={params.gamma} outside [0, 1]"))
    if params.bigK < 0.0:
        diags.append(Diagnostic("bigK_negative", f"bigK={params.bigK} must be >= 0"))
    if params.temperature < 0.0:
        diags.append(
            Diagnostic("temperature_negative", f"temperature={params.temperature} must be >= 0")
        )
    if params.hbar_eff <= 0.0:
        diags.append(
            Diagnostic("hbar_eff_nonpositive", f"hbar_eff={params.hbar_eff} must be > 0")
        )
    if quantum and params.gamma == 0.0:
        diags.append(
            Diagnostic("gamma_singular", "gamma=0: g = sqrt(-ln gamma) diverges; quantum run impossible")
        )
    for f in fields(params):
        v = getattr(params, f.name)
        if not math.isfinite(v):
            diags.append(Diagnostic("non_finite", f"{f.name}={v} is not finite"))
    return ValidationResult(tuple(diags))


def derive_quantities(
    params: ModelParams, p_max: float, quantum: bool = False
) -> DerivedQuantities:
    """Pure function of the parameters; identical inputs give bit-identical outputs.

    Round trip: exp(-g**2) == gamma to machine precision for gamma in (0, 1].
    """
    validate_params(params, quantum=quantum).raise_if_invalid()
    if params.gamma == 0.0:
        if quantum:
            raise SingularityError("gamma=0: g = sqrt(-ln gamma) diverges")
        g = math.inf
    else:
        g = math.sqrt(-math.log(params.gamma))
    return DerivedQuantities(
        g=g,
        k_quantum=params.bigK / params.hbar_eff,
        noise_sigma=math.sqrt(2.0 * (1.0 - params.gamma) * params.temperature),
        basis_halfwidth=math.ceil(p_max / params.hbar_eff),
    )
