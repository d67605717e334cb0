"""Classical engine: dissipative ratchet map, ensembles, currents, attractors.

One map step in rescaled variables:

    p' = gamma * p + K * [sin(x) + a * sin(2x + phi)]   (+ thermal kick xi)
    x' = x + p'

x is tracked unwrapped (transporting orbits have unbounded x); the wrapped
value in [0, 2pi) is used for grids and recurrence tests only.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grids import PhaseSpaceGrid
from .params import GridSpec, ModelParams, derive_quantities, validate_params
from .streams import init_stream, particle_stream, probe_stream

TWO_PI = 2.0 * math.pi

# Noise is drawn from per-particle streams in blocks of this many steps.
_NOISE_BLOCK = 256


@dataclass(frozen=True)
class ClassicalState:
    """Single phase-space point; x unwrapped, p rescaled momentum."""

    x: float
    p: float

    @property
    def x_wrapped(self) -> float:
        return self.x % TWO_PI


@dataclass
class Ensemble:
    """Particle swarm; x unwrapped positions, p rescaled momenta."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        if self.x.shape != self.p.shape or self.x.ndim != 1:
            raise ValueError("x and p must be 1-d arrays of equal length")

    @property
    def size(self) -> int:
        return self.x.size

    def x_wrapped(self) -> np.ndarray:
        return np.mod(self.x, TWO_PI)


@dataclass(frozen=True)
class CurrentSeries:
    """J(t) = <p> over the ensemble at each map step, t = 0..steps."""

    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def settle_time(self, target: float, band_frac: float = 0.02) -> int | None:
        """First step after which J stays within the declared band of target.

        Band is band_frac * |target|, or 0.05 absolute when target ~ 0.
        Returns None if the series never settles.
        """
        band = max(band_frac * abs(target), 0.05 if abs(target) < 0.5 else 0.0)
        outside = np.nonzero(np.abs(self.values - target) > band)[0]
        if len(outside) == 0:
            return 0
        t = int(outside[-1]) + 1
        return t if t < len(self.values) else None

    def alternation_amplitude(self, start: int) -> float:
        """Amplitude of the period-2 (Nyquist) component of J(t) for t >= start."""
        tail = self.values[start:]
        tail = tail[: 2 * (len(tail) // 2)]
        if len(tail) == 0:
            return 0.0
        signs = np.where(np.arange(len(tail)) % 2 == 0, 1.0, -1.0)
        return abs(float(np.mean(signs * (tail - tail.mean()))))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("t,J\n")
            for t, v in enumerate(self.values):
                fh.write(f"{t},{float(v)!r}\n")


@dataclass(frozen=True)
class AttractorReport:
    """Result of zero-noise attractor classification."""

    period: int | None
    mean_p_over_2pi: float
    chaotic: bool
    settle_time: int | None
    probes_agree: bool = True

    def __post_init__(self):
        if (self.period is None) != self.chaotic:
            raise ValueError("period must be None iff chaotic")


def make_initial_ensemble(size: int, seed: int) -> Ensemble:
    """Uniform x in [0, 2pi], p in [-pi, pi]; <p0> = 0 within statistical tolerance."""
    if size < 1:
        raise ValueError("ensemble size must be >= 1")
    rng = init_stream(seed)
    x = rng.uniform(0.0, TWO_PI, size)
    p = rng.uniform(-math.pi, math.pi, size)
    return Ensemble(x=x, p=p)


def _kick(x: np.ndarray, params: ModelParams) -> np.ndarray:
    return params.bigK * (np.sin(x) + params.a * np.sin(2.0 * x + params.phi))


def map_step(s: ClassicalState, params: ModelParams) -> ClassicalState:
    """Deterministic map step (T = 0)."""
    validate_params(params).raise_if_invalid()
    p = params.gamma * s.p + float(_kick(np.asarray(s.x), params))
    return ClassicalState(x=s.x + p, p=p)


def thermal_map_step(
    s: ClassicalState, params: ModelParams, rng: np.random.Generator
) -> ClassicalState:
    """Map step with the thermal kick xi added to p before the position update."""
    validate_params(params).raise_if_invalid()
    sigma = derive_quantities(params, p_max=1.0).noise_sigma
    p = params.gamma * s.p + float(_kick(np.asarray(s.x), params))
    if sigma > 0.0:
        p += sigma * rng.standard_normal()
    return ClassicalState(x=s.x + p, p=p)


# J(t) is reduced as a fixed-order sum of per-chunk partial sums; chunk
# boundaries never depend on the worker count, so J is bit-reproducible.
_SUM_CHUNK = 4096


def _evolve_slice(x, p, params, sigma, steps, seed, lo, sums):
    """Evolve particles [lo, lo + len(x)) in place; accumulate chunk sums of p.

    `lo` must be a multiple of _SUM_CHUNK so this worker's chunks are
    exactly the global chunks lo//_SUM_CHUNK onward.
    """
    gamma, K, a, phi = params.gamma, params.bigK, params.a, params.phi
    first_chunk = lo // _SUM_CHUNK
    edges = list(range(0, x.size, _SUM_CHUNK)) + [x.size]
    gens = None
    if sigma > 0.0:
        gens = [particle_stream(seed, lo + i) for i in range(x.size)]
    done = 0
    while done < steps:
        block = min(_NOISE_BLOCK, steps - done)
        noise = None
        if gens is not None:
            noise = np.empty((x.size, block))
            for i, g in enumerate(gens):
                noise[i] = g.normal(0.0, sigma, block)
        for b in range(block):
            p *= gamma
            p += K * (np.sin(x) + a * np.sin(2.0 * x + phi))
            if noise is not None:
                p += noise[:, b]
            x += p
            row = sums[done + b]
            for c, (clo, chi) in enumerate(zip(edges[:-1], edges[1:])):
                row[first_chunk + c] = float(np.sum(p[clo:chi]))
        done += block


def evolve_ensemble(
    ensemble: Ensemble,
    params: ModelParams,
    steps: int,
    seed: int = 0,
    workers: int = 1,
) -> tuple[Ensemble, CurrentSeries]:
    """Evolve every particle for `steps` iterations, recording J(t) = <p>.

    The reduction is a fixed-order sum over the full particle array, so
    J(t) is bit-identical for any worker count.
    """
    validate_params(params).raise_if_invalid()
    if ensemble.size == 0:
        raise ValueError("empty ensemble")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    sigma = derive_quantities(params, p_max=1.0).noise_sigma

    x = ensemble.x.copy()
    p = ensemble.p.copy()
    n = x.size
    n_chunks = -(-n // _SUM_CHUNK)
    sums = np.zeros((steps, n_chunks))

    workers = max(1, min(workers, n_chunks))
    # worker boundaries aligned to chunk boundaries
    chunk_bounds = np.linspace(0, n_chunks, workers + 1).astype(int)
    bounds = np.minimum(chunk_bounds * _SUM_CHUNK, n)
    if workers == 1:
        _evolve_slice(x, p, params, sigma, steps, seed, 0, sums)
    else:
        # slices are views; each worker evolves its particles in place
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [
                pool.submit(
                    _evolve_slice,
                    x[lo:hi], p[lo:hi], params, sigma, steps, seed, int(lo), sums,
                )
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for f in futs:
                f.result()

    J = np.empty(steps + 1)
    J[0] = float(np.sum(ensemble.p)) / n
    for t in range(steps):
        J[t + 1] = float(np.sum(sums[t])) / n
    return Ensemble(x=x, p=p), CurrentSeries(values=J)


def liouville_grid(
    ensemble: Ensemble, grid_spec: GridSpec, clip: bool = True
) -> PhaseSpaceGrid:
    """Normalized 2-d histogram of (wrapped x, p); out-of-range mass is tallied."""
    grid_spec.validate().raise_if_invalid()
    xw = ensemble.x_wrapped()
    p = ensemble.p
    inside = (p >= grid_spec.p_min) & (p <= grid_spec.p_max)
    overflow = int(np.sum(~inside))
    if overflow == ensemble.size:
        raise ValueError("all particles outside the grid p-range")
    if overflow and not clip:
        raise ValueError(
            f"{overflow} particles outside p-range and clipping disabled"
        )
    hist, _, _ = np.histogram2d(
        xw[inside],
        p[inside],
        bins=[grid_spec.x_bins, grid_spec.p_bins],
        range=[[0.0, TWO_PI], [grid_spec.p_min, grid_spec.p_max]],
    )
    total = hist.sum()
    return PhaseSpaceGrid(
        values=hist / total,
        x_bins=grid_spec.x_bins,
        p_bins=grid_spec.p_bins,
        p_min=grid_spec.p_min,
        p_max=grid_spec.p_max,
        kind="liouville",
        metadata={"overflow": overflow, "count": int(ensemble.size)},
    )


def _wrapped_dist(a: float, b: float) -> float:
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _classify_single(
    params: ModelParams,
    transient: int,
    max_period: int,
    x0: float,
    p0: float,
    eps_p: float,
    eps_x: float,
    verify_window: int,
):
    """(period|None, mean_p) for one probe orbit after the transient."""
    gamma, K, a, phi = params.gamma, params.bigK, params.a, params.phi
    x, p = x0, p0
    for _ in range(transient):
        p = gamma * p + K * (math.sin(x) + a * math.sin(2.0 * x + phi))
        x = x + p
    window = max_period + verify_window
    xs = np.empty(window)
    ps = np.empty(window)
    for t in range(window):
        p = gamma * p + K * (math.sin(x) + a * math.sin(2.0 * x + phi))
        x = x + p
        xs[t] = x % TWO_PI
        ps[t] = p
    for q in range(1, max_period + 1):
        ok = True
        for t in range(window - q):
            if abs(ps[t + q] - ps[t]) > eps_p or _wrapped_dist(xs[t + q], xs[t]) > eps_x:
                ok = False
                break
        if ok:
            return q, float(np.mean(ps[:q]))
    return None, float(np.mean(ps))


def classify_attractor(
    params: ModelParams,
    transient: int = 2000,
    max_period: int = 64,
    probes: int = 8,
    seed: int = 0,
    eps_p: float = 1e-6,
    eps_x: float = 1e-6,
    verify_window: int = 64,
    settle_band_frac: float = 0.02,
) -> AttractorReport:
    """Classify the T = 0 attractor by brute-force orbit recurrence.

    Multiple probes guard against coexisting attractors; disagreement
    between probes is flagged, not averaged away.
    """
    validate_params(params).raise_if_invalid()
    if params.temperature != 0.0:
        raise ValueError("classification is a zero-noise concept; set T = 0")
    if params.gamma == 1.0:
        raise ValueError("gamma = 1 is conservative; no attractor exists")
    if max_period < 1:
        raise ValueError("max_period must be >= 1")

    results = []
    probe_ics = []
    for i in range(probes):
        rng = probe_stream(seed, i)
        x0 = rng.uniform(0.0, TWO_PI)
        p0 = rng.uniform(-math.pi, math.pi)
        probe_ics.append((x0, p0))
        results.append(
            _classify_single(
                params, transient, max_period, x0, p0, eps_p, eps_x, verify_window
            )
        )

    periods = {r[0] for r in results}
    means = np.array([r[1] for r in results])
    agree = len(periods) == 1 and (np.max(means) - np.min(means) < 1e-3 + 10 * eps_p)
    period = results[0][0]
    chaotic = period is None
    mean_p = float(np.mean(means))

    # settle time from the probe-averaged current
    total = transient + max_period + verify_window
    ens = Ensemble(
        x=np.array([ic[0] for ic in probe_ics]),
        p=np.array([ic[1] for ic in probe_ics]),
    )
    _, series = evolve_ensemble(ens, params, total, seed=seed)
    settle = series.settle_time(mean_p, band_frac=settle_band_frac)

    return AttractorReport(
        period=period,
        mean_p_over_2pi=mean_p / TWO_PI,
        chaotic=chaotic,
        settle_time=settle,
        probes_agree=agree,
    )


@dataclass(frozen=True)
class ScanCell:
    gamma: float
    bigK: float
    report: AttractorReport | None
    error: str | None = None


def scan_parameter_space(
    gamma_range: tuple[float, float],
    K_range: tuple[float, float],
    resolution: tuple[int, int],
    base_params: ModelParams,
    completed_rows: int = 0,
    **classify_opts,
):
    """Yield rows of attractor reports over a (gamma, K) lattice.

    Per-cell failures become per-cell diagnostics; the scan continues.
    Rows already completed (from a checkpoint) are skipped.
    """
    n_gamma, n_K = resolution
    if n_gamma < 2 or n_K < 2:
        raise ValueError("resolution must be >= 2 per axis")
    gammas = np.linspace(gamma_range[0], gamma_range[1], n_gamma)
    Ks = np.linspace(K_range[0], K_range[1], n_K)
    for i in range(completed_rows, n_gamma):
        row = []
        for K in Ks:
            p = ModelParams(
                gamma=float(gammas[i]),
                bigK=float(K),
                a=base_params.a,
                phi=base_params.phi,
                hbar_eff=base_params.hbar_eff,
                temperature=0.0,
            )
            try:
                row.append(ScanCell(p.gamma, p.bigK, classify_attractor(p, **classify_opts)))
            except (ValueError, ArithmeticError) as exc:
                row.append(ScanCell(p.gamma, p.bigK, None, error=str(exc)))
        yield i, row
