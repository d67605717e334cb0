"""Trajectory ensembles: initial mixture, per-period evolution, statistics.

One map period acts as

    dissipative interval (unit time)  ->  kick  ->  free rotation,

whose classical limit is exactly the dissipative ratchet map: the old
momentum is damped by gamma, the kick enters undamped at the pre-rotation
position, and the position advances by the full post-kick momentum.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..params import ModelParams, RunConfig, derive_quantities, validate_params
from ..streams import trajectory_stream
from .kick import KickOperator, rotation_phases
from .mcwf import _interval_kernel, JUMP_TIME_TOL
from .state import MomentumState

BASIS_MARGIN = 64  # extra momentum room beyond ceil(p_max / hbar_eff)


@dataclass
class TrajectoryStats:
    """Trajectory-averaged momentum observables per map step."""

    mean_p: np.ndarray                  # <p>(t), t = 0..steps
    std_err: np.ndarray                 # standard error over trajectories
    traj_p: np.ndarray                  # (trajectories, steps + 1) raw series
    snapshots: dict = field(default_factory=dict)  # step -> (ntraj, 2N+1) complex
    N: int = 0
    hbar_eff: float = 0.0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("t,J,SE\n")
            for t, (j, se) in enumerate(zip(self.mean_p, self.std_err)):
                fh.write(f"{t},{float(j)!r},{float(se)!r}\n")

    def paired_se(self, ref_step: int) -> np.ndarray:
        """SE of J(t) - J(ref_step), accounting for trajectory pairing."""
        diff = self.traj_p - self.traj_p[:, ref_step][:, None]
        n = diff.shape[0]
        return diff.std(axis=0, ddof=1) / math.sqrt(n)


def initial_momentum_halfwidth(params: ModelParams) -> int:
    """Largest |n0| of the initial eigenstate mixture: floor(pi / hbar_eff)."""
    return int(math.floor(math.pi / params.hbar_eff))


def make_initial_mixture(
    params: ModelParams, trajectories: int, seed: int
) -> np.ndarray:
    """n0 for each trajectory, uniform over [-floor(pi/hbar), floor(pi/hbar)].

    Each n0 is drawn from its trajectory's own stream, so the mixture is
    stable under adding or reordering trajectories.
    """
    validate_params(params, quantum=True).raise_if_invalid()
    if trajectories < 1:
        raise ValueError("trajectories must be >= 1")
    n0max = initial_momentum_halfwidth(params)
    out = np.empty(trajectories, dtype=np.int64)
    for k in range(trajectories):
        out[k] = trajectory_stream(seed, k).integers(-n0max, n0max + 1)
    return out


def basis_halfwidth_for(params: ModelParams, p_max: float) -> int:
    return derive_quantities(params, p_max, quantum=True).basis_halfwidth + BASIS_MARGIN


def _run_one(
    k, n0max, params, g2, steps, seed, kick, rot, snapshot_steps, traj_p, snaps, N,
    strict_kick_norm, leakage_threshold,
):
    rng = trajectory_stream(seed, k)
    # same draw as make_initial_mixture, keeping the stream state aligned
    n0 = int(rng.integers(-n0max, n0max + 1))
    state = MomentumState.eigenstate(n0, N)
    traj_p[k, 0] = params.hbar_eff * n0
    try:
        for t in range(steps):
            if g2 > 0.0:
                _interval_kernel(state.amplitudes, N, g2, rng, JUMP_TIME_TOL)
            state = kick.apply(state, check_norm=strict_kick_norm)
            state.amplitudes *= rot
            state.check_leakage(leakage_threshold)
            traj_p[k, t + 1] = state.mean_p(params.hbar_eff)
            if t + 1 in snapshot_steps:
                snaps[t + 1][k] = state.amplitudes
    except RuntimeError as exc:
        raise RuntimeError(f"trajectory {k}: {exc}") from exc
    return k


def run_trajectory_ensemble(
    params: ModelParams,
    config: RunConfig,
    p_max: float | None = None,
    snapshot_steps: tuple[int, ...] = (),
    basis_halfwidth: int | None = None,
    strict_kick_norm: bool = True,
    leakage_threshold: float = 1e-8,
) -> TrajectoryStats:
    """Evolve config.trajectories stochastic wave functions for config.steps.

    Trajectories are independent tasks with private streams; accumulation
    is indexed by trajectory, so results do not depend on worker count.

    basis_halfwidth overrides the p_max-derived basis size; together with
    strict_kick_norm=False and a loose leakage_threshold it lets the small
    oracle bases run with the same truncated kick as the density-matrix
    integrator (edge truncation then affects both paths identically).
    """
    validate_params(params, quantum=True).raise_if_invalid()
    config.validate().raise_if_invalid()
    if basis_halfwidth is not None:
        N = basis_halfwidth
    else:
        if p_max is None:
            p_max = max(abs(config.grid.p_min), abs(config.grid.p_max))
        N = basis_halfwidth_for(params, p_max)
    g2 = derive_quantities(params, p_max=1.0, quantum=True).g ** 2

    kick = KickOperator(
        k_quantum=params.bigK / params.hbar_eff, a=params.a, phi=params.phi, N=N
    )
    rot = rotation_phases(N, params.hbar_eff)

    ntraj = config.trajectories
    steps = config.steps
    seed = config.seed
    n0max = initial_momentum_halfwidth(params)
    if n0max > N:
        raise ValueError(
            f"basis halfwidth {N} cannot hold the initial mixture (|n0| up to {n0max})"
        )
    snapshot_steps = tuple(snapshot_steps)
    traj_p = np.empty((ntraj, steps + 1))
    snaps = {
        s: np.zeros((ntraj, 2 * N + 1), dtype=np.complex128) for s in snapshot_steps
    }

    workers = max(1, config.worker_hint)
    args = (
        n0max, params, g2, steps, seed, kick, rot, snapshot_steps, traj_p, snaps, N,
        strict_kick_norm, leakage_threshold,
    )
    if workers == 1:
        for k in range(ntraj):
            _run_one(k, *args)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_run_one, k, *args) for k in range(ntraj)]
            for f in futs:
                f.result()

    mean_p = traj_p.sum(axis=0) / ntraj
    std_err = traj_p.std(axis=0, ddof=1) / math.sqrt(ntraj) if ntraj > 1 else np.zeros(steps + 1)
    return TrajectoryStats(
        mean_p=mean_p,
        std_err=std_err,
        traj_p=traj_p,
        snapshots=snaps,
        N=N,
        hbar_eff=params.hbar_eff,
    )
