"""Dense density-matrix integrator, the correctness oracle for the
stochastic unraveling. Usable only at small basis sizes.

One map period mirrors the trajectory engine exactly: RK4 integration of
the dissipator alone over unit time, then exact kick conjugation, then
the diagonal free-rotation conjugation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..params import ModelParams, derive_quantities, validate_params
from .kick import KickOperator, rotation_phases

HERMITICITY_TOL = 1e-10
TRACE_DRIFT_LIMIT = 1e-6


class TraceDriftError(RuntimeError):
    """RK4 step too coarse: trace drifted beyond tolerance."""


def jump_operators(N: int, g: float) -> tuple[np.ndarray, np.ndarray]:
    """The two momentum-lowering channels on basis n = -N..N."""
    dim = 2 * N + 1
    L1 = np.zeros((dim, dim))
    L2 = np.zeros((dim, dim))
    for n in range(0, N):
        # |n><n+1| with weight sqrt(n+1)
        L1[N + n, N + n + 1] = g * math.sqrt(n + 1.0)
        # |-n><-n-1| with weight sqrt(n+1)
        L2[N - n, N - n - 1] = g * math.sqrt(n + 1.0)
    return L1, L2


def kick_matrix(op: KickOperator) -> np.ndarray:
    """Dense kick unitary built column by column from the spectral operator."""
    from .state import MomentumState

    dim = 2 * op.N + 1
    U = np.empty((dim, dim), dtype=np.complex128)
    for j in range(dim):
        e = np.zeros(dim, dtype=np.complex128)
        e[j] = 1.0
        U[:, j] = op.apply(MomentumState(amplitudes=e, N=op.N), check_norm=False).amplitudes
    return U


@dataclass
class OracleResult:
    rho: np.ndarray
    mean_p: np.ndarray          # per map step, t = 0..steps
    populations: np.ndarray     # diagonal of the final rho
    max_trace_drift: float
    max_hermiticity_defect: float


def dm_lindblad_oracle(
    rho0: np.ndarray,
    params: ModelParams,
    steps: int,
    N: int,
    dt: float = 1e-3,
) -> OracleResult:
    """Integrate the master equation for `steps` map periods.

    Trace drift is logged and raised on, never silently renormalized away.
    """
    validate_params(params, quantum=True).raise_if_invalid()
    if N > 64:
        raise ValueError("oracle is meant for small bases (N <= 64)")
    if dt > 1e-3:
        raise ValueError("dissipator step must be <= 1e-3")
    dim = 2 * N + 1
    if rho0.shape != (dim, dim):
        raise ValueError("rho0 shape mismatch")

    g = derive_quantities(params, p_max=1.0, quantum=True).g
    L1, L2 = jump_operators(N, g)
    Ls = [(L, L.T.conj(), L.T.conj() @ L) for L in (L1, L2) if g > 0.0]

    kick = KickOperator(
        k_quantum=params.bigK / params.hbar_eff, a=params.a, phi=params.phi, N=N
    )
    U = kick_matrix(kick)
    rot = rotation_phases(N, params.hbar_eff)
    nvals = np.arange(-N, N + 1)

    def dissipator(rho):
        out = np.zeros_like(rho)
        for L, Ld, LdL in Ls:
            out += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
        return out

    rho = rho0.astype(np.complex128).copy()
    mean_p = np.empty(steps + 1)
    mean_p[0] = params.hbar_eff * float(np.real(np.sum(nvals * np.diag(rho))))
    max_drift = 0.0
    max_herm = 0.0
    n_sub = max(1, round(1.0 / dt))
    h = 1.0 / n_sub

    for t in range(steps):
        if Ls:
            for _ in range(n_sub):
                k1 = dissipator(rho)
                k2 = dissipator(rho + 0.5 * h * k1)
                k3 = dissipator(rho + 0.5 * h * k2)
                k4 = dissipator(rho + h * k3)
                rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = U @ rho @ U.T.conj()
        rho = rot[:, None] * rho * rot.conj()[None, :]
        drift = abs(float(np.real(np.trace(rho))) - 1.0)
        herm = float(np.max(np.abs(rho - rho.T.conj())))
        max_drift = max(max_drift, drift)
        max_herm = max(max_herm, herm)
        if drift > TRACE_DRIFT_LIMIT:
            raise TraceDriftError(f"trace drift {drift:.3e} at step {t + 1}; reduce dt")
        mean_p[t + 1] = params.hbar_eff * float(np.real(np.sum(nvals * np.diag(rho))))

    return OracleResult(
        rho=rho,
        mean_p=mean_p,
        populations=np.real(np.diag(rho)).copy(),
        max_trace_drift=max_drift,
        max_hermiticity_defect=max_herm,
    )


def uniform_mixture_rho(N: int, n0_halfwidth: int) -> np.ndarray:
    """Density matrix of the uniform momentum-eigenstate initial mixture."""
    dim = 2 * N + 1
    rho = np.zeros((dim, dim), dtype=np.complex128)
    count = 2 * n0_halfwidth + 1
    for n0 in range(-n0_halfwidth, n0_halfwidth + 1):
        rho[N + n0, N + n0] = 1.0 / count
    return rho


def unraveling_equivalence_check(
    params: ModelParams,
    N: int,
    trajectories: int,
    steps: int,
    seed: int = 0,
    bootstrap: int = 200,
    g_scale: float = 1.0,
) -> dict:
    """Compare trajectory-averaged <p>(t) and final momentum populations
    against the density-matrix oracle on the same small basis.

    The oracle starts from the empirical mixture of the trajectories'
    initial eigenstates, so the comparison isolates the unraveling itself.
    Both paths share the same truncated kick matrix on the small basis, so
    edge truncation cancels out of the comparison. Passes when
    |delta <p>(t)| <= 3 SE(t) for all t and the population L1 distance
    stays within 3 bootstrap SEs of its sampling-noise floor.

    g_scale deliberately mis-scales the oracle's jump amplitude; it exists
    for mutation tests of this harness and must be 1.0 for a real check.
    """
    from ..params import GridSpec, RunConfig
    from .trajectories import make_initial_mixture, run_trajectory_ensemble

    cfg = RunConfig(
        ensemble_size=1,
        steps=steps,
        seed=seed,
        trajectories=trajectories,
        grid=GridSpec(2, 2, -N * params.hbar_eff, N * params.hbar_eff),
    )
    stats = run_trajectory_ensemble(
        params,
        cfg,
        snapshot_steps=(steps,),
        basis_halfwidth=N,
        strict_kick_norm=False,
        leakage_threshold=1e-2,
    )
    assert stats.N == N, (stats.N, N)

    n0s = make_initial_mixture(params, trajectories, seed)
    dim = 2 * N + 1
    rho0 = np.zeros((dim, dim), dtype=np.complex128)
    for n0 in n0s:
        rho0[N + n0, N + n0] += 1.0 / trajectories

    oracle_params = params
    if g_scale != 1.0:
        # mis-scale g by adjusting gamma: g' = g_scale * g
        g2 = -math.log(params.gamma) * g_scale**2
        oracle_params = ModelParams(
            gamma=math.exp(-g2),
            bigK=params.bigK,
            a=params.a,
            phi=params.phi,
            hbar_eff=params.hbar_eff,
            temperature=params.temperature,
        )
    oracle = dm_lindblad_oracle(rho0, oracle_params, steps, N)

    delta = stats.mean_p - oracle.mean_p
    se = stats.std_err
    p_ok = bool(np.all(np.abs(delta) <= 3.0 * se + 1e-12))

    pops_traj = np.abs(stats.snapshots[steps]) ** 2
    mean_pops = pops_traj.mean(axis=0)
    l1 = float(np.sum(np.abs(mean_pops - oracle.populations)))

    # noise floor: L1 between bootstrap means and the full-sample mean
    rng = np.random.default_rng(seed)
    boots = np.empty(bootstrap)
    for b in range(bootstrap):
        idx = rng.integers(0, trajectories, trajectories)
        boots[b] = np.sum(np.abs(pops_traj[idx].mean(axis=0) - mean_pops))
    floor = float(np.mean(boots))
    floor_se = float(boots.std(ddof=1))
    pop_ok = l1 <= floor + 3.0 * floor_se

    return {
        "mean_p_ok": p_ok,
        "max_abs_delta": float(np.max(np.abs(delta))),
        "population_l1": l1,
        "population_l1_floor": floor,
        "population_l1_floor_se": floor_se,
        "population_ok": bool(pop_ok),
        "passed": bool(p_ok and pop_ok),
        "oracle_trace_drift": oracle.max_trace_drift,
        "oracle_hermiticity_defect": oracle.max_hermiticity_defect,
    }
