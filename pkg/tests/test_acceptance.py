"""End-to-end acceptance suite.

Each criterion prints exactly one PASS/FAIL line (visible with ``-s`` or in
the captured output of a failing test). Expensive ensembles are shared
through module-scoped fixtures; the whole file runs in minutes on one core.
"""

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.special import jv

from qratchet.classical import evolve_ensemble, liouville_grid, make_initial_ensemble
from qratchet.grids import overlap_measure
from qratchet.husimi import husimi_grid
from qratchet.params import GridSpec, ModelParams, RunConfig, derive_quantities
from qratchet.presets import get_preset
from qratchet.quantum.kick import KickOperator
from qratchet.quantum.lindblad import unraveling_equivalence_check
from qratchet.quantum.mcwf import JUMP_TIME_TOL, _interval_kernel
from qratchet.quantum.state import MomentumState
from qratchet.quantum.trajectories import run_trajectory_ensemble
from qratchet.streams import particle_stream, trajectory_stream
from qratchet.cli import run_experiment

TWO_PI = 2.0 * math.pi

pytestmark = pytest.mark.acceptance


def report(criterion: str, ok: bool, detail: str):
    print(f"\n[{criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{criterion}: {detail}"


def classical_current(name, temperature, steps, size=10_000, seed=0, a=None):
    params = get_preset(name).params(temperature=temperature)
    if a is not None:
        params = replace(params, a=a)
    ens = make_initial_ensemble(size, seed)
    return evolve_ensemble(ens, params, steps, seed=seed)


@pytest.fixture(scope="module")
def quantum_runs():
    """500-trajectory, 50-step runs with a final-state snapshot, per preset."""
    out = {}
    for name in ("B1", "C-1", "D-1", "A"):
        preset = get_preset(name)
        params = preset.params(temperature=0.0)
        cfg = RunConfig(
            ensemble_size=1, steps=50, seed=0, trajectories=500, grid=preset.grid()
        )
        stats = run_trajectory_ensemble(params, cfg, snapshot_steps=(50,))
        H = husimi_grid(stats.snapshots[50], preset.grid(), params.hbar_eff)
        out[name] = (stats, H)
    return out


def test_01_b1_classical_current():
    # 10^4 particles, T = 0: J settles onto +2pi within 2% by step 50
    _, series = classical_current("B1", 0.0, 100)
    st = series.settle_time(TWO_PI, band_frac=0.02)
    ok = st is not None and st <= 50
    report(
        "criterion 1: B1 classical current",
        ok,
        f"settle_time={st} (required <= 50), J(100)={series.values[-1]:.4f}",
    )


def test_02_cm1_classical_current():
    # J -> -2pi with a slow transient: unsettled at 150, settled by 400
    # (10% band; the surviving period-2 alternation keeps the tail outside
    # a 2% band indefinitely). The T = 0 tail alternates with period 2;
    # thermal noise at T = 0.12 erases the alternation.
    _, cold = classical_current("C-1", 0.0, 600)
    _, warm = classical_current("C-1", 0.12, 600)
    st = cold.settle_time(-TWO_PI, band_frac=0.10)
    alt_cold = cold.alternation_amplitude(400)
    alt_warm = warm.alternation_amplitude(400)
    ok = (
        st is not None
        and 150 < st <= 400
        and alt_cold > 0.01
        and alt_cold > 5.0 * alt_warm
    )
    report(
        "criterion 2: C-1 classical current",
        ok,
        f"settle_time={st} (required in (150, 400]), "
        f"alternation T=0: {alt_cold:.4f} vs T=0.12: {alt_warm:.5f}",
    )


def test_03_dm1_classical_current():
    # the slowest preset: J -> -2pi with settle time in [400, 1000]
    _, series = classical_current("D-1", 0.0, 1100)
    st = series.settle_time(-TWO_PI, band_frac=0.10)
    ok = st is not None and 400 <= st <= 1000
    report(
        "criterion 3: D-1 classical current",
        ok,
        f"settle_time={st} (required in [400, 1000]), J(1100)={series.values[-1]:.4f}",
    )


def test_04_ehrenfest_contraction():
    # K = 0, start |n0=10>: <n> contracts by gamma per period, within 3 SE
    N = 32
    n = np.arange(-N, N + 1)
    trajectories, periods = 10_000, 3
    worst = 0.0
    detail = []
    for gamma in (0.2, 0.5, 0.9):
        g2 = -math.log(gamma)
        means = np.empty((trajectories, periods))
        for k in range(trajectories):
            rng = trajectory_stream(0, k)
            c = np.zeros(2 * N + 1, dtype=np.complex128)
            c[N + 10] = 1.0
            for t in range(periods):
                _interval_kernel(c, N, g2, rng, JUMP_TIME_TOL)
                means[k, t] = float(np.sum(n * np.abs(c) ** 2))
        for t in range(periods):
            m = means[:, t].mean()
            se = means[:, t].std(ddof=1) / math.sqrt(trajectories)
            dev = abs(m - 10.0 * gamma ** (t + 1)) / se
            worst = max(worst, dev)
        detail.append(f"gamma={gamma}: <n> after 1 period {means[:, 0].mean():.3f}")
    report(
        "criterion 4: Ehrenfest contraction",
        worst <= 3.0,
        f"worst |<n> - 10 gamma^t| / SE = {worst:.2f} (required <= 3); " + "; ".join(detail),
    )


def test_05_unraveling_vs_density_matrix():
    # N = 16 basis, gamma = 0.5, quantum kick strength 0.8, hbar = 0.3:
    # trajectory-averaged <p>(t) matches the density-matrix integrator
    # within 3 SE at every step
    params = ModelParams(gamma=0.5, bigK=0.8 * 0.3, a=0.5, phi=math.pi / 2, hbar_eff=0.3)
    res = unraveling_equivalence_check(params, N=16, trajectories=2000, steps=30, seed=1)
    report(
        "criterion 5: unraveling vs density matrix",
        res["passed"],
        f"max |delta <p>| = {res['max_abs_delta']:.5f}, "
        f"population L1 = {res['population_l1']:.5f} "
        f"(floor {res['population_l1_floor']:.5f})",
    )


def test_06_kick_operator():
    # a = 0, k_quantum = 2: <n'|U|n> = (-i)^(dn) J_dn(2) to 1e-10 for
    # |dn| <= 8; unitarity to 1e-12 on 100 random states
    N = 32
    op = KickOperator(k_quantum=2.0, a=0.0, phi=0.0, N=N)
    worst_elem = 0.0
    for n0 in (-4, 0, 3):
        col = op.apply(MomentumState.eigenstate(n0, N), check_norm=False).amplitudes
        for dn in range(-8, 9):
            expected = (-1j) ** dn * jv(dn, 2.0)
            worst_elem = max(worst_elem, abs(col[N + n0 + dn] - expected))
    rng = np.random.default_rng(0)
    op2 = KickOperator(k_quantum=1.5, a=0.5, phi=math.pi / 2, N=24)
    worst_norm = 0.0
    for _ in range(100):
        c = rng.standard_normal(49) + 1j * rng.standard_normal(49)
        c[:12] = 0.0
        c[-12:] = 0.0
        c /= np.linalg.norm(c)
        out = op2.apply(MomentumState(amplitudes=c, N=24))
        worst_norm = max(worst_norm, abs(out.norm_sq() - 1.0))
    ok = worst_elem < 1e-10 and worst_norm < 1e-12
    report(
        "criterion 6: kick operator",
        ok,
        f"max Bessel-element error {worst_elem:.2e} (< 1e-10), "
        f"max unitarity defect {worst_norm:.2e} (< 1e-12)",
    )


def test_07_overlap_table(quantum_runs):
    # hbar = 0.082, 500 trajectories, 50 steps, 256^2 grids; classical
    # partner ensembles of 1e5 particles
    overlaps = {}
    for name in ("B1", "C-1", "D-1", "A"):
        preset = get_preset(name)
        _, H = quantum_runs[name]
        temps = [0.0] if name == "A" else [0.0, preset.temperature]
        for T in temps:
            params = preset.params(temperature=T)
            ens = make_initial_ensemble(100_000, 0)
            final, _ = evolve_ensemble(ens, params, 50, seed=0)
            L = liouville_grid(final, preset.grid())
            overlaps[(name, T)] = overlap_measure(L, H)
    o_qq = overlap_measure(quantum_runs["D-1"][1], quantum_runs["A"][1])

    checks = [
        ("B1 O(T=0) < 0.3", overlaps[("B1", 0.0)] < 0.3),
        ("B1 O(T=0.058) > 0.75", overlaps[("B1", 0.058)] > 0.75),
        ("C-1 O(T=0) < 0.3", overlaps[("C-1", 0.0)] < 0.3),
        ("C-1 O(T=0.12) > 0.75", overlaps[("C-1", 0.12)] > 0.75),
        ("D-1 O(T=0) < 0.35", overlaps[("D-1", 0.0)] < 0.35),
        ("D-1 O(T=0.07) > 0.75", overlaps[("D-1", 0.07)] > 0.75),
        ("A O(T=0) = 0.73 +- 0.15", abs(overlaps[("A", 0.0)] - 0.73) <= 0.15),
        ("D-1 vs A quantum O > 0.9", o_qq > 0.9),
    ]
    values = ", ".join(f"{k[0]}@T={k[1]}: {v:.3f}" for k, v in overlaps.items())
    failed = [label for label, ok in checks if not ok]
    report(
        "criterion 7: overlap table",
        not failed,
        f"{values}, D-1-vs-A: {o_qq:.3f}"
        + (f"; failed: {failed}" if failed else ""),
    )


def test_08_quantum_settling(quantum_runs):
    # D-1 quantum current settles fast: J(t) within 5% of J(50) (plus the
    # paired statistical error of the difference) for all t >= 10
    stats, _ = quantum_runs["D-1"]
    ref = stats.mean_p[50]
    bound = 0.05 * abs(ref) + 3.0 * stats.paired_se(50)
    dev = np.abs(stats.mean_p - ref)
    margin = float(np.max(dev[10:] - bound[10:]))
    report(
        "criterion 8: quantum settling",
        margin <= 0.0,
        f"J(50)={ref:.3f}, worst excess over the 5% band for t >= 10: {margin:.4f}",
    )


def test_09_symmetry_null():
    # a = 0 restores spatial symmetry: both currents vanish within 3 SE
    params = replace(get_preset("B1").params(temperature=0.0), a=0.0)
    ens = make_initial_ensemble(10_000, 0)
    worst_cl = 0.0
    for _ in range(100):
        ens, _ = evolve_ensemble(ens, params, 1)
        se = ens.p.std(ddof=1) / math.sqrt(ens.p.size)
        worst_cl = max(worst_cl, abs(ens.p.mean()) / se)

    cfg = RunConfig(
        ensemble_size=1, steps=30, seed=0, trajectories=300,
        grid=GridSpec(8, 8, -20.0, 20.0),
    )
    stats = run_trajectory_ensemble(params, cfg)
    worst_q = float(np.max(np.abs(stats.mean_p) / stats.std_err))
    ok = worst_cl <= 3.0 and worst_q <= 3.0
    report(
        "criterion 9: symmetry null test",
        ok,
        f"worst |J|/SE classical {worst_cl:.2f}, quantum {worst_q:.2f} (required <= 3)",
    )


def test_10_noise_calibration():
    # thermal kick xi: sample variance equals 2 (1 - gamma) T within 5 SE
    params = get_preset("B1").params(temperature=0.058)
    sigma = derive_quantities(params, p_max=1.0).noise_sigma
    n = 100_000
    draws = particle_stream(0, 0).normal(0.0, sigma, n)
    var = draws.var(ddof=1)
    target = 2.0 * (1.0 - params.gamma) * params.temperature
    se = target * math.sqrt(2.0 / (n - 1))
    dev = abs(var - target) / se
    report(
        "criterion 10: noise calibration",
        dev <= 5.0,
        f"sample variance {var:.6f} vs 2(1-gamma)T = {target:.6f}, |dev|/SE = {dev:.2f}",
    )


def test_11_worker_determinism(tmp_path):
    # the same manifest with different worker counts produces byte-identical
    # CSV artifacts
    def current_bytes(doc, tag):
        doc = dict(doc, out_dir=str(tmp_path / tag))
        assert run_experiment(doc) == 0
        return (tmp_path / tag / "current.csv").read_bytes()

    classical = {
        "pipeline": "classical",
        "preset": "B1",
        "emit_grid": False,
        "run": {"ensemble_size": 10_000, "steps": 20, "seed": 5},
    }
    cl = {
        w: current_bytes({**classical, "run": {**classical["run"], "worker_hint": w}}, f"cl{w}")
        for w in (1, 2, 8)
    }
    quantum = {
        "pipeline": "quantum",
        "params": {"gamma": 0.5, "bigK": 0.3, "a": 0.5, "phi": math.pi / 2,
                   "hbar_eff": 0.3},
        "run": {"ensemble_size": 1, "steps": 5, "seed": 5, "trajectories": 24,
                "grid": [8, 8, -4.8, 4.8]},
    }
    qu = {
        w: current_bytes({**quantum, "run": {**quantum["run"], "worker_hint": w}}, f"qu{w}")
        for w in (1, 2, 8)
    }
    ok = cl[1] == cl[2] == cl[8] and qu[1] == qu[2] == qu[8]
    report(
        "criterion 11: worker-count determinism",
        ok,
        "classical current.csv identical for workers 1/2/8: "
        f"{cl[1] == cl[2] == cl[8]}; quantum: {qu[1] == qu[2] == qu[8]}",
    )
