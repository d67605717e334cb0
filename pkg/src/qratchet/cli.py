"""Experiment runner.

Subcommands: classical, quantum, husimi, overlap, compare, scan,
reproduce. A run is described by one JSON config document; flags override
config fields. Artifacts are staged and renamed into the output directory
atomically, with a manifest listing every file and its digest.

Exit codes: 0 success, 2 validation failure, 3 numerical-consistency
failure (basis leakage / norm or trace drift), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .classical import evolve_ensemble, liouville_grid, make_initial_ensemble, scan_parameter_space
from .grids import comparison_report, overlap_measure
from .husimi import husimi_grid
from .manifest import Stopwatch, atomic_output_dir, write_manifest
from .params import (
    GridSpec,
    ModelParams,
    RunConfig,
    ValidationError,
    validate_params,
)
from .presets import DEFAULT_A, DEFAULT_HBAR, DEFAULT_PHI, get_preset
from .quantum.kick import NormDriftError
from .quantum.lindblad import TraceDriftError
from .quantum.snapshots import read_snapshots, write_snapshots
from .quantum.state import BasisLeakageError
from .quantum.trajectories import run_trajectory_ensemble

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

OUT_ROOT_ENV = "QRATCHET_OUT"


class ConfigError(ValueError):
    pass


def _build_params(doc: dict) -> ModelParams:
    preset = doc.get("preset")
    overrides = dict(doc.get("params") or {})
    if preset:
        p = get_preset(preset)
        base = p.params(
            hbar_eff=overrides.pop("hbar_eff", DEFAULT_HBAR),
            temperature=overrides.pop("temperature", None),
            a=overrides.pop("a", DEFAULT_A),
            phi=overrides.pop("phi", DEFAULT_PHI),
        )
        if overrides:
            base = replace(base, **{k: float(v) for k, v in overrides.items()})
        return base
    if not overrides:
        raise ConfigError("either a preset or explicit params are required")
    return ModelParams.from_dict(overrides)


def _build_run(doc: dict) -> RunConfig:
    run_doc = doc.get("run") or doc.get("run_config") or {}
    cfg = RunConfig.from_dict(run_doc)
    if doc.get("preset") and "grid" not in run_doc:
        cfg = replace(cfg, grid=get_preset(doc["preset"]).grid())
    return cfg


def _resolve_out_dir(doc: dict) -> Path:
    out = doc.get("out_dir")
    if out is None:
        root = Path(os.environ.get(OUT_ROOT_ENV, "."))
        out = root / f"{doc['pipeline']}-run"
    return Path(out)


# --- pipelines -------------------------------------------------------------


def _pipeline_classical(doc, params, cfg, staging):
    ens = make_initial_ensemble(cfg.ensemble_size, cfg.seed)
    final, series = evolve_ensemble(
        ens, params, cfg.steps, seed=cfg.seed, workers=cfg.worker_hint
    )
    series.to_csv(staging / "current.csv")
    if doc.get("emit_grid", True):
        grid = liouville_grid(final, cfg.grid)
        grid.metadata["params"] = asdict(params)
        grid.save(staging / "liouville")
    return {"J_final": float(series.values[-1])}


def _pipeline_quantum(doc, params, cfg, staging):
    snap_steps = tuple(doc.get("snapshot_steps", (cfg.steps,)))
    stats = run_trajectory_ensemble(params, cfg, snapshot_steps=snap_steps)
    stats.to_csv(staging / "current.csv")
    for step, states in stats.snapshots.items():
        write_snapshots(
            staging / "snapshots.bin", states, stats.N, stats.hbar_eff, step
        )
    return {"J_final": float(stats.mean_p[-1]), "basis_halfwidth": stats.N}


def _pipeline_husimi(doc, params, cfg, staging):
    src = doc.get("snapshots")
    if not src:
        raise ConfigError("husimi pipeline needs a 'snapshots' input file")
    records = list(read_snapshots(src))
    if not records:
        raise ConfigError(f"no snapshot records in {src}")
    if len({r[0] for r in records}) != 1:
        raise ConfigError(f"snapshot records in {src} mix basis sizes")
    hbar = records[0][1]
    states = np.array([r[3] for r in records])
    meta = {"params": asdict(params)} if params is not None else None
    grid = husimi_grid(states, cfg.grid, hbar, metadata=meta)
    grid.save(staging / "husimi")
    return {"snapshots": len(records)}


def _run_pair_grids(doc, params, cfg, snapshot_step=None):
    """Classical Liouville (at params.temperature) and quantum Husimi grids."""
    step = snapshot_step or cfg.steps
    ens = make_initial_ensemble(cfg.ensemble_size, cfg.seed)
    final, series = evolve_ensemble(
        ens, params, cfg.steps, seed=cfg.seed, workers=cfg.worker_hint
    )
    L = liouville_grid(final, cfg.grid)
    stats = run_trajectory_ensemble(params, cfg, snapshot_steps=(step,))
    H = husimi_grid(stats.snapshots[step], cfg.grid, params.hbar_eff)
    return L, H, series, stats


def _pipeline_overlap(doc, params, cfg, staging):
    L, H, series, stats = _run_pair_grids(doc, params, cfg)
    L.metadata["params"] = asdict(params)
    H.metadata["params"] = asdict(params)
    L.save(staging / "liouville")
    H.save(staging / "husimi")
    series.to_csv(staging / "classical_current.csv")
    stats.to_csv(staging / "quantum_current.csv")
    result = {
        "overlap_normalized": overlap_measure(L, H, "normalized"),
        "overlap_raw": overlap_measure(L, H, "raw"),
        "temperature": params.temperature,
    }
    (staging / "overlap.json").write_text(json.dumps(result, indent=2))
    return result


def _pipeline_compare(doc, params, cfg, staging):
    other_doc = dict(doc)
    other_doc["preset"] = doc.get("other_preset") or doc["preset"]
    other_doc["params"] = doc.get("other_params") or doc.get("params")
    other_params = _build_params(other_doc)
    L, H, series, stats = _run_pair_grids(doc, params, cfg)
    _, H2, series2, stats2 = _run_pair_grids(other_doc, other_params, cfg)
    report = comparison_report(
        series, stats, L, H, similarity_threshold=doc.get("similarity_threshold", 0.9)
    )
    report["quantum_vs_quantum_overlap"] = overlap_measure(H, H2, "normalized")
    report["other"] = comparison_report(series2, stats2, L, H2)
    for name, g in (("husimi", H), ("husimi_other", H2), ("liouville", L)):
        g.save(staging / name)
    (staging / "report.json").write_text(json.dumps(report, indent=2))
    return report


def _pipeline_scan(doc, params, cfg, out_dir):
    """Streaming + resumable: writes rows as they complete (not atomic)."""
    gr = doc.get("gamma_range", [0.1, 0.9])
    kr = doc.get("K_range", [1.0, 12.0])
    res = doc.get("resolution", [8, 8])
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "scan.csv"
    ckpt_path = out_dir / "checkpoint.json"
    completed = 0
    if ckpt_path.exists() and doc.get("resume", True):
        completed = json.loads(ckpt_path.read_text()).get("completed_rows", 0)
    elif csv_path.exists():
        csv_path.unlink()
    if completed == 0 and not csv_path.exists():
        csv_path.write_text("gamma,K,period,M,chaotic,settle_time\n")
    opts = doc.get("classify", {})
    with Stopwatch() as sw:
        for i, row in scan_parameter_space(
            tuple(gr), tuple(kr), tuple(res), params,
            completed_rows=completed, seed=cfg.seed, **opts,
        ):
            with open(csv_path, "a") as fh:
                for cell in row:
                    if cell.error is not None:
                        fh.write(f"{cell.gamma},{cell.bigK},,,,error:{cell.error}\n")
                    else:
                        r = cell.report
                        fh.write(
                            f"{cell.gamma},{cell.bigK},{r.period if r.period is not None else ''},"
                            f"{r.mean_p_over_2pi},{str(r.chaotic).lower()},"
                            f"{r.settle_time if r.settle_time is not None else ''}\n"
                        )
            ckpt_path.write_text(json.dumps({"completed_rows": i + 1}))
    write_manifest(
        out_dir,
        pipeline="scan",
        params=params,
        run_config=cfg,
        preset=doc.get("preset"),
        seed=cfg.seed,
        workers=cfg.worker_hint,
        wall_seconds=sw.seconds,
    )
    return EXIT_OK


def _pipeline_reproduce(doc, cfg, out_dir):
    name = doc.get("figure")
    handlers = {
        "fig1": _repro_fig1,
        "fig2": _repro_fig2,
        "fig3": _repro_fig3,
        "fig4": _repro_fig4,
        "overlap-table": _repro_overlap_table,
    }
    if name not in handlers:
        raise ConfigError(
            f"unknown reproduction preset {name!r}; registered: {', '.join(sorted(handlers))}"
        )
    t0 = time.monotonic()
    with atomic_output_dir(out_dir, doc.get("force", False)) as staging:
        extra = handlers[name](doc, cfg, staging)
        write_manifest(
            staging,
            pipeline=f"reproduce:{name}",
            params=None,
            run_config=cfg,
            preset=name,
            seed=cfg.seed,
            workers=cfg.worker_hint,
            wall_seconds=time.monotonic() - t0,
            extra={"results": extra},
        )
    return EXIT_OK


def _portrait_set(preset_name, hbar, cfg, staging, tag, include_t0=True):
    preset = get_preset(preset_name)
    grid = preset.grid(cfg.grid.x_bins, cfg.grid.p_bins)
    cfg = replace(cfg, grid=grid)
    out = {}
    temps = ([0.0] if include_t0 else []) + [preset.temperature]
    for T in temps:
        params = preset.params(hbar_eff=hbar, temperature=T)
        ens = make_initial_ensemble(cfg.ensemble_size, cfg.seed)
        final, _ = evolve_ensemble(ens, params, cfg.steps, seed=cfg.seed, workers=cfg.worker_hint)
        g = liouville_grid(final, grid)
        g.metadata["params"] = asdict(params)
        g.save(staging / f"{tag}_liouville_T{T}")
    params = preset.params(hbar_eff=hbar, temperature=0.0)
    stats = run_trajectory_ensemble(params, cfg, snapshot_steps=(cfg.steps,))
    H = husimi_grid(stats.snapshots[cfg.steps], grid, hbar)
    H.metadata["params"] = asdict(params)
    H.save(staging / f"{tag}_husimi")
    out["J_quantum_final"] = float(stats.mean_p[-1])
    return out


def _repro_fig1(doc, cfg, staging):
    out = {}
    for name in ("B1", "C-1", "D-1"):
        out[name] = _portrait_set(name, DEFAULT_HBAR, cfg, staging, name.lower())
    return out


def _repro_fig2(doc, cfg, staging):
    out = {}
    for name, hbar in (("B1", 0.246), ("D-1", 0.027), ("A", DEFAULT_HBAR)):
        out[f"{name}@{hbar}"] = _portrait_set(
            name, hbar, cfg, staging, f"{name.lower()}_hbar{hbar}", include_t0=(name == "A")
        )
    return out


def _current_set(preset_name, cfg, staging, tag):
    preset = get_preset(preset_name)
    grid = preset.grid(cfg.grid.x_bins, cfg.grid.p_bins)
    cfg = replace(cfg, grid=grid)
    out = {}
    for T, label in ((0.0, "T0"), (preset.temperature, "T")):
        params = preset.params(temperature=T)
        ens = make_initial_ensemble(cfg.ensemble_size, cfg.seed)
        _, series = evolve_ensemble(ens, params, cfg.steps, seed=cfg.seed, workers=cfg.worker_hint)
        series.to_csv(staging / f"{tag}_classical_{label}.csv")
        out[f"J_classical_{label}"] = float(series.values[-1])
        if T == preset.temperature == 0.0:
            break  # chaotic preset has no thermal companion
    params = preset.params(temperature=0.0)
    stats = run_trajectory_ensemble(params, cfg)
    stats.to_csv(staging / f"{tag}_quantum.csv")
    out["J_quantum"] = float(stats.mean_p[-1])
    return out


def _repro_fig3(doc, cfg, staging):
    return {name: _current_set(name, cfg, staging, name.lower()) for name in ("B1", "C-1")}


def _repro_fig4(doc, cfg, staging):
    return {name: _current_set(name, cfg, staging, name.lower()) for name in ("D-1", "A")}


def _repro_overlap_table(doc, cfg, staging):
    """The headline overlap values in one JSON report."""
    table = {}
    husimis = {}
    for name in ("B1", "C-1", "D-1", "A"):
        preset = get_preset(name)
        grid = preset.grid(cfg.grid.x_bins, cfg.grid.p_bins)
        pcfg = replace(cfg, grid=grid)
        params = preset.params(temperature=0.0)
        stats = run_trajectory_ensemble(params, pcfg, snapshot_steps=(pcfg.steps,))
        H = husimi_grid(stats.snapshots[pcfg.steps], grid, params.hbar_eff)
        husimis[name] = H
        temps = [0.0] if name == "A" else [0.0, preset.temperature]
        for T in temps:
            cl_params = preset.params(temperature=T)
            ens = make_initial_ensemble(pcfg.ensemble_size, pcfg.seed)
            final, _ = evolve_ensemble(
                ens, cl_params, pcfg.steps, seed=pcfg.seed, workers=pcfg.worker_hint
            )
            L = liouville_grid(final, grid)
            table[f"{name}:T={T}"] = overlap_measure(L, H, "normalized")
    table["D-1_husimi_vs_A_husimi"] = overlap_measure(husimis["D-1"], husimis["A"], "normalized")
    (staging / "overlap_table.json").write_text(json.dumps(table, indent=2))
    return table


# --- driver ----------------------------------------------------------------

_PIPELINES = {
    "classical": _pipeline_classical,
    "quantum": _pipeline_quantum,
    "husimi": _pipeline_husimi,
    "overlap": _pipeline_overlap,
    "compare": _pipeline_compare,
}


def run_experiment(doc: dict) -> int:
    """Execute one configured pipeline; returns a process exit code."""
    pipeline = doc.get("pipeline")
    if pipeline in ("scan", "reproduce"):
        cfg = _build_run(doc)
        cfg.validate().raise_if_invalid()
        out_dir = _resolve_out_dir(doc)
        if pipeline == "scan":
            params = _build_params(doc) if (doc.get("preset") or doc.get("params")) else ModelParams(
                gamma=0.5, bigK=1.0, a=DEFAULT_A, phi=DEFAULT_PHI, hbar_eff=DEFAULT_HBAR
            )
            return _pipeline_scan(doc, params, cfg, out_dir)
        return _pipeline_reproduce(doc, cfg, out_dir)
    if pipeline not in _PIPELINES:
        raise ConfigError(f"unknown pipeline {pipeline!r}")

    if pipeline == "husimi" and not (doc.get("preset") or doc.get("params")):
        params = None
    else:
        params = _build_params(doc)
    cfg = _build_run(doc)
    quantum_used = pipeline in ("quantum", "overlap", "compare")
    if params is not None:
        validate_params(params, quantum=quantum_used).raise_if_invalid()
    cfg.validate().raise_if_invalid()
    out_dir = _resolve_out_dir(doc)

    t0 = time.monotonic()
    with atomic_output_dir(out_dir, doc.get("force", False)) as staging:
        extra = _PIPELINES[pipeline](doc, params, cfg, staging)
        write_manifest(
            staging,
            pipeline=pipeline,
            params=params,
            run_config=cfg,
            preset=doc.get("preset"),
            seed=cfg.seed,
            workers=cfg.worker_hint,
            wall_seconds=time.monotonic() - t0,
            extra={"results": extra} if extra else None,
        )
    return EXIT_OK


def _doc_from_args(args) -> dict:
    doc = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
    doc["pipeline"] = args.command
    run = dict(doc.get("run") or doc.get("run_config") or {})
    for field, attr in (
        ("seed", "seed"),
        ("worker_hint", "workers"),
        ("steps", "steps"),
        ("ensemble_size", "size"),
        ("trajectories", "trajectories"),
    ):
        v = getattr(args, attr, None)
        if v is not None:
            run[field] = v
    doc["run"] = run
    for field in ("preset", "out_dir", "snapshots", "other_preset", "figure"):
        v = getattr(args, field, None)
        if v is not None:
            doc[field] = v
    if getattr(args, "force", False):
        doc["force"] = True
    params = dict(doc.get("params") or {})
    for field in ("gamma", "bigK", "a", "phi", "hbar_eff", "temperature"):
        v = getattr(args, field, None)
        if v is not None:
            params[field] = v
    if params:
        doc["params"] = params
    for field, attr in (("gamma_range", "gamma_range"), ("K_range", "K_range"), ("resolution", "resolution")):
        v = getattr(args, attr, None)
        if v is not None:
            doc[field] = v
    return doc


def _add_common(p):
    p.add_argument("--config", help="JSON config document; flags override its fields")
    p.add_argument("--preset", help="registered parameter preset (B1, C-1, D-1, A)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--force", action="store_true", help="overwrite an existing output directory")
    p.add_argument("--steps", type=int)
    p.add_argument("--size", type=int, help="classical ensemble size")
    p.add_argument("--trajectories", type=int)
    for f in ("gamma", "bigK", "a", "phi", "hbar-eff", "temperature"):
        p.add_argument(f"--{f.replace('_', '-')}", dest=f.replace("-", "_"), type=float)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="qratchet",
        description="Dissipative kicked-ratchet experiments: classical map, "
        "quantum trajectories, phase-space overlap analysis.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("classical", "quantum", "overlap", "compare"):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "compare":
            p.add_argument("--other-preset", dest="other_preset")
    p = sub.add_parser("husimi")
    _add_common(p)
    p.add_argument("--snapshots", help="snapshot .bin file from a quantum run")
    p = sub.add_parser("scan")
    _add_common(p)
    p.add_argument("--gamma-range", dest="gamma_range", type=float, nargs=2)
    p.add_argument("--K-range", dest="K_range", type=float, nargs=2)
    p.add_argument("--resolution", type=int, nargs=2)
    p = sub.add_parser("reproduce")
    _add_common(p)
    p.add_argument("figure", choices=["fig1", "fig2", "fig3", "fig4", "overlap-table"])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _doc_from_args(args)
        return run_experiment(doc)
    except (ValidationError, ConfigError, KeyError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BasisLeakageError, NormDriftError, TraceDriftError) as exc:
        print(f"numerical-consistency failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
