"""Experiment manifests and atomic artifact directories.

A run writes everything into a staging directory and renames it into
place only on success, so partial outputs never land in the output path.
The manifest records the full configuration, seed, and a digest of every
artifact; re-running from a manifest reproduces the artifacts byte for
byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import time
from contextlib import contextmanager
from dataclasses import asdict, is_dataclass
from importlib import metadata
from pathlib import Path


def code_version() -> str:
    try:
        return metadata.version("qratchet")
    except metadata.PackageNotFoundError:
        return "unknown"


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_manifest(
    out_dir: Path,
    *,
    pipeline: str,
    params,
    run_config,
    preset: str | None,
    seed: int,
    workers: int,
    wall_seconds: float,
    extra: dict | None = None,
):
    entries = []
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            entries.append(
                {"path": str(p.relative_to(out_dir)), "sha256": _digest(p)}
            )
    doc = {
        "pipeline": pipeline,
        "preset": preset,
        "params": _jsonable(params),
        "run_config": _jsonable(run_config),
        "seed": seed,
        "workers": workers,
        "code_version": code_version(),
        "wall_seconds": wall_seconds,
        "artifacts": entries,
    }
    if extra:
        doc.update(_jsonable(extra))
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True))
    return doc


@contextmanager
def atomic_output_dir(target: Path, force: bool = False):
    """Stage artifacts in a sibling temp dir; rename into place on success."""
    target = Path(target)
    if target.exists():
        if not force:
            raise FileExistsError(f"output directory {target} already exists")
        shutil.rmtree(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    staging = target.parent / f".{target.name}.tmp-{os.getpid()}"
    if staging.exists():
        shutil.rmtree(staging)
    staging.mkdir()
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    os.rename(staging, target)


class Stopwatch:
    def __enter__(self):
        self.t0 = time.monotonic()
        return self

    def __exit__(self, *exc):
        self.seconds = time.monotonic() - self.t0
        return False
