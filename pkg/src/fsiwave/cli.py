"""Command-line front end.

    python -m fsiwave --config scenario.ini --mode time --out runs/a
    fsiwave --mode sdomain --override discretization.h=0.2 --workers 4
    fsiwave --mode verify

Exit status: 0 on success, 1 if a verify check fails, 2 on an invalid
configuration, 3 on a solver breakdown.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import DiscreteSpace, assemble_blocks
from .config import MODES, ScenarioConfig, load_config, s_grid_values
from .dtn import DtnOperator
from .errors import ConfigError, GeometryViolation, SolverBreakdown
from .geometry import build_mesh, write_mesh
from .incident import rho_data_sdomain
from .output import vertex_fields, write_field, write_manifest
from .sdomain import solve_sdomain, stability_sweep
from .timedomain import apriori_monitor, mirror_metric, run_time_domain

log = logging.getLogger("fsiwave")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsiwave", description="Acoustic scattering by a rough surface "
                                "with an embedded elastic body, truncated by a transparent hemisphere.")
    p.add_argument("--config", type=Path, help="INI scenario file")
    p.add_argument("--mode", choices=MODES, help="overrides run.mode")
    p.add_argument("--out", type=Path, help="output directory (overrides run.out)")
    p.add_argument("--deterministic", action="store_true", help="single worker, no timestamps")
    p.add_argument("--workers", type=int, help="worker threads for s-domain sweeps")
    p.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config_from_args(args) -> ScenarioConfig:
    overrides = list(args.override)
    if args.mode:
        overrides.append(f"run.mode={args.mode}")
    if args.out:
        overrides.append(f"run.out={args.out}")
    if args.deterministic:
        overrides.append("run.deterministic=yes")
    if args.workers is not None:
        overrides.append(f"run.workers={args.workers}")
    return load_config(args.config, overrides)


def _mesh_and_blocks(cfg: ScenarioConfig, out: Path, files: list):
    mesh = build_mesh(cfg.geometry, cfg.h, seed=cfg.seed)
    path = out / "mesh.fsimesh"
    write_mesh(mesh, path)
    files.append(path)
    blocks = assemble_blocks(DiscreteSpace.build(mesh, cfg.geometry.R), cfg.material, cfg.n_max)
    log.info("mesh: %d vertices, %d tets, %d dofs", mesh.n_vertices, len(mesh.tets), blocks.space.n_dofs)
    return blocks


def run_sdomain(cfg: ScenarioConfig, out: Path, files: list) -> dict:
    blocks = _mesh_and_blocks(cfg, out, files)
    workers = 1 if cfg.deterministic else cfg.workers
    report = stability_sweep(blocks, cfg.incident, s_grid_values(cfg), workers=workers)
    path = out / "stability.csv"
    report.write_csv(path)
    files.append(path)
    s = cfg.s_snapshot
    dtn = DtnOperator.build(s, cfg.material.c, cfg.geometry.R, cfg.n_max)
    state = solve_sdomain(blocks, dtn, s, rho_data_sdomain(cfg.incident, dtn, s))
    phi, u = vertex_fields(blocks, state.x)
    for part, fn in (("re", np.real), ("im", np.imag)):
        files.append(write_field(out / f"phi_s_{part}.fsifield", fn(phi)))
        files.append(write_field(out / f"u_s_{part}.fsifield", fn(u)))
    return {"max_ratio": report.max_ratio, "max_ratio_h1": report.max_ratio_h1,
            "s_points": len(report.records)}


def run_time(cfg: ScenarioConfig, out: Path, files: list) -> dict:
    blocks = _mesh_and_blocks(cfg, out, files)
    snap_dir = out / "fields"
    snap_dir.mkdir(exist_ok=True)

    def snapshot(state):
        phi, u = vertex_fields(blocks, state.x)
        files.append(write_field(snap_dir / f"phi_{state.k:05d}.fsifield", phi))
        files.append(write_field(snap_dir / f"u_{state.k:05d}.fsifield", u))

    run = run_time_domain(blocks, cfg.incident, cfg.dt, cfg.steps,
                          snapshot_every=cfg.snapshot_every, on_snapshot=snapshot)
    path = out / "energy.csv"
    run.write_csv(path)
    files.append(path)
    works = run.boundary_works()
    peak = run.peak_eps1
    ap = apriori_monitor(run)
    summary = {
        "steps": cfg.steps,
        "balance_residual": run.balance_residual(),
        "peak_eps1": peak,
        "max_boundary_work": {k: float(v.max()) for k, v in works.items()},
        "apriori_ratio": float(ap.ratio_323),
        "apriori_ratio_l2": float(ap.ratio_324),
    }
    if cfg.geometry.body is None and float(cfg.raw["geometry"]["bump_amplitude"]) == 0:
        summary["mirror_metric"] = mirror_metric(run)
    return summary


def run_verify(cfg: ScenarioConfig) -> tuple:
    from .verify import format_table, run_checks

    results = run_checks(cfg.seed)
    print(format_table(results))
    ok = all(r.passed for r in results)
    return ok, {"checks": {f"{r.module}: {r.name}": r.passed for r in results}}


def run(cfg: ScenarioConfig) -> int:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    files: list = []
    t0 = time.time()
    status = 0
    if cfg.mode == "verify":
        ok, summary = run_verify(cfg)
        status = 0 if ok else 1
    elif cfg.mode == "sdomain":
        summary = run_sdomain(cfg, out, files)
    else:
        summary = run_time(cfg, out, files)
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")
    files.append(summary_path)
    extra = {"mode": cfg.mode}
    if not cfg.deterministic:
        extra["wall_seconds"] = round(time.time() - t0, 3)
    write_manifest(out, cfg.echo(), files, __version__, extra)
    for k, v in summary.items():
        if not isinstance(v, dict):
            print(f"{k}: {v}")
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except (GeometryViolation, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverBreakdown as exc:
        print(f"solver breakdown: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
