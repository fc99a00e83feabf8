"""Command-line front end.

    indexrecon synth       -c exp.ini
    indexrecon reconstruct -c exp.ini [--strategy combined]
    indexrecon localize    -c exp.ini [--reference truth]
    indexrecon sweep       -c sweep.ini

Every command accepts ``--set section.key=value`` overrides. Exit codes:
0 success, 2 configuration error, 3 numerical failure, 4 empty selection
(nothing to reconstruct), 5 iteration budget exhausted without convergence.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, ExperimentConfig, load_config
from .forward import SolverError
from .localization import DegenerateDataError
from .pipeline import data_mesh, localization_map, reconstruct, synthesize
from .reconstruction import ReconstructionError
from .scattering import FarFieldData
from .strategies import EmptySelectionError
from .synthetic import ScenarioError

logger = logging.getLogger("indexrecon")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_EMPTY = 4
EXIT_BUDGET = 5

SWEEP_COLUMNS = ["strategy", "zones", "threshold", "noise", "data_size", "n_params",
                 "final_error", "iterations", "wall_time", "status"]


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        overrides[key.strip()] = value
    if getattr(args, "strategy", None):
        overrides["reconstruction.strategy"] = args.strategy
    if overrides:
        cfg = cfg.with_overrides(overrides)
    if getattr(args, "output", None):
        cfg.output = Path(args.output)
    return cfg


def cmd_synth(args) -> int:
    cfg = _config(args)
    out = io.ensure_dir(cfg.output)
    truth, noisy = synthesize(cfg)
    io.write_mesh(out / "data_mesh.txt", data_mesh(cfg))
    io.write_farfield(out / "truth.txt", truth)
    io.write_farfield(out / "data.txt", noisy)
    logger.info("wrote %s", out)
    return EXIT_OK


def _load_data(cfg: ExperimentConfig, path) -> FarFieldData:
    path = Path(path) if path else cfg.output / "data.txt"
    if not path.exists():
        raise ConfigError(f"data file {path} not found (run synth first)")
    return io.read_farfield(path)


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    data = _load_data(cfg, args.data)
    outcome = reconstruct(cfg, data)
    out = io.ensure_dir(cfg.output)
    res = outcome.result
    io.write_mesh(out / "recon_mesh.txt", outcome.mesh)
    res.trace.to_csv(out / "trace.csv")
    io.write_zoning(out / "zoning.txt", res.index.zoning)
    io.write_index(out / "index.txt", res.index)
    io.write_zoning_history(out / "zonings", res.zonings)
    if outcome.selection is not None:
        io.write_selection(out / "selection.txt", outcome.selection)
    else:
        (out / "selection.txt").unlink(missing_ok=True)
    print(f"{outcome.strategy}: N={outcome.n_params} error={outcome.final_error:.4f} "
          f"iterations={len(res.trace)} converged={outcome.converged}")
    return EXIT_OK if outcome.converged else EXIT_BUDGET


def cmd_localize(args) -> int:
    cfg = _config(args)
    data = _load_data(cfg, args.data)
    lmap = localization_map(cfg, data, args.reference)
    out = io.ensure_dir(cfg.output)
    lmap.to_csv(out / "localization.csv")
    s = lmap.normalized
    print(f"localization: {len(s)} probes, {int(np.sum(s >= 0.1))} above 10%, "
          f"truncation {lmap.truncation}")
    return EXIT_OK


def sweep_cells(cfg: ExperimentConfig) -> list[dict[str, str]]:
    """Cartesian product of the ``[sweep]`` grid (keys are ``section.key``)."""
    keys = list(cfg.sweep.grid)
    return [dict(zip(keys, vals)) for vals in itertools.product(*cfg.sweep.grid.values())]


def run_cell(cfg: ExperimentConfig, cell: dict[str, str]) -> dict:
    row = {c: "" for c in SWEEP_COLUMNS}
    t0 = time.perf_counter()
    try:
        c = cfg.with_overrides(cell)
        row.update(strategy=c.recon.strategy, zones=c.recon.zones or "",
                   threshold=c.strategy.threshold, noise=c.data.noise,
                   data_size=f"{c.data.m_e}x{c.data.m_m}")
        _, data = synthesize(c)
        outcome = reconstruct(c, data)
        row.update(n_params=outcome.n_params, final_error=repr(outcome.final_error),
                   iterations=len(outcome.result.trace),
                   status="ok" if outcome.converged else "budget")
    except (EmptySelectionError, DegenerateDataError) as exc:
        row["status"] = f"empty: {exc}"
    except Exception as exc:  # a failed cell is reported, the sweep goes on
        logger.exception("cell %s failed", cell)
        row["status"] = f"failed: {type(exc).__name__}: {exc}"
    row["wall_time"] = f"{time.perf_counter() - t0:.2f}"
    return row


def _run_cell_star(item):
    return run_cell(*item)


def cmd_sweep(args) -> int:
    cfg = _config(args)
    cells = sweep_cells(cfg)
    if not cells:
        raise ConfigError("[sweep] section defines no grid")
    workers = args.workers or cfg.sweep.workers
    items = [(cfg, cell) for cell in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell_star, items))
    else:
        rows = [_run_cell_star(it) for it in items]
    out = io.ensure_dir(cfg.output)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    failed = sum(not r["status"].startswith(("ok", "budget")) for r in rows)
    print(f"sweep: {len(rows)} cells, {failed} flagged, table in {out / 'sweep.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="indexrecon", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-c", "--config", required=True, help="experiment INI file")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
        sp.add_argument("-o", "--output", help="output directory (overrides [output] dir)")

    sp = sub.add_parser("synth", help="generate far-field data for the scenario")
    common(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("reconstruct", help="run a reconstruction strategy")
    common(sp)
    sp.add_argument("--strategy", choices=["full", "selective", "adaptive", "combined"])
    sp.add_argument("--data", help="FARFIELD file (default: <output>/data.txt)")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("localize", help="defect localization map")
    common(sp)
    sp.add_argument("--data", help="FARFIELD file (default: <output>/data.txt)")
    sp.add_argument("--reference", choices=["initial", "truth"], default="initial")
    sp.set_defaults(func=cmd_localize)

    sp = sub.add_parser("sweep", help="run a parameter grid")
    common(sp)
    sp.add_argument("-j", "--workers", type=int, default=0)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EmptySelectionError, DegenerateDataError) as exc:
        print(f"error: empty selection: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (ReconstructionError, SolverError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except io.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
