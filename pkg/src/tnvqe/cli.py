"""``tnvqe`` command line: check, run, sweep, variance, report.

Exit codes: 0 success, 1 a check or run failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .hamiltonian import build_tfim_mpo, dense_from_mpo, exact_ground_energy
from .results import (
    CONVERGED_TIGHT,
    SCHEMA_VERSION,
    VARIANCE_COLUMNS,
    SchemaError,
    append_record,
    cell_stats,
    complete_groups,
    format_csv,
    format_table,
    load_traces,
    read_records,
    record_rows,
    run_summary,
    write_json,
    write_records,
    write_svg,
)
from .vqe import cell_problem, default_workers, gradient_variance, run_sweep

log = logging.getLogger("tnvqe")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _overrides(args) -> dict:
    return {
        "seeds": args.seeds,
        "learning_rate": args.learning_rate,
        "max_iterations": args.max_iterations,
        "circuit_layers": getattr(args, "circuit_layers", None),
        "tn_layers": getattr(args, "tn_layers", None),
        "rotation_mode": getattr(args, "mode", None),
    }


def _config(args) -> RunConfig:
    return load_config(args.config, _overrides(args))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _workers(args) -> int:
    return args.workers if args.workers is not None else default_workers()


def _ground_energy(cfg: RunConfig) -> float:
    return exact_ground_energy(dense_from_mpo(build_tfim_mpo(cfg.tfim())))


def cmd_check(args) -> int:
    from .checks import run_checks

    cfg = _config(args)
    results = run_checks(cfg, corrupt_mpo=args.corrupt_mpo)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def _single_cell(cfg: RunConfig):
    cells = cfg.cells()
    if len(cells) != 1:
        raise UsageError(
            f"run needs a single grid cell, config describes {len(cells)}; "
            "give scalar circuit_layers, tn_layers and rotation_mode (or use sweep)"
        )
    return cells[0]


def cmd_run(args) -> int:
    cfg = _config(args)
    cell = _single_cell(cfg)
    out = _out_dir(args)
    records = run_sweep([cell], cfg.seed_list, cfg.tfim(), cfg.optimizer(), _workers(args),
                        entangler_ranges=cfg.entangler_ranges)
    if not records:
        print("error: every run failed", file=sys.stderr)
        return EXIT_FAIL
    write_records(out / "run.csv", {k: record_rows(k, r) for k, r in records.items()})
    summary = run_summary(cfg.echo(), _ground_energy(cfg), records)
    write_json(out / "run_summary.json", summary)
    print(f"{len(records)} runs, best final relative error {summary['final_relative_error']:.3e} "
          f"(seed {summary['seed']}, {summary['termination']}, {summary['iterations_used']} rows)")
    print(f"wrote {out / 'run.csv'} and {out / 'run_summary.json'}")
    return EXIT_OK if len(records) == len(cfg.seed_list) else EXIT_FAIL


def _sweep_meta(cfg: RunConfig) -> dict:
    echo = cfg.echo()
    echo.pop("seeds")
    return {"schema_version": SCHEMA_VERSION, "config": echo}


def cmd_sweep(args) -> int:
    import json

    cfg = _config(args)
    cells = cfg.cells()
    seeds = cfg.seed_list
    out = _out_dir(args)
    csv_path, meta_path = out / "sweep.csv", out / "sweep_meta.json"
    wanted = {c.key(s) for c in cells for s in seeds}
    meta = _sweep_meta(cfg)

    kept: dict = {}
    if csv_path.exists():
        if meta_path.exists():
            old = json.loads(meta_path.read_text())
            if old != meta:
                raise SchemaError(
                    f"{csv_path} was produced with different settings; "
                    f"remove it or use another --out (stored: {old.get('config')})"
                )
        groups = read_records(csv_path)
        done = complete_groups(groups, cfg.max_iterations, cfg.grad_tolerance)
        kept = {k: v for k, v in done.items() if k in wanted}
        dropped = len(groups) - len(kept)
        log.info("resuming: %d finished runs kept, %d discarded", len(kept), dropped)
    write_json(meta_path, meta)
    write_records(csv_path, kept)

    todo = len(wanted) - len(kept)
    print(f"sweep: {len(cells)} cells x {len(seeds)} seeds, {len(kept)} already done, {todo} to run")

    def on_result(cell, seed, record):
        append_record(csv_path, cell.key(seed), record)
        log.info("finished %s seed %d: %.3e", cell, seed, record.final.relative_error)

    records = run_sweep(cells, seeds, cfg.tfim(), cfg.optimizer(), _workers(args), skip=set(kept),
                        on_result=on_result, entangler_ranges=cfg.entangler_ranges)
    groups = dict(kept)
    groups.update({k: record_rows(k, r) for k, r in records.items()})
    write_records(csv_path, groups)
    print(f"wrote {len(groups)} runs to {csv_path}")
    missing = len(wanted) - len(groups)
    if missing:
        print(f"error: {missing} runs failed; rerun to retry them", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_variance(args) -> int:
    cfg = _config(args)
    out = _out_dir(args)
    seed = cfg.seed_list[0]
    rows = []
    for cell in cfg.cells():
        problem = cell_problem(cell, cfg.tfim(), cfg.entangler_ranges)
        rep = gradient_variance(problem, cfg.variance_samples, seed, cfg.theta_fd_step)
        base = [str(cell.circuit_layers), str(cell.tn_layers), cell.mode.value]
        for k, v in enumerate(rep.theta):
            rows.append(base + ["theta", str(k), repr(float(v)), str(rep.sample_count)])
        for k, v in enumerate(rep.phi.reshape(-1)):
            rows.append(base + ["phi", str(k), repr(float(v)), str(rep.sample_count)])
        mean_phi = float(rep.phi.mean())
        mean_theta = float(rep.theta.mean()) if rep.theta.size else float("nan")
        print(f"circuit {cell.circuit_layers} tn {cell.tn_layers} {cell.mode.value}: "
              f"mean Var[dE/dphi] {mean_phi:.4e}, mean Var[dE/dtheta] {mean_theta:.4e}")
    path = out / "variance.csv"
    path.write_text(format_csv(VARIANCE_COLUMNS, rows))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_report(args) -> int:
    traces = load_traces(args.csv)
    stats = cell_stats(traces)
    print(format_table(stats))
    tn = [s for s in stats if s.cell[0] == 3 and s.cell[1] > 0]
    if tn:
        best = min(tn, key=lambda s: s.best)
        verdict = "below" if best.best < CONVERGED_TIGHT else "not below"
        print(f"best TN-VQE error with a 3-layer circuit: {best.best:.3e} "
              f"(tn {best.cell[1]}, {best.cell[2]}), {verdict} {CONVERGED_TIGHT:g}")
    if args.svg:
        path = _out_dir(args) / "relative_error.svg"
        write_svg(path, traces)
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config file")
    common.add_argument("--out", metavar="DIR", default="results", help="output directory (default: results)")
    common.add_argument("--seeds", type=int, metavar="N", help="number of seeds, overrides the config")
    common.add_argument("--svg", action="store_true", help="write SVG plots (report)")
    common.add_argument("--learning-rate", type=float, metavar="ETA")
    common.add_argument("--max-iterations", type=int, metavar="N")
    common.add_argument("--workers", type=int, metavar="N",
                        help="worker processes (default: CPU count, capped by TNVQE_WORKERS)")
    common.add_argument("-v", "--verbose", action="store_true")

    cell = argparse.ArgumentParser(add_help=False)
    cell.add_argument("--circuit-layers", type=int, metavar="L")
    cell.add_argument("--tn-layers", type=int, metavar="L")
    cell.add_argument("--mode", choices=["OneParam", "ThreeParam"])

    p = argparse.ArgumentParser(prog="tnvqe", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="run the consistency checks")
    c.add_argument("--corrupt-mpo", action="store_true", help=argparse.SUPPRESS)
    c.set_defaults(func=cmd_check)
    sub.add_parser("run", parents=[common, cell], help="optimize one grid cell over the seeds").set_defaults(func=cmd_run)
    sub.add_parser("sweep", parents=[common, cell], help="optimize every grid cell (resumable)").set_defaults(func=cmd_sweep)
    sub.add_parser("variance", parents=[common, cell], help="gradient variance per grid cell").set_defaults(func=cmd_variance)
    r = sub.add_parser("report", parents=[common], help="summarize a sweep CSV")
    r.add_argument("csv", metavar="CSV", help="sweep or run CSV")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
