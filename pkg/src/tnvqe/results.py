"""CSV/JSON persistence of run records and the per-cell report.

Floats are written with ``repr`` so a file read back reproduces the exact
doubles, and rows are always sorted by ``(cell, seed, iteration)`` so the
bytes do not depend on run completion order.
"""

from __future__ import annotations

import csv
import io
import json
import os
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .vqe import IterationRow, RunRecord, Termination

SCHEMA_VERSION = 1
COLUMNS = (
    "circuit_layers",
    "tn_layers",
    "mode",
    "seed",
    "iteration",
    "energy",
    "relative_error",
    "grad_inf_norm",
    "termination",
)
VARIANCE_COLUMNS = ("circuit_layers", "tn_layers", "mode", "parameter", "index", "variance", "sample_count")
CONVERGED_LOOSE = 1e-4
CONVERGED_TIGHT = 1e-6

RunKey = tuple  # (circuit_layers, tn_layers, mode, seed)


class SchemaError(ValueError):
    pass


def record_rows(key: RunKey, record: RunRecord) -> list[list[str]]:
    c, t, mode, seed = key
    return [
        [str(c), str(t), mode, str(seed), str(r.iteration), repr(r.energy),
         repr(r.relative_error), repr(r.grad_inf_norm), record.termination.value]
        for r in record.rows
    ]


def _write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def format_csv(header: Iterable[str], rows: Iterable[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_records(path: Path, groups: dict[RunKey, list[list[str]]]) -> None:
    rows = [row for key in sorted(groups) for row in groups[key]]
    _write_text_atomic(path, format_csv(COLUMNS, rows))


def append_record(path: Path, key: RunKey, record: RunRecord) -> None:
    """Appends one finished run; creates the file with its header if missing."""
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(COLUMNS)
        w.writerows(record_rows(key, record))


@dataclass
class RunTrace:
    """A run as read back from CSV."""

    key: RunKey
    rows: list[IterationRow]
    termination: Termination

    @property
    def final(self) -> IterationRow:
        return self.rows[-1]


def read_records(path: str | Path) -> dict[RunKey, list[list[str]]]:
    """Raw row groups keyed by run. Raises :class:`SchemaError` on a bad header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError("no rows: file is empty")
        if tuple(header) != COLUMNS:
            raise SchemaError(f"schema mismatch: expected columns {','.join(COLUMNS)}, got {','.join(header)}")
        groups: dict[RunKey, list[list[str]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(COLUMNS):
                raise SchemaError(f"schema mismatch: line {lineno} has {len(row)} fields")
            try:
                key = (int(row[0]), int(row[1]), row[2], int(row[3]))
            except ValueError as exc:
                raise SchemaError(f"schema mismatch: line {lineno}: {exc}") from exc
            groups.setdefault(key, []).append(row)
    return groups


def parse_trace(key: RunKey, rows: list[list[str]]) -> RunTrace:
    parsed = []
    terms = {r[8] for r in rows}
    if len(terms) != 1:
        raise SchemaError(f"run {key} mixes termination values {sorted(terms)}")
    try:
        termination = Termination(terms.pop())
        for r in rows:
            parsed.append(IterationRow(int(r[4]), float(r[5]), float(r[6]), float(r[7])))
    except ValueError as exc:
        raise SchemaError(f"schema mismatch in run {key}: {exc}") from exc
    if [p.iteration for p in parsed] != list(range(len(parsed))):
        raise SchemaError(f"run {key} has non-contiguous iterations")
    return RunTrace(key, parsed, termination)


def complete_groups(groups: dict[RunKey, list[list[str]]], max_iterations: int,
                    grad_tolerance: float) -> dict[RunKey, list[list[str]]]:
    """The groups that describe a finished run under the given stopping rule."""
    done = {}
    for key, rows in groups.items():
        try:
            trace = parse_trace(key, rows)
        except SchemaError:
            continue
        n = len(trace.rows)
        if trace.termination is Termination.MAX_ITERATIONS:
            ok = n == max_iterations
        else:
            ok = n <= max_iterations and trace.final.grad_inf_norm < grad_tolerance
        if ok:
            done[key] = rows
    return done


def load_traces(path: str | Path) -> list[RunTrace]:
    groups = read_records(path)
    if not groups:
        raise SchemaError("no rows: file has a header but no data")
    return [parse_trace(k, groups[k]) for k in sorted(groups)]


def write_json(path: Path, payload: dict) -> None:
    _write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_summary(config_echo: dict, ground_energy: float, records: dict[RunKey, RunRecord]) -> dict:
    runs = []
    for key in sorted(records):
        rec = records[key]
        c, t, mode, seed = key
        runs.append({
            "circuit_layers": c, "tn_layers": t, "mode": mode, "seed": seed,
            "final_energy": rec.final.energy,
            "final_relative_error": rec.final.relative_error,
            "iterations_used": len(rec.rows),
            "termination": rec.termination.value,
        })
    best = min(runs, key=lambda r: (r["final_relative_error"], r["seed"]))
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config_echo,
        "exact_ground_energy": ground_energy,
        "final_energy": best["final_energy"],
        "final_relative_error": best["final_relative_error"],
        "iterations_used": best["iterations_used"],
        "termination": best["termination"],
        "seed": best["seed"],
        "runs": runs,
    }


@dataclass(frozen=True)
class CellStats:
    cell: tuple[int, int, str]
    runs: int
    best: float
    median: float
    frac_loose: float
    frac_tight: float


def cell_stats(traces: list[RunTrace]) -> list[CellStats]:
    by_cell: dict[tuple, list[float]] = {}
    for tr in traces:
        by_cell.setdefault(tr.key[:3], []).append(tr.final.relative_error)
    out = []
    for cell in sorted(by_cell):
        errs = by_cell[cell]
        out.append(CellStats(
            cell, len(errs), min(errs), statistics.median(errs),
            sum(e < CONVERGED_LOOSE for e in errs) / len(errs),
            sum(e < CONVERGED_TIGHT for e in errs) / len(errs),
        ))
    return out


def format_table(stats: list[CellStats]) -> str:
    head = f"{'circuit':>7} {'tn':>3} {'mode':<10} {'runs':>4} {'best':>10} {'median':>10} {'<1e-4':>6} {'<1e-6':>6}"
    lines = [head, "-" * len(head)]
    for s in stats:
        c, t, mode = s.cell
        lines.append(f"{c:>7} {t:>3} {mode:<10} {s.runs:>4} {s.best:>10.3e} {s.median:>10.3e} "
                     f"{s.frac_loose:>6.2f} {s.frac_tight:>6.2f}")
    return "\n".join(lines)


def write_svg(path: Path, traces: list[RunTrace]) -> None:
    """Relative error against iteration, one panel per cell, log-scale y."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "tnvqe"
    cells = sorted({tr.key[:3] for tr in traces})
    cols = min(4, len(cells))
    rows = -(-len(cells) // cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.6 * rows), squeeze=False, sharey=True)
    for ax, cell in zip(axes.flat, cells):
        for tr in traces:
            if tr.key[:3] == cell:
                y = [max(r.relative_error, 1e-16) for r in tr.rows]
                ax.plot(range(len(y)), y, lw=0.8)
        ax.set_yscale("log")
        ax.set_title(f"circuit {cell[0]}, TN {cell[1]}, {cell[2]}", fontsize=8)
        ax.tick_params(labelsize=7)
    for ax in list(axes.flat)[len(cells):]:
        ax.set_visible(False)
    fig.supxlabel("iteration")
    fig.supylabel("relative error")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
