"""Benchmark harness: timed (C, rho) grids with and without screening.

Each grid cell is solved `repeats` times in both modes to the same gap
tolerance; only the solve call is timed (monotonic clock), so parsing and
setup stay out of the numbers. Runs execute sequentially by default to keep
timings honest; the opt-in parallel mode spreads cells across threads and
marks every timing as contended.

Screening rates reported here count eliminated samples, |R u S| / n.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import Dataset, set_radii
from .model import Hyperparams
from .screening import ScreenTrace, dynamic_screen
from .solver import solve

__all__ = [
    "RunRecord",
    "SummaryRow",
    "run_grid",
    "summarize",
    "records_to_csv",
    "summary_to_csv",
    "summary_markdown",
]

RECORDS_CSV_HEADER = "dataset,C,rho,mode,repeat,seconds,final_gap,screened_frac"
SUMMARY_CSV_HEADER = (
    "dataset,C,rho,repeats,baseline_mean_s,baseline_std_s,"
    "screened_mean_s,screened_std_s,speedup,screened_frac,excluded"
)


@dataclass(frozen=True)
class RunRecord:
    dataset_id: str
    C: float
    rho: float
    mode: str  # "baseline" or "screened"
    repeat_index: int
    wall_seconds: float
    final_gap: float
    screened_fraction: float
    certified: bool = True
    contended: bool = False
    trace: ScreenTrace | None = None


@dataclass(frozen=True)
class SummaryRow:
    dataset_id: str
    C: float
    rho: float
    repeats: int
    baseline_mean: float
    baseline_std: float
    screened_mean: float
    screened_std: float
    speedup: float
    screened_fraction: float
    n_excluded: int
    contended: bool


def _worker_cap(requested: int | None) -> int:
    cap = os.environ.get("RSVM_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(requested or limit, limit))


def _run_cell(
    ds: Dataset,
    dataset_id: str,
    C: float,
    rho: float,
    repeats: int,
    eps: float,
    max_epochs: int,
    f_min: int,
    screen_every: int,
    contended: bool,
) -> list[RunRecord]:
    ds_cell = set_radii(ds, rho)
    hp = Hyperparams(C=C, gap_tol=eps, max_epochs=max_epochs)
    records = []
    for repeat in range(repeats):
        t0 = time.perf_counter()
        rep = solve(ds_cell, hp)
        baseline_seconds = time.perf_counter() - t0
        records.append(
            RunRecord(
                dataset_id=dataset_id,
                C=C,
                rho=rho,
                mode="baseline",
                repeat_index=repeat,
                wall_seconds=baseline_seconds,
                final_gap=rep.iterate.gap,
                screened_fraction=0.0,
                certified=rep.converged,
                contended=contended,
            )
        )
        t0 = time.perf_counter()
        result = dynamic_screen(ds_cell, hp, f_min=f_min, screen_every=screen_every)
        screened_seconds = time.perf_counter() - t0
        records.append(
            RunRecord(
                dataset_id=dataset_id,
                C=C,
                rho=rho,
                mode="screened",
                repeat_index=repeat,
                wall_seconds=screened_seconds,
                final_gap=result.report.iterate.gap,
                screened_fraction=result.partition.screened_fraction,
                certified=result.converged,
                contended=contended,
                trace=result.trace,
            )
        )
    return records


def run_grid(
    ds: Dataset,
    C_grid,
    rho_grid,
    repeats: int,
    eps: float,
    seed: int = 0,
    *,
    dataset_id: str = "dataset",
    max_epochs: int = 100_000,
    f_min: int = 0,
    screen_every: int = 10,
    parallel: bool = False,
    workers: int | None = None,
) -> list[RunRecord]:
    """One baseline + one screened run per (C, rho, repeat), both certified
    against the same gap tolerance. Records come back in deterministic grid
    order regardless of execution mode. `seed` is recorded in the dataset id
    so runs are attributable; the solver itself is deterministic."""
    C_grid = list(C_grid)
    rho_grid = list(rho_grid)
    if not C_grid or not rho_grid:
        raise ValueError("C and rho grids must be nonempty")
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")

    cells = [(C, rho) for C in C_grid for rho in rho_grid]
    tag = f"{dataset_id}#seed{seed}" if seed else dataset_id

    def cell_records(cell):
        C, rho = cell
        return _run_cell(
            ds, tag, C, rho, repeats, eps, max_epochs, f_min, screen_every, parallel
        )

    if parallel:
        with ThreadPoolExecutor(max_workers=_worker_cap(workers)) as pool:
            per_cell = list(pool.map(cell_records, cells))
    else:
        per_cell = [cell_records(cell) for cell in cells]
    return [record for chunk in per_cell for record in chunk]


def summarize(records: list[RunRecord]) -> list[SummaryRow]:
    """Per (C, rho): mean/std wall time per mode, speedup, screening rate.

    Uncertified runs are excluded from the means and counted. Raises if the
    two modes do not cover the same grid cells.
    """
    cells: dict[tuple[str, float, float], dict[str, list[RunRecord]]] = {}
    for r in records:
        cell = cells.setdefault((r.dataset_id, r.C, r.rho), {"baseline": [], "screened": []})
        cell[r.mode].append(r)
    rows = []
    for (dataset_id, C, rho), by_mode in sorted(cells.items()):
        if not by_mode["baseline"] or not by_mode["screened"]:
            raise ValueError(
                f"cell (C={C}, rho={rho}) is missing one mode; grids do not match"
            )
        base_ok = [r for r in by_mode["baseline"] if r.certified]
        scr_ok = [r for r in by_mode["screened"] if r.certified]
        excluded = (
            len(by_mode["baseline"]) + len(by_mode["screened"]) - len(base_ok) - len(scr_ok)
        )
        base_t = np.array([r.wall_seconds for r in base_ok])
        scr_t = np.array([r.wall_seconds for r in scr_ok])
        base_mean = float(base_t.mean()) if base_t.size else float("nan")
        scr_mean = float(scr_t.mean()) if scr_t.size else float("nan")
        rows.append(
            SummaryRow(
                dataset_id=dataset_id,
                C=C,
                rho=rho,
                repeats=len(by_mode["baseline"]),
                baseline_mean=base_mean,
                baseline_std=float(base_t.std()) if base_t.size else float("nan"),
                screened_mean=scr_mean,
                screened_std=float(scr_t.std()) if scr_t.size else float("nan"),
                speedup=base_mean / scr_mean if scr_mean > 0 else float("nan"),
                screened_fraction=scr_ok[-1].screened_fraction if scr_ok else float("nan"),
                n_excluded=excluded,
                contended=any(r.contended for r in by_mode["baseline"] + by_mode["screened"]),
            )
        )
    return rows


def records_to_csv(records: list[RunRecord]) -> str:
    lines = [RECORDS_CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.dataset_id},{r.C:g},{r.rho:g},{r.mode},{r.repeat_index},"
            f"{r.wall_seconds:.6f},{r.final_gap:.12g},{r.screened_fraction:.6f}"
        )
    return "\n".join(lines) + "\n"


def summary_to_csv(rows: list[SummaryRow]) -> str:
    lines = [SUMMARY_CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.dataset_id},{r.C:g},{r.rho:g},{r.repeats},"
            f"{r.baseline_mean:.6f},{r.baseline_std:.6f},"
            f"{r.screened_mean:.6f},{r.screened_std:.6f},"
            f"{r.speedup:.3f},{r.screened_fraction:.6f},{r.n_excluded}"
        )
    return "\n".join(lines) + "\n"


def summary_markdown(rows: list[SummaryRow]) -> str:
    out = [
        "| C | rho | baseline (s) | screened (s) | speedup | screened frac |",
        "|---|-----|--------------|--------------|---------|---------------|",
    ]
    for r in rows:
        out.append(
            f"| {r.C:g} | {r.rho:g} | {r.baseline_mean:.4f} ± {r.baseline_std:.4f} "
            f"| {r.screened_mean:.4f} ± {r.screened_std:.4f} "
            f"| {r.speedup:.2f} | {r.screened_fraction:.3f} |"
        )
    total_excluded = sum(r.n_excluded for r in rows)
    if total_excluded:
        out.append(f"\nexcluded {total_excluded} uncertified run(s) from the means")
    if any(r.contended for r in rows):
        out.append("\nnote: parallel execution — timings contended")
    return "\n".join(out) + "\n"
