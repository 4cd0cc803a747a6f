"""Command-line frontend: train / screen / bench / gen-data.

Exit codes: 0 success, 1 solve or certification failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import records_to_csv, run_grid, summarize, summary_markdown, summary_to_csv
from .data import Dataset, ParseError, gen_gaussian, parse_csv, parse_libsvm, set_radii, to_libsvm
from .model import Hyperparams
from .screening import dynamic_screen
from .solver import solve

MODEL_SCHEMA = 1

DEFAULT_C_GRID = [0.01, 0.1, 1.0, 10.0]
DEFAULT_RHO_GRID = [0.0, 0.01, 0.02, 0.05]


def _load_dataset(args) -> Dataset:
    path = Path(args.input)
    text = path.read_text()
    fmt = args.format
    if fmt == "auto":
        fmt = "csv" if path.suffix.lower() == ".csv" else "libsvm"
    if fmt == "csv":
        ds = parse_csv(text, label_column=args.label_col, header=args.header)
    else:
        ds = parse_libsvm(text)
    if args.rho_file is not None:
        radii = [float(line) for line in Path(args.rho_file).read_text().split()]
        ds = set_radii(ds, np.asarray(radii))
    else:
        ds = set_radii(ds, args.rho)
    return ds


def _add_input_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="dataset file")
    p.add_argument(
        "--format",
        choices=["auto", "libsvm", "csv"],
        default="auto",
        help="input format (default: by extension, .csv -> csv, else libsvm)",
    )
    p.add_argument("--label-col", type=int, default=0, help="CSV label column (default 0)")
    p.add_argument("--header", action="store_true", help="CSV input has a header row")
    p.add_argument("--rho", type=float, default=0.0, help="uncertainty radius for all samples (default 0)")
    p.add_argument("--rho-file", default=None, help="file with one radius per line (overrides --rho)")


def _add_solver_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c", type=float, default=1.0, help="regularization parameter (default 1.0)")
    p.add_argument("--eps", type=float, default=1e-6, help="duality-gap tolerance (default 1e-6)")
    p.add_argument("--max-epochs", type=int, default=100_000, help="gradient-step budget (default 100000)")


def cmd_train(args) -> int:
    ds = _load_dataset(args)
    hp = Hyperparams(C=args.c, gap_tol=args.eps, max_epochs=args.max_epochs)
    rep = solve(ds, hp)
    it = rep.iterate
    print(f"P*  = {it.primal_value:.12g}")
    print(f"D*  = {it.dual_value:.12g}")
    print(f"gap = {it.gap:.12g}")
    model = {
        "schema": MODEL_SCHEMA,
        "w": it.w.tolist(),
        "C": args.c,
        "rho": args.rho if args.rho_file is None else f"file:{args.rho_file}",
        "eps": args.eps,
        "final_gap": it.gap,
        "n": ds.n,
        "d": ds.dim,
        "converged": rep.converged,
    }
    Path(args.model_out).write_text(json.dumps(model, indent=2) + "\n")
    if not rep.converged:
        print(f"error: failed to certify gap <= {args.eps}", file=sys.stderr)
        return 1
    return 0


def cmd_screen(args) -> int:
    ds = _load_dataset(args)
    hp = Hyperparams(C=args.c, gap_tol=args.eps, max_epochs=args.max_epochs)
    result = dynamic_screen(ds, hp, f_min=args.fmin, screen_every=args.screen_every)
    Path(args.trace_out).write_text(result.trace.to_csv())
    Path(args.partition_out).write_text(json.dumps(result.partition.to_dict()) + "\n")
    print(f"screened fraction = {result.partition.screened_fraction:.6f}")
    print(f"final gap = {result.report.iterate.gap:.12g}")
    if not result.converged:
        print(f"error: failed to certify gap <= {args.eps}", file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    ds = _load_dataset(args)
    c_grid = [float(v) for v in args.c_grid.split(",")]
    rho_grid = [float(v) for v in args.rho_grid.split(",")]
    records = run_grid(
        ds,
        c_grid,
        rho_grid,
        repeats=args.repeats,
        eps=args.eps,
        seed=args.seed,
        dataset_id=Path(args.input).stem,
        max_epochs=args.max_epochs,
        f_min=args.fmin,
        screen_every=args.screen_every,
        parallel=args.parallel,
    )
    rows = summarize(records)
    Path(args.records_out).write_text(records_to_csv(records))
    Path(args.summary_out).write_text(summary_to_csv(rows))
    print(summary_markdown(rows))
    if any(not r.certified for r in records):
        print("error: some runs failed to certify; see records CSV", file=sys.stderr)
        return 1
    return 0


def cmd_gen_data(args) -> int:
    ds = gen_gaussian(args.n, args.d, args.sep, args.noise_std, args.seed)
    Path(args.out).write_text(to_libsvm(ds))
    print(f"wrote {ds.n} samples of dimension {ds.dim} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsvm",
        description="Train and benchmark a feature-noise robust SVM with "
        "dynamic gap-safe sample screening.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train and write the model as JSON")
    _add_input_options(p)
    _add_solver_options(p)
    p.add_argument("--model-out", default="model.json", help="output path (default model.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("screen", help="train with dynamic screening; write trace and partition")
    _add_input_options(p)
    _add_solver_options(p)
    p.add_argument("--fmin", type=int, default=0, help="stop screening at this many free samples (default 0)")
    p.add_argument("--screen-every", type=int, default=10, help="epochs between screening passes (default 10)")
    p.add_argument("--trace-out", default="trace.csv", help="trace CSV path (default trace.csv)")
    p.add_argument("--partition-out", default="partition.json", help="partition JSON path (default partition.json)")
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("bench", help="timed (C, rho) grid, with and without screening")
    _add_input_options(p)
    p.add_argument("--c-grid", default=",".join(str(v) for v in DEFAULT_C_GRID),
                   help="comma-separated C values (default %(default)s)")
    p.add_argument("--rho-grid", default=",".join(str(v) for v in DEFAULT_RHO_GRID),
                   help="comma-separated rho values (default %(default)s)")
    p.add_argument("--repeats", type=int, default=10, help="timed repeats per cell (default 10)")
    p.add_argument("--eps", type=float, default=1e-6, help="duality-gap tolerance (default 1e-6)")
    p.add_argument("--max-epochs", type=int, default=100_000)
    p.add_argument("--fmin", type=int, default=0)
    p.add_argument("--screen-every", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="tag recorded with the runs")
    p.add_argument("--parallel", action="store_true",
                   help="spread cells across threads (RSVM_THREADS caps workers); timings contended")
    p.add_argument("--records-out", default="records.csv")
    p.add_argument("--summary-out", default="summary.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-data", help="write a synthetic two-Gaussian dataset in LIBSVM format")
    p.add_argument("--n", type=int, required=True, help="number of samples (even)")
    p.add_argument("--d", type=int, required=True, help="feature dimension")
    p.add_argument("--sep", type=float, default=3.0, help="class-mean separation (default 3.0)")
    p.add_argument("--noise-std", type=float, default=1.0, help="isotropic noise std (default 1.0)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="data.libsvm", help="output path (default data.libsvm)")
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
