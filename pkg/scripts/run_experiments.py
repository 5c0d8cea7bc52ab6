#!/usr/bin/env python3
"""Run the perturbation and cross-language experiment grids.

Writes report_<mode>.csv plus one SVG per (language, training size) under
the output directory, then prints per-cell perplexities with the two ratios
the experiments are judged by: validation/train and test/validation.
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from playlab.experiment import (
    ExperimentSpec,
    emit_figure,
    emit_report,
    run_cross_language_experiment,
    run_perturbation_experiment,
)

RUNNERS = {
    "perturb": run_perturbation_experiment,
    "cross": run_cross_language_experiment,
}


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grid", choices=["desk", "full"], default="desk",
                        help="desk: orders 1-2, hidden 128, 4 epochs; "
                             "full: orders 1-3, 10k/100k, hidden 200, 13 epochs")
    parser.add_argument("--mode", choices=["both", "perturb", "cross"], default="both")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--epochs", type=int, help="override the grid's epoch count")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    spec = ExperimentSpec.full(args.seed) if args.grid == "full" else ExperimentSpec.desk(args.seed)
    if args.epochs:
        spec = replace(spec, epochs=args.epochs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    modes = ["perturb", "cross"] if args.mode == "both" else [args.mode]
    failed = False
    for mode in modes:
        start = time.time()
        report = RUNNERS[mode](spec, threads=args.threads,
                               progress=lambda msg: print(msg, file=sys.stderr))
        csv_path = emit_report(report, out_dir / f"report_{mode}.csv")
        figures = emit_figure(report, out_dir / mode)
        print(f"\n{mode}: {len(report.cells)} cells in {time.time() - start:.0f}s")
        print(f"  report  {csv_path}")
        for path in figures:
            print(f"  figure  {path}")
        for cell in report.cells:
            print(f"  {cell.label()}: train={cell.train_ppl:.3f} "
                  f"validation={cell.validation_ppl:.3f} test={cell.test_ppl:.3f} "
                  f"(val/train={cell.validation_over_train:.2f}, "
                  f"test/val={cell.test_over_validation:.2f})")
        for label, message in report.failures:
            failed = True
            print(f"  FAILED {label}: {message}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
