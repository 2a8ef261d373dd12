"""Desk-scale comparison of the four policies (10 instances, 20 orders each).

Writes results.csv, summary.csv and plot data to the output directory.
"""

import argparse
import sys
from pathlib import Path

from rmfs_poa.experiment import (PLOT_COLUMNS, aggregate, desk_config, plot_rows, read_rows,
                                 rows_to_csv, run_experiment, summary_columns)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/desk_trend")
    ap.add_argument("--instances", type=int, default=10)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = desk_config(seeds=args.instances)
    rows = run_experiment(cfg, workers=args.workers,
                          progress=lambda k, n, r: print(f"\r{k}/{n}", end="", file=sys.stderr))
    print(file=sys.stderr)
    text = rows_to_csv(rows)
    (out / "results.csv").write_text(text)
    summary = aggregate(read_rows(text))
    (out / "summary.csv").write_text(rows_to_csv(summary, summary_columns()))
    (out / "plot_relative.csv").write_text(rows_to_csv(plot_rows(summary), PLOT_COLUMNS))
    for g in summary:
        print(f"{g['method']:>15}  psv/order {g['psv_per_order_mean']:.3f} "
              f"({g['psv_per_order_ratio']:.2f}x)  m/order {g['distance_per_order_mean']:.2f}  "
              f"pile-on {g['pile_on_mean']:.2f}")


if __name__ == "__main__":
    main()
