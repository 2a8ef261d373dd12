"""Solver time against pod-station visits for several prefilter sizes."""

import argparse
from pathlib import Path

from rmfs_poa.experiment import (TRADEOFF_COLUMNS, aggregate, desk_config, prefilter_tradeoff,
                                 read_rows, rows_to_csv, run_experiment)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="5,10,15")
    ap.add_argument("--instances", type=int, default=10)
    ap.add_argument("--out", default="out/prefilter")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    sizes = (None,) + tuple(int(x) for x in args.sizes.split(","))
    cfg = desk_config(seeds=args.instances, prefilter=sizes)
    text = rows_to_csv(run_experiment(cfg, workers=args.workers))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(text)
    trade = prefilter_tradeoff(aggregate(read_rows(text)))
    (out / "tradeoff.csv").write_text(rows_to_csv(trade, TRADEOFF_COLUMNS))
    for r in trade:
        print(f"{r['method']:>15} n={r['prefilter']:>3}  time x{r['time_rel']:.2f}  psv x{r['psv_rel']:.3f}")


if __name__ == "__main__":
    main()
