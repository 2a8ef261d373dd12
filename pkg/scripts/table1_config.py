"""Write an experiment config for the 24-instance grid on the full-size layout.

Full-scale runs take hours with the pure-Python solver; start small with
--orders 50 and --repetitions 1. Run it with `rmfs-poa experiment CONFIG`.
"""

import argparse

from rmfs_poa.experiment import ExperimentConfig, config_to_dict
from rmfs_poa.instances import Layout, table1_params
from rmfs_poa.io import dumps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", type=int, nargs="*", help="keep only these order counts")
    ap.add_argument("--repetitions", type=int, default=10)
    ap.add_argument("--prefilter", type=int, default=None)
    ap.add_argument("--out", default="table1.json")
    args = ap.parse_args()
    grid = [p for p in table1_params() if not args.orders or p.num_orders in args.orders]
    cfg = ExperimentConfig(instances=tuple(grid), layout=Layout(), repetitions=args.repetitions,
                           prefilter=(args.prefilter,))
    with open(args.out, "w") as f:
        f.write(dumps(config_to_dict(cfg)))
    print(f"{len(grid)} instance sets x {len(cfg.methods)} methods x {args.repetitions} seeds -> {args.out}")


if __name__ == "__main__":
    main()
