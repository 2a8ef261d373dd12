"""Experiment grids: methods x instances x repetitions, CSV rows and aggregated reports."""

from __future__ import annotations

import csv
import io as _io
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .instances import InstanceParams, Layout, desk_layout, gen_instance
from .io import layout_from_dict, layout_to_dict
from .sim import POLICIES, TIE_BREAKS, SimError, SimParams, run
from .solver import SolverConfig

WORKERS_ENV = "RMFS_WORKERS"
CONFIG_SCHEMA = "rmfs-poa/experiment/1"

INSTANCE_COLUMNS = ("num_orders", "num_skus", "num_pods", "skus_per_pod", "instance_seed")
RESULT_COLUMNS = (
    "method", "prefilter", "seed", "status", "orders", "completed_orders", "psv", "picks",
    "psv_per_order", "distance_per_order", "pile_on", "turnover_backlog", "turnover_station",
    "turnover", "periods", "solver_nodes", "solver_time_t1", "solver_time_rest", "sim_time",
    "psv_rel", "distance_rel",
)
COLUMNS = INSTANCE_COLUMNS + RESULT_COLUMNS
METRICS = ("psv_per_order", "distance_per_order", "pile_on", "turnover_backlog",
           "turnover_station", "turnover", "solver_time_t1", "solver_time_rest")
WALL_COLUMNS = ("solver_time_t1", "solver_time_rest")


@dataclass(frozen=True)
class ExperimentConfig:
    instances: tuple[InstanceParams, ...]
    layout: Layout = field(default_factory=desk_layout)
    methods: tuple[str, ...] = POLICIES
    repetitions: int = 10
    seed_base: int = 0
    # None means the whole backlog; sequential runs ignore this sweep
    prefilter: tuple[int | None, ...] = (None,)
    node_limit: int = 20_000
    tie_break: str = "distance"
    wall_time: bool = True

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "prefilter", tuple(self.prefilter))
        bad = [m for m in self.methods if m not in POLICIES]
        if bad:
            raise ValueError(f"unknown methods {bad}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(n is not None and n < 1 for n in self.prefilter):
            raise ValueError("prefilter sizes must be >= 1")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")

    def tasks(self) -> list[tuple]:
        out = []
        for params in self.instances:
            for method in self.methods:
                sweep = (None,) if method == "sequential" else self.prefilter
                for n in sweep:
                    for rep in range(self.repetitions):
                        out.append((params, method, n, self.seed_base + rep))
        return out


def desk_config(seeds: int = 10, **kw) -> ExperimentConfig:
    """Ten 20-order instances on the two-station desk layout, one repetition each."""
    kw.setdefault("repetitions", 1)
    return ExperimentConfig(
        instances=tuple(InstanceParams(20, 20, 30, 2, seed=s) for s in range(seeds)), **kw)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["instances"] = [asdict(p) for p in cfg.instances]
    d["layout"] = layout_to_dict(cfg.layout)
    d["methods"] = list(cfg.methods)
    d["prefilter"] = list(cfg.prefilter)
    return {"schema": CONFIG_SCHEMA, **d}


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict) or doc.get("schema") != CONFIG_SCHEMA:
        raise ValueError(f"expected schema {CONFIG_SCHEMA!r}")
    doc = dict(doc)
    doc.pop("schema")
    try:
        doc["instances"] = tuple(InstanceParams(**p) for p in doc["instances"])
        if "layout" in doc:
            doc["layout"] = layout_from_dict(doc["layout"])
        return ExperimentConfig(**doc)
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed experiment config: {e}") from e


def _run_one(cfg: ExperimentConfig, task) -> dict:
    params, method, n, seed = task
    row = {"num_orders": params.num_orders, "num_skus": params.num_skus,
           "num_pods": params.num_pods, "skus_per_pod": params.skus_per_pod,
           "instance_seed": params.seed, "method": method,
           "prefilter": "" if n is None else n, "seed": seed}
    sim_params = SimParams(solver=SolverConfig(node_limit=cfg.node_limit), prefilter=n,
                           tie_break=cfg.tie_break, check_every_event=False)
    try:
        inst = gen_instance(params, cfg.layout)
        rep = run(inst, cfg.layout, method, sim_params, seed=seed)
    except (SimError, ValueError) as e:
        row["status"] = f"error: {e}".replace("\n", " ")
        return row
    r = rep.row()
    r.pop("method")
    r.pop("seed")
    row.update(r, status="ok")
    if not cfg.wall_time:
        for c in WALL_COLUMNS:
            row[c] = ""
    return row


def _sort_key(row: dict):
    return (tuple(row[c] for c in INSTANCE_COLUMNS), POLICIES.index(row["method"]),
            -1 if row["prefilter"] == "" else row["prefilter"], row["seed"])


def normalise(rows: list[dict]):
    """Fill psv_rel / distance_rel relative to the sequential run of the same instance and seed."""
    base = {}
    for r in rows:
        if r["method"] == "sequential" and r.get("status") == "ok":
            base[(tuple(r[c] for c in INSTANCE_COLUMNS), r["seed"])] = r
    for r in rows:
        b = base.get((tuple(r[c] for c in INSTANCE_COLUMNS), r["seed"]))
        for col, rel in (("psv_per_order", "psv_rel"), ("distance_per_order", "distance_rel")):
            if b is None or r.get("status") != "ok" or not b[col]:
                r[rel] = ""
            elif r is b:
                r[rel] = 1.0
            else:
                r[rel] = round(r[col] / b[col], 6)


def workers_from_env() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None, progress=None) -> list[dict]:
    tasks = cfg.tasks()
    workers = workers_from_env() if workers is None else max(1, workers)
    rows = []
    if workers == 1:
        for k, t in enumerate(tasks):
            rows.append(_run_one(cfg, t))
            if progress:
                progress(k + 1, len(tasks), rows[-1])
    else:
        with ProcessPoolExecutor(workers) as pool:
            for k, row in enumerate(pool.map(_run_one, [cfg] * len(tasks), tasks)):
                rows.append(row)
                if progress:
                    progress(k + 1, len(tasks), row)
    rows.sort(key=_sort_key)
    normalise(rows)
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def rows_to_csv(rows: list[dict], columns=COLUMNS) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


# ----- report ---------------------------------------------------------------------

GROUP_COLUMNS = ("num_orders", "num_skus", "num_pods", "skus_per_pod", "method", "prefilter")


def read_rows(text: str) -> list[dict]:
    reader = csv.DictReader(_io.StringIO(text))
    if reader.fieldnames is None:
        raise ValueError("empty CSV")
    missing = [c for c in GROUP_COLUMNS + ("status",) + METRICS if c not in reader.fieldnames]
    if missing:
        raise ValueError(f"CSV lacks columns {missing}")
    rows = []
    for k, r in enumerate(reader, start=2):
        if None in r or any(v is None for v in r.values()):
            raise ValueError(f"line {k}: wrong number of fields")
        if r["status"] != "ok":
            continue
        try:
            for m in METRICS:
                r[m] = float(r[m]) if r[m] != "" else math.nan
        except ValueError as e:
            raise ValueError(f"line {k}: {e}") from e
        rows.append(r)
    return rows


def _mean_std(xs: list[float]) -> tuple[float, float]:
    xs = [x for x in xs if not math.isnan(x)]
    if not xs:
        return math.nan, math.nan
    return statistics.fmean(xs), (statistics.stdev(xs) if len(xs) > 1 else 0.0)


def aggregate(rows: list[dict]) -> list[dict]:
    """Mean and sample standard deviation per (instance set, method, prefilter), plus the
    ratio of each mean to the sequential mean of the same instance set."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault(tuple(r[c] for c in GROUP_COLUMNS), []).append(r)
    out = []
    for key, rs in groups.items():
        g = dict(zip(GROUP_COLUMNS, key), runs=len(rs))
        for m in METRICS:
            g[f"{m}_mean"], g[f"{m}_std"] = _mean_std([r[m] for r in rs])
        out.append(g)
    seq = {tuple(g[c] for c in GROUP_COLUMNS[:4]): g for g in out if g["method"] == "sequential"}
    for g in out:
        b = seq.get(tuple(g[c] for c in GROUP_COLUMNS[:4]))
        for m in METRICS:
            mean = g[f"{m}_mean"]
            base = b[f"{m}_mean"] if b else math.nan
            if b is g:
                g[f"{m}_ratio"] = 1.0
            elif b is None or math.isnan(mean) or math.isnan(base) or base == 0:
                g[f"{m}_ratio"] = math.nan
            else:
                g[f"{m}_ratio"] = mean / base
    order = {m: k for k, m in enumerate(POLICIES)}
    out.sort(key=lambda g: (tuple(int(g[c]) for c in GROUP_COLUMNS[:4]),
                            order.get(g["method"], 99),
                            -1 if g["prefilter"] == "" else int(g["prefilter"])))
    return out


def summary_columns() -> tuple[str, ...]:
    cols = list(GROUP_COLUMNS) + ["runs"]
    for m in METRICS:
        cols += [f"{m}_mean", f"{m}_std", f"{m}_ratio"]
    return tuple(cols)


def plot_rows(summary: list[dict]) -> list[dict]:
    """Long format: one row per (group, metric) for relative bar charts."""
    out = []
    for g in summary:
        label = "n{num_orders}_i{num_skus}_p{num_pods}_a{skus_per_pod}".format(**g)
        for m in METRICS:
            out.append({"instance_set": label, "method": g["method"], "prefilter": g["prefilter"],
                        "metric": m, "mean": g[f"{m}_mean"], "std": g[f"{m}_std"],
                        "ratio": g[f"{m}_ratio"]})
    return out


PLOT_COLUMNS = ("instance_set", "method", "prefilter", "metric", "mean", "std", "ratio")


def prefilter_tradeoff(summary: list[dict]) -> list[dict]:
    """Solver time against PSV for each prefilter size, relative to the unfiltered run."""
    full = {}
    for g in summary:
        if g["method"] != "sequential" and g["prefilter"] == "":
            full[(tuple(g[c] for c in GROUP_COLUMNS[:4]), g["method"])] = g
    out = []
    for g in summary:
        if g["method"] == "sequential" or g["prefilter"] == "":
            continue
        b = full.get((tuple(g[c] for c in GROUP_COLUMNS[:4]), g["method"]))
        if b is None:
            continue
        t = g["solver_time_t1_mean"] + g["solver_time_rest_mean"]
        tb = b["solver_time_t1_mean"] + b["solver_time_rest_mean"]
        out.append({**{c: g[c] for c in GROUP_COLUMNS},
                    "time_rel": t / tb if tb else math.nan,
                    "psv_rel": g["psv_per_order_mean"] / b["psv_per_order_mean"]
                    if b["psv_per_order_mean"] else math.nan})
    return out


TRADEOFF_COLUMNS = GROUP_COLUMNS + ("time_rel", "psv_rel")

