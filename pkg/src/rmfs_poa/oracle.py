"""Structural brute force for tiny states, independent of the ILP path.

Enumerates, order by order, every way the variant allows its lines to be
placed (nowhere, one station, several stations, or deferred), keeping per
station only the set of required SKUs and the item load. The cost of a final
configuration is, per station, the forced pods plus an exact minimum set cover
of the remaining SKUs (exhaustive subset search) plus W_u times the slack.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from .core import VARIANTS, Assignment, ModelParams, WarehouseState

MAX_ORDERS = 8
MAX_PODS = 12
MAX_STATIONS = 3
MAX_LINES = 6

_DEFER = -1


def min_cover(pods: dict[int, frozenset[int]], required: frozenset[int],
              exclude: frozenset[int] = frozenset()) -> tuple[int, ...] | None:
    """Smallest set of pods (ties: lexicographically smallest ids) covering ``required``."""
    candidates = sorted(p for p in pods if p not in exclude and pods[p] & required)
    if not required:
        return ()
    for k in range(1, len(candidates) + 1):
        for combo in itertools.combinations(candidates, k):
            if required <= frozenset().union(*(pods[p] for p in combo)):
                return combo
    return None


def _check_size(state: WarehouseState):
    if (len(state.backlog) > MAX_ORDERS or len(state.pods) > MAX_PODS
            or len(state.stations) > MAX_STATIONS
            or any(o.size > MAX_LINES for o in state.backlog)):
        raise ValueError(
            f"state too large for brute force (limits: {MAX_ORDERS} orders, {MAX_PODS} pods, "
            f"{MAX_STATIONS} stations, {MAX_LINES} lines per order)")


def _order_options(order, stations, variant):
    """Yield (placement, per-station SKU sets, per-station loads) for one order.

    ``placement`` maps each line to a station id or _DEFER; None means the order
    stays unassigned.
    """
    lines = sorted(order.lines)
    yield None
    if variant == "integrated":
        placements = [(s,) * len(lines) for s in stations]
    elif variant == "split_stations":
        placements = itertools.product(stations, repeat=len(lines))
    else:
        placements = (pl for pl in itertools.product(list(stations) + [_DEFER], repeat=len(lines))
                      if any(t != _DEFER for t in pl))
    for pl in placements:
        yield dict(zip(lines, pl))


def brute_force_oracle(state: WarehouseState, variant: str,
                       params: ModelParams | None = None) -> tuple[int | None, Assignment | None]:
    """Optimal objective and one optimal assignment, or (None, None) if infeasible."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    _check_size(state)
    params = params or ModelParams()
    w = params.unused_weight
    stations = [s.id for s in state.stations]
    cap = {s.id: s.free_capacity for s in state.stations}
    forced = {s.id: frozenset(s.pods) for s in state.stations}
    pods = {p.id: p.skus for p in state.pods}
    forced_skus = {s: frozenset().union(*(pods[p] for p in forced[s])) if forced[s] else frozenset()
                   for s in stations}
    orders = list(state.backlog)
    limited = params.packing_capacity is not None and variant != "integrated"
    split_budget = (params.packing_capacity - state.active_splits) if limited else None
    if limited and split_budget < 0:
        return None, None

    options = []
    for o in orders:
        opts = []
        for pl in _order_options(o, stations, variant):
            if pl is None:
                opts.append((None, (frozenset(),) * len(stations), (0,) * len(stations), 0))
                continue
            skus = tuple(frozenset(i for i, t in pl.items() if t == s) for s in stations)
            loads = tuple(len(x) for x in skus)
            used = sum(1 for x in loads if x)
            deferred = any(t == _DEFER for t in pl.values())
            is_split = used > 1 or (variant == "split_time" and deferred)
            counts = 1 if (limited and is_split and o.id not in state.partially_assigned) else 0
            opts.append((pl, skus, loads, counts))
        options.append(opts)

    @lru_cache(maxsize=None)
    def cover(s_idx: int, required: frozenset[int]):
        s = stations[s_idx]
        rest = required - forced_skus[s]
        return min_cover(pods, rest, exclude=forced[s])

    def terminal(masks, loads):
        total = 0
        for k, s in enumerate(stations):
            c = cover(k, masks[k])
            if c is None:
                return None
            total += len(forced[s]) + len(c) + w * (cap[s] - loads[k])
        return total

    @lru_cache(maxsize=None)
    def best(k: int, masks: tuple, loads: tuple, splits: int):
        if k == len(orders):
            val = terminal(masks, loads)
            return (val, None) if val is not None else (None, None)
        result = (None, None)
        for n, (pl, skus, add, counts) in enumerate(options[k]):
            new_loads = tuple(a + b for a, b in zip(loads, add))
            if any(new_loads[i] > cap[s] for i, s in enumerate(stations)):
                continue
            if limited and splits + counts > split_budget:
                continue
            new_masks = tuple(m | x for m, x in zip(masks, skus))
            val, _ = best(k + 1, new_masks, new_loads, splits + counts)
            if val is not None and (result[0] is None or val < result[0]):
                result = (val, n)
        return result

    empty = (frozenset(),) * len(stations)
    zero = (0,) * len(stations)
    value, _ = best(0, empty, zero, 0)
    if value is None:
        return None, None

    # replay the optimal choices
    masks, loads, splits = empty, zero, 0
    line_station, order_station, deferred = set(), set(), set()
    assigned, extra, flags = set(), {}, set()
    for k, o in enumerate(orders):
        _, n = best(k, masks, loads, splits)
        pl, skus, add, counts = options[k][n]
        masks = tuple(m | x for m, x in zip(masks, skus))
        loads = tuple(a + b for a, b in zip(loads, add))
        splits += counts
        if pl is None:
            continue
        assigned.add(o.id)
        used = {t for t in pl.values() if t != _DEFER}
        for i, t in pl.items():
            if t == _DEFER:
                deferred.add((o.id, i))
            else:
                line_station.add((o.id, i, t))
        order_station |= {(o.id, s) for s in used}
        if variant != "integrated":
            extra[o.id] = len(used) - 1
        if counts:
            flags.add(o.id)
    pod_station = set()
    for k, s in enumerate(stations):
        pod_station |= {(p, s) for p in forced[s]}
        pod_station |= {(p, s) for p in cover(k, masks[k])}
    assignment = Assignment(
        pod_station=frozenset(pod_station),
        order_station=frozenset(order_station),
        line_station=frozenset(line_station),
        unused={s: cap[s] - loads[k] for k, s in enumerate(stations)},
        assigned_orders=frozenset(assigned),
        deferred=frozenset(deferred),
        extra_stations=extra,
        split_flags=frozenset(flags),
        objective_value=value,
    )
    return value, assignment
