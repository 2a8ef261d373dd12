"""Sequential comparison policy: Pod-Match order assignment, then Demand pod selection."""

from __future__ import annotations

from collections import Counter
from typing import Iterable

from .core import WarehouseState


def _station_skus(state: WarehouseState, station_id: int) -> frozenset[int]:
    st = next(s for s in state.stations if s.id == station_id)
    pods = {p.id: p.skus for p in state.pods}
    return frozenset().union(*(pods[p] for p in st.pods)) if st.pods else frozenset()


def pod_match_poa(state: WarehouseState) -> list[tuple[int, int]]:
    """Fill free station capacity with backlog orders, round-robin by station id.

    Each turn a station takes the fitting order with the most lines on pods at or
    heading to it (ties: lower order id). Stops once no order fits anywhere.
    """
    free = {s.id: s.free_capacity for s in state.stations}
    skus = {s.id: _station_skus(state, s.id) for s in state.stations}
    left = sorted(state.backlog, key=lambda o: o.id)
    out = []
    progress = True
    while left and progress:
        progress = False
        for sid in sorted(free):
            fitting = [o for o in left if o.size <= free[sid]]
            if not fitting:
                continue
            best = max(fitting, key=lambda o: (len(o.lines & skus[sid]), -o.id))
            out.append((best.id, sid))
            free[sid] -= best.size
            left.remove(best)
            progress = True
            if not left:
                break
    return out


def backlog_demand(lines: Iterable[int]) -> Counter:
    """Units demanded per SKU over a collection of unfulfilled lines."""
    return Counter(lines)


def demand_pps(state: WarehouseState, station_id: int, open_skus: Iterable[int],
               demand: Counter | None = None) -> int | None:
    """Pod for ``station_id`` serving at least one of ``open_skus`` with the largest
    total demand; None when no such pod exists (the caller waits).

    ``open_skus`` are SKUs of open requests at the station that no pod at or on
    its way to it holds. ``demand`` counts unfulfilled lines per SKU over all
    orders; by default it is derived from the state's backlog.
    """
    open_skus = frozenset(open_skus)
    if demand is None:
        demand = backlog_demand(i for o in state.backlog for i in o.lines)
    st = next(s for s in state.stations if s.id == station_id)
    taken = set(st.pods)
    best, best_score = None, -1
    for p in sorted(state.pods, key=lambda p: p.id):
        if p.id in taken or not p.skus & open_skus:
            continue
        score = sum(demand[i] for i in p.skus)
        if score > best_score:
            best, best_score = p.id, score
    return best
