"""Restrict a period's backlog to the orders best covered by pods already in play."""

from __future__ import annotations

from fractions import Fraction

from .core import PodStatus, WarehouseState

DEFAULT_N = 10


def coverage_scores(state: WarehouseState) -> dict[int, Fraction]:
    """Share of each order's (residual) lines whose SKU sits on a pod at or en route to a station."""
    active = frozenset().union(*(p.skus for p in state.pods if p.status != PodStatus.STORED)) \
        if state.pods else frozenset()
    return {o.id: Fraction(len(o.lines & active), o.size) for o in state.backlog}


def prefilter(state: WarehouseState, n: int) -> list:
    """Top-``n`` backlog orders by coverage score, ties by ascending id."""
    if n < 1:
        raise ValueError("n must be >= 1")
    scores = coverage_scores(state)
    ranked = sorted(state.backlog, key=lambda o: (-scores[o.id], o.id))
    return ranked[:n]


def restrict(state: WarehouseState, n: int | None) -> WarehouseState:
    """The state with its backlog cut down by :func:`prefilter` (None or 0 keeps it whole)."""
    if not n or len(state.backlog) <= n:
        return state
    keep = sorted(prefilter(state, n), key=lambda o: o.id)
    ids = {o.id for o in keep}
    return WarehouseState(state.stations, state.pods, tuple(keep), state.period,
                          state.partially_assigned & ids, state.active_splits)
