"""Small hand-built warehouses and a random generator of tiny valid states."""

from __future__ import annotations

import numpy as np

from .core import Order, Pod, PodStatus, Station, WarehouseState
from .instances import InstanceParams, Instance, Layout, desk_layout

ORANGE, BLUE = 1, 2


def two_identical_orders(capacity: int = 2) -> WarehouseState:
    """Two stations, two orders {orange, blue}, pod 1 holds orange and pod 2 blue.

    Without splitting each station needs both pods (4 visits); splitting by
    colour needs one pod per station (2 visits).
    """
    return WarehouseState(
        stations=(Station(1, capacity), Station(2, capacity)),
        pods=(Pod(1, {ORANGE}), Pod(2, {BLUE})),
        backlog=(Order(1, {ORANGE, BLUE}), Order(2, {ORANGE, BLUE})),
    )


# four three-line orders; pod 1 starts at station 1 and pod 2 at station 2
P, Q, R, S_, T, U, V, W, Z, M, N, K = range(1, 13)
SHARED_POD_ORDERS = {1: {P, Q, R}, 2: {S_, T, U}, 3: {V, W, Z}, 4: {M, N, K}}
SHARED_POD_PODS = {1: {S_, T, V, W}, 2: {P, Q, M, N}, 3: {P, Q, R, U}, 4: {V, W, Z, K}}


def shared_pod_state(capacity: int = 6) -> WarehouseState:
    """Pod-Match pairs orders (2, 3) and (1, 4), each pair then needs pods 3 and 4
    (6 visits in total); pairing (1, 2) and (3, 4) needs one extra pod per station (4)."""
    pods = [Pod(1, SHARED_POD_PODS[1], PodStatus.AT_STATION, 1),
            Pod(2, SHARED_POD_PODS[2], PodStatus.AT_STATION, 2),
            Pod(3, SHARED_POD_PODS[3]), Pod(4, SHARED_POD_PODS[4])]
    return WarehouseState(
        stations=(Station(1, capacity, pods=(1,)), Station(2, capacity, pods=(2,))),
        pods=tuple(pods),
        backlog=tuple(Order(o, lines) for o, lines in SHARED_POD_ORDERS.items()),
    )


def instance_from_state(state: WarehouseState, name_seed: int = 0) -> Instance:
    """Wrap a fixture's orders and pods as a simulation instance."""
    skus = sorted(set().union(*(p.skus for p in state.pods)))
    pods = sorted(state.pods, key=lambda p: p.id)
    assert [p.id for p in pods] == list(range(1, len(pods) + 1))
    params = InstanceParams(len(state.backlog), max(skus), len(pods),
                            max(len(p.skus) for p in pods), seed=name_seed)
    return Instance(params, tuple(range(1, max(skus) + 1)), tuple(state.backlog),
                    tuple(p.skus for p in pods))


def fixture_layout(num_stations: int = 2, capacity: int = 2, **kw) -> Layout:
    return desk_layout(num_stations=num_stations, item_capacity=capacity,
                       num_robots=kw.pop("num_robots", 2), blocks_x=1, blocks_y=2, **kw)


def random_state(rng: np.random.Generator, max_orders: int = 5, max_pods: int = 8,
                 num_stations: int = 2, num_skus: int = 6, max_lines: int = 3,
                 with_forced: bool = True, residual: bool = False) -> WarehouseState:
    """A tiny state that passes validate_state."""
    n_pods = int(rng.integers(1, max_pods + 1))
    pod_skus = []
    for _ in range(n_pods):
        k = int(rng.integers(1, 4))
        pod_skus.append(frozenset(int(i) for i in rng.choice(np.arange(1, num_skus + 1), k, replace=False)))
    available = sorted(set().union(*pod_skus))
    n_orders = int(rng.integers(0, max_orders + 1))
    orders = []
    for o in range(1, n_orders + 1):
        k = int(rng.integers(1, min(max_lines, len(available)) + 1))
        orders.append(Order(o, frozenset(int(i) for i in rng.choice(available, k, replace=False))))
    stations = []
    taken: set[int] = set()
    pods = [Pod(j + 1, s) for j, s in enumerate(pod_skus)]
    for s in range(1, num_stations + 1):
        cap = max_lines + int(rng.integers(0, 3))
        free = int(rng.integers(0, cap + 1))
        forced = []
        if with_forced and rng.random() < 0.5:
            choices = [p.id for p in pods if p.id not in taken]
            if choices:
                pid = int(rng.choice(choices))
                forced.append(pid)
                taken.add(pid)
                pods[pid - 1] = Pod(pid, pods[pid - 1].skus, PodStatus.AT_STATION, s)
        stations.append(Station(s, cap, free, pods=tuple(forced)))
    partial = frozenset()
    active = 0
    if residual and orders:
        partial = frozenset(o.id for o in orders if rng.random() < 0.3)
        active = len(partial) + int(rng.integers(0, 2))
    return WarehouseState(tuple(stations), tuple(pods), tuple(orders),
                          partially_assigned=partial, active_splits=active)


def late_station_layout(open_at: float = 1.0) -> Layout:
    """Two 2-item stations where station 2 opens after the first decision.

    With two_identical_orders, period 1 sees one open station and period 2 two,
    so only splitting over time gets away with one visit per pod.
    """
    return fixture_layout(2, 2, station_open_at=(0.0, open_at))


FIXTURES = {
    "two-orders": two_identical_orders,
    "shared-pod": shared_pod_state,
}
