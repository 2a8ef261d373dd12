"""Domain types shared across the package and solver-independent validators.

Pod inventories are SKU-presence sets: a pod holding SKU ``i`` can serve any
number of lines for ``i``. Every order line has quantity one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

VARIANTS = ("integrated", "split_stations", "split_time")


class PodStatus(str, Enum):
    STORED = "stored"
    EN_ROUTE = "en_route"
    AT_STATION = "at_station"


@dataclass(frozen=True)
class Order:
    id: int
    lines: frozenset[int]
    arrival_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lines", frozenset(self.lines))

    @property
    def size(self) -> int:
        return len(self.lines)


@dataclass(frozen=True)
class Pod:
    id: int
    skus: frozenset[int]
    status: PodStatus = PodStatus.STORED
    station: int | None = None
    cell: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "skus", frozenset(self.skus))
        object.__setattr__(self, "status", PodStatus(self.status))


@dataclass(frozen=True)
class Station:
    """A picking station as seen by one planning period.

    ``free_capacity`` is the item capacity C_s available to the model this
    period; ``item_capacity`` is the station's total. ``pods`` lists the pods
    at the station or on their way to it.
    """

    id: int
    item_capacity: int
    free_capacity: int | None = None
    queue_length: int = 12
    pods: tuple[int, ...] = ()
    cell: tuple[int, int] | None = None

    def __post_init__(self):
        if self.free_capacity is None:
            object.__setattr__(self, "free_capacity", self.item_capacity)
        object.__setattr__(self, "pods", tuple(self.pods))


@dataclass(frozen=True)
class WarehouseState:
    """Snapshot handed to the POA/PPS models at the start of a period.

    ``backlog`` holds orders with at least one unassigned line. For the
    split-over-time policy an order that already had lines assigned enters
    as a residual order (only its unassigned lines) and its id is listed in
    ``partially_assigned``. ``active_splits`` is the packing tracker n_l.
    """

    stations: tuple[Station, ...]
    pods: tuple[Pod, ...]
    backlog: tuple[Order, ...]
    period: int = 1
    partially_assigned: frozenset[int] = frozenset()
    active_splits: int = 0

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "pods", tuple(self.pods))
        object.__setattr__(self, "backlog", tuple(self.backlog))
        object.__setattr__(self, "partially_assigned", frozenset(self.partially_assigned))

    def pod(self, pod_id: int) -> Pod:
        for p in self.pods:
            if p.id == pod_id:
                return p
        raise KeyError(pod_id)

    def order(self, order_id: int) -> Order:
        for o in self.backlog:
            if o.id == order_id:
                return o
        raise KeyError(order_id)

    def pods_with_sku(self, sku: int) -> list[int]:
        return [p.id for p in self.pods if sku in p.skus]

    def forced_pods(self) -> dict[int, tuple[int, ...]]:
        return {s.id: s.pods for s in self.stations}


@dataclass(frozen=True)
class Assignment:
    """Decoded POA/PPS decision for one period.

    Binary variables are stored as the set of index tuples whose value is one.
    """

    pod_station: frozenset[tuple[int, int]] = frozenset()
    order_station: frozenset[tuple[int, int]] = frozenset()
    line_station: frozenset[tuple[int, int, int]] = frozenset()
    unused: Mapping[int, int] = field(default_factory=dict)
    assigned_orders: frozenset[int] = frozenset()
    deferred: frozenset[tuple[int, int]] = frozenset()
    extra_stations: Mapping[int, int] = field(default_factory=dict)
    split_flags: frozenset[int] = frozenset()
    objective_value: int = 0

    def __post_init__(self):
        for name in ("pod_station", "order_station", "line_station",
                     "assigned_orders", "deferred", "split_flags"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        object.__setattr__(self, "unused", dict(self.unused))
        object.__setattr__(self, "extra_stations", dict(self.extra_stations))

    def lines_at(self, station: int) -> list[tuple[int, int]]:
        return sorted((o, i) for o, i, s in self.line_station if s == station)

    def pods_at(self, station: int) -> list[int]:
        return sorted(p for p, s in self.pod_station if s == station)


@dataclass(frozen=True)
class ModelParams:
    unused_weight: int = 2
    packing_capacity: int | None = None  # None = unlimited
    station_count: int | None = None  # N; defaults to |S|

    def __post_init__(self):
        if self.unused_weight < 1:
            raise ValueError("unused_weight must be >= 1")


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: tuple
    message: str

    def __str__(self):
        return f"{self.kind}{self.subject}: {self.message}"


def validate_state(state: WarehouseState) -> list[Violation]:
    out: list[Violation] = []
    pod_ids = [p.id for p in state.pods]
    station_ids = [s.id for s in state.stations]
    if len(set(pod_ids)) != len(pod_ids):
        out.append(Violation("DuplicateId", ("pod",), "pod ids are not unique"))
    if len(set(station_ids)) != len(station_ids):
        out.append(Violation("DuplicateId", ("station",), "station ids are not unique"))
    order_ids = [o.id for o in state.backlog]
    if len(set(order_ids)) != len(order_ids):
        out.append(Violation("DuplicateId", ("order",), "order ids are not unique"))

    listed: dict[int, list[int]] = {}
    for s in state.stations:
        if not 0 <= s.free_capacity <= s.item_capacity:
            out.append(Violation("Capacity", (s.id,),
                                 f"free capacity {s.free_capacity} outside [0, {s.item_capacity}]"))
        if len(s.pods) > s.queue_length:
            out.append(Violation("QueueOverflow", (s.id,),
                                 f"{len(s.pods)} pods exceed queue length {s.queue_length}"))
        for p in s.pods:
            listed.setdefault(p, []).append(s.id)
    by_id = {p.id: p for p in state.pods}
    for pid, stations in sorted(listed.items()):
        pod = by_id.get(pid)
        if pod is None:
            out.append(Violation("UnknownPod", (pid,), "station lists an unknown pod"))
            continue
        if len(set(stations)) != len(stations):
            out.append(Violation("PodLocation", (pid,), f"pod listed twice at {stations}"))
        if pod.status == PodStatus.STORED:
            out.append(Violation("PodLocation", (pid,),
                                 f"pod is stored but listed at station {stations[0]}"))
        elif pod.station not in stations:
            # a pod may be on its way to several stations; its next stop must be one of them
            out.append(Violation("PodLocation", (pid,),
                                 f"pod heads to {pod.station} but is listed at {stations}"))
    for pod in state.pods:
        if pod.status != PodStatus.STORED and pod.id not in listed:
            out.append(Violation("PodLocation", (pod.id,),
                                 f"pod is {pod.status.value} but no station lists it"))

    available = set().union(*(p.skus for p in state.pods)) if state.pods else set()
    max_cap = max((s.item_capacity for s in state.stations), default=0)
    for o in state.backlog:
        if not o.lines:
            out.append(Violation("EmptyOrder", (o.id,), "order has no lines"))
        if o.size > max_cap:
            out.append(Violation("MaxOrderSize", (o.id,),
                                 f"{o.size} lines exceed largest station capacity {max_cap}"))
        missing = sorted(o.lines - available)
        if missing:
            out.append(Violation("SkuUnavailable", (o.id,), f"SKUs {missing} are in no pod"))
    bad = sorted(state.partially_assigned - set(order_ids))
    if bad:
        out.append(Violation("UnknownOrder", tuple(bad), "partially assigned orders not in backlog"))
    if state.active_splits < 0:
        out.append(Violation("PackingTracker", (), "active split count is negative"))
    return out


def _check(out, cond, kind, subject, message):
    if not cond:
        out.append(Violation(kind, subject, message))


def validate_assignment(state: WarehouseState, assignment: Assignment, variant: str,
                        params: ModelParams | None = None) -> list[Violation]:
    """Check every constraint of ``variant`` directly on a decoded assignment."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    params = params or ModelParams()
    a = assignment
    out: list[Violation] = []
    orders = {o.id: o for o in state.backlog}
    stations = {s.id: s for s in state.stations}
    pods = {p.id: p for p in state.pods}

    for p, s in a.pod_station:
        _check(out, p in pods and s in stations, "UnknownIndex", (p, s), "x references unknown ids")
    for o, s in a.order_station:
        _check(out, o in orders and s in stations, "UnknownIndex", (o, s), "y_os references unknown ids")
    for o, i, s in a.line_station:
        ok = o in orders and s in stations and i in orders[o].lines
        _check(out, ok, "UnknownIndex", (o, i, s), "y_ios references an unknown line")
    for o, i in a.deferred:
        _check(out, o in orders and i in orders[o].lines, "UnknownIndex", (o, i),
               "y_b references an unknown line")
    if out:
        return out

    stations_of: dict[int, set[int]] = {}
    for o, s in a.order_station:
        stations_of.setdefault(o, set()).add(s)
    line_count: dict[tuple[int, int], int] = {}
    for o, i, s in a.line_station:
        line_count[(o, i)] = line_count.get((o, i), 0) + 1

    # assigned items plus unused capacity equal the free capacity
    for s in stations.values():
        load = sum(1 for _, _, t in a.line_station if t == s.id)
        u = a.unused.get(s.id, 0)
        _check(out, u >= 0, "Capacity", (s.id,), f"unused capacity {u} is negative")
        _check(out, load + u == s.free_capacity, "Capacity", (s.id,),
               f"{load} items + {u} unused != capacity {s.free_capacity}")
    # every assigned line has a pod carrying its SKU at the same station
    for o, i, s in sorted(a.line_station):
        ok = any((p, s) in a.pod_station for p in state.pods_with_sku(i))
        _check(out, ok, "Coverage", (o, i, s), f"no pod with SKU {i} assigned to station {s}")
    for s in stations.values():
        for p in s.pods:
            _check(out, (p, s.id) in a.pod_station, "ForcedPod", (p, s.id),
                   "pod at or heading to the station must stay assigned")

    if variant == "integrated":
        for (o, s) in sorted(a.order_station):
            for i in sorted(orders[o].lines):
                _check(out, (o, i, s) in a.line_station, "OrderIntegrity", (o, i, s),
                       "assigned order is missing a line at its station")
        for o, i, s in sorted(a.line_station):
            _check(out, (o, s) in a.order_station, "OrderIntegrity", (o, i, s),
                   "line assigned without its order")
        for o, ss in sorted(stations_of.items()):
            _check(out, len(ss) <= 1, "SingleStation", (o,),
                   f"order assigned to {len(ss)} stations")
        for o in sorted(a.assigned_orders):
            _check(out, o in stations_of, "OrderActive", (o,), "y_o set for an unassigned order")
        _check(out, not a.deferred, "Deferral", (), "integrated model cannot defer lines")
    else:
        for o, i, s in sorted(a.line_station):
            _check(out, (o, s) in a.order_station, "OrderStation", (o, i, s),
                   "line assigned to a station its order is not assigned to")
        for o, s in sorted(a.order_station):
            _check(out, o in a.assigned_orders, "OrderActive", (o, s), "y_os set while y_o is 0")
            _check(out, any(t == s and q == o for q, _, t in a.line_station), "EmptyOrderStation",
                   (o, s), "order assigned to a station without any of its lines")
        for o in sorted(a.assigned_orders):
            _check(out, o in orders, "UnknownIndex", (o,), "y_o references unknown order")
        for o in sorted(orders):
            active = 1 if o in a.assigned_orders else 0
            n_st = len(stations_of.get(o, ()))
            e = a.extra_stations.get(o, 0)
            _check(out, e >= 0, "ExtraStations", (o,), "e_o is negative")
            if params.packing_capacity is None:
                _check(out, n_st >= active, "OrderActive", (o,), "active order has no station")
            else:
                _check(out, n_st - e == active, "ExtraStations", (o,),
                       f"{n_st} stations - e_o {e} != y_o {active}")
            for i in sorted(orders[o].lines):
                lhs = line_count.get((o, i), 0)
                if variant == "split_time":
                    lhs += 1 if (o, i) in a.deferred else 0
                _check(out, lhs == active, "LineCompleteness", (o, i),
                       f"line appears {lhs} times but y_o = {active}")
        if variant == "split_stations":
            _check(out, not a.deferred, "Deferral", (), "split-among-stations cannot defer lines")
        if params.packing_capacity is not None:
            n_st_total = params.station_count or len(stations)
            for o in sorted(orders):
                e = a.extra_stations.get(o, 0)
                flag = 1 if o in a.split_flags else 0
                if variant == "split_time" and o not in state.partially_assigned:
                    if any((o, i) in a.deferred for i in orders[o].lines):
                        _check(out, flag == 1, "SplitFlag", (o,), "deferred lines need y_l = 1")
                if o in state.partially_assigned:
                    continue
                _check(out, n_st_total * flag >= e, "SplitFlag", (o,), "e_o > 0 requires y_l = 1")
                n_def = sum(1 for i in orders[o].lines if (o, i) in a.deferred)
                _check(out, flag <= e + n_def, "SplitFlag", (o,), "y_l = 1 for an order that is not split")
            total = state.active_splits + len(a.split_flags)
            _check(out, total <= params.packing_capacity, "PackingCapacity", (),
                   f"{total} split orders exceed packing capacity {params.packing_capacity}")

    expected = len(a.pod_station) + params.unused_weight * sum(a.unused.get(s, 0) for s in stations)
    _check(out, a.objective_value == expected, "Objective", (),
           f"objective {a.objective_value} != pods + W_u * unused = {expected}")
    return out


def max_item_capacity(stations: Iterable[Station]) -> int:
    return max((s.item_capacity for s in stations), default=0)
