"""JSON files for instances, layouts, warehouse states and assignments.

Every document carries a top-level ``schema`` string ``rmfs-poa/<kind>/<version>``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, fields
from pathlib import Path

from .core import Assignment, Order, Pod, PodStatus, Station, WarehouseState
from .instances import Instance, InstanceParams, Layout

VERSION = 1


def _schema(kind: str) -> str:
    return f"rmfs-poa/{kind}/{VERSION}"


def _expect(doc: dict, kind: str):
    if not isinstance(doc, dict) or doc.get("schema") != _schema(kind):
        got = doc.get("schema") if isinstance(doc, dict) else type(doc).__name__
        raise ValueError(f"expected schema {_schema(kind)!r}, got {got!r}")


def _order(d) -> Order:
    return Order(int(d["id"]), frozenset(int(i) for i in d["lines"]), float(d.get("arrival_time", 0.0)))


def _order_doc(o: Order) -> dict:
    return {"id": o.id, "lines": sorted(o.lines), "arrival_time": o.arrival_time}


def instance_to_dict(inst: Instance) -> dict:
    return {
        "schema": _schema("instance"),
        "params": asdict(inst.params),
        "skus": list(inst.skus),
        "orders": [_order_doc(o) for o in inst.orders],
        "pods": [sorted(p) for p in inst.pods],
    }


def instance_from_dict(doc: dict) -> Instance:
    _expect(doc, "instance")
    try:
        params = InstanceParams(**doc["params"])
        return Instance(params, tuple(int(i) for i in doc["skus"]),
                        tuple(_order(o) for o in doc["orders"]),
                        tuple(frozenset(int(i) for i in p) for p in doc["pods"]))
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed instance: {e}") from e


def layout_to_dict(layout: Layout) -> dict:
    d = asdict(layout)
    d["station_open_at"] = list(layout.station_open_at)
    d["station_capacities"] = list(layout.station_capacities)
    return {"schema": _schema("layout"), **d}


def layout_from_dict(doc: dict) -> Layout:
    _expect(doc, "layout")
    names = {f.name for f in fields(Layout)}
    unknown = set(doc) - names - {"schema"}
    if unknown:
        raise ValueError(f"unknown layout fields {sorted(unknown)}")
    return Layout(**{k: v for k, v in doc.items() if k in names})


def state_to_dict(state: WarehouseState) -> dict:
    return {
        "schema": _schema("state"),
        "period": state.period,
        "stations": [{"id": s.id, "item_capacity": s.item_capacity,
                      "free_capacity": s.free_capacity, "queue_length": s.queue_length,
                      "pods": list(s.pods)} for s in state.stations],
        "pods": [{"id": p.id, "skus": sorted(p.skus), "status": p.status.value,
                  "station": p.station} for p in state.pods],
        "backlog": [_order_doc(o) for o in state.backlog],
        "partially_assigned": sorted(state.partially_assigned),
        "active_splits": state.active_splits,
    }


def state_from_dict(doc: dict) -> WarehouseState:
    _expect(doc, "state")
    try:
        stations = tuple(Station(int(s["id"]), int(s["item_capacity"]), s.get("free_capacity"),
                                 int(s.get("queue_length", 12)), tuple(s.get("pods", ())))
                         for s in doc["stations"])
        pods = tuple(Pod(int(p["id"]), frozenset(p["skus"]), PodStatus(p.get("status", "stored")),
                         p.get("station")) for p in doc["pods"])
        return WarehouseState(stations, pods, tuple(_order(o) for o in doc["backlog"]),
                              int(doc.get("period", 1)),
                              frozenset(doc.get("partially_assigned", ())),
                              int(doc.get("active_splits", 0)))
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed state: {e}") from e


def assignment_to_dict(a: Assignment) -> dict:
    return {
        "schema": _schema("assignment"),
        "objective": a.objective_value,
        "pod_station": sorted(map(list, a.pod_station)),
        "order_station": sorted(map(list, a.order_station)),
        "line_station": sorted(map(list, a.line_station)),
        "unused": {str(k): v for k, v in sorted(a.unused.items())},
        "assigned_orders": sorted(a.assigned_orders),
        "deferred": sorted(map(list, a.deferred)),
        "extra_stations": {str(k): v for k, v in sorted(a.extra_stations.items())},
        "split_flags": sorted(a.split_flags),
    }


def assignment_from_dict(doc: dict) -> Assignment:
    _expect(doc, "assignment")
    return Assignment(
        pod_station=frozenset(tuple(x) for x in doc["pod_station"]),
        order_station=frozenset(tuple(x) for x in doc["order_station"]),
        line_station=frozenset(tuple(x) for x in doc["line_station"]),
        unused={int(k): v for k, v in doc["unused"].items()},
        assigned_orders=frozenset(doc["assigned_orders"]),
        deferred=frozenset(tuple(x) for x in doc["deferred"]),
        extra_stations={int(k): v for k, v in doc["extra_stations"].items()},
        split_flags=frozenset(doc["split_flags"]),
        objective_value=doc["objective"],
    )


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def save(doc: dict, path: str | Path):
    Path(path).write_text(dumps(doc))


def load(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(doc, dict) or "schema" not in doc:
        raise ValueError(f"{path}: missing 'schema' field")
    return doc


def kind_of(doc: dict) -> str:
    parts = str(doc.get("schema", "")).split("/")
    if len(parts) != 3 or parts[0] != "rmfs-poa":
        raise ValueError(f"unrecognised schema {doc.get('schema')!r}")
    if parts[2] != str(VERSION):
        raise ValueError(f"unsupported schema version {parts[2]} (expected {VERSION})")
    return parts[1]
