"""Event-driven simulation of the picking process.

Orders are assigned to stations and pods are selected either by the sequential
rules (:mod:`rmfs_poa.baseline`) or by solving one of the integrated models at
every period boundary. Robots fetch pods from storage, carry them along their
station itinerary and store them at the nearest free storage cell. Each pod
that docks at a station is one pod-station visit.

Extraction requests are bound lazily: a docked pod serves every open request
at its station whose SKU it holds. A pod leaves once it holds no SKU of an open
request at the station. An order holds item capacity at a station for all its lines there, picked or
not, until its last request there is picked; the period check runs at that instant,
before the pod's departure decision.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time as _time
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .baseline import demand_pps, pod_match_poa
from .core import Assignment, ModelParams, Order, Pod, PodStatus, Station, WarehouseState, \
    validate_state
from .formulations import build, decode
from .instances import STREAM_JITTER, STREAM_PLACEMENT, Instance, Layout, rng_stream
from .pathing import Grid, Kinematics, ReservationTable, manhattan, plan_path, travel_time
from .prefilter import restrict
from .solver import SolverConfig, solve

TIE_BREAKS = ("demand", "distance", "demand_distance", "none")
POLICIES = ("sequential", "integrated", "split_stations", "split_time")
EVENT_RANK = {"pick-complete": 0, "robot-arrive": 1, "pod-stored": 2, "period-check": 3,
              "task-assigned": 4}


class SimError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimParams:
    model: ModelParams = ModelParams()
    solver: SolverConfig = SolverConfig(node_limit=20_000)
    prefilter: int | None = None  # None or 0 = whole backlog
    window: int = 20
    tie_break: str = "distance"  # secondary preference among optimal solutions, see TIE_BREAKS
    kinematics: Kinematics = Kinematics()
    pick_time: float = 7.0
    trace: bool = False
    check_every_event: bool = True
    max_retries: int = 400
    max_time: float = 1e7
    # (station, pod) pairs docked at time zero, in queue order
    initial_docked: tuple[tuple[int, int], ...] = ()


@dataclass
class ExtractionRequest:
    id: int
    order: int
    sku: int
    station: int
    created_at: float
    pod: int | None = None
    completed_at: float | None = None


@dataclass
class PeriodRecord:
    period: int
    time: float
    backlog: int
    objective: int | None
    status: str
    nodes: int
    wall_time: float


@dataclass
class SimReport:
    policy: str
    seed: int
    pod_station_visits: int
    completed_orders: int
    total_picks: int
    robot_distance: float
    pile_on: Fraction
    turnover: dict[int, tuple[float, float]]  # order -> (backlog part, station part)
    periods: list[PeriodRecord]
    sim_time: float
    num_orders: int
    deadlock_retries: int = 0
    trace: list[tuple[float, str, str, str]] = field(default_factory=list)

    @property
    def psv_per_order(self) -> float:
        return self.pod_station_visits / self.num_orders if self.num_orders else 0.0

    @property
    def distance_per_order(self) -> float:
        return self.robot_distance / self.num_orders if self.num_orders else 0.0

    @property
    def solver_time_first(self) -> float:
        return sum(p.wall_time for p in self.periods if p.period == 1)

    @property
    def solver_time_rest(self) -> float:
        return sum(p.wall_time for p in self.periods if p.period > 1)

    @property
    def solver_nodes(self) -> int:
        return sum(p.nodes for p in self.periods)

    def mean_turnover(self) -> tuple[float, float]:
        if not self.turnover:
            return 0.0, 0.0
        b = sum(v[0] for v in self.turnover.values()) / len(self.turnover)
        s = sum(v[1] for v in self.turnover.values()) / len(self.turnover)
        return b, s

    def row(self) -> dict:
        b, s = self.mean_turnover()
        return {
            "method": self.policy,
            "seed": self.seed,
            "orders": self.num_orders,
            "completed_orders": self.completed_orders,
            "psv": self.pod_station_visits,
            "picks": self.total_picks,
            "psv_per_order": round(self.psv_per_order, 6),
            "distance_per_order": round(self.distance_per_order, 6),
            "pile_on": round(float(self.pile_on), 6),
            "turnover_backlog": round(b, 6),
            "turnover_station": round(s, 6),
            "turnover": round(b + s, 6),
            "periods": len(self.periods),
            "solver_nodes": self.solver_nodes,
            "solver_time_t1": round(self.solver_time_first, 6),
            "solver_time_rest": round(self.solver_time_rest, 6),
            "sim_time": round(self.sim_time, 6),
        }

    def trace_tsv(self) -> str:
        lines = ["time\tkind\tentity\tdetail"]
        lines += [f"{t:.3f}\t{k}\t{e}\t{d}" for t, k, e, d in self.trace]
        return "\n".join(lines) + "\n"


class _OrderState:
    def __init__(self, order: Order):
        self.order = order
        self.unassigned = set(order.lines)
        self.picked = 0
        self.stations: set[int] = set()
        self.assigned_at: float | None = None
        self.completed_at: float | None = None
        self.split = False


class _PodState:
    def __init__(self, pid: int, skus: frozenset[int], cell):
        self.id = pid
        self.skus = skus
        self.cell = cell  # storage cell, None while away from storage
        self.itinerary: deque[int] = deque()
        self.robot: int | None = None
        self.where = "storage"  # storage | pending | carried | queued | leaving
        self.last_station: int | None = None
        self.arrived_at = 0.0


class _RobotState:
    def __init__(self, rid: int, cell):
        self.id = rid
        self.cell = cell  # None while queued at a station
        self.pod: int | None = None
        self.busy = False
        self.leg: tuple | None = None  # (goal, kind)
        self.retries = 0


class _StationState:
    def __init__(self, spec):
        self.spec = spec
        self.id = spec.id
        self.open = spec.open_at <= 0
        self.queue: list[int] = []  # pods in arrival order, head is docked
        self.requests: list[ExtractionRequest] = []
        # order -> items it holds here; held until its last request here is picked
        self.load: Counter = Counter()
        self.unpicked: Counter = Counter()
        self.picking = False


def _check_policy(policy: str):
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")


class Simulation:
    def __init__(self, instance: Instance, layout: Layout, policy: str,
                 params: SimParams | None = None, seed: int = 0):
        _check_policy(policy)
        if (params or SimParams()).tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
        self.instance = instance
        self.layout = layout
        self.policy = policy
        self.params = params or SimParams()
        model = self.params.model
        if model.packing_capacity is None and layout.packing_capacity is not None:
            model = replace(model, packing_capacity=layout.packing_capacity)
        self.model_params = model
        self.seed = seed
        self.kin = replace(self.params.kinematics, cell_edge=layout.cell_edge)
        self.grid = Grid.from_layout(layout)
        self.table = ReservationTable()
        self.jitter = rng_stream(seed, STREAM_JITTER)
        self._dist_cache: dict = {}

        self.now = 0.0
        self.events: list = []
        self._seq = itertools.count()
        self.trace: list = []
        self.stations = {s.id: _StationState(s) for s in layout.stations}
        self.orders = {o.id: _OrderState(o) for o in instance.orders}
        self.pods: dict[int, _PodState] = {}
        self.robots: dict[int, _RobotState] = {}
        self.pending: list[int] = []  # pods waiting for a robot, FIFO
        self.free_cells: set = set()
        self.cell_rank = {c: k for k, c in enumerate(layout.storage_cells)}
        self.request_ids = itertools.count(1)
        self.period = 0
        self.period_records: list[PeriodRecord] = []
        self.psv = 0
        self.picks = 0
        self.distance = 0.0
        self.active_splits = 0
        self.deadlock_retries = 0
        self._place()

    # ----- setup -------------------------------------------------------------
    def _place(self):
        cells = list(self.layout.storage_cells)
        pods = self.instance.pod_skus()
        if len(pods) > len(cells):
            raise SimError(f"{len(pods)} pods but only {len(cells)} storage cells")
        if self.layout.num_robots > len(pods):
            raise SimError("more robots than pods")
        rng = rng_stream(self.seed, STREAM_PLACEMENT)
        chosen = rng.permutation(len(cells))[:len(pods)]
        for pid, k in zip(sorted(pods), chosen):
            self.pods[pid] = _PodState(pid, pods[pid], cells[int(k)])
        self.free_cells = set(cells) - {p.cell for p in self.pods.values()}
        docked = list(self.params.initial_docked)
        docked_pods = {p for _, p in docked}
        # robots start under pods; those under docked pods sit in the station queue
        under = [p for p in sorted(self.pods) if p in docked_pods]
        rest = [p for p in sorted(self.pods) if p not in docked_pods]
        order = list(rng.permutation(rest)) if rest else []
        carriers = (under + [int(p) for p in order])[:self.layout.num_robots]
        if len(under) > self.layout.num_robots:
            raise SimError("more docked pods than robots")
        for rid, pid in enumerate(carriers, start=1):
            self.robots[rid] = _RobotState(rid, self.pods[pid].cell)
        for rid, (sid, pid) in zip(itertools.count(1), docked):
            pod, robot = self.pods[pid], self.robots[rid]
            self.free_cells.add(pod.cell)
            pod.cell, pod.where, pod.robot = None, "queued", rid
            pod.itinerary.append(sid)
            robot.cell, robot.pod, robot.busy = None, pid, True
            self.stations[sid].queue.append(pid)
            self.psv += 1
            self._log("robot-arrive", f"pod{pid}", f"docked at station {sid} initially")

    # ----- event plumbing ---------------------------------------------------------
    def _push(self, t: float, kind: str, entity: int, data=None):
        heapq.heappush(self.events, (t, EVENT_RANK[kind], entity, next(self._seq), kind, data))

    def _log(self, kind, entity, detail=""):
        if self.params.trace:
            self.trace.append((self.now, kind, entity, detail))

    def _tick(self, t: float) -> int:
        return math.ceil(t / self.kin.tick - 1e-9)

    # ----- main loop ----------------------------------------------------------------
    def run(self) -> SimReport:
        violations = validate_state(self._state(list(self.stations.values())))
        if violations:
            raise SimError("invalid initial state: " + "; ".join(map(str, violations[:3])))
        for st in self.stations.values():
            if not st.open:
                self._push(st.spec.open_at, "period-check", st.id, "open")
        for t in sorted({o.order.arrival_time for o in self.orders.values()} - {0.0}):
            self._push(t, "period-check", 0, "arrival")
        self._decide()
        for st in self.stations.values():
            self._service(st)
        self._allocate()
        while self.events:
            t, _, entity, _, kind, data = heapq.heappop(self.events)
            if t > self.params.max_time:
                raise SimError("simulation exceeded max_time")
            self.now = t
            getattr(self, "_on_" + kind.replace("-", "_"))(entity, data)
            self._allocate()
            if self.params.check_every_event:
                self._check_invariants()
        if any(o.completed_at is None for o in self.orders.values()):
            left = sorted(o.order.id for o in self.orders.values() if o.completed_at is None)
            raise SimError(f"simulation stalled with open orders {left[:10]}")
        return self._report()

    def _check_invariants(self):
        self.table.check()
        for st in self.stations.values():
            if sum(st.load.values()) > st.spec.item_capacity:
                raise SimError(f"station {st.id} over item capacity")
            if self._inbound(st.id) > st.spec.queue_length:
                raise SimError(f"station {st.id} queue overflow")
        self.table.prune(self._tick(self.now) - 1)

    # ----- decisions ----------------------------------------------------------------
    def _arrived(self, o: _OrderState) -> bool:
        return o.order.arrival_time <= self.now

    def _backlog(self) -> list[Order]:
        out = []
        for o in sorted(self.orders.values(), key=lambda o: o.order.id):
            if not o.unassigned or not self._arrived(o):
                continue
            if self.policy == "split_time":
                out.append(Order(o.order.id, frozenset(o.unassigned), o.order.arrival_time))
            elif len(o.unassigned) == o.order.size:
                out.append(o.order)
        return out

    def _free(self, st: _StationState) -> int:
        return st.spec.item_capacity - sum(st.load.values())

    def _state(self, stations: list[_StationState], backlog: list[Order] | None = None):
        heads: dict[int, list[int]] = {s.id: [] for s in stations}
        pods = []
        for pid in sorted(self.pods):
            p = self.pods[pid]
            stops = [s for s in p.itinerary if s in heads]
            for s in stops:
                heads[s].append(pid)
            if stops:
                at = p.where == "queued" and p.itinerary[0] == stops[0]
                status = PodStatus.AT_STATION if at else PodStatus.EN_ROUTE
                pods.append(Pod(pid, p.skus, status, stops[0]))
            else:
                pods.append(Pod(pid, p.skus))
        st = tuple(Station(s.id, s.spec.item_capacity, self._free(s), s.spec.queue_length,
                           tuple(heads[s.id])) for s in stations)
        backlog = self._backlog() if backlog is None else backlog
        partial = frozenset(o.id for o in backlog
                            if len(self.orders[o.id].unassigned) < self.orders[o.id].order.size)
        return WarehouseState(st, tuple(pods), tuple(backlog), max(self.period, 1),
                              partial, self.active_splits)

    def _decide(self):
        """Run one decision epoch if some open station can fit the smallest backlog order."""
        stations = [s for s in self.stations.values() if s.open]
        backlog = self._backlog()
        if not stations or not backlog:
            return
        smallest = min(o.size for o in backlog)
        if not any(self._free(s) >= smallest for s in stations):
            return
        self.period += 1
        self._log("period-check", f"period{self.period}", f"backlog {len(backlog)}")
        if self.policy == "sequential":
            self._decide_sequential(stations)
        else:
            self._decide_model(stations)

    def _decide_sequential(self, stations):
        state = self._state(stations)
        for oid, sid in pod_match_poa(state):
            o = self.orders[oid]
            self._assign_lines(o, [(i, sid) for i in sorted(o.unassigned)])
        self.period_records.append(PeriodRecord(self.period, self.now, len(state.backlog),
                                                None, "rule", 0, 0.0))
        self._select_pods_sequential(stations)

    def _select_pods_sequential(self, stations):
        demand = self._demand()
        for st in stations:
            while True:
                state = self._state(stations, backlog=[])
                covered = set()
                for pid in self._serving(st.id):
                    covered |= self.pods[pid].skus
                open_skus = {r.sku for r in st.requests} - covered
                if not open_skus:
                    break
                pid = demand_pps(state, st.id, open_skus, demand)
                if pid is None:
                    break
                self._send(pid, st.id)

    def _serving(self, sid: int) -> list[int]:
        return [p.id for p in self.pods.values() if sid in p.itinerary]

    def _decide_model(self, stations):
        full = self._state(stations)
        state = restrict(full, self.params.prefilter)
        problem = build(state, self.policy, self.model_params)
        if self.params.tie_break != "none":
            problem = replace(problem, tie_break=self._pod_rewards(problem))
        t0 = _time.perf_counter()
        sol = solve(problem, self.params.solver)
        wall = _time.perf_counter() - t0
        self.period_records.append(PeriodRecord(self.period, self.now, len(state.backlog),
                                                sol.objective, sol.status, sol.nodes_explored,
                                                wall))
        if not sol.ok:
            self._log("period-check", f"period{self.period}", f"solver {sol.status}")
            return
        a = decode(problem, sol.values)
        self._apply(a)

    def _demand(self) -> Counter:
        """Unfulfilled lines per SKU: open requests plus unassigned lines of arrived orders."""
        demand = Counter(r.sku for st in self.stations.values() for r in st.requests)
        for o in self.orders.values():
            if self._arrived(o):
                demand.update(o.unassigned)
        return demand

    def _pod_rewards(self, problem) -> dict[int, int]:
        """Secondary costs on x variables, used only to pick among optimal solutions."""
        mode = self.params.tie_break
        demand = self._demand() if mode in ("demand", "demand_distance") else None
        out = {}
        for j, v in enumerate(problem.variables):
            if v.role != "x":
                continue
            pod, sid = self.pods[v.key[0]], v.key[1]
            w = 0
            if demand is not None:
                w -= sum(demand[i] for i in pod.skus)
            if mode in ("distance", "demand_distance") and pod.cell is not None:
                trip = self._cell_dist(self.stations[sid].spec.entry, pod.cell)
                w = w * 1000 + trip if mode == "demand_distance" else trip
            if w:
                out[j] = w
        return out

    def _apply(self, a: Assignment):
        by_order: dict[int, list] = {}
        for o, i, s in sorted(a.line_station):
            by_order.setdefault(o, []).append((i, s))
        for oid, lines in sorted(by_order.items()):
            self._assign_lines(self.orders[oid], lines)
        for p, s in sorted(a.pod_station):
            self._send(p, s)

    def _assign_lines(self, o: _OrderState, lines):
        before_split = o.split
        for i, s in lines:
            o.unassigned.discard(i)
            o.stations.add(s)
            st = self.stations[s]
            st.requests.append(ExtractionRequest(next(self.request_ids), o.order.id, i, s, self.now))
            st.load[o.order.id] += 1
            st.unpicked[o.order.id] += 1
        if not o.unassigned and o.assigned_at is None:
            o.assigned_at = self.now
        if len(o.stations) > 1 or (o.unassigned and o.stations):
            o.split = True
        if o.split and not before_split:
            self.active_splits += 1
        self._log("task-assigned", f"order{o.order.id}",
                  " ".join(f"{i}@{s}" for i, s in lines))

    def _send(self, pid: int, sid: int):
        """Add ``sid`` to the pod's itinerary; a stored pod becomes a pending fetch."""
        p = self.pods[pid]
        if sid in p.itinerary:
            return
        p.itinerary.append(sid)
        if p.where == "storage":
            p.where = "pending"
            self.pending.append(pid)

    # ----- robots --------------------------------------------------------------------
    def _inbound(self, sid: int) -> int:
        """Pods queued at the station or being carried to it."""
        return sum(1 for p in self.pods.values()
                   if p.itinerary and p.itinerary[0] == sid and p.where in ("queued", "carried"))

    def _allocate(self):
        """FIFO fetch tasks, each to the nearest idle robot (Manhattan), ties by robot id."""
        if not self.pending:
            return
        remaining = []
        for pid in self.pending:
            p = self.pods[pid]
            sid = p.itinerary[0]
            idle = [r for r in self.robots.values() if not r.busy]
            if not idle or self._inbound(sid) >= self.stations[sid].spec.queue_length:
                remaining.append(pid)
                continue
            rid = nearest_robot({r.id: r.cell for r in idle}, p.cell)
            robot = self.robots[rid]
            robot.busy, robot.pod = True, pid
            p.robot, p.where = robot.id, "carried"
            self._log("task-assigned", f"robot{robot.id}", f"fetch pod{pid} for station {sid}")
            self._start_leg(robot, p.cell, "fetch")
        self.pending = remaining

    def _dist(self, goal):
        d = self._dist_cache.get(goal)
        if d is None:
            d = self._dist_cache[goal] = self.grid.distances_to(goal)
        return d

    def _cell_dist(self, goal, cell) -> int:
        """Grid steps from an endpoint cell (storage) to goal, entering via a free neighbour."""
        dist = self._dist(goal)
        if cell in dist:
            return dist[cell]
        return min((dist[n] for n in self.grid.neighbours(cell) if n in dist), default=10**9) + 1

    def _start_leg(self, robot: _RobotState, goal, kind: str):
        robot.leg = (goal, kind)
        self._plan(robot)

    def _plan(self, robot: _RobotState):
        goal, kind = robot.leg
        t0 = self._tick(self.now)
        self.table.release(robot.id, t0)
        plan = plan_path(self.grid, self.table, robot.id, robot.cell, goal, t0,
                         self.params.window, dist=self._dist(goal))
        if plan is None:
            robot.retries += 1
            self.deadlock_retries += 1
            if robot.retries > self.params.max_retries:
                raise SimError(f"robot {robot.id} deadlocked at {robot.cell}")
            self._hold(robot, t0)
            wait = int(self.jitter.integers(1, 6))
            self._push(self.now + wait * self.kin.tick, "robot-arrive", robot.id, "retry")
            return
        robot.retries = 0
        self.table.reserve(robot.id, plan.cells, t0, park=not plan.reached)
        lifts = 1 if plan.reached and kind in ("fetch", "store") else 0
        dt = travel_time(plan.cells, self.kin, lifts)
        self.distance += plan.moves * self.kin.cell_edge
        arrive = max(self.now + dt, plan.end_tick * self.kin.tick)
        robot.cell = plan.cells[-1]
        self._push(arrive, "robot-arrive", robot.id, "goal" if plan.reached else "waypoint")

    def _hold(self, robot: _RobotState, t0: int):
        self.table.park(robot.id, robot.cell, t0)

    def _on_robot_arrive(self, rid: int, what):
        robot = self.robots[rid]
        if what in ("retry", "waypoint"):
            self._plan(robot)
            return
        if what == "emerge":
            self._emerge(robot)
            return
        goal, kind = robot.leg
        robot.leg = None
        self.table.release(robot.id, self._tick(self.now))
        pod = self.pods[robot.pod]
        if kind == "fetch":
            self.free_cells.add(pod.cell)
            pod.cell = None
            self._deliver(robot, pod)
        elif kind == "deliver":
            sid = pod.itinerary[0]
            st = self.stations[sid]
            robot.cell = None
            pod.where = "queued"
            pod.arrived_at = self.now
            self._enqueue(st, pod)
            self.psv += 1
            self._log("robot-arrive", f"pod{pod.id}", f"station {sid}")
            if len(st.queue) == 1:
                self._service(st)
        elif kind == "store":
            self._push(self.now, "pod-stored", robot.id, goal)

    def _enqueue(self, st: _StationState, pod: _PodState):
        """Insert behind the docked pod by (arrival time, pod id)."""
        k = len(st.queue)
        while k > 1:
            other = self.pods[st.queue[k - 1]]
            if (other.arrived_at, other.id) <= (pod.arrived_at, pod.id):
                break
            k -= 1
        st.queue.insert(k, pod.id)

    def _deliver(self, robot: _RobotState, pod: _PodState):
        sid = pod.itinerary[0]
        self._start_leg(robot, self.stations[sid].spec.entry, "deliver")

    def _on_pod_stored(self, rid: int, cell):
        robot = self.robots[rid]
        pod = self.pods[robot.pod]
        pod.cell, pod.robot = cell, None
        robot.pod, robot.busy = None, False
        self._log("pod-stored", f"pod{pod.id}", f"cell {cell}")
        if pod.itinerary:
            pod.where = "pending"
            self.pending.append(pod.id)
        else:
            pod.where = "storage"

    def _emerge(self, robot: _RobotState):
        pod = self.pods[robot.pod]
        sid = pod.last_station
        exit_ = self.stations[sid].spec.exit
        t0 = self._tick(self.now)
        if not self.table.parkable(robot.id, exit_, t0):
            self.deadlock_retries += 1
            self._push(self.now + self.kin.tick, "robot-arrive", robot.id, "emerge")
            return
        robot.cell = exit_
        if pod.itinerary and self._inbound(pod.itinerary[0]) < \
                self.stations[pod.itinerary[0]].spec.queue_length:
            pod.where = "carried"
            self._deliver(robot, pod)
        else:
            pod.where = "carried"
            self._start_leg(robot, self._storage_for(sid), "store")

    def _storage_for(self, sid: int):
        """Nearest free storage cell to the station exit by grid distance, ties by cell index."""
        exit_ = self.stations[sid].spec.exit
        cell = nearest_storage(self.free_cells, lambda c: self._cell_dist(exit_, c), self.cell_rank)
        self.free_cells.discard(cell)
        return cell

    # ----- stations ---------------------------------------------------------------
    def _matching(self, st: _StationState, pod: _PodState) -> list[ExtractionRequest]:
        return [r for r in st.requests if r.sku in pod.skus]

    def _service(self, st: _StationState):
        """Start the next pick for the docked pod, or send it away if it has nothing to do."""
        while st.queue and not st.picking:
            pod = self.pods[st.queue[0]]
            todo = self._matching(st, pod)
            if todo:
                req = todo[0]
                req.pod = pod.id
                st.picking = True
                self._push(self.now + self.params.pick_time, "pick-complete", st.id, req)
                return
            self._depart(st, pod)

    def _depart(self, st: _StationState, pod: _PodState):
        st.queue.pop(0)
        pod.itinerary.popleft()
        pod.last_station = st.id
        pod.where = "leaving"
        robot = self.robots[pod.robot]
        self._log("robot-arrive", f"pod{pod.id}", f"leaves station {st.id}")
        self._emerge(robot)

    def _on_pick_complete(self, sid: int, req: ExtractionRequest):
        st = self.stations[sid]
        st.picking = False
        req.completed_at = self.now
        st.requests.remove(req)
        self.picks += 1
        o = self.orders[req.order]
        o.picked += 1
        st.unpicked[req.order] -= 1
        released = st.unpicked[req.order] == 0
        if released:
            del st.unpicked[req.order]
            del st.load[req.order]
        self._log("pick-complete", f"order{o.order.id}", f"sku {req.sku} pod{req.pod} station {sid}")
        if o.picked == o.order.size:
            o.completed_at = self.now
            if o.split:
                self.active_splits -= 1
        if released:
            self._decide()
        self._service(st)

    def _on_period_check(self, entity: int, what):
        if what == "open":
            self.stations[entity].open = True
        self._decide()
        for st in self.stations.values():
            self._service(st)

    def _on_task_assigned(self, entity, data):  # reserved for externally injected tasks
        pass

    # ----- report --------------------------------------------------------------
    def _report(self) -> SimReport:
        turnover = {}
        for oid, o in sorted(self.orders.items()):
            arrival = o.order.arrival_time
            turnover[oid] = (o.assigned_at - arrival, o.completed_at - o.assigned_at)
        pile_on = Fraction(self.picks, self.psv) if self.psv else Fraction(0)
        return SimReport(self.policy, self.seed, self.psv, len(self.orders), self.picks,
                         self.distance, pile_on, turnover, self.period_records, self.now,
                         len(self.orders), self.deadlock_retries, self.trace)



def run(instance: Instance, layout: Layout, policy: str, params: SimParams | None = None,
        seed: int = 0) -> SimReport:
    """Simulate until every order is picked; deterministic in its arguments."""
    return Simulation(instance, layout, policy, params, seed).run()


def advance_period(free_capacity, backlog_sizes) -> bool:
    """A new period starts once some station can fit the smallest backlog order."""
    sizes = list(backlog_sizes)
    return bool(sizes) and max(free_capacity, default=0) >= min(sizes)


def sequence_pods(arrivals: dict[int, float]) -> list[int]:
    """Processing order of pods at a station: arrival time, ties by pod id."""
    return sorted(arrivals, key=lambda p: (arrivals[p], p))


def nearest_robot(idle: dict[int, tuple[int, int]], target) -> int:
    """Id of the idle robot closest to ``target`` by Manhattan distance, ties by id."""
    return min(idle, key=lambda r: (manhattan(idle[r], target), r))


def nearest_storage(free_cells, distance, rank: dict) -> tuple[int, int]:
    """Free storage cell with the smallest ``distance(cell)``, ties by cell rank."""
    if not free_cells:
        raise SimError("no free storage location")
    return min(free_cells, key=lambda c: (distance(c), rank[c]))
