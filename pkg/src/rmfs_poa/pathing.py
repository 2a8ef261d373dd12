"""Cooperative grid pathfinding: windowed space-time A* over a shared reservation
table, kinematic travel times, and a joint-state BFS for two-robot checks.

Time is discretised into ticks of one cell at top speed. A plan reserves the
cells (and directed edges) of its first ``window`` ticks; past the window the
path follows static shortest distances and is not reserved. A robot that stops
short of its goal parks: it holds its cell from the stop tick until it
replans.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field

Cell = tuple[int, int]
MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1))
FOREVER = math.inf


class CollisionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Kinematics:
    accel: float = 1.0  # m/s^2
    vmax: float = 1.5  # m/s
    half_turn: float = 2.5  # s per 180 degrees, pro-rated for 90
    lift: float = 2.2  # s per pod lift or store
    cell_edge: float = 1.0  # m

    @property
    def tick(self) -> float:
        return self.cell_edge / self.vmax


@dataclass
class Grid:
    """Traversable cells plus endpoint cells that may only start or end a path."""

    width: int
    height: int
    free: frozenset[Cell]
    endpoints: frozenset[Cell] = frozenset()

    def in_bounds(self, c: Cell) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def neighbours(self, c: Cell, allow: frozenset[Cell] | set = frozenset()):
        for dx, dy in MOVES:
            n = (c[0] + dx, c[1] + dy)
            if n in self.free or n in allow:
                yield n

    @classmethod
    def from_strings(cls, rows: list[str]) -> "Grid":
        """'.' free, '#' blocked, 'E' endpoint; row 0 is the first string."""
        free, ends = set(), set()
        for y, row in enumerate(rows):
            for x, ch in enumerate(row):
                if ch == ".":
                    free.add((x, y))
                elif ch == "E":
                    ends.add((x, y))
        return cls(max(len(r) for r in rows), len(rows), frozenset(free), frozenset(ends))

    @classmethod
    def from_layout(cls, layout) -> "Grid":
        storage = set(layout.storage_cells)
        stations = {c for s in layout.stations for c in (s.entry, s.exit)}
        free = {(x, y) for x in range(1, layout.width) for y in range(layout.height)} - storage
        return cls(layout.width, layout.height, frozenset(free), frozenset(storage | stations))

    def distances_to(self, goal: Cell) -> dict[Cell, int]:
        """BFS distance to ``goal`` over free cells (the goal itself may be an endpoint)."""
        dist = {goal: 0}
        q = deque([goal])
        while q:
            c = q.popleft()
            for n in self.neighbours(c):
                if n not in dist:
                    dist[n] = dist[c] + 1
                    q.append(n)
        return dist


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


class ReservationTable:
    """Vertex (cell, tick) and directed edge (u, v, tick) reservations with owners.

    A park holds a cell for every tick from its start until released.
    """

    def __init__(self):
        self.vertex: dict[tuple[Cell, int], int] = {}
        self.edge: dict[tuple[Cell, Cell, int], int] = {}
        self.parks: dict[Cell, tuple[int, int]] = {}
        self._by_cell: dict[Cell, dict[int, int]] = {}
        self._owned: dict[int, list] = {}

    def vertex_owner(self, c: Cell, t: int) -> int | None:
        o = self.vertex.get((c, t))
        if o is not None:
            return o
        park = self.parks.get(c)
        if park is not None and park[0] <= t:
            return park[1]
        return None

    def free_for(self, robot: int, c: Cell, t: int) -> bool:
        o = self.vertex_owner(c, t)
        return o is None or o == robot

    def move_ok(self, robot: int, u: Cell, v: Cell, t: int) -> bool:
        """Can ``robot`` move u -> v between ticks t and t+1?"""
        if not self.free_for(robot, v, t + 1):
            return False
        if u != v:
            o = self.edge.get((v, u, t))
            if o is not None and o != robot:
                return False
        return True

    def parkable(self, robot: int, c: Cell, t: int) -> bool:
        """True if nobody else holds ``c`` at any tick >= t."""
        park = self.parks.get(c)
        if park is not None and park[1] != robot:
            return False
        return all(o == robot or tt < t for tt, o in self._by_cell.get(c, {}).items())

    def reserve(self, robot: int, path: list[Cell], t0: int, park: bool = False):
        for k, c in enumerate(path):
            t = t0 + k
            o = self.vertex_owner(c, t)
            if o is not None and o != robot:
                raise CollisionError(f"robot {robot} and {o} both at {c} at tick {t}")
            self.vertex[(c, t)] = robot
            self._by_cell.setdefault(c, {})[t] = robot
            self._owned.setdefault(robot, []).append(("v", (c, t)))
            if k:
                u = path[k - 1]
                if u != c:
                    o = self.edge.get((c, u, t - 1))
                    if o is not None and o != robot:
                        raise CollisionError(f"robots {robot} and {o} swap {u}<->{c} at tick {t - 1}")
                    self.edge[(u, c, t - 1)] = robot
                    self._owned[robot].append(("e", (u, c, t - 1)))
        if park:
            self.park(robot, path[-1], t0 + len(path) - 1)

    def park(self, robot: int, c: Cell, t: int):
        if not self.parkable(robot, c, t):
            raise CollisionError(f"robot {robot} cannot park at {c} from tick {t}")
        self.parks[c] = (t, robot)
        self._owned.setdefault(robot, []).append(("p", c))

    def release(self, robot: int, from_tick: int = 0):
        """Drop the robot's reservations at ticks >= from_tick and all its parks."""
        keep = []
        for kind, key in self._owned.get(robot, []):
            if kind == "p":
                if self.parks.get(key, (None, None))[1] == robot:
                    del self.parks[key]
                continue
            t = key[1] if kind == "v" else key[2]
            if t < from_tick:
                keep.append((kind, key))
                continue
            if kind == "v":
                if self.vertex.get(key) == robot:
                    del self.vertex[key]
                    self._by_cell[key[0]].pop(key[1], None)
            elif self.edge.get(key) == robot:
                del self.edge[key]
        self._owned[robot] = keep

    def prune(self, before: int):
        """Forget reservations older than ``before`` (they can no longer conflict)."""
        for robot in list(self._owned):
            kept = []
            for kind, key in self._owned[robot]:
                t = None if kind == "p" else (key[1] if kind == "v" else key[2])
                if t is not None and t < before:
                    if kind == "v":
                        self.vertex.pop(key, None)
                        self._by_cell.get(key[0], {}).pop(key[1], None)
                    else:
                        self.edge.pop(key, None)
                else:
                    kept.append((kind, key))
            self._owned[robot] = kept

    def check(self):
        """Assert the table's invariants: one owner per cell-tick and no swaps."""
        for (u, v, t), o in self.edge.items():
            other = self.edge.get((v, u, t))
            if other is not None and other != o:
                raise CollisionError(f"swap {u}<->{v} at tick {t} by {o} and {other}")
        for c, (t, o) in self.parks.items():
            for tt, oo in self._by_cell.get(c, {}).items():
                if tt >= t and oo != o:
                    raise CollisionError(f"{c} parked by {o} but reserved by {oo} at {tt}")


@dataclass
class PathPlan:
    cells: list[Cell]  # one entry per tick, starting at the start tick
    start_tick: int
    reached: bool  # True if the reserved prefix ends at the goal
    tail: list[Cell] = field(default_factory=list)  # unreserved continuation past the window

    @property
    def moves(self) -> int:
        return sum(1 for a, b in zip(self.cells, self.cells[1:]) if a != b)

    @property
    def end_tick(self) -> int:
        return self.start_tick + len(self.cells) - 1


def distance_m(plan_cells: list[Cell], cell_edge: float = 1.0) -> float:
    return sum(1 for a, b in zip(plan_cells, plan_cells[1:]) if a != b) * cell_edge


def plan_path(grid: Grid, table: ReservationTable, robot: int, start: Cell, goal: Cell,
              start_tick: int, window: int = 20, park_at_goal: bool = False,
              node_budget: int = 20_000, dist: dict[Cell, int] | None = None) -> PathPlan | None:
    """Windowed cooperative A*; None signals deadlock-retry.

    The search runs in space-time for ``window`` ticks against ``table`` and
    completes either at the goal or at the window edge, where the static
    distance finishes the estimate. A window-edge stop must be parkable. With
    ``park_at_goal`` the goal must also stay free after arrival.
    """
    if dist is None:
        dist = grid.distances_to(goal)
    if start not in dist and start != goal:
        # start may be an endpoint: it is adjacent to free cells
        if not any(n in dist for n in grid.neighbours(start)):
            return None
    if start == goal:
        if park_at_goal and not table.parkable(robot, goal, start_tick):
            return None
        return PathPlan([start], start_tick, True)
    allow = {goal}

    def h(c):
        if c in dist:
            return dist[c]
        return 1 + min((dist[n] for n in grid.neighbours(c) if n in dist), default=10**6)

    counter = itertools.count()
    # entries: (f, -depth, tiebreak, cell, depth, terminal)
    open_ = [(h(start), 0, next(counter), start, 0, False)]
    parent: dict[tuple[Cell, int], tuple[Cell, int] | None] = {(start, 0): None}
    expanded = 0
    while open_:
        f, _, _, c, d, terminal = heapq.heappop(open_)
        if terminal:
            cells = []
            node = (c, d)
            while node is not None:
                cells.append(node[0])
                node = parent[node]
            cells.reverse()
            reached = c == goal
            tail = [] if reached else _static_tail(grid, dist, c, goal)
            return PathPlan(cells, start_tick, reached, tail)
        expanded += 1
        if expanded > node_budget:
            return None
        t = start_tick + d
        for n in itertools.chain(grid.neighbours(c, allow), (c,)):
            if n == start and c != start and n not in grid.free:
                continue  # do not re-enter an endpoint start
            if n != c and n not in grid.free and n != goal:
                continue
            if c == n and c not in grid.free and c != start:
                continue
            if not table.move_ok(robot, c, n, t):
                continue
            key = (n, d + 1)
            if key in parent:
                continue
            parent[key] = (c, d)
            g = d + 1
            if n == goal:
                if park_at_goal and not table.parkable(robot, n, t + 1):
                    continue
                heapq.heappush(open_, (g, -g, next(counter), n, g, True))
            elif g >= window:
                if n in grid.free and table.parkable(robot, n, t + 1):
                    heapq.heappush(open_, (g + h(n), -g, next(counter), n, g, True))
            else:
                heapq.heappush(open_, (g + h(n), -g, next(counter), n, g, False))
    return None


def _static_tail(grid: Grid, dist: dict[Cell, int], c: Cell, goal: Cell) -> list[Cell]:
    out = []
    while c != goal:
        c = min((n for n in grid.neighbours(c, {goal}) if n in dist),
                key=lambda n: (dist[n], n))
        out.append(c)
    return out


def _segments(cells: list[Cell]):
    """Split a tick-by-tick path into straight runs; waits end a run."""
    runs, turns, waits = [], 0.0, 0
    run, heading = 0, None
    for a, b in zip(cells, cells[1:]):
        if a == b:
            waits += 1
            if run:
                runs.append(run)
            run = 0
            continue
        d = (b[0] - a[0], b[1] - a[1])
        if heading is not None and d != heading:
            if run:
                runs.append(run)
            run = 0
            turns += 2.0 if d == (-heading[0], -heading[1]) else 1.0
        heading = d
        run += 1
    if run:
        runs.append(run)
    return runs, turns, waits


def segment_time(d: float, kin: Kinematics) -> float:
    """Rest-to-rest time over ``d`` metres with a trapezoidal speed profile."""
    if d <= 0:
        return 0.0
    ramp = kin.vmax ** 2 / kin.accel  # distance to reach and leave top speed
    if d <= ramp:
        return 2.0 * math.sqrt(d / kin.accel)
    return kin.vmax / kin.accel + (d - ramp) / kin.vmax


def travel_time(cells: list[Cell], kin: Kinematics | None = None, lifts: int = 0) -> float:
    """Seconds to drive ``cells`` (one entry per tick; repeats are waits).

    Each straight run is driven rest to rest; a 90 degree turn costs half of
    ``kin.half_turn``; each wait costs one tick; each pod lift or store adds
    ``kin.lift``.
    """
    kin = kin or Kinematics()
    runs, quarter_turns, waits = _segments(cells)
    t = sum(segment_time(r * kin.cell_edge, kin) for r in runs)
    t += quarter_turns * kin.half_turn / 2
    t += waits * kin.tick
    return t + lifts * kin.lift


def plan_group(grid: Grid, starts: list[Cell], goals: list[Cell], window: int = 64,
               max_delay: int = 4) -> tuple[list[list[Cell]], int] | None:
    """Prioritised planning of several robots to parked goals.

    Tries every rotation of the priority order (and its reverse), each with
    the leading robot held at its start for 0..max_delay ticks, and keeps the
    plan with the smallest makespan. Returns (paths aligned at tick 0,
    makespan) or None.
    """
    n = len(starts)
    base = list(range(n))
    orders = [base[k:] + base[:k] for k in range(n)]
    orders += [list(reversed(o)) for o in orders]
    best = None
    for order in orders:
        for delay in range(max_delay + 1):
            table = ReservationTable()
            for r in range(n):
                table.reserve(r, [starts[r]], 0)
            paths: dict[int, list[Cell]] = {}
            for k, r in enumerate(order):
                table.release(r)
                head = [starts[r]] * (delay if k == 0 else 0)
                if head:
                    try:
                        table.reserve(r, head, 0)
                    except CollisionError:
                        break
                plan = plan_path(grid, table, r, starts[r], goals[r], len(head),
                                 window, park_at_goal=True)
                if plan is None or not plan.reached:
                    break
                table.reserve(r, plan.cells, len(head), park=True)
                paths[r] = head + plan.cells
            else:
                span = max(len(p) - 1 for p in paths.values())
                if best is None or span < best[1]:
                    best = ([paths[r] for r in range(n)], span)
    return best


def joint_bfs_makespan(grid: Grid, starts: tuple[Cell, Cell], goals: tuple[Cell, Cell],
                       limit: int = 200) -> int | None:
    """Optimal makespan for two robots by breadth-first search over joint states."""
    start = tuple(starts)
    goal = tuple(goals)
    if start == goal:
        return 0
    allow = set(goals) | set(starts)
    seen = {start}
    frontier = [start]
    for t in range(1, limit + 1):
        nxt = []
        for a, b in frontier:
            for na in itertools.chain(grid.neighbours(a, allow), (a,)):
                for nb in itertools.chain(grid.neighbours(b, allow), (b,)):
                    if na == nb or (na == b and nb == a):
                        continue
                    s = (na, nb)
                    if s in seen:
                        continue
                    if s == goal:
                        return t
                    seen.add(s)
                    nxt.append(s)
        frontier = nxt
        if not frontier:
            return None
    return None


def check_paths(paths: list[list[Cell]], start_ticks: list[int] | None = None):
    """Raise CollisionError if any two timed paths share a cell-tick or swap cells.

    Robots are assumed to stay at their last cell afterwards.
    """
    start_ticks = start_ticks or [0] * len(paths)
    horizon = max(s + len(p) for s, p in zip(start_ticks, paths))

    def at(r, t):
        p, s = paths[r], start_ticks[r]
        return p[min(max(t - s, 0), len(p) - 1)]

    for t in range(horizon):
        for a, b in itertools.combinations(range(len(paths)), 2):
            if at(a, t) == at(b, t):
                raise CollisionError(f"robots {a},{b} share {at(a, t)} at tick {t}")
            if t + 1 < horizon and at(a, t) == at(b, t + 1) and at(b, t) == at(a, t + 1) \
                    and at(a, t) != at(a, t + 1):
                raise CollisionError(f"robots {a},{b} swap at tick {t}")
