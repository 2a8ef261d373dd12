"""0-1 integer programs for integrated and split-order POA/PPS.

Each builder turns a :class:`WarehouseState` into an :class:`IlpProblem`
(minimisation, integer coefficients). Variables are kept in a fixed role
order, x, y_os, y_ios, y_o, e_o, y_b, y_l, u, so that exported LP files and
solver branching are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import VARIANTS, Assignment, ModelParams, WarehouseState

ROLE_ORDER = ("x", "y_os", "y_ios", "y_o", "e_o", "y_b", "y_l", "u")
_SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class Variable:
    name: str
    role: str
    key: tuple
    kind: str = "binary"  # or "integer" (non-negative)
    lb: int = 0
    ub: int | None = 1


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[int, int], ...]  # (variable index, coefficient)
    sense: str
    rhs: int
    tag: str = ""

    def activity(self, values: Sequence[float]) -> float:
        return sum(c * values[j] for j, c in self.coeffs)

    def satisfied(self, values: Sequence[float], tol: float = 1e-9) -> bool:
        lhs = self.activity(values)
        if self.sense == "<=":
            return lhs <= self.rhs + tol
        if self.sense == ">=":
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol


@dataclass
class IlpProblem:
    variables: list[Variable]
    objective: dict[int, int]
    constraints: list[Constraint]
    variant: str
    state: WarehouseState | None = None
    params: ModelParams = field(default_factory=ModelParams)
    index: dict[tuple[str, tuple], int] = field(default_factory=dict)
    # secondary costs, minimised only among solutions optimal for ``objective``
    tie_break: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {(v.role, v.key): j for j, v in enumerate(self.variables)}
        n = len(self.variables)
        for c in self.constraints:
            for j, _ in c.coeffs:
                if not 0 <= j < n:
                    raise ValueError(f"constraint {c.name} references undeclared variable {j}")
            if c.sense not in _SENSES:
                raise ValueError(f"bad relation {c.sense!r} in {c.name}")

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    def var(self, role: str, *key) -> int:
        return self.index[(role, tuple(key))]

    def role_count(self, role: str) -> int:
        return sum(1 for v in self.variables if v.role == role)

    def objective_value(self, values: Sequence[float]) -> float:
        return sum(c * values[j] for j, c in self.objective.items())

    def violated(self, values: Sequence[float]) -> list[Constraint]:
        bad = [c for c in self.constraints if not c.satisfied(values)]
        for j, v in enumerate(self.variables):
            x = values[j]
            if x != round(x) or x < v.lb or (v.ub is not None and x > v.ub):
                bad.append(Constraint(f"domain_{v.name}", ((j, 1),), "=", int(round(x)), "domain"))
        return bad


class _Builder:
    def __init__(self):
        self.vars: dict[tuple[str, tuple], Variable] = {}
        self.rows: list[tuple[str, dict, str, int, str]] = []
        self.obj: dict[tuple[str, tuple], int] = {}

    def add_var(self, name, role, key, kind="binary", lb=0, ub=1):
        k = (role, tuple(key))
        if k not in self.vars:
            self.vars[k] = Variable(name, role, tuple(key), kind, lb, ub)
        return k

    def add_row(self, name, terms, sense, rhs, tag):
        coeffs: dict = {}
        for k, c in terms:
            coeffs[k] = coeffs.get(k, 0) + c
        self.rows.append((name, {k: c for k, c in coeffs.items() if c}, sense, rhs, tag))

    def finish(self, variant, state, params) -> IlpProblem:
        rank = {r: n for n, r in enumerate(ROLE_ORDER)}
        ordered = sorted(self.vars.values(), key=lambda v: (rank[v.role], v.key))
        index = {(v.role, v.key): j for j, v in enumerate(ordered)}
        cons = [Constraint(name, tuple(sorted((index[k], c) for k, c in terms.items())),
                           sense, rhs, tag)
                for name, terms, sense, rhs, tag in self.rows]
        obj = {index[k]: c for k, c in self.obj.items()}
        return IlpProblem(ordered, obj, cons, variant, state, params, index)


def _base(state: WarehouseState, params: ModelParams) -> _Builder:
    """Variables and constraints shared by all three variants."""
    b = _Builder()
    stations = [s.id for s in state.stations]
    for p in sorted(state.pods, key=lambda p: p.id):
        for s in stations:
            k = b.add_var(f"x_p{p.id}_s{s}", "x", (p.id, s))
            b.obj[k] = 1
    for o in state.backlog:
        for s in stations:
            b.add_var(f"yos_o{o.id}_s{s}", "y_os", (o.id, s))
            for i in sorted(o.lines):
                b.add_var(f"yios_o{o.id}_i{i}_s{s}", "y_ios", (o.id, i, s))
    for st in state.stations:
        k = b.add_var(f"u_s{st.id}", "u", (st.id,), kind="integer", ub=None)
        b.obj[k] = params.unused_weight

    for st in state.stations:
        s = st.id
        terms = [(("y_ios", (o.id, i, s)), 1) for o in state.backlog for i in sorted(o.lines)]
        terms.append((("u", (s,)), 1))
        b.add_row(f"capacity_s{s}", terms, "=", st.free_capacity, "capacity")
    for o in state.backlog:
        for i in sorted(o.lines):
            holders = state.pods_with_sku(i)
            for s in stations:
                terms = [(("x", (p, s)), 1) for p in holders]
                terms.append((("y_ios", (o.id, i, s)), -1))
                b.add_row(f"cover_o{o.id}_i{i}_s{s}", terms, ">=", 0, "cover")
    for st in state.stations:
        for p in st.pods:
            b.add_row(f"forced_p{p}_s{st.id}", [(("x", (p, st.id)), 1)], "=", 1, "forced")
    return b


def build_integrated(state: WarehouseState, params: ModelParams | None = None) -> IlpProblem:
    params = params or ModelParams()
    b = _base(state, params)
    stations = [s.id for s in state.stations]
    for o in state.backlog:
        for s in stations:
            for i in sorted(o.lines):
                b.add_row(f"integrity_o{o.id}_i{i}_s{s}",
                          [(("y_os", (o.id, s)), 1), (("y_ios", (o.id, i, s)), -1)],
                          "=", 0, "integrity")
        b.add_row(f"one_station_o{o.id}", [(("y_os", (o.id, s)), 1) for s in stations],
                  "<=", 1, "one_station")
    return b.finish("integrated", state, params)


def _split(state: WarehouseState, params: ModelParams, over_time: bool) -> _Builder:
    b = _base(state, params)
    stations = [s.id for s in state.stations]
    for o in state.backlog:
        yo = b.add_var(f"yo_o{o.id}", "y_o", (o.id,))
        for s in stations:
            for i in sorted(o.lines):
                b.add_row(f"line_station_o{o.id}_i{i}_s{s}",
                          [(("y_os", (o.id, s)), 1), (("y_ios", (o.id, i, s)), -1)],
                          ">=", 0, "line_station")
        b.add_row(f"active_station_o{o.id}",
                  [(("y_os", (o.id, s)), 1) for s in stations] + [(yo, -1)],
                  ">=", 0, "active_station")
        for i in sorted(o.lines):
            terms = [(("y_ios", (o.id, i, s)), 1) for s in stations] + [(yo, -1)]
            if over_time:
                yb = b.add_var(f"yb_o{o.id}_i{i}", "y_b", (o.id, i))
                terms.append((yb, 1))
            b.add_row(f"complete_o{o.id}_i{i}", terms, "=", 0, "complete")
        for s in stations:
            b.add_row(f"activate_o{o.id}_s{s}", [(yo, 1), (("y_os", (o.id, s)), -1)],
                      ">=", 0, "activate")
            b.add_row(f"nonempty_o{o.id}_s{s}",
                      [(("y_ios", (o.id, i, s)), 1) for i in sorted(o.lines)]
                      + [(("y_os", (o.id, s)), -1)], ">=", 0, "nonempty")
    return b


def build_split_stations(state: WarehouseState, params: ModelParams | None = None) -> IlpProblem:
    params = params or ModelParams()
    prob = _split(state, params, over_time=False).finish("split_stations", state, params)
    if params.packing_capacity is not None:
        prob = add_packing_capacity(prob, params)
    return prob


def build_split_time(state: WarehouseState, params: ModelParams | None = None) -> IlpProblem:
    params = params or ModelParams()
    prob = _split(state, params, over_time=True).finish("split_time", state, params)
    if params.packing_capacity is not None:
        prob = add_packing_capacity(prob, params)
    return prob


def add_packing_capacity(problem: IlpProblem, params: ModelParams) -> IlpProblem:
    """Limit the number of concurrently open split orders to ``params.packing_capacity``.

    Replaces ``sum_s y_os >= y_o`` by ``sum_s y_os - e_o = y_o`` and adds the
    split indicators y_l. ``e_o / N <= y_l`` is written as ``N * y_l >= e_o``.
    Orders already counted in the tracker (residual orders) get no y_l.
    """
    if problem.variant == "integrated":
        raise ValueError("packing capacity applies to split variants only (no e_o in integrated)")
    if params.packing_capacity is None:
        return problem
    if any(v.role == "e_o" for v in problem.variables):
        raise ValueError("packing capacity already added")
    state = problem.state
    n_stations = params.station_count or len(state.stations)
    b = _Builder()
    for v in problem.variables:
        b.vars[(v.role, v.key)] = v
    for j, c in problem.objective.items():
        v = problem.variables[j]
        b.obj[(v.role, v.key)] = c
    for c in problem.constraints:
        if c.tag == "active_station":
            continue
        terms = {(problem.variables[j].role, problem.variables[j].key): a for j, a in c.coeffs}
        b.rows.append((c.name, terms, c.sense, c.rhs, c.tag))
    stations = [s.id for s in state.stations]
    flags = []
    for o in state.backlog:
        e = b.add_var(f"e_o{o.id}", "e_o", (o.id,), kind="integer", ub=None)
        b.add_row(f"extra_o{o.id}",
                  [(("y_os", (o.id, s)), 1) for s in stations] + [(e, -1), (("y_o", (o.id,)), -1)],
                  "=", 0, "extra_stations")
        if o.id in state.partially_assigned:
            continue
        yl = b.add_var(f"yl_o{o.id}", "y_l", (o.id,))
        flags.append(yl)
        b.add_row(f"split_lb_o{o.id}", [(yl, n_stations), (e, -1)], ">=", 0, "split_lb")
        ub_terms = [(yl, 1), (e, -1)]
        if problem.variant == "split_time":
            for i in sorted(o.lines):
                yb = ("y_b", (o.id, i))
                ub_terms.append((yb, -1))
                b.add_row(f"split_defer_o{o.id}_i{i}", [(yl, 1), (yb, -1)], ">=", 0, "split_defer")
        b.add_row(f"split_ub_o{o.id}", ub_terms, "<=", 0, "split_ub")
    b.add_row("packing", [(k, 1) for k in flags], "<=",
              params.packing_capacity - state.active_splits, "packing")
    merged = ModelParams(problem.params.unused_weight, params.packing_capacity, params.station_count)
    return b.finish(problem.variant, state, merged)


BUILDERS = {
    "integrated": build_integrated,
    "split_stations": build_split_stations,
    "split_time": build_split_time,
}


def build(state: WarehouseState, variant: str, params: ModelParams | None = None) -> IlpProblem:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    return BUILDERS[variant](state, params)


def decode(problem: IlpProblem, raw: Sequence[float] | Mapping[str, float]) -> Assignment:
    """Turn a full, feasible variable vector into an :class:`Assignment`."""
    if isinstance(raw, Mapping):
        names = {v.name: j for j, v in enumerate(problem.variables)}
        missing = set(names) - set(raw)
        if missing:
            raise ValueError(f"solution misses {len(missing)} variables, e.g. {sorted(missing)[0]}")
        values = [0] * problem.num_vars
        for name, val in raw.items():
            values[names[name]] = val
    else:
        values = list(raw)
        if len(values) != problem.num_vars:
            raise ValueError(f"expected {problem.num_vars} values, got {len(values)}")
    values = [int(round(v)) for v in values]
    bad = problem.violated(values)
    if bad:
        raise ValueError(f"solution violates {len(bad)} constraints, first: {bad[0].name}")

    def on(role):
        return [v.key for j, v in enumerate(problem.variables) if v.role == role and values[j]]

    def amounts(role):
        return {v.key[0]: values[j] for j, v in enumerate(problem.variables) if v.role == role}

    order_station = frozenset(on("y_os"))
    assigned = frozenset(k[0] for k in on("y_o")) if problem.variant != "integrated" \
        else frozenset(o for o, _ in order_station)
    return Assignment(
        pod_station=frozenset(on("x")),
        order_station=order_station,
        line_station=frozenset(on("y_ios")),
        unused=amounts("u"),
        assigned_orders=assigned,
        deferred=frozenset(on("y_b")),
        extra_stations=amounts("e_o"),
        split_flags=frozenset(k[0] for k in on("y_l")),
        objective_value=int(problem.objective_value(values)),
    )


def encode(problem: IlpProblem, assignment: Assignment) -> list[int]:
    """Inverse of :func:`decode`: the variable vector of an assignment."""
    values = [0] * problem.num_vars
    for j, v in enumerate(problem.variables):
        if v.role == "x":
            values[j] = int(v.key in assignment.pod_station)
        elif v.role == "y_os":
            values[j] = int(v.key in assignment.order_station)
        elif v.role == "y_ios":
            values[j] = int(v.key in assignment.line_station)
        elif v.role == "y_o":
            values[j] = int(v.key[0] in assignment.assigned_orders)
        elif v.role == "y_b":
            values[j] = int(v.key in assignment.deferred)
        elif v.role == "y_l":
            values[j] = int(v.key[0] in assignment.split_flags)
        elif v.role == "e_o":
            values[j] = assignment.extra_stations.get(v.key[0], 0)
        elif v.role == "u":
            values[j] = assignment.unused.get(v.key[0], 0)
    return values


def to_lp(problem: IlpProblem) -> str:
    """Render the problem in CPLEX LP text format."""

    def expr(pairs):
        parts = []
        for j, c in pairs:
            name = problem.variables[j].name
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            parts.append(f"{sign} {name}" if mag == 1 else f"{sign} {mag} {name}")
        text = " ".join(parts) if parts else "0"
        return text[2:] if text.startswith("+ ") else text

    lines = [f"\\ variant: {problem.variant}", "Minimize",
             " obj: " + expr(sorted(problem.objective.items())), "Subject To"]
    for c in problem.constraints:
        lines.append(f" {c.name}: {expr(c.coeffs)} {c.sense} {c.rhs}")
    lines.append("Bounds")
    for v in problem.variables:
        if v.kind == "integer":
            lines.append(f" {v.name} >= {v.lb}" if v.ub is None else f" {v.lb} <= {v.name} <= {v.ub}")
    binaries = [v.name for v in problem.variables if v.kind == "binary"]
    generals = [v.name for v in problem.variables if v.kind == "integer"]
    if binaries:
        lines.append("Binary")
        lines.extend(f" {n}" for n in binaries)
    if generals:
        lines.append("General")
        lines.extend(f" {n}" for n in generals)
    lines.append("End")
    return "\n".join(lines) + "\n"
