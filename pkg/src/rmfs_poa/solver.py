"""Exact depth-first branch-and-bound for the bounded integer programs built in
:mod:`rmfs_poa.formulations`.

Each node tightens variable bounds by activity-based propagation over the
linear rows, then bounds the subtree either with the LP relaxation (HiGHS
dual simplex, warm-started between nodes) or, without LP, with the
objective evaluated at the bound that minimises each term. Objective
coefficients and variables are integral, so every bound is rounded up.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .formulations import IlpProblem

INF = 10**9
_EPS = 1e-6
BRANCHING = ("most-fractional-demand", "index-order")


@dataclass(frozen=True)
class SolverConfig:
    time_limit: float | None = None
    node_limit: int = 100_000
    branching: str = "most-fractional-demand"
    deterministic: bool = True
    use_lp: bool = True
    strengthen: bool = True

    def __post_init__(self):
        if self.branching not in BRANCHING:
            raise ValueError(f"unknown branching rule {self.branching!r}")
        if self.node_limit <= 0 or (self.time_limit is not None and self.time_limit <= 0):
            raise ValueError("solver limits must be positive")


@dataclass
class Solution:
    status: str  # "optimal", "feasible" (limit hit), "infeasible", "unknown" (limit, no incumbent)
    values: list[int] = field(default_factory=list)
    objective: int | None = None
    nodes_explored: int = 0
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "feasible")


class _Compiled:
    def __init__(self, problem: IlpProblem, strengthen: bool = True):
        self.n = problem.num_vars
        self.lb0 = [v.lb for v in problem.variables]
        self.ub0 = [INF if v.ub is None else v.ub for v in problem.variables]
        self.cost = [0] * self.n
        for j, c in problem.objective.items():
            self.cost[j] = c
        self.scale = 1
        if problem.tie_break:
            # lexicographic: one unit of the primary outweighs any secondary difference
            self.scale = 1 + sum(abs(w) for w in problem.tie_break.values())
            self.cost = [c * self.scale for c in self.cost]
            for j, w in problem.tie_break.items():
                self.cost[j] += w
        # rows as (indices, coefficients, lower, upper); lower/upper may be +-INF
        self.rows = []
        for c in problem.constraints:
            idx = [j for j, _ in c.coeffs]
            coef = [a for _, a in c.coeffs]
            lo = c.rhs if c.sense in ("=", ">=") else -INF
            hi = c.rhs if c.sense in ("=", "<=") else INF
            self.rows.append((idx, coef, lo, hi))
        self.num_model_rows = len(self.rows)
        if strengthen:
            self.rows.extend(_implied_rows(problem))
        self.var_rows = [[] for _ in range(self.n)]
        for r, (idx, _, _, _) in enumerate(self.rows):
            for j in idx:
                self.var_rows[j].append(r)
        self.priority = _branch_priority(problem)


def _implied_rows(problem: IlpProblem) -> list[tuple]:
    """Aggregated capacity/coverage rows implied by the model rows.

    With C the free capacity of station s and n_i the number of backlog lines
    for SKU i, capacity and coverage imply
        sum_o y_ios <= min(C, n_i) * sum_{p holds i} x_ps   for every SKU i,
        sum_{o,i} y_ios <= C * sum_p x_ps.
    Every integer solution satisfies both; the LP relaxation does not, because a
    fractional pod may cover many fractional lines.
    """
    state = problem.state
    if state is None or not any(v.role == "y_ios" for v in problem.variables):
        return []
    idx = problem.index
    rows = []
    for st in state.stations:
        cap = st.free_capacity
        lines_by_sku: dict[int, list[int]] = {}
        for o in state.backlog:
            for i in o.lines:
                lines_by_sku.setdefault(i, []).append(idx[("y_ios", (o.id, i, st.id))])
        for i in sorted(lines_by_sku):
            ys = lines_by_sku[i]
            m = min(cap, len(ys))
            xs = [idx[("x", (p, st.id))] for p in state.pods_with_sku(i)]
            rows.append((ys + xs, [1] * len(ys) + [-m] * len(xs), -INF, 0))
        ys = [j for i in sorted(lines_by_sku) for j in lines_by_sku[i]]
        if ys:
            xs = [idx[("x", (p.id, st.id))] for p in state.pods]
            rows.append((ys + xs, [1] * len(ys) + [-cap] * len(xs), -INF, 0))
    return rows


def _branch_priority(problem: IlpProblem) -> list[tuple]:
    """Order/station structure first (big orders first), then pods by demand covered."""
    state = problem.state
    sizes = {o.id: o.size for o in state.backlog} if state else {}
    demand: dict[int, int] = {}
    if state:
        for p in state.pods:
            demand[p.id] = sum(1 for o in state.backlog for i in o.lines if i in p.skus)
    rank = {"y_os": 0, "y_o": 1, "x": 2, "y_ios": 3, "y_b": 4, "y_l": 5, "e_o": 6, "u": 7}
    out = []
    for j, v in enumerate(problem.variables):
        if v.role == "y_os":
            score = -sizes.get(v.key[0], 0)
        elif v.role == "x":
            score = -demand.get(v.key[0], 0)
        else:
            score = 0
        out.append((rank.get(v.role, 8), score, j))
    return out


def _propagate(comp: _Compiled, lb: list, ub: list, queue: set) -> bool:
    """Tighten bounds in place until fixpoint. Returns False on infeasibility."""
    rows = comp.rows
    var_rows = comp.var_rows
    while queue:
        r = queue.pop()
        idx, coef, lo, hi = rows[r]
        minact = 0
        maxact = 0
        for j, a in zip(idx, coef):
            if a > 0:
                minact += a * lb[j]
                maxact += a * ub[j]
            else:
                minact += a * ub[j]
                maxact += a * lb[j]
        if minact > hi or maxact < lo:
            return False
        if (hi >= INF or maxact <= hi) and (lo <= -INF or minact >= lo):
            continue
        for j, a in zip(idx, coef):
            lj, uj = lb[j], ub[j]
            new_l, new_u = lj, uj
            if hi < INF:
                if a > 0:
                    rest = minact - a * lj
                    new_u = min(new_u, (hi - rest) // a)
                else:
                    rest = minact - a * uj
                    new_l = max(new_l, -((hi - rest) // -a))
            if lo > -INF:
                if a > 0:
                    rest = maxact - a * uj
                    new_l = max(new_l, -((rest - lo) // a))
                else:
                    rest = maxact - a * lj
                    new_u = min(new_u, (rest - lo) // -a)
            if new_l > new_u:
                return False
            if new_l != lj or new_u != uj:
                lb[j], ub[j] = new_l, new_u
                for r2 in var_rows[j]:
                    if r2 != r:
                        queue.add(r2)
                # activities changed; re-queue this row to recompute from scratch
                queue.add(r)
                break
    return True


class _LpBound:
    def __init__(self, comp: _Compiled):
        import highspy

        self._highspy = highspy
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("presolve", "off")
        h.setOptionValue("solver", "simplex")
        h.setOptionValue("random_seed", 0)
        lp = highspy.HighsLp()
        n = comp.n
        lp.num_col_ = n
        lp.num_row_ = len(comp.rows)
        lp.col_cost_ = np.array(comp.cost, dtype=float)
        lp.col_lower_ = np.array(comp.lb0, dtype=float)
        lp.col_upper_ = np.array([highspy.kHighsInf if u >= INF else u for u in comp.ub0], dtype=float)
        inf = highspy.kHighsInf
        lp.row_lower_ = np.array([-inf if lo <= -INF else lo for _, _, lo, _ in comp.rows], dtype=float)
        lp.row_upper_ = np.array([inf if hi >= INF else hi for _, _, _, hi in comp.rows], dtype=float)
        cols = [[] for _ in range(n)]
        for r, (idx, coef, _, _) in enumerate(comp.rows):
            for j, a in zip(idx, coef):
                cols[j].append((r, a))
        start, index, value = [0], [], []
        for col in cols:
            for r, a in col:
                index.append(r)
                value.append(a)
            start.append(len(index))
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = np.array(start, dtype=np.int32)
        lp.a_matrix_.index_ = np.array(index, dtype=np.int32)
        lp.a_matrix_.value_ = np.array(value, dtype=float)
        h.passModel(lp)
        self.h = h
        self.n = n
        self.all_idx = np.arange(n, dtype=np.int32)

    def solve(self, lb, ub):
        hs = self._highspy
        lower = np.array(lb, dtype=float)
        upper = np.array(ub, dtype=float)
        upper[upper >= INF] = hs.kHighsInf
        self.h.changeColsBounds(self.n, self.all_idx, lower, upper)
        self.h.run()
        status = self.h.getModelStatus()
        if status == hs.HighsModelStatus.kInfeasible:
            return None, None
        if status != hs.HighsModelStatus.kOptimal:
            # numerical trouble: fall back to a cold start once
            self.h.clearSolver()
            self.h.run()
            if self.h.getModelStatus() != hs.HighsModelStatus.kOptimal:
                return None, None
        obj = self.h.getInfo().objective_function_value
        return obj, list(self.h.getSolution().col_value)


def _feasible(comp: _Compiled, values: list[int]) -> bool:
    for idx, coef, lo, hi in comp.rows[:comp.num_model_rows]:
        act = sum(a * values[j] for j, a in zip(idx, coef))
        if act < lo or act > hi:
            return False
    return all(comp.lb0[j] <= values[j] <= comp.ub0[j] for j in range(comp.n))


def solve(problem: IlpProblem, config: SolverConfig | None = None) -> Solution:
    """Minimise ``problem`` exactly (within the configured limits)."""
    config = config or SolverConfig()
    start = time.perf_counter()
    comp = _Compiled(problem, config.strengthen)
    n = comp.n
    lb = list(comp.lb0)
    ub = list(comp.ub0)
    if not _propagate(comp, lb, ub, set(range(len(comp.rows)))):
        return Solution("infeasible", nodes_explored=1, wall_time=time.perf_counter() - start)
    lp = _LpBound(comp) if config.use_lp and n else None
    order = [j for _, _, j in sorted(comp.priority)]

    best_val = _dive(comp, lb, ub, order)
    best_obj = math.inf if best_val is None else sum(c * v for c, v in zip(comp.cost, best_val))
    nodes = 0
    limited = False
    stack = [(lb, ub)]
    while stack:
        if nodes >= config.node_limit or (
                not config.deterministic and config.time_limit is not None
                and time.perf_counter() - start > config.time_limit):
            limited = True
            break
        lb, ub = stack.pop()
        nodes += 1
        if lp is not None:
            z, x = lp.solve(lb, ub)
            if z is None:
                continue
            bound = math.ceil(z - _EPS)
            if bound >= best_obj:
                continue
            frac = [j for j in range(n) if abs(x[j] - round(x[j])) > _EPS]
            if not frac:
                cand = [int(round(v)) for v in x]
                if _feasible(comp, cand):
                    obj = sum(c * v for c, v in zip(comp.cost, cand))
                    if obj < best_obj:
                        best_obj, best_val = obj, cand
                    continue
                frac = [j for j in range(n) if lb[j] != ub[j]]
                if not frac:
                    continue
            if config.branching == "index-order":
                j = min(frac)
            else:
                j = min(frac, key=lambda k: (comp.priority[k][0], comp.priority[k][1],
                                             abs(x[k] - math.floor(x[k]) - 0.5), k))
            v = x[j]
            down = math.floor(v + _EPS) if abs(v - round(v)) <= _EPS else math.floor(v)
            up = down + 1
            if abs(v - round(v)) <= _EPS:
                down, up = int(round(v)), int(round(v)) + 1
                if up > ub[j]:
                    down, up = int(round(v)) - 1, int(round(v))
            children = []
            for side in ("down", "up"):
                l2, u2 = list(lb), list(ub)
                if side == "down":
                    u2[j] = min(u2[j], down)
                else:
                    l2[j] = max(l2[j], up)
                if l2[j] > u2[j]:
                    continue
                if _propagate(comp, l2, u2, set(comp.var_rows[j])):
                    children.append((side, l2, u2))
            # explore the side closer to the LP value first (pushed last)
            prefer_up = v - math.floor(v) >= 0.5
            children.sort(key=lambda c: (c[0] == "up") == prefer_up)
            stack.extend((l2, u2) for _, l2, u2 in children)
        else:
            bound = sum(c * (lb[j] if c > 0 else ub[j]) for j, c in enumerate(comp.cost) if c)
            if bound >= best_obj:
                continue
            j = next((k for k in order if lb[k] != ub[k]), None)
            if j is None:
                if _feasible(comp, lb):
                    best_obj, best_val = bound, list(lb)
                continue
            if ub[j] - lb[j] > 1:
                splits = [(lb[j], lb[j]), (lb[j] + 1, ub[j])]
            else:
                splits = [(lb[j], lb[j]), (ub[j], ub[j])]
            if comp.cost[j] <= 0 and ub[j] - lb[j] == 1:
                splits.reverse()  # free or rewarded variables: try the upper value first
            for lo_v, hi_v in reversed(splits):
                l2, u2 = list(lb), list(ub)
                l2[j], u2[j] = lo_v, hi_v
                if _propagate(comp, l2, u2, set(comp.var_rows[j])):
                    stack.append((l2, u2))

    wall = time.perf_counter() - start
    if best_val is None:
        return Solution("unknown" if limited else "infeasible", [], None, nodes, wall)
    primary = int(round(problem.objective_value(best_val)))
    return Solution("feasible" if limited else "optimal", best_val, primary, nodes, wall)


def _dive(comp: _Compiled, lb: list, ub: list, order: list[int]) -> list[int] | None:
    """Fix variables to their lower bound in branching order; a cheap first incumbent."""
    lb, ub = list(lb), list(ub)
    for j in order:
        if lb[j] == ub[j]:
            continue
        l2, u2 = list(lb), list(ub)
        u2[j] = lb[j]
        if _propagate(comp, l2, u2, set(comp.var_rows[j])):
            lb, ub = l2, u2
            continue
        l2, u2 = list(lb), list(ub)
        l2[j] = lb[j] + 1
        if not _propagate(comp, l2, u2, set(comp.var_rows[j])):
            return None
        lb, ub = l2, u2
    return lb if _feasible(comp, lb) else None


def check_certificate(problem: IlpProblem, solution: Solution) -> bool:
    """True iff the solution satisfies every row and domain and its objective recomputes."""
    if not solution.values or len(solution.values) != problem.num_vars:
        return False
    if problem.violated(solution.values):
        return False
    return solution.objective == problem.objective_value(solution.values)
