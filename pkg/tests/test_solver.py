import numpy as np
import pytest
from hypothesis import given, settings

from rmfs_poa.core import ModelParams, Order, Pod, Station, VARIANTS, WarehouseState
from rmfs_poa.fixtures import random_state, shared_pod_state, two_identical_orders
from rmfs_poa.formulations import Constraint, IlpProblem, Variable, build, decode
from rmfs_poa.oracle import brute_force_oracle, min_cover
from rmfs_poa.solver import SolverConfig, check_certificate, solve

from conftest import tiny_states


def single_var(rhs):
    return IlpProblem([Variable("x", "x", (1, 1))], {0: 1}, [Constraint("c", ((0, 1),), ">=", rhs)],
                      "integrated")


def test_min_x_at_least_one():
    sol = solve(single_var(1))
    assert sol.status == "optimal" and sol.objective == 1


def test_infeasible_system():
    assert solve(single_var(2)).status == "infeasible"


def test_certificate():
    p = single_var(1)
    assert check_certificate(p, solve(p))
    assert not check_certificate(p, solve(p).__class__("optimal", [0], 0))


def test_certificate_mutation():
    p = build(two_identical_orders(), "integrated")
    sol = solve(p)
    assert check_certificate(p, sol)
    flipped = list(sol.values)
    flipped[0] = 1 - flipped[0]
    assert not check_certificate(p, sol.__class__("optimal", flipped, sol.objective))


def test_fixture_objectives():
    assert [solve(build(two_identical_orders(), v)).objective for v in VARIANTS] == [4, 2, 2]
    assert [brute_force_oracle(two_identical_orders(), v)[0] for v in VARIANTS] == [4, 2, 2]
    assert [solve(build(shared_pod_state(), v)).objective for v in VARIANTS] == [4, 4, 4]


def test_oracle_empty_backlog():
    state = WarehouseState((Station(1, 3), Station(2, 2)), (Pod(1, {1}),), ())
    obj, a = brute_force_oracle(state, "integrated")
    assert obj == 10 and not a.pod_station


def test_oracle_size_bound():
    state = WarehouseState((Station(1, 20),), (Pod(1, set(range(1, 10))),),
                           tuple(Order(o, {1}) for o in range(1, 20)))
    with pytest.raises(ValueError):
        brute_force_oracle(state, "integrated")


def test_min_cover():
    pods = {1: frozenset({1, 2}), 2: frozenset({3}), 3: frozenset({1, 2, 3})}
    assert min_cover(pods, frozenset({1, 2, 3})) == (3,)
    assert min_cover(pods, frozenset({1, 2, 3}), exclude=frozenset({3})) == (1, 2)
    assert min_cover(pods, frozenset({4})) is None


def test_deterministic():
    p = build(shared_pod_state(), "split_time")
    a, b = solve(p), solve(p)
    assert a.values == b.values and a.nodes_explored == b.nodes_explored


def test_node_limit_reports_feasible():
    rng = np.random.default_rng(4)
    state = random_state(rng, max_orders=8, max_pods=10, num_skus=8)
    sol = solve(build(state, "integrated"), SolverConfig(node_limit=1, use_lp=False))
    assert sol.status in ("feasible", "optimal", "unknown")


def test_bad_config():
    with pytest.raises(ValueError):
        SolverConfig(node_limit=0)
    with pytest.raises(ValueError):
        SolverConfig(branching="random")


@pytest.mark.parametrize("branching", ["most-fractional-demand", "index-order"])
def test_branching_rules_agree(branching):
    state = shared_pod_state()
    cfg = SolverConfig(branching=branching, use_lp=False)
    assert solve(build(state, "integrated"), cfg).objective == 4


def test_tie_break_keeps_primary_objective():
    p = build(two_identical_orders(), "integrated")
    base = solve(p).objective
    p.tie_break = {j: 5 for j, v in enumerate(p.variables) if v.role == "x" and v.key[0] == 1}
    sol = solve(p)
    assert sol.objective == base and check_certificate(p, sol)


@given(tiny_states(residual=True))
def test_matches_oracle(state):
    for v in VARIANTS:
        ref, _ = brute_force_oracle(state, v)
        assert solve(build(state, v)).objective == ref


@settings(max_examples=25)
@given(tiny_states(residual=True))
def test_matches_oracle_with_packing(state):
    for c in (0, 1, 2):
        params = ModelParams(packing_capacity=c + state.active_splits)
        for v in ("split_stations", "split_time"):
            ref, _ = brute_force_oracle(state, v, params)
            sol = solve(build(state, v, params))
            assert (sol.objective if sol.ok else None) == ref


@given(tiny_states())
def test_oracle_assignment_is_feasible(state):
    from rmfs_poa.core import validate_assignment
    for v in VARIANTS:
        obj, a = brute_force_oracle(state, v)
        assert validate_assignment(state, a, v) == []
        assert a.objective_value == obj
