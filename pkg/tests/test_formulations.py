import pytest
from hypothesis import given

from rmfs_poa.core import ModelParams, Order, Pod, PodStatus, Station, WarehouseState, validate_assignment
from rmfs_poa.fixtures import BLUE, ORANGE, two_identical_orders
from rmfs_poa.formulations import (ROLE_ORDER, add_packing_capacity, build, build_integrated,
                                   build_split_stations, build_split_time, decode, encode, to_lp)
from rmfs_poa.oracle import brute_force_oracle
from rmfs_poa.solver import solve

from conftest import tiny_states


def test_integrated_variable_counts():
    p = build_integrated(two_identical_orders())
    assert p.num_vars == 18
    assert [p.role_count(r) for r in ("x", "y_os", "y_ios", "u")] == [4, 4, 8, 2]


def test_objective_covers_x_and_u_only():
    p = build_split_time(two_identical_orders())
    roles = {p.variables[j].role: c for j, c in p.objective.items()}
    assert roles == {"x": 1, "u": 2}
    assert len(p.objective) == p.role_count("x") + p.role_count("u")


def test_forced_pod_row():
    state = WarehouseState((Station(1, 2, pods=(7,)),),
                           (Pod(7, {ORANGE}, PodStatus.AT_STATION, 1),), ())
    p = build_integrated(state)
    forced = [c for c in p.constraints if c.tag == "forced"]
    assert len(forced) == 1
    assert forced[0].coeffs == ((p.var("x", 7, 1), 1),) and forced[0].rhs == 1


def test_empty_backlog_optimum():
    state = WarehouseState((Station(1, 3), Station(2, 4)), (Pod(1, {1}),), ())
    for v in ("integrated", "split_stations", "split_time"):
        sol = solve(build(state, v))
        assert sol.objective == 2 * 7


def test_example_optima():
    state = two_identical_orders()
    assert solve(build_integrated(state)).objective == 4
    assert solve(build_split_stations(state)).objective == 2
    a = decode(build_split_stations(state), solve(build_split_stations(state)).values)
    # each colour goes to exactly one station, both orders split the same way
    stations = {i: {s for _, j, s in a.line_station if j == i} for i in (ORANGE, BLUE)}
    assert all(len(s) == 1 for s in stations.values())
    assert stations[ORANGE] != stations[BLUE]


def test_single_station_variants_agree():
    state = WarehouseState((Station(1, 4),), (Pod(1, {1}), Pod(2, {2}), Pod(3, {1, 3})),
                           (Order(1, {1, 2}), Order(2, {3}), Order(3, {1, 3})))
    objs = {v: solve(build(state, v)).objective for v in ("integrated", "split_stations")}
    assert objs["integrated"] == objs["split_stations"]


def test_one_line_order_same_everywhere():
    state = WarehouseState((Station(1, 1),), (Pod(1, {1}),), (Order(1, {1}),))
    assert {solve(build(state, v)).objective for v in ("integrated", "split_stations", "split_time")} == {1}


def test_packing_on_integrated_rejected():
    with pytest.raises(ValueError):
        add_packing_capacity(build_integrated(two_identical_orders()), ModelParams(packing_capacity=1))


def test_packing_no_headroom_equals_integrated():
    state = two_identical_orders()
    p = build_split_stations(state, ModelParams(packing_capacity=0))
    assert solve(p).objective == 4


def test_packing_one_split_allowed():
    # a single split cannot help: the other order still needs both pods at one station
    state = two_identical_orders()
    params = ModelParams(packing_capacity=1)
    obj = solve(build_split_stations(state, params)).objective
    assert obj == brute_force_oracle(state, "split_stations", params)[0] == 4


def test_decode_zero_solution():
    state = two_identical_orders()
    p = build_integrated(state)
    values = [0] * p.num_vars
    for s in (1, 2):
        values[p.var("u", s)] = 2
    a = decode(p, values)
    assert not a.pod_station and not a.line_station and a.objective_value == 8


def test_decode_rejects_infeasible():
    p = build_integrated(two_identical_orders())
    with pytest.raises(ValueError):
        decode(p, [0] * p.num_vars)
    with pytest.raises(ValueError):
        decode(p, [0])


def test_decode_by_name():
    p = build_integrated(two_identical_orders())
    sol = solve(p)
    named = {v.name: sol.values[j] for j, v in enumerate(p.variables)}
    assert decode(p, named) == decode(p, sol.values)


def test_lp_export_column_order():
    p = build_split_stations(two_identical_orders(), ModelParams(packing_capacity=1))
    text = to_lp(p)
    assert text.startswith("\\ variant: split_stations\nMinimize")
    ranks = [ROLE_ORDER.index(v.role) for v in p.variables]
    assert ranks == sorted(ranks)
    assert "Binary" in text and "General" in text and text.rstrip().endswith("End")


@given(tiny_states(residual=True))
def test_round_trip_and_validation(state):
    for v in ("integrated", "split_stations", "split_time"):
        p = build(state, v)
        sol = solve(p)
        assert sol.status == "optimal"
        a = decode(p, sol.values)
        assert encode(p, a) == sol.values
        assert validate_assignment(state, a, v) == []
        assert a.objective_value == len(a.pod_station) + 2 * sum(a.unused.values())


@given(tiny_states())
def test_solutions_lift_to_weaker_variants(state):
    # an integrated optimum, re-encoded, satisfies both split models
    a = decode(build(state, "integrated"), solve(build(state, "integrated")).values)
    lifted = a.__class__(a.pod_station, a.order_station, a.line_station, a.unused,
                         frozenset(o for o, _ in a.order_station), objective_value=a.objective_value)
    for v in ("split_stations", "split_time"):
        p = build(state, v)
        assert not p.violated(encode(p, lifted))
        assert validate_assignment(state, lifted, v) == []
