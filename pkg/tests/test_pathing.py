import itertools

import pytest
from hypothesis import given, strategies as st

from rmfs_poa.instances import desk_layout
from rmfs_poa.pathing import (CollisionError, Grid, Kinematics, ReservationTable, check_paths,
                              distance_m, joint_bfs_makespan, plan_group, plan_path, travel_time)

SIDING = ["##.##", "....."]


def test_straight_corridor():
    g = Grid.from_strings(["......"])
    plan = plan_path(g, ReservationTable(), 0, (0, 0), (5, 0), 0)
    assert plan.reached and plan.moves == 5
    assert distance_m(plan.cells) == 5.0


def test_already_there():
    g = Grid.from_strings(["..."])
    plan = plan_path(g, ReservationTable(), 0, (1, 0), (1, 0), 0)
    assert plan.cells == [(1, 0)] and plan.moves == 0


def test_waits_for_reserved_cell():
    g = Grid.from_strings(["..."])
    table = ReservationTable()
    table.reserve(1, [(2, 0), (1, 0), (2, 0)], 0)
    plan = plan_path(g, table, 0, (0, 0), (2, 0), 0)
    assert plan.reached
    table.reserve(0, plan.cells, 0)
    table.check()
    assert plan.end_tick > 2


def test_reservation_conflicts_raise():
    table = ReservationTable()
    table.reserve(1, [(0, 0), (1, 0)], 0)
    with pytest.raises(CollisionError):
        table.reserve(2, [(1, 0)], 1)
    with pytest.raises(CollisionError):
        table.reserve(2, [(1, 0), (0, 0)], 0)


def test_release_frees_future_ticks():
    table = ReservationTable()
    table.reserve(1, [(0, 0), (1, 0), (2, 0)], 0)
    table.release(1, 1)
    assert table.vertex_owner((0, 0), 0) == 1
    assert table.vertex_owner((1, 0), 1) is None


def test_park_blocks_later_arrivals():
    table = ReservationTable()
    table.reserve(1, [(0, 0)], 0, park=True)
    assert not table.free_for(2, (0, 0), 50)
    assert table.free_for(1, (0, 0), 50)


@pytest.mark.parametrize("goals, expected", [(((4, 1), (2, 0)), 5), (((4, 1), (0, 1)), 6)])
def test_two_robot_siding_matches_joint_bfs(goals, expected):
    g = Grid.from_strings(SIDING)
    starts = ((0, 1), (4, 1))
    ref = joint_bfs_makespan(g, starts, goals)
    paths, span = plan_group(g, list(starts), list(goals))
    assert ref == expected and span == ref
    check_paths(paths)


def test_check_paths_catches_swap():
    with pytest.raises(CollisionError):
        check_paths([[(0, 0), (1, 0)], [(1, 0), (0, 0)]])
    with pytest.raises(CollisionError):
        check_paths([[(0, 0), (1, 0)], [(2, 0), (1, 0)]])


def test_travel_time_examples():
    kin = Kinematics()
    assert kin.tick == pytest.approx(2 / 3)
    assert travel_time([(0, 0), (1, 0)], kin) == pytest.approx(2.0)
    assert travel_time([(k, 0) for k in range(31)], kin) == pytest.approx(20.0)
    # one cell east, one cell north: two 1 m runs and a quarter turn
    assert travel_time([(0, 0), (1, 0), (1, 1)], kin) == pytest.approx(4.0 + 1.25)
    assert travel_time([(0, 0)], kin, lifts=1) == pytest.approx(2.2)


def test_layout_grid_connects_stations_and_storage():
    lay = desk_layout()
    g = Grid.from_layout(lay)
    for st in lay.stations:
        d = g.distances_to(st.entry)
        for cell in lay.storage_cells:
            assert any(n in d for n in g.neighbours(cell))


small_grids = st.sampled_from([SIDING, ["...", "...", "..."], [".#.", "...", ".#."], ["....", ".##.", "...."]])


@given(small_grids, st.data())
def test_prioritised_plans_are_collision_free(rows, data):
    g = Grid.from_strings(rows)
    cells = sorted(g.free)
    pair = data.draw(st.permutations(cells))
    starts, goals = pair[:2], data.draw(st.permutations(cells))[:2]
    res = plan_group(g, list(starts), list(goals), max_delay=2)
    ref = joint_bfs_makespan(g, tuple(starts), tuple(goals))
    if res is None:
        return
    paths, span = res
    check_paths(paths)
    assert [p[0] for p in paths] == list(starts) and [p[-1] for p in paths] == list(goals)
    assert ref is not None and span >= ref
