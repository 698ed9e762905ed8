import numpy as np
import pytest

from reachtamp.errors import EmptyFrontier, NoPlan
from reachtamp.symbolic import (
    Frontier,
    GeomState,
    SearchNode,
    best_first_plan,
    best_first_step,
    build_domain,
    builtin_domains,
    expand,
    format_atom,
    goal_test,
    parse_atom,
    replay_plan,
)
from reachtamp.world import Drawer, MovableObject, Region, World


def euclidean(x1, x2):
    return float(np.linalg.norm(np.asarray(x1) - np.asarray(x2)))


def pick_world(n_objects=1, regions=("tray",)):
    movables = [
        MovableObject(f"b{i}", "box", np.array([0.2 * i, 1.0, 0.46]), half=np.full(3, 0.03))
        for i in range(n_objects)
    ]
    regs = [
        Region(name, np.array([0.8 + 0.3 * k, 1.0, 0.41]), np.array([0.12, 0.12, 0.01]))
        for k, name in enumerate(regions)
    ]
    return World(movables=movables, regions=regs, p_min=(-2, -2, 0.1), p_max=(2, 2, 1.5))


def drawer_world():
    drawer = Drawer(
        body_center_closed=np.array([0.0, 1.275, 0.33]),
        body_half=np.array([0.20, 0.175, 0.05]),
        axis=np.array([0.0, -1.0, 0.0]),
        travel=(0.0, 0.30),
        knob_closed=np.array([0.0, 1.02, 0.33]),
    )
    movables = [MovableObject("cup", "box", np.array([0.0, 1.18, 0.43]), half=np.full(3, 0.03))]
    return World(movables=movables, drawer=drawer, p_min=(-2, -1.5, 0.1), p_max=(2, 2, 1.5))


def test_atom_round_trip():
    assert parse_atom("in(b1,tray_blue)") == ("in", "b1", "tray_blue")
    assert parse_atom("handempty") == ("handempty",)
    assert format_atom(("on", "b1", "table")) == "on(b1,table)"
    assert format_atom(("drawerclosed",)) == "drawerclosed"


def test_goal_test_subset_semantics():
    s0 = frozenset({("handempty",), ("on", "b0", "table")})
    assert goal_test(s0, frozenset())
    assert goal_test(s0, frozenset({("handempty",)}))
    assert not goal_test(s0, frozenset({("in", "b0", "tray")}))
    superset = s0 | {("in", "b0", "tray")}
    assert goal_test(superset, frozenset({("in", "b0", "tray")}))


def test_expand_single_object_only_pick_applicable():
    world = pick_world(1)
    domain = build_domain("pick_place", world)
    geom = GeomState.from_world(world)
    root = SearchNode(domain.initial_atoms, (), 0.0, [np.zeros(3)], geom)
    succ = expand(root, domain.operators, euclidean)
    assert [s.actions[-1].signature for s in succ] == ["pick(b0)"]


def test_expand_holding_gives_place_only():
    world = pick_world(1)
    domain = build_domain("pick_place", world)
    geom = GeomState.from_world(world)
    root = SearchNode(domain.initial_atoms, (), 0.0, [np.zeros(3)], geom)
    picked = expand(root, domain.operators, euclidean)[0]
    succ = expand(picked, domain.operators, euclidean)
    assert [s.actions[-1].signature for s in succ] == ["place(b0,tray)"]


def test_expand_prunes_infinite_cost():
    world = pick_world(1)
    domain = build_domain("pick_place", world)
    geom = GeomState.from_world(world)
    root = SearchNode(domain.initial_atoms, (), 0.0, [np.zeros(3)], geom)
    assert expand(root, domain.operators, lambda a, b: float("inf")) == []


def test_gcost_accumulates_heuristic_between_switches():
    world = pick_world(1)
    domain = build_domain("pick_place", world)
    geom = GeomState.from_world(world)
    root = SearchNode(domain.initial_atoms, (), 0.0, [np.zeros(3)], geom)
    picked = expand(root, domain.operators, euclidean)[0]
    placed = expand(picked, domain.operators, euclidean)[0]
    total = euclidean(np.zeros(3), picked.switch_points[1]) + euclidean(
        picked.switch_points[1], placed.switch_points[2]
    )
    assert placed.g_cost == pytest.approx(total, abs=1e-9)


def test_best_first_step_ordering():
    f = Frontier()
    geom = GeomState({}, 0.0, None)
    a = SearchNode(frozenset(), (), 4.1, [np.zeros(3)], geom)
    b = SearchNode(frozenset(), (), 3.2, [np.zeros(3)], geom)
    f.push(a)
    f.push(b)
    assert best_first_step(f) is b
    assert best_first_step(f) is a
    with pytest.raises(EmptyFrontier):
        best_first_step(f)


def test_tie_breaks_fewer_actions_then_insertion():
    world = pick_world(1)
    domain = build_domain("pick_place", world)
    op = domain.operators[0]
    geom = GeomState.from_world(world)
    f = Frontier()
    longer = SearchNode(frozenset(), (op, op, op), 1.0, [np.zeros(3)], geom)
    shorter = SearchNode(frozenset(), (op, op), 1.0, [np.zeros(3)], geom)
    f.push(longer)
    f.push(shorter)
    assert best_first_step(f) is shorter
    first_in = SearchNode(frozenset({("a",)}), (op,), 1.0, [np.zeros(3)], geom)
    second_in = SearchNode(frozenset({("b",)}), (op,), 1.0, [np.zeros(3)], geom)
    f2 = Frontier()
    f2.push(first_in)
    f2.push(second_in)
    assert best_first_step(f2) is first_in


def test_builtin_domains_listed():
    assert set(builtin_domains()) == {"pick_place", "sorting", "table_clearing"}


def test_table_clearing_unique_minimal_sequence():
    world = drawer_world()
    domain = build_domain("table_clearing", world)
    goal = frozenset({("in", "cup", "drawer"), ("drawerclosed",)})
    node = best_first_plan(domain, goal, np.array([0.0, 0.0, 0.6]), GeomState.from_world(world), euclidean)
    names = [op.name for op in node.actions]
    assert names == ["take_knob", "open_drawer", "pick_object", "drop_object", "take_knob", "close_drawer"]
    assert replay_plan(domain, node.actions, goal)


def test_sorting_two_objects_four_switches():
    world = pick_world(2, regions=("tray_blue", "tray_green"))
    domain = build_domain("sorting", world)
    goal = frozenset({("in", "b0", "tray_blue"), ("in", "b1", "tray_green")})
    node = best_first_plan(domain, goal, np.array([0.0, 0.0, 0.6]), GeomState.from_world(world), euclidean)
    assert len(node.actions) == 4
    assert replay_plan(domain, node.actions, goal)


def test_pick_place_three_objects_six_switches():
    world = pick_world(3)
    domain = build_domain("pick_place", world)
    goal = frozenset({("in", f"b{i}", "tray") for i in range(3)})
    node = best_first_plan(domain, goal, np.array([0.0, 0.0, 0.6]), GeomState.from_world(world), euclidean)
    assert len(node.actions) == 6
    assert replay_plan(domain, node.actions, goal)
    assert node.g_cost == pytest.approx(
        sum(euclidean(a, b) for a, b in zip(node.switch_points, node.switch_points[1:])), abs=1e-9
    )


def test_goal_already_satisfied_returns_empty_plan():
    world = pick_world(1)
    domain = build_domain("pick_place", world)
    node = best_first_plan(
        domain, frozenset({("handempty",)}), np.zeros(3), GeomState.from_world(world), euclidean
    )
    assert node.actions == ()


def test_unsatisfiable_goal_raises_no_plan():
    world = pick_world(1)
    domain = build_domain("pick_place", world)
    with pytest.raises(NoPlan):
        best_first_plan(
            domain, frozenset({("in", "b0", "nonexistent")}), np.zeros(3), GeomState.from_world(world), euclidean
        )


def test_drawer_slide_carries_contained_objects():
    world = drawer_world()
    domain = build_domain("table_clearing", world)
    goal = frozenset({("in", "cup", "drawer"), ("drawerclosed",)})
    node = best_first_plan(domain, goal, np.array([0.0, 0.0, 0.6]), GeomState.from_world(world), euclidean)
    # after the full plan the cup went into the open drawer and slid back with it
    drop_op = node.actions[3]
    assert drop_op.name == "drop_object"
    open_center = node.actions[1].switch_target(GeomState.from_world(world))
    final_cup = node.geom.object_centers["cup"]
    open_ext = world.drawer.travel[1]
    assert node.geom.drawer_extension == 0.0
    # cup center moved back by the closing travel along the axis
    drop_point = drop_op.switch_target(node.geom)
    assert np.allclose(final_cup, drop_point + world.drawer.axis * (0.0 - open_ext))
