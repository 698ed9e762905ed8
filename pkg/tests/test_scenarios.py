import numpy as np
import pytest

from reachtamp.errors import GenerationFailure, NoSolution, ScenarioFormatError
from reachtamp.ik import IKParams, OrientationConstraint, solve_constrained_ik
from reachtamp.model import load_robot_model
from reachtamp.scenario import bundled_scenario, load_scenario, save_scenario
from reachtamp.scenarios import generate_scenario, normalize_kind, scenario_kinds

MODEL = load_robot_model()


def test_kind_aliases():
    assert normalize_kind("pickplace") == "pick_place"
    assert normalize_kind("table-clearing") == "table_clearing"
    assert normalize_kind("sorting-far") == "sorting_far"
    with pytest.raises(ScenarioFormatError):
        normalize_kind("towers_of_hanoi")


def test_generators_deterministic_per_seed():
    for kind in scenario_kinds():
        assert generate_scenario(kind, 3) == generate_scenario(kind, 3)
    a = generate_scenario("pick_place", 1)
    b = generate_scenario("pick_place", 2)
    assert a != b


def test_pick_place_objects_within_chain_reach():
    # oracle: base must stand clear of the table on the near side, and the
    # summed distal link lengths bound the reach from there
    raw = generate_scenario("pick_place", 0)
    assert len(raw["movables"]) == 3
    reach_ceiling = 0.10 + (0.30 + 0.25 + 0.15)  # shoulder offsets + distal links
    table_near_edge = 0.8
    footprint = MODEL.base_footprint_radius
    for m in raw["movables"]:
        x, y, _ = m["center"]
        base_y = table_near_edge - footprint
        dist = np.hypot(0.0, max(0.0, y - base_y))
        assert dist <= reach_ceiling


def test_pick_place_objects_verified_by_restricted_ik():
    raw = generate_scenario("pick_place", 5)
    world = load_scenario(raw).world
    near_strip = ((-2.0, -0.8), (2.0, 0.55))
    for m in raw["movables"]:
        q = solve_constrained_ik(
            np.asarray(m["center"]),
            OrientationConstraint.vertical_down(0.15),
            MODEL,
            world,
            None,
            IKParams(restart_count=8, max_iterations=120),
            restart_seed=7,
            base_bounds=near_strip,
        )
        assert q.base_y <= 0.55 + 1e-9


def test_sorting_far_has_near_unreachable_object():
    raw = generate_scenario("sorting_far", 2)
    world = load_scenario(raw).world
    near_strip = ((-2.2, -1.0), (2.2, 0.20))
    failures = 0
    for m in raw["movables"]:
        if m["center"][1] < 0.9:
            continue  # near-band object
        with pytest.raises(NoSolution):
            solve_constrained_ik(
                np.asarray(m["center"]),
                OrientationConstraint.vertical_down(0.15),
                MODEL,
                world,
                None,
                IKParams(restart_count=8, max_iterations=120),
                restart_seed=3,
                base_bounds=near_strip,
            )
        failures += 1
    assert failures >= 1


def test_table_clearing_contract():
    raw = generate_scenario("table_clearing", 0)
    assert raw["drawer"] is not None
    assert raw["drawer"]["extension"] == 0.0
    scen = load_scenario(raw)
    assert ("drawerclosed",) in __import__("reachtamp.symbolic", fromlist=["build_domain"]).build_domain(
        scen.domain, scen.world
    ).initial_atoms
    assert scen.goal == frozenset({("in", "cup", "drawer"), ("drawerclosed",)})


def test_generation_failure_when_oracle_never_passes(monkeypatch):
    monkeypatch.setattr("reachtamp.scenarios._reachable", lambda *a, **k: False)
    with pytest.raises(GenerationFailure):
        generate_scenario("pick_place", 0)


def test_scenario_file_round_trip(tmp_path):
    raw = generate_scenario("sorting", 1)
    path = save_scenario(raw, tmp_path / "s.json")
    scen = load_scenario(path)
    assert scen.domain == "sorting"
    assert {m.id for m in scen.world.movables} == {"blue_block", "green_block"}
    assert scen.world.region("tray_blue").color == "blue"


def test_scenario_validation_errors():
    with pytest.raises(ScenarioFormatError):
        load_scenario({"format": 2})
    raw = generate_scenario("pick_place", 0)
    bad = dict(raw)
    bad.pop("workspace")
    with pytest.raises(ScenarioFormatError):
        load_scenario(bad)
    bad2 = dict(raw, movables=[{"id": "x", "kind": "cone", "center": [0, 0, 0]}])
    with pytest.raises(ScenarioFormatError):
        load_scenario(bad2)


def test_bundled_regression_scenario_loads():
    raw = bundled_scenario("firstpick_regression")
    scen = load_scenario(raw)
    assert scen.name == "firstpick_regression"
    assert {m.id for m in scen.world.movables} == {"blue_block", "green_block"}
