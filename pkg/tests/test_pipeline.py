import numpy as np
import pytest

from reachtamp.bench import bench_graph_params, bench_opt_params, run_single
from reachtamp.errors import IntegrityViolation
from reachtamp.model import Configuration
from reachtamp.pipeline import PlanRequest, compute_metrics, plan
from reachtamp.scenario import bundled_scenario
from reachtamp.scenarios import generate_scenario


def tiny_scenario(goal=("in(b0,tray)",)):
    """Small single-object pick-and-place world for fast pipeline tests."""
    return {
        "format": 1,
        "name": "tiny",
        "robot": "hsr_like",
        "domain": "pick_place",
        "workspace": {"min": [-1.6, -0.8, 0.25], "max": [1.6, 1.8, 1.4]},
        "robot_start": {"base": [0.0, 0.1, 1.5707963267948966]},
        "obstacles": [{"kind": "box", "center": [0.0, 1.1, 0.2], "half_extents": [0.8, 0.3, 0.2]}],
        "movables": [
            {"id": "b0", "kind": "box", "center": [-0.3, 0.95, 0.43], "half_extents": [0.03, 0.03, 0.03]}
        ],
        "regions": [{"name": "tray", "center": [0.55, 1.0, 0.41], "half_extents": [0.15, 0.12, 0.01]}],
        "drawer": None,
        "goal": list(goal),
    }


def small_request(scenario, mode="reachability", seed=0):
    return PlanRequest(
        scenario=scenario,
        mode=mode,
        graph_seed=seed,
        instance_seed=seed,
        graph_params=bench_graph_params(nodes=30, knn=5, rng_seed=seed),
        opt_params=bench_opt_params(steps_per_phase=12),
        timeout=120.0,
    )


def test_goal_already_satisfied():
    scenario = tiny_scenario(goal=["handempty"])
    result = plan(small_request(scenario))
    assert result.success
    assert result.actions == []
    assert result.step_count == 0
    assert result.base_path_length == 0.0
    metrics = compute_metrics(result)
    assert metrics["success"] and metrics["steps"] == 0


def test_single_object_pick_place_two_switches():
    result = plan(small_request(tiny_scenario()))
    assert result.success
    assert result.step_count == 2
    assert result.actions == ["pick(b0)", "place(b0,tray)"]
    metrics = compute_metrics(result, oracle_recheck=True)
    assert metrics["success"]
    assert metrics["base_path_length"] == pytest.approx(result.base_path_length, abs=1e-9)


def test_corrupted_trajectory_detected():
    result = plan(small_request(tiny_scenario()))
    assert result.success
    # inject a config that drives the base through the table
    bad = Configuration(np.array([0.0, 1.1, 0.0, 0.1, 0.0, 0.5, -1.0, 0.5]))
    result.trajectory.phases[0][3] = bad
    with pytest.raises(IntegrityViolation):
        compute_metrics(result, oracle_recheck=True)


def test_stored_length_mismatch_detected():
    result = plan(small_request(tiny_scenario()))
    assert result.success
    result.base_path_length += 0.5
    with pytest.raises(IntegrityViolation):
        compute_metrics(result, oracle_recheck=False)


def test_euclidean_mode_never_builds_graph():
    result = plan(small_request(tiny_scenario(), mode="euclidean"))
    assert result.stats["graph_builds"] == 0
    assert result.graph is None


def test_determinism_identical_results():
    r1 = plan(small_request(tiny_scenario(), seed=4))
    r2 = plan(small_request(tiny_scenario(), seed=4))
    assert r1.success == r2.success
    assert r1.actions == r2.actions
    assert r1.base_path_length == r2.base_path_length
    assert r1.step_count == r2.step_count
    t1 = [q.as_array() for q in r1.trajectory.all_configs()]
    t2 = [q.as_array() for q in r2.trajectory.all_configs()]
    assert len(t1) == len(t2)
    for a, b in zip(t1, t2):
        assert np.array_equal(a, b)


def test_timeout_reported():
    result = plan(
        PlanRequest(
            scenario=tiny_scenario(),
            mode="reachability",
            graph_params=bench_graph_params(nodes=30, knn=5),
            opt_params=bench_opt_params(12),
            timeout=0.0,
        )
    )
    assert not result.success
    assert result.failure_reason == "Timeout"


def test_table_clearing_sequence_and_count():
    raw = generate_scenario("table_clearing", 1)
    result = run_single(raw, "reachability", 1)
    assert result.success
    assert result.actions == [
        "take_knob",
        "open_drawer",
        "pick_object(cup)",
        "drop_object(cup)",
        "take_knob",
        "close_drawer",
    ]
    assert result.step_count == 6


def test_first_pick_differs_between_modes_on_regression_scenario():
    raw = bundled_scenario("firstpick_regression")
    reach = run_single(raw, "reachability", 0)
    eucl = run_single(raw, "euclidean", 0)
    assert reach.success
    assert reach.actions[0] == "pick(blue_block)"
    assert eucl.stats["first_candidate"][0] == "pick(green_block)"
    assert reach.stats["first_candidate"][0] != eucl.stats["first_candidate"][0]
