import pytest
from fastapi.testclient import TestClient

from reachtamp.scenarios import generate_scenario
from reachtamp.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert "pick_place" in body["kinds"]


def test_generate_endpoint(client):
    resp = client.post("/scenario/generate", json={"kind": "pick_place", "seed": 0})
    assert resp.status_code == 200
    scenario = resp.json()["scenario"]
    assert scenario["format"] == 1
    assert scenario == generate_scenario("pick_place", 0)


def test_generate_unknown_kind_is_config_error(client):
    resp = client.post("/scenario/generate", json={"kind": "nope", "seed": 0})
    assert resp.status_code == 400
    assert resp.json()["error"] == "ConfigError"


def test_plan_endpoint_with_dumps(client):
    scenario = generate_scenario("table_clearing", 1)
    resp = client.post(
        "/plan",
        json={"scenario": scenario, "mode": "reachability", "graph_seed": 1, "dumps": ["graph", "traj"]},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["success"] is True
    assert body["steps"] == 6
    assert body["dumps"]["graph"].startswith("# reachability-graph format 1")
    assert body["dumps"]["traj"].startswith("# trajectory format 1")


def test_plan_rejects_bad_mode_and_scenario(client):
    scenario = generate_scenario("pick_place", 0)
    resp = client.post("/plan", json={"scenario": scenario, "mode": "warp"})
    assert resp.status_code == 400
    resp = client.post("/plan", json={"scenario": {"format": 99}})
    assert resp.status_code == 400
    resp = client.post("/plan", json={"scenario": scenario, "dumps": ["hologram"]})
    assert resp.status_code == 400


def test_dump_endpoint_graph(client):
    scenario = generate_scenario("pick_place", 0)
    resp = client.post("/dump", json={"kind": "graph", "scenario": scenario, "graph_seed": 0})
    assert resp.status_code == 200
    assert resp.json()["content"].startswith("# reachability-graph format 1")


def test_dump_endpoint_rejects_euclidean_graph(client):
    scenario = generate_scenario("pick_place", 0)
    resp = client.post(
        "/dump", json={"kind": "graph", "scenario": scenario, "mode": "euclidean"}
    )
    assert resp.status_code == 400


def test_bench_endpoint(client):
    resp = client.post(
        "/bench",
        json={"kind": "table_clearing", "runs": 1, "seed_base": 2, "modes": ["reachability"]},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["rows"]) == 1
    assert body["aggregates"][0]["success_pct"] == 100.0
    assert body["csv"].startswith("seed,mode,success")


def test_bench_endpoint_validation(client):
    resp = client.post("/bench", json={"kind": "pick_place", "runs": 0})
    assert resp.status_code == 400
