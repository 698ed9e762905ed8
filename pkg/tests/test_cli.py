import json
from pathlib import Path

import pytest

from reachtamp.cli import EXIT_CONFIG, EXIT_GENERATION, EXIT_OK, main


def test_gen_writes_scenario(tmp_path):
    out = tmp_path / "scen.json"
    assert main(["gen", "--scenario", "pick_place", "--seed", "0", "--out", str(out)]) == EXIT_OK
    raw = json.loads(out.read_text())
    assert raw["format"] == 1
    assert raw["domain"] == "pick_place"


def test_gen_unknown_kind_exit_2(tmp_path):
    assert main(["gen", "--scenario", "martian_base", "--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_gen_generation_failure_exit_3(tmp_path, monkeypatch):
    from reachtamp.errors import GenerationFailure

    def boom(kind, seed):
        raise GenerationFailure("forced")

    monkeypatch.setattr("reachtamp.service.app.generate_scenario", boom)
    assert main(["gen", "--scenario", "pick_place", "--out-dir", str(tmp_path)]) == EXIT_GENERATION


def test_out_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("REACHTAMP_OUT", str(tmp_path / "envdir"))
    assert main(["gen", "--scenario", "table_clearing", "--seed", "1"]) == EXIT_OK
    assert (tmp_path / "envdir" / "table_clearing_0001.json").exists()


def test_plan_with_dump_files(tmp_path):
    scen = tmp_path / "s.json"
    assert main(["gen", "--scenario", "table_clearing", "--seed", "1", "--out", str(scen)]) == EXIT_OK
    graph_out = tmp_path / "graph.txt"
    lib_out = tmp_path / "library.txt"
    traj_out = tmp_path / "traj.txt"
    code = main(
        [
            "plan",
            "--scenario",
            str(scen),
            "--seed",
            "1",
            "--dump-graph",
            str(graph_out),
            "--dump-library",
            str(lib_out),
            "--dump-traj",
            str(traj_out),
            "--out",
            str(tmp_path / "result.json"),
        ]
    )
    assert code == EXIT_OK
    assert graph_out.read_text().startswith("# reachability-graph format 1")
    assert lib_out.read_text().startswith("# solution-library format 1")
    rows = [l for l in traj_out.read_text().splitlines() if l and not l.startswith("#")]
    from reachtamp.bench import BENCH_STEPS_PER_PHASE

    assert len(rows) == 6 * (BENCH_STEPS_PER_PHASE + 1)
    result = json.loads((tmp_path / "result.json").read_text())
    assert result["success"] is True
    assert result["steps"] == 6


def test_plan_missing_scenario_exit_2(tmp_path):
    assert main(["plan", "--scenario", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_bench_csv_and_exit(tmp_path):
    out = tmp_path / "bench.csv"
    code = main(
        [
            "bench",
            "--scenario",
            "table_clearing",
            "--runs",
            "1",
            "--seed",
            "3",
            "--out",
            str(out),
        ]
    )
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("seed,mode,success")
    assert lines[-1].startswith("aggregate,reachability,")


def test_dump_subcommand(tmp_path):
    scen = tmp_path / "s.json"
    main(["gen", "--scenario", "pick_place", "--seed", "0", "--out", str(scen)])
    out = tmp_path / "g.txt"
    assert main(["dump", "graph", "--scenario", str(scen), "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("# reachability-graph format 1")


def test_bad_arguments_exit_2():
    assert main(["plan"]) == EXIT_CONFIG  # missing required --scenario
    assert main(["dump", "hologram", "--scenario", "x"]) == EXIT_CONFIG
