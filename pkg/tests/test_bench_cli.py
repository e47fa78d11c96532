import csv
import json
import os

import pytest

from uavmission.bench import (
    RUN_COLUMNS,
    SUMMARY_COLUMNS,
    BenchPlan,
    run_bench,
    run_single,
    time_cost_functions,
)
from uavmission.cli import EXIT_MISSION_FAILED, EXIT_OK, EXIT_USAGE, main
from uavmission.mission import Scenario, random_scenario

GOLDEN_SUMMARY_HEADER = [
    "method",
    "average_total_distance_m",
    "average_gap",
    "maximum_distance_difference_m",
    "maximum_task_number_difference",
    "average_total_planning_time_s",
    "average_planning_time_s",
    "first_decision_time_share_pct",
]


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "sc.json"
    random_scenario(3, 4, 12).save(path)
    return str(path)


def _read(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_summary_shape_with_and_without_sa(tmp_path):
    rep = run_bench(BenchPlan(["PRBDDG", "SA"], [0, 1, 2], N=12, out=str(tmp_path)))
    assert [r["method"] for r in rep.summary] == ["SA", "PRBDDG"]
    assert rep.row("PRBDDG")["average_gap"] is not None
    rows = _read(tmp_path / "summary.csv")
    assert rows[0] == GOLDEN_SUMMARY_HEADER == list(SUMMARY_COLUMNS)
    assert len(rows) == 3
    assert _read(tmp_path / "runs.csv")[0] == list(RUN_COLUMNS)

    alone = run_bench(BenchPlan(["PRBDDG", "GBA"], [0], N=12))
    assert all(r["average_gap"] is None for r in alone.summary)


def test_bench_distance_columns_reproducible():
    plan = BenchPlan(["SA", "RBDDG", "PRBDDH"], [4, 5], N=12)
    a, b = run_bench(plan), run_bench(plan)
    keys = ["average_total_distance_m", "average_gap", "maximum_distance_difference_m",
            "maximum_task_number_difference"]
    assert [[r[k] for k in keys] for r in a.summary] == [[r[k] for k in keys] for r in b.summary]


def test_bench_plan_validation():
    with pytest.raises(ValueError):
        BenchPlan([], [0])
    with pytest.raises(ValueError):
        BenchPlan(["XYZ"], [0])
    with pytest.raises(ValueError):
        BenchPlan(["GBA"], [1, 1])
    assert BenchPlan(["GBA"], [3, 4, 5]).trials == 3


def test_run_single_metrics_without_baseline_and_byte_identical(tmp_path):
    sc = random_scenario(6, 4, 12)
    a, b = tmp_path / "a", tmp_path / "b"
    run_single(sc, "PRBDDG", seed=2, out=str(a))
    run_single(sc, "PRBDDG", seed=2, out=str(b))
    m = json.loads((a / "metrics.json").read_text())
    assert m["gap"] is None
    for name in ("metrics.json", "trace.csv", "events.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert set(json.loads((a / "timing.json").read_text())) >= {"total_planning_time"}


def test_run_single_sa_files(tmp_path):
    run_single(random_scenario(6, 2, 6), "SA", seed=1, out=str(tmp_path))
    assert {"energy.csv", "metrics.json", "timing.json"} <= set(os.listdir(tmp_path))
    with pytest.raises(ValueError):
        run_single(random_scenario(6, 2, 6), "SA", emergencies="damage")


def test_time_costs_rows():
    rows = time_cost_functions(samples=1000, repetitions=2)
    assert [r.cost for r in rows] == ["Euclidean", "CS", "CSC"]
    assert rows[0].mean_seconds <= rows[1].mean_seconds
    with pytest.raises(ValueError):
        time_cost_functions(samples=10)


# -- CLI ----------------------------------------------------------------------

def test_cli_plan_success(scenario_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["plan", "--scenario", scenario_file, "--method", "PRBDDG", "--out", str(out)]) == EXIT_OK
    assert {"trace.csv", "events.csv", "metrics.json", "timing.json"} <= set(os.listdir(out))


def test_cli_plan_emergencies(scenario_file, tmp_path):
    rc = main(["plan", "--scenario", scenario_file, "--method", "HBA", "--emergencies", "both",
               "--out", str(tmp_path / "e")])
    assert rc == EXIT_OK
    kinds = {row[1] for row in _read(tmp_path / "e" / "events.csv")[1:]}
    assert {"new_task", "damage"} <= kinds


def test_cli_rejects_k_not_below_n(tmp_path, capsys):
    path = tmp_path / "bad.json"
    random_scenario(0, 2, 3).save(path)
    d = json.loads(path.read_text())
    d["K"] = 3
    path.write_text(json.dumps(d))
    rc = main(["plan", "--scenario", str(path), "--method", "PRBDDG", "--out", str(tmp_path / "o")])
    assert rc == EXIT_USAGE
    assert "K < N" in capsys.readouterr().err


def test_cli_malformed_file_names_line(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "K": 2,\n  "N": @\n}')
    rc = main(["plan", "--scenario", str(path), "--method", "PRBDDG", "--out", str(tmp_path / "o")])
    assert rc == EXIT_USAGE
    assert "line 3" in capsys.readouterr().err


def test_cli_unknown_method_is_usage_error(scenario_file, tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["plan", "--scenario", scenario_file, "--method", "NOPE", "--out", str(tmp_path)])
    assert e.value.code == EXIT_USAGE


def test_cli_mission_failed_code(tmp_path, monkeypatch):
    import uavmission.bench as bench
    from uavmission.simulator import EventTimeline

    path = tmp_path / "sc.json"
    random_scenario(2, 2, 10).save(path)
    monkeypatch.setattr(bench.EventTimeline, "preset",
                        classmethod(lambda cls, kind, seed, new_tasks=5: EventTimeline(damages=[(20.0, 0), (25.0, 1)])))
    rc = main(["plan", "--scenario", str(path), "--method", "PRBDDG", "--out", str(tmp_path / "o")])
    assert rc == EXIT_MISSION_FAILED
    assert EXIT_MISSION_FAILED not in (EXIT_OK, EXIT_USAGE)


def test_cli_gen_round_trip(tmp_path):
    path = tmp_path / "g" / "sc.json"
    assert main(["gen", "--seed", "7", "--K", "3", "--N", "9", "--out", str(path)]) == EXIT_OK
    sc = Scenario.load(path)
    ref = random_scenario(7, 3, 9)
    assert [t.position for t in sc.tasks] == [t.position for t in ref.tasks]


def test_cli_bench_and_time_costs(tmp_path):
    assert main(["bench", "--methods", "SA,PRBDDG", "--trials", "2", "--N", "10",
                 "--out", str(tmp_path / "b")]) == EXIT_OK
    assert len(_read(tmp_path / "b" / "summary.csv")) == 3
    assert main(["time-costs", "--samples", "1000", "--repetitions", "1",
                 "--out", str(tmp_path / "t")]) == EXIT_OK
    assert len(_read(tmp_path / "t" / "cost_timing.csv")) == 4
