"""Command line runs against the fixture suite with stub backends."""

import csv
import json

import pytest

from src.main import EXIT_CONFIG, EXIT_OK, build_parser, main, selection_overrides
from tests.conftest import FIXTURES, STUB_FILE

STUB = ["--backend", "stub", "--stub-file", str(STUB_FILE), "--no-cache"]
T01_QUESTION = "How many chlorine atoms are in non-carcinogenic molecules?"


@pytest.fixture
def pool_file(tmp_path, pools):
    path = tmp_path / "pool.json"
    path.write_text(json.dumps(pools["t01"]), encoding="utf-8")
    return path


def dataset_args(db_root, *extra):
    return [
        "--dataset",
        str(FIXTURES / "dev.json"),
        "--db-root",
        str(db_root),
        "--pools",
        str(FIXTURES / "pools.json"),
        "--no-progress",
        "--resampling",
        "off",
        *STUB,
        *extra,
    ]


def test_flags_become_selection_overrides():
    args = build_parser().parse_args(
        ["select", "--tau", "0.25", "--max-pairs", "3", "--no-prune", "--mode", "fmv"]
    )
    assert selection_overrides(args) == {"tau": 0.25, "max_pairs_per_group_pair": 3, "prune": False, "mode": "fmv"}


@pytest.mark.parametrize("mode,expected", [("r3", 1), ("fmv", 0)])
def test_select_prints_chosen_sql(mode, expected, molecule_db, pool_file, pools, capsys):
    argv = ["select", "--db", str(molecule_db), "--question", T01_QUESTION, "--task-id", "t01"]
    argv += ["--pool", str(pool_file), "--mode", mode, *STUB]
    assert main(argv) == EXIT_OK
    assert capsys.readouterr().out.strip() == pools["t01"][expected].strip()


def test_select_from_task_file_writes_trace(db_root, pool_file, tmp_path, capsys):
    out = tmp_path / "trace.json"
    argv = ["select", "--task-file", str(FIXTURES / "dev.json"), "--db-root", str(db_root), "--task-id", "t01"]
    argv += ["--pool", str(pool_file), "--out", str(out), *STUB]
    assert main(argv) == EXIT_OK
    trace = json.loads(out.read_text())
    assert trace["task_id"] == "t01"
    assert trace["final_cand_idx"] == 1


def test_select_missing_database(tmp_path, pool_file, capsys):
    argv = ["select", "--db", str(tmp_path / "nope.sqlite"), "--question", "q", "--pool", str(pool_file), *STUB]
    assert main(argv) == EXIT_CONFIG
    assert "database file not found" in capsys.readouterr().err


def test_select_without_db_is_a_usage_error(pool_file):
    with pytest.raises(SystemExit) as exc:
        main(["select", "--question", "q", "--pool", str(pool_file), *STUB])
    assert exc.value.code == 2


def test_evaluate_writes_report(db_root, tmp_path, capsys):
    out = tmp_path / "report.json"
    traces = tmp_path / "traces.jsonl"
    assert main(["evaluate", *dataset_args(db_root, "--out", str(out), "--traces", str(traces))]) == EXIT_OK

    assert capsys.readouterr().out.startswith("EX 70.00  (7/10 correct, 2 excluded)")
    report = json.loads(out.read_text())
    assert report["ex"] == 70.0
    assert "timings" not in report and "usage" not in report
    sidecar = json.loads((tmp_path / "report.timings.json").read_text())
    assert "wall_ms" in sidecar["timings"]
    assert {name: s["calls"] for name, s in sidecar["usage"]["stages"].items()} == report["call_counts"]
    assert sidecar["usage"]["total_cost_usd"] == 0.0
    assert len(traces.read_text().splitlines()) == 10


def test_evaluate_bad_dataset(tmp_path, db_root, capsys):
    dataset = tmp_path / "bad.json"
    dataset.write_text(json.dumps([{"question_id": 1, "db_id": "nowhere", "question": "q"}]), encoding="utf-8")
    argv = ["evaluate", "--dataset", str(dataset), "--db-root", str(db_root), "--out", str(tmp_path / "r.json"), *STUB]
    assert main(argv) == EXIT_CONFIG
    assert "unknown db_id 'nowhere'" in capsys.readouterr().err


def test_invalid_selection_flag(db_root, tmp_path, capsys):
    assert main(["evaluate", *dataset_args(db_root, "--tau", "1.5", "--out", str(tmp_path / "r.json"))]) == EXIT_CONFIG
    assert "invalid configuration" in capsys.readouterr().err


def test_judge_prints_decision(molecule_db, pool_file, capsys):
    argv = ["judge", "--db", str(molecule_db), "--question", T01_QUESTION, "--task-id", "t01"]
    argv += ["--pool", str(pool_file), *STUB]
    assert main(argv) == EXIT_OK
    decision = json.loads(capsys.readouterr().out)
    assert decision["likely_has_correct"] is True
    assert decision["confidence"] == 0.9
    assert decision["flagged"] is False


def test_reward_export_is_deterministic(db_root, tmp_path):
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["reward-export", *dataset_args(db_root, "--seed", "7", "--out", str(first))]) == EXIT_OK
    assert main(["reward-export", *dataset_args(db_root, "--seed", "7", "--out", str(second))]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    rows = [json.loads(line) for line in first.read_text().splitlines()]
    assert [r["task_id"] for r in rows] == ["t01", "t02", "t03", "t04", "t05", "t06", "t09", "t10"]


def test_reward_export_with_scores(db_root, tmp_path):
    out = tmp_path / "pairs.jsonl"
    assert main(["reward-export", *dataset_args(db_root, "--score", "--out", str(out))]) == EXIT_OK
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert all("reward" in r for r in rows)
    summary = json.loads((tmp_path / "pairs.summary.json").read_text())
    assert summary["n_pairs"] == len(rows)


def test_ablate_writes_sweep(db_root, tmp_path, capsys):
    grid = tmp_path / "grid.yaml"
    grid.write_text("baseline: r3\nvariants:\n  r3: {}\n  fmv: {mode: fmv}\n", encoding="utf-8")
    out = tmp_path / "sweep.csv"
    assert main(["ablate", *dataset_args(db_root, "--grid", str(grid), "--out", str(out))]) == EXIT_OK

    with open(out, newline="") as f:
        rows = list(csv.DictReader(f))
    assert [r["variant"] for r in rows] == ["r3", "fmv"]
    assert float(rows[0]["ex"]) == 70.0
    assert (tmp_path / "sweep.json").exists()
    assert "tau sweep mean r_list" in capsys.readouterr().out
