import csv
import json
import subprocess
import sys

import pytest

from frenetplan.cli import main
from frenetplan.fixtures import fixture_names


def test_run_fixture_success(tmp_path, capsys):
    assert main(["run", "straight_early", "--out", str(tmp_path), "--plot-every", "0"]) == 0
    assert "status=GoalReachedFasterThanTargetTime" in capsys.readouterr().out
    assert json.loads((tmp_path / "log.json").read_text())["status"] == "GoalReachedFasterThanTargetTime"


def test_run_failure_exit_code(tmp_path, capsys):
    assert main(["run", "wall", "--out", str(tmp_path), "--plot-every", "0"]) == 1
    assert "collisions=" in capsys.readouterr().out


def test_run_writes_fan_plots(tmp_path):
    main(["run", "straight_early", "--out", str(tmp_path), "--plot-every", "100"])
    assert list(tmp_path.glob("fan_*.svg"))


def test_run_scenario_file(tmp_path):
    from frenetplan.fixtures import scenario_dir

    assert main(["run", str(scenario_dir() / "straight_early.json"), "--out", str(tmp_path), "--plot-every", "0"]) == 0


def test_missing_scenario_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", str(tmp_path / "nope.json")])
    assert exc.value.code == 2
    assert "not found" in capsys.readouterr().err


def test_bench_rejects_off_ladder_count(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--counts", "0"])
    assert exc.value.code == 2
    assert "ladder" in capsys.readouterr().err


def test_study_unknown_fixture_lists_choices(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["study", "nowhere"])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert all(name in err for name in fixture_names())


def test_study_empty_grid(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["study", "overtake", "--velocity"])
    assert exc.value.code == 2


def test_bench_csv(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "--counts", "50", "--repetitions", "2", "--warmup", "0", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    totals = [r for r in rows if r["stage"] == "total"]
    assert sorted(r["mode"] for r in totals) == ["parallel", "serial"]
    assert capsys.readouterr().out.count("median=") == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "frenetplan", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert all(cmd in proc.stdout for cmd in ("run", "study", "bench"))
