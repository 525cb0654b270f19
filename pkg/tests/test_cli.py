import json
import os
import stat
import sys

import numpy as np
import pytest

from robustbo import BOConfig, Schedule, run_bo
from robustbo.cli import main, run_config_header


def _write_config(tmp_path, **overrides):
    doc = {"version": "1", "dimension": 2, "trials": 2, "budget": 12,
           "n_init": 4, "outlier_rate": 0.2, "seed": 3,
           "methods": ["vanilla"], "warmup": 0.5, "period": 2}
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


def _strip_ms(lines):
    out = []
    for line in lines:
        d = json.loads(line)
        d.pop("ms")
        out.append(json.dumps(d, sort_keys=True))
    return out


def test_bench_record_count(tmp_path):
    config = _write_config(tmp_path, methods=["vanilla", "robust"])
    out = tmp_path / "records.jsonl"
    assert main(["bench", "--config", str(config), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2 * 2 * 12  # trials * methods * budget


def test_bench_malformed_config(tmp_path):
    config = _write_config(tmp_path, bogus_field=1)
    out = tmp_path / "records.jsonl"
    rc = main(["bench", "--config", str(config), "--out", str(out)])
    assert rc == 2


def test_bench_bad_version(tmp_path):
    config = _write_config(tmp_path, version="0")
    rc = main(["bench", "--config", str(config), "--out",
               str(tmp_path / "r.jsonl")])
    assert rc == 2


def test_bench_deterministic_bytes(tmp_path):
    config = _write_config(tmp_path)
    out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["bench", "--config", str(config), "--out", str(out1)]) == 0
    assert main(["bench", "--config", str(config), "--out", str(out2)]) == 0
    a = _strip_ms(out1.read_text().splitlines())
    b = _strip_ms(out2.read_text().splitlines())
    assert a == b


def test_report_roundtrip(tmp_path):
    config = _write_config(tmp_path)
    records = tmp_path / "records.jsonl"
    assert main(["bench", "--config", str(config), "--out",
                 str(records)]) == 0
    table = tmp_path / "table.csv"
    assert main(["report", str(records), "--out", str(table)]) == 0
    lines = table.read_text().splitlines()
    assert lines[0] == "method,iter,mean,median,lo95,hi95"
    assert len(lines) == 1 + 12  # one method, budget rows
    # deterministic bytes on a second run
    table2 = tmp_path / "table2.csv"
    assert main(["report", str(records), "--out", str(table2)]) == 0
    assert table.read_text() == table2.read_text()


def test_report_empty_input(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["report", str(empty), "--out",
                 str(tmp_path / "t.csv")]) == 2


def _script(tmp_path, body):
    path = tmp_path / "objective.py"
    path.write_text(body)
    return f"{sys.executable} {path}"


SUM_SCRIPT = """\
import sys
vals = [float(v) for v in sys.stdin.readline().split()]
print(sum(vals))
"""

FAIL_SCRIPT = """\
import sys
sys.exit(1)
"""


def test_run_sum_objective(tmp_path):
    out = tmp_path / "history.jsonl"
    rc = main(["run", _script(tmp_path, SUM_SCRIPT), "--dimension", "2",
               "--bounds", "[[0,1],[0,1]]", "--budget", "10",
               "--robust", "off", "--out", str(out), "--seed", "1"])
    assert rc == 0
    lines = out.read_text().splitlines()
    header = json.loads(lines[0])
    assert header["type"] == "config"
    rows = [json.loads(ln) for ln in lines[1:]]
    assert len(rows) == 10
    for row in rows:
        assert row["y"] == pytest.approx(sum(row["x"]))
    init_best = min(rows[t]["y"] for t in range(5))
    assert min(r["y"] for r in rows) <= init_best


def test_run_always_failing_command(tmp_path):
    out = tmp_path / "history.jsonl"
    rc = main(["run", _script(tmp_path, FAIL_SCRIPT), "--dimension", "1",
               "--bounds", "[[0,1]]", "--budget", "8",
               "--robust", "off", "--out", str(out)])
    assert rc == 3


def _history_file(tmp_path, config, observations):
    path = tmp_path / "history.jsonl"
    with open(path, "w") as fh:
        fh.write(json.dumps(run_config_header(config)) + "\n")
        for i, (x, y) in enumerate(observations):
            fh.write(json.dumps({"iter": i, "x": list(map(float, x)),
                                 "y": float(y)}) + "\n")
    return path


def _loop_config(**kwargs):
    defaults = dict(dimension=1, bounds=np.array([[0.0, 1.0]]), budget=12,
                    n_init=4, seed=7, robust_enabled=True,
                    schedule=Schedule(warmup_fraction=0.5, period=2))
    defaults.update(kwargs)
    return BOConfig(**defaults)


def test_suggest_empty_history_is_first_lhs_point(tmp_path, capsys):
    config = _loop_config()
    path = _history_file(tmp_path, config, [])
    assert main(["suggest", str(path)]) == 0
    point = [float(v) for v in capsys.readouterr().out.split()]
    from robustbo.bo_loop import initial_design
    assert point == pytest.approx(list(initial_design(config)[0]))


def test_suggest_idempotent(tmp_path, capsys):
    config = _loop_config()
    obs = [([0.1 * i], float(i)) for i in range(5)]
    path = _history_file(tmp_path, config, obs)
    assert main(["suggest", str(path)]) == 0
    first = capsys.readouterr().out
    assert main(["suggest", str(path)]) == 0
    second = capsys.readouterr().out
    assert first == second


def test_suggest_corrupt_history(tmp_path, capsys):
    config = _loop_config()
    path = _history_file(tmp_path, config, [([0.1], 1.0)])
    with open(path, "a") as fh:
        fh.write("{not json\n")
    assert main(["suggest", str(path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_tell_appends_record(tmp_path):
    config = _loop_config()
    path = _history_file(tmp_path, config, [])
    assert main(["tell", str(path), "--point", "0.25", "--value",
                 "1.5"]) == 0
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    rec = json.loads(lines[1])
    assert rec == {"iter": 0, "x": [0.25], "y": 1.5}


def test_tell_dimension_mismatch(tmp_path):
    config = _loop_config()
    path = _history_file(tmp_path, config, [])
    assert main(["tell", str(path), "--point", "0.25", "0.5",
                 "--value", "1.0"]) == 2


def test_file_based_replay_matches_in_process(tmp_path, capsys):
    config = _loop_config(budget=12)

    def objective(x):
        return float((x[0] - 0.4) ** 2 + 0.3 * np.sin(9.0 * x[0]))

    live = run_bo(objective, config)
    obs = [(row["x"], row["y"]) for row in live.history]
    for prefix in (4, 8, 11):
        path = _history_file(tmp_path, config, obs[:prefix])
        assert main(["suggest", str(path)]) == 0
        point = [float(v) for v in capsys.readouterr().out.split()]
        assert point == pytest.approx(list(live.history[prefix]["x"]),
                                      abs=1e-12)
