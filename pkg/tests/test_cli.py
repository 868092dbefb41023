import json

import numpy as np
import pandas as pd
import pytest

from app.api.commands import EXIT_CONFIG, EXIT_OK, dispatch
from app.core.config import validate_config
from app.main import main
from app.services import results_io


@pytest.fixture(scope="module")
def n2_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("n2")
    status = dispatch(["run", "--preset", "n2", "--mode", "single", "--out", str(out)])
    return status, out


def test_run_preset_writes_artifacts(n2_artifacts):
    status, out = n2_artifacts
    assert status == EXIT_OK
    for name in ("solution.csv", "oracle.csv", "errors.csv", "report.txt", "config.json"):
        assert (out / name).exists()
    report = (out / "report.txt").read_text()
    assert "oracle_agreement: pass" in report
    assert "subdomains: 2" in report


def test_error_table_has_one_row_per_window(n2_artifacts):
    _, out = n2_artifacts
    table = pd.read_csv(out / "errors.csv")
    assert list(table.columns) == ["k", "t_start", "span_steps", "max_abs"]
    assert table["k"].tolist() == list(range(1, len(table) + 1))
    config = json.loads((out / "config.json").read_text())
    assert table["span_steps"].sum() == validate_config(config).total_steps


def test_compare_command(n2_artifacts, capsys):
    _, out = n2_artifacts
    status = dispatch(["compare", "--a", str(out / "solution.csv"), "--b", str(out / "oracle.csv")])
    assert status == EXIT_OK
    printed = capsys.readouterr().out
    assert "max_abs:" in printed
    assert "location_of_max:" in printed


def test_compare_missing_file(tmp_path):
    assert dispatch(["compare", "--a", str(tmp_path / "a.csv"), "--b", str(tmp_path / "b.csv")]) == EXIT_CONFIG


@pytest.mark.parametrize(
    "content",
    ["", "t,x=0,x=0.5,x=1\n", "t,x=0,x=0.5,x=1\n0,0,a,0\n"],
    ids=["empty", "header_only", "non_numeric"],
)
def test_compare_unreadable_file(tmp_path, content):
    bad = tmp_path / "bad.csv"
    bad.write_text(content)
    assert dispatch(["compare", "--a", str(bad), "--b", str(bad)]) == EXIT_CONFIG


def test_run_from_config_file(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "n_nodes": 101,
        "overlap_cells": 20,
        "t_end": 0.5,
        "mode": "single",
        "sources": [{"placement": "left_boundary", "center_time": 0.06, "width": 0.01}],
    }))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_OK
    assert "within_tolerance: True" in capsys.readouterr().out


def test_zero_duration_run(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"t_end": 0.0}))
    assert dispatch(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_OK
    t, _, values = results_io.read_solution_csv(tmp_path / "out" / "solution.csv")
    assert t.tolist() == [0.0]
    assert np.all(values == 0.0)


@pytest.mark.parametrize(
    "document",
    [{"courant": 1.5}, {"overlap_cells": 3}, {"unknown": 1}, {"n_subdomains": 50, "n_nodes": 101}],
)
def test_bad_config_exits_with_config_status(tmp_path, document):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(document))
    assert dispatch(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_run_without_config_or_preset():
    assert dispatch(["run"]) == EXIT_CONFIG


def test_solution_csv_round_trips_exactly(n2_oracle, tmp_path):
    path = results_io.write_solution_csv(n2_oracle, tmp_path / "solution.csv", sample_stride=1)
    t, x, values = results_io.read_solution_csv(path)
    assert np.array_equal(values, n2_oracle.values)
    assert np.array_equal(x, n2_oracle.grid.positions())
    assert np.array_equal(t, np.arange(n2_oracle.n_steps + 1) * n2_oracle.dt)
