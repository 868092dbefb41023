import json

import pytest

from app.core.config import Settings, get_settings, load_config, validate_config
from app.core.exceptions import ConfigurationError
from app.models.schemas import RswrConfig, RunMode, SourceShape


class TestDefaults:
    def test_minimal_document(self):
        config = validate_config({})
        assert config.beta == 0.1
        assert config.safety_steps == 1
        assert config.initial_predict_steps == config.overlap_cells == 40
        assert config.mode is RunMode.PARALLEL

    def test_derived_quantities(self):
        config = validate_config({"n_nodes": 101, "courant": 0.5, "t_end": 0.5})
        assert config.dx == pytest.approx(0.01)
        assert config.dt == pytest.approx(0.005)
        assert config.total_steps == 100

    def test_partial_final_step_rounds_up(self):
        assert validate_config({"n_nodes": 101, "courant": 0.5, "t_end": 0.5012}).total_steps == 101

    def test_document_round_trip(self):
        config = validate_config({"n_nodes": 201, "sources": [{"placement": "left_boundary", "center_time": 0.3, "width": 0.05}]})
        assert validate_config(config.to_document()) == config
        assert "dt" not in config.to_document()


class TestRejections:
    def test_unstable_courant(self):
        with pytest.raises(ConfigurationError) as excinfo:
            validate_config({"courant": 1.5})
        assert excinfo.value.kind == "stability"
        assert excinfo.value.field == "courant"

    def test_odd_overlap(self):
        with pytest.raises(ConfigurationError) as excinfo:
            validate_config({"overlap_cells": 3})
        assert excinfo.value.kind == "parity"

    def test_thin_overlap(self):
        with pytest.raises(ConfigurationError) as excinfo:
            validate_config({"overlap_cells": 2})
        assert excinfo.value.kind == "range"

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError) as excinfo:
            validate_config({"overlap": 20})
        assert excinfo.value.kind == "unknown_key"
        assert excinfo.value.field == "overlap"

    def test_pulse_not_at_rest_initially(self):
        with pytest.raises(ConfigurationError) as excinfo:
            validate_config({"sources": [{"placement": "left_boundary", "center_time": 0.01, "width": 0.05}]})
        assert excinfo.value.kind == "compatibility"
        assert excinfo.value.field.startswith("sources.0")

    def test_raised_cosine_must_start_at_zero(self):
        doc = {"placement": "right_boundary", "shape": SourceShape.RAISED_COSINE.value, "center_time": 0.04, "width": 0.05}
        with pytest.raises(ConfigurationError):
            validate_config({"sources": [doc]})
        doc["center_time"] = 0.05
        assert validate_config({"sources": [doc]}).sources[0].shape is SourceShape.RAISED_COSINE

    def test_inverted_domain(self):
        with pytest.raises(ConfigurationError):
            validate_config({"x_min": 1.0, "x_max": 0.0})


class TestLoadConfig:
    def test_reads_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"n_subdomains": 3, "mode": "single"}))
        config = load_config(path)
        assert isinstance(config, RswrConfig)
        assert config.n_subdomains == 3
        assert config.mode is RunMode.SINGLE

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError) as excinfo:
            load_config(tmp_path / "absent.json")
        assert excinfo.value.kind == "missing"

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError) as excinfo:
            load_config(path)
        assert excinfo.value.kind == "parse"


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("RSWR_THREADS", "3")
    assert Settings().RSWR_THREADS == 3
    assert get_settings() is get_settings()
