import io
import json
from types import SimpleNamespace

import pandas as pd
import pytest

from src.application.services import SWEEP_COLUMNS, THRESHOLD_COLUMNS
from src.domain import keyrate, reduction, threshold
from src.domain.entities import RunRecord, SweepSpec
from src.domain.exceptions import InvalidArgumentError
from src.infrastructure.config import Config
from src.infrastructure.monitoring import PerformanceMonitor, monitor
from src.infrastructure.writers import CsvTableWriter, JsonRecordWriter


class TestEvaluateRate:
    def test_asymptotic_record(self, orchestrator):
        record = orchestrator.evaluate_rate(eta=0.1, eps=0.01, nbar=1.0, m=1.0)
        assert record.mode == "asymptotic"
        assert record.mu is None
        assert record.eta_db == pytest.approx(10.0)
        assert record.k == pytest.approx(2.0)
        assert record.eta_eff == pytest.approx(0.025)
        assert record.eps_eff == pytest.approx(0.04)
        assert record.mu_eff == pytest.approx(4.0 * Config.NOMINAL_MU)
        assert record.rate == pytest.approx(record.i_ab - record.holevo)
        assert record.tool_version == "0.1.0"
        assert record.timestamp.endswith("+00:00")

    def test_finite_record(self, orchestrator):
        record = orchestrator.evaluate_rate(eta=0.1, eps=0.0, nbar=0.0, m=0.0, mu=100.0)
        assert record.mode == "finite"
        assert record.mu == 100.0
        assert record.k == 1.0

    def test_lossless_link_has_no_plob(self, orchestrator):
        record = orchestrator.evaluate_rate(eta=1.0, eps=0.0, nbar=0.0, m=1.0)
        assert record.plob is None
        assert record.eta_eff == pytest.approx(0.5)

    def test_record_round_trip_rejects_unknown_fields(self, orchestrator):
        payload = orchestrator.evaluate_rate(eta=0.1, eps=0.0, nbar=0.0, m=1.0).to_dict()
        assert RunRecord.from_dict(payload) == RunRecord(**payload)
        with pytest.raises(InvalidArgumentError):
            RunRecord.from_dict({**payload, "colour": "red"})


class TestSweep:
    def test_columns_and_order(self, orchestrator):
        table = orchestrator.sweep(SweepSpec("nbar", 0.0, 3.0, 4), {"eta": [0.01]})
        assert list(table.columns) == SWEEP_COLUMNS
        assert list(table["nbar"]) == [0.0, 1.0, 2.0, 3.0]
        assert table["rate"].is_monotonic_decreasing

    def test_halving_law_in_a_sweep(self, orchestrator):
        table = orchestrator.sweep(SweepSpec("nbar", 0.0, 1.0, 2), {"eta": [0.001]})
        assert table["rate"][0] / table["rate"][1] == pytest.approx(2.0, rel=0.01)

    def test_eta_db_sweep(self, orchestrator):
        table = orchestrator.sweep(SweepSpec("eta_db", 10.0, 30.0, 3), {})
        assert list(table["eta"]) == pytest.approx([0.1, 0.01, 0.001])

    def test_finite_family(self, orchestrator):
        table = orchestrator.sweep(SweepSpec("eps", 0.0, 0.02, 2), {"eta": [0.1], "mu": [None, 1e6]})
        assert len(table) == 4
        assert table["rate"][2] == pytest.approx(table["rate"][0], abs=1e-3)

    def test_singular_point_is_flagged(self, orchestrator, capsys):
        table = orchestrator.sweep(SweepSpec("eta", 0.5, 1.0, 3), {"m": [0.0]})
        assert len(table) == 3
        assert list(table["flag"]) == ["", "", "singular-channel"]
        assert table["rate"][:2].notna().all()
        assert table[["rate", "plob", "i_ab", "holevo"]].iloc[2].isna().all()
        assert table["k"][2] == 1.0
        assert table["eta_db"][2] == 0.0
        assert "singular-channel at eta=1" in capsys.readouterr().err

    def test_needs_eta(self, orchestrator):
        with pytest.raises(InvalidArgumentError):
            orchestrator.sweep(SweepSpec("m", 0.0, 1.0, 2), {})


class TestSweepSpec:
    def test_linear_and_log_grids(self):
        assert list(SweepSpec("eps", 0.0, 1.0, 3).grid()) == [0.0, 0.5, 1.0]
        assert list(SweepSpec("mu", 1.0, 100.0, 3, scale="log").grid()) == pytest.approx([1.0, 10.0, 100.0])

    @pytest.mark.parametrize("kwargs", [
        dict(variable="eta", start=0.0, stop=1.0, steps=2, scale="cubic"),
        dict(variable="mu", start=0.0, stop=1.0, steps=3, scale="log"),
        dict(variable="eps", start=0.0, stop=float("nan"), steps=3),
        dict(variable="eps", start=0.0, stop=1.0, steps=True),
    ])
    def test_rejected(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            SweepSpec(**kwargs)


class TestThresholdTable:
    def test_rows(self, orchestrator):
        table = orchestrator.threshold_table([10.0, 20.0], nbars=[0.0], ms=[0.0, 1.0], tol=1e-10)
        assert list(table.columns) == THRESHOLD_COLUMNS
        assert list(table["m"]) == [0.0, 0.0, 1.0, 1.0]
        assert (table["flag"] == "").all()
        assert table["eps_max"][1] == pytest.approx(0.12, abs=0.01)

    def test_flagged_points_warn(self, orchestrator, monkeypatch, capsys):
        monkeypatch.setattr("src.domain.threshold.key_rate_asymptotic",
                            lambda ch, mu, sc: SimpleNamespace(rate=1.0))
        table = orchestrator.threshold_table([10.0], nbars=[0.0], ms=[1.0], tol=1e-10)
        assert list(table["flag"]) == ["no-threshold"]
        assert "no-threshold at 10 dB" in capsys.readouterr().err

    def test_doubling_budget_comes_from_config(self, orchestrator, monkeypatch):
        monkeypatch.setattr("src.domain.threshold.key_rate_asymptotic",
                            lambda ch, mu, sc: SimpleNamespace(rate=1.5 - ch.eps))
        table = orchestrator.threshold_table([10.0], nbars=[0.0], ms=[1.0], tol=1e-10)
        assert list(table["flag"]) == [""]
        assert table["eps_max"][0] == pytest.approx(1.5, abs=1e-9)
        monkeypatch.setattr(Config, "MAX_DOUBLINGS", 0)
        table = orchestrator.threshold_table([10.0], nbars=[0.0], ms=[1.0], tol=1e-10)
        assert list(table["flag"]) == ["no-threshold"]


class TestVerify:
    def test_grid_size(self, orchestrator):
        reports = orchestrator.verify([0.0, 1.0], [0.0], [0.5, 1.0, 2.0], (1.0, 0.3), 1e-10)
        assert len(reports) == 6
        assert all(report.passed for report in reports)


class TestConfig:
    def test_as_dict(self):
        values = Config.as_dict()
        assert values["NOMINAL_MU"] == 1.0
        assert values["VERIFY_MU"] == (0.0, 1.0, 10.0)
        assert "load_file" not in values
        assert all(key.isupper() for key in values)

    def test_numeric_defaults_have_one_source(self):
        assert Config.NOMINAL_MU == keyrate.NOMINAL_MU
        assert Config.MAX_DOUBLINGS == threshold.MAX_DOUBLINGS
        assert Config.THRESHOLD_TOL == threshold.DEFAULT_TOL
        assert Config.VERIFY_TOL == reduction.DEFAULT_VERIFY_TOL

    def test_load_file_normalises_keys(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("# comment\n\nETA-DB = 20\nnbar=0.5\n")
        assert Config.load_file(str(path)) == {"eta_db": "20", "nbar": "0.5"}

    def test_load_file_rejects_unknown(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("eta=0.1\nseed=3\n")
        with pytest.raises(InvalidArgumentError, match="seed"):
            Config.load_file(str(path), allowed={"eta"})

    def test_load_file_rejects_bare_key(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("eta\n")
        with pytest.raises(InvalidArgumentError):
            Config.load_file(str(path))


class TestWriters:
    def test_csv(self):
        stream = io.StringIO()
        CsvTableWriter(stream=stream).write_table(pd.DataFrame({"a": [0.1, 2.0], "b": ["x", ""]}))
        assert stream.getvalue() == "a,b\n0.1,x\n2,\n"

    def test_csv_float_format(self):
        stream = io.StringIO()
        CsvTableWriter(float_format="%.3e", stream=stream).write_table(pd.DataFrame({"a": [1234.4]}))
        assert stream.getvalue() == "a\n1.234e+03\n"

    def test_json_keeps_floats_exact(self):
        stream = io.StringIO()
        JsonRecordWriter(stream=stream).write_record({"x": 0.1 + 0.2, "y": None})
        assert json.loads(stream.getvalue()) == {"x": 0.1 + 0.2, "y": None}

    def test_json_refuses_nan(self):
        with pytest.raises(ValueError):
            JsonRecordWriter(stream=io.StringIO()).write_record({"x": float("nan")})


class TestMonitoring:
    def test_singleton(self):
        assert PerformanceMonitor() is monitor

    def test_timing_is_recorded_even_on_failure(self):
        @monitor.time_function
        def broken():
            raise RuntimeError("boom")

        with pytest.raises(RuntimeError):
            broken()
        stats = monitor.get_system_stats()
        assert stats["last_command"] == "broken"
        assert stats["command_samples"] == 1
        assert stats["last_command_ms"] >= 0.0

    def test_sample_window(self):
        for i in range(monitor.max_samples + 5):
            monitor.track_command_time("rate", float(i))
        assert monitor.get_system_stats()["command_samples"] == monitor.max_samples

    def test_cli_commands_are_timed(self, run_cli):
        run_cli("rate", "--eta", 0.1)
        assert monitor.last_command == "rate"
