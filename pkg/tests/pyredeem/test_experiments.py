import json
import logging
import math
from dataclasses import replace

import pandas as pd
import pytest
import yaml

from pyredeem.experiments.config import (
    config_from_mapping,
    dump_config,
    parse_config,
    with_overrides,
)
from pyredeem.experiments.driver import Cell, evaluate, run_cells
from pyredeem.experiments.families import (
    convergence_slope,
    run_comparison,
    run_convergence,
    run_ledger,
    run_oversupply,
    run_robustness,
    run_sweep,
    sweep_config,
)
from pyredeem.experiments.population import population_model, sample_population
from pyredeem.experiments.report import emit_report, provenance, summarize
from pyredeem.models.config import (
    ConvergenceSpec,
    DistributionSpec,
    ExperimentConfig,
    SweepSpec,
    distribution_spec,
)
from pyredeem.models.market import OversupplyStrategy
from pyredeem.models.metrics import WelfareConvention
from pyredeem.utils.errors import ConfigError


def _write(tmp_path, text):
    path = tmp_path / "config.yaml"
    path.write_text(text, encoding="utf-8")
    return path


class TestConfig:
    def test_defaults_without_a_file(self, caplog):
        with caplog.at_level(logging.WARNING):
            config = parse_config()
        assert config == ExperimentConfig()
        assert "Config defaults applied for" in caplog.text

    def test_partial_file(self, tmp_path, caplog):
        path = _write(
            tmp_path,
            "runs: 7\n"
            "population:\n"
            "  n_users: 4\n"
            "  lambda_dist: bimodal\n"
            "schedule:\n"
            "  dB: 0.002\n"
            "mechanisms: [IIQ, OPP]\n"
            "oversupply: prop\n",
        )
        with caplog.at_level(logging.WARNING):
            config = parse_config(path)
        assert config.runs == 7
        assert config.population.n_users == 4
        assert config.population.lambda_dist == DistributionSpec(
            "bimodal", (0.5, 5.0, 25.0, 30.0, 0.5)
        )
        assert config.schedule.dB == 0.002
        assert config.schedule.B0 == 0.001
        assert config.mechanisms == ("IIQ", "OPP")
        assert config.oversupply == OversupplyStrategy.PROPORTIONAL
        warnings = [r for r in caplog.records if "defaults applied" in r.getMessage()]
        assert len(warnings) == 1
        assert "master_seed" in warnings[0].getMessage()
        assert "population.n_users" not in warnings[0].getMessage()

    def test_unknown_key_names_its_line(self, tmp_path):
        with pytest.raises(ConfigError, match="bogus.*line 2"):
            parse_config(_write(tmp_path, "runs: 3\nbogus: 1\n"))

    def test_unknown_nested_key(self, tmp_path):
        path = _write(tmp_path, "population:\n  n_users: 3\n  colour: red\n")
        with pytest.raises(ConfigError) as excinfo:
            parse_config(path)
        assert excinfo.value.details == {"key": "population.colour", "line": 3}

    @pytest.mark.parametrize(
        "text",
        [
            "runs: many\n",
            "unit: true\n",
            "mechanisms: []\n",
            "mechanisms: [IIQ, VCG]\n",
            "schedule:\n  dB: 0\n",
            "population:\n  k: 1.5\n",
            "rho_grid: [0.5, 2]\n",
            "oversupply: cheapest\n",
            "welfare_convention: net\n",
            "population:\n  lambda_dist: normal(1,2)\n",
            "sweep:\n  axis: colour\n",
            "server: 3\n",
            "runs: [1, 2\n",
        ],
    )
    def test_rejects_malformed_values(self, tmp_path, text):
        with pytest.raises(ConfigError):
            parse_config(_write(tmp_path, text))

    def test_server_parameters_are_checked_where_they_are_written(self, tmp_path):
        path = _write(tmp_path, "runs: 2\nserver:\n  alpha: 100\n  A1: -0.1\n")
        with pytest.raises(ConfigError, match="server.A1.*line 4") as excinfo:
            parse_config(path)
        assert excinfo.value.details == {"key": "server.A1", "line": 4}
        with pytest.raises(ConfigError, match="line 2"):
            parse_config(_write(tmp_path, "server:\n  a: 1.0\n"))

    def test_free_rider_bins(self, tmp_path):
        assert parse_config(_write(tmp_path, "free_rider_bins: 5\n")).free_rider_bins == 5
        with pytest.raises(ConfigError):
            parse_config(_write(tmp_path, "free_rider_bins: 0\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "absent.yaml")

    def test_dump_reparses_to_the_same_config(self, small_config):
        config = replace(small_config, welfare_convention=WelfareConvention.RELATIVE)
        assert config_from_mapping(yaml.safe_load(dump_config(config))) == config

    def test_overrides(self):
        config = with_overrides(
            ExperimentConfig(),
            seed=7,
            runs=3,
            strategy="major",
            rho=[0.0, 0.5],
            preset="over-supply",
            workers=2,
        )
        assert config.master_seed == 7
        assert config.runs == 3
        assert config.sweep.runs == 3
        assert config.oversupply == OversupplyStrategy.MAJOR_FIRST
        assert config.rho_grid == (0.0, 0.5)
        assert config.server.preset == "over-supply"
        assert config.workers == 2
        assert with_overrides(config) == config

    @pytest.mark.parametrize(
        "flags",
        [{"runs": 0}, {"workers": 0}, {"preset": "huge"}, {"strategy": "cheapest"}],
    )
    def test_bad_overrides(self, flags):
        with pytest.raises(ConfigError):
            with_overrides(ExperimentConfig(), **flags)

    def test_over_supply_preset(self):
        spec = replace(ExperimentConfig().server, preset="over-supply")
        model = spec.to_model(60000.0)
        assert (model.alpha, model.T0) == (10000.0, 0.05)

    @pytest.mark.parametrize(
        "label, expected",
        [
            (6000, DistributionSpec("constant", (6000.0,))),
            ("uniform(0.5, 30)", DistributionSpec("uniform", (0.5, 30.0))),
            ("bimodal(1,2,3,4)", DistributionSpec("bimodal", (1.0, 2.0, 3.0, 4.0, 0.5))),
            ("pareto(3,0.5)", DistributionSpec("pareto", (3.0, 0.5))),
        ],
    )
    def test_distribution_labels(self, label, expected):
        assert distribution_spec(label) == expected

    def test_distribution_sampling(self, rng):
        pareto = distribution_spec("pareto(3,0.5)").sample(rng, 1000)
        assert pareto.min() >= 0.5
        uniform = distribution_spec("uniform(0.5,30)").sample(rng, 1000)
        assert 0.5 <= uniform.min() and uniform.max() <= 30.0
        assert distribution_spec("uniform(0.5,30)").mean == pytest.approx(15.25)


class TestPopulation:
    def test_replicates_are_reproducible(self, small_config):
        assert sample_population(small_config, 0) == sample_population(small_config, 0)
        assert sample_population(small_config, 0) != sample_population(small_config, 1)

    def test_informed_ratio_only_changes_flags(self, small_config):
        everyone = sample_population(small_config, 3, rho=1.0)
        nobody = sample_population(small_config, 3, rho=0.0)
        assert [u.lambda_i for u in everyone] == [u.lambda_i for u in nobody]
        assert all(u.informed for u in everyone)
        assert not any(u.informed for u in nobody)

    def test_model_matches_population(self, small_config):
        users = sample_population(small_config, 0)
        assert population_model(small_config, users).d_total == pytest.approx(6000.0)


class TestDriver:
    def test_row_layout(self, small_config):
        row = evaluate(Cell(small_config, "IIQ", labels=(("rho", 1.0),)), 0)
        assert row["rho"] == 1.0
        assert row["mechanism"] == "IIQ"
        assert row["error"] == ""
        assert {"bin_0", "bin_1", "bin_2"} <= set(row)
        assert not math.isnan(row["welfare"])

    def test_failures_are_recorded(self, small_config):
        broken = replace(small_config, ciq=replace(small_config.ciq, max_iterations=0))
        row = evaluate(Cell(broken, "CIQ"), 0)
        assert json.loads(row["error"])["type"] == "ConvergenceError"
        assert math.isnan(row["welfare"])

    def test_worker_count_does_not_change_results(self, small_config):
        cells = [Cell(small_config, name) for name in small_config.mechanisms]
        serial = run_cells(cells, workers=1, progress=False)
        parallel = run_cells(cells, workers=2, progress=False)
        pd.testing.assert_frame_equal(serial.raw, parallel.raw)
        assert serial.failures == 0

    def test_summarize(self):
        raw = pd.DataFrame(
            {
                "mechanism": ["A", "A", "B", "B"],
                "welfare": [1.0, 3.0, 5.0, math.nan],
                "error": ["", "", "", '{"type": "ValueError"}'],
            }
        )
        summary = summarize(raw, ["mechanism"])
        first, second = summary.to_dict(orient="records")
        assert first["welfare_mean"] == pytest.approx(2.0)
        assert first["welfare_sd"] == pytest.approx(math.sqrt(2.0))
        assert first["welfare_ci95"] == pytest.approx(1.96)
        assert first["failures"] == 0
        assert second["welfare_count"] == 1
        assert second["failures"] == 1


class TestFamilies:
    def test_comparison(self, small_config):
        config = replace(small_config, welfare_convention=WelfareConvention.RELATIVE)
        report = run_comparison(config, progress=False)
        assert len(report.raw) == 3 * config.runs
        gdpr = report.raw[report.raw["mechanism"] == "GDPR"]
        assert gdpr["welfare"].abs().max() == pytest.approx(0.0, abs=1e-9)
        ratios = report.extras["welfare_ratios"]["1.0"]
        assert ratios["IIQ/OPP"] <= 1.0 + 1e-9
        assert math.isnan(ratios["IIQ/CIQ"])
        assert report.provenance["master_seed"] == config.master_seed

    def test_emit_report(self, small_config, tmp_path):
        report = run_comparison(small_config, progress=False)
        target = emit_report(report, tmp_path / "compare")
        assert (target / "raw.csv").read_bytes().startswith(b"rho,mechanism,replicate")
        summary = json.loads((target / "summary.json").read_text())
        assert summary["experiment"] == "compare"
        assert len(summary["cells"]) == 3
        assert parse_config(target / "effective-config.yaml") == small_config
        stamp = json.loads((target / "provenance.json").read_text())
        assert stamp == provenance(small_config, "compare")

    def test_robustness_repeats_the_quotation(self, small_config):
        config = replace(small_config, sigma_grid=(0.0, 0.5))
        report = run_robustness(config, progress=False)
        quoted = report.raw[report.raw["mechanism"] == "IIQ"]
        by_sigma = [group["welfare"].to_list() for _, group in quoted.groupby("sigma")]
        assert len(by_sigma) == 2
        assert by_sigma[0] == by_sigma[1]
        assert "relative_drop" in report.extras
        noisy = report.raw[report.raw["mechanism"] == "OPP-noisy"]
        assert len(noisy) == 2 * config.runs

    def test_convergence(self, small_config):
        config = replace(
            small_config,
            convergence=ConvergenceSpec(dB_grid=(0.01, 0.005), n_users_grid=(2, 3)),
        )
        report = run_convergence(config, progress=False)
        assert len(report.raw) == 4 * config.runs
        assert set(report.summary["axis"]) == {"dB", "I"}
        assert "slope" in report.extras

    def test_convergence_slope(self):
        summary = pd.DataFrame(
            {"axis": ["dB", "dB", "I"], "value": [0.01, 0.001, 5.0], "rounds_mean": [10.0, 100.0, 3.0]}
        )
        assert convergence_slope(summary) == pytest.approx(-1.0)
        assert math.isnan(convergence_slope(summary.iloc[1:]))

    def test_oversupply(self, small_config):
        report = run_oversupply(small_config, progress=False)
        assert list(report.summary["strategy"]) == [s.value for s in OversupplyStrategy]
        assert report.extras["server_payoff_spread"] >= 0.0
        assert report.extras["best_welfare"] in {s.value for s in OversupplyStrategy}

    def test_sweep(self, small_config):
        config = replace(small_config, sweep=SweepSpec(axis="k", values=("0.5", "1"), runs=1))
        report = run_sweep(config, progress=False)
        assert len(report.raw) == 2 * len(config.mechanisms)
        assert set(report.summary["value"]) == {"0.5", "1"}

    @pytest.mark.parametrize(
        "axis, value, check",
        [
            ("dB", "0.01", lambda c: c.schedule.dB == 0.01),
            ("I", "20", lambda c: c.population.n_users == 20),
            ("k", "0.5", lambda c: c.population.k == 0.5),
            ("alpha", "3000", lambda c: c.server.alpha == 3000.0),
            ("lambda_dist", "uniform(1,2)", lambda c: c.population.lambda_dist.params == (1.0, 2.0)),
            ("theta_dist", "constant(0)", lambda c: c.population.theta_dist.family == "constant"),
        ],
    )
    def test_sweep_config(self, axis, value, check):
        assert check(sweep_config(ExperimentConfig(), axis, value))

    def test_sweep_config_errors(self):
        with pytest.raises(ConfigError):
            sweep_config(ExperimentConfig(), "colour", "1")
        with pytest.raises(ConfigError):
            sweep_config(ExperimentConfig(), "dB", "-1")
        with pytest.raises(ConfigError):
            sweep_config(ExperimentConfig(), "k", "fast")

    def test_ledger_export(self, small_config, tmp_path):
        ledger, outcome = run_ledger(small_config, tmp_path)
        assert ledger.read_text().startswith("round,user,quantity,unit_price\n")
        frame = pd.read_csv(outcome)
        assert list(frame.columns) == ["user", "retained", "payment", "mechanism"]
        assert len(frame) == small_config.population.n_users
