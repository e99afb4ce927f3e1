"""Scenario runner: presets, config validation, CSV outputs, comparisons,
validation reports, and the command line."""

import json
import math
from dataclasses import replace

import numpy as np
import pytest

from lobsim.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from lobsim.scenario import (
    EVENTS_COLUMNS,
    HEATMAP_COLUMNS,
    SUMMARY_COLUMNS,
    ConfigError,
    arrival_rate_rows,
    build_rate_model,
    compare_bundles,
    compare_summaries,
    config_from_dict,
    config_hash,
    load_config,
    preset,
    read_summaries,
    run_scenario,
    write_bundle,
)


def small_config(name="scenario1", runs=3, events=150, seed=99):
    return replace(preset(name), runs=runs, events_per_run=events, base_seed=seed)


class TestPresets:
    def test_scenario1_matches_published_parameters(self):
        config = preset("scenario1")
        assert len(config.groups) == 1
        group = config.groups[0]
        assert group.share == 1.0
        assert (group.mu, group.sigma, group.support) == (1.0, 3.0, 12)
        assert (group.bid_anchor, group.ask_anchor) == (12, 9)
        assert config.cancel_rate == 0.1
        assert config.event_intensity == 6.0
        assert config.grid_size == 20

    def test_scenario2_group_mixture(self):
        config = preset("scenario2")
        shares = [g.share for g in config.groups]
        assert shares == [0.7, 0.3]
        g2 = config.groups[1]
        assert (g2.mu, g2.sigma, g2.support) == (4.0, 1.0, 14)
        assert (g2.bid_anchor, g2.ask_anchor) == (14, 7)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset("scenario9")


class TestConfigValidation:
    def test_shares_must_sum_to_one(self):
        raw = {
            "groups": [
                {"share": 0.5, "mu": 1, "sigma": 3, "support": 12,
                 "bid_anchor": 12, "ask_anchor": 9},
                {"share": 0.4, "mu": 4, "sigma": 1, "support": 14,
                 "bid_anchor": 14, "ask_anchor": 7},
            ]
        }
        with pytest.raises(ConfigError, match="sum to 1"):
            config_from_dict(raw)

    def test_errors_are_itemized(self):
        raw = {
            "grid_size": 0,
            "record": "movie",
            "groups": [
                {"share": 1.0, "mu": 1, "sigma": -1, "support": 12,
                 "bid_anchor": 12, "ask_anchor": 9},
            ],
        }
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(raw)
        assert len(excinfo.value.problems) >= 3

    def test_support_must_fit_grid(self):
        raw = {
            "grid_size": 10,
            "groups": [
                {"share": 1.0, "mu": 1, "sigma": 3, "support": 12,
                 "bid_anchor": 10, "ask_anchor": 1},
            ],
        }
        with pytest.raises(ConfigError, match="support leaves the grid"):
            config_from_dict(raw)

    def test_load_json_roundtrip(self, tmp_path):
        path = tmp_path / "custom.json"
        path.write_text(
            json.dumps(
                {
                    "groups": [
                        {"share": 1.0, "mu": 1.0, "sigma": 3.0, "support": 12,
                         "bid_anchor": 12, "ask_anchor": 9}
                    ],
                    "runs": 5,
                    "events_per_run": 100,
                }
            )
        )
        config = load_config(path)
        assert config.runs == 5
        assert config.name == "custom"
        build_rate_model(config)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_hash_stable_and_sensitive(self):
        a = config_hash(preset("scenario1"))
        b = config_hash(preset("scenario1"))
        c = config_hash(replace(preset("scenario1"), base_seed=1))
        assert a == b
        assert a != c


class TestRunScenario:
    def test_summary_rows_match_runs(self):
        bundle = run_scenario(small_config(runs=4, events=200))
        assert len(bundle.summaries) == 4
        assert bundle.aborted_runs == []
        assert bundle.metadata["config_hash"] == config_hash(small_config(runs=4, events=200))

    def test_zero_event_runs(self):
        bundle = run_scenario(small_config(runs=1, events=0))
        assert len(bundle.summaries) == 1
        assert bundle.summaries[0].events == 0
        assert math.isnan(bundle.summaries[0].mean_spread)

    def test_write_and_read_back(self, tmp_path):
        bundle = run_scenario(small_config(runs=3, events=150))
        written = write_bundle(bundle, tmp_path / "out")
        names = {p.name for p in written}
        assert names == {"summary.csv", "metadata.json"}
        metadata, rows = read_summaries(tmp_path / "out")
        assert len(rows) == 3
        assert list(rows[0]) == SUMMARY_COLUMNS
        assert metadata["schema_version"] == 1
        assert metadata["base_seed"] == 99

    def test_byte_identical_reruns(self, tmp_path):
        config = small_config(runs=2, events=300)
        write_bundle(run_scenario(config), tmp_path / "a")
        write_bundle(run_scenario(config), tmp_path / "b")
        for name in ("summary.csv", "metadata.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_heatmap_recording(self, tmp_path):
        config = replace(small_config(runs=2, events=250), record="heatmap", heatmap_window=50)
        bundle = run_scenario(config)
        assert bundle.heatmap is not None
        # 50 steps x 2 sides x 20 levels
        assert len(bundle.heatmap) == 50 * 2 * 20
        written = write_bundle(bundle, tmp_path / "heat")
        heatmap_path = tmp_path / "heat" / "heatmap.csv"
        assert heatmap_path in written
        header = heatmap_path.read_text().splitlines()[0]
        assert header.split(",") == HEATMAP_COLUMNS

    def test_events_recording(self, tmp_path):
        config = replace(small_config(runs=2, events=120), record="events")
        bundle = run_scenario(config)
        assert bundle.events is not None
        assert len(bundle.events) == 2 * 120
        write_bundle(bundle, tmp_path / "ev")
        lines = (tmp_path / "ev" / "events.csv").read_text().splitlines()
        assert lines[0] == ",".join(EVENTS_COLUMNS)
        assert len(lines) == 1 + 2 * 120


class TestCompare:
    def test_self_comparison_indistinguishable(self, tmp_path):
        config = small_config(runs=6, events=300)
        write_bundle(run_scenario(config), tmp_path / "x")
        report = compare_bundles(tmp_path / "x", tmp_path / "x")
        for row in report.rows:
            assert row.verdict == "indistinguishable"

    def test_antisymmetry(self):
        rng = np.random.default_rng(0)
        rows_a = [{"mean_spread": v} for v in rng.normal(3.0, 0.05, size=40)]
        rows_b = [{"mean_spread": v} for v in rng.normal(4.0, 0.05, size=40)]
        forward = compare_summaries(rows_a, rows_b, observables=["mean_spread"])
        backward = compare_summaries(rows_b, rows_a, observables=["mean_spread"])
        assert forward.verdict("mean_spread") == "greater"
        assert backward.verdict("mean_spread") == "less"

    def test_grid_mismatch_rejected(self, tmp_path):
        write_bundle(run_scenario(small_config(runs=1, events=50)), tmp_path / "a")
        other = replace(
            small_config(runs=1, events=50),
            grid_size=10,
            groups=(replace(preset("scenario1").groups[0], support=5, bid_anchor=5, ask_anchor=6),),
        )
        write_bundle(run_scenario(other), tmp_path / "b")
        with pytest.raises(ConfigError):
            compare_bundles(tmp_path / "a", tmp_path / "b")


class TestOracleReportLogic:
    def _report(self, **overrides):
        from lobsim.scenario import OracleReport

        base = dict(
            model_name="tiny",
            state_count=35,
            max_column_sum=1e-15,
            min_off_diagonal=0.0,
            tv_distances={1.0: 0.005},
            tv_tolerance=0.02,
            moment_checks=[(1.0, 1, 2.0, 2.01, 0.01)],
            runs=10,
        )
        base.update(overrides)
        return OracleReport(**base)

    def test_passes_within_tolerances(self):
        assert self._report().passed

    def test_fails_on_tv_violation(self):
        assert not self._report(tv_distances={1.0: 0.03}).passed

    def test_fails_on_column_sum(self):
        assert not self._report(max_column_sum=1e-9).passed

    def test_fails_on_moment_disagreement(self):
        bad = self._report(moment_checks=[(1.0, 1, 2.0, 2.5, 0.01)])
        assert not bad.passed
        assert "FAIL" in "\n".join(bad.lines())


class TestArrivalRateTable:
    def test_scenario1_rows(self):
        rows = arrival_rate_rows(preset("scenario1"))
        assert len(rows) == 24  # 12 ask levels + 12 bid levels
        ask_total = sum(float(r[2]) for r in rows if r[0] == "ask")
        bid_total = sum(float(r[2]) for r in rows if r[0] == "bid")
        assert ask_total == pytest.approx(1.0, abs=1e-12)
        assert bid_total == pytest.approx(1.0, abs=1e-12)


class TestCli:
    def test_run_and_compare(self, tmp_path, capsys):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        code = main(
            [
                "run", "--preset", "scenario1", "--runs", "2", "--events", "150",
                "--seed", "7", "--out", str(out_a),
            ]
        )
        assert code == EXIT_OK
        assert (out_a / "summary.csv").exists()
        code = main(
            [
                "run", "--preset", "scenario2", "--runs", "2", "--events", "150",
                "--seed", "7", "--out", str(out_b),
            ]
        )
        assert code == EXIT_OK
        code = main(["compare", str(out_a), str(out_b)])
        assert code == EXIT_OK
        captured = capsys.readouterr()
        assert "mean_spread" in captured.out

    def test_missing_config_file_is_io_error(self, tmp_path):
        code = main(
            ["run", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path / "o")]
        )
        assert code == EXIT_IO

    def test_bad_config_is_config_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"groups": []}))
        code = main(["run", "--config", str(path), "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG

    def test_bad_usage_is_config_error(self):
        assert main(["run"]) == EXIT_CONFIG

    def test_print_rates(self, capsys):
        assert main(["print-rates", "--preset", "scenario2"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "side,price_level,arrival_rate"
        assert len(lines) == 1 + 2 * 14  # 14 populated levels per side

    def test_validate_small(self, capsys):
        code = main(["validate", "--model", "tiny", "--runs", "10000"])
        assert code == EXIT_OK
        assert "result: PASS" in capsys.readouterr().out
