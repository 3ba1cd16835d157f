import math

import numpy as np
import pytest

from strucbath.errors import ConfigError
from strucbath.harness import (Scenario, compare, compare_engines, emit,
                               fit_decay_rate, kernel_decay_times,
                               load_config, preset, read_csv, run,
                               scan_convergence, tabulate_kernel)


@pytest.fixture(scope="module")
def mini_records():
    scenario = Scenario(name="mini", engines=("trwa", "quapi1"), delta=1.0,
                        g0=0.1, gammas=(0.5,), dt=0.6, n_steps=30,
                        dk_list=(1, 3))
    return scenario, run(scenario)


class TestScenario:
    def test_presets_exist(self):
        for n in range(1, 6):
            s = preset(f"fig{n}")
            assert s.name == f"fig{n}"

    def test_preset_fig2_parameters(self):
        s = preset("fig2")
        assert s.delta == pytest.approx(0.1)
        assert s.m_keep == 2 and s.fock_cut == 200
        assert s.dt == pytest.approx(0.15)
        assert 0.02 in s.gammas

    def test_preset_fig5_parameters(self):
        s = preset("fig5")
        assert s.dt == pytest.approx(0.6)
        assert s.gammas == (0.2, 0.3, 0.4, 0.5)
        assert "quapi1" in s.engines

    def test_dt_internal_conversion(self):
        s = preset("fig2")
        # 0.15/delta with delta = 0.1*omega0
        assert s.dt_internal() == pytest.approx(1.5)

    def test_missing_numeric_parameters_rejected(self):
        with pytest.raises(ConfigError):
            Scenario(name="x", engines=("quapi1",), delta=1.0, g0=0.1,
                     gammas=(0.1,))

    def test_exclusive_coupling_parameters(self):
        with pytest.raises(ConfigError):
            Scenario(name="x", engines=("trwa",), delta=1.0, g0=0.1,
                     alpha=1e-3, gammas=(0.1,), horizon=10.0)
        with pytest.raises(ConfigError):
            Scenario(name="x", engines=("trwa",), delta=1.0, gammas=(0.1,),
                     horizon=10.0)

    def test_unused_parameters_rejected(self):
        with pytest.raises(ConfigError):
            Scenario(name="x", engines=("trwa",), delta=1.0, g0=0.1,
                     gammas=(0.1,), horizon=10.0, dk_list=(1, 2))

    def test_quapi2_needs_m_keep(self):
        with pytest.raises(ConfigError):
            Scenario(name="x", engines=("quapi2",), delta=1.0, g0=0.1,
                     gammas=(0.1,), dt=0.3, n_steps=10, dk_list=(1,))

    def test_unknown_engine_rejected(self):
        with pytest.raises(ConfigError):
            Scenario(name="x", engines=("redfield",), delta=1.0, g0=0.1,
                     gammas=(0.1,), horizon=10.0)


class TestRun:
    def test_one_record_per_engine_combination(self, mini_records):
        _, records = mini_records
        assert [r.label() for r in records] == \
            ["trwa_g0.5", "quapi1_g0.5_dk1", "quapi1_g0.5_dk3"]

    def test_diagnostics_present(self, mini_records):
        _, records = mini_records
        for rec in records:
            assert rec.diagnostics
            assert rec.wall_time >= 0
        quapi = records[-1]
        assert quapi.diagnostics["trace_error"] <= 1e-6
        assert quapi.diagnostics["hermiticity_error"] <= 1e-8

    def test_deterministic_series(self, mini_records):
        scenario, records = mini_records
        again = run(scenario)
        for a, b in zip(records, again):
            assert np.array_equal(a.populations, b.populations)

    def test_threaded_run_matches_serial(self, mini_records):
        scenario, records = mini_records
        threaded = run(scenario, threads=2)
        for a, b in zip(records, threaded):
            assert a.label() == b.label()
            assert np.array_equal(a.populations, b.populations)


class TestPresetExecution:
    @pytest.mark.parametrize("name", ["fig3", "fig5"])
    def test_preset_runs_end_to_end(self, name, tmp_path):
        # fig1 runs in the CLI tests, fig2/fig4 in the acceptance gate
        scenario = preset(name)
        records = run(scenario)
        assert {r.engine for r in records} == set(scenario.engines)
        assert all(r.populations.size == r.times.size for r in records)
        assert all(np.all(np.isfinite(r.populations)) for r in records)
        emit(records, "csv", tmp_path)


class TestCompare:
    def test_identical_records_zero_difference(self, mini_records):
        _, records = mini_records
        report = compare([records[0], records[0]], tolerance=0.1)
        assert report.rows[0].sup_norm == 0.0
        assert report.rows[0].rms == 0.0
        assert report.all_passed

    def test_engine_comparison_uses_most_refined(self, mini_records):
        _, records = mini_records
        report = compare_engines(records, tolerance=0.1)
        assert len(report.rows) == 1
        assert report.rows[0].other == "quapi1_g0.5_dk3"
        assert report.all_passed

    def test_unconverged_markovian_flagged(self):
        # dk_max = 1 at gamma = 0.2 is far from the analytic curve
        scenario = Scenario(name="uncv", engines=("trwa", "quapi1"),
                            delta=1.0, g0=0.1, gammas=(0.2,), dt=0.6,
                            n_steps=50, dk_list=(1,))
        report = compare_engines(run(scenario), tolerance=0.1)
        assert not report.all_passed

    def test_disjoint_windows_rejected(self, mini_records):
        _, records = mini_records
        import dataclasses
        late = dataclasses.replace(records[0],
                                   times=records[0].times + 100.0)
        with pytest.raises(ValueError):
            compare([records[0], late])

    def test_single_record_rejected(self, mini_records):
        _, records = mini_records
        with pytest.raises(ValueError):
            compare([records[0]])


class TestScan:
    def test_dk_scan_converges_at_strong_coupling(self):
        scenario = Scenario(name="scan5", engines=("quapi1",), delta=1.0,
                            g0=0.1, gammas=(0.5,), dt=0.6, n_steps=50,
                            dk_list=(1, 2, 3, 4, 5))
        report = scan_convergence(scenario, "dk_max")
        rep = report.by_gamma[0.5]
        assert rep.converged_at is not None and rep.converged_at <= 3
        assert report.all_converged

    def test_single_axis_value_trivial_report(self):
        scenario = Scenario(name="one", engines=("quapi1",), delta=1.0,
                            g0=0.1, gammas=(0.5,), dt=0.6, n_steps=20,
                            dk_list=(2,))
        report = scan_convergence(scenario, "dk_max")
        assert report.by_gamma[0.5].converged_at is None
        assert report.by_gamma[0.5].gaps == []

    def test_resource_refusal_recorded_not_fatal(self):
        scenario = Scenario(name="guard", engines=("quapi1",), delta=1.0,
                            g0=0.1, gammas=(0.5,), dt=0.6, n_steps=10,
                            dk_list=(2, 3, 9))
        report = scan_convergence(scenario, "dk_max", max_entries=4**5)
        assert any(v == 9 for _, v, _ in report.refusals)
        assert 0.5 in report.by_gamma

    def test_dt_scan(self):
        scenario = Scenario(name="dts", engines=("quapi1",), delta=1.0,
                            g0=0.1, gammas=(0.5,), dt=0.6, n_steps=40,
                            dk_list=(3,), dt_list=(0.3, 0.6),
                            scan_tolerance=0.05)
        report = scan_convergence(scenario, "dt")
        assert 0.5 in report.by_gamma
        assert len(report.by_gamma[0.5].gaps) == 1

    def test_requires_quapi_engine(self):
        scenario = Scenario(name="x", engines=("trwa",), delta=1.0, g0=0.1,
                            gammas=(0.1,), horizon=10.0)
        with pytest.raises(ConfigError):
            scan_convergence(scenario, "dk_max")


class TestEmit:
    def test_empty_records_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit([], "csv", tmp_path)

    def test_single_engine_two_columns(self, tmp_path, mini_records):
        _, records = mini_records
        paths = emit([records[1]], "csv", tmp_path)
        t, cols = read_csv(paths[0])
        assert list(cols) == ["quapi1_g0.5_dk1"]
        assert t.size == records[1].times.size

    def test_round_trip_full_precision(self, tmp_path, mini_records):
        scenario, records = mini_records
        paths = emit(records, "csv", tmp_path)
        t, cols = read_csv(paths[0])
        for rec in records:
            assert np.max(np.abs(cols[rec.label()] - rec.populations)) <= 1e-12
        # times written in 1/delta units
        assert np.allclose(t, records[0].times * scenario.delta, atol=1e-12)

    def test_header_declares_units_and_scenario(self, tmp_path, mini_records):
        _, records = mini_records
        path = emit(records, "csv", tmp_path)[0]
        text = path.read_text()
        assert text.startswith("# scenario:")
        assert "1/delta" in text.splitlines()[1]

    def test_byte_identical_across_runs(self, tmp_path, mini_records):
        scenario, records = mini_records
        p1 = emit(records, "csv", tmp_path / "a")[0]
        p2 = emit(run(scenario), "csv", tmp_path / "b")[0]
        assert p1.read_bytes() == p2.read_bytes()

    def test_plot_emission(self, tmp_path, mini_records):
        pytest.importorskip("matplotlib")
        _, records = mini_records
        paths = emit(records, "plot", tmp_path)
        assert paths[0].suffix == ".png"
        assert paths[0].stat().st_size > 0

    def test_unknown_format_rejected(self, mini_records, tmp_path):
        _, records = mini_records
        with pytest.raises(ValueError):
            emit(records, "xlsx", tmp_path)


class TestKernelScenario:
    def test_tabulate_and_decay_times(self, tmp_path):
        scenario = Scenario(name="k", kind="kernel", gammas=(0.1, 0.3),
                            g0=0.1, delta=1.0, horizon=30.0)
        paths = tabulate_kernel(scenario, tmp_path)
        assert len(paths) == 2
        t, cols = read_csv(paths[0])
        assert set(cols) == {"re_alpha", "im_alpha", "abs_alpha"}
        times = kernel_decay_times(scenario)
        assert times[0.1] > times[0.3]

    def test_kernel_scenario_validation(self):
        with pytest.raises(ConfigError):
            Scenario(name="k", kind="kernel", gammas=(0.1,),
                     engines=("trwa",), g0=0.1, horizon=10.0)
        with pytest.raises(ConfigError):
            Scenario(name="k", kind="kernel", gammas=(0.1,), g0=0.1)


class TestFitDecayRate:
    def test_recovers_pure_exponential_carrier(self):
        t = np.linspace(0.0, 200.0, 4001)
        p = np.exp(-0.03 * t) * np.cos(1.0 * t)
        rate = fit_decay_rate(t, p, window=2.0 * math.pi)
        assert rate == pytest.approx(0.03, rel=0.02)

    def test_beating_signal_with_window_at_beat_period(self):
        t = np.linspace(0.0, 200.0, 8001)
        p = np.exp(-0.02 * t) * np.cos(t) * np.cos(0.1 * t)
        rate = fit_decay_rate(t, p, window=math.pi / 0.1)
        assert rate == pytest.approx(0.02, rel=0.1)

    def test_too_short_series_rejected(self):
        t = np.linspace(0.0, 5.0, 50)
        with pytest.raises(ValueError):
            fit_decay_rate(t, np.cos(t), window=4.0)


class TestConfigFile:
    CONFIG = """
[my-run]
engine = trwa, quapi1
delta = 1.0
g0 = 0.1
gamma = 0.4, 0.5
dt = 0.6
n_steps = 20
dk_max = 1, 2
tolerance = 0.2

[my-kernel]
kind = kernel
gamma = 0.1
g0 = 0.1
horizon = 20.0
"""

    def test_parse_and_run(self, tmp_path):
        cfg = tmp_path / "scenarios.cfg"
        cfg.write_text(self.CONFIG)
        scenarios = load_config(cfg)
        assert [s.name for s in scenarios] == ["my-run", "my-kernel"]
        assert scenarios[0].gammas == (0.4, 0.5)
        assert scenarios[0].dk_list == (1, 2)
        assert scenarios[1].kind == "kernel"

    def test_unknown_key_is_fatal(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[x]\nengine = trwa\ndelta = 1.0\ng0 = 0.1\n"
                       "gamma = 0.1\nhorizon = 10\ndelta_t = 0.5\n")
        with pytest.raises(ConfigError, match="delta_t"):
            load_config(cfg)

    def test_beta_inf_parsing(self, tmp_path):
        cfg = tmp_path / "beta.cfg"
        cfg.write_text("[x]\nengine = trwa\ndelta = 1.0\ng0 = 0.1\n"
                       "gamma = 0.1\nhorizon = 10\nbeta = inf\n")
        assert math.isinf(load_config(cfg)[0].beta)

    def test_empty_config_rejected(self, tmp_path):
        cfg = tmp_path / "empty.cfg"
        cfg.write_text("# nothing here\n")
        with pytest.raises(ConfigError):
            load_config(cfg)
