import json
from pathlib import Path

import pytest

from mmjoint.cli import (
    ConfigError,
    DEFAULT_CONFIG,
    emit_plotdata,
    load_config,
    load_config_file,
    main,
)
from mmjoint.optimizers import solve_mmf

SMALL_CONFIG = {
    "scenario": {
        "n_antennas": 64,
        "n_unicast": 2,
        "n_groups": 1,
        "group_sizes": 2,
        "coherence_symbols": 200,
        "physical": {
            "bandwidth_hz": 20e6,
            "noise_psd_dbm_per_hz": -174.0,
            "dl_power_watts": 10.0,
            "pilot_energy_joules": 2e-6,
        },
        "seed": 9,
    },
    "sweep": {"n_points": 5, "antenna_counts": [32, 64]},
    "montecarlo": {"n_realizations": 300, "seed": 3, "n_workers": 1},
    "output": {"directory": "out", "formats": ["csv", "plotdata"]},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return str(path)


class TestConfigLoading:
    def test_default_config_is_valid(self):
        cfg = load_config_file(None)
        assert cfg.system().n_unicast == 20
        assert cfg.system().n_multicast == 1000

    def test_missing_power_field_named(self):
        raw = json.loads(json.dumps(SMALL_CONFIG))
        del raw["scenario"]["physical"]
        with pytest.raises(ConfigError) as err:
            load_config(raw)
        assert err.value.field == "scenario.total_dl_power"

    def test_unknown_key_rejected(self):
        raw = json.loads(json.dumps(SMALL_CONFIG))
        raw["scenario"]["bogus_knob"] = 1
        with pytest.raises(ConfigError) as err:
            load_config(raw)
        assert err.value.field == "scenario.bogus_knob"

    def test_missing_seed_and_distances(self):
        raw = json.loads(json.dumps(SMALL_CONFIG))
        del raw["scenario"]["seed"]
        with pytest.raises(ConfigError) as err:
            load_config(raw)
        assert err.value.field == "scenario.seed"

    def test_explicit_distances(self):
        raw = json.loads(json.dumps(SMALL_CONFIG))
        del raw["scenario"]["seed"]
        raw["scenario"]["unicast_distances"] = [100.0, 200.0]
        raw["scenario"]["multicast_distances"] = [[150.0, 400.0]]
        cfg = load_config(raw)
        assert cfg.geometry.unicast_distances == [100.0, 200.0]

    def test_normalized_default_power(self):
        cfg = load_config_file(None)
        assert cfg.total_dl_power == pytest.approx(1.256e14, rel=1e-3)
        assert cfg.unicast_energy_budgets[0] == pytest.approx(5.02e14,
                                                              rel=1e-3)


class TestPareto:
    def test_outputs(self, config_path, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["pareto", "--config", config_path,
                     "--out", str(out)]) == 0
        lines = (out / "pareto.csv").read_text().splitlines()
        data = [l for l in lines if not l.startswith("#")]
        assert data[0] == "N,p_un,p_mu,o_mu,o_un"
        assert len(data) == 1 + 2 * 5  # two antenna counts, five points each
        # rows sorted by (N, p_un)
        keys = [(int(r.split(",")[0]), float(r.split(",")[1])) for r in data[1:]]
        assert keys == sorted(keys)
        convexity = json.loads((out / "convexity_report.json").read_text())
        assert all(v["is_consistent"] for v in convexity["convexity"].values())
        plot = (out / "pareto_plotdata.txt").read_text()
        assert plot.count("# series N=") == 2
        assert plot.count("# radial") == 3

    def test_points_override(self, config_path, tmp_path):
        out = tmp_path / "run"
        main(["pareto", "--config", config_path, "--out", str(out),
              "--points", "7", "--n", "64"])
        data = [l for l in (out / "pareto.csv").read_text().splitlines()
                if not l.startswith("#")]
        assert len(data) == 1 + 7

    def test_determinism_byte_identical(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["pareto", "--config", config_path, "--out", str(out1)])
        main(["pareto", "--config", config_path, "--out", str(out2)])
        for name in ("pareto.csv", "pareto_plotdata.txt",
                     "convexity_report.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestSolverCommands:
    def test_mmf_at_zero_unicast_power(self, config_path, tmp_path):
        out = tmp_path / "run"
        assert main(["mmf", "--config", config_path, "--out", str(out),
                     "--p-un", "0"]) == 0
        payload = json.loads((out / "mmf_solution.json").read_text())
        cfg = load_config_file(config_path)
        direct = solve_mmf(cfg.system(), cfg.profile, 0.0)
        assert payload["solution"]["objective_bits_per_s_per_hz"] == \
            direct.objective
        assert payload["p_mu"] == cfg.total_dl_power

    def test_wsse_writes_solution(self, config_path, tmp_path):
        out = tmp_path / "run"
        assert main(["wsse", "--config", config_path, "--out", str(out),
                     "--p-mu", "0"]) == 0
        payload = json.loads((out / "wsse_solution.json").read_text())
        assert payload["solution"]["objective_bits_per_s_per_hz"] > 0.0

    def test_infeasible_split(self, config_path, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["mmf", "--config", config_path, "--out", str(out),
                     "--p-un", "1e30"])
        assert code == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "infeasible"
        assert "P_un + P_mu <= P" in err["message"] or "p_un" in err["message"]

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["mmf", "--config", str(tmp_path / "nope.json"),
                     "--p-un", "0"])
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "config"


class TestValidate:
    def test_report_written_and_parallel_identical(self, config_path,
                                                   tmp_path):
        outs = []
        for workers, name in ((1, "a"), (4, "b")):
            raw = json.loads(json.dumps(SMALL_CONFIG))
            raw["montecarlo"]["n_workers"] = workers
            cfg_path = tmp_path / f"cfg_{name}.json"
            cfg_path.write_text(json.dumps(raw))
            out = tmp_path / name
            assert main(["validate", "--config", str(cfg_path),
                         "--out", str(out)]) == 0
            outs.append((out / "montecarlo_report.json").read_bytes())
        assert outs[0] == outs[1]
        report = json.loads(outs[0])["report"]
        assert report["n_realizations"] == 300
        assert len(report["unicast"]) == 2
        assert len(report["multicast"]) == 2


class TestEmitPlotdata:
    def test_empty_series_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_plotdata({}, tmp_path / "x.txt", {})
