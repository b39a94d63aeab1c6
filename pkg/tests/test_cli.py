import json
from pathlib import Path

import pytest

from burgerslab.cli import ConfigError, load_config, main, run_experiment


def write_config(tmp_path: Path, payload: dict, name: str = "cfg.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


class TestLoadConfig:
    def test_minimal_config_fills_defaults(self, tmp_path):
        path = write_config(tmp_path, {"experiment": "heat-regression"})
        cfg = load_config(path)
        assert cfg.seed == 0
        assert cfg.grid.m == 64
        assert cfg.mesh.t_final == 1.0
        assert cfg.coefficients["family"] == "burgers"
        assert cfg.u0_spec["kind"] == "sine"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json")

    def test_zero_dt_names_field(self, tmp_path):
        path = write_config(
            tmp_path, {"experiment": "heat-regression", "mesh": {"dt": 0.0}}
        )
        with pytest.raises(ConfigError, match="mesh.dt"):
            load_config(path)

    def test_penalty_stability_error(self, tmp_path):
        path = write_config(tmp_path, {
            "experiment": "reflection",
            "mesh": {"t_final": 1.0, "dt": 1e-3},
            "scheme": {"reflection": "penalized", "penalty_n": 1e4},
        })
        with pytest.raises(ConfigError, match="penalty"):
            load_config(path)

    def test_unknown_top_key_named(self, tmp_path):
        path = write_config(tmp_path, {"experiment": "reflection", "mehs": {}})
        with pytest.raises(ConfigError, match="'mehs'"):
            load_config(path)

    def test_unknown_param_key_named(self, tmp_path):
        path = write_config(tmp_path, {
            "experiment": "averaging", "params": {"epz_list": [0.1]},
        })
        with pytest.raises(ConfigError, match="params.epz_list"):
            load_config(path)

    def test_unknown_experiment_lists_names(self, tmp_path):
        path = write_config(tmp_path, {"experiment": "exit-time"})
        with pytest.raises(ConfigError, match="averaging"):
            load_config(path)

    def test_small_grid_named(self, tmp_path):
        path = write_config(tmp_path, {"experiment": "reflection", "grid": {"m": 1}})
        with pytest.raises(ConfigError, match="grid.m"):
            load_config(path)


HEAT_CFG = {
    "experiment": "heat-regression",
    "seed": 3,
    "params": {
        "m_values": [16, 32],
        "dt_values": [2e-4, 1e-4],
        "t_final": 0.05,
        "tolerance": 5e-3,
    },
}


class TestRunExperiment:
    def test_heat_regression_artifacts(self, tmp_path):
        cfg = load_config(write_config(tmp_path, HEAT_CFG))
        code, artifacts = run_experiment(cfg, tmp_path / "out")
        assert code == 0
        names = {p.name for p in artifacts}
        assert names == {"heat_regression.csv", "runmeta.jsonl", "manifest.txt"}
        table = (tmp_path / "out" / "heat_regression.csv").read_text().splitlines()
        assert table[0] == "dx,dt,sup_h_error,pass"
        assert len(table) == 1 + 4
        assert all(line.endswith("true") for line in table[1:])

    def test_manifest_references_every_artifact(self, tmp_path):
        cfg = load_config(write_config(tmp_path, HEAT_CFG))
        _, artifacts = run_experiment(cfg, tmp_path / "out")
        manifest = (tmp_path / "out" / "manifest.txt").read_text()
        emitted = {
            p.name for p in (tmp_path / "out").iterdir() if p.name != "manifest.txt"
        }
        for name in emitted:
            assert name in manifest

    def test_byte_identical_reruns(self, tmp_path):
        cfg = load_config(write_config(tmp_path, HEAT_CFG))
        run_experiment(cfg, tmp_path / "a")
        run_experiment(cfg, tmp_path / "b")
        for name in ("heat_regression.csv", "runmeta.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_blow_up_writes_failure_record(self, tmp_path):
        cfg = load_config(write_config(tmp_path, {
            "experiment": "rate-function",
            "mesh": {"t_final": 1.0, "dt": 0.02},
            "coefficients": {"family": "burgers", "a_g": 8.0, "noise_profile": "zero"},
            "u0": {"kind": "sine", "amplitude": 60.0},
            "params": {"h_star": 0.0, "max_iters": 1},
        }))
        code, artifacts = run_experiment(cfg, tmp_path / "out")
        assert code == 1
        record = json.loads((tmp_path / "out" / "failure.json").read_text())
        assert record["error"] == "BlowUpError"
        assert "step" in record["message"]


class TestAveragingDriver:
    def test_optional_path_dump(self, tmp_path):
        cfg = load_config(write_config(tmp_path, {
            "experiment": "averaging",
            "seed": 6,
            "grid": {"m": 8},
            "mesh": {"t_final": 0.5, "dt": 0.01},
            "coefficients": {"family": "multiscale", "beta": 0.5, "amplitude": 1.0},
            "params": {"eps_list": [0.1], "n_paths": 2, "dump_first_pair": True},
        }))
        code, artifacts = run_experiment(cfg, tmp_path / "out")
        assert code == 0
        names = {p.name for p in artifacts}
        assert {"fast_path_0.bin", "averaged_path_0.bin"} <= names
        from burgerslab.solver import read_path_binary

        meta, u, _ = read_path_binary(str(tmp_path / "out" / "fast_path_0.bin"))
        assert meta["m"] == 8 and u.shape == (51, 8)


class TestShippedConfigs:
    def test_sample_configs_load(self):
        config_dir = Path(__file__).resolve().parents[1] / "configs"
        paths = sorted(config_dir.glob("*.json"))
        assert len(paths) == 6
        names = {load_config(p).experiment for p in paths}
        assert names == {
            "heat-regression", "reflection", "rate-function",
            "rare-event", "condition-probe", "averaging",
        }


class TestMain:
    def test_cli_round_trip(self, tmp_path, capsys):
        path = write_config(tmp_path, HEAT_CFG)
        code = main(["--config", str(path), "--out", str(tmp_path / "out"),
                     "--seed", "9", "--workers", "2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "seed=9" in out
        assert (tmp_path / "out" / "heat_regression.csv").exists()
        meta = (tmp_path / "out" / "runmeta.jsonl").read_text()
        assert '"workers": 2' in meta

    def test_cli_bad_config_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, {"experiment": "unknown-thing"})
        code = main(["--config", str(path)])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_cli_experiment_override_validated(self, tmp_path, capsys):
        path = write_config(tmp_path, HEAT_CFG)
        code = main(["--config", str(path), "--experiment", "nope"])
        assert code == 2
