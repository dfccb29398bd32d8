"""
End-to-end tests of the evnet command line at toy scale
"""

import json

import pytest
import yaml

from config import DEFAULT_CONFIG
from src.cli import load_run_config, main
from src.cli.run_config import RunConfig, parse_override
from src.utils.exceptions import ConfigError
from src.utils.helpers import read_csv

TINY = [
    "--set", "model.n_dim=3",
    "--set", "model.n_per_model=200",
    "--set", "eval.n_per_model=300",
    "--set", "eval.min_count=5",
    "--set", "train.ensemble_size=2",
    "--set", "train.max_epochs=2",
    "--set", "train.patience=1",
    "--set", "train.batch_size=32",
]


def evnet(out, *command, extra=()):
    return main(["--out", str(out), "--seed", "5", *TINY, *extra, *command])


@pytest.fixture
def trained(tmp_path):
    assert evnet(tmp_path, "gen-data") == 0
    assert evnet(tmp_path, "gen-data", "--eval") == 0
    assert evnet(tmp_path, "train") == 0
    return tmp_path


class TestRunConfig:

    def test_defaults(self):
        config = load_run_config()
        assert config.seed == 42
        assert config.loss.spec().alpha == 2.0
        assert config.train.ensemble_size == 4

    def test_shipped_config_matches_defaults(self):
        assert load_run_config(DEFAULT_CONFIG).resolved() == RunConfig().resolved()

    def test_unknown_key_is_named(self):
        with pytest.raises(ConfigError) as info:
            load_run_config(overrides=["model.familly=rastrigin"])
        assert info.value.key == "model.familly"
        assert "unknown key" in str(info.value)

    def test_invalid_value_is_named(self):
        with pytest.raises(ConfigError) as info:
            load_run_config(overrides=["train.batch_size=1"])
        assert info.value.key == "train.batch_size"

    def test_invalid_loss(self):
        with pytest.raises(ConfigError):
            load_run_config(overrides=["loss.kind=polynomial", "loss.alpha=1"])

    def test_precedence(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"seed": 1, "train": {"batch_size": 64}}))
        config = load_run_config(path, overrides=["train.batch_size=16"], seed=9, out_dir="elsewhere")
        assert (config.seed, config.train.batch_size, config.io.out_dir) == (9, 16, "elsewhere")
        assert config.train_config().seed == 9

    def test_hash_tracks_content(self):
        assert load_run_config().hash == load_run_config().hash
        assert load_run_config(seed=1).hash != load_run_config(seed=2).hash

    def test_parse_override(self):
        assert parse_override("train.learning_rate=1.0e-3") == ("train.learning_rate", 1.0e-3)
        assert parse_override("model.columns=[0, 2]") == ("model.columns", [0, 2])
        with pytest.raises(ConfigError):
            parse_override("seed")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_run_config(tmp_path / "absent.yaml")


class TestExitCodes:

    def test_unknown_key_exits_1(self, tmp_path):
        assert main(["--out", str(tmp_path), "--set", "model.familly=x", "gen-data"]) == 1

    def test_missing_dataset_exits_2(self, tmp_path):
        assert evnet(tmp_path, "train") == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["--config", str(tmp_path / "absent.yaml"), "gen-data"]) == 2

    def test_bad_thread_count_exits_1(self, tmp_path, monkeypatch):
        monkeypatch.setenv("EVNET_THREADS", "many")
        assert evnet(tmp_path, "gen-data") == 1

    def test_rastrigin_needs_rastrigin_family(self, tmp_path):
        assert evnet(tmp_path, "rastrigin") == 1

    def test_log_level_flag(self, tmp_path):
        assert evnet(tmp_path, "gen-data", extra=("--log-level", "debug")) == 0
        assert evnet(tmp_path, "gen-data", extra=("--log-level", "info")) == 0

    def test_unknown_log_level_is_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit):
            evnet(tmp_path, "gen-data", extra=("--log-level", "loud"))


class TestCommands:

    def test_gen_data_is_reproducible(self, tmp_path):
        assert evnet(tmp_path / "a", "gen-data") == 0
        assert evnet(tmp_path / "b", "gen-data") == 0
        a = (tmp_path / "a" / "dataset.evds").read_bytes()
        assert a == (tmp_path / "b" / "dataset.evds").read_bytes()
        manifest = json.loads((tmp_path / "a" / "dataset.json").read_text())
        assert manifest["seed"] == 5
        assert manifest["label_counts"] == {"1": 200, "0": 200}
        assert (tmp_path / "a" / "resolved_config.yaml").exists()

    def test_eval_dataset_differs_from_training(self, tmp_path):
        assert evnet(tmp_path, "gen-data") == 0
        assert evnet(tmp_path, "gen-data", "--eval") == 0
        assert (tmp_path / "dataset.evds").read_bytes() != (tmp_path / "eval_dataset.evds").read_bytes()

    def test_train_writes_checkpoints(self, trained):
        manifest = json.loads((trained / "ensemble" / "ensemble.json").read_text())
        assert len(manifest["members"]) == 2
        assert manifest["loss"] == {"kind": "lpop_exponential", "alpha": 2.0}
        assert (trained / "ensemble" / "member_1.evnn").exists()
        assert (trained / "ensemble" / "history_0.csv").read_text().startswith("# seed=5")

    def test_eval(self, trained):
        assert evnet(trained, "eval") == 0
        frame = read_csv(trained / "predictions.csv")
        assert len(frame) == 600
        assert {"sample_index", "label", "log_k", "log_k_stderr", "log_k_true", "residual"} <= set(frame.columns)
        summary = json.loads((trained / "eval_summary.json").read_text())
        assert summary["rmse_log_k"] >= 0.0
        assert summary["config_hash"]

    def test_eval_observed(self, trained, capsys):
        observed = trained / "observed.csv"
        observed.write_text("0.5\n-1.0\n2.0\n")
        assert evnet(trained, "eval", "--observed", str(observed)) == 0
        assert "log K =" in capsys.readouterr().out

    def test_coverage_report(self, trained):
        assert evnet(trained, "coverage") in (0, 4)
        assert len(read_csv(trained / "coverage.csv")) == 10
        assert "residual_std" in json.loads((trained / "coverage_summary.json").read_text())

    def test_coverage_failure_exits_4(self, trained):
        extra = ["--set", "eval.min_std=100", "--set", "eval.max_std=200"]
        assert evnet(trained, "coverage", extra=extra) == 4

    def test_oracle(self, trained):
        assert evnet(trained, "oracle") == 0
        frame = read_csv(trained / "oracle.csv")
        assert len(frame) == 600
        assert set(frame["method"]) == {"closed-form"}
        assert (frame["stderr"] == 0.0).all()

    def test_baseline(self, trained):
        assert evnet(trained, "baseline") == 0
        residuals = read_csv(trained / "baseline_residuals.csv")
        assert set(residuals["method"]) == {"gaussian-mle", "evidence-network"}
        summary = json.loads((trained / "baseline_summary.json").read_text())
        assert set(summary["rmse"]) == {"gaussian-mle", "evidence-network"}

    def test_compare_losses(self, trained):
        assert evnet(trained, "compare-losses") == 0
        frame = read_csv(trained / "loss_comparison.csv")
        assert list(frame["kind"]) == ["cross_entropy", "lpop_exponential"]

    def test_rastrigin_grid(self, tmp_path):
        extra = [
            "--set", "model.family=rastrigin",
            "--set", "model.n_dim=2",
            "--set", "eval.grid_points=9",
        ]
        assert evnet(tmp_path, "rastrigin", extra=extra) == 0
        frame = read_csv(tmp_path / "rastrigin_grid.csv")
        assert len(frame) == 81
        assert list(frame.columns) == ["x1", "x2", "log_k_network", "log_k_stderr", "log_k_oracle"]
        summary = json.loads((tmp_path / "rastrigin_summary.json").read_text())
        assert summary["oracle_changes_sign"] is True
