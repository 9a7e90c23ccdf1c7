"""Unit tests for the command-line interface."""

import pytest
from click.testing import CliRunner

from fguap import __version__
from fguap.cli import cli, config_default_map
from fguap.config import parse_config_text
from fguap.config.experiment import RESOLVED_CONFIG_NAME, load_experiment_config
from fguap.data import load_dataset

pytestmark = pytest.mark.cli


def invoke(*args):
    return CliRunner().invoke(cli, list(args), obj={}, catch_exceptions=False)


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """Tiny data and an mlp checkpoint produced through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    result = invoke(
        "gen-data", "--seed", "0", "--classes", "3", "--per-class-train", "6",
        "--per-class-test", "3", "--side", "8", "--out", str(data),
    )
    assert result.exit_code == 0, result.output
    result = invoke(
        "train", "--arch", "mlp", "--train-data", str(data / "train.uapdata"),
        "--test-data", str(data / "test.uapdata"), "--epochs", "2", "--batch-size", "6",
        "--out", str(root / "models"),
    )
    assert result.exit_code == 0, result.output
    return root


class TestGroup:
    """Tests for group-level options."""

    def test_version(self):
        """Test --version prints the package version."""
        result = invoke("--version")
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_lists_commands(self):
        """Test every command is registered."""
        result = invoke("--help")
        for name in ("gen-data", "train", "attack", "eval", "transfer", "redundancy", "run"):
            assert name in result.output

    def test_bad_config_exits_one(self, tmp_path):
        """Test an invalid config file is a runtime error."""
        path = tmp_path / "bad.txt"
        path.write_text("data.colour: red\n")
        result = invoke("--config", str(path), "gen-data")
        assert result.exit_code == 1
        assert "Error:" in result.output


class TestGenDataAndTrain:
    """Tests for gen-data and train."""

    def test_outputs(self, trained):
        """Test datasets, checkpoint and resolved configs exist."""
        assert (trained / "data" / "train.uapdata").exists()
        assert (trained / "data" / "manifest.json").exists()
        assert (trained / "models" / "mlp-s0.uapckpt").exists()
        cfg = load_experiment_config(trained / "models" / RESOLVED_CONFIG_NAME)
        assert cfg.train.arch == "mlp"
        assert cfg.train.epochs == 2

    def test_train_prints_accuracy(self, trained, tmp_path):
        """Test the train summary lines."""
        result = invoke(
            "train", "--arch", "mlp", "--train-data", str(trained / "data" / "train.uapdata"),
            "--epochs", "1", "--out", str(tmp_path),
        )
        assert result.exit_code == 0
        assert "Checkpoint: " in result.output
        assert "Train accuracy: " in result.output

    def test_one_class_is_usage_error(self, tmp_path):
        """Test --classes below 2 exits with status 2."""
        result = invoke("gen-data", "--classes", "1", "--out", str(tmp_path))
        assert result.exit_code == 2

    def test_unknown_arch_is_usage_error(self, trained):
        """Test an unknown architecture exits with status 2."""
        result = invoke("train", "--arch", "resnet", "--train-data", str(trained / "data" / "train.uapdata"))
        assert result.exit_code == 2


class TestAttackAndAnalysis:
    """Tests for attack, eval, transfer and redundancy."""

    def _attack(self, trained, out, *extra):
        return invoke(
            "attack", "--checkpoint", str(trained / "models" / "mlp-s0.uapckpt"),
            "--dataset", str(trained / "data" / "train.uapdata"), "--batch-size", "6",
            "--out", str(out), *extra,
        )

    def test_attack_eval_transfer(self, trained, tmp_path):
        """Test the perturbation feeds eval and transfer."""
        result = self._attack(trained, tmp_path / "perts", "--epochs", "1", "--xi", "10/255", "--png")
        assert result.exit_code == 0, result.output
        assert "Perturbation: fg-untargeted-mlp-s0-s0" in result.output
        pert = tmp_path / "perts" / "fg-untargeted-mlp-s0-s0.uappert"
        assert pert.exists()
        assert (tmp_path / "perts" / "fg-untargeted-mlp-s0-s0.png").exists()

        result = invoke(
            "eval", "--checkpoint", str(trained / "models" / "mlp-s0.uapckpt"), "--perturbation", str(pert),
            "--dataset", str(trained / "data" / "test.uapdata"), "--out", str(tmp_path / "reports"),
        )
        assert result.exit_code == 0, result.output
        assert "Fooling ratio: " in result.output
        assert "Dominance D1/D3/D5" in result.output

        result = invoke(
            "transfer", "--models-dir", str(trained / "models"), "--perturbations-dir", str(tmp_path / "perts"),
            "--dataset", str(trained / "data" / "test.uapdata"), "--out", str(tmp_path / "reports"),
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "reports" / "transfer.csv").exists()

    def test_zero_epoch_attack(self, trained, tmp_path):
        """Test zero epochs give a zero perturbation."""
        result = self._attack(trained, tmp_path, "--epochs", "0")
        assert result.exit_code == 0, result.output
        assert "linf=0.00000" in result.output

    def test_targeted_without_target(self, trained, tmp_path):
        """Test targeted mode needs --target-class."""
        result = self._attack(trained, tmp_path, "--mode", "targeted")
        assert result.exit_code == 2
        assert "--target-class" in result.output

    def test_target_in_untargeted_mode(self, trained, tmp_path):
        """Test --target-class needs targeted mode."""
        result = self._attack(trained, tmp_path, "--target-class", "1")
        assert result.exit_code == 2

    def test_targeted_attack(self, trained, tmp_path):
        """Test a targeted perturbation id carries the target."""
        result = self._attack(trained, tmp_path, "--epochs", "1", "--mode", "targeted", "--target-class", "2")
        assert result.exit_code == 0, result.output
        assert "fg-targeted-t2-mlp-s0-s0" in result.output

    def test_bad_budget(self, trained, tmp_path):
        """Test malformed budgets are usage errors."""
        result = self._attack(trained, tmp_path, "--xi", "ten")
        assert result.exit_code == 2

    def test_transfer_empty_dirs(self, trained, tmp_path):
        """Test empty directories exit with status 1."""
        empty = tmp_path / "empty"
        empty.mkdir()
        result = invoke(
            "transfer", "--models-dir", str(empty), "--perturbations-dir", str(empty),
            "--dataset", str(trained / "data" / "test.uapdata"), "--out", str(tmp_path),
        )
        assert result.exit_code == 1
        assert "No checkpoints in" in result.output

    def test_redundancy(self, trained, tmp_path):
        """Test the sweep prints one line per count."""
        result = invoke(
            "redundancy", "--checkpoint", str(trained / "models" / "mlp-s0.uapckpt"),
            "--dataset", str(trained / "data" / "train.uapdata"), "--counts", "6,2",
            "--out", str(tmp_path),
        )
        assert result.exit_code == 0, result.output
        assert "6 per class" in result.output
        assert "2 per class" in result.output

    def test_redundancy_bad_counts(self, trained, tmp_path):
        """Test ascending counts are usage errors."""
        result = invoke(
            "redundancy", "--checkpoint", str(trained / "models" / "mlp-s0.uapckpt"),
            "--dataset", str(trained / "data" / "train.uapdata"), "--counts", "2,6",
        )
        assert result.exit_code == 2


class TestConfigDefaults:
    """Tests for config-driven option defaults."""

    def test_default_map_paths(self, tmp_path):
        """Test defaults point into the config's output directory."""
        cfg = parse_config_text(f"train.arch: mlp\ntrain.seed: 2\noutput_dir: {tmp_path.as_posix()}")
        defaults = config_default_map(cfg)
        assert defaults["attack"]["checkpoint"] == tmp_path / "models" / "mlp-s2.uapckpt"
        assert defaults["gen-data"]["out"] == tmp_path / "data"
        assert defaults["eval"]["dataset"] == tmp_path / "data" / "test.uapdata"
        assert defaults["attack"]["mode"] == "untargeted"

    def test_config_drives_gen_data(self, tmp_path):
        """Test gen-data takes its values from --config and flags override them."""
        config = tmp_path / "exp.txt"
        config.write_text(
            f"data.classes: 3\ndata.per_class_train: 2\ndata.per_class_test: 1\ndata.side: 8\n"
            f"output_dir: {(tmp_path / 'exp').as_posix()}\n"
        )
        result = invoke("--config", str(config), "gen-data", "--seed", "4")
        assert result.exit_code == 0, result.output
        written = load_experiment_config(tmp_path / "exp" / "data" / RESOLVED_CONFIG_NAME)
        assert written.data.classes == 3
        assert written.data.seed == 4

    def test_seed_falls_back_to_settings(self, tmp_path, monkeypatch):
        """Test gen-data without --seed uses FGUAP_DEFAULT_SEED."""
        monkeypatch.setenv("FGUAP_DEFAULT_SEED", "7")
        data = tmp_path / "data"
        result = invoke(
            "gen-data", "--classes", "2", "--per-class-train", "2", "--per-class-test", "1",
            "--side", "8", "--out", str(data),
        )
        assert result.exit_code == 0, result.output
        assert load_dataset(data / "train.uapdata").seed == 7
        assert load_experiment_config(data / RESOLVED_CONFIG_NAME).data.seed == 7
