"""Unit tests for the ExperimentRunner API."""

import json

import pytest

import fguap.runner
from fguap.config import ExperimentConfig, Settings, get_train_recipe, parse_config_text
from fguap.config.experiment import RESOLVED_CONFIG_NAME
from fguap.core.perturbation import AttackMode, load_perturbation
from fguap.data import load_dataset
from fguap.models import load_checkpoint
from fguap.reports.writers import TRANSFER_HEADER, read_csv_rows
from fguap.runner import (
    CHECKPOINT_SUFFIX,
    PERTURBATION_SUFFIX,
    ExperimentRunner,
    dataset_file,
    list_files,
    mini_set,
)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Generated data and one trained victim shared by the module."""
    root = tmp_path_factory.mktemp("runner")
    runner = ExperimentRunner(settings=Settings(_env_file=None), output_dir=root)
    train_path, test_path = runner.generate_data(
        seed=0, num_classes=3, per_class_train=6, per_class_test=3, side=8, out=root / "data", preview=True
    )
    summary = runner.train_model(
        "mlp", train_path, test_path, seed=0, out=root / "models", epochs=2, batch_size=6
    )
    return runner, root, train_path, test_path, summary


class TestGenerateData:
    """Tests for generate_data."""

    def test_files_and_manifest(self, workspace):
        """Test both splits, the manifest and the preview are written."""
        _, root, train_path, test_path, _ = workspace
        assert train_path == dataset_file(root / "data", "train")
        assert load_dataset(test_path).dataset_id == "test-s0-k3-n9"
        manifest = json.loads((root / "data" / "manifest.json").read_text())
        assert manifest["num_samples"] == {"train": 18, "test": 9}
        assert (root / "data" / "preview.png").exists()


class TestTrainModel:
    """Tests for train_model."""

    def test_outputs(self, workspace):
        """Test checkpoint, history and summary files."""
        _, root, _, _, summary = workspace
        assert summary.model_id == "mlp-s0"
        assert summary.epochs == 2
        assert summary.checkpoint.endswith(f"mlp-s0{CHECKPOINT_SUFFIX}")
        assert (root / "models" / "mlp-s0_history.csv").exists()
        assert (root / "models" / "mlp-s0_train.json").exists()
        assert load_checkpoint(summary.checkpoint).metadata["epochs"] == "2"

    def test_unknown_arch(self, workspace):
        """Test architecture validation happens before loading data."""
        runner, _, train_path, _, _ = workspace
        with pytest.raises(ValueError, match="Invalid architecture"):
            runner.train_model("resnet", train_path)

    def test_overrides_go_through_recipe(self, workspace, tmp_path, mocker):
        """Test keyword overrides are applied with override_recipe on the arch recipe."""
        runner, _, train_path, _, _ = workspace
        spy = mocker.spy(fguap.runner, "override_recipe")
        summary = runner.train_model("mlp", train_path, seed=1, out=tmp_path, epochs=1, lr=None)
        recipe, overrides = spy.call_args.args
        assert recipe == get_train_recipe("mlp")
        assert overrides == {"epochs": 1, "lr": None}
        assert summary.epochs == 1
        assert summary.model_id == "mlp-s1"


class TestDefaultSeed:
    """Tests for the settings fallback seed."""

    @pytest.fixture
    def seeded_runner(self, tmp_path):
        return ExperimentRunner(settings=Settings(_env_file=None, default_seed=5), output_dir=tmp_path)

    def test_resolve_seed(self, seeded_runner):
        """Test None falls back to settings.default_seed and explicit seeds win."""
        assert seeded_runner.resolve_seed(None) == 5
        assert seeded_runner.resolve_seed(0) == 0
        assert seeded_runner.attack_config().seed == 5
        assert seeded_runner.attack_config(seed=2).seed == 2

    def test_generate_data_uses_fallback(self, seeded_runner, tmp_path):
        """Test generated datasets carry the fallback seed."""
        train_path, _ = seeded_runner.generate_data(
            num_classes=2, per_class_train=2, per_class_test=1, side=8, out=tmp_path / "data"
        )
        assert load_dataset(train_path).seed == 5
        assert json.loads((tmp_path / "data" / "manifest.json").read_text())["seed"] == 5


class TestCraftAndEvaluate:
    """Tests for craft and evaluate."""

    def test_craft_writes_artifacts(self, workspace, tmp_path):
        """Test the perturbation, its log and PNG are written."""
        runner, _, train_path, _, summary = workspace
        cfg = runner.attack_config(epochs=1, batch_size=6)
        p, log = runner.craft(summary.checkpoint, train_path, cfg, out=tmp_path, png=True)

        stem = p.perturbation_id
        assert load_perturbation(tmp_path / f"{stem}{PERTURBATION_SUFFIX}") == p
        assert (tmp_path / f"{stem}.png").exists()
        assert json.loads((tmp_path / f"{stem}_attack.json").read_text())["epochs"] == 1
        assert log.num_samples == 18
        assert len(log.epoch_losses) == 1

    def test_mini_set(self, workspace, tmp_path):
        """Test crafting on a mini-set records its size."""
        runner, _, train_path, _, summary = workspace
        cfg = runner.attack_config("mini-set", epochs=1)
        _, log = runner.craft(summary.checkpoint, train_path, cfg, out=tmp_path, mini_set_size=4)
        assert log.num_samples == 6
        assert log.augment is True

    def test_targeted_overrides(self, workspace):
        """Test mode and target flow through attack_config."""
        runner = workspace[0]
        cfg = runner.attack_config(mode=AttackMode.TARGETED, target_class=1, epochs=None)
        assert cfg.target_class == 1
        assert cfg.epochs == 10

    def test_evaluate_from_path(self, workspace, tmp_path):
        """Test evaluation accepts a perturbation file and writes the report."""
        runner, _, train_path, test_path, summary = workspace
        cfg = runner.attack_config(epochs=1, batch_size=6)
        p, _ = runner.craft(summary.checkpoint, train_path, cfg, out=tmp_path)
        report = runner.evaluate(
            summary.checkpoint, tmp_path / f"{p.perturbation_id}{PERTURBATION_SUFFIX}", test_path, out=tmp_path
        )
        assert report.num_samples == 9
        assert (tmp_path / f"eval_mlp-s0_{p.perturbation_id}.json").exists()


class TestStudies:
    """Tests for transfer and redundancy through the runner."""

    def test_transfer(self, workspace, tmp_path):
        """Test transfer.csv has one row per pair."""
        runner, root, train_path, test_path, summary = workspace
        cfg = runner.attack_config(epochs=1, batch_size=6)
        runner.craft(summary.checkpoint, train_path, cfg, out=tmp_path / "perts")
        matrix = runner.transfer(
            list_files(root / "models", CHECKPOINT_SUFFIX),
            list_files(tmp_path / "perts", PERTURBATION_SUFFIX),
            test_path,
            out=tmp_path,
        )
        assert matrix.values.shape == (1, 1)
        assert len(read_csv_rows(tmp_path / "transfer.csv", TRANSFER_HEADER)) == 1

    def test_transfer_needs_inputs(self, workspace):
        """Test empty lists are refused."""
        runner, _, _, test_path, _ = workspace
        with pytest.raises(ValueError, match="at least one checkpoint"):
            runner.transfer([], [], test_path)

    def test_redundancy(self, workspace, tmp_path):
        """Test redundancy.csv rows follow the counts."""
        runner, _, train_path, test_path, summary = workspace
        cfg = runner.attack_config("redundancy", epochs=1, batch_size=6)
        sweep = runner.redundancy(summary.checkpoint, train_path, [6, 2], cfg, eval_path=test_path, out=tmp_path)
        assert [r.count for r in sweep.rows] == [6, 2]
        assert (tmp_path / "redundancy.csv").exists()


class TestHelpers:
    """Tests for module helpers."""

    def test_mini_set_size(self, tiny_train):
        """Test ceil(size / K) images per class."""
        assert len(mini_set(tiny_train, 5, seed=0)) == 6
        with pytest.raises(ValueError, match="mini-set size must be >= 1"):
            mini_set(tiny_train, 0, seed=0)

    def test_list_files(self, tmp_path):
        """Test filtering by suffix and missing directories."""
        (tmp_path / "b.uapckpt").write_bytes(b"")
        (tmp_path / "a.uapckpt").write_bytes(b"")
        (tmp_path / "notes.txt").write_text("x")
        assert [p.name for p in list_files(tmp_path, CHECKPOINT_SUFFIX)] == ["a.uapckpt", "b.uapckpt"]
        with pytest.raises(FileNotFoundError, match="Not a directory"):
            list_files(tmp_path / "missing", CHECKPOINT_SUFFIX)


class TestRun:
    """Tests for the full pipeline on a tiny config."""

    def test_run(self, tmp_path):
        """Test every stage writes into the configured output directory."""
        cfg = parse_config_text(
            "\n".join(
                [
                    "data.classes: 3",
                    "data.per_class_train: 6",
                    "data.per_class_test: 3",
                    "data.side: 8",
                    "train.arch: mlp",
                    "train.epochs: 2",
                    "train.batch_size: 6",
                    "attack.epochs: 1",
                    "attack.batch_size: 6",
                    "eval.collapse: false",
                    f"output_dir: {(tmp_path / 'exp').as_posix()}",
                ]
            )
        )
        runner = ExperimentRunner(settings=Settings(_env_file=None))
        report = runner.run(cfg)

        root = tmp_path / "exp"
        assert (root / RESOLVED_CONFIG_NAME).exists()
        assert (root / "data" / "train.uapdata").exists()
        assert (root / "models" / "mlp-s0.uapckpt").exists()
        assert list((root / "perturbations").glob("*.png"))
        assert list((root / "reports").glob("eval_*.json"))
        assert report.nc_metric_clean is None
        assert isinstance(cfg, ExperimentConfig)
