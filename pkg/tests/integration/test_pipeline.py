"""Integration tests: the default pipeline end to end at desk scale.

Trains the three victims with their recipes on the default synthetic task
(seed 0, 8 classes, 24x24), crafts feature-gathering perturbations with the
default attack (b=32, m=10, lr=0.02, xi=10/255) and checks efficacy,
collapse, dominance, targeted, redundancy and transfer behaviour.

Usage:
    python -m pytest tests/integration/test_pipeline.py -v -m integration

Notes:
    - Training all three victims takes a few minutes on a laptop CPU.
    - Default templates: RMS 0.03 orthogonal cosine patterns, minimum pairwise
      template distance about 1.0 (over 10 noise sigmas), per-sample class
      evidence about 0.6 against an L-inf 10/255 budget that can move a
      feature direction by about 0.8.
    - Artifacts are written under pytest's temporary directory.
"""

import logging

import pytest

from fguap.config import Settings, get_attack_recipe, recommended_attack_recipe
from fguap.core.attack import AttackConfig, craft_uap
from fguap.core.collapse import nc_report
from fguap.core.evaluator import UAPEvaluator, fooling_ratio
from fguap.core.perturbation import AttackMode, random_perturbation, zero_perturbation
from fguap.core.studies import redundancy_sweep, transfer_matrix
from fguap.core.trainer import evaluate_accuracy
from fguap.data import load_dataset
from fguap.models import build, load_checkpoint
from fguap.runner import ExperimentRunner

pytestmark = [pytest.mark.integration, pytest.mark.slow, pytest.mark.timeout(1800)]

logger = logging.getLogger(__name__)

SEED = 0
ARCHS = ("convnet", "mlp", "attnnet")
TARGETS = (1, 4, 6)
FR_FLOOR = 0.70
RANDOM_MARGIN = 0.30
TARGET_MARGIN = 0.30
REDUNDANCY_TOLERANCE = 0.10
TRAIN_ACCURACY_FLOOR = 0.99
TEST_ACCURACY_FLOOR = 0.90
CHANCE_TOLERANCE = 0.05


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Data, three trained victims and their default perturbations."""
    root = tmp_path_factory.mktemp("pipeline")
    runner = ExperimentRunner(settings=Settings(_env_file=None), output_dir=root)
    train_path, test_path = runner.generate_data(seed=SEED, out=root / "data")
    models = {}
    for arch in ARCHS:
        summary = runner.train_model(arch, train_path, test_path, seed=SEED, out=root / "models")
        models[arch] = load_checkpoint(summary.checkpoint)
        logger.info(f"{arch}: train={summary.train_accuracy} test={summary.test_accuracy}")
        assert summary.train_accuracy >= TRAIN_ACCURACY_FLOOR, f"{arch} train accuracy"
        assert summary.test_accuracy >= TEST_ACCURACY_FLOOR, f"{arch} test accuracy"

    train_ds, test_ds = load_dataset(train_path), load_dataset(test_path)
    default_cfg = get_attack_recipe("default").to_attack_config(seed=SEED)
    perturbations = {
        arch: craft_uap(m, train_ds, recommended_attack_recipe(arch).to_attack_config(seed=SEED))
        for arch, m in models.items()
    }
    return {
        "train": train_ds,
        "test": test_ds,
        "models": models,
        "perturbations": perturbations,
        "cfg": default_cfg,
    }


class TestVictims:
    """Accuracy of trained and untrained victims."""

    @pytest.mark.parametrize("arch", ARCHS)
    def test_trained_accuracy(self, pipeline, arch):
        """Test each default recipe fits the train split and generalises."""
        m = pipeline["models"][arch]
        assert evaluate_accuracy(m, pipeline["train"]) >= TRAIN_ACCURACY_FLOOR
        assert evaluate_accuracy(m, pipeline["test"]) >= TEST_ACCURACY_FLOOR

    @pytest.mark.parametrize("arch", ARCHS)
    def test_untrained_is_chance(self, pipeline, arch):
        """Test a freshly initialised victim scores about 1/K on the train split."""
        train_ds = pipeline["train"]
        m = build(arch, train_ds.num_classes, SEED, train_ds.input_shape)
        chance = 1.0 / train_ds.num_classes
        assert len(train_ds) == 1600
        assert abs(evaluate_accuracy(m, train_ds) - chance) <= CHANCE_TOLERANCE


class TestEfficacy:
    """Fooling ratio of the default convnet perturbation."""

    def test_beats_zero_and_random(self, pipeline):
        """Test FR exceeds the zero and same-budget random references."""
        m, test = pipeline["models"]["convnet"], pipeline["test"]
        p = pipeline["perturbations"]["convnet"]
        fr = fooling_ratio(m, test, p)
        zero_fr = fooling_ratio(m, test, zero_perturbation(test.input_shape))
        random_fr = fooling_ratio(m, test, random_perturbation(test.input_shape, p.xi, seed=SEED))

        assert zero_fr == 0.0
        assert fr > zero_fr
        assert fr >= random_fr + RANDOM_MARGIN
        assert fr >= FR_FLOOR


class TestCollapseAndDominance:
    """Collapse direction and label dominance on the default pipeline."""

    def test_collapse_worsens(self, pipeline):
        """Test the collapse metric drops under the perturbation."""
        report = nc_report(pipeline["models"]["convnet"], pipeline["test"], pipeline["perturbations"]["convnet"])
        assert report.metric_perturbed < report.metric_clean

    def test_dominance(self, pipeline):
        """Test one class absorbs at least half the perturbed predictions."""
        report = UAPEvaluator().evaluate(
            pipeline["models"]["convnet"], pipeline["test"], pipeline["perturbations"]["convnet"]
        )
        assert report.dominance_1 >= 0.5
        if report.uap_class_rank != 1:
            logger.warning(f"Perturbation class {report.uap_class} has rank {report.uap_class_rank}")


class TestTargeted:
    """Targeted perturbations toward fixed classes."""

    @pytest.mark.parametrize("target", TARGETS)
    def test_target_fooling(self, pipeline, target):
        """Test TFR clears 0.5 and the clean target share by a margin."""
        m, train_ds, test = pipeline["models"]["convnet"], pipeline["train"], pipeline["test"]
        cfg = AttackConfig(mode=AttackMode.TARGETED, target_class=target, seed=SEED)
        p = craft_uap(m, train_ds, cfg)
        report = UAPEvaluator(include_collapse=False, include_per_class=False).evaluate(m, test, p)

        assert report.targeted_fooling_ratio >= 0.5
        assert report.targeted_fooling_ratio >= report.clean_target_fraction + TARGET_MARGIN


class TestRedundancy:
    """Crafting on one image per class."""

    def test_one_per_class_close_to_full(self, pipeline):
        """Test FR at one sample per class stays near the full-set FR."""
        sweep = redundancy_sweep(
            pipeline["models"]["convnet"], pipeline["train"], [1], pipeline["cfg"], eval_ds=pipeline["test"]
        )
        assert abs(sweep.rows[0].fr - sweep.full_fr) <= REDUNDANCY_TOLERANCE


class TestTransfer:
    """Transfer across the three victims."""

    def test_matrix(self, pipeline):
        """Test the 3x3 matrix and report white-box row maxima."""
        models = [pipeline["models"][a] for a in ARCHS]
        perts = [pipeline["perturbations"][a] for a in ARCHS]
        matrix = transfer_matrix(models, perts, pipeline["test"])

        assert matrix.values.shape == (3, 3)
        assert matrix.surrogates == matrix.victims
        assert ((matrix.values >= 0.0) & (matrix.values <= 1.0)).all()
        for surrogate, is_max in zip(matrix.surrogates, matrix.white_box_is_row_max()):
            if not is_max:
                logger.warning(f"White-box entry of {surrogate} is not its row maximum")
