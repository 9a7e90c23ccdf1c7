"""Unit tests for victim training."""

import numpy as np
import pytest

from fguap.core.trainer import EpochRecord, TrainConfig, evaluate_accuracy, train
from fguap.data import LabeledDataset
from fguap.exceptions import ShapeMismatchError
from fguap.models import build

TINY_CLASSES = 3
TINY_SIDE = 8


def _fresh(arch="mlp", seed=0):
    return build(arch, TINY_CLASSES, seed=seed, input_shape=(1, TINY_SIDE, TINY_SIDE))


class TestTrainConfig:
    """Tests for TrainConfig validation."""

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            ({"epochs": -1}, "epochs"),
            ({"batch_size": 0}, "batch_size"),
            ({"lr": 0.0}, "lr"),
            ({"weight_decay": -0.1}, "weight_decay"),
            ({"seed": -1}, "Seed"),
        ],
    )
    def test_invalid(self, kwargs, message):
        """Test out-of-range hyperparameters are refused."""
        with pytest.raises(ValueError, match=message):
            TrainConfig(**kwargs)


class TestTrain:
    """Tests for the training loop."""

    def test_loss_decreases(self, tiny_train):
        """Test the loss after training is below the first epoch's."""
        result = train(_fresh(), tiny_train, TrainConfig(epochs=6, batch_size=8, lr=3e-3))
        assert len(result.history) == 6
        assert result.history[-1].loss < result.history[0].loss

    def test_bit_identical_reruns(self, tiny_train):
        """Test equal seeds give identical weights."""
        cfg = TrainConfig(epochs=2, batch_size=8, seed=5)
        a = train(_fresh(), tiny_train, cfg).model.named_parameters()
        b = train(_fresh(), tiny_train, cfg).model.named_parameters()
        for name in a:
            np.testing.assert_array_equal(a[name].data, b[name].data)

    def test_zero_epochs_leave_model(self, tiny_train):
        """Test zero epochs return the initial weights and no history."""
        m = _fresh()
        before = {k: v.data.copy() for k, v in m.named_parameters().items()}
        result = train(m, tiny_train, TrainConfig(epochs=0))
        assert result.history == []
        assert result.final_train_accuracy is None
        for name, value in result.model.named_parameters().items():
            np.testing.assert_array_equal(value.data, before[name])

    def test_history_and_metadata(self, tiny_train, tiny_test, mocker):
        """Test per-epoch records, callbacks and checkpoint metadata."""
        on_epoch = mocker.Mock()
        result = train(
            _fresh(),
            tiny_train,
            TrainConfig(epochs=2, batch_size=8),
            test_ds=tiny_test,
            on_epoch=on_epoch,
        )
        assert on_epoch.call_count == 2
        seen = [c.args[0] for c in on_epoch.call_args_list]
        assert [r.epoch for r in seen] == [1, 2]
        assert all(isinstance(r, EpochRecord) for r in seen)
        assert 0.0 <= result.final_test_accuracy <= 1.0
        assert result.model.metadata["epochs"] == "2"
        assert "test_accuracy" in result.model.metadata
        assert not any(t.requires_grad for t in result.model.named_parameters().values())

    def test_class_mismatch(self, tiny_train):
        """Test the dataset's classes must match the model."""
        m = build("mlp", TINY_CLASSES + 1, seed=0, input_shape=(1, TINY_SIDE, TINY_SIDE))
        with pytest.raises(ValueError, match="classes"):
            train(m, tiny_train, TrainConfig(epochs=1))

    def test_input_mismatch(self, tiny_train):
        """Test the dataset's image dims must match the model."""
        m = build("mlp", TINY_CLASSES, seed=0, input_shape=(1, 12, 12))
        with pytest.raises(ShapeMismatchError):
            train(m, tiny_train, TrainConfig(epochs=1))


class TestEvaluateAccuracy:
    """Tests for evaluate_accuracy."""

    def test_matches_direct_count(self, tiny_trained_mlp, tiny_test):
        """Test accuracy equals the fraction of correct predictions."""
        preds = tiny_trained_mlp.predict_batch(tiny_test.images)
        expected = float(np.mean(preds == tiny_test.labels))
        assert evaluate_accuracy(tiny_trained_mlp, tiny_test) == pytest.approx(expected)

    def test_empty_dataset(self, tiny_trained_mlp):
        """Test an empty dataset has no accuracy."""
        empty = LabeledDataset(
            np.zeros((0, 1, TINY_SIDE, TINY_SIDE)), np.zeros(0, dtype=int), TINY_CLASSES, split="test"
        )
        with pytest.raises(ValueError, match="empty"):
            evaluate_accuracy(tiny_trained_mlp, empty)
