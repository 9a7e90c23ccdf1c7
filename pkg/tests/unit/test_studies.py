"""Unit tests for transfer and redundancy studies."""

import numpy as np
import pytest

from fguap.core.attack import AttackConfig
from fguap.core.evaluator import fooling_ratio
from fguap.core.perturbation import random_perturbation
from fguap.core.studies import TransferMatrix, redundancy_sweep, transfer_matrix
from fguap.models import build


@pytest.fixture(scope="module")
def untrained_convnet():
    return build("convnet", 3, seed=1, input_shape=(1, 8, 8))


class TestTransferMatrix:
    """Tests for transfer_matrix."""

    def test_entries_are_fooling_ratios(self, tiny_trained_mlp, untrained_convnet, tiny_test):
        """Test entry (i, j) is the FR of perturbation i on model j."""
        perts = [
            random_perturbation((1, 8, 8), 0.3, seed=1, surrogate_id="mlp-s0"),
            random_perturbation((1, 8, 8), 0.3, seed=2, surrogate_id="convnet-s1"),
        ]
        models = [tiny_trained_mlp, untrained_convnet]
        matrix = transfer_matrix(models, perts, tiny_test)

        assert matrix.values.shape == (2, 2)
        assert matrix.surrogates == ("mlp-s0", "convnet-s1")
        assert matrix.victims == ("mlp-s0", "convnet-s1")
        for i, p in enumerate(perts):
            for j, m in enumerate(models):
                assert matrix.values[i, j] == fooling_ratio(m, tiny_test, p)

    def test_rows_are_surrogate_major(self):
        """Test long-format rows iterate victims within each surrogate."""
        matrix = TransferMatrix(("a", "b"), ("x", "y"), np.array([[0.1, 0.2], [0.3, 0.4]]))
        assert list(matrix.rows()) == [
            ("a", "x", 0.1),
            ("a", "y", 0.2),
            ("b", "x", 0.3),
            ("b", "y", 0.4),
        ]

    def test_white_box_flags(self):
        """Test the white-box check per row, None for foreign surrogates."""
        matrix = TransferMatrix(
            ("a", "b", "z"), ("a", "b"), np.array([[0.9, 0.2], [0.5, 0.4], [0.1, 0.1]])
        )
        assert matrix.white_box_is_row_max() == [True, False, None]

    def test_empty_inputs(self, tiny_trained_mlp, tiny_test):
        """Test both lists must be non-empty."""
        with pytest.raises(ValueError, match="at least one model"):
            transfer_matrix([], [random_perturbation((1, 8, 8), 0.1, 0)], tiny_test)
        with pytest.raises(ValueError, match="at least one model"):
            transfer_matrix([tiny_trained_mlp], [], tiny_test)


class TestRedundancySweep:
    """Tests for redundancy_sweep."""

    @pytest.fixture(scope="class")
    def sweep_cfg(self):
        return AttackConfig(batch_size=12, epochs=1, lr=0.02, seed=0, augment=True)

    def test_rows_follow_counts(self, tiny_trained_mlp, tiny_train, sweep_cfg):
        """Test one row per count and the full-count row reuses the full-set UAP."""
        sweep = redundancy_sweep(tiny_trained_mlp, tiny_train, [12, 4, 1], sweep_cfg)
        assert [r.count for r in sweep.rows] == [12, 4, 1]
        assert sweep.rows[0].fr == sweep.full_fr
        for row in sweep.rows:
            assert 0.0 <= row.fr <= 1.0
            if sweep.full_fr > 0:
                assert row.ratio_to_full == pytest.approx(row.fr / sweep.full_fr)
            else:
                assert row.ratio_to_full is None

    def test_separate_eval_split(self, tiny_trained_mlp, tiny_train, tiny_test, sweep_cfg):
        """Test FRs can be measured on another split."""
        sweep = redundancy_sweep(tiny_trained_mlp, tiny_train, [2], sweep_cfg, eval_ds=tiny_test)
        assert len(sweep.rows) == 1

    @pytest.mark.parametrize(
        "counts, message",
        [
            ([], "cannot be empty"),
            ([4, 4], "strictly descending"),
            ([2, 5], "strictly descending"),
            ([13, 2], "must lie in"),
            ([3, 0], "must lie in"),
        ],
    )
    def test_invalid_counts(self, tiny_trained_mlp, tiny_train, sweep_cfg, counts, message):
        """Test count validation."""
        with pytest.raises(ValueError, match=message):
            redundancy_sweep(tiny_trained_mlp, tiny_train, counts, sweep_cfg)
