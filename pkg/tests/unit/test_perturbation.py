"""Unit tests for perturbations and UAPPERT1 files."""

import numpy as np
import pytest

from fguap.core.perturbation import (
    PERTURBATION_MAGIC,
    AttackMethod,
    AttackMode,
    Perturbation,
    apply,
    load_perturbation,
    random_perturbation,
    save_perturbation,
    zero_perturbation,
)
from fguap.exceptions import (
    BudgetViolationError,
    ChecksumMismatchError,
    NotAContainerError,
    ShapeMismatchError,
    VersionMismatchError,
)
from fguap.utils.containers import ContainerWriter

SHAPE = (1, 4, 4)
XI = 10 / 255


class TestPerturbation:
    """Tests for Perturbation construction."""

    def test_budget_enforced(self):
        """Test a delta beyond xi is a budget violation."""
        with pytest.raises(BudgetViolationError, match="exceeds xi"):
            Perturbation(np.full(SHAPE, 0.1), xi=0.05)

    def test_boundary_allowed(self):
        """Test |delta| == xi is within budget."""
        p = Perturbation(np.full(SHAPE, -XI), xi=XI)
        assert p.linf == XI

    def test_mode_and_target_consistency(self):
        """Test targeted needs a target and untargeted forbids one."""
        with pytest.raises(ValueError, match="target_class"):
            Perturbation(np.zeros(SHAPE), XI, mode=AttackMode.TARGETED)
        with pytest.raises(ValueError, match="no target_class"):
            Perturbation(np.zeros(SHAPE), XI, target_class=1)

    def test_bad_dims_and_values(self):
        """Test rank and finiteness checks."""
        with pytest.raises(ValueError, match="C, H, W"):
            Perturbation(np.zeros((4, 4)), XI)
        with pytest.raises(ValueError, match="xi"):
            Perturbation(np.zeros(SHAPE), -1.0)

    def test_identifier(self):
        """Test the perturbation id encodes method, mode, target, surrogate and seed."""
        p = Perturbation(np.zeros(SHAPE), XI, AttackMode.TARGETED, 2, "convnet-s0", 3)
        assert p.perturbation_id == "fg-targeted-t2-convnet-s0-s3"
        assert zero_perturbation(SHAPE).perturbation_id == "fg-untargeted-none-s0"

    def test_delta_read_only(self):
        """Test delta cannot be mutated after construction."""
        p = zero_perturbation(SHAPE)
        with pytest.raises(ValueError):
            p.delta[0, 0, 0] = 0.01


class TestRandomPerturbation:
    """Tests for the random sign reference."""

    def test_every_pixel_at_budget(self):
        """Test every entry is exactly +xi or -xi."""
        p = random_perturbation((1, 8, 8), XI, seed=3)
        assert np.all(np.abs(p.delta) == XI)
        assert p.method is AttackMethod.RANDOM
        assert p == random_perturbation((1, 8, 8), XI, seed=3)
        assert p != random_perturbation((1, 8, 8), XI, seed=4)


class TestApply:
    """Tests for apply."""

    def test_clips_to_pixel_range(self):
        """Test saturated pixels stay in [0, 1]."""
        p = Perturbation(np.full(SHAPE, XI), XI)
        out = apply(p, np.ones(SHAPE))
        assert out.max() == 1.0
        out = apply(Perturbation(np.full(SHAPE, -XI), XI), np.zeros((2,) + SHAPE))
        assert out.shape == (2,) + SHAPE
        assert out.min() == 0.0

    def test_zero_is_identity(self, rng):
        """Test the zero perturbation leaves images unchanged."""
        x = rng.uniform(size=(3,) + SHAPE)
        np.testing.assert_array_equal(apply(zero_perturbation(SHAPE), x), x)

    def test_shape_mismatch(self):
        """Test image dims must match."""
        with pytest.raises(ShapeMismatchError):
            apply(zero_perturbation(SHAPE), np.zeros((1, 5, 5)))


class TestPerturbationFiles:
    """Tests for UAPPERT1 save/load."""

    def test_round_trip(self, tmp_path):
        """Test provenance and delta survive a save/load."""
        delta = np.linspace(-XI, XI, 16).reshape(SHAPE)
        p = Perturbation(delta, XI, AttackMode.TARGETED, 1, "mlp-s0", 7, AttackMethod.LOGIT_COSINE)
        path = save_perturbation(p, tmp_path / "p.uappert")
        assert path.read_bytes()[:8] == PERTURBATION_MAGIC
        assert load_perturbation(path) == p

    def test_wrong_magic(self, tmp_path):
        """Test a foreign file is not a perturbation."""
        path = tmp_path / "x.uappert"
        path.write_bytes(b"UAPCKPT1" + b"\x00" * 12)
        with pytest.raises(NotAContainerError, match="not a perturbation file"):
            load_perturbation(path)

    def test_corruption(self, tmp_path):
        """Test a flipped byte fails the checksum."""
        path = save_perturbation(random_perturbation(SHAPE, XI, 0), tmp_path / "p.uappert")
        raw = bytearray(path.read_bytes())
        raw[-6] ^= 0x01
        path.write_bytes(bytes(raw))
        with pytest.raises(ChecksumMismatchError):
            load_perturbation(path)

    def _write(self, path, meta, delta):
        path.write_bytes(ContainerWriter(PERTURBATION_MAGIC).document(meta).tensor("delta", delta).to_bytes())
        return path

    def test_tampered_budget(self, tmp_path):
        """Test a valid file whose delta exceeds its xi is refused."""
        meta = zero_perturbation(SHAPE, xi=0.01).metadata()
        path = self._write(tmp_path / "t.uappert", meta, np.full(SHAPE, 0.5))
        with pytest.raises(BudgetViolationError):
            load_perturbation(path)

    def test_unsupported_version(self, tmp_path):
        """Test an unknown format version is refused."""
        meta = dict(zero_perturbation(SHAPE).metadata(), format_version="9")
        path = self._write(tmp_path / "v.uappert", meta, np.zeros(SHAPE))
        with pytest.raises(VersionMismatchError):
            load_perturbation(path)
