"""Unit tests for PNG export helpers."""

import numpy as np
import pytest
from PIL import Image

from fguap.core.perturbation import Perturbation, zero_perturbation
from fguap.utils.image_utils import (
    array_to_image,
    dataset_preview,
    perturbation_to_image,
    save_perturbation_png,
)


class TestArrayToImage:
    """Tests for array_to_image function."""

    def test_grayscale(self):
        """Test a single channel gives an L image."""
        img = array_to_image(np.full((1, 4, 6), 1.0))
        assert img.mode == "L"
        assert img.size == (6, 4)
        assert img.getpixel((0, 0)) == 255

    def test_rgb(self):
        """Test three channels give an RGB image."""
        arr = np.zeros((3, 2, 2))
        arr[0] = 1.0
        img = array_to_image(arr)
        assert img.mode == "RGB"
        assert img.getpixel((1, 1)) == (255, 0, 0)

    def test_scale_and_clip(self):
        """Test nearest upscaling and clipping of out-of-range values."""
        img = array_to_image(np.array([[-1.0, 2.0]]), scale=3)
        assert img.size == (6, 3)
        assert img.getpixel((0, 0)) == 0
        assert img.getpixel((5, 2)) == 255

    def test_invalid(self):
        """Test invalid scale and shapes."""
        with pytest.raises(ValueError, match="Scale must be >= 1"):
            array_to_image(np.zeros((2, 2)), scale=0)
        with pytest.raises(ValueError, match="Unsupported channel count"):
            array_to_image(np.zeros((2, 2, 2)))
        with pytest.raises(ValueError, match="Unsupported image dims"):
            array_to_image(np.zeros(4))


class TestPerturbationImages:
    """Tests for perturbation rendering."""

    def test_signed_mapping(self):
        """Test -xi maps to black, +xi to white."""
        delta = np.array([[[-0.1, 0.1]]])
        img = perturbation_to_image(delta, 0.1, scale=1)
        assert img.getpixel((0, 0)) == 0
        assert img.getpixel((1, 0)) == 255

    def test_zero_budget_is_mid_gray(self):
        """Test xi = 0 renders uniformly mid-gray."""
        img = perturbation_to_image(np.zeros((1, 2, 2)), 0.0, scale=1)
        assert set(img.getdata()) == {128}

    def test_save_png(self, tmp_path):
        """Test saving creates a scaled PNG."""
        p = Perturbation(np.full((1, 4, 4), 0.02), 0.04)
        path = save_perturbation_png(p, tmp_path / "out" / "p.png", scale=2)
        with Image.open(path) as img:
            assert img.format == "PNG"
            assert img.size == (8, 8)

    def test_dataset_preview(self, tmp_path, tiny_train):
        """Test the preview grid has one row per class."""
        path = dataset_preview(tiny_train, tmp_path / "preview.png", per_class=4, scale=1)
        with Image.open(path) as img:
            assert img.size == (4 * 8, 3 * 8)

    def test_zero_perturbation_png(self, tmp_path):
        """Test a zero perturbation saves as mid-gray."""
        path = save_perturbation_png(zero_perturbation((1, 2, 2)), tmp_path / "z.png", scale=1)
        with Image.open(path) as img:
            assert set(img.getdata()) == {128}
