"""Tests for metrics.py - PSNR and SSIM."""

import math

import numpy as np
import pytest


class TestPsnr:
    """Tests for psnr and mean_squared_error."""

    def test_identical_images_infinite(self, rng):
        """Test identical images give +inf."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import psnr

        img = ImageGrid(rng.uniform(0, 255, size=(8, 8)))
        assert psnr(img, img) == math.inf

    def test_unit_mse(self):
        """Test MSE = 1 gives 10 log10(65025) = 48.1308 dB."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import psnr

        reference = ImageGrid.constant(4, 4, 100.0)
        candidate = ImageGrid.constant(4, 4, 101.0)
        assert psnr(reference, candidate) == pytest.approx(48.1308, abs=1e-4)

    def test_full_scale_error_zero_db(self):
        """Test MSE = 65025 gives 0 dB."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import psnr

        assert psnr(ImageGrid.constant(3, 3, 0.0), ImageGrid.constant(3, 3, 255.0)) == 0.0

    def test_larger_perturbation_lower_psnr(self, rng):
        """Test larger i.i.d. perturbations never raise PSNR."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import psnr

        reference = ImageGrid(rng.uniform(50, 200, size=(32, 32)))
        for seed in range(10):
            noise = np.random.default_rng(seed).normal(size=(32, 32))
            small = psnr(reference, reference.with_data(reference.data + 2.0 * noise))
            large = psnr(reference, reference.with_data(reference.data + 5.0 * noise))
            assert large < small

    def test_shape_mismatch(self):
        """Test images of different shapes are rejected."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import MetricShapeError, psnr

        with pytest.raises(MetricShapeError):
            psnr(ImageGrid.constant(3, 3, 0.0), ImageGrid.constant(3, 4, 0.0))


class TestSsim:
    """Tests for ssim."""

    @pytest.mark.parametrize("mode", ["windowed", "global"])
    def test_identical_images_exactly_one(self, rng, mode):
        """Test ssim(u, u) == 1 exactly."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import ssim

        img = ImageGrid(rng.uniform(0, 255, size=(24, 20)))
        assert ssim(img, img, mode=mode) == 1.0

    def test_symmetric(self, rng):
        """Test SSIM is symmetric in its arguments."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import ssim

        a = ImageGrid(rng.uniform(0, 255, size=(16, 16)))
        b = ImageGrid(rng.uniform(0, 255, size=(16, 16)))
        assert ssim(a, b) == pytest.approx(ssim(b, a), rel=1e-14)

    def test_constant_images_closed_form(self):
        """Test two constants give (2cd + c1) / (c^2 + d^2 + c1) in both modes."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import SSIM_C1, ssim

        c, d = 100.0, 140.0
        expected = (2 * c * d + SSIM_C1) / (c * c + d * d + SSIM_C1)
        reference = ImageGrid.constant(16, 16, c)
        candidate = ImageGrid.constant(16, 16, d)

        assert ssim(reference, candidate, mode="windowed") == pytest.approx(expected, rel=1e-12)
        assert ssim(reference, candidate, mode="global") == pytest.approx(expected, rel=1e-12)

    def test_inverted_contrast_low(self):
        """Test a contrast-inverted pattern scores below 0.5."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import ssim

        y, x = np.mgrid[0:32, 0:32]
        pattern = 128.0 + 100.0 * np.sign(np.sin(x / 3.0) * np.cos(y / 3.0) + 1e-9)
        reference = ImageGrid(pattern)
        candidate = ImageGrid(255.0 - pattern)
        assert ssim(reference, candidate) < 0.5

    def test_windowed_equals_global_on_homogeneous_image(self):
        """Test both modes agree on a spatially homogeneous pair."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import ssim

        reference = ImageGrid.constant(20, 20, 90.0)
        candidate = ImageGrid.constant(20, 20, 60.0)
        windowed = ssim(reference, candidate, mode="windowed")
        assert windowed == pytest.approx(ssim(reference, candidate, mode="global"), abs=1e-10)

    def test_small_image_falls_back_to_global(self, rng):
        """Test an image smaller than the window uses global statistics."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import ssim

        a = ImageGrid(rng.uniform(0, 255, size=(5, 5)))
        b = ImageGrid(rng.uniform(0, 255, size=(5, 5)))
        assert ssim(a, b, mode="windowed") == ssim(a, b, mode="global")

    def test_noise_lowers_ssim(self, rng):
        """Test noisier candidates score lower."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import ssim

        y, x = np.mgrid[0:32, 0:32].astype(float)
        reference = ImageGrid(100.0 + 50.0 * np.sin(x / 5.0) * np.cos(y / 4.0))
        noise = rng.normal(size=(32, 32))
        mild = ssim(reference, reference.with_data(reference.data + 5.0 * noise))
        heavy = ssim(reference, reference.with_data(reference.data + 40.0 * noise))
        assert 1.0 > mild > heavy

    def test_unknown_mode(self):
        """Test an unknown SSIM mode is rejected."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import ssim

        img = ImageGrid.constant(8, 8, 1.0)
        with pytest.raises(ValueError, match="SSIM mode"):
            ssim(img, img, mode="gaussian")


class TestQualityReport:
    """Tests for quality_report and its formatting."""

    def test_identical_format(self):
        """Test identical images print 'PSNR: inf, SSIM: 1.0000'."""
        from mixgeo.grid import ImageGrid
        from mixgeo.metrics import quality_report

        img = ImageGrid.constant(10, 10, 77.0)
        assert quality_report(img, img).format() == "PSNR: inf, SSIM: 1.0000"

    def test_finite_format(self):
        """Test finite values are printed with 2 and 4 decimals."""
        from mixgeo.metrics import QualityReport

        assert QualityReport(psnr_db=26.0213, ssim=0.78784).format() == "PSNR: 26.02, SSIM: 0.7878"
