"""Shared pytest fixtures."""

import numpy as np
import pytest
import structlog


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="Run the long acceptance runs marked 'slow'.",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="slow acceptance run; use --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def reset_logging():
    """Keep structlog configuration from leaking between tests."""
    yield
    structlog.reset_defaults()


@pytest.fixture(autouse=True)
def reset_config(monkeypatch):
    """Start every test from a fresh Config singleton and default environment."""
    import mixgeo.config as config_module

    for key in ("MIXGEO_OUTPUT_DIR", "MIXGEO_LOG_LEVEL", "MIXGEO_JSON_LOGGING", "MIXGEO_JOBS"):
        monkeypatch.delenv(key, raising=False)
    config_module._config_instance = None
    yield
    config_module._config_instance = None


@pytest.fixture
def tmp_output_dir(tmp_path):
    """Create a temporary output directory."""
    output_dir = tmp_path / "output"
    output_dir.mkdir()
    return output_dir


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(20240611)


@pytest.fixture
def smooth_image():
    """Factory for a smooth, strictly positive, non-separable test field.

    Built from half-sample cosines, which are even about the image border, so
    the field is consistent with replicated (Neumann) ghost cells.
    """
    from mixgeo.grid import ImageGrid

    def build(size: int = 32, mean: float = 100.0, amplitude: float = 10.0) -> ImageGrid:
        s = np.pi * (np.arange(size) + 0.5) / size
        sy, sx = np.meshgrid(s, s, indexing="ij")
        field = (
            np.cos(sx) * np.cos(2.0 * sy)
            + 0.6 * np.cos(2.0 * sx)
            + 0.5 * np.cos(sy)
        )
        return ImageGrid(mean + amplitude * field)

    return build


@pytest.fixture
def constant_image():
    """Factory for a constant image."""
    from mixgeo.grid import ImageGrid

    def build(value: float = 100.0, size: int = 16) -> ImageGrid:
        return ImageGrid.constant(size, size, value)

    return build


@pytest.fixture
def noisy_halo():
    """64x64 halo phantom and a seeded L=10 noisy copy."""
    from mixgeo.noise import GammaNoiseSpec, apply_multiplicative_noise
    from mixgeo.phantoms import halo

    clean = halo(64)
    noisy = apply_multiplicative_noise(clean, GammaNoiseSpec(looks=10, seed=7))
    return clean, noisy


@pytest.fixture
def write_image(tmp_path):
    """Save an image (PGM plus sidecar) under tmp_path and return its path."""
    from mixgeo.experiment import save_image

    def write(img, name: str = "image.pgm", sidecar: bool = True):
        path = tmp_path / name
        save_image(img, path, sidecar=sidecar)
        return path

    return write
