"""Version information.

The package version comes from installed metadata, with pyproject.toml as the
fallback for an uninstalled checkout. Numerical results depend on the numpy and
scipy builds too, so those versions are reported alongside it.
"""

import re
from functools import lru_cache
from importlib import metadata
from pathlib import Path

_NUMERICAL_STACK = ("numpy", "scipy")


def _get_version() -> str:
    try:
        return metadata.version("mixgeo")
    except metadata.PackageNotFoundError:
        pass

    try:
        pyproject = Path(__file__).resolve().parents[2] / "pyproject.toml"
        match = re.search(r'^version\s*=\s*"([^"]+)"', pyproject.read_text(), re.MULTILINE)
        if match:
            return match.group(1)
    except OSError:
        pass

    return "0.0.0"


__version__ = _get_version()


@lru_cache(maxsize=1)
def numerical_stack() -> dict[str, str]:
    """Installed versions of the libraries the solvers compute with."""
    versions = {}
    for package in _NUMERICAL_STACK:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def get_version_string() -> str:
    """Version plus numerical stack, e.g. ``'0.1.0 (numpy 2.1.0, scipy 1.14.1)'``."""
    stack = ", ".join(f"{name} {version}" for name, version in numerical_stack().items())
    return f"{__version__} ({stack})"
