import numpy as np
import pytest

from recipgeo.tolerances import deviation


def assert_close(value, reference, tol=1e-12, label=""):
    """Relative above unit scale, absolute below."""
    dev = deviation(value, reference)
    assert dev <= tol, f"{label or 'value'}: {value!r} vs {reference!r} (dev {dev:.3e} > {tol:.1e})"


def assert_matrix_close(value, reference, tol=1e-12, label=""):
    value = np.asarray(value, dtype=float)
    reference = np.asarray(reference, dtype=float)
    scale = max(1.0, float(np.max(np.abs(reference))))
    dev = float(np.max(np.abs(value - reference))) / scale
    assert dev <= tol, f"{label or 'matrix'}: max dev {dev:.3e} > {tol:.1e}"


@pytest.fixture
def rng():
    return np.random.default_rng(42)
