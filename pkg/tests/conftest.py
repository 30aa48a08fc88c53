import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fracplap.kernel import build_kernel
from fracplap.lattice import make_steiner_domain


@pytest.fixture(scope="session")
def interval32():
    """1D interval (-1,1) resolved by 32 nodes."""
    return make_steiner_domain(lambda t: 1.0, (1.0,), 2.0 / 32)


@pytest.fixture(scope="session")
def interval64():
    return make_steiner_domain(lambda t: 1.0, (1.0,), 2.0 / 64)


@pytest.fixture(scope="session")
def kernel32_p2(interval32):
    return build_kernel(interval32.window, 0.5, 2.0)


@pytest.fixture(scope="session")
def kernel64_p2(interval64):
    return build_kernel(interval64.window, 0.5, 2.0)


@pytest.fixture(scope="session")
def disk_domain():
    """2D disk of radius 0.75 inside a (-1,1)^2 box, 16 nodes per axis."""
    import numpy as np

    return make_steiner_domain(
        lambda t: float(np.sqrt(max(0.75**2 - t * t, 0.0))), (1.0, 1.0), 2.0 / 16
    )
