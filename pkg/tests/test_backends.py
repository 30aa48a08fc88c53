"""Agreement between the compiled pair-sum kernels and the NumPy fallback."""

import numpy as np
import pytest

from fracplap import _pairsum
from fracplap._pairsum import py_backend

try:
    from fracplap._pairsum import _c_backend
except ImportError:
    _c_backend = None

needs_compiled = pytest.mark.skipif(_c_backend is None, reason="compiled backend not built")


def _random_system(n, seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n)
    xi = rng.standard_normal(n)
    W = np.abs(rng.standard_normal((n, n)))
    W = np.ascontiguousarray((W + W.T) / 2.0)
    np.fill_diagonal(W, 0.0)
    kappa = np.abs(rng.standard_normal(n))
    # coincidences and exact zeros must behave identically in both backends
    u[1] = u[n - 1]
    u[2] = 0.0
    return u, xi, W, kappa


def test_backend_selection_reports_a_name():
    assert _pairsum.BACKEND in ("compiled", "python")


@needs_compiled
@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 3.0])
@pytest.mark.parametrize("n", [7, 40])
def test_scalar_kernels_agree(p, n):
    u, xi, W, kappa = _random_system(n, seed=n)
    a = py_backend.seminorm_pp(u, W, kappa, p)
    b = _c_backend.seminorm_pp(u, W, kappa, p)
    assert b == pytest.approx(a, rel=1e-13)
    a = py_backend.pairing_pp(u, xi, W, kappa, p)
    b = _c_backend.pairing_pp(u, xi, W, kappa, p)
    assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


@needs_compiled
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_gradient_kernels_agree(p):
    u, _, W, kappa = _random_system(23, seed=23)
    a = py_backend.seminorm_grad(u, W, kappa, p)
    b = _c_backend.seminorm_grad(u, W, kappa, p)
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-13)
    a = py_backend.halfpair_pos_grad(u, W, kappa, p)
    b = _c_backend.halfpair_pos_grad(u, W, kappa, p)
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-13)


def test_python_fallback_importable_and_selfconsistent():
    u, xi, W, kappa = _random_system(12, seed=1)
    for p in (1.5, 2.0, 3.0):
        S = py_backend.seminorm_pp(u, W, kappa, p)
        assert py_backend.pairing_pp(u, u, W, kappa, p) == pytest.approx(p * S, rel=1e-12)
        g = py_backend.seminorm_grad(u, W, kappa, p)
        assert float(g @ xi) == pytest.approx(
            py_backend.pairing_pp(u, xi, W, kappa, p), rel=1e-11, abs=1e-11
        )
