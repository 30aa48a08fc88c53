import numpy as np
import pytest
from scipy.integrate import quad

from fracplap.errors import ParameterError
from fracplap.kernel import KernelWeights, _corner_integral, build_kernel, check_kernel_condition
from fracplap.lattice import ReflectionParam, Window, enlarged_window


class TestPairWeights:
    def test_adjacent_pair_formula(self):
        # 1D, s=0.5, p=2: w = h^2 * h^{-(1+ps)} ... = h^2 h^{-2} = 1 for any h
        for h in (0.1, 0.25, 1.0):
            k = build_kernel(Window(h, (-1,), (2,)), 0.5, 2.0)
            assert k.W[0, 1] == pytest.approx(1.0, rel=1e-14)

    def test_symmetry_and_zero_diagonal(self):
        k = build_kernel(Window(0.25, (-4, -3), (8, 6)), 0.4, 2.5)
        assert np.array_equal(k.W, k.W.T)
        assert np.all(np.diag(k.W) == 0.0)
        off = k.W[~np.eye(k.size, dtype=bool)]
        assert np.all(off > 0.0)

    def test_radial_monotonicity(self):
        win = Window(0.25, (-4, -4), (8, 8))
        k = build_kernel(win, 0.5, 2.0)
        grids = [g.ravel() for g in win.index_grids()]
        d2 = sum((g[:, None] - g[None, :]) ** 2 for g in grids)
        i, j = np.triu_indices(k.size, 1)
        order = np.argsort(d2[i, j])
        dist_sorted = d2[i, j][order]
        w_sorted = k.W[i, j][order]
        strictly_closer = dist_sorted[:-1] < dist_sorted[1:]
        assert np.all(w_sorted[:-1][strictly_closer] > w_sorted[1:][strictly_closer])
        equal_dist = dist_sorted[:-1] == dist_sorted[1:]
        assert np.all(w_sorted[:-1][equal_dist] == w_sorted[1:][equal_dist])

    def test_parameter_validation(self):
        win = Window(0.25, (-2,), (4,))
        with pytest.raises(ParameterError):
            build_kernel(win, 1.0, 2.0)
        with pytest.raises(ParameterError):
            build_kernel(win, 0.0, 2.0)
        with pytest.raises(ParameterError):
            build_kernel(win, 0.5, 1.0)


class TestExteriorTails:
    def test_1d_closed_form_matches_quadrature(self):
        win = Window(0.125, (-8,), (16,))
        for s, p in ((0.25, 2.0), (0.6, 2.5), (0.75, 1.5)):
            k = build_kernel(win, s, p)
            ps = p * s
            x = win.axis_coords(0)
            (A, B) = win.region_bounds()[0]
            for i in (0, 5, 15):
                ref = (
                    quad(lambda y: (y - x[i]) ** (-(1 + ps)), B, np.inf)[0]
                    + quad(lambda y: (x[i] - y) ** (-(1 + ps)), -np.inf, A)[0]
                )
                assert k.kappa[i] == pytest.approx(win.h * ref, rel=1e-12)

    def test_1d_example_formula(self):
        # kappa_i = h[(R-x_i)^{-ps} + (R+x_i)^{-ps}]/(ps) on a symmetric window
        win = Window(0.25, (-4,), (8,))
        s, p = 0.5, 2.0
        k = build_kernel(win, s, p)
        R = 1.0
        x = win.axis_coords(0)
        expect = win.h * ((R - x) ** (-1.0) + (R + x) ** (-1.0)) / 1.0
        assert np.allclose(k.kappa, expect, rtol=1e-14)

    def test_corner_integral_against_quadrature(self):
        for ps in (0.4, 1.0, 2.2):
            for dx, dy in ((0.3, 0.8), (1.0, 1.0), (2.5, 0.1)):
                mine = float(_corner_integral(np.array(dx), np.array(dy), ps))
                f = lambda t: max(dx / np.cos(t), dy / np.sin(t)) ** (-ps) / ps
                ref = quad(
                    f, 0.0, np.pi / 2, points=[np.arctan2(dy, dx)],
                    limit=200, epsabs=1e-13, epsrel=1e-13,
                )[0]
                assert mine == pytest.approx(ref, rel=1e-11)

    def test_2d_tail_positive_and_boundary_monotone(self):
        win = Window(0.25, (-4, -4), (8, 8))
        k = build_kernel(win, 0.5, 2.0)
        kap = k.kappa.reshape(8, 8)
        assert np.all(kap > 0.0)
        # moving a node toward the window edge increases its tail weight
        assert np.all(np.diff(kap[4:, 4]) > 0.0)
        assert np.all(np.diff(kap[4, 4:]) > 0.0)
        assert k.tau_kappa > 0.0

    def test_tails_mirror_bit_exactly(self):
        win = Window(0.25, (-4, -3), (10, 6))
        k = build_kernel(win, 0.6, 1.7)
        refl = ReflectionParam(win.offsets[0] * 2 + win.shape[0] - 1 + 1)
        # reflection closing this window: lo+hi = m-1 => m = 2*lo + n
        m = 2 * win.offsets[0] + win.shape[0]
        assert win.is_closed_under(ReflectionParam(m))
        kap = k.kappa.reshape(win.shape)
        assert np.array_equal(kap, np.flip(kap, axis=0))


class TestKernelCondition:
    def test_built_kernels_satisfy_condition(self):
        win = Window(0.25, (-6,), (12,))
        for m in (0, 1, 3, 12):
            big = enlarged_window(win, ReflectionParam(m))
            k = build_kernel(big, 0.5, 2.0)
            assert check_kernel_condition(k, ReflectionParam(m))

    def test_built_kernels_satisfy_condition_2d(self):
        win = Window(0.25, (-4, -4), (8, 8))
        for m in (0, 2):
            big = enlarged_window(win, ReflectionParam(m))
            k = build_kernel(big, 0.4, 3.0)
            assert check_kernel_condition(k, ReflectionParam(m))

    def test_constant_kernel_fails_strictness(self):
        win = Window(0.25, (-4,), (8,))
        k = build_kernel(win, 0.5, 2.0)
        flat = KernelWeights(
            0.5, 2.0, win, np.ones_like(k.W) - np.eye(k.size), k.kappa.copy(), 0.0
        )
        assert not check_kernel_condition(flat, ReflectionParam(0))

    def test_asymmetric_kernel_fails(self):
        win = Window(0.25, (-4,), (8,))
        k = build_kernel(win, 0.5, 2.0)
        W = k.W.copy()
        W[0, 1] *= 2.0
        W[1, 0] *= 2.0
        bad = KernelWeights(0.5, 2.0, win, W, k.kappa.copy(), 0.0)
        assert not check_kernel_condition(bad, ReflectionParam(0))


class TestCache:
    def test_round_trip(self, tmp_path):
        win = Window(0.25, (-4,), (8,))
        k1 = build_kernel(win, 0.5, 2.0, cache_dir=tmp_path)
        assert len(list(tmp_path.glob("kernel-*.npz"))) == 1
        k2 = build_kernel(win, 0.5, 2.0, cache_dir=tmp_path)
        assert np.array_equal(k1.W, k2.W)
        assert np.array_equal(k1.kappa, k2.kappa)
        build_kernel(win, 0.25, 2.0, cache_dir=tmp_path)
        assert len(list(tmp_path.glob("kernel-*.npz"))) == 2
