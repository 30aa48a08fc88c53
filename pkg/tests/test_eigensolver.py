import numpy as np
import pytest

from fracplap.eigensolver import (
    first_eigenpair,
    rayleigh_curve,
    second_eigen_mu2,
    verify_second_eigen,
)
from fracplap.energy import GridFunction
from fracplap.errors import ParameterError
from fracplap.kernel import build_kernel
from fracplap.lattice import LatticeDomain, make_steiner_domain
from oracles import dense_p2_operator


def interval(n, half=1.0):
    return make_steiner_domain(lambda t: half, (half,), 2.0 * half / n)


class TestFirstEigenpair:
    def test_p2_matches_dense_oracle(self, interval32, kernel32_p2):
        lam1, u1, info = first_eigenpair(interval32, kernel32_p2, 2.0, seed=0)
        evals, evecs, free = dense_p2_operator(interval32, kernel32_p2)
        assert lam1 == pytest.approx(evals[0], rel=1e-10)
        vec = np.zeros(interval32.window.size)
        vec[free] = evecs[:, 0]
        vec /= np.abs(vec).max()
        mine = u1.flat() / np.abs(u1.flat()).max()
        assert np.abs(np.abs(mine) - np.abs(vec)).max() < 1e-7

    def test_one_signed(self, interval32, kernel32_p2):
        _, u1, _ = first_eigenpair(interval32, kernel32_p2, 2.0, seed=3)
        assert np.all(u1.values >= -1e-14)

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_general_p_residual(self, interval32, p):
        k = build_kernel(interval32.window, 0.5, p)
        lam1, u1, info = first_eigenpair(interval32, k, p, seed=0)
        assert lam1 > 0
        assert info["residual_rel"] < 1e-6

    def test_grid_refinement_differences_shrink(self):
        # successive refinements form a Cauchy-like sequence: the jump from
        # h to h/2 dominates the jump from h/2 to h/4
        lams = []
        for n in (16, 32, 64):
            dom = interval(n)
            k = build_kernel(dom.window, 0.5, 2.0)
            lam, _, _ = first_eigenpair(dom, k, 2.0, seed=0)
            lams.append(lam)
        assert abs(lams[2] - lams[1]) < abs(lams[1] - lams[0])

    def test_p_mismatch_rejected(self, interval32, kernel32_p2):
        with pytest.raises(ParameterError):
            first_eigenpair(interval32, kernel32_p2, 3.0)


class TestSecondEigen:
    def test_p2_matches_dense_oracle(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        evals, evecs, free = dense_p2_operator(interval32, kernel32_p2)
        assert rep.mu2 == pytest.approx(evals[1], rel=1e-8)
        assert rep.lambda1 == pytest.approx(evals[0], rel=1e-10)
        vec = np.zeros(interval32.window.size)
        vec[free] = evecs[:, 1]
        mine = rep.u2.flat()
        vec = vec / np.abs(vec).max()
        mine = mine / np.abs(mine).max()
        err = min(np.abs(mine - vec).max(), np.abs(mine + vec).max())
        assert err < 1e-6

    def test_antisymmetric_on_symmetric_interval(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        v = rep.u2.values
        assert np.abs(v + v[::-1]).max() <= 1e-10 * np.abs(v).max()

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_identities_and_ordering(self, interval32, p):
        k = build_kernel(interval32.window, 0.5, p)
        rep = second_eigen_mu2(interval32, k, p, seed=0)
        assert rep.mu2 >= rep.lambda1
        assert rep.residuals["identity_plus_rel"] <= 1e-10
        assert rep.residuals["identity_minus_rel"] <= 1e-10
        assert abs(rep.quotient_plus - rep.quotient_minus) <= 1e-10 * rep.mu2

    def test_multistarts_recorded(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0, multistarts=4)
        assert len(rep.starts) == 4
        values = [s["mu2"] for s in rep.starts]
        assert min(values) == rep.mu2

    def test_degenerate_domain_rejected(self):
        dom = make_steiner_domain(lambda t: 1.0, (1.0,), 1.0)  # 2 nodes
        mask = dom.mask.copy()
        mask[1] = False
        k = build_kernel(dom.window, 0.5, 2.0)
        with pytest.raises(ParameterError):
            second_eigen_mu2(LatticeDomain(dom.window, mask), k, 2.0)


class TestVerifySecondEigen:
    def test_solver_output_passes(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        out = verify_second_eigen(rep.u2, rep.mu2, kernel32_p2, reference=rep)
        assert out["identities_ok"]
        assert out["second_eigenfunction_equivalent"]

    def test_sign_flip_invariance(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        flipped = GridFunction(rep.u2.window, -rep.u2.values)
        out = verify_second_eigen(flipped, rep.mu2, kernel32_p2, reference=rep)
        assert out["identities_ok"] and out["second_eigenfunction_equivalent"]

    def test_scale_invariance_of_identities(self, interval32, kernel32_p2):
        # the defining quotients are 0-homogeneous
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        scaled = rep.u2.scaled(37.5)
        out = verify_second_eigen(scaled, rep.mu2, kernel32_p2)
        assert out["identities_ok"]

    def test_one_signed_rejected(self, interval32, kernel32_p2):
        lam1, u1, _ = first_eigenpair(interval32, kernel32_p2, 2.0, seed=0)
        with pytest.raises(ParameterError):
            verify_second_eigen(u1, lam1, kernel32_p2)

    def test_wrong_eigenvalue_fails_identities(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        out = verify_second_eigen(rep.u2, 0.5 * rep.mu2, kernel32_p2)
        assert not out["identities_ok"]


class TestRayleighCurve:
    def test_max_on_diagonal_and_even(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        curve = rayleigh_curve(rep.u2, kernel32_p2, samples=360)
        vals = curve[:, 2]
        imax = int(np.argmax(vals))
        assert imax in (45, 225)  # alpha = beta on a 360-point circle
        assert vals[imax] == pytest.approx(rep.mu2, rel=1e-10)
        assert np.allclose(vals, np.roll(vals, 180), rtol=1e-10)

    def test_axis_value_dominates_lambda1(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        curve = rayleigh_curve(rep.u2, kernel32_p2, samples=360)
        on_axis = curve[0, 2]  # (alpha, beta) = (1, 0)
        assert on_axis >= rep.lambda1 - 1e-10

    def test_scale_invariance(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        c1 = rayleigh_curve(rep.u2, kernel32_p2, samples=90)
        c2 = rayleigh_curve(rep.u2.scaled(-4.0), kernel32_p2, samples=90)
        assert np.allclose(c1[:, 2], c2[:, 2], rtol=1e-12)

    def test_needs_enough_samples(self, interval32, kernel32_p2):
        rep = second_eigen_mu2(interval32, kernel32_p2, 2.0, seed=0)
        with pytest.raises(ParameterError):
            rayleigh_curve(rep.u2, kernel32_p2, samples=2)
