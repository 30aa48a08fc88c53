import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracplap.energy import GridFunction, Nonlinearity, dpairing, gagliardo_p
from fracplap.errors import WindowError
from fracplap.kernel import KernelWeights, build_kernel
from fracplap.lattice import ReflectionParam, Window, enlarged_window
from fracplap.polarization import (
    EqualityCase,
    equality_case,
    polarization_identities_check,
    polarization_pairing_deficit,
    polarize,
)
from oracles import random_grid_values

WIN = Window(0.25, (-8,), (16,))
X = WIN.axis_coords(0)


def gf(values, window=WIN):
    return GridFunction(window, np.asarray(values, dtype=float))


def embedded(values, m):
    return gf(values).embed_closed(ReflectionParam(m))


class TestPolarize:
    def test_four_node_example(self):
        win = Window(1.0, (-2,), (4,))
        u = GridFunction(win, np.array([0.0, 1.0, 2.0, 0.0]))
        assert np.array_equal(polarize(u, ReflectionParam(0)).values, [0.0, 2.0, 1.0, 0.0])
        assert np.array_equal(
            polarize(u, ReflectionParam(0), "Ptilde").values, [0.0, 1.0, 2.0, 0.0]
        )

    def test_already_polarized_fixed(self):
        u = gf(-X)  # decreasing: larger values on the negative side
        assert np.array_equal(polarize(u, ReflectionParam(0)).values, u.values)

    def test_zero_fixed(self):
        u = gf(np.zeros(16))
        assert np.array_equal(polarize(u, ReflectionParam(0)).values, u.values)

    def test_unclosed_window_rejected(self):
        u = gf(np.ones(16))
        with pytest.raises(WindowError):
            polarize(u, ReflectionParam(3))
        pol = polarize(u.embed_closed(ReflectionParam(3)), ReflectionParam(3))
        assert pol.window.is_closed_under(ReflectionParam(3))


class TestIdentities:
    @given(st.integers(-10, 10), st.integers(0, 2**31 - 1))
    @settings(max_examples=80, deadline=None)
    def test_random_functions_exact(self, m, seed):
        rng = np.random.default_rng(seed)
        u = embedded(random_grid_values(rng, (16,), kind="rough"), m)
        nl = Nonlinearity.power(2.0, 3.5)
        rep = polarization_identities_check(u, ReflectionParam(m), 2.0, nl)
        assert rep.ok
        for key, before in rep.sums_before.items():
            after = rep.sums_after[key]
            assert abs(after - before) <= 1e-12 * max(abs(before), 1.0), key

    def test_constant_function(self):
        u = embedded(np.ones(16), 3)
        rep = polarization_identities_check(u, ReflectionParam(3), 2.0)
        assert rep.ok


class TestPairingDeficit:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    @pytest.mark.parametrize("m", [0, 3])
    def test_nonnegative_and_coupled(self, p, m):
        refl = ReflectionParam(m)
        big = enlarged_window(WIN, refl)
        k = build_kernel(big, 0.5, p)
        rng = np.random.default_rng(hash((p, m)) % 2**32)
        for _ in range(25):
            u = embedded(random_grid_values(rng, (16,), kind="rough"), m)
            d = polarization_pairing_deficit(u, refl, k)
            assert d.ok
            combo = (d.deficit_plus + d.deficit_minus) / p
            assert d.seminorm_deficit == pytest.approx(
                combo, rel=1e-10, abs=1e-10 * max(abs(combo), 1.0)
            )

    def test_2d_deficits(self):
        win = Window(0.25, (-4, -4), (8, 8))
        refl = ReflectionParam(2)
        big = enlarged_window(win, refl)
        k = build_kernel(big, 0.5, 2.0)
        rng = np.random.default_rng(0)
        for _ in range(10):
            u = GridFunction(win, rng.standard_normal((8, 8))).embed_closed(refl)
            d = polarization_pairing_deficit(u, refl, k)
            assert d.ok

    def test_kernel_condition_enforced(self):
        refl = ReflectionParam(0)
        k = build_kernel(WIN, 0.5, 2.0)
        flat = KernelWeights(0.5, 2.0, WIN, np.ones_like(k.W) - np.eye(k.size), k.kappa.copy(), 0.0)
        u = gf(np.sin(X))
        with pytest.raises(WindowError):
            polarization_pairing_deficit(u, refl, flat)

    def test_polarized_seminorm_never_larger(self):
        # direct statement of the seminorm inequality
        k = build_kernel(WIN, 0.6, 2.0)
        rng = np.random.default_rng(1)
        refl = ReflectionParam(0)
        for _ in range(20):
            u = gf(random_grid_values(rng, (16,), kind="rough"))
            pu = polarize(u, refl)
            assert gagliardo_p(pu, k) <= gagliardo_p(u, k) + 1e-10


def _fig1_style(window):
    """Positive part symmetric (two mirrored bumps), negative part split into
    two non-mirrored dips: equality holds on the plus side only."""
    x = window.axis_coords(0)
    up = np.maximum(np.cos(2 * np.pi * x / 1.6), 0.0) * (np.abs(x) < 1.9)
    um = -0.9 * np.exp(-((x - 1.2) ** 2) * 30) - 0.3 * np.exp(-((x + 0.7) ** 2) * 30)
    return np.where(up > 0, up, np.where(up == 0, um, 0.0))


class TestEqualityCases:
    K = build_kernel(WIN, 0.5, 2.0)

    def classify(self, values, m=0):
        refl = ReflectionParam(m)
        u = embedded(values, m)
        big = enlarged_window(WIN, refl)
        k = self.K if big == WIN else build_kernel(big, 0.5, 2.0)
        return equality_case(u, refl, k)

    def test_even_function_is_case_i(self):
        case, d = self.classify(np.cos(X))
        assert case == EqualityCase.CASE_I
        assert d.deficit_plus == 0.0 and d.deficit_minus == 0.0

    def test_polarized_profile_case_i(self):
        case, _ = self.classify(-X + 0.2 * np.cos(X))
        assert case == EqualityCase.CASE_I

    def test_reflected_profile_case_ii(self):
        case, d = self.classify(X + 0.2 * np.cos(X))
        assert case == EqualityCase.CASE_II
        assert abs(d.deficit_plus) <= d.eps_num and abs(d.deficit_minus) <= d.eps_num

    def test_fig1_style_case_iii_plus(self):
        vals = _fig1_style(WIN)
        case, d = self.classify(vals)
        assert case == EqualityCase.CASE_III_PLUS
        assert d.deficit_plus == pytest.approx(0.0, abs=d.eps_num)
        assert d.deficit_minus > 1e-3

    def test_mirrored_fig1_is_case_iii_minus(self):
        case, d = self.classify(-_fig1_style(WIN))
        assert case == EqualityCase.CASE_III_MINUS
        assert d.deficit_minus == pytest.approx(0.0, abs=d.eps_num)
        assert d.deficit_plus > 1e-3

    def test_generic_function_strict(self):
        rng = np.random.default_rng(7)
        strict_seen = 0
        for _ in range(10):
            case, d = self.classify(random_grid_values(rng, (16,), kind="rough"))
            if case == EqualityCase.STRICT:
                strict_seen += 1
                assert max(d.deficit_plus, d.deficit_minus) > d.eps_num
        assert strict_seen >= 8

    def test_trichotomy_consistency(self):
        # deficit_plus ~ 0 iff the classification is one of the equality cases
        rng = np.random.default_rng(8)
        profiles = [np.cos(X), -X, X, _fig1_style(WIN)] + [
            random_grid_values(rng, (16,), kind="rough") for _ in range(8)
        ]
        for vals in profiles:
            case, d = self.classify(vals)
            eps_eq = 1e-10 * 2.0 * gagliardo_p(gf(vals), self.K)
            plus_zero = d.deficit_plus <= eps_eq
            in_plus_classes = case in (
                EqualityCase.CASE_I,
                EqualityCase.CASE_II,
                EqualityCase.CASE_III_PLUS,
            )
            assert plus_zero == in_plus_classes, (case, d.deficit_plus)
