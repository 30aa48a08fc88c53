import numpy as np
import pytest

from fracplap.energy import GridFunction
from fracplap.errors import ParameterError
from fracplap.lattice import LatticeDomain, make_steiner_domain
from fracplap.payne import (
    geometry_report,
    reflection_chain,
    run_payne_experiment,
    slide_distance,
    support_distance,
    support_sets,
)


def interval(n, half=1.0):
    return make_steiner_domain(lambda t: half, (half,), 2.0 * half / n)


class TestSupportSets:
    def test_positive_function_has_no_minus_support(self, interval32):
        u = GridFunction(interval32.window, np.ones(32))
        out = support_sets(u)
        assert out["supp_minus"] == set() and out["nodal_cells"] == set()
        assert len(out["supp_plus"]) == 32

    def test_odd_function_nodal_cells_at_origin(self, interval32):
        x = interval32.window.axis_coords(0)
        u = GridFunction(interval32.window, np.sin(np.pi * x / 2.0))
        out = support_sets(u)
        assert out["nodal_cells"] == {(-1,)}  # the cell between nodes -1 and 0

    def test_threshold_monotonicity(self, interval32):
        rng = np.random.default_rng(0)
        u = GridFunction(interval32.window, rng.standard_normal(32))
        big = support_sets(u, tau_rel=1e-2)
        small = support_sets(u, tau_rel=5e-3)
        assert big["supp_plus"] <= small["supp_plus"]
        assert big["supp_minus"] <= small["supp_minus"]

    def test_zero_function_rejected(self, interval32):
        with pytest.raises(ParameterError):
            support_sets(GridFunction(interval32.window, np.zeros(32)))


class TestDistances:
    def test_adjacent_support_within_h(self, interval32):
        left_mask_node = min(interval32.mask_index_set())
        assert support_distance({left_mask_node}, interval32) == pytest.approx(interval32.h)

    def test_center_node_distance_is_half_width(self, interval32):
        # the interval (-1, 1): a central node sits about 1.0 from the boundary
        d = support_distance({(0,)}, interval32)
        assert d == pytest.approx(1.0, abs=interval32.h)

    def test_empty_support_rejected(self, interval32):
        with pytest.raises(ParameterError):
            support_distance(set(), interval32)

    def test_slide_distance_interval(self):
        dom = interval(32)
        sup = {(k,) for k in dom.window.axis_indices(0) if -0.5 <= (k + 0.5) * dom.h <= 0.0}
        assert slide_distance(sup, dom) == pytest.approx(1.0, abs=dom.h)

    def test_slide_zero_when_touching_right(self, interval32):
        right = max(interval32.mask_index_set())
        assert slide_distance({right}, interval32) == 0.0

    def test_translated_support_touches_mask_edge(self, interval32):
        inside = interval32.mask_index_set()
        sup = {min(inside)}
        d = slide_distance(sup, interval32)
        steps = int(round(d / interval32.h))
        shifted = {(n[0] + steps,) + n[1:] for n in sup}
        assert shifted <= inside
        beyond = {(n[0] + steps + 1,) + n[1:] for n in sup}
        assert not beyond <= inside


class TestReflectionChain:
    def test_first_coordinates(self):
        ch = reflection_chain((0.1,), 0.5, max_iter=3)
        assert [round(c[0], 10) for c in ch] == [0.9, -0.9, 1.9]

    def test_double_step_translation(self):
        ch = reflection_chain((0.3, 0.2), 0.25, max_iter=10)
        firsts = [abs(c[0]) for c in ch[1::2]]
        diffs = np.diff(firsts)
        assert np.allclose(diffs, 0.5)  # |x1| grows by 2a every two reflections
        assert all(c[1] == 0.2 for c in ch)

    def test_exits_window_quickly(self):
        a, half = 0.5, 3.0
        ch = reflection_chain((0.1,), a, max_iter=1000, window_halfwidth=half)
        assert abs(ch[-1][0]) > half
        assert len(ch) <= 2 * (half / (2 * a) + 2)

    def test_nonpositive_offset_rejected(self):
        with pytest.raises(ParameterError):
            reflection_chain((0.1,), 0.0)


class TestExperiment:
    def test_1d_eigen_supports_touch(self, interval32):
        rep = run_payne_experiment(interval32, 0.5, 2.0, mode="eigen", seed=0, sweep_offsets=3)
        assert rep.supports_touch
        assert rep.support_distance_plus <= 2 * interval32.h
        assert rep.support_distance_minus <= 2 * interval32.h
        prop1 = rep.lid_touch["plus"]["L"] and rep.lid_touch["minus"]["R"]
        prop2 = rep.lid_touch["plus"]["R"] and rep.lid_touch["minus"]["L"]
        assert prop1 or prop2
        for entry in rep.polarization_sweep:
            assert entry["nonnegative"]

    def test_1d_lens_supports_touch(self, interval32):
        rep = run_payne_experiment(
            interval32, 0.5, 2.0, mode="lens", q=3.0, seed=0, sweep_offsets=2
        )
        assert rep.supports_touch
        assert rep.level > 0

    def test_interior_bump_control_detected(self, interval32):
        x = interval32.window.axis_coords(0)
        vals = np.exp(-((x + 0.15) ** 2) * 400.0) - np.exp(-((x - 0.15) ** 2) * 400.0)
        vals[np.abs(x) > 0.35] = 0.0
        u = GridFunction(interval32.window, vals)
        rep = geometry_report(u, interval32, mode="control", level=0.0)
        assert rep.support_distance_plus >= 10 * interval32.h
        assert rep.support_distance_minus >= 10 * interval32.h
        assert not rep.supports_touch

    def test_2d_disk_eigen(self, disk_domain):
        rep = run_payne_experiment(disk_domain, 0.5, 2.0, mode="eigen", seed=0, sweep_offsets=2)
        assert rep.supports_touch
        assert rep.nodal_cell_distance is not None
        assert rep.nodal_cell_distance <= 2 * disk_domain.h

    def test_non_steiner_rejected(self, interval32):
        mask = interval32.mask.copy()
        mask[3] = False
        with pytest.raises(ParameterError):
            run_payne_experiment(LatticeDomain(interval32.window, mask), 0.5, 2.0)

    def test_report_dict_shape(self, interval32):
        rep = run_payne_experiment(interval32, 0.5, 2.0, mode="eigen", seed=0, sweep_offsets=1)
        doc = rep.to_dict()
        for key in (
            "mode",
            "support_distance_plus",
            "support_distance_minus",
            "nodal_cell_distance",
            "lid_touch",
            "polarization_sweep",
            "supports_touch",
        ):
            assert key in doc
