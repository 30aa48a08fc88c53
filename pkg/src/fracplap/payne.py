"""Nodal-set geometry of computed solutions at lattice resolution.

The continuum statement under test says the supports of the positive and the
negative part of a second eigenfunction or least energy nodal solution touch
the boundary of a Steiner-symmetric domain.  On a lattice, "touching" is
resolved to a fixed number of cells (2h by default), and the experiment
reports, for a converged solution: the distances from both supports and from
the nodal cells to the discrete boundary, which of the boundary lids L/R/C
each support meets, the sliding distance of each support along the first
axis, and a polarization-deficit sweep over admissible reflection offsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import GridFunction, Nonlinearity
from .errors import ParameterError, WindowError
from .kernel import build_kernel
from .lattice import (
    LatticeDomain,
    ReflectionParam,
    boundary_lids,
    check_steiner,
    index_distance,
)
from .polarization import equality_case, polarization_pairing_deficit

__all__ = [
    "support_sets",
    "support_distance",
    "slide_distance",
    "reflection_chain",
    "PayneReport",
    "run_payne_experiment",
]


def support_sets(u: GridFunction, tau_rel: float = 1e-8) -> dict:
    """Thresholded supports and nodal cells of a grid function.

    supp_plus / supp_minus hold absolute node indices with u > tau resp.
    u < -tau, tau = tau_rel * max|u|; nodal_cells holds the lower-left corner
    index of every lattice cell whose corners change sign or are uniformly
    below tau in magnitude.
    """
    vals = u.values
    amax = float(np.abs(vals).max())
    if amax == 0.0:
        raise ParameterError("support sets of the zero function are undefined")
    tau = tau_rel * amax
    grids = u.window.index_grids()
    pos = vals > tau
    neg = vals < -tau
    supp_plus = set(zip(*(g[pos].tolist() for g in grids))) if pos.any() else set()
    supp_minus = set(zip(*(g[neg].tolist() for g in grids))) if neg.any() else set()

    nodal = set()
    if u.window.dim == 1:
        corners = [vals[:-1], vals[1:]]
        base = grids[0][:-1]
        lo = np.minimum.reduce(corners)
        hi = np.maximum.reduce(corners)
        absmax = np.maximum(np.abs(corners[0]), np.abs(corners[1]))
        cells = ((lo < -tau) & (hi > tau)) | (absmax <= tau)
        nodal = {(int(k),) for k in base[cells]}
    else:
        c00 = vals[:-1, :-1]
        c10 = vals[1:, :-1]
        c01 = vals[:-1, 1:]
        c11 = vals[1:, 1:]
        lo = np.minimum.reduce([c00, c10, c01, c11])
        hi = np.maximum.reduce([c00, c10, c01, c11])
        absmax = np.maximum.reduce([np.abs(c) for c in (c00, c10, c01, c11)])
        cells = ((lo < -tau) & (hi > tau)) | (absmax <= tau)
        gx, gy = grids
        base_x = gx[:-1, :-1][cells]
        base_y = gy[:-1, :-1][cells]
        nodal = set(zip(base_x.tolist(), base_y.tolist()))
    return {"supp_plus": supp_plus, "supp_minus": supp_minus, "nodal_cells": nodal}


def support_distance(support: set, domain: LatticeDomain) -> float:
    """Minimal Euclidean distance (length units) from support nodes to the
    discrete boundary of the domain mask."""
    if not support:
        raise ParameterError("support is empty")
    boundary = domain.boundary_index_set()
    return index_distance(support, boundary, domain.h)


def slide_distance(support: set, domain: LatticeDomain) -> float:
    """Largest t = j*h >= 0 such that the support translated by t e1 stays
    inside the mask."""
    if not support:
        raise ParameterError("support is empty")
    inside = domain.mask_index_set()
    if not support <= inside:
        raise WindowError("support must be contained in the domain mask")
    j = 0
    while True:
        shifted = {(n[0] + j + 1,) + n[1:] for n in support}
        if not shifted <= inside:
            return j * domain.h
        j += 1


def reflection_chain(x: tuple[float, ...], a: float, max_iter: int = 64, window_halfwidth: float | None = None) -> list:
    """Alternate reflections across {x1 = a} and {x1 = 0} starting from x.

    The first coordinates follow 2a - x1, x1 - 2a, 4a - x1, ...; every double
    step translates |x1| outward by 2a, so the chain leaves any bounded
    window.  Iteration stops when |x1| exceeds window_halfwidth (if given) or
    after max_iter reflections.
    """
    if a <= 0:
        raise ParameterError("reflection chain needs a > 0")
    pts = []
    cur = tuple(float(c) for c in x)
    for i in range(max_iter):
        if i % 2 == 0:
            cur = (2.0 * a - cur[0],) + cur[1:]
        else:
            cur = (-cur[0],) + cur[1:]
        pts.append(cur)
        if window_halfwidth is not None and abs(cur[0]) > window_halfwidth:
            break
    return pts


@dataclass
class PayneReport:
    """Geometry certificates for one computed solution."""

    mode: str
    p: float
    s: float
    q: float | None
    level: float  # eigenvalue (eigen mode) or energy level m (lens mode)
    touch_threshold: float
    support_distance_plus: float
    support_distance_minus: float
    nodal_cell_distance: float | None
    lid_distances: dict
    lid_touch: dict
    slide_plus: float
    slide_minus: float
    polarization_sweep: list = field(default_factory=list)
    solver: dict = field(default_factory=dict)

    @property
    def supports_touch(self) -> bool:
        return (
            self.support_distance_plus <= self.touch_threshold
            and self.support_distance_minus <= self.touch_threshold
        )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "p": self.p,
            "s": self.s,
            "q": self.q,
            "level": self.level,
            "touch_threshold": self.touch_threshold,
            "support_distance_plus": self.support_distance_plus,
            "support_distance_minus": self.support_distance_minus,
            "supports_touch": self.supports_touch,
            "nodal_cell_distance": self.nodal_cell_distance,
            "lid_distances": self.lid_distances,
            "lid_touch": self.lid_touch,
            "slide_plus": self.slide_plus,
            "slide_minus": self.slide_minus,
            "polarization_sweep": self.polarization_sweep,
            "solver": self.solver,
        }


def _lid_geometry(domain: LatticeDomain, supports: dict, threshold: float) -> tuple[dict, dict]:
    lids = boundary_lids(domain)
    dists = {}
    touch = {}
    for sign in ("plus", "minus"):
        supp = supports[f"supp_{sign}"]
        dists[sign] = {}
        touch[sign] = {}
        for part in ("L", "R", "C"):
            nodes = lids[part]
            if nodes and supp:
                d = index_distance(supp, nodes, domain.h)
            else:
                d = float("inf")
            dists[sign][part] = d
            touch[sign][part] = bool(d <= threshold)
    return dists, touch


def geometry_report(
    u: GridFunction,
    domain: LatticeDomain,
    mode: str,
    level: float,
    tau_rel: float = 1e-8,
    touch_factor: float = 2.0,
    q: float | None = None,
    s: float = 0.5,
    p: float = 2.0,
    solver_info: dict | None = None,
) -> PayneReport:
    """Assemble the geometric part of the report for a given function."""
    supports = support_sets(u, tau_rel)
    if not supports["supp_plus"] or not supports["supp_minus"]:
        raise ParameterError("geometry report needs a sign-changing function")
    threshold = touch_factor * domain.h
    d_plus = support_distance(supports["supp_plus"], domain)
    d_minus = support_distance(supports["supp_minus"], domain)
    boundary = domain.boundary_index_set()
    nodal = supports["nodal_cells"]
    nodal_dist = None
    if nodal:
        # cell centers sit half a step off the corner node along each axis
        centers = np.array(sorted(nodal), dtype=float) + 0.5
        bnodes = np.array(sorted(boundary), dtype=float)
        d2 = ((centers[:, None, :] - bnodes[None, :, :]) ** 2).sum(axis=2)
        nodal_dist = float(np.sqrt(d2.min())) * domain.h
    lid_d, lid_t = _lid_geometry(domain, supports, threshold)
    return PayneReport(
        mode=mode,
        p=p,
        s=s,
        q=q,
        level=level,
        touch_threshold=threshold,
        support_distance_plus=d_plus,
        support_distance_minus=d_minus,
        nodal_cell_distance=nodal_dist,
        lid_distances=lid_d,
        lid_touch=lid_t,
        slide_plus=slide_distance(supports["supp_plus"] & domain.mask_index_set(), domain),
        slide_minus=slide_distance(supports["supp_minus"] & domain.mask_index_set(), domain),
        solver=solver_info or {},
    )


def run_payne_experiment(
    domain: LatticeDomain,
    s: float,
    p: float,
    mode: str = "eigen",
    q: float | None = None,
    tol: float = 1e-8,
    multistarts: int = 3,
    seed: int = 0,
    tau_rel: float = 1e-8,
    touch_factor: float = 2.0,
    sweep_offsets: int = 8,
    threads: int = 1,
) -> PayneReport:
    """Compute a solution (second eigenfunction or least energy nodal
    solution) and measure the nodal-set geometry plus the polarization
    deficits over a sweep of reflection offsets a = h/2, h, ..."""
    if not check_steiner(domain):
        raise ParameterError("the experiment requires a Steiner-symmetric domain")
    k = build_kernel(domain.window, s, p)
    if mode == "eigen":
        from .eigensolver import second_eigen_mu2

        rep = second_eigen_mu2(
            domain, k, p, tol=tol, multistarts=multistarts, seed=seed, threads=threads
        )
        u, level = rep.u2, rep.mu2
        solver_info = {"mu2": rep.mu2, "lambda1": rep.lambda1, "residuals": rep.residuals}
    elif mode == "lens":
        from .nehari import lens_minimize

        if q is None:
            q = p + 1.0
        nl = Nonlinearity.power(p, q)
        rep = lens_minimize(
            domain, k, nl, tol=tol, multistarts=multistarts, seed=seed, threads=threads
        )
        u, level = rep.u, rep.m
        solver_info = {
            "m": rep.m,
            "residual_plus": rep.residual_plus,
            "residual_minus": rep.residual_minus,
            "g_identity_gap": rep.g_identity_gap,
        }
    else:
        raise ParameterError(f"unknown experiment mode {mode!r}")

    report = geometry_report(
        u,
        domain,
        mode,
        level,
        tau_rel=tau_rel,
        touch_factor=touch_factor,
        q=q,
        s=s,
        p=p,
        solver_info=solver_info,
    )

    sweep = []
    for m in range(1, sweep_offsets + 1):
        refl = ReflectionParam(m)
        ug = u.embed_closed(refl)
        k_big = build_kernel(ug.window, s, p)
        case, deficit = equality_case(ug, refl, k_big)
        sweep.append(
            {
                "a": refl.value(domain.h),
                "deficit_plus": deficit.deficit_plus,
                "deficit_minus": deficit.deficit_minus,
                "seminorm_deficit": deficit.seminorm_deficit,
                "eps_num": deficit.eps_num,
                "nonnegative": deficit.ok,
                "case": case.value,
            }
        )
    report.polarization_sweep = sweep
    return report
