"""Least energy nodal solutions via the nodal Nehari set.

For a superhomogeneous nonlinearity, every sign-changing v with nontrivial
parts admits unique positive scalings (t+, t-) such that
u = t+ v+ + t- v- satisfies <DE(u), u+> = <DE(u), u-> = 0 (membership in the
nodal Nehari set M).  ``nehari_scale`` computes the pair by damped Newton on
the 2x2 system with a monotonicity-backed bisection fallback;
``lens_minimize`` minimizes the energy E over M by projected gradient steps
followed by a Newton polish of full criticality.  On M the energy equals
(1/p) h^N sum G(u) with G(z) = f(z) z - p F(z), which the report tracks as
``g_identity_gap``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .energy import (
    GridFunction,
    Nonlinearity,
    de_gradient,
    dpairing,
    energy,
    gagliardo_p,
    phi_p,
)
from .eigensolver import (
    _hess_seminorm_over_p,
    _multistart_profiles,
    _Workspace,
)
from .errors import ConvergenceError, ParameterError
from .kernel import KernelWeights
from .lattice import LatticeDomain

__all__ = [
    "NehariReport",
    "nehari_scale",
    "lens_minimize",
    "lens_verify",
    "positive_ground_state",
]

_TAU_SIGN_REL = 1e-8


@dataclass
class NehariReport:
    """Converged nodal Nehari minimizer and its certificates."""

    u: GridFunction
    m: float
    t_plus: float
    t_minus: float
    residual_plus: float
    residual_minus: float
    g_identity_gap: float
    iterations: int
    multistart_id: int
    p: float
    s: float
    q: float | None

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "t_plus": self.t_plus,
            "t_minus": self.t_minus,
            "residual_plus": self.residual_plus,
            "residual_minus": self.residual_minus,
            "g_identity_gap": self.g_identity_gap,
            "iterations": self.iterations,
            "multistart_id": self.multistart_id,
            "p": self.p,
            "s": self.s,
            "q": self.q,
        }


def _check_superhomogeneous(nl: Nonlinearity):
    if not nl.superhomogeneous:
        raise ParameterError("the nodal Nehari machinery needs a superhomogeneous nonlinearity")


def _membership_residuals(ws: _Workspace, nl: Nonlinearity, w: np.ndarray):
    """Normalized residuals of <DE(w), w+-> = 0."""
    g = ws.grid(w)
    wp, wm = g.pos(), g.neg()
    Ap = dpairing(g, wp, ws.k) / ws.p
    Am = dpairing(g, wm, ws.k) / ws.p
    rp = ws.vol * float(np.sum(nl.f(wp.values) * wp.values))
    rm = ws.vol * float(np.sum(nl.f(wm.values) * wm.values))
    sp = max(abs(Ap), abs(rp), 1e-300)
    sm = max(abs(Am), abs(rm), 1e-300)
    return (Ap - rp) / sp, (Am - rm) / sm


def nehari_scale(
    v: GridFunction,
    nl: Nonlinearity,
    k: KernelWeights,
    tau: float = 1e-12,
    max_iter: int = 60,
) -> tuple[float, float]:
    """Unique positive pair (t+, t-) projecting v+ and v- onto the nodal
    Nehari set; damped Newton from (1,1) with a bisection fallback whose
    brackets are sound by the monotonicity of f(z)/|z|^{p-1}."""
    _check_superhomogeneous(nl)
    p = k.p
    vp = v.pos().values.ravel()
    vm = v.neg().values.ravel()
    if not vp.any() or not vm.any():
        raise ParameterError("nehari_scale requires a sign-changing function")
    ws = _Workspace_from_kernel(v, k)
    vol = ws.vol

    def assemble(tp, tm):
        w = tp * vp + tm * vm
        g = ws.grid(w)
        Ap = dpairing(g, ws.grid(tp * vp), k) / p
        Am = dpairing(g, ws.grid(tm * vm), k) / p
        zp = tp * vp
        zm = tm * vm
        rp = vol * float(np.sum(nl.f(zp) * zp))
        rm = vol * float(np.sum(nl.f(zm) * zm))
        return w, Ap - rp, Am - rm, max(abs(Ap), abs(rp), 1e-300), max(abs(Am), abs(rm), 1e-300)

    # decoupled scalings (exact when the parts do not interact) seed Newton
    def _decoupled(part):
        g = ws.grid(part)
        S = gagliardo_p(g, k)
        if nl.kind == "power":
            denom = vol * float(np.sum(np.abs(part) ** nl.q))
            return (S / denom) ** (1.0 / (nl.q - p))
        def res1(t):
            z = t * part
            return t**p * S - vol * float(np.sum(nl.f(z) * z))
        hi = 1.0
        while res1(hi) >= 0.0:
            hi *= 2.0
        lo = hi / 2.0
        while res1(lo) <= 0.0:
            lo *= 0.5
        return brentq(res1, lo, hi, xtol=1e-15, rtol=1e-14)

    tp, tm = _decoupled(vp), _decoupled(vm)
    w, Fp, Fm, sp, sm = assemble(tp, tm)
    res = max(abs(Fp) / sp, abs(Fm) / sm)
    from .energy import half_pairing_neg_grad, half_pairing_pos_grad

    for _ in range(max_iter):
        if res <= tau:
            return tp, tm
        g = ws.grid(w)
        gAp = half_pairing_pos_grad(g, k)
        gAm = half_pairing_neg_grad(g, k)
        zp = tp * vp
        zm = tm * vm
        dRp = vol * float(np.sum((nl.fprime(zp) * zp + nl.f(zp)) * vp))
        dRm = vol * float(np.sum((nl.fprime(zm) * zm + nl.f(zm)) * vm))
        J = np.array(
            [
                [float(gAp @ vp) - dRp, float(gAp @ vm)],
                [float(gAm @ vp), float(gAm @ vm) - dRm],
            ]
        )
        try:
            step = np.linalg.solve(J, -np.array([Fp, Fm]))
        except np.linalg.LinAlgError:
            break
        t_damp = 1.0
        improved = False
        for _ in range(40):
            tp_t = tp + t_damp * step[0]
            tm_t = tm + t_damp * step[1]
            if tp_t > 0 and tm_t > 0:
                w_t, Fp_t, Fm_t, sp_t, sm_t = assemble(tp_t, tm_t)
                res_t = max(abs(Fp_t) / sp_t, abs(Fm_t) / sm_t)
                if res_t < res:
                    tp, tm, w, Fp, Fm, sp, sm, res = tp_t, tm_t, w_t, Fp_t, Fm_t, sp_t, sm_t, res_t
                    improved = True
                    break
            t_damp *= 0.5
        if not improved:
            break
    if res <= tau:
        return tp, tm
    return _nehari_scale_bisect(ws, nl, k, vp, vm, tau)


def _nehari_scale_bisect(ws, nl, k, vp, vm, tau):
    """Nested bisection fallback: the plus equation has a unique root in t+
    for each fixed t-, and the outer minus equation crosses zero in t-."""
    p = k.p
    vol = ws.vol

    def plus_terms(tp, tm):
        g = ws.grid(tp * vp + tm * vm)
        Ap = dpairing(g, ws.grid(tp * vp), k) / p
        zp = tp * vp
        rp = vol * float(np.sum(nl.f(zp) * zp))
        return Ap, rp

    def minus_terms(tp, tm):
        g = ws.grid(tp * vp + tm * vm)
        Am = dpairing(g, ws.grid(tm * vm), k) / p
        zm = tm * vm
        rm = vol * float(np.sum(nl.f(zm) * zm))
        return Am, rm

    def plus_res(tp, tm):
        Ap, rp = plus_terms(tp, tm)
        return Ap - rp

    def minus_res(tp, tm):
        Am, rm = minus_terms(tp, tm)
        return Am - rm

    def solve_plus(tm):
        lo, hi = 1.0, 1.0
        while plus_res(lo, tm) <= 0.0:
            lo *= 0.5
            if lo < 1e-12:
                raise ConvergenceError("nehari bisection bracket collapsed (plus, lower)")
        while plus_res(hi, tm) >= 0.0:
            hi *= 2.0
            if hi > 1e12:
                raise ConvergenceError("nehari bisection bracket collapsed (plus, upper)")
        return brentq(lambda t: plus_res(t, tm), lo, hi, xtol=1e-15, rtol=1e-15)

    def outer(tm):
        return minus_res(solve_plus(tm), tm)

    lo, hi = 1.0, 1.0
    while outer(lo) <= 0.0:
        lo *= 0.5
        if lo < 1e-12:
            raise ConvergenceError("nehari bisection bracket collapsed (minus, lower)")
    while outer(hi) >= 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError("nehari bisection bracket collapsed (minus, upper)")
    tm = brentq(outer, lo, hi, xtol=1e-15, rtol=1e-15)
    tp = solve_plus(tm)
    Ap, rp = plus_terms(tp, tm)
    Am, rm = minus_terms(tp, tm)
    res = max(
        abs(Ap - rp) / max(abs(Ap), abs(rp), 1e-300),
        abs(Am - rm) / max(abs(Am), abs(rm), 1e-300),
    )
    if res > 100.0 * tau:
        raise ConvergenceError("nehari bisection did not reach the target tolerance")
    return tp, tm


class _KernelWindowDomain:
    """Minimal all-true domain letting _Workspace operate on a bare window."""

    def __init__(self, window):
        self.window = window
        self.mask = np.ones(window.shape, dtype=bool)
        self.h = window.h
        self.dim = window.dim


def _Workspace_from_kernel(v: GridFunction, k: KernelWeights) -> _Workspace:
    return _Workspace(_KernelWindowDomain(v.window), k)  # type: ignore[arg-type]


def _newton_polish_critical(ws, nl, u0, max_iter=60, tol=1e-13):
    """Damped Newton on grad E(u) = 0 over the mask nodes."""
    p, vol, free = ws.p, ws.vol, ws.free
    u = u0.copy()

    def residual(u):
        g = de_gradient(ws.grid(u), nl, ws.k)
        return g[free]

    r = residual(u)
    res = np.abs(r).max()
    scale = max(vol * float(np.abs(nl.f(u)).max()), 1e-30)
    for _ in range(max_iter):
        if res <= tol * scale:
            break
        H = _hess_seminorm_over_p(ws, u)[np.ix_(free, free)]
        J = H - vol * np.diag(nl.fprime(u[free]))
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return u, res / scale, False
        t = 1.0
        improved = False
        for _ in range(40):
            u_t = u.copy()
            u_t[free] = u[free] + t * step
            r_t = residual(u_t)
            res_t = np.abs(r_t).max()
            if res_t < res:
                u, r, res = u_t, r_t, res_t
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    return u, res / scale, res <= 1e-7 * scale


def lens_minimize(
    domain: LatticeDomain,
    k: KernelWeights,
    nl: Nonlinearity,
    tol: float = 1e-10,
    multistarts: int = 3,
    seed: int = 0,
    max_iter: int = 300,
    threads: int = 1,
) -> NehariReport:
    """Minimize E over the nodal Nehari set (projected gradient + polish).

    The returned function is a discrete critical point of E whose membership
    residuals, re-projection scalings, and G-identity gap are all reported.
    """
    _check_superhomogeneous(nl)
    if nl.p != k.p:
        raise ParameterError("nonlinearity and kernel exponents differ")
    ws = _Workspace(domain, k)
    profiles = _multistart_profiles(ws, multistarts, seed)

    def project(vflat):
        g = ws.grid(vflat)
        tp, tm = nehari_scale(g, nl, k)
        return tp * np.maximum(vflat, 0.0) + tm * np.minimum(vflat, 0.0), tp, tm

    def run(start_id_profile):
        start_id, prof = start_id_profile
        if not np.any(prof > 0) or not np.any(prof < 0):
            return None
        try:
            u, _, _ = project(prof)
        except (ConvergenceError, ParameterError):
            return None
        E = energy(ws.grid(u), nl, k)
        alpha = 1.0
        it = 0
        for it in range(max_iter):
            g = np.zeros(ws.window.size)
            g[ws.free] = de_gradient(ws.grid(u), nl, ws.k)[ws.free]
            gnorm2 = float(g @ g)
            if gnorm2 <= 1e-30:
                break
            accepted = False
            a = alpha
            for _ in range(40):
                w = u - a * g
                tau_sign = _TAU_SIGN_REL * float(np.abs(w).max())
                if not (w[ws.free] > 0).any():
                    w[u > 0] = tau_sign
                if not (w[ws.free] < 0).any():
                    w[u < 0] = -tau_sign
                try:
                    w_proj, tp, tm = project(w)
                except (ConvergenceError, ParameterError):
                    a *= 0.5
                    continue
                E_w = energy(ws.grid(w_proj), nl, k)
                if E_w <= E - 1e-4 * a * gnorm2:
                    u, E = w_proj, E_w
                    alpha = min(a * 1.5, 1e3)
                    accepted = True
                    break
                a *= 0.5
            if not accepted:
                break
        u_pol, res_rel, ok = _newton_polish_critical(ws, nl, u)
        if ok and (u_pol[ws.free] > 0).any() and (u_pol[ws.free] < 0).any():
            E_pol = energy(ws.grid(u_pol), nl, k)
            if E_pol <= E * 1.05 + 1e-12:
                u, E = u_pol, E_pol
        return start_id, u, E, it + 1

    tasks = list(enumerate(profiles))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    results = [r for r in results if r is not None]
    if not results:
        raise ConvergenceError("all multistarts collapsed to one-signed iterates")
    results.sort(key=lambda r: (r[2], r[0]))
    start_id, u, E, iters = results[0]

    ug = ws.grid(u)
    tp, tm = nehari_scale(ug, nl, k)
    rp, rm = _membership_residuals(ws, nl, u)
    G_sum = ws.vol * float(np.sum(nl.G(u)))
    gap = abs(E - G_sum / k.p) / max(abs(E), G_sum / k.p, 1e-300)
    return NehariReport(
        u=ug,
        m=E,
        t_plus=tp,
        t_minus=tm,
        residual_plus=rp,
        residual_minus=rm,
        g_identity_gap=gap,
        iterations=iters,
        multistart_id=start_id,
        p=k.p,
        s=k.s,
        q=nl.q,
    )


def lens_verify(
    v: GridFunction, reference: NehariReport, nl: Nonlinearity, k: KernelWeights, tol: float = 1e-8
) -> dict:
    """Compare a candidate against a converged minimizer through the three
    condition groups (F-sum at least as large, f z sums equal, pairings no
    larger); all passing flags the candidate as LENS-equivalent."""
    vp, vm = v.pos(), v.neg()
    if not vp.values.any() or not vm.values.any():
        raise ParameterError("lens_verify requires a sign-changing function")
    u = reference.u
    vol = v.window.h ** v.window.dim
    p = k.p

    F_v = vol * float(np.sum(nl.F(v.values)))
    F_u = vol * float(np.sum(nl.F(u.values)))
    scale_F = max(abs(F_v), abs(F_u), 1e-300)

    fz = {}
    for name, (cand, ref) in {
        "plus": (vp, u.pos()),
        "minus": (vm, u.neg()),
    }.items():
        a = vol * float(np.sum(nl.f(cand.values) * cand.values))
        b = vol * float(np.sum(nl.f(ref.values) * ref.values))
        fz[name] = (a, b, max(abs(a), abs(b), 1e-300))

    pair = {}
    for name, (cand, ref) in {
        "plus": (vp, u.pos()),
        "minus": (vm, u.neg()),
    }.items():
        a = dpairing(v, cand, k)
        b = dpairing(u, ref, k)
        pair[name] = (a, b, max(abs(a), abs(b), 1e-300))

    rep = {
        "F_comparison_ok": bool(F_v >= F_u - tol * scale_F),
        "fz_plus_ok": bool(abs(fz["plus"][0] - fz["plus"][1]) <= tol * fz["plus"][2]),
        "fz_minus_ok": bool(abs(fz["minus"][0] - fz["minus"][1]) <= tol * fz["minus"][2]),
        "pairing_plus_ok": bool(pair["plus"][0] <= pair["plus"][1] + tol * pair["plus"][2]),
        "pairing_minus_ok": bool(pair["minus"][0] <= pair["minus"][1] + tol * pair["minus"][2]),
        "F_gap": F_v - F_u,
        "pairing_plus_gap": pair["plus"][1] - pair["plus"][0],
        "pairing_minus_gap": pair["minus"][1] - pair["minus"][0],
    }
    rep["lens_equivalent"] = all(
        rep[key]
        for key in ("F_comparison_ok", "fz_plus_ok", "fz_minus_ok", "pairing_plus_ok", "pairing_minus_ok")
    )
    return rep


def positive_ground_state(
    domain: LatticeDomain,
    k: KernelWeights,
    nl: Nonlinearity,
    tol: float = 1e-10,
    max_iter: int = 300,
    seed: int = 0,
):
    """One-signed Nehari ground state; returns (level, u, info).

    Its energy level sits strictly below the nodal level m, which the test
    suites use as the ordering certificate.
    """
    _check_superhomogeneous(nl)
    ws = _Workspace(domain, k)
    coords = domain.window.coords_matrix()
    r2 = (coords**2).sum(axis=1)
    v = np.zeros(ws.window.size)
    v[ws.free] = np.exp(-r2[ws.free] / max(r2[ws.free].max(), 1e-30))

    def project(vflat):
        vflat = np.maximum(vflat, 0.0)
        S = gagliardo_p(ws.grid(vflat), k)
        if nl.kind == "power":
            denom = ws.vol * float(np.sum(vflat**nl.q))
            t = (S / denom) ** (1.0 / (nl.q - k.p))
        else:
            def res(t):
                z = t * vflat
                return t**k.p * S - ws.vol * float(np.sum(nl.f(z) * z))

            hi = 1.0
            while res(hi) >= 0.0:
                hi *= 2.0
            lo = hi / 2.0
            while res(lo) <= 0.0:
                lo *= 0.5
            t = brentq(res, lo, hi, xtol=1e-15, rtol=1e-15)
        return t * vflat

    u = project(v)
    E = energy(ws.grid(u), nl, k)
    alpha = 1.0
    iters = 0
    for iters in range(max_iter):
        g = np.zeros(ws.window.size)
        g[ws.free] = de_gradient(ws.grid(u), nl, ws.k)[ws.free]
        gnorm2 = float(g @ g)
        if gnorm2 <= 1e-30:
            break
        accepted = False
        a = alpha
        for _ in range(40):
            w = np.maximum(u - a * g, 0.0)
            if not w[ws.free].any():
                a *= 0.5
                continue
            w = project(w)
            E_w = energy(ws.grid(w), nl, k)
            if E_w <= E - 1e-4 * a * gnorm2:
                u, E = w, E_w
                alpha = min(a * 1.5, 1e3)
                accepted = True
                break
            a *= 0.5
        if not accepted:
            break
    u_pol, res_rel, ok = _newton_polish_critical(ws, nl, u)
    if ok and (u_pol[ws.free] > 0).any() and not (u_pol[ws.free] < -1e-12 * np.abs(u_pol).max()).any():
        E_pol = energy(ws.grid(u_pol), nl, k)
        if E_pol <= E * 1.05 + 1e-12:
            u, E = np.maximum(u_pol, 0.0), E_pol
    return E, ws.grid(u), {"iterations": iters + 1, "residual_rel": res_rel}
