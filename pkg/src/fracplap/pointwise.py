"""Scalar inequalities underpinning the energy estimates.

Three families are implemented as checkable operations:

* the four-point inequality: for a < A, b < B the second mixed difference
  J(A,B) - J(a,B) - J(A,b) + J(a,b) of
  J(x,y) = |x-y|^{p-2}(x-y)(x^+ - y^+) is trapped between two negative
  multiples of the integral
  I = double integral of |x-y|^{p-2}(theta(x)+theta(y)) over [a,A]x[b,B],
  and vanishes exactly when A <= 0 and B <= 0;

* the signed-combination bound: for UV <= 0 and (alpha, beta) on the unit
  circle, |U-V|^{p-2}(U-V)(|alpha|^p U - |beta|^p V) >= |alpha U - beta V|^p,
  with equality iff UV = 0 or alpha = beta;

* partial-scaling monotonicity: for UV <= 0 and 0 <= s <= 1,
  |U-V|^{p-2}(U-V) U >= |U-sV|^{p-2}(U-sV) U and the mirrored bound in -V.

The bound integral I is evaluated by adaptive quadrature: the inner variable
is integrated in closed form and the outer integral is split at the images of
the singular lines (the zero axes and the diagonal) before refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ConvergenceError, ParameterError

__all__ = [
    "four_point_J",
    "four_point_mixed_derivative",
    "FourPointInput",
    "FourPointResult",
    "four_point_check",
    "four_point_sweep",
    "check_signed_combination",
    "signed_combination_sweep",
    "check_partial_scaling",
    "partial_scaling_sweep",
]


def four_point_J(alpha, beta, p: float):
    """J(alpha, beta) = |a-b|^{p-2}(a-b)(a^+ - b^+); zero when both args <= 0."""
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    d = a - b
    dplus = np.maximum(a, 0.0) - np.maximum(b, 0.0)
    out = np.zeros(np.broadcast(a, b).shape)
    nz = d != 0.0
    out[nz] = (np.abs(d)[nz] ** (p - 2.0)) * d[nz] * dplus[nz]
    if out.ndim == 0 or np.isscalar(alpha) and np.isscalar(beta):
        return float(out)
    return out


def four_point_mixed_derivative(alpha: float, beta: float, p: float) -> float:
    """d^2 J / (d alpha d beta) away from the lines alpha=0, beta=0, alpha=beta."""
    d = alpha - beta
    if d == 0.0:
        raise ParameterError("mixed derivative is singular on the diagonal")
    th_a = 1.0 if alpha > 0 else 0.0
    th_b = 1.0 if beta > 0 else 0.0
    return (
        -(p - 1.0)
        * abs(d) ** (p - 2.0)
        * ((p - 2.0) * (th_a * alpha - th_b * beta) / d + th_a + th_b)
    )


@dataclass(frozen=True)
class FourPointInput:
    a: float
    A: float
    b: float
    B: float
    p: float

    def __post_init__(self):
        if not (self.a < self.A and self.b < self.B):
            raise ParameterError("four-point input requires a < A and b < B")
        if self.p <= 1.0:
            raise ParameterError("exponent p must exceed 1")


@dataclass(frozen=True)
class FourPointResult:
    expr: float
    lower: float
    upper: float
    equality: bool
    integral: float
    integral_err: float
    tau: float


def _antider(t, p: float):
    """Antiderivative of |t|^{p-2}: sign(t) |t|^{p-1} / (p-1); continuous."""
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.abs(t) ** (p - 1.0) / (p - 1.0)


def _band_integral(lo: float, hi: float, c1: float, c2: float, p: float, epsabs: float):
    """integral over [lo, hi] of [Psi(t - c1) - Psi(t - c2)] dt, where Psi is
    the inner closed-form antiderivative; split at the kink images t = c1, c2."""
    if hi <= lo:
        return 0.0, 0.0

    def f(t):
        return _antider(t - c1, p) - _antider(t - c2, p)

    pts = [c for c in (c1, c2) if lo < c < hi]
    val, err = quad(f, lo, hi, points=pts or None, limit=200, epsabs=epsabs, epsrel=0.0)
    return val, err


def bound_integral(inp: FourPointInput, epsabs: float = 1e-12) -> tuple[float, float]:
    """I(a,A,b,B) by adaptive quadrature; returns (value, error estimate)."""
    a, A, b, B, p = inp.a, inp.A, inp.b, inp.B, inp.p
    v1, e1 = _band_integral(max(a, 0.0), A, b, B, p, epsabs)
    v2, e2 = _band_integral(max(b, 0.0), B, a, A, p, epsabs)
    return v1 + v2, e1 + e2


def four_point_check(inp: FourPointInput, tau: float | None = None) -> FourPointResult:
    """Evaluate the four-point expression and its two-sided integral bounds.

    Raises if the quadrature cannot deliver the requested tolerance (can
    happen for p close to 1; shrink the rectangle or raise tau).
    """
    p = inp.p
    j_AB = four_point_J(inp.A, inp.B, p)
    j_aB = four_point_J(inp.a, inp.B, p)
    j_Ab = four_point_J(inp.A, inp.b, p)
    j_ab = four_point_J(inp.a, inp.b, p)
    expr = j_AB - j_aB - j_Ab + j_ab
    if tau is None:
        tau = 1e-8 * (abs(expr) + 1.0)

    c_low = (p - 1.0) * max(1.0, p - 1.0)
    c_up = (p - 1.0) * min(1.0, p - 1.0)
    integral, ierr = bound_integral(inp, epsabs=tau / (4.0 * max(c_low, 1.0)))
    if ierr * c_low > tau:
        raise ConvergenceError(
            f"bound-integral quadrature error {ierr:.3e} exceeds tau={tau:.3e}; "
            "refine by splitting [a,A]x[b,B] at the zero axes and the diagonal"
        )
    lower = -c_low * integral
    upper = -c_up * integral

    eq_tol = 1e-14 * (abs(j_AB) + abs(j_aB) + abs(j_Ab) + abs(j_ab))
    equality = abs(expr) <= eq_tol
    return FourPointResult(expr, lower, upper, equality, integral, ierr, tau)


def four_point_sweep(n: int, p: float, seed: int = 0, span: float = 2.0) -> dict:
    """Random-input sweep of the four-point bounds; returns a summary with
    worst slacks and the equality-detection confusion counts."""
    rng = np.random.default_rng(seed)
    worst_low = np.inf
    worst_up = np.inf
    violations = 0
    false_pos = false_neg = 0
    n_equality = 0
    for _ in range(n):
        a, A = np.sort(span * (2.0 * rng.random(2) - 1.0))
        b, B = np.sort(span * (2.0 * rng.random(2) - 1.0))
        if A - a < 1e-9 or B - b < 1e-9:
            continue
        res = four_point_check(FourPointInput(a, A, b, B, p))
        worst_low = min(worst_low, res.expr - res.lower)
        worst_up = min(worst_up, res.upper - res.expr, res.tau - res.expr)
        inside = (res.lower - res.tau <= res.expr) and (
            res.expr <= min(res.upper + res.tau, res.tau)
        )
        violations += not inside
        analytic_eq = A <= 0.0 and B <= 0.0
        n_equality += analytic_eq
        if res.equality and not analytic_eq:
            false_pos += 1
        if analytic_eq and not res.equality:
            false_neg += 1
    return {
        "p": p,
        "samples": n,
        "worst_lower_slack": float(worst_low),
        "worst_upper_slack": float(worst_up),
        "bound_violations": int(violations),
        "equality_cases": int(n_equality),
        "false_positives": int(false_pos),
        "false_negatives": int(false_neg),
        "ok": bool(violations == 0 and false_pos == 0 and false_neg == 0),
    }


def check_signed_combination(
    U: float, V: float, alpha: float, beta: float, p: float, tol: float = 1e-12
) -> dict:
    """Bound |U-V|^{p-2}(U-V)(|a|^p U - |b|^p V) >= |a U - b V|^p for UV <= 0
    and (a, b) on the unit circle; the equality flag matches the analytic
    condition (UV = 0 or a = b)."""
    if U * V > 0.0:
        raise ParameterError("signed-combination bound requires U*V <= 0")
    if abs(alpha * alpha + beta * beta - 1.0) > 1e-12:
        raise ParameterError("(alpha, beta) must lie on the unit circle")
    d = U - V
    lhs = (abs(d) ** (p - 2.0) * d if d != 0.0 else 0.0) * (
        abs(alpha) ** p * U - abs(beta) ** p * V
    )
    rhs = abs(alpha * U - beta * V) ** p
    scale = max(abs(lhs), abs(rhs), abs(d) ** p, 1e-300)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ok": lhs >= rhs - tol * scale,
        "equality": abs(lhs - rhs) <= tol * scale,
    }


def signed_combination_sweep(n: int, p: float, seed: int = 0) -> dict:
    """Vectorized random sweep; returns worst normalized slack."""
    rng = np.random.default_rng(seed)
    U = rng.standard_normal(n) * rng.choice([0.0, 1.0], size=n, p=[0.05, 0.95])
    V = -np.abs(rng.standard_normal(n)) * np.sign(np.where(U == 0, 1.0, U))
    V *= rng.choice([0.0, 1.0], size=n, p=[0.05, 0.95])
    t = rng.random(n) * 2.0 * np.pi
    al, be = np.cos(t), np.sin(t)
    d = U - V
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(d != 0.0, np.abs(d) ** (p - 2.0) * d, 0.0)
    lhs = phi * (np.abs(al) ** p * U - np.abs(be) ** p * V)
    rhs = np.abs(al * U - be * V) ** p
    scale = np.maximum.reduce([np.abs(lhs), np.abs(rhs), np.abs(d) ** p, np.full(n, 1e-300)])
    slack = (lhs - rhs) / scale
    return {
        "p": p,
        "samples": n,
        "worst_slack": float(slack.min()),
        "ok": bool(np.all(slack >= -1e-12)),
    }


def check_partial_scaling(U: float, V: float, s: float, p: float, tol: float = 1e-12) -> dict:
    """Monotonicity of the pairing under scaling one sign down: for UV <= 0
    and s in [0,1], phi(U-V) U >= phi(U-sV) U and phi(U-V)(-V) >= phi(sU-V)(-V)."""
    if U * V > 0.0:
        raise ParameterError("partial-scaling bound requires U*V <= 0")
    if not (0.0 <= s <= 1.0):
        raise ParameterError("scaling factor s must lie in [0, 1]")

    def phi(t):
        return abs(t) ** (p - 2.0) * t if t != 0.0 else 0.0

    lhs1, rhs1 = phi(U - V) * U, phi(U - s * V) * U
    lhs2, rhs2 = phi(U - V) * (-V), phi(s * U - V) * (-V)
    sc1 = max(abs(lhs1), abs(rhs1), 1e-300)
    sc2 = max(abs(lhs2), abs(rhs2), 1e-300)
    return {
        "ineq1_ok": lhs1 >= rhs1 - tol * sc1,
        "ineq2_ok": lhs2 >= rhs2 - tol * sc2,
        "gap1": lhs1 - rhs1,
        "gap2": lhs2 - rhs2,
    }


def partial_scaling_sweep(n: int, p: float, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    U = np.abs(rng.standard_normal(n)) * rng.choice([0.0, 1.0, -1.0], size=n, p=[0.05, 0.475, 0.475])
    V = -np.sign(np.where(U == 0, 1.0, U)) * np.abs(rng.standard_normal(n))
    V *= rng.choice([0.0, 1.0], size=n, p=[0.05, 0.95])
    s = rng.random(n)

    def phi(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t != 0.0, np.abs(t) ** (p - 2.0) * t, 0.0)

    lhs1, rhs1 = phi(U - V) * U, phi(U - s * V) * U
    lhs2, rhs2 = phi(U - V) * (-V), phi(s * U - V) * (-V)
    sc1 = np.maximum.reduce([np.abs(lhs1), np.abs(rhs1), np.full(n, 1e-300)])
    sc2 = np.maximum.reduce([np.abs(lhs2), np.abs(rhs2), np.full(n, 1e-300)])
    w1 = float(((lhs1 - rhs1) / sc1).min())
    w2 = float(((lhs2 - rhs2) / sc2).min())
    return {
        "p": p,
        "samples": n,
        "worst_slack_1": w1,
        "worst_slack_2": w2,
        "ok": w1 >= -1e-12 and w2 >= -1e-12,
    }
