"""Grid functions, nonlinearities, and the discrete nonlocal energy.

The seminorm of a finitely supported node function u is the pairwise sum

  gagliardo_p(u) = sum_{i != j} W_ij |u_i - u_j|^p + 2 sum_i kappa_i |u_i|^p,

whose Gateaux derivative pairing is

  dpairing(u, xi) = p [ sum_{i != j} W_ij phi_p(u_i - u_j)(xi_i - xi_j)
                        + 2 sum_i kappa_i phi_p(u_i) xi_i ],

with phi_p(t) = |t|^{p-2} t (extended by 0 at t = 0 when p < 2).  Both are
evaluated by the pair-sum backend.  Lattice integrals carry the volume
element h^N so that seminorm, L^p norms, and residuals are mutually
consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _pairsum
from .errors import ParameterError, WindowError
from .kernel import KernelWeights
from .lattice import ReflectionParam, Window, enlarged_window, polarize_values

__all__ = [
    "GridFunction",
    "Nonlinearity",
    "phi_p",
    "gagliardo_p",
    "gagliardo_grad",
    "dpairing",
    "half_pairing_pos",
    "half_pairing_neg",
    "half_pairing_pos_grad",
    "half_pairing_neg_grad",
    "energy",
    "de_residual",
    "de_gradient",
    "lp_norm_pp",
]


def phi_p(z, p: float):
    """|z|^{p-2} z, with the pointwise-limit value 0 at z = 0."""
    z = np.asarray(z, dtype=float)
    if p == 2.0:
        return z.copy()
    out = np.zeros_like(z)
    nz = z != 0.0
    out[nz] = np.abs(z[nz]) ** (p - 2.0) * z[nz]
    return out


@dataclass(frozen=True)
class GridFunction:
    """Real value per node of a window; implicitly zero outside it."""

    window: Window
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.window.shape:
            raise WindowError(
                f"values shape {vals.shape} does not match window shape {self.window.shape}"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def h(self) -> float:
        return self.window.h

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def pos(self) -> "GridFunction":
        return GridFunction(self.window, np.maximum(self.values, 0.0))

    def neg(self) -> "GridFunction":
        """Negative part with the sign kept: min(u, 0) <= 0."""
        return GridFunction(self.window, np.minimum(self.values, 0.0))

    def embed(self, target: Window) -> "GridFunction":
        if not target.contains_window(self.window):
            raise WindowError("target window does not contain this function's window")
        out = np.zeros(target.shape)
        sl = tuple(
            slice(self.window.offsets[k] - target.offsets[k],
                  self.window.offsets[k] - target.offsets[k] + self.window.shape[k])
            for k in range(target.dim)
        )
        out[sl] = self.values
        return GridFunction(target, out)

    def embed_closed(self, refl: ReflectionParam) -> "GridFunction":
        """Zero-extend onto the sigma_a-closed hull of the window."""
        return self.embed(enlarged_window(self.window, refl))

    def polarized(self, refl: ReflectionParam, variant: str = "P") -> "GridFunction":
        return GridFunction(self.window, polarize_values(self.values, self.window, refl, variant))

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.window, c * self.values)


def _check_windows(k: KernelWeights, *fns: GridFunction):
    for f in fns:
        if f.window != k.window:
            raise WindowError("grid function window does not match the kernel window")


def lp_norm_pp(u: GridFunction, p: float) -> float:
    """h^N-weighted sum of |u_i|^p (the p-th power of the L^p norm)."""
    h = u.window.h
    return float(h ** u.window.dim * np.sum(np.abs(u.values) ** p))


def gagliardo_p(u: GridFunction, k: KernelWeights) -> float:
    """The p-th power of the Gagliardo seminorm, exterior tails included."""
    _check_windows(k, u)
    return float(_pairsum.seminorm_pp(u.flat(), k.W, k.kappa, k.p))


def gagliardo_grad(u: GridFunction, k: KernelWeights) -> np.ndarray:
    _check_windows(k, u)
    return _pairsum.seminorm_grad(u.flat(), k.W, k.kappa, k.p)


def dpairing(u: GridFunction, xi: GridFunction, k: KernelWeights) -> float:
    """Derivative pairing <D gagliardo_p(u), xi>; linear in xi and equal to
    p * gagliardo_p(u) when xi = u."""
    _check_windows(k, u, xi)
    return float(_pairsum.pairing_pp(u.flat(), xi.flat(), k.W, k.kappa, k.p))


def half_pairing_pos(u: GridFunction, k: KernelWeights) -> float:
    """(1/p) dpairing(u, u^+), the positive-part pairing."""
    return dpairing(u, u.pos(), k) / k.p


def half_pairing_neg(u: GridFunction, k: KernelWeights) -> float:
    return dpairing(u, u.neg(), k) / k.p


def half_pairing_pos_grad(u: GridFunction, k: KernelWeights) -> np.ndarray:
    _check_windows(k, u)
    return _pairsum.halfpair_pos_grad(u.flat(), k.W, k.kappa, k.p)


def half_pairing_neg_grad(u: GridFunction, k: KernelWeights) -> np.ndarray:
    """Gradient of (1/p) dpairing(u, u^-); uses min(u,0) = -max(-u,0)."""
    _check_windows(k, u)
    return -_pairsum.halfpair_pos_grad(-u.flat(), k.W, k.kappa, k.p)


def _log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.exp(np.linspace(np.log(lo), np.log(hi), n))


@dataclass(frozen=True)
class Nonlinearity:
    """Right-hand side f with primitive F; resonant or superhomogeneous.

    kinds:
      resonant: f(z) = lam |z|^{p-2} z      (eigenvalue problems)
      power:    f(z) = |z|^{q-2} z, q > p   (model superhomogeneous case)
      custom:   user evaluators; validated by a sampled monotonicity check of
                f(z)/(|z|^{p-2}z) away from zero.
    """

    p: float
    kind: str
    lam: float | None = None
    q: float | None = None
    f_fn: Callable | None = field(default=None, repr=False)
    F_fn: Callable | None = field(default=None, repr=False)
    fprime_fn: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.p <= 1:
            raise ParameterError("base exponent p must exceed 1")
        if self.kind == "resonant":
            if self.lam is None:
                raise ParameterError("resonant nonlinearity needs lam")
        elif self.kind == "power":
            if self.q is None or self.q <= self.p:
                raise ParameterError("superhomogeneity violated: power nonlinearity needs q > p")
        elif self.kind == "custom":
            if self.f_fn is None or self.F_fn is None:
                raise ParameterError("custom nonlinearity needs f and F evaluators")
            self._validate_custom()
        else:
            raise ParameterError(f"unknown nonlinearity kind {self.kind!r}")

    @classmethod
    def resonant(cls, p: float, lam: float) -> "Nonlinearity":
        return cls(p=p, kind="resonant", lam=lam)

    @classmethod
    def power(cls, p: float, q: float) -> "Nonlinearity":
        return cls(p=p, kind="power", q=q)

    @classmethod
    def custom(cls, p: float, f, F, fprime=None) -> "Nonlinearity":
        return cls(p=p, kind="custom", f_fn=f, F_fn=F, fprime_fn=fprime)

    def _validate_custom(self):
        z = _log_grid(1e-6, 1e3, 400)
        for sgn in (1.0, -1.0):
            zz = sgn * z  # ordered away from zero, so the ratio must rise
            ratio = self.f_fn(zz) / phi_p(zz, self.p)
            if not np.all(np.diff(ratio) > 0):
                raise ParameterError(
                    "custom nonlinearity failed the sampled monotonicity check of "
                    "f(z)/(|z|^{p-2}z)"
                )
        if abs(float(self.F_fn(0.0))) > 0:
            raise ParameterError("custom nonlinearity must have F(0) = 0")

    @property
    def superhomogeneous(self) -> bool:
        return self.kind in ("power", "custom")

    def f(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "resonant":
            return self.lam * phi_p(z, self.p)
        if self.kind == "power":
            return phi_p(z, self.q)
        return np.asarray(self.f_fn(z), dtype=float)

    def F(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "resonant":
            return self.lam * np.abs(z) ** self.p / self.p
        if self.kind == "power":
            return np.abs(z) ** self.q / self.q
        return np.asarray(self.F_fn(z), dtype=float)

    def fprime(self, z):
        """Derivative of f away from 0 (finite differences for custom f
        without a supplied derivative)."""
        z = np.asarray(z, dtype=float)
        if self.kind == "resonant":
            return self.lam * (self.p - 1.0) * np.abs(z) ** (self.p - 2.0)
        if self.kind == "power":
            return (self.q - 1.0) * np.abs(z) ** (self.q - 2.0)
        if self.fprime_fn is not None:
            return np.asarray(self.fprime_fn(z), dtype=float)
        dz = 1e-6 * np.maximum(np.abs(z), 1.0)
        return (self.f(z + dz) - self.f(z - dz)) / (2.0 * dz)

    def G(self, z):
        """G(z) = f(z) z - p F(z); nonnegative in the superhomogeneous case."""
        z = np.asarray(z, dtype=float)
        return self.f(z) * z - self.p * self.F(z)


def energy(u: GridFunction, nl: Nonlinearity, k: KernelWeights) -> float:
    """E(u) = (1/p) gagliardo_p(u) - h^N sum_i F(u_i)."""
    _check_windows(k, u)
    if nl.p != k.p:
        raise ParameterError("nonlinearity exponent does not match the kernel exponent")
    h = u.window.h
    return gagliardo_p(u, k) / k.p - float(h ** u.window.dim * np.sum(nl.F(u.values)))


def de_gradient(u: GridFunction, nl: Nonlinearity, k: KernelWeights) -> np.ndarray:
    """Node-wise gradient of E: (1/p) grad gagliardo_p - h^N f(u)."""
    _check_windows(k, u)
    h = u.window.h
    return gagliardo_grad(u, k) / k.p - h ** u.window.dim * nl.f(u.flat())


def de_residual(
    u: GridFunction, nl: Nonlinearity, k: KernelWeights, directions: Sequence[GridFunction]
) -> list[float]:
    """Weak-form residuals (1/p) dpairing(u, xi) - h^N sum f(u) xi per
    direction; all vanish at discrete solutions."""
    _check_windows(k, u, *directions)
    h = u.window.h
    fu = nl.f(u.flat())
    out = []
    for xi in directions:
        val = dpairing(u, xi, k) / k.p - float(h ** u.window.dim * np.sum(fu * xi.flat()))
        out.append(val)
    return out
