"""NumPy implementation of the pairwise interaction sums.

These four functions are the hot kernels of the whole package: every energy,
pairing, and gradient evaluation reduces to them.  u, xi are flat float64
node-value vectors, W is the dense symmetric weight matrix with zero
diagonal, kappa the per-node exterior tail weights.

Conventions (p > 1 throughout, phi(t) = |t|^{p-2} t extended by 0 at t = 0):

  seminorm_pp(u)      = sum_{i != j} W_ij |u_i - u_j|^p + 2 sum_i kappa_i |u_i|^p
  seminorm_grad(u)_k  = 2p [ sum_j W_kj phi(u_k - u_j) + kappa_k phi(u_k) ]
  pairing_pp(u, xi)   = p [ sum_{i != j} W_ij phi(u_i-u_j)(xi_i-xi_j)
                            + 2 sum_i kappa_i phi(u_i) xi_i ]
  halfpair_pos_grad   = gradient of (1/p) pairing_pp(u, max(u,0)) in u, using
                        the a.e. derivative with Heaviside theta(0) = 0.
"""

from __future__ import annotations

import numpy as np


def _phi(d: np.ndarray, p: float) -> np.ndarray:
    """|d|^{p-2} d with the value 0 at d = 0 (needed for p < 2)."""
    if p == 2.0:
        return d
    out = np.zeros_like(d)
    nz = d != 0.0
    out[nz] = np.abs(d[nz]) ** (p - 2.0) * d[nz]
    return out


def seminorm_pp(u: np.ndarray, W: np.ndarray, kappa: np.ndarray, p: float) -> float:
    d = u[:, None] - u[None, :]
    pair = float((W * np.abs(d) ** p).sum())
    tail = 2.0 * float((kappa * np.abs(u) ** p).sum())
    return pair + tail


def seminorm_grad(u: np.ndarray, W: np.ndarray, kappa: np.ndarray, p: float) -> np.ndarray:
    d = u[:, None] - u[None, :]
    g = (W * _phi(d, p)).sum(axis=1)
    return 2.0 * p * (g + kappa * _phi(u, p))


def pairing_pp(
    u: np.ndarray, xi: np.ndarray, W: np.ndarray, kappa: np.ndarray, p: float
) -> float:
    du = u[:, None] - u[None, :]
    dxi = xi[:, None] - xi[None, :]
    pair = float((W * _phi(du, p) * dxi).sum())
    tail = 2.0 * float((kappa * _phi(u, p) * xi).sum())
    return p * (pair + tail)


def halfpair_pos_grad(u: np.ndarray, W: np.ndarray, kappa: np.ndarray, p: float) -> np.ndarray:
    """Gradient of A+(u) = sum_{i!=j} W_ij K(u_i,u_j) + 2 sum kappa_i K(u_i,0)
    where K(a,b) = |a-b|^{p-2}(a-b)(a^+ - b^+).

    dK/da(a,b) = (p-1)|a-b|^{p-2}(a^+ - b^+) + |a-b|^{p-2}(a-b) theta(a),
    and by symmetry of K the gradient is
    g_k = 2 [ sum_j W_kj dK/da(u_k, u_j) + kappa_k dK/da(u_k, 0) ].
    """
    a = u[:, None]
    b = u[None, :]
    d = a - b
    absd = np.abs(d)
    with np.errstate(divide="ignore"):
        fac = np.where(absd > 0.0, absd ** (p - 2.0), 0.0)
    theta_a = (a > 0.0).astype(u.dtype)
    dj = fac * ((p - 1.0) * (np.maximum(a, 0.0) - np.maximum(b, 0.0)) + d * theta_a)
    g = (W * dj).sum(axis=1)
    absu = np.abs(u)
    with np.errstate(divide="ignore"):
        facu = np.where(absu > 0.0, absu ** (p - 2.0), 0.0)
    theta_u = (u > 0.0).astype(u.dtype)
    dju = facu * ((p - 1.0) * np.maximum(u, 0.0) + u * theta_u)
    return 2.0 * (g + kappa * dju)
