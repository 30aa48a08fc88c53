"""Lattice domains, reflections, Steiner generators, and set polarization.

Nodes sit at cell centers: along each axis the node with integer index k has
coordinate (k + 1/2)*h.  A reflection across the hyperplane {x1 = a} with
a = m*h/2 (m integer) then acts on first-axis indices as k -> m - 1 - k, i.e.
it is an exact permutation of lattice nodes.  All symmetry bookkeeping below
is done in integer index arithmetic so that rearrangement identities hold in
exact (floating-point-reproducible) form.

A ``Window`` is a rectangular block of nodes; a ``LatticeDomain`` is a window
plus a boolean mask selecting the nodes of the open set the problem lives on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateDomainError, ParameterError, WindowError

__all__ = [
    "Window",
    "ReflectionParam",
    "LatticeDomain",
    "make_steiner_domain",
    "check_steiner",
    "polarize_mask",
    "boundary_lids",
    "enlarged_window",
]


@dataclass(frozen=True)
class Window:
    """Rectangular block of lattice nodes.

    Axis d covers integer indices offsets[d] .. offsets[d]+shape[d]-1; the
    node with index k has coordinate (k + 1/2)*h.
    """

    h: float
    offsets: tuple[int, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        if self.h <= 0:
            raise ParameterError("spacing h must be positive")
        if len(self.offsets) != len(self.shape):
            raise ParameterError("offsets and shape must have equal length")
        if len(self.shape) not in (1, 2):
            raise ParameterError("only dimensions 1 and 2 are supported")
        if any(s <= 0 for s in self.shape):
            raise ParameterError("window must contain at least one node per axis")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis_indices(self, d: int) -> np.ndarray:
        """Absolute integer node indices along axis d."""
        return self.offsets[d] + np.arange(self.shape[d])

    def axis_coords(self, d: int) -> np.ndarray:
        return (2 * self.axis_indices(d) + 1) * (self.h / 2.0)

    def index_grids(self) -> list[np.ndarray]:
        """Per-axis absolute index arrays broadcast to the full shape."""
        axes = [self.axis_indices(d) for d in range(self.dim)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def coords_matrix(self) -> np.ndarray:
        """(size, dim) array of node coordinates, C-order flattening."""
        grids = self.index_grids()
        cols = [(2 * g.ravel() + 1) * (self.h / 2.0) for g in grids]
        return np.stack(cols, axis=1)

    def region_bounds(self) -> list[tuple[float, float]]:
        """Per-axis extent of the union of node cells."""
        return [
            (self.offsets[d] * self.h, (self.offsets[d] + self.shape[d]) * self.h)
            for d in range(self.dim)
        ]

    def is_closed_under(self, refl: "ReflectionParam") -> bool:
        lo = self.offsets[0]
        hi = lo + self.shape[0] - 1
        return lo + hi == refl.m - 1

    def contains_window(self, other: "Window") -> bool:
        if self.h != other.h or self.dim != other.dim:
            return False
        for d in range(self.dim):
            if other.offsets[d] < self.offsets[d]:
                return False
            if other.offsets[d] + other.shape[d] > self.offsets[d] + self.shape[d]:
                return False
        return True


@dataclass(frozen=True)
class ReflectionParam:
    """Reflection across {x1 = a} with a = m*h/2; maps nodes to nodes."""

    m: int

    @classmethod
    def from_value(cls, a: float, h: float) -> "ReflectionParam":
        m = a / (h / 2.0)
        m_int = int(round(m))
        if abs(m - m_int) > 1e-9:
            raise ParameterError(
                f"reflection offset a={a} is not an integer multiple of h/2={h / 2.0}"
            )
        return cls(m_int)

    def value(self, h: float) -> float:
        return self.m * (h / 2.0)

    def reflect_index(self, k):
        """Image of a first-axis integer index (works on arrays)."""
        return self.m - 1 - k


def enlarged_window(window: Window, refl: ReflectionParam) -> Window:
    """Smallest rectangular window containing the window and its reflection.

    The result is always closed under the reflection (the rectangular hull of
    B and sigma_a(B) satisfies lo + hi = m - 1 on the first axis exactly).
    """
    lo = window.offsets[0]
    hi = lo + window.shape[0] - 1
    new_lo = min(lo, refl.m - 1 - hi)
    new_hi = max(hi, refl.m - 1 - lo)
    offsets = (new_lo,) + window.offsets[1:]
    shape = (new_hi - new_lo + 1,) + window.shape[1:]
    return Window(window.h, offsets, shape)


def _halfspace_masks(window: Window, refl: ReflectionParam):
    """Boolean arrays for x1 > a, x1 == a, x1 < a over the window grid."""
    k = window.axis_indices(0)
    two_k_plus_1 = 2 * k + 1
    plus = two_k_plus_1 > refl.m
    on = two_k_plus_1 == refl.m
    minus = two_k_plus_1 < refl.m
    if window.dim == 2:
        plus = plus[:, None] & np.ones(window.shape[1], dtype=bool)[None, :]
        on = on[:, None] & np.ones(window.shape[1], dtype=bool)[None, :]
        minus = minus[:, None] & np.ones(window.shape[1], dtype=bool)[None, :]
    return plus, on, minus


def reflect_values(values: np.ndarray, window: Window, refl: ReflectionParam) -> np.ndarray:
    """values composed with the reflection; requires a closed window."""
    if not window.is_closed_under(refl):
        raise WindowError("window is not closed under the reflection")
    return np.flip(values, axis=0)


def polarize_values(
    values: np.ndarray, window: Window, refl: ReflectionParam, variant: str = "P"
) -> np.ndarray:
    """Two-point rearrangement of a node-value array.

    Variant "P": min with the reflected copy on {x1 > a}, max on {x1 < a}.
    Variant "Ptilde": the opposite choice.  Values on {x1 = a} are kept.
    """
    if variant not in ("P", "Ptilde"):
        raise ParameterError(f"unknown polarization variant {variant!r}")
    reflected = reflect_values(values, window, refl)
    plus, on, _minus = _halfspace_masks(window, refl)
    lo = np.minimum(values, reflected)
    hi = np.maximum(values, reflected)
    if variant == "P":
        out = np.where(plus, lo, hi)
    else:
        out = np.where(plus, hi, lo)
    return np.where(on, values, out)


@dataclass(frozen=True)
class LatticeDomain:
    """Boolean mask over a rectangular lattice window.

    Domains produced by :func:`make_steiner_domain` (and the JSON loader)
    additionally have a window symmetric about {x1 = 0}; domains returned by
    :func:`polarize_mask` with a != 0 live on the sigma_a-closed hull instead.
    """

    window: Window
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.window.shape:
            raise WindowError("mask shape must match the window shape")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def dim(self) -> int:
        return self.window.dim

    @property
    def h(self) -> float:
        return self.window.h

    def node_count(self) -> int:
        return int(self.mask.sum())

    def mask_index_set(self) -> set[tuple[int, ...]]:
        """Absolute integer indices of mask nodes."""
        grids = self.window.index_grids()
        sel = self.mask
        return set(zip(*(g[sel].tolist() for g in grids)))

    def boundary_index_set(self) -> set[tuple[int, ...]]:
        """Exterior nodes with a face-adjacent mask node (discrete boundary)."""
        inside = self.mask_index_set()
        boundary = set()
        for node in inside:
            for d in range(self.dim):
                for step in (-1, 1):
                    nb = list(node)
                    nb[d] += step
                    nb = tuple(nb)
                    if nb not in inside:
                        boundary.add(nb)
        return boundary


def _symmetric_window(dim: int, h: float, half_counts: tuple[int, ...]) -> Window:
    offsets = tuple(-n for n in half_counts)
    shape = tuple(2 * n for n in half_counts)
    return Window(h, offsets[:dim], shape[:dim])


def window_from_box(box: tuple[float, ...], h: float) -> Window:
    """Window of all nodes inside the symmetric box (-L1,L1)x...; L must be a
    multiple of h (within rounding)."""
    half_counts = []
    for L in box:
        n = L / h
        n_int = int(round(n))
        if abs(n - n_int) > 1e-9 or n_int <= 0:
            raise ParameterError(f"box half-width {L} must be a positive multiple of h={h}")
        half_counts.append(n_int)
    return _symmetric_window(len(box), h, tuple(half_counts))


def make_steiner_domain(
    half_width: Callable[[float], float], box: tuple[float, ...], h: float
) -> LatticeDomain:
    """Domain {|x1| < half_width(x')} on the node lattice of the given box.

    half_width maps the cross-section coordinate (0.0 in dimension one) to a
    nonnegative length.  The result is Steiner symmetric by construction.
    """
    window = window_from_box(box, h)
    x1 = window.axis_coords(0)
    if window.dim == 1:
        w = float(half_width(0.0))
        if w < 0:
            raise ParameterError("half_width must be nonnegative")
        mask = np.abs(x1) < w
    else:
        x2 = window.axis_coords(1)
        widths = np.array([float(half_width(c)) for c in x2])
        if np.any(widths < 0):
            raise ParameterError("half_width must be nonnegative")
        mask = np.abs(x1)[:, None] < widths[None, :]
    if not mask.any():
        raise DegenerateDomainError("degenerate domain: empty mask")
    domain = LatticeDomain(window, mask)
    assert check_steiner(domain)
    return domain


def check_steiner(d: LatticeDomain) -> bool:
    """True iff the mask is symmetric under x1 -> -x1 and each row parallel to
    the first axis is a contiguous run of nodes."""
    inside = d.mask_index_set()
    if not inside:
        return False
    rows: dict[tuple[int, ...], list[int]] = {}
    for node in inside:
        rows.setdefault(node[1:], []).append(node[0])
    for ks in rows.values():
        ks.sort()
        if ks[-1] - ks[0] + 1 != len(ks):
            return False  # hole in the run
        # symmetry of the run about index -1/2 (i.e. about x1 = 0)
        if ks[0] != -1 - ks[-1]:
            return False
    return True


def polarize_mask(d: LatticeDomain, refl: ReflectionParam, variant: str = "P") -> LatticeDomain:
    """Set polarization: intersection with the reflected set on one side of
    the hyperplane, union on the other ("P"), or swapped ("Ptilde").

    The result lives on the sigma_a-closed hull of the input window.
    """
    big = enlarged_window(d.window, refl)
    mask = embed_mask(d, big)
    pol = polarize_values(mask.astype(np.int8), big, refl, variant) > 0
    return LatticeDomain(big, pol)


def embed_mask(d: LatticeDomain, target: Window) -> np.ndarray:
    if not target.contains_window(d.window):
        raise WindowError("target window does not contain the domain window")
    out = np.zeros(target.shape, dtype=bool)
    sl = tuple(
        slice(d.window.offsets[k] - target.offsets[k],
              d.window.offsets[k] - target.offsets[k] + d.window.shape[k])
        for k in range(target.dim)
    )
    out[sl] = d.mask
    return out


def boundary_lids(d: LatticeDomain) -> dict[str, list[tuple[int, ...]]]:
    """Partition of the discrete boundary into left/right lids and the rest.

    Every row (line parallel to the first axis) that contains mask nodes
    contributes its left-adjacent exterior node to L and its right-adjacent
    one to R; all remaining boundary nodes form C.
    """
    if not check_steiner(d):
        raise WindowError("boundary lids are defined for Steiner-symmetric domains only")
    inside = d.mask_index_set()
    boundary = d.boundary_index_set()
    rows: dict[tuple[int, ...], list[int]] = {}
    for node in inside:
        rows.setdefault(node[1:], []).append(node[0])
    left, right = set(), set()
    for rest, ks in rows.items():
        left.add((min(ks) - 1,) + rest)
        right.add((max(ks) + 1,) + rest)
    cyl = boundary - left - right
    return {
        "L": sorted(left),
        "R": sorted(right),
        "C": sorted(cyl),
    }


def index_distance(nodes_a, nodes_b, h: float) -> float:
    """Minimal Euclidean distance (length units) between two node-index sets."""
    a = np.asarray(sorted(nodes_a), dtype=np.int64)
    b = np.asarray(sorted(nodes_b), dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise ParameterError("distance between empty node sets is undefined")
    a = a.reshape(len(a), -1)
    b = b.reshape(len(b), -1)
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.min())) * h


def shape_half_width(kind: str, params: dict) -> Callable[[float], float]:
    """Half-width generators for the shapes understood by the JSON loader."""
    if kind == "interval":
        w = float(params["half_width"])
        return lambda t: w
    if kind == "disk":
        r = float(params["radius"])
        return lambda t: np.sqrt(max(r * r - t * t, 0.0))
    if kind == "stadium":
        r = float(params["radius"])
        straight = float(params["straight"])
        return lambda t: (straight / 2.0 + np.sqrt(r * r - t * t)) if abs(t) < r else 0.0
    if kind == "table":
        pts = sorted((float(x), float(w)) for x, w in params["points"])
        xs = np.array([x for x, _ in pts])
        ws = np.array([w for _, w in pts])

        def hw(t: float) -> float:
            return float(np.interp(t, xs, ws, left=0.0, right=0.0))

        return hw
    raise ParameterError(f"unknown shape kind {kind!r}")
