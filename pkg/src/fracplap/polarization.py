"""Two-point rearrangement of grid functions and its energy inequalities.

Polarization swaps, node by node, the values of u and of its reflected copy
so that the larger value always lands on the chosen side of the hyperplane
{x1 = a}.  Because reflections are exact node permutations here, every
h^N-weighted lattice sum of a function of the node values is preserved
exactly, while the pair energies can only decrease:

  dpairing(P u, (P u)^+) <= dpairing(u, u^+)   (and the same with minus),

with equality exactly in three situations: u already polarized, u the
reflection of a polarized function, or the relevant signed part symmetric
under the reflection.  ``polarization_pairing_deficit`` measures the drops,
``equality_case`` classifies which situation produced a zero drop.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .energy import GridFunction, Nonlinearity, dpairing, gagliardo_p
from .errors import WindowError
from .kernel import KernelWeights, check_kernel_condition
from .lattice import ReflectionParam, polarize_values, reflect_values

__all__ = [
    "polarize",
    "PolarizationIdentities",
    "polarization_identities_check",
    "PairingDeficit",
    "polarization_pairing_deficit",
    "EqualityCase",
    "equality_case",
]

# scale factor for the exact-equality surrogate in floating point
_EPS_EQ_REL = 1e-10
_EPS_NUM_REL = 1e-10


def polarize(u: GridFunction, refl: ReflectionParam, variant: str = "P") -> GridFunction:
    """Two-point rearrangement of u across {x1 = a}; variant "P" keeps the
    smaller value on the positive side, "Ptilde" the larger one."""
    if not u.window.is_closed_under(refl):
        raise WindowError(
            "support window is not closed under the reflection; embed with "
            "GridFunction.embed_closed first"
        )
    return GridFunction(u.window, polarize_values(u.values, u.window, refl, variant))


@dataclass(frozen=True)
class PolarizationIdentities:
    """Node-wise identity violations (index lists, must be empty) and the
    exactly preserved rearrangement sums, before vs after."""

    split_violations: list
    opposite_violations: list
    sums_before: dict
    sums_after: dict

    @property
    def ok(self) -> bool:
        return not self.split_violations and not self.opposite_violations


def _rearrangement_sums(u: GridFunction, p: float, nl: Nonlinearity | None) -> dict:
    h = u.window.h
    vol = h ** u.window.dim
    up = u.pos().values
    um = u.neg().values
    sums = {
        "norm_plus_pp": vol * float(np.sum(np.abs(up) ** p)),
        "norm_minus_pp": vol * float(np.sum(np.abs(um) ** p)),
    }
    if nl is not None:
        sums["F_plus"] = vol * float(np.sum(nl.F(up)))
        sums["F_minus"] = vol * float(np.sum(nl.F(um)))
        sums["fz_plus"] = vol * float(np.sum(nl.f(up) * up))
        sums["fz_minus"] = vol * float(np.sum(nl.f(um) * um))
    return sums


def polarization_identities_check(
    u: GridFunction, refl: ReflectionParam, p: float, nl: Nonlinearity | None = None
) -> PolarizationIdentities:
    """Check the algebraic polarization identities node-wise.

    Verified exactly (bit-for-bit, since min/max/negation are exact):
      (P u)^+ + (P u)^- = P(u^+) + P(u^-)
      P u = P(u^+) - Ptilde(-u^-)
    plus the invariance of the rearrangement sums of both signed parts.
    """
    pu = polarize(u, refl, "P")
    pu_split = polarize(u.pos(), refl, "P").values + polarize(u.neg(), refl, "P").values
    lhs = pu.pos().values + pu.neg().values
    split_bad = np.argwhere(lhs != pu_split).tolist()

    minus_flipped = GridFunction(u.window, -u.neg().values)
    opp = polarize(u.pos(), refl, "P").values - polarize(minus_flipped, refl, "Ptilde").values
    opp_bad = np.argwhere(pu.values != opp).tolist()

    return PolarizationIdentities(
        split_violations=split_bad,
        opposite_violations=opp_bad,
        sums_before=_rearrangement_sums(u, p, nl),
        sums_after=_rearrangement_sums(pu, p, nl),
    )


@dataclass(frozen=True)
class PairingDeficit:
    """Drops of the signed pairings and of the seminorm under polarization.

    All three are nonnegative up to eps_num; the seminorm drop equals
    (deficit_plus + deficit_minus)/p identically.
    """

    deficit_plus: float
    deficit_minus: float
    seminorm_deficit: float
    eps_num: float

    @property
    def ok(self) -> bool:
        return (
            self.deficit_plus >= -self.eps_num
            and self.deficit_minus >= -self.eps_num
            and self.seminorm_deficit >= -self.eps_num
        )


def polarization_pairing_deficit(
    u: GridFunction, refl: ReflectionParam, k: KernelWeights
) -> PairingDeficit:
    if not u.window.is_closed_under(refl):
        raise WindowError("window is not closed under the reflection")
    if not check_kernel_condition(k, refl):
        raise WindowError("kernel does not satisfy the reflection monotonicity condition")
    pu = polarize(u, refl, "P")
    dp = dpairing(u, u.pos(), k) - dpairing(pu, pu.pos(), k)
    dm = dpairing(u, u.neg(), k) - dpairing(pu, pu.neg(), k)
    ds = gagliardo_p(u, k) - gagliardo_p(pu, k)
    scale = k.p * gagliardo_p(u, k)
    h = u.window.h
    norm_pp = h ** u.window.dim * float(np.sum(np.abs(u.values) ** k.p))
    eps = _EPS_NUM_REL * scale + 2.0 * k.tau_kappa * norm_pp
    return PairingDeficit(dp, dm, ds, eps)


class EqualityCase(Enum):
    CASE_I = "case_i"  # u is already polarized
    CASE_II = "case_ii"  # u is the reflection of a polarized function
    CASE_III_PLUS = "case_iii_plus"  # u^+ symmetric under the reflection
    CASE_III_MINUS = "case_iii_minus"  # u^- symmetric under the reflection
    STRICT = "strict"


def equality_case(
    u: GridFunction, refl: ReflectionParam, k: KernelWeights
) -> tuple[EqualityCase, PairingDeficit]:
    """Classify how equality occurs in the polarization inequalities.

    Reported in the fixed order case_i, case_ii, case_iii_plus,
    case_iii_minus (so a reflection-even u reports case_i), with "strict"
    meaning at least one deficit is genuinely positive.
    """
    deficit = polarization_pairing_deficit(u, refl, k)
    eps_eq = _EPS_EQ_REL * k.p * gagliardo_p(u, k)
    pu = polarize(u, refl, "P")
    if np.array_equal(u.values, pu.values):
        return EqualityCase.CASE_I, deficit
    refl_u = reflect_values(u.values, u.window, refl)
    if np.array_equal(refl_u, pu.values):
        return EqualityCase.CASE_II, deficit
    up = u.pos().values
    if deficit.deficit_plus <= eps_eq and np.array_equal(
        up, reflect_values(up, u.window, refl)
    ):
        return EqualityCase.CASE_III_PLUS, deficit
    um = u.neg().values
    if deficit.deficit_minus <= eps_eq and np.array_equal(
        um, reflect_values(um, u.window, refl)
    ):
        return EqualityCase.CASE_III_MINUS, deficit
    return EqualityCase.STRICT, deficit
