"""Quantitative estimates as executable checks.

The dimension-dependent constants in the gap estimate are never produced
here; callers pass them in together with a note on where they came from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

PERTURBATION_CONSTANT = 2 + math.sqrt(2)


class BoundsInputError(ValueError):
    pass


@dataclass(frozen=True)
class GapInputs:
    A: float
    C: float
    diam: float
    norm_r: float = 0.0
    norm_pi: float = 0.0
    norm_t: float = 0.0
    norm_tfm: float = 0.0
    provenance: str = ""

    def __post_init__(self):
        if not self.provenance.strip():
            raise BoundsInputError("constants A and C need a provenance note")
        if self.A <= 0 or self.C <= 0:
            raise BoundsInputError("A and C must be positive")
        if self.diam <= 0:
            raise BoundsInputError("fiber diameter must be positive")
        for name in ("norm_r", "norm_pi", "norm_t", "norm_tfm"):
            if getattr(self, name) < 0:
                raise BoundsInputError(f"{name} must be nonnegative")


def gap_threshold(g: GapInputs) -> float | None:
    """Upper end of the interval certified free of basic spectrum above zero,
    or None when the estimate gives nothing."""
    radicand = g.A / g.diam ** 2 - g.C * (g.norm_r + g.norm_pi ** 2 + g.norm_t ** 2)
    if radicand <= 0:
        return None
    root = math.sqrt(radicand) - g.C * g.norm_tfm
    if root <= 0:
        return None
    return root ** 2


@dataclass(frozen=True)
class PerturbationInputs:
    lam1: tuple[float, ...]
    lam2: tuple[float, ...]
    opnorm: float
    eps: float = 0.0

    def __post_init__(self):
        l1 = tuple(float(v) for v in self.lam1)
        l2 = tuple(float(v) for v in self.lam2)
        if len(l1) != len(l2):
            raise BoundsInputError(f"spectra have lengths {len(l1)} and {len(l2)}")
        for lam in (l1, l2):
            if any(v < -1e-12 for v in lam):
                raise BoundsInputError("eigenvalues must be nonnegative")
            if any(b < a - 1e-12 * max(1.0, abs(a)) for a, b in zip(lam, lam[1:])):
                raise BoundsInputError("eigenvalues must be ascending")
        if self.opnorm < 0 or self.eps < 0:
            raise BoundsInputError("opnorm and eps must be nonnegative")
        object.__setattr__(self, "lam1", l1)
        object.__setattr__(self, "lam2", l2)


@dataclass(frozen=True)
class PerturbationResult:
    holds: bool
    margin: float
    worst_index: int | None


def perturbation_check(p: PerturbationInputs) -> PerturbationResult:
    """|sqrt l1_j - sqrt l2_j| <= (2 + sqrt 2) opnorm + (e^eps - 1) sqrt l1_j for every j."""
    if not p.lam1:
        return PerturbationResult(True, math.inf, None)
    r1 = np.sqrt(np.clip(p.lam1, 0.0, None))
    r2 = np.sqrt(np.clip(p.lam2, 0.0, None))
    allowed = PERTURBATION_CONSTANT * p.opnorm + math.expm1(p.eps) * r1
    margins = allowed - np.abs(r1 - r2)
    j = int(np.argmin(margins))
    worst = float(margins[j])
    # sqrt round-off near equal spectra
    slack = 1e-12 * max(1.0, float(np.max(r1)), float(np.max(r2)))
    return PerturbationResult(worst >= -slack, worst, j + 1)


def eps_close(a: float, b: float, eps: float) -> bool:
    """e^-eps b <= a <= e^eps b."""
    return math.exp(-eps) * b <= a <= math.exp(eps) * b


def tcor2_budget(b1X: int, dimM: int, dimX: int, b1M: int) -> int:
    """Bound on the count of small 1-form eigenvalues under collapse to X."""
    if not 0 <= dimX <= dimM:
        raise BoundsInputError("need 0 <= dim X <= dim M")
    if min(b1X, b1M) < 0:
        raise BoundsInputError("Betti numbers must be nonnegative")
    first = b1X + dimM - dimX
    second = b1M + dimM
    if b1X <= b1M:
        assert first <= second
    return min(first, second)


def tcor3_budget(invariant_dims: Sequence[int], p: int) -> int:
    """dim of F-invariant p-forms on the nilpotent Lie algebra."""
    return int(invariant_dims[p]) if 0 <= p < len(invariant_dims) else 0


def leray_bound_holds(cohomology: Sequence[int], e2_totals: Sequence[int]) -> bool:
    """dim H^p <= sum of E2 along the p-th antidiagonal, for every p."""
    n = max(len(cohomology), len(e2_totals))
    pad = lambda v: list(v) + [0] * (n - len(v))
    return all(h <= e for h, e in zip(pad(cohomology), pad(e2_totals)))


@dataclass(frozen=True)
class SmallEigenvalueMechanisms:
    """Which of the three sources of small positive p-form eigenvalues are present.

    ``fiber_excess``: some b_q(Z) < dim of invariant q-forms, q <= p.
    ``non_degenerate``: E2 totals exceed H totals in some degree <= p.
    The semisimplicity condition has no algorithm here and stays None.
    """
    fiber_excess: bool
    non_semisimple: bool | None
    non_degenerate: bool

    @property
    def any_known(self) -> bool:
        return self.fiber_excess or self.non_degenerate


def small_eigenvalue_mechanisms(fiber_betti: Sequence[int], invariant_dims: Sequence[int],
                                e2_totals: Sequence[int], cohomology: Sequence[int],
                                p: int) -> SmallEigenvalueMechanisms:
    at = lambda v, q: v[q] if 0 <= q < len(v) else 0
    excess = any(at(fiber_betti, q) < at(invariant_dims, q) for q in range(p + 1))
    nondeg = any(at(e2_totals, q) != at(cohomology, q) for q in range(p + 1))
    return SmallEigenvalueMechanisms(excess, None, nondeg)
