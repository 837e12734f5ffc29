"""Nilpotent Lie algebras and their Chevalley-Eilenberg complexes.

The exterior basis of Lambda^q(n*) is the list of increasing index tuples in
lexicographic order; all matrices below use that layout.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import exact
from .complexes import CochainComplex, cohomology_dims

DEFAULT_GROUP_CAP = 64


class LieAlgebraError(ValueError):
    """Structure constants or group data fail validation."""


def exterior_basis(n: int, q: int) -> list[tuple[int, ...]]:
    return list(combinations(range(n), q))


def _sort_with_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...] | None]:
    if len(set(idx)) < len(idx):
        return 0, None
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


@dataclass(frozen=True, eq=False)
class NilLieAlgebra:
    """Structure constants ``c[i][j][k]`` with [e_i, e_j] = sum_k c^k_ij e_k."""
    dimension: int
    structure: np.ndarray
    name: str = ""

    def __post_init__(self):
        n = self.dimension
        c = exact.as_exact(np.asarray(self.structure, dtype=object).reshape(n, n, n))
        object.__setattr__(self, "structure", c)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if c[i, j, k] != -c[j, i, k]:
                        raise LieAlgebraError(f"bracket not antisymmetric at ({i},{j},{k})")
        if not self.satisfies_jacobi():
            raise LieAlgebraError("Jacobi identity fails")
        if not self.is_nilpotent():
            raise LieAlgebraError("lower central series does not terminate")

    @classmethod
    def from_brackets(cls, n: int, brackets: dict[tuple[int, int], dict[int, object]], name: str = ""):
        c = np.empty((n, n, n), dtype=object)
        c.fill(Fraction(0))
        for (i, j), out in brackets.items():
            for k, v in out.items():
                c[i, j, k] = exact.to_fraction(v)
                c[j, i, k] = -exact.to_fraction(v)
        return cls(n, c, name)

    def bracket(self, x: Sequence, y: Sequence) -> np.ndarray:
        x = exact.as_exact(np.asarray(x, dtype=object).reshape(-1, 1))[:, 0]
        y = exact.as_exact(np.asarray(y, dtype=object).reshape(-1, 1))[:, 0]
        n = self.dimension
        out = np.array([Fraction(0)] * n, dtype=object)
        for i in range(n):
            if x[i] == 0:
                continue
            for j in range(n):
                if y[j] == 0:
                    continue
                out = out + x[i] * y[j] * self.structure[i, j, :]
        return out

    def satisfies_jacobi(self) -> bool:
        n = self.dimension
        basis = exact.identity(n)
        for i, j, k in combinations(range(n), 3):
            ei, ej, ek = basis[:, i], basis[:, j], basis[:, k]
            total = (self.bracket(ei, self.bracket(ej, ek))
                     + self.bracket(ej, self.bracket(ek, ei))
                     + self.bracket(ek, self.bracket(ei, ej)))
            if any(v != 0 for v in total):
                return False
        return True

    def lower_central_series(self) -> list[int]:
        """Dimensions of g, [g,g], [g,[g,g]], ... down to the first repeat."""
        n = self.dimension
        current = exact.identity(n)
        dims = [n]
        for _ in range(n + 1):
            if current.shape[1] == 0:
                break
            images = [self.bracket(exact.identity(n)[:, i], current[:, j])
                      for i in range(n) for j in range(current.shape[1])]
            span = exact.column_basis(np.array(images, dtype=object).T) if images else exact.zeros(n, 0)
            if span.shape[1] == current.shape[1]:
                dims.append(span.shape[1])
                break
            current = span
            dims.append(span.shape[1])
        return dims

    def is_nilpotent(self) -> bool:
        return self.lower_central_series()[-1] == 0

    def is_automorphism(self, a) -> bool:
        a = exact.as_exact(a)
        n = self.dimension
        for i in range(n):
            for j in range(i + 1, n):
                lhs = self.bracket(a[:, i], a[:, j])
                rhs = exact.matmul(a, self.structure[i, j, :].reshape(n, 1))[:, 0]
                if any(u != v for u, v in zip(lhs, rhs)):
                    return False
        return True


def abelian(n: int) -> NilLieAlgebra:
    return NilLieAlgebra.from_brackets(n, {}, name=f"abelian-{n}")


def heisenberg() -> NilLieAlgebra:
    return NilLieAlgebra.from_brackets(3, {(0, 1): {2: 1}}, name="heisenberg-3")


def lambda_power(m, q: int) -> np.ndarray:
    """Matrix of Lambda^q(m) on the exterior basis (entries are q x q minors)."""
    m = exact.as_exact(m)
    n = m.shape[0]
    basis = exterior_basis(n, q)
    out = exact.zeros(len(basis), len(basis))
    for r, rows in enumerate(basis):
        for c, cols in enumerate(basis):
            out[r, c] = exact.det(m[np.ix_(rows, cols)]) if q else Fraction(1)
    return out


def induced_grams(metric: np.ndarray) -> list[np.ndarray]:
    """Gram matrices on Lambda^q(n*) induced by ``metric`` on n (dual metric minors)."""
    metric = np.asarray(metric, dtype=float)
    n = metric.shape[0]
    dual = np.linalg.inv(metric)
    grams = []
    for q in range(n + 1):
        basis = exterior_basis(n, q)
        g = np.empty((len(basis), len(basis)))
        for r, rows in enumerate(basis):
            for c, cols in enumerate(basis):
                g[r, c] = np.linalg.det(dual[np.ix_(rows, cols)]) if q else 1.0
        grams.append(0.5 * (g + g.T))
    return grams


def ce_differentials(g: NilLieAlgebra) -> list[np.ndarray]:
    """d e^k = -1/2 c^k_ij e^i ^ e^j, extended as a graded derivation."""
    n = g.dimension
    de = {}
    for k in range(n):
        de[k] = [((i, j), -g.structure[i, j, k]) for i, j in combinations(range(n), 2) if g.structure[i, j, k] != 0]
    mats = []
    for q in range(n):
        src = exterior_basis(n, q)
        tgt = {idx: r for r, idx in enumerate(exterior_basis(n, q + 1))}
        d = exact.zeros(len(tgt), len(src))
        for col, mono in enumerate(src):
            for s, k in enumerate(mono):
                for pair, coeff in de[k]:
                    sign, idx = _sort_with_sign(mono[:s] + pair + mono[s + 1:])
                    if sign:
                        d[tgt[idx], col] += (-1) ** s * sign * coeff
        mats.append(d)
    return mats


@dataclass(frozen=True, eq=False)
class CEComplex:
    algebra: NilLieAlgebra
    metric: np.ndarray
    complex: CochainComplex


def ce_complex(g: NilLieAlgebra, metric=None) -> CEComplex:
    n = g.dimension
    metric = np.eye(n) if metric is None else np.asarray(metric, dtype=float)
    if metric.shape != (n, n) or not np.allclose(metric, metric.T):
        raise LieAlgebraError("metric must be a symmetric n x n matrix")
    if n and np.min(np.linalg.eigvalsh(metric)) <= 0:
        raise LieAlgebraError("metric must be positive definite")
    dims = [len(exterior_basis(n, q)) for q in range(n + 1)]
    c = CochainComplex.build(dims, ce_differentials(g), induced_grams(metric), exact_mode=True)
    return CEComplex(g, metric, c)


def scale_metric(ce: CEComplex, weights: Sequence[float]) -> CEComplex:
    """Rescale the metric on n direction-wise: g_ij -> sqrt(w_i w_j) g_ij."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (ce.algebra.dimension,) or np.any(w <= 0):
        raise LieAlgebraError("weights must be positive, one per basis direction")
    root = np.diag(np.sqrt(w))
    return ce_complex(ce.algebra, root @ ce.metric @ root)


@dataclass(frozen=True, eq=False)
class GroupActionF:
    """Finite group of automorphisms of n, stored as its full element list.

    Matrices act on n (column j is the image of e_j); forms transform by the
    transpose.
    """
    elements: tuple[np.ndarray, ...]
    name: str = ""

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def dimension(self) -> int:
        return self.elements[0].shape[0]


def _key(m: np.ndarray) -> tuple:
    return tuple(m.flat)


def generate_group(generators: Iterable, n: int | None = None, cap: int = DEFAULT_GROUP_CAP,
                   name: str = "") -> GroupActionF:
    gens = [exact.as_exact(g) for g in generators]
    if not gens:
        if n is None:
            raise LieAlgebraError("dimension needed for the trivial group")
        return GroupActionF((exact.identity(n),), name or "trivial")
    n = gens[0].shape[0]
    for g in gens:
        if g.shape != (n, n) or exact.det(g) == 0:
            raise LieAlgebraError("generators must be invertible n x n matrices")
    ident = exact.identity(n)
    seen = {_key(ident): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = exact.matmul(g, a)
                k = _key(b)
                if k not in seen:
                    seen[k] = b
                    nxt.append(b)
                    if len(seen) > cap:
                        raise LieAlgebraError(f"generated group exceeds {cap} elements")
        frontier = nxt
    return GroupActionF(tuple(seen.values()), name)


def trivial_group(n: int) -> GroupActionF:
    return generate_group([], n)


def averaging_projector(f: GroupActionF, q: int) -> np.ndarray:
    mats = [lambda_power(a.T, q) for a in f.elements]
    total = mats[0]
    for m in mats[1:]:
        total = total + m
    return total * Fraction(1, f.order)


def invariant_subcomplex(ce: CEComplex, f: GroupActionF) -> CochainComplex:
    """The F-invariant forms Lambda*(n*)^F with restricted differential and Gram."""
    g = ce.algebra
    if f.dimension != g.dimension:
        raise LieAlgebraError("group acts on a space of the wrong dimension")
    for a in f.elements:
        if not g.is_automorphism(a):
            raise LieAlgebraError("group element is not a Lie algebra automorphism")
    c = ce.complex
    bases = [exact.column_basis(averaging_projector(f, q)) for q in range(len(c.spaces))]
    dims = [b.shape[1] for b in bases]
    diffs = []
    for q in range(len(c.differentials)):
        image = exact.matmul(c.d(q), bases[q])
        diffs.append(exact.solve(bases[q + 1], image) if dims[q + 1] else exact.zeros(0, dims[q]))
    grams = []
    for q, b in enumerate(bases):
        bf = exact.to_float(b)
        grams.append(bf.T @ c.gram(q) @ bf)
    return CochainComplex.build(dims, diffs, grams, exact_mode=True)


def invariant_dims(ce: CEComplex, f: GroupActionF) -> list[int]:
    return list(invariant_subcomplex(ce, f).dims)


def parallel_form_criterion(ce: CEComplex, f: GroupActionF, k_low: int, k_high: int) -> bool:
    """True iff there are no nonzero F-invariant parallel k-forms for k_low <= k <= k_high.

    Parallel forms on the fiber are all of Lambda^k(n*)^F, closed or not.
    """
    dims = invariant_dims(ce, f)
    return all((dims[k] if 0 <= k < len(dims) else 0) == 0 for k in range(k_low, k_high + 1))


def ce_betti(g: NilLieAlgebra, f: GroupActionF | None = None) -> list[int]:
    ce = ce_complex(g)
    c = ce.complex if f is None else invariant_subcomplex(ce, f)
    return cohomology_dims(c)


# registry ------------------------------------------------------------------

HW_GENERATORS = (
    np.diag([1, -1, -1]),
    np.diag([-1, 1, -1]),
)

ACTIONS = {
    "trivial": None,
    "hw-z2xz2": HW_GENERATORS,
    "minus-identity": "minus-identity",
}


def algebra(name: str) -> NilLieAlgebra:
    if name == "heisenberg-3":
        return heisenberg()
    m = re.fullmatch(r"abelian-(\d+)", name)
    if m:
        return abelian(int(m.group(1)))
    raise KeyError(f"unknown Lie algebra {name!r}; known: abelian-n, heisenberg-3")


def action(name: str, n: int) -> GroupActionF:
    if name not in ACTIONS:
        raise KeyError(f"unknown group action {name!r}; known: {sorted(ACTIONS)}")
    if name == "trivial":
        return trivial_group(n)
    if name == "minus-identity":
        return generate_group([-np.eye(n, dtype=int)], name=name)
    gens = ACTIONS[name]
    if gens[0].shape[0] != n:
        raise KeyError(f"action {name!r} is defined in dimension {gens[0].shape[0]}, not {n}")
    return generate_group(gens, name=name)
