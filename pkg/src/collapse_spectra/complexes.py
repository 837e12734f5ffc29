"""Finite cochain complexes with inner products.

A :class:`CochainComplex` carries one differential matrix per degree
(``d[q]`` has shape ``(dims[q+1], dims[q])`` and acts on column vectors) and
one Gram matrix per degree. Ranks, cohomology and spectral-sequence pages are
computed over the rationals; Laplacian spectra in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from . import exact

DEFAULT_RTOL = 1e-8


class StructureError(ValueError):
    """Block shapes of a complex do not fit together."""


class PreconditionError(ValueError):
    """An operation was called on data violating its precondition."""


@dataclass(frozen=True)
class GradedVectorSpace:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 0 for d in dims):
            raise StructureError(f"negative dimension in {dims}")
        object.__setattr__(self, "dims", dims)

    def __getitem__(self, q: int) -> int:
        return self.dims[q] if 0 <= q < len(self.dims) else 0

    def __len__(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return sum(self.dims)

    def euler_characteristic(self) -> int:
        return sum((-1) ** q * d for q, d in enumerate(self.dims))


@dataclass(frozen=True, eq=False)
class CochainComplex:
    spaces: GradedVectorSpace
    differentials: tuple[np.ndarray, ...]
    grams: tuple[np.ndarray, ...]
    exact: bool

    @classmethod
    def build(cls, dims: Sequence[int], differentials: Sequence | None = None,
              grams: Sequence | None = None, exact_mode: bool | None = None):
        """Assemble a complex, checking block shapes.

        ``exact_mode=None`` picks rational mode when every differential entry
        is an int or Fraction.
        """
        spaces = GradedVectorSpace(tuple(dims))
        n = len(spaces)
        if differentials is None:
            differentials = [np.zeros((spaces[q + 1], spaces[q]), dtype=int) for q in range(n - 1)]
        if len(differentials) != max(n - 1, 0):
            raise StructureError(f"need {n - 1} differentials, got {len(differentials)}")
        if exact_mode is None:
            exact_mode = all(exact.is_exact(d) for d in differentials)
        ds = []
        for q, d in enumerate(differentials):
            shape = (spaces[q + 1], spaces[q])
            arr = np.asarray(d, dtype=object if exact_mode else float)
            if arr.size == 0:
                arr = exact.zeros(*shape) if exact_mode else np.zeros(shape)
            if arr.shape != shape:
                raise StructureError(f"d[{q}] has shape {arr.shape}, expected {shape}")
            ds.append(exact.as_exact(arr) if exact_mode else arr.astype(float))
        if grams is None:
            grams = [np.eye(d) for d in spaces.dims]
        if len(grams) != n:
            raise StructureError(f"need {n} Gram matrices, got {len(grams)}")
        gs = []
        for q, g in enumerate(grams):
            arr = np.asarray(exact.to_float(g) if np.asarray(g).dtype == object else g, dtype=float)
            if arr.size == 0:
                arr = np.zeros((spaces[q], spaces[q]))
            if arr.shape != (spaces[q], spaces[q]):
                raise StructureError(f"gram[{q}] has shape {arr.shape}, expected {(spaces[q],) * 2}")
            gs.append(arr)
        return cls(spaces, tuple(ds), tuple(gs), bool(exact_mode))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.spaces.dims

    @property
    def top(self) -> int:
        return len(self.spaces) - 1

    def d(self, q: int) -> np.ndarray:
        """Differential out of degree q (zero block outside the stored range)."""
        if 0 <= q < len(self.differentials):
            return self.differentials[q]
        rows, cols = self.spaces[q + 1], self.spaces[q]
        return exact.zeros(rows, cols) if self.exact else np.zeros((rows, cols))

    def d_float(self, q: int) -> np.ndarray:
        d = self.d(q)
        return exact.to_float(d) if self.exact else d

    def gram(self, q: int) -> np.ndarray:
        if 0 <= q < len(self.grams):
            return self.grams[q]
        return np.zeros((0, 0))

    def with_grams(self, grams: Sequence[np.ndarray]) -> "CochainComplex":
        return CochainComplex.build(self.dims, self.differentials, grams, self.exact)


@dataclass(frozen=True)
class LaplacianPencil:
    """The pair (K, G) of the generalized problem K x = lambda G x."""
    degree: int
    stiffness: np.ndarray
    mass: np.ndarray

    def operator(self) -> np.ndarray:
        if self.mass.size == 0:
            return self.mass.copy()
        return np.linalg.solve(self.mass, self.stiffness)


@dataclass(frozen=True)
class SpectrumReport:
    degree: int
    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    tolerance: float = DEFAULT_RTOL
    certified_below: float | None = None

    @property
    def count(self) -> int:
        return sum(self.multiplicities)

    def values(self) -> np.ndarray:
        return np.repeat(np.asarray(self.eigenvalues, dtype=float), self.multiplicities)

    def kernel_dim(self) -> int:
        if self.eigenvalues and self.eigenvalues[0] == 0.0:
            return self.multiplicities[0]
        return 0

    def lowest_positive(self) -> float | None:
        return next((v for v in self.eigenvalues if v > 0.0), None)

    def as_pairs(self) -> list[tuple[float, int]]:
        return list(zip(self.eigenvalues, self.multiplicities))


def cluster_values(values, rtol: float = DEFAULT_RTOL, zero_tol: float | None = None):
    """Sort, snap near-zero values to 0 and merge relatively close neighbours.

    Returns (eigenvalues, multiplicities). ``zero_tol`` is absolute; by default
    it is ``rtol`` times the largest magnitude present.
    """
    vals = np.sort(np.asarray(values, dtype=float).ravel())
    if vals.size == 0:
        return (), ()
    scale = float(np.max(np.abs(vals)))
    if zero_tol is None:
        zero_tol = rtol * scale
    vals = np.where(np.abs(vals) <= zero_tol, 0.0, vals)
    eigs: list[float] = []
    mults: list[int] = []
    members: list[float] = []
    for v in vals:
        if members and abs(v - members[0]) <= rtol * max(abs(v), abs(members[0])):
            members.append(v)
            continue
        if members:
            eigs.append(float(np.mean(members)))
            mults.append(len(members))
        members = [v]
    eigs.append(float(np.mean(members)))
    mults.append(len(members))
    return tuple(eigs), tuple(mults)


def report_from_values(values, degree: int, rtol: float = DEFAULT_RTOL,
                       zero_tol: float | None = None,
                       certified_below: float | None = None) -> SpectrumReport:
    eigs, mults = cluster_values(values, rtol, zero_tol)
    return SpectrumReport(degree, eigs, mults, rtol, certified_below)


def _norm_scale(c: CochainComplex) -> float:
    norms = [np.linalg.norm(c.d_float(q)) for q in range(len(c.differentials))]
    return max(norms + [1.0])


def check_complex(c: CochainComplex) -> bool:
    """True iff every composite d[q+1] d[q] vanishes (exactly, or to ||d||^2 * 1e-12)."""
    for q in range(len(c.differentials)):
        if c.d(q).shape[0] != c.d(q + 1).shape[1]:
            raise StructureError(f"d[{q}] and d[{q + 1}] do not compose")
    if c.exact:
        return all(
            not any(v != 0 for v in exact.matmul(c.d(q + 1), c.d(q)).flat)
            for q in range(len(c.differentials) - 1)
        )
    tol = _norm_scale(c) ** 2 * 1e-12
    for q in range(len(c.differentials) - 1):
        comp = c.d_float(q + 1) @ c.d_float(q)
        if comp.size and np.max(np.abs(comp)) > tol:
            return False
    return True


def laplacian(c: CochainComplex, p: int) -> LaplacianPencil:
    """Stiffness of <d x, d x> + <d* x, d* x> with adjoints taken in the Gram data."""
    if not 0 <= p < len(c.spaces):
        return LaplacianPencil(p, np.zeros((0, 0)), np.zeros((0, 0)))
    g = c.gram(p)
    up = c.d_float(p)
    k = up.T @ c.gram(p + 1) @ up if up.size else np.zeros_like(g)
    down = c.d_float(p - 1)
    if down.size:
        g_prev = c.gram(p - 1)
        k = k + g @ down @ np.linalg.solve(g_prev, down.T) @ g
    k = 0.5 * (k + k.T)
    return LaplacianPencil(p, k, g)


def _check_spd(g: np.ndarray) -> None:
    if g.size == 0:
        return
    if not np.allclose(g, g.T, rtol=1e-12, atol=1e-12 * np.max(np.abs(g))):
        raise PreconditionError("Gram matrix is not symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as err:
        raise PreconditionError("Gram matrix is not positive definite") from err


def full_spectrum(c: CochainComplex, p: int) -> np.ndarray:
    """All eigenvalues of the degree-p Laplacian pencil, ascending, unsnapped."""
    pencil = laplacian(c, p)
    if pencil.mass.size == 0:
        return np.zeros(0)
    _check_spd(pencil.mass)
    return scipy.linalg.eigh(pencil.stiffness, pencil.mass, eigvals_only=True)


def spectrum(c: CochainComplex, p: int, k: int | None = None,
             rtol: float = DEFAULT_RTOL) -> SpectrumReport:
    """The k smallest eigenvalues of K x = lambda G x, clustered.

    Values below ``rtol`` times the largest eigenvalue are reported as 0.
    When k cuts through a cluster, the reported multiplicity counts only the
    values actually requested.
    """
    dim = c.spaces[p]
    if k is None:
        k = dim
    if k > dim:
        raise PreconditionError(f"requested {k} eigenvalues of a {dim}-dimensional space")
    vals = full_spectrum(c, p)
    if vals.size == 0:
        return SpectrumReport(p, (), (), rtol)
    zero_tol = rtol * max(float(np.max(np.abs(vals))), 0.0)
    vals = np.where(np.abs(vals) <= zero_tol, 0.0, vals)
    return report_from_values(vals[:k], p, rtol, zero_tol=0.0)


def cohomology_dims(c: CochainComplex) -> list[int]:
    """Exact Betti numbers dim ker d[q] - rank d[q-1]."""
    if not c.exact:
        raise PreconditionError("cohomology_dims needs a complex in rational mode")
    ranks = [exact.rank(c.d(q)) for q in range(len(c.spaces))]
    return [c.spaces[q] - ranks[q] - (ranks[q - 1] if q > 0 else 0) for q in range(len(c.spaces))]


def harmonic_dims(c: CochainComplex, rtol: float = DEFAULT_RTOL) -> list[int]:
    """Floating count of zero modes of each Laplacian (threshold rtol * ||K||)."""
    out = []
    for p in range(len(c.spaces)):
        vals = full_spectrum(c, p)
        pencil = laplacian(c, p)
        scale = max(np.linalg.norm(pencil.stiffness, 2) / max(np.linalg.norm(pencil.mass, 2), 1e-300), 1.0) if vals.size else 1.0
        out.append(int(np.sum(np.abs(vals) < rtol * scale)))
    return out


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """A rational complex with an integer filtration value per basis vector.

    F^p is spanned by basis vectors of filtration >= p; the differential must
    not lower filtration.
    """
    complex: CochainComplex
    filtration: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        c = self.complex
        if not c.exact:
            raise PreconditionError("filtered complexes must be in rational mode")
        filt = tuple(tuple(int(v) for v in f) for f in self.filtration)
        if len(filt) != len(c.spaces):
            raise StructureError("one filtration tuple per degree is required")
        for q, f in enumerate(filt):
            if len(f) != c.spaces[q]:
                raise StructureError(f"filtration in degree {q} has {len(f)} entries, space has {c.spaces[q]}")
            if any(v < 0 for v in f):
                raise PreconditionError("filtration values must be >= 0")
        for q in range(len(c.differentials)):
            d = c.d(q)
            for i, j in zip(*np.nonzero(d != 0)):
                if filt[q + 1][i] < filt[q][j]:
                    raise PreconditionError(
                        f"differential lowers filtration: degree {q}, column {j} -> row {i}")
        object.__setattr__(self, "filtration", filt)

    @property
    def p_range(self) -> tuple[int, int]:
        vals = [v for f in self.filtration for v in f]
        return (min(vals), max(vals)) if vals else (0, 0)


@dataclass(frozen=True)
class SpectralPages:
    pages: dict[int, dict[tuple[int, int], int]]
    infinity: dict[tuple[int, int], int]

    def dim(self, r: int | str, p: int, q: int) -> int:
        page = self.infinity if r in ("inf", float("inf")) else self.pages.get(r, {})
        return page.get((p, q), 0)

    def nonzero(self, r: int | str) -> dict[tuple[int, int], int]:
        page = self.infinity if r in ("inf", float("inf")) else self.pages[r]
        return {k: v for k, v in sorted(page.items()) if v}

    def total(self, r: int | str, n: int) -> int:
        page = self.infinity if r in ("inf", float("inf")) else self.pages[r]
        return sum(v for (p, q), v in page.items() if p + q == n)


def _cycles(f: FilteredComplex, r: int, p: int, n: int) -> np.ndarray:
    """Basis of Z_r^p in degree n: x in F^p with d x in F^{p+r}."""
    c = f.complex
    dim = c.spaces[n]
    if dim == 0:
        return exact.zeros(0, 0)
    cols = [i for i, v in enumerate(f.filtration[n]) if v >= p]
    if not cols:
        return exact.zeros(dim, 0)
    d = c.d(n)
    rows = [i for i in range(d.shape[0]) if f.filtration[n + 1][i] < p + r] if n + 1 < len(c.spaces) else []
    kern = exact.nullspace(d[np.ix_(rows, cols)] if rows else exact.zeros(0, len(cols)), len(cols))
    out = exact.zeros(dim, kern.shape[1])
    out[cols, :] = kern
    return out


def _page_dim(f: FilteredComplex, r: int, p: int, n: int) -> int:
    z = _cycles(f, r, p, n)
    if z.shape[1] == 0:
        return 0
    parts = [_cycles(f, r - 1, p + 1, n)]
    if n >= 1:
        zb = _cycles(f, r - 1, p - r + 1, n - 1)
        if zb.shape[1]:
            parts.append(exact.matmul(f.complex.d(n - 1), zb))
    stacked = np.concatenate([x for x in parts if x.shape[1]], axis=1) if any(x.shape[1] for x in parts) else exact.zeros(z.shape[0], 0)
    return z.shape[1] - exact.rank(stacked)


def spectral_pages(f: FilteredComplex, r_max: int) -> SpectralPages:
    """Exact dimensions of E_r^{p,q} (q = n - p) for r = 1..r_max and r = infinity."""
    if r_max < 1:
        raise PreconditionError("r_max must be >= 1")
    lo, hi = f.p_range
    r_inf = hi - lo + 2
    degrees = range(len(f.complex.spaces))

    def page(r: int) -> dict[tuple[int, int], int]:
        out = {}
        for n in degrees:
            for p in range(lo, hi + 1):
                dim = _page_dim(f, r, p, n)
                if dim:
                    out[(p, n - p)] = dim
        return out

    pages = {r: page(r) for r in range(1, r_max + 1)}
    infinity = pages[r_inf] if r_inf <= r_max else page(r_inf)
    return SpectralPages(pages, infinity)
