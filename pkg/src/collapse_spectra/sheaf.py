"""Simplicial cohomology with +-1 local systems, Euler-class cup products and
the two-chart sheaf model of a stratified interval.

Simplices are stored as increasing vertex tuples; that ordering is the
orientation and fixes the front/back faces used by the cup product. A twisted
cochain value f(sigma) lives in the fiber over the first vertex sigma[0].
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import exact
from .complexes import CochainComplex, FilteredComplex, cohomology_dims, spectral_pages


class SheafDataError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SimplicialComplexData:
    """Finite simplicial complex given by its simplices in every dimension."""
    n_vertices: int
    simplices: tuple
    name: str = ""

    def __post_init__(self):
        by_dim: list[list[tuple[int, ...]]] = []
        for k, layer in enumerate(self.simplices):
            cells = sorted({tuple(sorted(int(v) for v in s)) for s in layer})
            for s in cells:
                if len(s) != k + 1 or len(set(s)) != k + 1:
                    raise SheafDataError(f"simplex {s} is not a {k}-simplex")
                if not all(0 <= v < self.n_vertices for v in s):
                    raise SheafDataError(f"simplex {s} uses an unknown vertex")
            by_dim.append(cells)
        while by_dim and not by_dim[-1]:
            by_dim.pop()
        if not by_dim:
            by_dim = [[(v,) for v in range(self.n_vertices)]]
        object.__setattr__(self, "simplices", tuple(tuple(layer) for layer in by_dim))
        object.__setattr__(self, "_index", tuple({s: i for i, s in enumerate(layer)} for layer in by_dim))
        for k in range(1, len(by_dim)):
            idx = self._index[k - 1]
            for s in by_dim[k]:
                for i in range(k + 1):
                    if s[:i] + s[i + 1:] not in idx:
                        raise SheafDataError(f"face {s[:i] + s[i + 1:]} of {s} is missing")

    @classmethod
    def from_facets(cls, facets: Sequence[Sequence[int]], name: str = "") -> "SimplicialComplexData":
        """Downward closure of a list of maximal simplices."""
        facets = [tuple(sorted(f)) for f in facets]
        top = max(len(f) for f in facets) - 1
        layers: list[set] = [set() for _ in range(top + 1)]
        for f in facets:
            for k in range(len(f)):
                layers[k].update(itertools.combinations(f, k + 1))
        n = 1 + max(v for f in facets for v in f)
        return cls(n, tuple(tuple(sorted(layer)) for layer in layers), name)

    @property
    def dimension(self) -> int:
        return len(self.simplices) - 1

    def count(self, k: int) -> int:
        return len(self.simplices[k]) if 0 <= k < len(self.simplices) else 0

    def index(self, s: tuple[int, ...]) -> int:
        return self._index[len(s) - 1][s]

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self.simplices[1] if self.dimension >= 1 else ()

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * len(layer) for k, layer in enumerate(self.simplices))


@dataclass(frozen=True, eq=False)
class LocalSystemZ2:
    """A flat real line bundle: a sign on every edge, cocycle on every triangle."""
    complex: SimplicialComplexData
    weights: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        w = {}
        for e in self.complex.edges:
            v = int(self.weights.get(e, self.weights.get((e[1], e[0]), 1)))
            if v not in (1, -1):
                raise SheafDataError(f"edge weight {v} on {e} is not +-1")
            w[e] = v
        extra = {tuple(sorted(e)) for e in self.weights} - set(w)
        if extra:
            raise SheafDataError(f"weights on edges not in the complex: {sorted(extra)}")
        object.__setattr__(self, "weights", w)
        if self.complex.dimension >= 2:
            for a, b, c in self.complex.simplices[2]:
                if w[(a, b)] * w[(b, c)] * w[(a, c)] != 1:
                    raise SheafDataError(f"cocycle condition fails on triangle {(a, b, c)}")

    @classmethod
    def trivial(cls, x: SimplicialComplexData) -> "LocalSystemZ2":
        return cls(x, {})

    def w(self, a: int, b: int) -> int:
        if a == b:
            return 1
        return self.weights[(a, b) if a < b else (b, a)]

    def is_trivial(self) -> bool:
        return all(v == 1 for v in self.weights.values())


@dataclass(frozen=True, eq=False)
class EulerCocycle:
    """Rational 2-cochain with coefficients in the local system; must be closed."""
    system: LocalSystemZ2
    values: Mapping[tuple[int, int, int], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        x = self.system.complex
        tri = x.simplices[2] if x.dimension >= 2 else ()
        vec = exact.zeros(len(tri), 1)
        for s, v in self.values.items():
            key = tuple(sorted(s))
            if key not in set(tri):
                raise SheafDataError(f"{key} is not a triangle of the complex")
            vec[x.index(key), 0] = exact.to_fraction(v)
        object.__setattr__(self, "vector", vec)
        d2 = coboundary(x, self.system, 2)
        if d2.size and any(v != 0 for v in exact.matmul(d2, vec).flat):
            raise SheafDataError("Euler cocycle is not closed")

    @classmethod
    def zero(cls, s: LocalSystemZ2) -> "EulerCocycle":
        return cls(s, {})


def coboundary(x: SimplicialComplexData, s: LocalSystemZ2 | None, k: int) -> np.ndarray:
    """Twisted coboundary C^k -> C^{k+1}; the 0-th face is transported along sigma0 -> sigma1."""
    rows, cols = x.count(k + 1), x.count(k)
    out = exact.zeros(rows, cols)
    if rows == 0 or cols == 0:
        return out
    for r, sigma in enumerate(x.simplices[k + 1]):
        for i in range(k + 2):
            face = sigma[:i] + sigma[i + 1:]
            sign = (-1) ** i
            if i == 0 and s is not None:
                sign *= s.w(sigma[0], sigma[1])
            out[r, x.index(face)] += sign
    return out


def cochain_complex(x: SimplicialComplexData, s: LocalSystemZ2 | None = None) -> CochainComplex:
    dims = [x.count(k) for k in range(x.dimension + 1)]
    diffs = [coboundary(x, s, k) for k in range(x.dimension)]
    return CochainComplex.build(dims, diffs, exact_mode=True)


def cohomology_local(x: SimplicialComplexData, s: LocalSystemZ2 | None = None) -> tuple[int, ...]:
    """Betti numbers of X with coefficients in the local system (trivial if None)."""
    if s is not None and s.complex is not x:
        raise SheafDataError("local system belongs to a different complex")
    return tuple(cohomology_dims(cochain_complex(x, s)))


def cup_matrix(x: SimplicialComplexData, s: LocalSystemZ2, chi: EulerCocycle, k: int) -> np.ndarray:
    """Matrix of f -> f cup chi from twisted C^k to untwisted C^{k+2}."""
    rows, cols = x.count(k + 2), x.count(k)
    out = exact.zeros(rows, cols)
    if rows == 0 or cols == 0:
        return out
    for r, sigma in enumerate(x.simplices[k + 2]):
        front, back = sigma[:k + 1], sigma[k:]
        value = chi.vector[x.index(back), 0]
        if value:
            out[r, x.index(front)] += s.w(sigma[0], sigma[k]) * value
    return out


def _cohomology_image_rank(images: np.ndarray, boundaries: np.ndarray) -> int:
    if images.shape[1] == 0:
        return 0
    if boundaries.shape[1] == 0:
        return exact.rank(images)
    return exact.rank(np.concatenate([images, boundaries], axis=1)) - exact.rank(boundaries)


def euler_mult_rank(x: SimplicialComplexData, s: LocalSystemZ2, chi: EulerCocycle, p: int) -> int:
    """Rank of multiplication by chi: H^{p-1}(X; O) -> H^{p+1}(X; R)."""
    k = p - 1
    if k < 0 or k + 2 > x.dimension:
        return 0
    cocycles = exact.nullspace(coboundary(x, s, k), x.count(k))
    images = exact.matmul(cup_matrix(x, s, chi, k), cocycles)
    boundaries = coboundary(x, None, k + 1)
    return _cohomology_image_rank(images, boundaries)


def tcor7_criterion(x: SimplicialComplexData, s: LocalSystemZ2, chi: EulerCocycle, p: int) -> bool:
    """Necessary condition for small positive p-form eigenvalues over a codimension-one base:
    chi acts nontrivially from H^{p-1}(X; O) or from H^{p-2}(X; O)."""
    return euler_mult_rank(x, s, chi, p) > 0 or euler_mult_rank(x, s, chi, p - 1) > 0


def small_eig_budget(x: SimplicialComplexData, s: LocalSystemZ2, p: int) -> int:
    """b_p(X) + b_{p-1}(X; O): bound on small p-form eigenvalues of circle-bundle collapse."""
    plain = cohomology_local(x, None)
    twisted = cohomology_local(x, s)

    def at(b, q):
        return b[q] if 0 <= q < len(b) else 0

    return at(plain, p) + at(twisted, p - 1)


def gysin_e2(x: SimplicialComplexData, s: LocalSystemZ2) -> dict[tuple[int, int], int]:
    """E2 of a circle bundle over X: H^p(X; R) in row 0 and H^p(X; O) in row 1."""
    out = {}
    for q, b in enumerate((cohomology_local(x, None), cohomology_local(x, s))):
        for p, v in enumerate(b):
            if v:
                out[(p, q)] = v
    return out


def gysin_betti(x: SimplicialComplexData, s: LocalSystemZ2, chi: EulerCocycle) -> tuple[int, ...]:
    """Betti numbers of the circle bundle: the Gysin differential is multiplication by chi."""
    plain = cohomology_local(x, None)
    twisted = cohomology_local(x, s)
    n = x.dimension + 1
    out = []
    for p in range(n + 1):
        row0 = plain[p] - euler_mult_rank(x, s, chi, p - 1) if p < len(plain) else 0
        row1 = twisted[p - 1] - euler_mult_rank(x, s, chi, p) if 0 <= p - 1 < len(twisted) else 0
        out.append(row0 + row1)
    return tuple(out)


# stratified interval --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StratifiedIntervalSheaf:
    """Constructible graded sheaf on [0, 1]: stalks at the two endpoints and on the
    interior, with restriction maps endpoint -> interior in each degree."""
    interior: tuple[int, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]
    left_maps: tuple
    right_maps: tuple
    name: str = ""

    def __post_init__(self):
        n = len(self.interior)
        if not (len(self.left) == len(self.right) == n):
            raise SheafDataError("stalks must cover the same degrees")
        lm, rm = [], []
        for q in range(n):
            for dims, maps, out, side in ((self.left, self.left_maps, lm, "left"),
                                          (self.right, self.right_maps, rm, "right")):
                shape = (self.interior[q], dims[q])
                raw = np.asarray(maps[q], dtype=object) if q < len(maps) else np.empty((0, 0), dtype=object)
                arr = exact.as_exact(raw) if raw.size else exact.zeros(*shape)
                if arr.shape != shape:
                    raise SheafDataError(f"{side} restriction in degree {q} has shape {arr.shape}, expected {shape}")
                out.append(arr)
        object.__setattr__(self, "left_maps", tuple(lm))
        object.__setattr__(self, "right_maps", tuple(rm))

    @property
    def degrees(self) -> int:
        return len(self.interior)

    def difference_map(self, q: int) -> np.ndarray:
        """(a, b) -> r_L a - r_R b, sections on the two charts to the overlap."""
        return np.concatenate([self.left_maps[q], -self.right_maps[q]], axis=1)


def interval_sheaf_e2(sh: StratifiedIntervalSheaf) -> dict[tuple[int, int], int]:
    """E2^{p,q} = H^p([0,1]; H^q) from the two-chart Cech complex, nonzero entries only."""
    out = {}
    for q in range(sh.degrees):
        diff = sh.difference_map(q)
        r = exact.rank(diff)
        h0 = sh.left[q] + sh.right[q] - r
        h1 = sh.interior[q] - r
        if h0:
            out[(0, q)] = h0
        if h1:
            out[(1, q)] = h1
    return out


def interval_filtered_complex(sh: StratifiedIntervalSheaf) -> FilteredComplex:
    """Total complex C^n = (L^n + R^n) in filtration 0 and I^{n-1} in filtration 1."""
    n_deg = sh.degrees
    dims = []
    for n in range(n_deg + 1):
        lo = sh.left[n] + sh.right[n] if n < n_deg else 0
        hi = sh.interior[n - 1] if n >= 1 else 0
        dims.append(lo + hi)
    diffs = []
    for n in range(n_deg):
        d = exact.zeros(dims[n + 1], dims[n])
        lo_next = sh.left[n + 1] + sh.right[n + 1] if n + 1 < n_deg else 0
        lo = sh.left[n] + sh.right[n]
        if lo and sh.interior[n]:
            d[lo_next:, :lo] = sh.difference_map(n)
        diffs.append(d)
    filt = []
    for n in range(n_deg + 1):
        lo = sh.left[n] + sh.right[n] if n < n_deg else 0
        filt.append(tuple([0] * lo + [1] * (dims[n] - lo)))
    return FilteredComplex(CochainComplex.build(dims, diffs, exact_mode=True), tuple(filt))


def interval_totals(sh: StratifiedIntervalSheaf) -> tuple[int, ...]:
    e2 = interval_sheaf_e2(sh)
    return tuple(sum(v for (p, q), v in e2.items() if p + q == n) for n in range(sh.degrees + 1))


# registry -------------------------------------------------------------------

def circle() -> SimplicialComplexData:
    return SimplicialComplexData.from_facets([(0, 1), (1, 2), (0, 2)], "circle")


def s2_tetra() -> SimplicialComplexData:
    return SimplicialComplexData.from_facets(list(itertools.combinations(range(4), 3)), "s2-tetra")


def t2_min() -> SimplicialComplexData:
    """Seven-vertex triangulation of the torus."""
    facets = []
    for i in range(7):
        facets.append((i, (i + 1) % 7, (i + 3) % 7))
        facets.append((i, (i + 2) % 7, (i + 3) % 7))
    return SimplicialComplexData.from_facets(facets, "t2-min")


def interval_ex5() -> StratifiedIntervalSheaf:
    """Fiberwise cohomology of the torus-fiber collapse of S^3 onto an interval."""
    return StratifiedIntervalSheaf(
        interior=(1, 2, 1), left=(1, 1, 0), right=(1, 1, 0),
        left_maps=([[1]], [[1], [0]], []),
        right_maps=([[1]], [[0], [1]], []),
        name="interval-ex5",
    )


def constant_interval() -> StratifiedIntervalSheaf:
    return StratifiedIntervalSheaf((1,), (1,), (1,), ([[1]],), ([[1]],), "interval-constant")


COMPLEXES = {"circle": circle, "s2-tetra": s2_tetra, "t2-min": t2_min}
INTERVAL_SHEAVES = {"interval-ex5": interval_ex5, "interval-constant": constant_interval}


def complex_by_name(name: str) -> SimplicialComplexData:
    try:
        return COMPLEXES[name]()
    except KeyError:
        raise KeyError(f"unknown complex {name!r}; known: {sorted(COMPLEXES)}") from None


def sheaf_by_name(name: str) -> StratifiedIntervalSheaf:
    try:
        return INTERVAL_SHEAVES[name]()
    except KeyError:
        raise KeyError(f"unknown interval sheaf {name!r}; known: {sorted(INTERVAL_SHEAVES)}") from None


def generator_cocycle(s: LocalSystemZ2) -> EulerCocycle:
    """Value 1 on the first triangle and 0 elsewhere."""
    x = s.complex
    return EulerCocycle(s, {x.simplices[2][0]: Fraction(1)})


def load_complex(path: str | Path) -> tuple[SimplicialComplexData, LocalSystemZ2, EulerCocycle]:
    """Read ``{"facets": [...], "weights": [[i, j, w], ...], "chi": [[i, j, k, value], ...]}``.

    ``chi`` values may be strings such as "1/2".
    """
    data = json.loads(Path(path).read_text())
    if "facets" not in data:
        raise SheafDataError("complex file needs a 'facets' list")
    x = SimplicialComplexData.from_facets(data["facets"], data.get("name", str(path)))
    weights = {tuple(sorted((int(i), int(j)))): int(w) for i, j, w in data.get("weights", [])}
    s = LocalSystemZ2(x, weights)
    chi = EulerCocycle(s, {tuple(sorted(map(int, row[:3]))): Fraction(str(row[3])) for row in data.get("chi", [])})
    return x, s, chi
