"""Hodge spectra of compact flat manifolds R^n / Gamma.

Forms on the torus R^n / Lambda expand in Fourier modes exp(2 pi i <mu, y>)
with mu in the dual lattice; the flat Laplacian acts on each mode by
4 pi^2 |mu|^2. The holonomy group F permutes modes, and the multiplicity of an
eigenvalue on R^n / Gamma is the dimension of the F-invariant part of its
eigenspace, computed here by the character formula

    m_p(shell) = 1/|F| * sum_{gamma in F} chi_p(R_gamma)
                 * sum_{mu in shell, R_gamma^T mu = mu} exp(2 pi i <mu, v_gamma>).

Everything internal is in lattice coordinates y (the lattice is Z^n there).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .complexes import SpectrumReport, cluster_values

FOUR_PI_SQ = 4.0 * math.pi ** 2
DEFAULT_MAX_CUTOFF = 64.0
GROUP_CAP = 64
SHELL_RTOL = 1e-10


class FlatManifoldError(ValueError):
    """Bieberbach data fails validation."""


class CutoffInsufficient(RuntimeError):
    """Not enough certified modes below the largest allowed cutoff."""


class UnsupportedError(ValueError):
    pass


def _frac_mod1(v) -> tuple[Fraction, ...]:
    return tuple(Fraction(x).limit_denominator(10 ** 6) % 1 for x in v)


def _integer_matrix(m: np.ndarray, what: str) -> np.ndarray:
    r = np.rint(m)
    if np.max(np.abs(m - r), initial=0.0) > 1e-9:
        raise FlatManifoldError(f"{what} does not preserve the lattice")
    return r.astype(np.int64)


@dataclass(frozen=True, eq=False)
class BieberbachData:
    """Lattice (columns in ambient coordinates), holonomy pairs (r, v) and metric.

    ``r`` acts on ambient coordinates and must be an isometry of ``metric``;
    ``v`` is the translation part in lattice coordinates.
    """
    lattice: np.ndarray
    holonomy: tuple = ()
    metric: np.ndarray | None = None
    name: str = ""
    group: tuple = field(init=False, repr=False)

    def __post_init__(self):
        lattice = np.atleast_2d(np.asarray(self.lattice, dtype=float))
        n = lattice.shape[0]
        if lattice.shape != (n, n) or abs(np.linalg.det(lattice)) < 1e-12:
            raise FlatManifoldError("lattice basis must be an invertible square matrix")
        metric = np.eye(n) if self.metric is None else np.asarray(self.metric, dtype=float)
        if metric.shape != (n, n) or not np.allclose(metric, metric.T) or np.min(np.linalg.eigvalsh(metric)) <= 0:
            raise FlatManifoldError("metric must be symmetric positive definite")
        object.__setattr__(self, "lattice", lattice)
        object.__setattr__(self, "metric", metric)
        inv = np.linalg.inv(lattice)
        gens = []
        for r, v in self.holonomy:
            r = np.asarray(r, dtype=float)
            if r.shape != (n, n):
                raise FlatManifoldError("holonomy matrix has wrong shape")
            if not np.allclose(r.T @ metric @ r, metric, atol=1e-9):
                raise FlatManifoldError("holonomy element is not an isometry of the flat metric")
            rl = _integer_matrix(inv @ r @ lattice, "holonomy element")
            gens.append((rl, _frac_mod1(v)))
        object.__setattr__(self, "holonomy", tuple((np.asarray(r), tuple(v)) for r, v in self.holonomy))
        object.__setattr__(self, "group", _close_group(gens, n))

    @property
    def dimension(self) -> int:
        return self.lattice.shape[0]

    @property
    def lattice_metric(self) -> np.ndarray:
        return self.lattice.T @ self.metric @ self.lattice

    @property
    def holonomy_order(self) -> int:
        return len(self.group)

    def is_orientable(self) -> bool:
        return all(round(np.linalg.det(r)) == 1 for r, _ in self.group)


def _compose(a, b):
    """(R1, v1) o (R2, v2) = (R1 R2, R1 v2 + v1) modulo the lattice."""
    r1, v1 = a
    r2, v2 = b
    v = tuple((sum(int(r1[i, j]) * v2[j] for j in range(len(v2))) + v1[i]) % 1 for i in range(len(v1)))
    return r1 @ r2, v


def _close_group(gens, n):
    ident = (np.eye(n, dtype=np.int64), tuple(Fraction(0) for _ in range(n)))
    seen = {ident[0].tobytes(): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = _compose(g, a)
                key = b[0].tobytes()
                if key in seen:
                    if seen[key][1] != b[1]:
                        raise FlatManifoldError(
                            "composition closure inconsistent modulo the lattice "
                            "(a pure translation outside the lattice was generated)")
                    continue
                seen[key] = b
                nxt.append(b)
                if len(seen) > GROUP_CAP:
                    raise FlatManifoldError("holonomy group is not finite (or exceeds the cap)")
        frontier = nxt
    return tuple(seen.values())


def _hnf_columns(m: np.ndarray) -> np.ndarray:
    """Integer column echelon basis of the lattice spanned by the columns of m."""
    m = [list(map(int, row)) for row in m]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    piv = 0
    for r in range(rows):
        if piv >= cols:
            break
        while True:
            nz = [c for c in range(piv, cols) if m[r][c] != 0]
            if len(nz) <= 1:
                break
            c_min = min(nz, key=lambda c: abs(m[r][c]))
            for c in nz:
                if c != c_min:
                    f = m[r][c] // m[r][c_min]
                    for i in range(rows):
                        m[i][c] -= f * m[i][c_min]
        nz = [c for c in range(piv, cols) if m[r][c] != 0]
        if nz:
            c = nz[0]
            for i in range(rows):
                m[i][piv], m[i][c] = m[i][c], m[i][piv]
            piv += 1
    return np.array([row[:piv] for row in m], dtype=object)


def _in_lattice(target: Sequence[Fraction], basis: np.ndarray) -> bool:
    """Is the rational vector ``target`` an integer combination of the echelon columns?"""
    rest = list(target)
    k = basis.shape[1] if basis.size else 0
    col = 0
    for r in range(len(rest)):
        if col < k and basis[r, col] != 0:
            coeff = Fraction(rest[r]) / basis[r, col]
            if coeff.denominator != 1:
                return False
            rest = [x - coeff * basis[i, col] for i, x in enumerate(rest)]
            col += 1
        elif rest[r] != 0:
            return False
    return all(x == 0 for x in rest)


def fixed_point_free(b: BieberbachData) -> bool:
    """True iff no non-identity holonomy element fixes a point of R^n / Lambda.

    (R, v) has a fixed point iff N v lies in N Z^n, where N = sum_k R^k over
    the order of R.
    """
    n = b.dimension
    for r, v in b.group:
        if np.array_equal(r, np.eye(n, dtype=np.int64)):
            continue
        order, power = 1, r.copy()
        while not np.array_equal(power, np.eye(n, dtype=np.int64)):
            power = power @ r
            order += 1
        norm = sum(np.linalg.matrix_power(r, k) for k in range(order))
        target = [-sum(int(norm[i, j]) * v[j] for j in range(n)) for i in range(n)]
        if _in_lattice(target, _hnf_columns(norm)):
            return False
    return True


def form_character(r: np.ndarray, p: int) -> int:
    """Trace of Lambda^p(r): sum of principal p x p minors."""
    n = r.shape[0]
    if p < 0 or p > n:
        return 0
    if p == 0:
        return 1
    total = sum(np.linalg.det(r[np.ix_(idx, idx)].astype(float)) for idx in combinations(range(n), p))
    return int(round(total))


def enumerate_modes(b: BieberbachData, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    """All dual-lattice vectors mu with |mu|^2 <= cutoff^2, and their |mu|^2."""
    g = b.lattice_metric
    dual = np.linalg.inv(g)
    bounds = [int(math.floor(cutoff * math.sqrt(g[i, i]) + 1e-9)) for i in range(b.dimension)]
    axes = [np.arange(-m, m + 1) for m in bounds]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, b.dimension)
    quad = np.einsum("ni,ij,nj->n", grid, dual, grid)
    keep = quad <= cutoff ** 2 * (1 + 1e-12)
    return grid[keep], quad[keep]


def _mode_contributions(b: BieberbachData, p: int, mus: np.ndarray) -> np.ndarray:
    """Per-mode share of the invariant multiplicity (sums to integers per orbit)."""
    total = np.zeros(len(mus))
    for r, v in b.group:
        chi = form_character(r, p)
        if chi == 0:
            continue
        fixed = np.all(mus @ r == mus, axis=1)
        phase = np.cos(2 * math.pi * (mus @ np.array([float(x) for x in v])))
        total += chi * fixed * phase
    return total / len(b.group)


@dataclass(frozen=True)
class ModeBlock:
    mu: tuple[int, ...]
    orbit_size: int
    multiplicity: int
    eigenvalue: float


def mode_blocks(b: BieberbachData, p: int, cutoff: float) -> list[ModeBlock]:
    """F-orbits of dual-lattice modes below the cutoff with their invariant multiplicities."""
    mus, quad = enumerate_modes(b, cutoff)
    contrib = _mode_contributions(b, p, mus)
    orbits: dict[tuple, list] = {}
    for mu, w, qv in zip(mus, contrib, quad):
        key = max(tuple(int(x) for x in mu @ r) for r, _ in b.group)
        entry = orbits.setdefault(key, [0, 0.0, qv])
        entry[0] += 1
        entry[1] += w
    blocks = []
    for key, (size, weight, qv) in sorted(orbits.items(), key=lambda kv: (kv[1][2], kv[0])):
        m = int(round(weight))
        if abs(weight - m) > 1e-6:
            raise FlatManifoldError(f"non-integral orbit multiplicity {weight} at mu={key}")
        blocks.append(ModeBlock(key, size, m, FOUR_PI_SQ * float(qv)))
    return blocks


def shells_below(b: BieberbachData, p: int, cutoff: float) -> list[tuple[float, int]]:
    """(eigenvalue, multiplicity) of Delta_p for every eigenvalue <= 4 pi^2 cutoff^2."""
    if p < 0 or p > b.dimension:
        return []
    mus, quad = enumerate_modes(b, cutoff)
    contrib = _mode_contributions(b, p, mus)
    order = np.argsort(quad, kind="stable")
    quad, contrib = quad[order], contrib[order]
    shells = []
    start = 0
    for i in range(1, len(quad) + 1):
        if i == len(quad) or quad[i] - quad[start] > SHELL_RTOL * max(quad[i], 1e-300):
            w = float(np.sum(contrib[start:i]))
            m = int(round(w))
            if abs(w - m) > 1e-6 or m < 0:
                raise FlatManifoldError(f"non-integral shell multiplicity {w}")
            if m:
                shells.append((FOUR_PI_SQ * float(np.mean(quad[start:i])), m))
            start = i
    return shells


def default_cutoff(b: BieberbachData) -> float:
    """Radius reaching the shortest nonzero dual vector along any lattice axis."""
    g = b.lattice_metric
    return 1.0 / math.sqrt(np.max(np.diag(g))) if b.dimension else 1.0


def hodge_spectrum(b: BieberbachData, p: int, k: int, cutoff: float | None = None,
                   max_cutoff: float = DEFAULT_MAX_CUTOFF) -> SpectrumReport:
    """The k smallest eigenvalues of Delta_p on R^n / Gamma with exact multiplicities.

    Every shell meeting the first k eigenvalues is reported with its full
    multiplicity. The cutoff doubles until k eigenvalues are certified below
    4 pi^2 cutoff^2; beyond ``max_cutoff`` this raises CutoffInsufficient.
    """
    if p < 0 or p > b.dimension:
        return SpectrumReport(p, (), ())
    radius = default_cutoff(b) if cutoff is None else float(cutoff)
    while True:
        shells = shells_below(b, p, radius)
        if sum(m for _, m in shells) >= k:
            break
        if radius * 2 > max_cutoff:
            raise CutoffInsufficient(
                f"cutoff-insufficient: fewer than {k} eigenvalues of Delta_{p} below "
                f"4 pi^2 * {max_cutoff}^2 on {b.name or 'flat manifold'}")
        radius *= 2
    eigs, mults, seen = [], [], 0
    for lam, m in shells:
        if seen >= k:
            break
        eigs.append(lam)
        mults.append(m)
        seen += m
    return SpectrumReport(p, tuple(eigs), tuple(mults), SHELL_RTOL, FOUR_PI_SQ * radius ** 2)


def eigenvalues_below(b: BieberbachData, p: int, bound: float) -> np.ndarray:
    """All eigenvalues <= bound, repeated by multiplicity."""
    radius = math.sqrt(max(bound, 0.0) / FOUR_PI_SQ)
    shells = shells_below(b, p, radius)
    vals = [lam for lam, m in shells for _ in range(m) if lam <= bound * (1 + 1e-12)]
    return np.asarray(vals, dtype=float)


def betti_numbers(b: BieberbachData) -> list[int]:
    """Multiplicities of the zero mode, i.e. the F-invariant constant forms."""
    return [int(round(sum(form_character(r, p) for r, _ in b.group) / len(b.group)))
            for p in range(b.dimension + 1)]


# constructions --------------------------------------------------------------

def torus(lengths: Sequence[float]) -> BieberbachData:
    return BieberbachData(np.diag(np.asarray(lengths, dtype=float)), (), None, f"T{len(lengths)}")


def klein_bottle() -> BieberbachData:
    return BieberbachData(np.eye(2), ((np.diag([1.0, -1.0]), (0.5, 0.0)),), None, "klein")


def hantzsche_wendt() -> BieberbachData:
    """Wolf's G6 on the unit cubic lattice: diag-sign holonomy Z2 x Z2, half translations."""
    hol = (
        (np.diag([1.0, -1.0, -1.0]), (0.5, 0.5, 0.0)),
        (np.diag([-1.0, 1.0, -1.0]), (0.0, 0.5, 0.5)),
    )
    return BieberbachData(np.eye(3), hol, None, "g6")


def _block(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]))
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def product_with_scaled_fiber(length: float, fiber: BieberbachData, t: float) -> BieberbachData:
    """S^1 (circumference ``length``) x fiber, with the fiber metric scaled by t^2."""
    if t <= 0:
        raise FlatManifoldError("t must be positive")
    one = np.eye(1)
    lattice = _block(one * length, fiber.lattice)
    metric = _block(one, t ** 2 * fiber.metric)
    hol = tuple((_block(one, r), (0.0,) + tuple(float(x) for x in v)) for r, v in fiber.holonomy)
    return BieberbachData(lattice, hol, metric, f"s1x{fiber.name}({t:g})")


def mapping_torus(fiber: BieberbachData, phi, length: float, t: float,
                  max_order: int = 12) -> BieberbachData:
    """Flat mapping torus of a finite-order lattice automorphism ``phi``.

    ``phi`` is an integer matrix in the fiber's lattice coordinates. The base
    circle has circumference ``length``; the fiber metric is scaled by t^2.
    """
    if t <= 0:
        raise FlatManifoldError("t must be positive")
    phi = np.asarray(phi)
    n = fiber.dimension
    phi_int = _integer_matrix(phi.astype(float), "phi")
    order, power = 1, phi_int.copy()
    while not np.array_equal(power, np.eye(n, dtype=np.int64)):
        power = power @ phi_int
        order += 1
        if order > max_order:
            raise UnsupportedError("phi has infinite (or too large) order; the mapping torus is not flat")
    g = fiber.lattice_metric
    if not np.allclose(phi_int.T @ g @ phi_int, g, atol=1e-9):
        raise UnsupportedError("phi is not an isometry of the fiber's flat metric")
    one = np.eye(1)
    lattice = _block(one * (order * length), fiber.lattice)
    metric = _block(one, t ** 2 * fiber.metric)
    r_amb = fiber.lattice @ phi_int @ np.linalg.inv(fiber.lattice)
    hol = [(_block(one, r), (0.0,) + tuple(float(x) for x in v)) for r, v in fiber.holonomy]
    hol.append((_block(one, r_amb), (1.0 / order,) + (0.0,) * n))
    return BieberbachData(lattice, tuple(hol), metric, f"maptorus({fiber.name},{t:g})")


BASE_LENGTH = 2 * math.pi

MANIFOLDS = ("t2", "t3", "klein", "g6", "s1xg6(t)", "maptorus-I(t)", "maptorus-minusI(t)")


def manifold(name: str) -> BieberbachData:
    """Registry lookup; parameterized names look like ``s1xg6(0.25)``."""
    if name == "t2":
        return torus([1.0, 1.0])
    if name == "t3":
        return torus([1.0, 1.0, 1.0])
    if name == "klein":
        return klein_bottle()
    if name == "g6":
        return hantzsche_wendt()
    m = re.fullmatch(r"(s1xg6|maptorus-I|maptorus-minusI)\(([^)]+)\)", name)
    if m:
        t = float(Fraction(m.group(2)))
        if m.group(1) == "s1xg6":
            return product_with_scaled_fiber(BASE_LENGTH, hantzsche_wendt(), t)
        phi = np.eye(2, dtype=int) if m.group(1) == "maptorus-I" else -np.eye(2, dtype=int)
        return mapping_torus(torus([1.0, 1.0]), phi, BASE_LENGTH, t)
    raise KeyError(f"unknown manifold {name!r}; known: {', '.join(MANIFOLDS)}")
