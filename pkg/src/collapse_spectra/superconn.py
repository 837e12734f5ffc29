"""Flat degree-1 superconnections over a circle base.

Data: a finite fiber complex (V, A0, h), a monodromy Phi commuting with A0 and
a base circle of circumference ``length``. Sections are quasi-periodic,
f(theta + length) = Phi f(theta), and the superconnection is

    A'(f)          = A0 f + dtheta ^ df/dtheta,
    A'(dtheta ^ g) = -dtheta ^ A0 g.

In total degree p the forms are V^p (base degree 0) plus dtheta ^ V^{p-1}.
For h-orthogonal Phi the Laplacian splits over Phi-eigenvalues e^{i alpha} and
frequencies omega in (alpha + 2 pi Z) / length; otherwise a staggered
finite-difference model on the circle is used with Richardson extrapolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import exact
from .complexes import (
    CochainComplex,
    FilteredComplex,
    SpectrumReport,
    cohomology_dims,
    report_from_values,
    spectral_pages,
)
from .flat import BieberbachData, eigenvalues_below
from .nilce import abelian, ce_complex, induced_grams, lambda_power

FLAT_TOL = 1e-10
PHASE_TOL = 1e-8
FD_ACCEPT = 1e-6


class SuperconnError(ValueError):
    """Superconnection data fails validation (e.g. not flat)."""


class ConvergenceError(RuntimeError):
    pass


def _as_float(m) -> np.ndarray:
    arr = np.asarray(m)
    return exact.to_float(arr) if arr.dtype == object else np.asarray(arr, dtype=float)


@dataclass(frozen=True, eq=False)
class SuperconnData:
    """Fiber complex, per-degree monodromy, base circumference and Fourier cutoff.

    The constant orbit-volume weight of free circle models is absorbed into
    the fiber Gram data.
    """
    fiber: CochainComplex
    monodromy: tuple
    length: float = 2 * math.pi
    cutoff: int = 8

    def __post_init__(self):
        dims = self.fiber.dims
        mono = tuple(self.monodromy)
        if len(mono) != len(dims):
            raise SuperconnError("one monodromy block per fiber degree is required")
        for q, phi in enumerate(mono):
            if np.asarray(phi).shape != (dims[q], dims[q]):
                raise SuperconnError(f"monodromy block {q} has the wrong shape")
            if dims[q] and abs(np.linalg.det(_as_float(phi))) < 1e-12:
                raise SuperconnError("monodromy must be invertible")
        if self.length <= 0:
            raise SuperconnError("base length must be positive")
        if self.cutoff < 1:
            raise SuperconnError("Fourier cutoff must be >= 1")
        object.__setattr__(self, "monodromy", mono)
        for q in range(len(dims) - 1):
            a = self.fiber.d_float(q)
            lhs = _as_float(mono[q + 1]) @ a
            rhs = a @ _as_float(mono[q])
            scale = max(1.0, np.max(np.abs(a), initial=0.0))
            if lhs.size and np.max(np.abs(lhs - rhs)) > FLAT_TOL * scale:
                raise SuperconnError("not flat: monodromy does not commute with the fiber differential")

    def phi(self, q: int) -> np.ndarray:
        return _as_float(self.monodromy[q])

    def is_orthogonal(self) -> bool:
        for q, g in enumerate(self.fiber.grams):
            phi = self.phi(q)
            if g.size and not np.allclose(phi.T @ g @ phi, g, atol=1e-10 * max(1.0, np.max(np.abs(g)))):
                return False
        return True


@dataclass(frozen=True, eq=False)
class Z2EquivariantData:
    """Circle data plus an involution theta -> -theta lifted by T_E on V."""
    base: SuperconnData
    involution: tuple

    def __post_init__(self):
        s = self.base
        inv = tuple(_as_float(t) for t in self.involution)
        if len(inv) != len(s.fiber.dims):
            raise SuperconnError("one involution block per fiber degree is required")
        for q, t in enumerate(inv):
            n = s.fiber.dims[q]
            if t.shape != (n, n):
                raise SuperconnError(f"involution block {q} has the wrong shape")
            if not np.allclose(t @ t, np.eye(n), atol=1e-10):
                raise SuperconnError("involution must square to the identity")
            g = s.fiber.gram(q)
            if n and not np.allclose(t.T @ g @ t, g, atol=1e-10 * max(1.0, np.max(np.abs(g)))):
                raise SuperconnError("involution must preserve the fiber inner product")
            phi = s.phi(q)
            if n and not np.allclose(t @ phi @ t, np.linalg.inv(phi), atol=1e-10):
                raise SuperconnError("involution must conjugate the monodromy to its inverse")
        for q in range(len(inv) - 1):
            a = s.fiber.d_float(q)
            if a.size and not np.allclose(inv[q + 1] @ a, a @ inv[q], atol=1e-10):
                raise SuperconnError("involution must commute with the fiber differential")
        object.__setattr__(self, "involution", inv)


# Fourier path ---------------------------------------------------------------

@dataclass
class _Frame:
    """Phi-eigenspace decomposition in h-orthonormal coordinates."""
    phases: list[complex]
    spaces: list[list[np.ndarray]]          # spaces[c][q]: columns spanning W_c^q
    diffs: list[list[np.ndarray]]           # diffs[c][q]: A0 restricted W_c^q -> W_c^{q+1}
    chol: list[np.ndarray] = field(default_factory=list)


def _frame(s: SuperconnData) -> _Frame:
    dims = s.fiber.dims
    chol = [np.linalg.cholesky(g) if g.size else np.zeros((0, 0)) for g in s.fiber.grams]

    def to_on(m, q_out, q_in):
        return chol[q_out].T @ m @ np.linalg.inv(chol[q_in].T) if m.size else m

    phases: list[complex] = []
    per_degree = []
    for q, n in enumerate(dims):
        if n == 0:
            per_degree.append((np.zeros((0, 0), complex), np.zeros(0, complex)))
            continue
        t, z = scipy.linalg.schur(to_on(s.phi(q), q, q).astype(complex), output="complex")
        evals = np.diag(t)
        if np.max(np.abs(np.triu(t, 1)), initial=0.0) > 1e-8:
            raise SuperconnError("monodromy is not normal in the fiber inner product")
        per_degree.append((z, evals))
        for e in evals:
            if not any(abs(e - z0) < PHASE_TOL for z0 in phases):
                phases.append(complex(e))
    spaces = []
    for z0 in phases:
        row = []
        for q, (z, evals) in enumerate(per_degree):
            cols = [i for i, e in enumerate(evals) if abs(e - z0) < PHASE_TOL]
            row.append(z[:, cols] if cols else np.zeros((dims[q], 0), complex))
        spaces.append(row)
    diffs = []
    for c in range(len(phases)):
        row = []
        for q in range(len(dims) - 1):
            a = to_on(s.fiber.d_float(q), q + 1, q)
            w_in, w_out = spaces[c][q], spaces[c][q + 1]
            row.append(w_out.conj().T @ a @ w_in if a.size else np.zeros((w_out.shape[1], w_in.shape[1]), complex))
        diffs.append(row)
    return _Frame(phases, spaces, diffs, chol)


def _restricted_diff(frame: _Frame, c: int, q: int) -> np.ndarray:
    dims = [w.shape[1] for w in frame.spaces[c]]
    if 0 <= q < len(frame.diffs[c]):
        return frame.diffs[c][q]
    rows = dims[q + 1] if 0 <= q + 1 < len(dims) else 0
    cols = dims[q] if 0 <= q < len(dims) else 0
    return np.zeros((rows, cols), complex)


def _wdim(frame: _Frame, c: int, q: int) -> int:
    return frame.spaces[c][q].shape[1] if 0 <= q < len(frame.spaces[c]) else 0


def _block_d(frame: _Frame, c: int, omega: float, p: int) -> np.ndarray:
    """Degree-p differential of one Fourier block: (x, y) -> (a x, i omega x - a y)."""
    dp, dq = _wdim(frame, c, p), _wdim(frame, c, p - 1)
    d_up, d_dn = _wdim(frame, c, p + 1), _wdim(frame, c, p)
    out = np.zeros((d_up + d_dn, dp + dq), complex)
    out[:d_up, :dp] = _restricted_diff(frame, c, p)
    out[d_up:, :dp] = 1j * omega * np.eye(dp)
    out[d_up:, dp:] = -_restricted_diff(frame, c, p - 1)
    return out


def _block_laplacian(frame: _Frame, c: int, omega: float, p: int) -> np.ndarray:
    d = _block_d(frame, c, omega, p)
    e = _block_d(frame, c, omega, p - 1)
    lap = d.conj().T @ d + e @ e.conj().T
    return 0.5 * (lap + lap.conj().T)


def _frequencies(alpha: float, length: float, omega_max: float) -> np.ndarray:
    k_lo = math.ceil((-omega_max * length - alpha) / (2 * math.pi) - 1e-12)
    k_hi = math.floor((omega_max * length - alpha) / (2 * math.pi) + 1e-12)
    return np.array([(alpha + 2 * math.pi * k) / length for k in range(k_lo, k_hi + 1)])


def _fourier_values(s: SuperconnData, p: int, omega_max: float, frame: _Frame | None = None) -> np.ndarray:
    frame = frame or _frame(s)
    vals = []
    for c, z0 in enumerate(frame.phases):
        if _wdim(frame, c, p) + _wdim(frame, c, p - 1) == 0:
            continue
        for omega in _frequencies(float(np.angle(z0)), s.length, omega_max):
            vals.extend(np.linalg.eigvalsh(_block_laplacian(frame, c, omega, p)))
    return np.sort(np.asarray(vals, dtype=float))


def _omega0(s: SuperconnData) -> float:
    return 2 * math.pi * s.cutoff / s.length


def circle_eigenvalues_below(s: SuperconnData, p: int, bound: float) -> np.ndarray:
    """All Delta^E eigenvalues <= bound in total degree p (Fourier path)."""
    if not s.is_orthogonal():
        raise SuperconnError("eigenvalues_below needs h-orthogonal monodromy")
    omega = max(math.sqrt(max(bound, 0.0)), _omega0(s))
    vals = _fourier_values(s, p, omega)
    vals = np.where(np.abs(vals) < 1e-9 * max(1.0, omega ** 2), 0.0, vals)
    return vals[vals <= bound * (1 + 1e-12)]


def circle_spectrum(s: SuperconnData, p: int, k: int, method: str = "auto",
                    rtol: float = 1e-8, max_doublings: int = 8) -> SpectrumReport:
    """The k smallest eigenvalues of Delta^E in total degree p.

    ``method`` is "fourier" (needs h-orthogonal monodromy), "fd" or "auto".
    """
    if method == "auto":
        method = "fourier" if s.is_orthogonal() else "fd"
    if method == "fd":
        vals = fd_spectrum(s, p, k).values
        return report_from_values(vals, p, rtol, zero_tol=1e-7 * max(1.0, float(np.max(vals, initial=0.0))))
    if not s.is_orthogonal():
        raise SuperconnError("Fourier path needs h-orthogonal monodromy")
    frame = _frame(s)
    omega = _omega0(s)
    for _ in range(max_doublings + 1):
        vals = _fourier_values(s, p, omega, frame)
        if len(vals) >= k and vals[k - 1] <= omega ** 2:
            break
        omega *= 2
    else:
        raise ConvergenceError(f"could not certify {k} eigenvalues in degree {p}")
    vals = np.where(np.abs(vals) < 1e-9 * max(1.0, omega ** 2), 0.0, vals)
    return report_from_values(vals[:k], p, rtol, zero_tol=0.0, certified_below=omega ** 2)


# Z2 quotients ----------------------------------------------------------------

def _z2_values(z: Z2EquivariantData, p: int, twist: int, omega_max: float) -> np.ndarray:
    s = z.base
    frame = _frame(s)
    chol = frame.chol
    t_on = [chol[q].T @ t @ np.linalg.inv(chol[q].T) if t.size else t for q, t in enumerate(z.involution)]

    def partner(c: int) -> int:
        target = np.conj(frame.phases[c])
        return next(i for i, z0 in enumerate(frame.phases) if abs(z0 - target) < PHASE_TOL)

    vals = []
    for c, z0 in enumerate(frame.phases):
        if _wdim(frame, c, p) + _wdim(frame, c, p - 1) == 0:
            continue
        cbar = partner(c)
        for omega in _frequencies(float(np.angle(z0)), s.length, omega_max):
            self_paired = cbar == c and abs(omega) < 1e-12
            if not self_paired:
                # the involution swaps this block with (cbar, -omega); invariants
                # are the graphs x + Jx, so each pair contributes one copy; keep
                # the member with the larger key
                if (omega, c) < (-omega, cbar):
                    continue
                vals.extend(np.linalg.eigvalsh(_block_laplacian(frame, c, omega, p)))
                continue
            blocks = []
            for q, sign in ((p, 1), (p - 1, -1)):
                if 0 <= q < len(t_on):
                    w = frame.spaces[c][q]
                    blocks.append(sign * twist * (w.conj().T @ t_on[q] @ w))
            j = scipy.linalg.block_diag(*blocks) if blocks else np.zeros((0, 0))
            if not np.allclose(j @ j, np.eye(j.shape[0]), atol=1e-9):
                raise SuperconnError("lifted involution is not an involution on the zero mode")
            pe, pv = np.linalg.eigh(0.5 * (np.eye(j.shape[0]) + 0.5 * (j + j.conj().T)))
            q_basis = pv[:, pe > 0.5]
            if q_basis.shape[1]:
                lap = _block_laplacian(frame, c, omega, p)
                vals.extend(np.linalg.eigvalsh(q_basis.conj().T @ lap @ q_basis))
    return np.sort(np.asarray(vals, dtype=float))


def z2_basic_spectrum(z: Z2EquivariantData, p: int, k: int, twist: int = 1,
                      rtol: float = 1e-8, max_doublings: int = 8) -> SpectrumReport:
    """Spectrum of the basic Laplacian on (twisted) Z2-invariant forms.

    With trivial V and base circumference 2 pi this is the Laplacian of the
    interval [0, pi]: twist +1 gives absolute, twist -1 relative conditions.
    """
    if twist not in (1, -1):
        raise SuperconnError("twist must be +1 or -1")
    if not z.base.is_orthogonal():
        raise SuperconnError("Z2 quotients need h-orthogonal monodromy")
    omega = _omega0(z.base)
    for _ in range(max_doublings + 1):
        vals = _z2_values(z, p, twist, omega)
        if len(vals) >= k and vals[k - 1] <= omega ** 2:
            break
        omega *= 2
    else:
        raise ConvergenceError(f"could not certify {k} basic eigenvalues in degree {p}")
    vals = np.where(np.abs(vals) < 1e-9 * max(1.0, omega ** 2), 0.0, vals)
    return report_from_values(vals[:k], p, rtol, zero_tol=0.0, certified_below=omega ** 2)


# finite differences ----------------------------------------------------------

def _smoothstep(x: np.ndarray) -> np.ndarray:
    return x - np.sin(2 * math.pi * x) / (2 * math.pi)


def _metric_path(s: SuperconnData, q: int, theta: np.ndarray) -> list[np.ndarray]:
    """Fiber metric along the fundamental domain, glued so that Phi is an isometry
    from theta = 0 to theta = length."""
    g0 = s.fiber.gram(q)
    phi_inv = np.linalg.inv(s.phi(q))
    g1 = phi_inv.T @ g0 @ phi_inv
    w = _smoothstep(theta / s.length)
    return [(1 - x) * g0 + x * g1 for x in w]


def _fd_pencil(s: SuperconnData, p: int, m: int):
    dims = s.fiber.dims
    top = len(dims)
    delta = s.length / m

    def dim(q):
        return dims[q] if 0 <= q < top else 0

    def space(pp):
        return m * dim(pp), m * dim(pp - 1)

    def diff(pp):
        nv_in, ne_in = space(pp)
        nv_out, ne_out = space(pp + 1)
        rows, cols = nv_out + ne_out, nv_in + ne_in
        blocks = sp.lil_matrix((rows, cols))
        a_v = s.fiber.d_float(pp) if 0 <= pp < top - 1 else np.zeros((dim(pp + 1), dim(pp)))
        a_e = s.fiber.d_float(pp - 1) if 0 <= pp - 1 < top - 1 else np.zeros((dim(pp), dim(pp - 1)))
        dv_in, dv_out, de_in = dim(pp), dim(pp + 1), dim(pp - 1)
        phi = s.phi(pp) if 0 <= pp < top else np.zeros((0, 0))
        for j in range(m):
            if a_v.size:
                blocks[j * dv_out:(j + 1) * dv_out, j * dv_in:(j + 1) * dv_in] = a_v
            if dv_in:
                r0 = nv_out + j * dv_in
                blocks[r0:r0 + dv_in, j * dv_in:(j + 1) * dv_in] = -np.eye(dv_in) / delta
                nxt = j + 1
                if nxt < m:
                    blocks[r0:r0 + dv_in, nxt * dv_in:(nxt + 1) * dv_in] = np.eye(dv_in) / delta
                else:
                    blocks[r0:r0 + dv_in, 0:dv_in] = blocks[r0:r0 + dv_in, 0:dv_in].toarray() + phi / delta
            if a_e.size:
                r0 = nv_out + j * dim(pp)
                c0 = nv_in + j * de_in
                blocks[r0:r0 + dim(pp), c0:c0 + de_in] = -a_e
        return blocks.tocsr()

    def mass_blocks(pp):
        theta_v = np.arange(m) * delta
        theta_e = theta_v + delta / 2
        parts = []
        if dim(pp):
            parts += [delta * g for g in _metric_path(s, pp, theta_v)]
        if dim(pp - 1):
            parts += [delta * g for g in _metric_path(s, pp - 1, theta_e)]
        return parts

    def block(parts):
        return sp.block_diag(parts, format="csr") if parts else sp.csr_matrix((0, 0))

    d_up, d_dn = diff(p), diff(p - 1)
    m_p, m_up = block(mass_blocks(p)), block(mass_blocks(p + 1))
    k = sp.csr_matrix((m_p.shape[0], m_p.shape[0]))
    if d_up.shape[0]:
        k = k + d_up.T @ m_up @ d_up
    if d_dn.shape[1]:
        inv_dn = block([np.linalg.inv(b) for b in mass_blocks(p - 1)])
        k = k + m_p @ d_dn @ inv_dn @ d_dn.T @ m_p
    k = 0.5 * (k + k.T)
    return k.tocsc(), m_p.tocsc()


def _fd_values(s: SuperconnData, p: int, k: int, m: int) -> np.ndarray:
    kmat, mmat = _fd_pencil(s, p, m)
    n = kmat.shape[0]
    want = min(k + 2, n)
    if n <= 600 or want >= n - 1:
        vals = scipy.linalg.eigh(kmat.toarray(), mmat.toarray(), eigvals_only=True)
    else:
        shift = -1e-2 * max(1.0, (2 * math.pi / s.length) ** 2)
        vals = spla.eigsh(kmat, k=want, M=mmat, sigma=shift, which="LM", return_eigenvectors=False)
    return np.sort(vals)[:k]


@dataclass(frozen=True)
class FDResult:
    values: np.ndarray
    grid: int
    richardson_ratio: np.ndarray
    disagreement: float


def fd_spectrum(s: SuperconnData, p: int, k: int, start_grid: int = 64,
                max_grid: int = 2048) -> FDResult:
    """Second-order finite differences on the circle, Richardson-extrapolated.

    Accepted when the extrapolants from grids (m, 2m) and (2m, 4m) agree to
    1e-6 relative; the grid doubles otherwise.
    """
    m = start_grid
    while m * 4 <= max_grid:
        l1, l2, l4 = (_fd_values(s, p, k, m * f) for f in (1, 2, 4))
        r1 = (4 * l2 - l1) / 3
        r2 = (4 * l4 - l2) / 3
        scale = max(1.0, float(np.max(np.abs(r2), initial=0.0)))
        floor = 1e-9 * scale
        rel = np.abs(r2 - r1) / np.maximum(np.abs(r2), floor)
        rel = np.where(np.abs(r2) <= floor, np.abs(r2 - r1) / scale, rel)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(np.abs(l2 - l4) > floor, (l1 - l2) / (l2 - l4), np.nan)
        disagreement = float(np.max(rel, initial=0.0))
        if disagreement < FD_ACCEPT:
            vals = np.where(np.abs(r2) <= 1e-8 * scale, 0.0, r2)
            return FDResult(vals, m * 4, ratio, disagreement)
        m *= 2
    raise ConvergenceError(f"finite differences did not converge up to grid {max_grid}")


# cohomology --------------------------------------------------------------------

@dataclass(frozen=True)
class MonodromyCohomology:
    fiber_betti: tuple[int, ...]
    e2: dict[tuple[int, int], int]
    total: tuple[int, ...]

    def e2_total(self, n: int) -> int:
        return sum(v for (p, q), v in self.e2.items() if p + q == n)


def mapping_complex(s: SuperconnData) -> FilteredComplex:
    """One-vertex, one-edge model of the circle: C^n = V^n (+) dtheta V^{n-1},
    D(x, y) = (A0 x, (Phi - 1) x - A0 y), filtered by base degree."""
    c = s.fiber
    if not c.exact:
        raise SuperconnError("monodromy cohomology needs a rational fiber complex")
    dims = c.dims
    top = len(dims)
    phis = [exact.as_exact(phi) for phi in s.monodromy]
    for q in range(top - 1):
        if any(v != 0 for v in (exact.matmul(phis[q + 1], c.d(q)) - exact.matmul(c.d(q), phis[q])).flat):
            raise SuperconnError("monodromy does not commute exactly with the fiber differential")

    def dim(q):
        return dims[q] if 0 <= q < top else 0

    tot = [dim(n) + dim(n - 1) for n in range(top + 1)]
    diffs = []
    for n in range(top):
        d = exact.zeros(tot[n + 1], tot[n])
        dv, de = dim(n), dim(n - 1)
        if dim(n + 1) and dv:
            d[:dim(n + 1), :dv] = c.d(n)
        if dv:
            d[dim(n + 1):, :dv] = phis[n] - exact.identity(dv)
        if de and dv:
            d[dim(n + 1):, dv:] = -c.d(n - 1)
        diffs.append(d)
    total = CochainComplex.build(tot, diffs, exact_mode=True)
    filt = [tuple([0] * dim(n) + [1] * dim(n - 1)) for n in range(top + 1)]
    return FilteredComplex(total, tuple(filt))


def monodromy_cohomology(s: SuperconnData) -> MonodromyCohomology:
    """H^q(A0), the E2 table (ker / coker of Phi - 1 on H^q(A0)) and H^p(A')."""
    f = mapping_complex(s)
    pages = spectral_pages(f, 2)
    return MonodromyCohomology(
        tuple(cohomology_dims(s.fiber)),
        pages.nonzero(2),
        tuple(cohomology_dims(f.complex)),
    )


# comparisons with flat manifolds -------------------------------------------------

def torus_superconn(phi, length: float, t: float, lengths: Sequence[float] | None = None,
                    cutoff: int = 8) -> SuperconnData:
    """Affine-parallel forms of a scaled flat torus fiber with monodromy induced by phi.

    Invariant forms f(theta) on the mapping torus satisfy f(theta + length) =
    Lambda(phi)^{-T} f(theta).
    """
    phi = np.asarray(phi)
    n = phi.shape[0]
    lengths = np.ones(n) if lengths is None else np.asarray(lengths, dtype=float)
    g = t ** 2 * np.diag(lengths ** 2)
    ce = ce_complex(abelian(n), g)
    mono = []
    for q in range(n + 1):
        lp = lambda_power(phi, q)
        inv = exact.solve(lp, exact.identity(lp.shape[0]))
        mono.append(inv.T)
    fiber = CochainComplex.build(ce.complex.dims, ce.complex.differentials, induced_grams(g), exact_mode=True)
    return SuperconnData(fiber, tuple(mono), length, cutoff)


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[tuple[int, float | None, float | None, float | None], ...]
    max_rel_dev: float
    first_unmatched: float | None

    @property
    def matched(self) -> list[tuple[float, float]]:
        return [(m, e) for _, m, e, d in self.rows if m is not None and e is not None and d is not None and d <= 1e-8]


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def threshold_compare(s: SuperconnData, m: BieberbachData, p: int, threshold: float,
                      rtol: float = 1e-8) -> ComparisonTable:
    """Pair the j-th eigenvalues of the manifold and of Delta^E below ``threshold``.

    ``first_unmatched`` is the first manifold eigenvalue (in order) that has no
    partner in the Delta^E list; ``max_rel_dev`` is taken over the matched prefix.
    """
    if len(s.fiber.dims) != m.dimension:
        raise SuperconnError(
            f"fiber complex has {len(s.fiber.dims)} degrees but the manifold has dimension {m.dimension}")
    if threshold <= 0:
        return ComparisonTable((), 0.0, None)
    lam_m = eigenvalues_below(m, p, threshold)
    lam_e = circle_eigenvalues_below(s, p, threshold)
    rows = []
    max_dev = 0.0
    first = None
    for j in range(max(len(lam_m), len(lam_e))):
        a = float(lam_m[j]) if j < len(lam_m) else None
        b = float(lam_e[j]) if j < len(lam_e) else None
        dev = _rel(a, b) if a is not None and b is not None else None
        rows.append((j + 1, a, b, dev))
        if first is None:
            if dev is not None and dev <= rtol:
                max_dev = max(max_dev, dev)
            elif a is not None:
                first = a
    return ComparisonTable(tuple(rows), max_dev, first)


def first_unmatched(s: SuperconnData, m: BieberbachData, p: int, start: float = 1.0,
                    limit: float = 1e7) -> tuple[float, ComparisonTable]:
    """Raise the threshold until a manifold eigenvalue outside Delta^E shows up."""
    threshold = start
    while threshold <= limit:
        table = threshold_compare(s, m, p, threshold)
        if table.first_unmatched is not None:
            return table.first_unmatched, table
        threshold *= 2
    raise ConvergenceError("no unmatched manifold eigenvalue below the limit")


def trivial_line(length: float = 2 * math.pi, phi: float = 1.0, cutoff: int = 8) -> SuperconnData:
    fiber = CochainComplex.build([1], [], exact_mode=True)
    return SuperconnData(fiber, (np.array([[Fraction(phi)]], dtype=object),), length, cutoff)


def interval_model(length: float = 2 * math.pi, cutoff: int = 8) -> Z2EquivariantData:
    """Trivial line over the circle with theta -> -theta: the interval [0, length/2]."""
    return Z2EquivariantData(trivial_line(length, 1.0, cutoff), (np.eye(1),))


def superconn_distance(s1: SuperconnData, s2: SuperconnData) -> float:
    """Operator norm of A'_1 - A'_2 in the fiber inner product (same V, h, Phi, length).

    The base parts cancel, so this is max_q of the h-norm of A0_1 - A0_2 in degree q.
    """
    if s1.fiber.dims != s2.fiber.dims or s1.length != s2.length:
        raise SuperconnError("superconnections live on different data")
    for g1, g2 in zip(s1.fiber.grams, s2.fiber.grams):
        if not np.allclose(g1, g2):
            raise SuperconnError("fiber inner products differ")
    for q in range(len(s1.fiber.dims)):
        if not np.allclose(s1.phi(q), s2.phi(q)):
            raise SuperconnError("monodromies differ")
    chol = [np.linalg.cholesky(g) if g.size else g for g in s1.fiber.grams]
    best = 0.0
    for q in range(len(s1.fiber.dims) - 1):
        diff = s1.fiber.d_float(q) - s2.fiber.d_float(q)
        if diff.size:
            m = chol[q + 1].T @ diff @ np.linalg.inv(chol[q].T)
            best = max(best, float(np.linalg.norm(m, 2)))
    return best


def random_superconn_pair(rng: np.random.Generator, dims: Sequence[int] = (2, 3, 2),
                          length: float = 2 * math.pi, scale: float = 0.3,
                          cutoff: int = 4) -> tuple[SuperconnData, SuperconnData]:
    """Two flat superconnections with trivial monodromy on the same (V, h).

    The second fiber differential is a conjugate S A0 S^-1 of the first, so both
    square to zero.
    """
    dims = list(dims)
    diffs = []
    prev = None
    for q in range(len(dims) - 1):
        a = rng.normal(size=(dims[q + 1], dims[q]))
        if prev is not None:
            # kill the image of the previous map
            u, sv, _ = np.linalg.svd(prev)
            r = int(np.sum(sv > 1e-10))
            img = u[:, :r]
            a = a @ (np.eye(dims[q]) - img @ img.T)
        diffs.append(a)
        prev = a
    fiber = CochainComplex.build(dims, diffs, exact_mode=False)
    conj = [np.eye(n) + scale * rng.normal(size=(n, n)) / max(n, 1) for n in dims]
    diffs2 = [conj[q + 1] @ d @ np.linalg.inv(conj[q]) for q, d in enumerate(diffs)]
    fiber2 = CochainComplex.build(dims, diffs2, exact_mode=False)
    mono = tuple(np.eye(n) for n in dims)
    return SuperconnData(fiber, mono, length, cutoff), SuperconnData(fiber2, mono, length, cutoff)


def real_fourier_complex(cutoff: int, length: float = 2 * math.pi) -> CochainComplex:
    """de Rham complex of the circle truncated to modes |k| <= cutoff.

    Basis: 1, cos, sin (k = 1..cutoff) for functions and the same times dtheta
    for 1-forms, with their L2 Gram matrices.
    """
    n = 2 * cutoff + 1
    d = np.zeros((n, n))
    gram = np.diag([length] + [length / 2] * (2 * cutoff))
    for k in range(1, cutoff + 1):
        w = 2 * math.pi * k / length
        c, s = 2 * k - 1, 2 * k
        d[s, c] = -w   # cos -> -w sin dtheta
        d[c, s] = w    # sin -> w cos dtheta
    return CochainComplex.build([n, n], [d], [gram, gram], exact_mode=False)
