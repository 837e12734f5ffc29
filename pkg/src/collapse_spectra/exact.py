"""Exact linear algebra over the rationals.

Matrices are numpy object arrays of :class:`fractions.Fraction`. Everything
here is plain Gaussian elimination; the matrices that show up in this package
have at most a few hundred entries per side.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    # floats convert exactly (binary rational); 0.5 -> 1/2, -1.0 -> -1
    return Fraction(float(x))


def as_exact(a, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Return a 2-d object array of Fractions."""
    arr = np.asarray(a, dtype=object)
    if shape is not None and arr.size == 0:
        arr = np.empty(shape, dtype=object)
    if arr.ndim == 1 and shape is not None:
        arr = arr.reshape(shape)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_fraction(v)
    return out


def zeros(rows: int, cols: int) -> np.ndarray:
    out = np.empty((rows, cols), dtype=object)
    out.fill(Fraction(0))
    return out


def identity(n: int) -> np.ndarray:
    out = zeros(n, n)
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def is_exact(a) -> bool:
    arr = np.asarray(a)
    if arr.dtype != object:
        return np.issubdtype(arr.dtype, np.integer) or arr.size == 0
    return all(isinstance(v, (Fraction, int)) for v in arr.flat)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
    if a.shape[0] == 0 or b.shape[1] == 0 or a.shape[1] == 0:
        return zeros(a.shape[0], b.shape[1])
    return np.dot(a, b)


def rref(a) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (rows, pivot columns)."""
    m = [[to_fraction(v) for v in row] for row in np.asarray(a, dtype=object)]
    if not m:
        return [], []
    n_rows, n_cols = len(m), len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        piv = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [vi - f * vr for vi, vr in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m[:r], pivots


def rank(a) -> int:
    arr = np.asarray(a, dtype=object)
    if arr.ndim != 2 or arr.size == 0:
        return 0
    # eliminate along the shorter side
    if arr.shape[0] > arr.shape[1]:
        arr = arr.T
    return len(rref(arr)[1])


def nullspace(a, n_cols: int | None = None) -> np.ndarray:
    """Basis of {x : a x = 0} as the columns of an object array."""
    arr = np.asarray(a, dtype=object)
    if n_cols is None:
        n_cols = arr.shape[1]
    if arr.size == 0:
        return identity(n_cols)
    rows, pivots = rref(arr)
    free = [c for c in range(n_cols) if c not in set(pivots)]
    basis = zeros(n_cols, len(free))
    for k, f in enumerate(free):
        basis[f, k] = Fraction(1)
        for row, pc in zip(rows, pivots):
            basis[pc, k] = -row[f]
    return basis


def column_basis(a) -> np.ndarray:
    """Columns spanning the column space of ``a`` (a maximal independent subset)."""
    arr = np.asarray(a, dtype=object)
    if arr.size == 0:
        return zeros(arr.shape[0] if arr.ndim == 2 else 0, 0)
    _, pivots = rref(arr)
    return as_exact(arr[:, pivots]) if pivots else zeros(arr.shape[0], 0)


def solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` exactly for full-column-rank ``a``; raises if inconsistent."""
    a = as_exact(a)
    b = as_exact(b)
    n = a.shape[1]
    if n == 0:
        if any(v != 0 for v in b.flat):
            raise ValueError("inconsistent linear system")
        return zeros(0, b.shape[1])
    aug = np.concatenate([a, b], axis=1)
    rows, pivots = rref(aug)
    if any(p >= n for p in pivots):
        raise ValueError("inconsistent linear system")
    if len(pivots) < n:
        raise ValueError("matrix is not of full column rank")
    x = zeros(n, b.shape[1])
    for row, pc in zip(rows, pivots):
        x[pc, :] = row[n:]
    return x


def det(a) -> Fraction:
    m = [[to_fraction(v) for v in row] for row in np.asarray(a, dtype=object)]
    n = len(m)
    result = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            result = -result
        result *= m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / m[c][c]
                m[i] = [vi - f * vc for vi, vc in zip(m[i], m[c])]
    return result


def to_float(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    return np.array(arr.tolist(), dtype=float).reshape(arr.shape)
