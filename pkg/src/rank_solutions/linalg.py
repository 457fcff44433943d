"""Small dense real linear algebra.

Matrices are plain ``numpy`` float arrays; the elimination routines are
written out explicitly because the rank and kernel contracts depend on the
pivot threshold, which has to be the same in every routine.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, SingularMatrixError

RANK_TOL = 1e-10
SOLVE_TOL = 1e-12


def as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise InvalidInputError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return a


def as_vector(v) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("vector has non-finite entries")
    return a


def _square(m) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"square matrix required, got shape {a.shape}")
    return a


def row_echelon(m, tol: float = RANK_TOL):
    """Reduced row echelon form with partial pivoting.

    Entries whose magnitude is at most ``tol * max|m|`` are treated as zero.
    Returns ``(R, pivot_columns)``.
    """
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    a = as_matrix(m).copy()
    rows, cols = a.shape
    scale = np.max(np.abs(a)) if a.size else 0.0
    pivots: list[int] = []
    if scale == 0.0:
        return np.zeros_like(a), pivots
    thresh = tol * scale
    row = 0
    for col in range(cols):
        if row >= rows:
            break
        best = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[best, col]) <= thresh:
            a[row:, col] = 0.0
            continue
        if best != row:
            a[[row, best]] = a[[best, row]]
        a[row] /= a[row, col]
        for other in range(rows):
            if other != row and a[other, col] != 0.0:
                a[other] -= a[other, col] * a[row]
        a[row, col] = 1.0
        pivots.append(col)
        row += 1
    a[row:] = 0.0
    return a, pivots


def rank_with_tolerance(m, tol: float = RANK_TOL) -> int:
    _, pivots = row_echelon(m, tol)
    return len(pivots)


def orthonormalize(vectors) -> list[np.ndarray]:
    """Modified Gram-Schmidt, applied twice for stability."""
    out: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for _ in range(2):
            for b in out:
                w = w - np.dot(b, w) * b
        n = np.linalg.norm(w)
        if n > 0.0:
            out.append(w / n)
    return out


def null_space(m, tol: float = RANK_TOL) -> list[np.ndarray]:
    """Orthonormal kernel basis; one vector per free column of the echelon form."""
    a = as_matrix(m)
    r, pivots = row_echelon(a, tol)
    cols = a.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    raw = []
    for f in free:
        v = np.zeros(cols)
        v[f] = 1.0
        for i, pc in enumerate(pivots):
            v[pc] = -r[i, f]
        raw.append(v)
    return orthonormalize(raw)


def _lu(a: np.ndarray):
    """In-place style partial-pivot LU. Returns (LU, perm, sign, min_pivot)."""
    lu = a.copy()
    n = lu.shape[0]
    perm = list(range(n))
    sign = 1.0
    min_pivot = np.inf
    for k in range(n):
        best = k + int(np.argmax(np.abs(lu[k:, k])))
        piv = lu[best, k]
        min_pivot = min(min_pivot, abs(piv))
        if best != k:
            lu[[k, best]] = lu[[best, k]]
            perm[k], perm[best] = perm[best], perm[k]
            sign = -sign
        if piv == 0.0:
            continue
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, sign, (0.0 if n == 0 else min_pivot)


def det(m) -> float:
    a = _square(m)
    if a.shape[0] == 0:
        return 1.0
    lu, _, sign, _ = _lu(a)
    return float(sign * np.prod(np.diag(lu)))


def solve_linear(m, b, tol: float = SOLVE_TOL) -> np.ndarray:
    """Solve ``m v = b`` by Gaussian elimination with partial pivoting.

    Raises SingularMatrixError when a pivot is at most ``tol * max|m|``.
    """
    a = _square(m)
    rhs = np.array(b, dtype=float)
    if rhs.shape[0] != a.shape[0]:
        raise InvalidInputError(f"rhs length {rhs.shape[0]} does not match {a.shape}")
    if not np.all(np.isfinite(rhs)):
        raise InvalidInputError("rhs has non-finite entries")
    n = a.shape[0]
    scale = np.max(np.abs(a)) if n else 0.0
    lu, perm, _, min_pivot = _lu(a)
    if n and (scale == 0.0 or min_pivot <= tol * scale):
        raise SingularMatrixError(f"pivot {min_pivot:.3e} below tolerance", pivot=min_pivot)
    y = rhs[perm].copy()
    for i in range(n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
    return y


def inverse(m, tol: float = SOLVE_TOL) -> np.ndarray:
    a = _square(m)
    return solve_linear(a, np.eye(a.shape[0]), tol)


def trace(m) -> float:
    return float(np.trace(_square(m)))


def matmul(a, b) -> np.ndarray:
    x, y = as_matrix(a), as_matrix(b)
    if x.shape[1] != y.shape[0]:
        raise InvalidInputError(f"cannot multiply {x.shape} by {y.shape}")
    return x @ y


def charpoly_coefficients(m) -> np.ndarray:
    """Coefficients ``[p_0, ..., p_{n-1}]`` of det(eps*I + m) = eps^n + ... + p_0.

    Faddeev-LeVerrier recursion applied to ``-m``.
    """
    a = -_square(m)
    n = a.shape[0]
    c = np.zeros(n + 1)
    c[n] = 1.0
    mk = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        mk = a @ mk + c[n - k + 1] * eye
        c[n - k] = -np.trace(a @ mk) / k
    return c[:n]
