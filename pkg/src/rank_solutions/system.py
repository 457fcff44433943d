"""Quasilinear first-order systems and their pointwise characteristic algebra.

A system with ``l`` equations, ``p`` independent and ``q`` dependent
variables is stored through its coefficient tensor ``coeff(u)`` of shape
``(l, p, q)``; entry ``[mu, i, alpha]`` multiplies ``du^alpha/dx^i`` in
equation ``mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import DomainError, InvalidInputError


@dataclass(frozen=True)
class QuasilinearSystem:
    l: int
    p: int
    q: int
    coeff: Callable[[np.ndarray], np.ndarray]
    name: str = "system"
    variable_names: tuple = ()
    u_bounds: Optional[tuple] = None  # per-component (lo, hi); None = unbounded

    def __post_init__(self):
        if self.l < 1 or self.q < 1 or self.p < 2:
            raise InvalidInputError(f"bad dimensions l={self.l} p={self.p} q={self.q}")
        if not self.variable_names:
            names = tuple(f"x{i + 1}" for i in range(self.p)) + tuple(
                f"u{a + 1}" for a in range(self.q)
            )
            object.__setattr__(self, "variable_names", names)
        if len(self.variable_names) != self.p + self.q:
            raise InvalidInputError("variable_names must have p + q labels")

    @property
    def independent_names(self) -> tuple:
        return tuple(self.variable_names[: self.p])

    @property
    def dependent_names(self) -> tuple:
        return tuple(self.variable_names[self.p:])

    def check_u(self, u) -> np.ndarray:
        u = linalg.as_vector(u)
        if u.shape[0] != self.q:
            raise InvalidInputError(f"{self.name}: expected {self.q} dependent values, got {u.shape[0]}")
        if self.u_bounds is not None:
            for a, (lo, hi) in enumerate(self.u_bounds):
                if not (lo <= u[a] <= hi):
                    raise DomainError(f"{self.name}: u[{a}]={u[a]} outside [{lo}, {hi}]")
        return u

    def coefficients(self, u) -> np.ndarray:
        """The tensor Delta(u), validated for shape and finiteness."""
        u = self.check_u(u)
        d = np.asarray(self.coeff(u), dtype=float)
        if d.shape != (self.l, self.p, self.q):
            raise InvalidInputError(
                f"{self.name}: coeff returned shape {d.shape}, expected {(self.l, self.p, self.q)}"
            )
        if not np.all(np.isfinite(d)):
            raise DomainError(f"{self.name}: non-finite coefficients at u={u}")
        return d

    def residual_from_gradient(self, u, grad) -> np.ndarray:
        """sum_{i,alpha} Delta[mu,i,alpha](u) grad[alpha,i] for a q x p gradient."""
        d = self.coefficients(u)
        grad = np.asarray(grad, dtype=float)
        return np.einsum("mia,ai->m", d, grad)


@dataclass(frozen=True)
class CharacteristicMatrix:
    entries: np.ndarray
    at_u: np.ndarray
    lam: np.ndarray = field(repr=False)


def _check_lambda(sys: QuasilinearSystem, lam) -> np.ndarray:
    lam = linalg.as_vector(lam)
    if lam.shape[0] != sys.p:
        raise InvalidInputError(f"wave vector must have length p={sys.p}, got {lam.shape[0]}")
    return lam


def characteristic_matrix(sys: QuasilinearSystem, u, lam) -> CharacteristicMatrix:
    u = sys.check_u(u)
    lam = _check_lambda(sys, lam)
    m = np.einsum("mia,i->ma", sys.coefficients(u), lam)
    return CharacteristicMatrix(m, u, lam)


def wave_relation_kernel(sys, u, lam, tol: float = linalg.RANK_TOL) -> list:
    """Orthonormal basis of admissible profile tangents gamma for the wave vector ``lam``."""
    return linalg.null_space(characteristic_matrix(sys, u, lam).entries, tol)


def is_rank_deficient(sys, u, lam, tol: float = linalg.RANK_TOL) -> bool:
    cm = characteristic_matrix(sys, u, lam).entries
    return linalg.rank_with_tolerance(cm, tol) < sys.l


def solve_wavevector_for_profile(sys, f_value, f_prime, tol: float = linalg.RANK_TOL) -> list:
    """Basis of wave vectors lam with sum_i M[mu,i] lam_i = 0, M = Delta(f) . f'."""
    u = sys.check_u(f_value)
    fp = linalg.as_vector(f_prime)
    if fp.shape[0] != sys.q:
        raise InvalidInputError(f"f_prime must have length q={sys.q}")
    m = np.einsum("mia,a->mi", sys.coefficients(u), fp)
    return linalg.null_space(m, tol)


def _cubic_real_roots(b: float, c: float, d: float, tol: float):
    """Real roots of x^3 + b x^2 + c x + d, or None when two are complex."""
    disc = 18 * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * c ** 3 - 27 * d * d
    scale = max(1.0, abs(b), abs(c), abs(d)) ** 4
    if disc < -tol * scale:
        return None
    # depressed cubic y^3 + P y + Q, x = y - b/3; three real roots force P <= 0
    P = c - b * b / 3.0
    Q = 2 * b ** 3 / 27.0 - b * c / 3.0 + d
    if P >= -tol * max(1.0, b * b):
        y = -math.copysign(abs(Q) ** (1.0 / 3.0), Q)
        return [y - b / 3.0] * 3
    m = 2.0 * math.sqrt(-P / 3.0)
    arg = max(-1.0, min(1.0, 3.0 * Q / (P * m)))
    theta = math.acos(arg) / 3.0
    return sorted(m * math.cos(theta - 2.0 * math.pi * j / 3.0) - b / 3.0 for j in range(3))


def characteristic_roots(m, tol: float = 1e-12):
    """Eigenvalues of a square matrix of size <= 3 by closed-form polynomial roots.

    Returns the sorted real eigenvalues, or None when a complex pair occurs.
    """
    a = linalg.as_matrix(m)
    n = a.shape[0]
    if a.shape[1] != n or n > 3:
        raise InvalidInputError("closed-form roots implemented for square size <= 3 only")
    coeffs = linalg.charpoly_coefficients(-a)  # det(x I - a) = x^n + ...
    if n == 1:
        return [-coeffs[0]]
    if n == 2:
        p1, p0 = coeffs[1], coeffs[0]
        disc = p1 * p1 - 4 * p0
        if disc < -tol * max(1.0, p1 * p1):
            return None
        s = math.sqrt(disc) if disc > 0 else 0.0
        return sorted([(-p1 - s) / 2.0, (-p1 + s) / 2.0])
    return _cubic_real_roots(coeffs[2], coeffs[1], coeffs[0], tol)


def has_real_eigenvalues(sys, u, lam, tol: float = 1e-12) -> bool:
    """Pointwise check that Delta^i lam_i has only real eigenvalues (l = q <= 3)."""
    if sys.l != sys.q:
        raise InvalidInputError("eigenvalue check needs a square characteristic matrix (l = q)")
    return characteristic_roots(characteristic_matrix(sys, u, lam).entries, tol) is not None


# ---------------------------------------------------------------------------
# standard systems; independent variables ordered (t, x^1, ..., x^n)


def scalar_evolution_system(a: Callable, n: int, q: int, name="scalar_evolution") -> QuasilinearSystem:
    """u_t + a^1(u) u_1 + ... + a^n(u) u_n = 0, one equation per component."""

    def coeff(u):
        av = np.asarray(a(u), dtype=float).reshape(n)
        d = np.zeros((q, n + 1, q))
        for alpha in range(q):
            d[alpha, 0, alpha] = 1.0
            d[alpha, 1:, alpha] = av
        return d

    names = ("t",) + _space_names(n) + tuple(f"u{j + 1}" for j in range(q))
    return QuasilinearSystem(q, n + 1, q, coeff, name, names)


def pressureless_system(n: int) -> QuasilinearSystem:
    """u_t + (u . grad) u = 0 in n space dimensions."""
    return scalar_evolution_system(lambda u: u, n, n, name=f"pressureless_{n}d")


def euler_incompressible_system(n: int) -> QuasilinearSystem:
    """u_t + (u . grad) u = 0 together with div u = 0."""

    def coeff(u):
        d = np.zeros((n + 1, n + 1, n))
        for i in range(n):
            d[i, 0, i] = 1.0
            d[i, 1:, i] = u
            d[n, 1 + i, i] = 1.0
        return d

    names = ("t",) + _space_names(n) + tuple(f"u{j + 1}" for j in range(n))
    return QuasilinearSystem(n + 1, n + 1, n, coeff, f"euler_incompressible_{n}d", names)


def isentropic_system(n: int, k: float) -> QuasilinearSystem:
    """Isentropic flow with sound speed depending on t only.

    Unknowns (u^1..u^n, a); equations: momentum (n), continuity (1), a_{x^j} = 0 (n).
    """
    if k == 0:
        raise InvalidInputError("k must be nonzero")

    def coeff(w):
        u, a = w[:n], w[n]
        d = np.zeros((2 * n + 1, n + 1, n + 1))
        for i in range(n):
            d[i, 0, i] = 1.0
            d[i, 1:, i] = u
            d[i, 1 + i, n] = k * a
        d[n, 0, n] = 1.0
        d[n, 1:, n] = u
        for j in range(n):
            d[n, 1 + j, j] = a / k
            d[n + 1 + j, 1 + j, n] = 1.0
        return d

    names = ("t",) + _space_names(n) + tuple(f"u{j + 1}" for j in range(n)) + ("a",)
    return QuasilinearSystem(2 * n + 1, n + 1, n + 1, coeff, f"isentropic_{n}d", names)


def hydro_2plus1_system(A11_1, A12_1, A21_1, A22_1) -> QuasilinearSystem:
    """u^i_t + u^j u^i_j plus A terms acting on (u1_x - u2_y) and u1_y; coefficients are callables of u."""

    def coeff(u):
        a11, a12, a21, a22 = (float(f(u)) for f in (A11_1, A12_1, A21_1, A22_1))
        d = np.zeros((2, 3, 2))
        d[0, 0, 0] = 1.0
        d[0, 1, 0] = u[0] + a11
        d[0, 2, 0] = u[1] + a12
        d[0, 2, 1] = -a11
        d[1, 0, 1] = 1.0
        d[1, 1, 1] = u[0]
        d[1, 2, 1] = u[1] - a21
        d[1, 1, 0] = a21
        d[1, 2, 0] = a22
        return d

    return QuasilinearSystem(2, 3, 2, coeff, "hydro_2plus1", ("t", "x", "y", "u1", "u2"))


def hydro_bc_system(b, c) -> QuasilinearSystem:
    """Pressureless 2-D transport with extra b(u) u1_y and c(u) u1_y terms."""

    def coeff(u):
        d = np.zeros((2, 3, 2))
        for i in range(2):
            d[i, 0, i] = 1.0
            d[i, 1, i] = u[0]
            d[i, 2, i] = u[1]
        d[0, 2, 0] += float(b(u))
        d[1, 2, 0] += float(c(u))
        return d

    return QuasilinearSystem(2, 3, 2, coeff, "hydro_bc", ("t", "x", "y", "u1", "u2"))


def _space_names(n: int) -> tuple:
    if n <= 3:
        return ("x", "y", "z")[:n]
    return tuple(f"x{i + 1}" for i in range(n))


__all__ = [
    "QuasilinearSystem",
    "CharacteristicMatrix",
    "characteristic_matrix",
    "wave_relation_kernel",
    "is_rank_deficient",
    "solve_wavevector_for_profile",
    "characteristic_roots",
    "has_real_eigenvalues",
    "scalar_evolution_system",
    "pressureless_system",
    "euler_incompressible_system",
    "isentropic_system",
    "hydro_2plus1_system",
    "hydro_bc_system",
]
