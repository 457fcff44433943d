"""Wave-vector families, Riemann invariants, orthogonal frames and trace conditions.

Independent-variable slots are split into ``pivots`` (one per wave, the
``x^{i_A}`` of a normalized family) and the remaining ``nonpivots``.  A
family is *normalized* when its pivot block is the identity, i.e. each row
reads ``dx^{i_A} + lambda^A_{i_a} dx^{i_a}``; the trace conditions assume
that form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import linalg
from .errors import InvalidInputError, SingularMatrixError, SingularPiError
from .system import QuasilinearSystem

FD_REL_STEP = 1e-6


def central_difference_jacobian(func: Callable, u: np.ndarray, rel_step: float = FD_REL_STEP) -> np.ndarray:
    """d func / d u with per-component step rel_step * (1 + |u_a|); last axis is the u index."""
    u = np.asarray(u, dtype=float)
    cols = []
    for a in range(u.shape[0]):
        h = rel_step * (1.0 + abs(u[a]))
        up, um = u.copy(), u.copy()
        up[a] += h
        um[a] -= h
        cols.append((np.asarray(func(up), dtype=float) - np.asarray(func(um), dtype=float)) / (2.0 * h))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class WaveVectorFamily:
    """k wave covectors lambda^A(u) in R^p, stored as the rows of a k x p matrix."""

    k: int
    p: int
    q: int
    lambdas: Callable[[np.ndarray], np.ndarray]
    dlambdas: Optional[Callable[[np.ndarray], np.ndarray]] = None
    pivots: Optional[tuple] = None
    name: str = "family"

    def __post_init__(self):
        if not 1 <= self.k < self.p:
            raise InvalidInputError(f"need 1 <= k < p, got k={self.k}, p={self.p}")
        piv = tuple(range(self.k)) if self.pivots is None else tuple(int(i) for i in self.pivots)
        if len(piv) != self.k or len(set(piv)) != self.k or not all(0 <= i < self.p for i in piv):
            raise InvalidInputError(f"pivots {piv} are not k={self.k} distinct slots in 0..{self.p - 1}")
        object.__setattr__(self, "pivots", piv)

    @property
    def nonpivots(self) -> tuple:
        return tuple(i for i in range(self.p) if i not in self.pivots)

    def at(self, u) -> np.ndarray:
        lam = np.asarray(self.lambdas(np.asarray(u, dtype=float)), dtype=float)
        if lam.shape != (self.k, self.p):
            raise InvalidInputError(f"{self.name}: lambdas returned {lam.shape}, expected {(self.k, self.p)}")
        if not np.all(np.isfinite(lam)):
            raise InvalidInputError(f"{self.name}: non-finite wave vectors at u={u}")
        return lam

    def derivative(self, u) -> np.ndarray:
        """d lambda^A_i / d u^alpha as a (k, p, q) array."""
        u = np.asarray(u, dtype=float)
        if self.dlambdas is not None:
            d = np.asarray(self.dlambdas(u), dtype=float)
            if d.shape != (self.k, self.p, self.q):
                raise InvalidInputError(f"{self.name}: dlambdas returned {d.shape}")
            return d
        return central_difference_jacobian(self.at, u)

    def pivot_block(self, u) -> np.ndarray:
        return self.at(u)[:, list(self.pivots)]

    def normalized(self) -> "WaveVectorFamily":
        """Equivalent family with identity pivot block (row operations by Pi^{-1})."""
        base = self
        piv = list(self.pivots)

        def lam(u):
            m = base.at(u)
            return _solve_pi(m[:, piv], m)

        def dlam(u):
            m = base.at(u)
            n = _solve_pi(m[:, piv], m)
            dm = base.derivative(u)
            out = np.empty_like(dm)
            for a in range(base.q):
                out[:, :, a] = _solve_pi(m[:, piv], dm[:, :, a] - dm[:, piv, a] @ n)
            return out

        return WaveVectorFamily(self.k, self.p, self.q, lam, dlam, self.pivots, self.name + "/normalized")

    def scaled(self, factors: Sequence[float]) -> "WaveVectorFamily":
        c = np.asarray(factors, dtype=float).reshape(self.k, 1)
        base = self
        dl = None if self.dlambdas is None else (lambda u: c[:, :, None] * base.derivative(u))
        return WaveVectorFamily(self.k, self.p, self.q, lambda u: c * base.at(u), dl, self.pivots,
                                self.name + "/scaled")

    def perturbed(self, delta: float, row: int = 0, slot: Optional[int] = None) -> "WaveVectorFamily":
        """Negative-control copy: adds a constant to one entry (default: first non-pivot slot of row 0)."""
        slot = self.nonpivots[0] if slot is None else slot
        base = self

        def lam(u):
            m = base.at(u).copy()
            m[row, slot] += delta
            return m

        dl = None if self.dlambdas is None else base.derivative
        return WaveVectorFamily(self.k, self.p, self.q, lam, dl, self.pivots, self.name + f"/perturbed{delta:g}")


def _solve_pi(pi: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return linalg.solve_linear(pi, rhs)
    except SingularMatrixError as exc:
        raise SingularPiError(f"pivot block singular: {exc}", pivot=exc.pivot) from exc


def constant_family(rows, pivots=None, q: int = 1, name="constant") -> WaveVectorFamily:
    m = linalg.as_matrix(rows)
    k, p = m.shape
    return WaveVectorFamily(k, p, q, lambda u: m.copy(), lambda u: np.zeros((k, p, q)), pivots, name)


def transport_family(a: Callable, n: int, q: int, da: Optional[Callable] = None,
                     name="transport") -> WaveVectorFamily:
    """lambda^A = (-a^A(u), e_A) in (t, x^1..x^n) ordering, pivots on the space slots."""

    def lam(u):
        m = np.zeros((n, n + 1))
        m[:, 0] = -np.asarray(a(u), dtype=float).reshape(n)
        m[:, 1:] = np.eye(n)
        return m

    def dlam(u):
        d = np.zeros((n, n + 1, q))
        d[:, 0, :] = -np.asarray(da(u), dtype=float).reshape(n, q)
        return d

    return WaveVectorFamily(n, n + 1, q, lam, None if da is None else dlam, tuple(range(1, n + 1)), name)


def velocity_family(n: int, q: Optional[int] = None) -> WaveVectorFamily:
    """Riemann invariants r^A = x^A - u^A t, i.e. a^A(u) = u^A."""
    q = n if q is None else q
    da = np.zeros((n, q))
    da[:, :n] = np.eye(n)
    return transport_family(lambda u: np.asarray(u)[:n], n, q, lambda u: da, name=f"velocity_{n}d")


def riemann_invariants(fam: WaveVectorFamily, u, x) -> np.ndarray:
    x = linalg.as_vector(x)
    u = linalg.as_vector(u)
    if x.shape[0] != fam.p or u.shape[0] != fam.q:
        raise InvalidInputError(f"dimension mismatch: x has {x.shape[0]} (p={fam.p}), u has {u.shape[0]} (q={fam.q})")
    return fam.at(u) @ x


def _split(fam: WaveVectorFamily, pivots) -> tuple:
    piv = fam.pivots if pivots is None else tuple(pivots)
    if len(piv) != fam.k or len(set(piv)) != fam.k or not all(0 <= i < fam.p for i in piv):
        raise InvalidInputError(f"coordinate split {piv} inconsistent with k={fam.k}, p={fam.p}")
    return piv, tuple(i for i in range(fam.p) if i not in piv)


def xi_from_pi(fam: WaveVectorFamily, u, tol: float = linalg.SOLVE_TOL, pivots=None) -> np.ndarray:
    """Vectors xi_a (rows, shape (p-k, p)) annihilated by every wave covector.

    Row a has 1 in the a-th non-pivot slot and -(Pi^{-1} lambda_{nonpivot a}) in the pivot slots.
    """
    piv, nonpiv = _split(fam, pivots)
    lam = fam.at(u)
    try:
        c = linalg.solve_linear(lam[:, list(piv)], lam[:, list(nonpiv)], tol)
    except SingularMatrixError as exc:
        raise SingularPiError(f"Pi singular at u={np.asarray(u)}: {exc}", pivot=exc.pivot) from exc
    xi = np.zeros((len(nonpiv), fam.p))
    for a, ia in enumerate(nonpiv):
        xi[a, ia] = 1.0
        xi[a, list(piv)] = -c[:, a]
    return xi


@dataclass(frozen=True)
class OrthogonalFrame:
    """Callable u -> xi rows built from the pivot block of ``family``."""

    family: WaveVectorFamily
    pivots: Optional[tuple] = None
    tol: float = linalg.SOLVE_TOL

    @property
    def size(self) -> int:
        return self.family.p - self.family.k

    def __call__(self, u) -> np.ndarray:
        return xi_from_pi(self.family, u, self.tol, self.pivots)


@dataclass(frozen=True)
class OrthogonalityReport:
    max_violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


def check_orthogonality(fam, frame, u_samples, tol: float = 1e-12) -> OrthogonalityReport:
    worst = 0.0
    for u in u_samples:
        worst = max(worst, float(np.max(np.abs(fam.at(u) @ frame(u).T))))
    return OrthogonalityReport(worst, tol)


def eta_matrices(fam: WaveVectorFamily, u, coordinate_split=None) -> list:
    """One k x q matrix d lambda^A_{i_a} / d u^alpha per non-pivot slot i_a."""
    _, nonpiv = _split(fam, coordinate_split)
    d = fam.derivative(u)
    return [d[:, ia, :].copy() for ia in nonpiv]


@dataclass(frozen=True)
class TraceResidual:
    """Residuals of one trace condition; ``values`` maps a key to a residual."""

    values: dict
    tol: float

    @property
    def max_abs(self) -> float:
        return max((abs(v) for v in self.values.values()), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tol

    def as_array(self) -> np.ndarray:
        return np.array([self.values[k] for k in sorted(self.values)])


def _profile_data(sys: QuasilinearSystem, fam: WaveVectorFamily, profile, r):
    r = linalg.as_vector(r)
    if r.shape[0] != fam.k:
        raise InvalidInputError(f"r must have length k={fam.k}")
    if sys.p != fam.p or sys.q != fam.q:
        raise InvalidInputError("system and family dimensions differ")
    u = profile.value(r)
    fr = np.asarray(profile.jacobian(r), dtype=float).reshape(fam.q, fam.k)
    return u, sys.coefficients(u), fr, fam.at(u)


def _trace(delta_mu: np.ndarray, chain: np.ndarray, lam: np.ndarray) -> float:
    # Tr(Delta^mu . chain . lambda) with Delta^mu stored p x q
    return float(np.einsum("ia,aA,Ai->", delta_mu, chain, lam))


def trace_condition_initial(sys, fam, profile, r, tol: float = 1e-8) -> TraceResidual:
    """Tr(Delta^mu  df/dr  lambda) at u = f(r), one residual per equation."""
    _, d, fr, lam = _profile_data(sys, fam, profile, r)
    return TraceResidual({(mu,): _trace(d[mu], fr, lam) for mu in range(sys.l)}, tol)


def trace_condition_symmetrized(sys, fam, profile, r, s_max: Optional[int] = None,
                                tol: float = 1e-8, pivots=None) -> TraceResidual:
    """Symmetrized conditions Tr(Delta^mu fr eta_(a1 fr ... eta_as) fr lambda) for s = 1..s_max.

    Keys are ``(mu, (a1, ..., as))`` with a non-decreasing multiset of
    non-pivot indices; each value is the average over its permutations.
    """
    bound = max(fam.q - 1, fam.k - 1)
    if s_max is None:
        s_max = min(fam.q - 1, fam.k - 1)
    if s_max > bound:
        raise InvalidInputError(f"s_max={s_max} exceeds max(q-1, k-1)={bound}")
    u, d, fr, lam = _profile_data(sys, fam, profile, r)
    etas = eta_matrices(fam, u, pivots)
    values = {}
    for s in range(1, s_max + 1):
        for combo in itertools.combinations_with_replacement(range(len(etas)), s):
            perms = list(itertools.permutations(combo))
            acc = np.zeros((fam.q, fam.k))
            for perm in perms:
                chain = fr
                for a in perm:
                    chain = chain @ etas[a] @ fr
                acc += chain
            acc /= len(perms)
            for mu in range(sys.l):
                values[(mu, combo)] = _trace(d[mu], acc, lam)
    return TraceResidual(values, tol)


def rank2_q2_condition(sys, fam, u, tol: float = 1e-10, pivots=None) -> TraceResidual:
    """Profile-free condition Tr[Delta^mu (eta_a - I Tr eta_a) lambda] for q = k = 2."""
    if fam.q != 2 or fam.k != 2 or sys.q != 2:
        raise InvalidInputError("rank-2 reduction requires q = 2 and k = 2")
    u = sys.check_u(u)
    d = sys.coefficients(u)
    lam = fam.at(u)
    values = {}
    for a, eta in enumerate(eta_matrices(fam, u, pivots)):
        n = eta - np.eye(2) * np.trace(eta)
        for mu in range(sys.l):
            values[(mu, a)] = _trace(d[mu], n, lam)
    return TraceResidual(values, tol)


def reduced_block(fam: WaveVectorFamily, u, pivots=None) -> np.ndarray:
    """Pi^{-1} (lambda^B_i) over the non-pivot slots, a k x (p-k) matrix."""
    piv, nonpiv = _split(fam, pivots)
    lam = fam.at(u)
    return _solve_pi(lam[:, list(piv)], lam[:, list(nonpiv)])


def check_reduced_independence(fam, u_samples, tol: float = 1e-10, pivots=None) -> bool:
    """True when Pi^{-1} lambda_nonpivot is the same constant matrix at every sample."""
    blocks = [reduced_block(fam, u, pivots) for u in u_samples]
    if not blocks:
        raise InvalidInputError("need at least one sample")
    return all(float(np.max(np.abs(b - blocks[0]))) <= tol for b in blocks[1:])
