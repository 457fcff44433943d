"""Rank-1 and rank-k solutions u = f(r(x, u)) with r^A = lambda^A_i(u) x^i.

The implicit relation is solved pointwise by Newton's method on
G(u) = u - f(lambda(u) x), whose Jacobian is Phi1 = I - df/dr dr/du, with
continuation along a straight path from a seed point where the solution is
known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import linalg
from .errors import (
    AmbiguousKernelError,
    DomainError,
    InvalidInputError,
    KernelLostError,
    NoConvergenceError,
    Phi1SingularError,
    SingularMatrixError,
)
from .system import QuasilinearSystem, wave_relation_kernel
from .waves import WaveVectorFamily, central_difference_jacobian


def box_domain(bounds: Sequence) -> Callable[[np.ndarray], bool]:
    """Predicate for lo <= r_A <= hi on every component."""
    b = [(float(lo), float(hi)) for lo, hi in bounds]

    def inside(r):
        return all(lo <= v <= hi for v, (lo, hi) in zip(r, b))

    inside.bounds = b
    return inside


@dataclass(frozen=True)
class Profile:
    """Map f: R^k -> R^q from Riemann invariants to dependent variables."""

    k: int
    q: int
    fn: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Optional[Callable[[np.ndarray], bool]] = None
    name: str = "profile"

    def _check_r(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float).reshape(-1)
        if r.shape[0] != self.k:
            raise InvalidInputError(f"{self.name}: expected {self.k} invariants, got {r.shape[0]}")
        if not np.all(np.isfinite(r)):
            raise DomainError(f"{self.name}: non-finite invariants {r}")
        if self.domain is not None and not self.domain(r):
            raise DomainError(f"{self.name}: r={r} outside profile domain")
        return r

    def value(self, r) -> np.ndarray:
        r = self._check_r(r)
        with np.errstate(all="ignore"):
            v = np.asarray(self.fn(r), dtype=float).reshape(-1)
        if v.shape[0] != self.q:
            raise InvalidInputError(f"{self.name}: value has length {v.shape[0]}, expected {self.q}")
        if not np.all(np.isfinite(v)):
            raise DomainError(f"{self.name}: non-finite value at r={r}")
        return v

    def jacobian(self, r) -> np.ndarray:
        """df/dr as a q x k matrix (central differences when no analytic form is given)."""
        r = self._check_r(r)
        if self.jac is None:
            j = central_difference_jacobian(self.value, r)
        else:
            with np.errstate(all="ignore"):
                j = np.asarray(self.jac(r), dtype=float)
        j = j.reshape(self.q, self.k)
        if not np.all(np.isfinite(j)):
            raise DomainError(f"{self.name}: non-finite jacobian at r={r}")
        return j


@dataclass(frozen=True)
class ImplicitSolution:
    """The pairing (system, wave family, profile) defining u(x) through u = f(lambda(u) x).

    ``seed`` selects where continuation starts: ``"origin"`` (x = 0, u = f(0))
    or ``"surface"`` (x with its non-pivot coordinates zeroed; for a
    normalized family r there equals the pivot coordinates of x).  When that
    seed is unusable, continuation is retried from ``anchor`` if given.
    """

    system: QuasilinearSystem
    family: WaveVectorFamily
    profile: Profile
    seed: str = "origin"
    name: str = "solution"
    anchor: Optional[tuple] = None

    def __post_init__(self):
        s, f, pr = self.system, self.family, self.profile
        if not (s.p == f.p and s.q == f.q == pr.q and f.k == pr.k):
            raise InvalidInputError(
                f"inconsistent dimensions: system (p={s.p}, q={s.q}), family (k={f.k}, p={f.p}, q={f.q}), "
                f"profile (k={pr.k}, q={pr.q})"
            )
        if self.seed not in ("origin", "surface"):
            raise InvalidInputError(f"unknown seed mode {self.seed!r}")

    @property
    def k(self) -> int:
        return self.family.k

    @property
    def reference_u0(self) -> Optional[np.ndarray]:
        """f(0), or None when the origin lies outside the profile domain."""
        try:
            return self.profile.value(np.zeros(self.k))
        except DomainError:
            return None

    def residual(self, x, u) -> np.ndarray:
        x, u = np.asarray(x, dtype=float), np.asarray(u, dtype=float)
        return u - self.profile.value(self.family.at(u) @ x)

    def with_family(self, family: WaveVectorFamily) -> "ImplicitSolution":
        return ImplicitSolution(self.system, family, self.profile, self.seed, self.name, self.anchor)


@dataclass(frozen=True)
class EvalOptions:
    newton_tol: float = 1e-12
    max_newton: int = 25
    catastrophe_tol: float = 1e-8
    initial_step: float = 0.25
    min_step: float = 1e-6
    seed: Optional[str] = None


@dataclass(frozen=True)
class EvaluationResult:
    x: np.ndarray
    u: np.ndarray
    r: np.ndarray
    phi1_det: float
    newton_iters: int
    converged: bool
    substeps: int = 0
    residual_norm: float = 0.0


class _StepFailed(Exception):
    pass


def dr_du(family: WaveVectorFamily, u, x) -> np.ndarray:
    """dr^A/du^alpha = (d lambda^A_i / d u^alpha) x^i, a k x q matrix."""
    return np.einsum("Aia,i->Aa", family.derivative(u), np.asarray(x, dtype=float))


def phi_matrices(sol: ImplicitSolution, x, u):
    """(Phi1, Phi2) = (I_q - fr dr/du, I_k - dr/du fr) at (x, u)."""
    x, u = _check_xu(sol, x, u)
    r = sol.family.at(u) @ x
    fr = sol.profile.jacobian(r)
    ru = dr_du(sol.family, u, x)
    return np.eye(sol.system.q) - fr @ ru, np.eye(sol.k) - ru @ fr


def analytic_jacobian(sol: ImplicitSolution, x, u, route: str = "phi1") -> np.ndarray:
    """du/dx as a q x p matrix: Phi1^{-1} fr lambda, or fr Phi2^{-1} lambda with route='phi2'."""
    x, u = _check_xu(sol, x, u)
    lam = sol.family.at(u)
    r = lam @ x
    fr = sol.profile.jacobian(r)
    ru = dr_du(sol.family, u, x)
    try:
        if route == "phi1":
            phi1 = np.eye(sol.system.q) - fr @ ru
            return linalg.solve_linear(phi1, fr @ lam)
        if route == "phi2":
            phi2 = np.eye(sol.k) - ru @ fr
            return fr @ linalg.solve_linear(phi2, lam)
    except SingularMatrixError as exc:
        raise Phi1SingularError(f"Phi matrix singular at x={x}: {exc}", det=exc.pivot, u=u) from exc
    raise InvalidInputError(f"unknown route {route!r}")


def _check_xu(sol, x, u):
    x = linalg.as_vector(x)
    u = linalg.as_vector(u)
    if x.shape[0] != sol.system.p:
        raise InvalidInputError(f"x must have length p={sol.system.p}, got {x.shape[0]}")
    if u.shape[0] != sol.system.q:
        raise InvalidInputError(f"u must have length q={sol.system.q}, got {u.shape[0]}")
    return x, u


def _catastrophe_threshold(phi1: np.ndarray, opts: EvalOptions) -> float:
    return opts.catastrophe_tol * (1.0 + float(np.linalg.norm(phi1)))


def _newton(sol: ImplicitSolution, x: np.ndarray, u0: np.ndarray, opts: EvalOptions):
    """Newton iteration on G(u) = u - f(lambda(u) x). Returns (u, r, iterations, |G|)."""
    fam, prof = sol.family, sol.profile
    eye = np.eye(sol.system.q)
    u = u0.copy()
    iters = 0
    try:
        for it in range(opts.max_newton + 1):
            r = fam.at(u) @ x
            g = u - prof.value(r)
            gn = float(np.max(np.abs(g)))
            if gn <= opts.newton_tol:
                # one polishing step: quadratic convergence usually drops |G| to round-off
                try:
                    phi1 = eye - prof.jacobian(r) @ dr_du(fam, u, x)
                    u2 = u - linalg.solve_linear(phi1, g)
                    r2 = fam.at(u2) @ x
                    g2 = float(np.max(np.abs(u2 - prof.value(r2))))
                    if g2 < gn:
                        return u2, r2, iters + 1, g2
                except (DomainError, SingularMatrixError, InvalidInputError):
                    pass
                return u, r, iters, gn
            if it == opts.max_newton or not math.isfinite(gn) or gn > 1e8:
                break
            phi1 = eye - prof.jacobian(r) @ dr_du(fam, u, x)
            u = u - linalg.solve_linear(phi1, g)
            iters += 1
            if not np.all(np.isfinite(u)):
                break
    except (DomainError, SingularMatrixError, InvalidInputError) as exc:
        raise _StepFailed(str(exc)) from exc
    raise _StepFailed(f"Newton did not reach tol {opts.newton_tol:g} in {opts.max_newton} iterations")


def seed_point(sol: ImplicitSolution, x: np.ndarray, mode: str) -> np.ndarray:
    if mode == "origin":
        return np.zeros_like(x)
    xs = x.copy()
    xs[list(sol.family.nonpivots)] = 0.0
    return xs


def _seed_solution(sol: ImplicitSolution, xs: np.ndarray, opts: EvalOptions):
    piv = list(sol.family.pivots)
    r0 = np.zeros(sol.k) if not np.any(xs) else xs[piv]
    try:
        u0 = sol.profile.value(r0)
    except DomainError as exc:
        raise NoConvergenceError(f"seed point {xs} outside profile domain: {exc}") from exc
    if not np.any(xs):
        return u0, r0, 0
    try:
        u, r, iters, _ = _newton(sol, xs, u0, opts)
    except _StepFailed as exc:
        raise NoConvergenceError(f"could not solve at seed point {xs}: {exc}") from exc
    return u, r, iters


def evaluate(sol: ImplicitSolution, x, opts: Optional[EvalOptions] = None, guess=None) -> EvaluationResult:
    """Solve u = f(lambda(u) x) on the branch continued from the seed point.

    With ``guess`` a direct Newton solve from that value is tried first;
    it is meant for stencil neighbours of an already converged point.
    """
    opts = opts or EvalOptions()
    x = linalg.as_vector(x)
    if x.shape[0] != sol.system.p:
        raise InvalidInputError(f"x must have length p={sol.system.p}")
    eye = np.eye(sol.system.q)

    def finish(u, r, iters, steps, gn):
        phi1 = eye - sol.profile.jacobian(r) @ dr_du(sol.family, u, x)
        d = linalg.det(phi1)
        if abs(d) < _catastrophe_threshold(phi1, opts):
            raise Phi1SingularError(f"|det Phi1| = {abs(d):.3e} at x={x}", det=d, u=u)
        return EvaluationResult(x, u, r, d, iters, True, steps, gn)

    if guess is not None:
        try:
            u, r, iters, gn = _newton(sol, x, linalg.as_vector(guess), opts)
            return finish(u, r, iters, 0, gn)
        except _StepFailed:
            pass

    mode = opts.seed or sol.seed
    xs = seed_point(sol, x, mode)
    try:
        return _continue(sol, x, xs, opts, finish)
    except NoConvergenceError:
        if sol.anchor is None:
            raise
    return _continue(sol, x, linalg.as_vector(sol.anchor), opts, finish)


def _continue(sol, x, xs, opts, finish):
    eye = np.eye(sol.system.q)
    u, r, iters = _seed_solution(sol, xs, opts)
    if np.array_equal(xs, x):
        return finish(u, r, iters, 0, float(np.max(np.abs(sol.residual(x, u)))))

    direction = x - xs
    s, ds, steps = 0.0, opts.initial_step, 0
    det_sign = 1.0
    trail = []
    gn = 0.0
    last_det, last_norm = 1.0, 0.0
    while s < 1.0:
        s_try = min(1.0, s + ds)
        x_try = xs + s_try * direction
        x_cur = xs + s * direction
        try:
            du = analytic_jacobian(sol, x_cur, u) @ direction
            pred = u + (s_try - s) * du
        except (Phi1SingularError, DomainError, SingularMatrixError):
            pred = u
        try:
            u_new, r_new, it, gn = _newton(sol, x_try, pred, opts)
            phi1 = eye - sol.profile.jacobian(r_new) @ dr_du(sol.family, u_new, x_try)
            d = linalg.det(phi1)
        except (_StepFailed, DomainError) as exc:
            trail.append((s_try, ds, str(exc)))
            ds *= 0.5
            if ds < opts.min_step:
                # a stall right at a fold of the implicit map is the catastrophe itself
                if abs(last_det) <= math.sqrt(opts.min_step) * (1.0 + last_norm):
                    raise Phi1SingularError(
                        f"det Phi1 = {last_det:.3e} collapsing at s={s:.6g} on the path to x={x} "
                        "(gradient catastrophe)", det=last_det, u=u,
                    ) from None
                raise NoConvergenceError(
                    f"continuation stalled at s={s:.6g} towards x={x}: {exc}", trail
                ) from None
            continue
        if det_sign * d <= _catastrophe_threshold(phi1, opts):
            raise Phi1SingularError(
                f"det Phi1 = {d:.3e} at s={s_try:.6g} on the path to x={x} (gradient catastrophe)",
                det=d, u=u_new,
            )
        iters += it
        steps += 1
        u, r, s = u_new, r_new, s_try
        last_det, last_norm = d, float(np.linalg.norm(phi1))
        ds = min(2.0 * ds, opts.initial_step)
    return finish(u, r, iters, steps, gn)


def solution_rank(sol: ImplicitSolution, x, tol: float = linalg.RANK_TOL,
                  opts: Optional[EvalOptions] = None, u=None) -> int:
    if u is None:
        u = evaluate(sol, x, opts).u
    jac = analytic_jacobian(sol, x, u)
    rank = linalg.rank_with_tolerance(jac, tol)
    assert rank <= sol.k, "Jacobian rank exceeds the number of waves"
    return rank


def normalize_pair(family: WaveVectorFamily, profile: Profile, u_probes, tol: float = 1e-12):
    """Family with identity pivot block and the matching profile f(Pi r).

    Only a constant pivot block Pi keeps the profile a function of the new
    invariants, so Pi is compared across ``u_probes``.
    """
    blocks = [family.pivot_block(u) for u in u_probes]
    if not blocks:
        raise InvalidInputError("need at least one probe point")
    pi = blocks[0]
    if any(np.max(np.abs(b - pi)) > tol * (1.0 + np.max(np.abs(pi))) for b in blocks[1:]):
        raise InvalidInputError("pivot block depends on u; cannot re-parametrize the profile")
    if np.array_equal(pi, np.eye(family.k)):
        return family, profile
    jac = None if profile.jac is None else (lambda r: profile.jacobian(pi @ r) @ pi)
    dom = None if profile.domain is None else (lambda r: profile.domain(pi @ r))
    moved = Profile(profile.k, profile.q, lambda r: profile.value(pi @ r), jac, dom, profile.name + "/normalized")
    return family.normalized(), moved


# ---------------------------------------------------------------------------
# rank-1 profiles from the wave-relation ODE f' = gamma(f)


GammaSelector = Callable[[np.ndarray, list, Optional[np.ndarray]], np.ndarray]


def field_selector(fn: Callable[[np.ndarray], np.ndarray]) -> GammaSelector:
    """Selector returning fn(u); the engine checks the result lies in the kernel."""
    return lambda u, basis, previous: np.asarray(fn(u), dtype=float)


def continuous_kernel_selector(index: int = 0, sign: float = 1.0) -> GammaSelector:
    """Unit kernel vector, continued from the previous choice by projection."""

    def select(u, basis, previous):
        if previous is None or not np.any(previous):
            return sign * basis[index]
        proj = sum(np.dot(b, previous) * b for b in basis)
        n = np.linalg.norm(proj)
        if n == 0.0:
            raise AmbiguousKernelError("previous tangent is orthogonal to the current kernel")
        return proj / n

    return select


@dataclass(frozen=True)
class HermiteTable:
    """Nodes, values and slopes for piecewise cubic Hermite dense output."""

    nodes: np.ndarray
    values: np.ndarray
    slopes: np.ndarray = field(repr=False)

    def _locate(self, r: float):
        nodes = self.nodes
        increasing = nodes[-1] >= nodes[0]
        lo, hi = (nodes[0], nodes[-1]) if increasing else (nodes[-1], nodes[0])
        if not (lo - 1e-12 <= r <= hi + 1e-12):
            raise DomainError(f"r={r} outside integrated range [{lo}, {hi}]")
        if increasing:
            j = int(np.searchsorted(nodes, r, side="right")) - 1
        else:
            j = int(np.searchsorted(-nodes, -r, side="right")) - 1
        return min(max(j, 0), len(nodes) - 2)

    def __call__(self, r: float, derivative: bool = False) -> np.ndarray:
        j = self._locate(r)
        r0, r1 = self.nodes[j], self.nodes[j + 1]
        h = r1 - r0
        s = (r - r0) / h
        y0, y1 = self.values[j], self.values[j + 1]
        m0, m1 = self.slopes[j] * h, self.slopes[j + 1] * h
        if derivative:
            h00, h10, h01, h11 = 6 * s * s - 6 * s, 3 * s * s - 4 * s + 1, -6 * s * s + 6 * s, 3 * s * s - 2 * s
            return (h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1) / h
        h00, h10 = 2 * s ** 3 - 3 * s * s + 1, s ** 3 - 2 * s * s + s
        h01, h11 = -2 * s ** 3 + 3 * s * s, s ** 3 - s * s
        return h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1


def integrate_rank1_profile(sys: QuasilinearSystem, lambda_field, f0, r_span, step: float,
                            gamma_selector: GammaSelector, tol: float = linalg.RANK_TOL,
                            allow_kernel_jumps: bool = False, kernel_check: float = 1e-8) -> Profile:
    """Classical fourth-order Runge-Kutta integration of f'(r) = gamma(f(r)), f(r_span[0]) = f0.

    ``lambda_field`` maps u to a single wave vector (length p) or is a
    one-row WaveVectorFamily.  At every stage gamma is taken from the kernel
    of the characteristic matrix through ``gamma_selector``.
    """
    if isinstance(lambda_field, WaveVectorFamily):
        if lambda_field.k != 1:
            raise InvalidInputError("rank-1 integration needs a single wave vector")
        fam = lambda_field
        lam_of = lambda u: fam.at(u)[0]
    else:
        lam_of = lambda u: np.asarray(lambda_field(u), dtype=float).reshape(-1)
    f0 = sys.check_u(f0)
    r0, r1 = float(r_span[0]), float(r_span[1])
    if not step > 0 or r0 == r1:
        raise InvalidInputError("need step > 0 and a non-degenerate r_span")
    n = max(1, int(round(abs(r1 - r0) / step)))
    h = (r1 - r0) / n
    state = {"dim": None, "prev": None}

    def gamma(u, r):
        basis = wave_relation_kernel(sys, u, lam_of(u), tol)
        if not basis:
            raise KernelLostError(f"wave-relation kernel empty at r={r}", r=r)
        if state["dim"] is None:
            state["dim"] = len(basis)
        elif len(basis) != state["dim"] and not allow_kernel_jumps:
            raise AmbiguousKernelError(
                f"kernel dimension changed from {state['dim']} to {len(basis)} at r={r}", r=r
            )
        g = np.asarray(gamma_selector(u, basis, state["prev"]), dtype=float).reshape(-1)
        proj = sum(np.dot(b, g) * b for b in basis)
        if np.max(np.abs(g - proj)) > kernel_check * (1.0 + np.max(np.abs(g))):
            raise InvalidInputError(f"selector returned a vector outside the kernel at r={r}")
        return g

    nodes = r0 + h * np.arange(n + 1)
    nodes[-1] = r1
    values = np.empty((n + 1, sys.q))
    slopes = np.empty((n + 1, sys.q))
    f = f0.copy()
    values[0] = f
    for j in range(n):
        r = nodes[j]
        k1 = gamma(f, r)
        state["prev"] = k1
        slopes[j] = k1
        k2 = gamma(f + 0.5 * h * k1, r + 0.5 * h)
        k3 = gamma(f + 0.5 * h * k2, r + 0.5 * h)
        k4 = gamma(f + h * k3, r + h)
        f = f + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        values[j + 1] = f
    slopes[n] = gamma(f, nodes[n])
    table = HermiteTable(nodes, values, slopes)
    lo, hi = min(r0, r1), max(r0, r1)
    return Profile(
        1, sys.q,
        lambda r: table(float(r[0])),
        lambda r: table(float(r[0]), derivative=True).reshape(sys.q, 1),
        box_domain([(lo, hi)]),
        name="rank1_integrated",
    )


def profile_table(profile: Profile) -> Optional[HermiteTable]:
    """The Hermite table behind an integrated profile, if any."""
    fn = profile.fn
    for cell in getattr(fn, "__closure__", None) or ():
        if isinstance(cell.cell_contents, HermiteTable):
            return cell.cell_contents
    return None
