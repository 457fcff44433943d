"""Built-in systems with their wave families, profiles and closed-form fields.

Every entry carries one or more registered solutions together with the
grid, invariant box and tolerances they are expected to verify on.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .engine import EvalOptions, ImplicitSolution, Profile, evaluate
from .errors import (
    DomainError,
    InconsistentProfileError,
    InvalidInputError,
    NoConvergenceError,
    NotFoundError,
    SingularMatrixError,
)
from .system import (
    QuasilinearSystem,
    euler_incompressible_system,
    hydro_2plus1_system,
    hydro_bc_system,
    isentropic_system,
    pressureless_system,
    scalar_evolution_system,
)
from .verification import GridSpec
from .waves import WaveVectorFamily, transport_family, velocity_family

DEFAULT_TOLERANCES = {"residual": 1e-6, "constraint": 1e-6, "divergence": 1e-7, "jacobian": 1e-6, "trace": 1e-8}


@dataclass(frozen=True)
class RegisteredSolution:
    """An implicit solution plus everything needed to verify it."""

    name: str
    implicit: ImplicitSolution
    grid: GridSpec
    r_box: tuple
    full_field: Optional[Callable] = None
    full_system: Optional[QuasilinearSystem] = None
    closed_form: Optional[Callable] = None
    divergence: bool = False
    perturb_row: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    trace_system: Optional[QuasilinearSystem] = None

    @property
    def system(self) -> QuasilinearSystem:
        return self.implicit.system

    @property
    def family(self) -> WaveVectorFamily:
        return self.implicit.family

    @property
    def dims(self) -> tuple:
        s = self.full_system or self.system
        return (s.l, s.p, s.q, self.implicit.k)


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    title: str
    params: dict
    solutions: dict
    notes: str = ""
    checks: dict = field(default_factory=dict)

    @property
    def default(self) -> RegisteredSolution:
        return next(iter(self.solutions.values()))

    @property
    def system(self) -> QuasilinearSystem:
        return self.default.full_system or self.default.system

    @property
    def families(self) -> dict:
        return {name: s.family for name, s in self.solutions.items()}

    def solution(self, name: Optional[str] = None) -> RegisteredSolution:
        if name is None:
            return self.default
        if name not in self.solutions:
            raise NotFoundError(f"entry {self.id!r} has no solution {name!r}; choose from {list(self.solutions)}")
        return self.solutions[name]


def _pow(base: float, e: float) -> float:
    """Real power; negative bases need integer exponents and zero needs e >= 0."""
    if base < 0 and float(e) != int(e):
        raise DomainError(f"non-integer power {e} of negative base {base}")
    if base == 0 and e < 0:
        raise DomainError(f"negative power {e} of zero")
    return float(base) ** float(e)


def _grid(spec: str) -> GridSpec:
    return GridSpec.parse(spec)


# ---------------------------------------------------------------------------
# scalar evolution equations


def example1_scalar_evolution(amplitude: float = 1.0) -> CatalogEntry:
    """u_t + a(u) . grad u = 0 with Cauchy data f carried along r^A = x^A - a^A(u) t."""
    amp = float(amplitude)
    sys2 = scalar_evolution_system(lambda u: u, 2, 2)
    fam2 = transport_family(lambda u: u, 2, 2, lambda u: np.eye(2))

    def f2(r):
        return amp * np.array([0.3 * math.sin(r[0]) + 0.1 * r[1], 0.2 * math.cos(r[1]) - 0.1 * r[0]])

    def f2_jac(r):
        return amp * np.array([[0.3 * math.cos(r[0]), 0.1], [-0.1, -0.2 * math.sin(r[1])]])

    wave2 = RegisteredSolution(
        "wave2",
        ImplicitSolution(sys2, fam2, Profile(2, 2, f2, f2_jac, name="cauchy_data"), name="wave2"),
        _grid("t=0:0.5:6,x=-1:1:6,y=-1:1:6"),
        ((-1.0, 1.0), (-1.0, 1.0)),
    )

    a1 = lambda u: np.array([u[0]])
    sys1 = scalar_evolution_system(a1, 1, 2)
    fam1 = transport_family(a1, 1, 2, lambda u: np.array([[1.0, 0.0]]))

    def f1(r):
        return amp * np.array([0.4 * math.sin(r[0]), 0.3 * math.cos(r[0])])

    def f1_jac(r):
        return amp * np.array([[0.4 * math.cos(r[0])], [-0.3 * math.sin(r[0])]])

    simple = RegisteredSolution(
        "simple_wave",
        ImplicitSolution(sys1, fam1, Profile(1, 2, f1, f1_jac, name="cauchy_data"), name="simple_wave"),
        _grid("t=0:0.5:11,x=-1:1:11"),
        ((-1.0, 1.0),),
    )
    return CatalogEntry(
        "example1_scalar_evolution",
        "scalar evolution system, solution u = f(x - a(u) t) from Cauchy data f",
        {"amplitude": amp},
        {"wave2": wave2, "simple_wave": simple},
    )


def scalar_evolution_solution(a: Callable, da: Callable, n: int, q: int, profile: Profile,
                              seed: str = "origin") -> ImplicitSolution:
    """Implicit solution of u_t + a(u) . grad u = 0 for arbitrary Cauchy data ``profile``."""
    return ImplicitSolution(scalar_evolution_system(a, n, q), transport_family(a, n, q, da), profile, seed,
                            name="scalar_evolution")


# ---------------------------------------------------------------------------
# (2+1)-dimensional hydrodynamic-type system


def _quadratic(c0: float, c1: float, c2: float):
    """s -> c0 + c1 s + c2 s^2 with first and second derivatives."""
    return (lambda s: c0 + c1 * s + c2 * s * s, lambda s: c1 + 2 * c2 * s, lambda s: 2 * c2)


def _quadratic_inverse(c1: float, c2: float, r: float) -> float:
    """Root of c1 s + c2 s^2 = r on the branch through s = 0."""
    disc = c1 * c1 + 4 * c2 * r
    if disc < 0:
        raise DomainError(f"g(s) = {r} has no real solution")
    den = c1 + math.sqrt(disc) if c1 >= 0 else c1 - math.sqrt(disc)
    if den == 0:
        raise DomainError("degenerate g")
    return 2 * r / den


class HydroRelations:
    """The relations x - u1 t = g(u1), y - s u2 t = a(u1) + u2 g'(u1).

    ``s = 1`` gives the form solved by the velocity family; ``s = -1`` is the
    sign-flipped variant, kept as a negative control.
    """

    def __init__(self, g1, g2, a0, a1, a2, sign=1.0):
        if g1 == 0:
            raise InvalidInputError("g1 must be nonzero so that g is invertible at 0")
        self.g1, self.g2 = float(g1), float(g2)
        self.g, self.dg, self.ddg = _quadratic(0.0, g1, g2)
        self.a, self.da, _ = _quadratic(a0, a1, a2)
        self.sign = float(sign)

    def g_inverse(self, r: float) -> float:
        s = _quadratic_inverse(self.g1, self.g2, r)
        if self.dg(s) == 0:
            raise DomainError("g' vanishes")
        return s

    def profile(self, orientation: float = 1.0) -> Profile:
        """u = f(r) for r = orientation * (x - u1 t, y - u2 t)."""
        o = float(orientation)

        def value(r):
            u1 = self.g_inverse(o * r[0])
            return np.array([u1, (o * r[1] - self.a(u1)) / self.dg(u1)])

        def jac(r):
            u1, u2 = value(r)
            gp = self.dg(u1)
            d1 = o / gp
            d2_1 = -(self.da(u1) + u2 * self.ddg(u1)) / gp * d1
            return np.array([[d1, 0.0], [d2_1, o / gp]])

        return Profile(2, 2, value, jac, name="hydro_relations")

    def residual(self, x, u) -> np.ndarray:
        t, xx, y = x
        return np.array([xx - u[0] * t - self.g(u[0]),
                         y - self.sign * u[1] * t - self.a(u[0]) - u[1] * self.dg(u[0])])

    def _jac(self, x, u) -> np.ndarray:
        t = x[0]
        return np.array([[-t - self.dg(u[0]), 0.0],
                         [-self.da(u[0]) - u[1] * self.ddg(u[0]), -self.sign * t - self.dg(u[0])]])

    def solve(self, x, dt: float = 0.05, tol: float = 1e-13, max_iter: int = 30) -> np.ndarray:
        """2-variable Newton on the relations, continued in t from t = 0 where u is explicit."""
        x = linalg.as_vector(x)
        t_end = x[0]
        u1 = self.g_inverse(x[1])
        u = np.array([u1, (x[2] - self.a(u1)) / self.dg(u1)])
        steps = max(1, int(math.ceil(abs(t_end) / dt)))
        for j in range(1, steps + 1):
            xs = np.array([t_end * j / steps, x[1], x[2]])
            for _ in range(max_iter):
                g = self.residual(xs, u)
                try:
                    du = linalg.solve_linear(self._jac(xs, u), g)
                except SingularMatrixError as exc:
                    raise NoConvergenceError(f"singular relation Jacobian at {xs}") from exc
                u = u - du
                if np.max(np.abs(du)) <= tol * (1 + np.max(np.abs(u))):
                    break
            else:
                raise NoConvergenceError(f"relation solve did not converge at {xs}")
        return u


def example3_hydro_2plus1(A11=0.0, A12=0.0, A21=0.0, A22=0.0, g1=1.0, g2=0.25, a0=0.0, a1=0.0, a2=0.5,
                          b=0.0, c=0.0) -> CatalogEntry:
    """Superposed simple waves with local velocities u1 and u2.

    A11..A22 are constant coefficients of the extra terms; g(s) = g1 s + g2 s^2
    and a(s) = a0 + a1 s + a2 s^2; b and c scale the extra u1_y terms
    b(u) = b u2, c(u) = c u1 of the second system.
    """
    const = lambda v: (lambda u: v)
    sys10 = hydro_2plus1_system(const(A11), const(A12), const(A21), const(A22))
    rel = HydroRelations(g1, g2, a0, a1, a2)
    grid = _grid("t=0:0.5:6,x=-0.5:0.5:6,y=-0.5:0.5:6")
    box = ((-0.5, 0.5), (-0.5, 0.5))
    eq10 = RegisteredSolution(
        "velocity_waves",
        ImplicitSolution(sys10, velocity_family(2), rel.profile(1.0), name="velocity_waves"),
        grid, box,
        full_field=rel.solve, full_system=sys10, closed_form=rel.solve,
    )

    sys16 = hydro_bc_system(lambda u: b * u[1], lambda u: c * u[0])

    def lam(u):
        return np.array([[u[0], -1.0, 0.0], [u[1], 0.0, -1.0]])

    def dlam(u):
        d = np.zeros((2, 3, 2))
        d[0, 0, 0] = d[1, 0, 1] = 1.0
        return d

    fam15 = WaveVectorFamily(2, 3, 2, lam, dlam, (1, 2), "opposed_velocity")
    eq15 = RegisteredSolution(
        "opposed_orientation",
        ImplicitSolution(sys16, fam15, rel.profile(-1.0), name="opposed_orientation"),
        grid, box,
        full_field=rel.solve, full_system=sys16, closed_form=rel.solve,
    )
    params = dict(A11=A11, A12=A12, A21=A21, A22=A22, g1=g1, g2=g2, a0=a0, a1=a1, a2=a2, b=b, c=c)
    return CatalogEntry(
        "example3_hydro_2plus1",
        "hydrodynamic-type system in 2+1 dimensions, rank-2 superposition of two simple waves",
        {k: float(v) for k, v in params.items()},
        {"velocity_waves": eq10, "opposed_orientation": eq15},
        notes="the second relation is keyed to the wave vector (u2, 0, -1): y - u2 t = a(u1) + u2 g'(u1)",
        checks={"relations": rel},
    )


# ---------------------------------------------------------------------------
# isentropic flow and incompressible Euler


@dataclass(frozen=True)
class Potential:
    """Scalar h(r1, r2) with gradient and Hessian."""

    value: Callable
    grad: Callable
    hess: Callable
    name: str = "h"


def power_potential(m: float) -> Potential:
    """h = r1^m r2^(1-m); satisfies h11 h22 = h12^2 identically."""
    m = float(m)

    def value(r):
        return _pow(r[0], m) * _pow(r[1], 1 - m)

    def grad(r):
        w = r[0] / r[1]
        return np.array([m * _pow(w, m - 1), (1 - m) * _pow(w, m)])

    def hess(r):
        w = r[0] / r[1]
        h11 = m * (m - 1) * _pow(w, m - 2) / r[1]
        h12 = -m * (m - 1) * _pow(w, m - 1) / r[1]
        h22 = m * (m - 1) * _pow(w, m) / r[1]
        return np.array([[h11, h12], [h12, h22]])

    return Potential(value, grad, hess, f"power_{m:g}")


def bilinear_potential() -> Potential:
    """h = r1 r2, whose Hessian determinant is -1."""
    return Potential(
        lambda r: r[0] * r[1],
        lambda r: np.array([r[1], r[0]]),
        lambda r: np.array([[0.0, 1.0], [1.0, 0.0]]),
        "bilinear",
    )


def monge_ampere_samples(n: int = 10, lo: float = 0.1, hi: float = 2.0) -> list:
    axis = np.linspace(lo, hi, n)
    return [np.array(p) for p in itertools.product(axis, axis)]


def monge_ampere_residual(h: Potential, C: float, samples=None) -> float:
    """max |h11 h22 - h12^2 - C| relative to the size of the two products."""
    samples = monge_ampere_samples() if samples is None else samples
    worst = 0.0
    for r in samples:
        hs = h.hess(r)
        a, b = hs[0, 0] * hs[1, 1], hs[0, 1] ** 2
        worst = max(worst, abs(a - b - C) / max(1.0, abs(a) + b))
    return worst


def check_monge_ampere(h: Potential, C: float, tol: float = 1e-8, samples=None) -> float:
    res = monge_ampere_residual(h, C, samples)
    if not res <= tol:
        raise InconsistentProfileError(f"potential {h.name} violates h11 h22 - h12^2 = {C:g} (residual {res:.3e})")
    return res


def gaussian_curvature_graph(h: Potential, r) -> float:
    """Curvature of the graph surface t = h(r1, r2) from its two fundamental forms."""
    g = h.grad(r)
    hs = h.hess(r)
    xu = np.array([1.0, 0.0, g[0]])
    xv = np.array([0.0, 1.0, g[1]])
    normal = np.cross(xu, xv)
    normal /= np.linalg.norm(normal)
    E, F, G = xu @ xu, xu @ xv, xv @ xv
    # second derivatives of the parametrization only have a t component
    L, M, N = hs[0, 0] * normal[2], hs[0, 1] * normal[2], hs[1, 1] * normal[2]
    return float((L * N - M * M) / (E * G - F * F))


def gaussian_curvature_formula(h: Potential, C: float, r) -> float:
    g = h.grad(r)
    return float(C / (1.0 + g @ g) ** 2)


def potential_profile(h: Potential, C1: float, domain=None) -> Profile:
    """u1 = C1 r1 + h_{r2}, u2 = C1 r2 - h_{r1}."""

    def value(r):
        g = h.grad(r)
        return np.array([C1 * r[0] + g[1], C1 * r[1] - g[0]])

    def jac(r):
        hs = h.hess(r)
        return np.array([[C1 + hs[0, 1], hs[1, 1]], [-hs[0, 0], C1 - hs[0, 1]]])

    return Profile(2, 2, value, jac, domain, name=f"potential_{h.name}")


def _positive_quadrant(r) -> bool:
    return r[0] > 0 and r[1] > 0


def _eval_velocity(sol: ImplicitSolution):
    opts = EvalOptions()
    return lambda x: evaluate(sol, x, opts).u


def example4_isentropic(C1=0.0, m=2.0, a0=1.0, k=5.0, C=0.0, h: Optional[Potential] = None) -> CatalogEntry:
    """Isentropic flow with sound speed a(t) and velocity from a Monge-Ampere potential."""
    h = power_potential(m) if h is None else h
    check_monge_ampere(h, C)
    C1, a0, k, C = float(C1), float(a0), float(k), float(C)
    if a0 == 0:
        raise InvalidInputError("a0 must be nonzero")
    domain = _positive_quadrant if h.name.startswith("power") and float(m) != int(m) else None
    vel = ImplicitSolution(pressureless_system(2), velocity_family(2), potential_profile(h, C1, domain),
                           seed="surface", name="isentropic_velocity", anchor=(0.0, 1.0, 1.0))
    full_sys = isentropic_system(2, k)

    def sound_speed(t: float) -> float:
        base = (1 + C1 * t) ** 2 + C * t * t
        if base <= 0:
            raise DomainError(f"(1 + C1 t)^2 + C t^2 = {base} is not positive at t={t}")
        return a0 * base ** (-1.0 / k)

    velocity = _eval_velocity(vel)

    def full_field(x):
        return np.concatenate([velocity(x), [sound_speed(x[0])]])

    sol = RegisteredSolution(
        "velocity_potential", vel, _grid("t=0.5:2:6,x=0.1:1:6,y=0.1:1:6"), ((0.5, 2.0), (0.5, 2.0)),
        full_field=full_field, full_system=full_sys, trace_system=vel.system,
    )
    return CatalogEntry(
        "example4_isentropic",
        "isentropic flow, velocity from a potential h solving h11 h22 - h12^2 = C",
        dict(C1=C1, m=float(m), a0=a0, k=k, C=C),
        {"velocity_potential": sol},
        notes="sound speed a = a0 ((1 + C1 t)^2 + C t^2)^(-1/k); trace checks use the velocity subsystem",
        checks={"potential": h, "sound_speed": sound_speed},
    )


def euler_m_profile(m: float) -> Profile:
    """u1 = (1-m) w^m, u2 = -m w^(m-1) with w = r1 / r2."""
    m = float(m)

    def _w(r):
        if r[1] == 0:
            raise DomainError("r2 = 0")
        return r[0] / r[1]

    def value(r):
        w = _w(r)
        return np.array([(1 - m) * _pow(w, m), -m * _pow(w, m - 1)])

    def jac(r):
        w = _w(r)
        c = m * (m - 1) / r[1]
        return np.array([[-c * _pow(w, m - 1), c * _pow(w, m)],
                         [-c * _pow(w, m - 2), c * _pow(w, m - 1)]])

    return Profile(2, 2, value, jac, name=f"euler_m{m:g}")


def euler_m2_closed_form(sigma: float = -1.0) -> Callable:
    """Explicit m = 2 branch: u2 = (y + sigma sqrt(D)) / t, u1 = (-y^2 - 2tx - sigma y sqrt(D)) / (2 t^2)."""
    if sigma not in (-1.0, 1.0):
        raise InvalidInputError("sigma must be -1 or 1")

    def field_fn(x):
        t, xx, y = (float(v) for v in x)
        D = y * y + 4 * t * xx
        if t == 0:
            raise DomainError("closed form needs t != 0")
        if D < 0:
            raise DomainError(f"y^2 + 4 t x = {D} < 0")
        s = math.sqrt(D)
        return np.array([(-y * y - 2 * t * xx - sigma * y * s) / (2 * t * t), (y + sigma * s) / t])

    return field_fn


def example4_euler_m(m=2.0, sigma=-1.0) -> CatalogEntry:
    """Divergence-free solutions of the incompressible Euler equations from the power potential."""
    m, sigma = float(m), float(sigma)
    if sigma not in (-1.0, 1.0):
        raise InvalidInputError("sigma must be -1 or 1")
    sys = euler_incompressible_system(2)
    sol = ImplicitSolution(sys, velocity_family(2), euler_m_profile(m), seed="surface", name="euler_m",
                           anchor=(0.0, 1.0, 1.0))
    grid = _grid("t=0.5:2:10,x=0.1:1:10,y=0.1:1:10")
    box = ((0.5, 2.0), (0.5, 2.0))
    sols = {}
    closed = euler_m2_closed_form(sigma) if m == 2.0 else None
    sols["implicit"] = RegisteredSolution("implicit", sol, grid, box, full_field=closed, full_system=sys,
                                          closed_form=closed, divergence=True)
    if m == 2.0:
        for name, sg in (("branch_minus", -1.0), ("branch_plus", 1.0)):
            cf = euler_m2_closed_form(sg)
            sols[name] = RegisteredSolution(name, sol, grid, box, full_field=cf, full_system=sys,
                                            closed_form=cf, divergence=True)
    return CatalogEntry(
        "example4_euler_m2",
        "incompressible Euler, u1 = (1-m) w^m, u2 = -m w^(m-1), w = (x - u1 t)/(y - u2 t)",
        {"m": m, "sigma": sigma},
        sols,
        notes="continuation from t = 0 selects the sigma = -1 branch",
    )


# ---------------------------------------------------------------------------
# linear Cauchy data and nilpotent Jacobians


def _as_square(alpha) -> np.ndarray:
    a = linalg.as_matrix(alpha)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError("alpha must be a square matrix")
    return a


def example5_closed_form(alpha, beta, gamma, k):
    """u = (I + t alpha)^{-1} (beta + alpha x), a = gamma det(I + t alpha)^{-1/k}."""
    alpha = _as_square(alpha)
    n = alpha.shape[0]
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (n,)).copy()

    def det_b(t):
        return linalg.det(np.eye(n) + t * alpha)

    def velocity(x):
        t = float(x[0])
        try:
            return linalg.solve_linear(np.eye(n) + t * alpha, beta + alpha @ np.asarray(x[1:], dtype=float))
        except SingularMatrixError as exc:
            raise DomainError(f"I + t alpha is singular at t={t}") from exc

    def sound_speed(t):
        d = det_b(t)
        if abs(d) <= 1e-12:
            raise DomainError(f"I + t alpha is singular at t={t}")
        if d < 0:
            raise DomainError(f"det(I + t alpha) = {d} < 0")
        return gamma * d ** (-1.0 / k)

    def full(x):
        return np.concatenate([velocity(x), [sound_speed(float(x[0]))]])

    return velocity, sound_speed, full, det_b


def example5_general(alpha=None, beta=0.0, gamma=1.0, k=5.0) -> CatalogEntry:
    """Isentropic flow with linear Cauchy data u(0, x) = beta + alpha x."""
    alpha = _as_square([[0.0, 1.0], [0.0, 0.0]] if alpha is None else alpha)
    n = alpha.shape[0]
    beta_v = np.broadcast_to(np.asarray(beta, dtype=float), (n,)).copy()
    gamma, k = float(gamma), float(k)
    if gamma == 0 or k == 0:
        raise InvalidInputError("gamma and k must be nonzero")
    prof = Profile(n, n, lambda r: beta_v + alpha @ r, lambda r: alpha.copy(), name="linear_data")
    sol = ImplicitSolution(pressureless_system(n), velocity_family(n), prof, name="linear_data")
    velocity, sound_speed, full, det_b = example5_closed_form(alpha, beta_v, gamma, k)
    names = ",".join(f"{lab}=-1:1:6" for lab in sol.system.independent_names[1:])
    grid = _grid("t=0:0.5:6," + names) if n <= 3 else _grid("t=0:0.5:3," + ",".join(
        f"{lab}=-1:1:3" for lab in sol.system.independent_names[1:]))
    reg = RegisteredSolution(
        "linear_data", sol, grid, tuple((-1.0, 1.0) for _ in range(n)),
        full_field=full, full_system=isentropic_system(n, k), closed_form=velocity,
        trace_system=sol.system, perturb_row=int(np.argmax(np.max(np.abs(alpha), axis=0))),
    )
    return CatalogEntry(
        "example5_general",
        "isentropic flow with linear Cauchy data, a = gamma det(I + t alpha)^(-1/k)",
        {"alpha": alpha.tolist(), "beta": beta_v.tolist(), "gamma": gamma, "k": k},
        {"linear_data": reg},
        checks={"det_b": det_b, "sound_speed": sound_speed},
    )


def charpoly_constancy(jacobian: Callable, samples) -> float:
    """Largest spread of the coefficients of det(eps I + Df) across ``samples``."""
    coeffs = np.array([linalg.charpoly_coefficients(jacobian(s)) for s in samples])
    return float(np.max(np.ptp(coeffs, axis=0))) if len(coeffs) else 0.0


def example5_euler3d(f1_scale=1.0, f2_slope=0.5) -> CatalogEntry:
    """Divergence-free 3-D flow with u2 = u3 = f2(x2 - x3) and u1 = f1 transported along it.

    f1(a, b) = f1_scale a b and f2(s) = f2_slope s.
    """
    c, sl = float(f1_scale), float(f2_slope)
    f1 = lambda a, b: c * a * b
    f2 = lambda s: sl * s

    def value(r):
        s = f2(r[1] - r[2])
        return np.array([f1(r[1], r[2]), s, s])

    def jac(r):
        return np.array([[0.0, c * r[2], c * r[1]], [0.0, sl, -sl], [0.0, sl, -sl]])

    sys = euler_incompressible_system(3)
    sol = ImplicitSolution(sys, velocity_family(3), Profile(3, 3, value, jac, name="nilpotent_data"),
                           name="euler3d")

    def closed(x):
        t, _, x2, x3 = (float(v) for v in x)
        s = f2(x2 - x3)
        return np.array([f1(x2 - t * s, x3 - t * s), s, s])

    def det_b(t, xbar):
        return linalg.det(np.eye(3) + t * jac(np.asarray(xbar, dtype=float)))

    reg = RegisteredSolution(
        "nilpotent_data", sol, _grid("t=0:1:5,x=-1:1:5,y=-1:1:5,z=-1:1:5"),
        ((-1.0, 1.0),) * 3, full_field=closed, full_system=sys, closed_form=closed, divergence=True,
        perturb_row=1,
    )
    return CatalogEntry(
        "example5_euler3d",
        "incompressible 3-D Euler flow with nilpotent Cauchy-data Jacobian",
        {"f1_scale": c, "f2_slope": sl},
        {"nilpotent_data": reg},
        checks={"det_b": det_b, "data_jacobian": jac},
    )


# ---------------------------------------------------------------------------
# registry

_BUILDERS = {
    "example1_scalar_evolution": example1_scalar_evolution,
    "example3_hydro_2plus1": example3_hydro_2plus1,
    "example4_isentropic": example4_isentropic,
    "example4_euler_m2": example4_euler_m,
    "example5_general": example5_general,
    "example5_euler3d": example5_euler3d,
}

_PARAMS = {
    "example1_scalar_evolution": {"amplitude": 1.0},
    "example3_hydro_2plus1": dict(A11=0.0, A12=0.0, A21=0.0, A22=0.0, g1=1.0, g2=0.25, a0=0.0, a1=0.0,
                                  a2=0.5, b=0.0, c=0.0),
    "example4_isentropic": dict(C1=0.0, m=2.0, a0=1.0, k=5.0, C=0.0),
    "example4_euler_m2": dict(m=2.0, sigma=-1.0),
    "example5_general": dict(alpha=[[0.0, 1.0], [0.0, 0.0]], beta=0.0, gamma=1.0, k=5.0),
    "example5_euler3d": dict(f1_scale=1.0, f2_slope=0.5),
}


def list_catalog() -> list:
    return list(_BUILDERS)


def parameter_defaults(entry_id: str) -> dict:
    _check_id(entry_id)
    return json.loads(json.dumps(_PARAMS[entry_id]))


def _check_id(entry_id: str) -> None:
    if entry_id not in _BUILDERS:
        raise NotFoundError(f"unknown catalog entry {entry_id!r}; available: {', '.join(_BUILDERS)}")


def parse_overrides(entry_id: str, assignments) -> dict:
    """Turn ``["name=value", ...]`` into keyword values; values are JSON literals."""
    _check_id(entry_id)
    out = {}
    for item in assignments or ():
        if "=" not in item:
            raise InvalidInputError(f"--set {item!r}: expected name=value")
        name, raw = (s.strip() for s in item.split("=", 1))
        if name not in _PARAMS[entry_id]:
            raise InvalidInputError(
                f"--set {name}: unknown parameter for {entry_id}; known: {', '.join(_PARAMS[entry_id])}"
            )
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            raise InvalidInputError(f"--set {name}: {raw!r} is not a number or JSON array") from None
        default = _PARAMS[entry_id][name]
        if isinstance(default, list) or isinstance(value, list):
            arr = np.asarray(value, dtype=float) if _numeric(value) else None
            if arr is None or (isinstance(default, list) and arr.ndim != 2):
                raise InvalidInputError(f"--set {name}: expected a numeric matrix literal")
            value = arr.tolist()
        elif not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise InvalidInputError(f"--set {name}: expected a finite number")
        out[name] = value
    return out


def _numeric(value) -> bool:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        return False
    return bool(np.all(np.isfinite(arr)))


def get_entry(entry_id: str, **overrides) -> CatalogEntry:
    _check_id(entry_id)
    unknown = set(overrides) - set(_PARAMS[entry_id])
    if unknown:
        raise InvalidInputError(f"unknown parameters for {entry_id}: {sorted(unknown)}")
    return _BUILDERS[entry_id](**overrides)


__all__ = [
    "CatalogEntry",
    "RegisteredSolution",
    "Potential",
    "HydroRelations",
    "list_catalog",
    "get_entry",
    "parse_overrides",
    "parameter_defaults",
    "power_potential",
    "bilinear_potential",
    "monge_ampere_residual",
    "check_monge_ampere",
    "gaussian_curvature_graph",
    "gaussian_curvature_formula",
    "potential_profile",
    "euler_m_profile",
    "euler_m2_closed_form",
    "example5_closed_form",
    "charpoly_constancy",
    "scalar_evolution_solution",
]
