"""Grid sweeps with independent finite-difference verdicts on computed solutions."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import linalg
from .engine import EvalOptions, ImplicitSolution, analytic_jacobian, evaluate, phi_matrices
from .errors import (
    DomainError,
    InvalidInputError,
    NoConvergenceError,
    Phi1SingularError,
    RankSolutionsError,
    StencilError,
)
from .system import QuasilinearSystem
from .waves import OrthogonalFrame

DEFAULT_POINT_CAP = 1_000_000
DEFAULT_FD_STEP = 1e-5


def point_cap() -> int:
    raw = os.environ.get("RANK_SOLUTIONS_POINT_CAP")
    if raw is None:
        return DEFAULT_POINT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise InvalidInputError(f"RANK_SOLUTIONS_POINT_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise InvalidInputError("RANK_SOLUTIONS_POINT_CAP must be positive")
    return cap


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid; ``axes`` holds (label, min, max, n) per independent variable."""

    axes: tuple

    def __post_init__(self):
        axes = tuple((str(a), float(lo), float(hi), int(n)) for a, lo, hi, n in self.axes)
        if not axes:
            raise InvalidInputError("grid has no axes")
        for label, lo, hi, n in axes:
            if n < 1:
                raise InvalidInputError(f"grid axis {label}: n must be >= 1")
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise InvalidInputError(f"grid axis {label}: need finite min <= max")
        labels = [a[0] for a in axes]
        if len(set(labels)) != len(labels):
            raise InvalidInputError(f"duplicate grid axis labels {labels}")
        object.__setattr__(self, "axes", axes)
        cap = point_cap()
        if self.size > cap:
            raise InvalidInputError(f"grid has {self.size} points, above the cap of {cap}")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``"t=0.5:2:10,x=0.1:1:10"``; ``label=v`` is a single value."""
        axes = []
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise InvalidInputError(f"grid axis {part!r} is not of the form label=min:max:n")
            label, rng = (s.strip() for s in part.split("=", 1))
            pieces = rng.split(":")
            try:
                if len(pieces) == 1:
                    v = float(pieces[0])
                    axes.append((label, v, v, 1))
                elif len(pieces) == 3:
                    axes.append((label, float(pieces[0]), float(pieces[1]), int(pieces[2])))
                else:
                    raise ValueError
            except ValueError:
                raise InvalidInputError(f"grid axis {part!r} is not of the form label=min:max:n") from None
        return cls(tuple(axes))

    @property
    def labels(self) -> tuple:
        return tuple(a[0] for a in self.axes)

    @property
    def size(self) -> int:
        return math.prod(a[3] for a in self.axes)

    def check_labels(self, names: Sequence[str]) -> None:
        if tuple(names) != self.labels:
            raise InvalidInputError(f"grid axes {self.labels} do not match variables {tuple(names)}")

    def coordinates(self) -> list:
        return [np.linspace(lo, hi, n) if n > 1 else np.array([lo]) for _, lo, hi, n in self.axes]

    def points(self) -> list:
        """Grid points in row-major order (first axis slowest)."""
        return [np.array(p) for p in itertools.product(*self.coordinates())]


def _fd_gradient(field_fn: Callable, x: np.ndarray, h: float, q: Optional[int] = None) -> np.ndarray:
    """Central-difference gradient, shape (q, p); stencil failures become StencilError."""
    if not h > 0:
        raise InvalidInputError("fd_step must be positive")
    cols = []
    for i in range(x.shape[0]):
        vals = []
        for sgn in (1.0, -1.0):
            xs = x.copy()
            xs[i] += sgn * h
            try:
                vals.append(np.asarray(field_fn(xs), dtype=float).reshape(-1))
            except RankSolutionsError as exc:
                raise StencilError(f"field evaluation failed at stencil point {xs}: {exc}", x=xs) from exc
        cols.append((vals[0] - vals[1]) / (2.0 * h))
    return np.stack(cols, axis=1)


def fd_gradient(field_fn: Callable, x, fd_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    return _fd_gradient(field_fn, linalg.as_vector(x), fd_step)


def pde_residual(sys: QuasilinearSystem, u_field: Callable, x, fd_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Delta^{mu i}_alpha(u(x)) du^alpha/dx^i with central differences; length l."""
    x = linalg.as_vector(x)
    if x.shape[0] != sys.p:
        raise InvalidInputError(f"x must have length p={sys.p}")
    u = np.asarray(u_field(x), dtype=float).reshape(-1)
    return sys.residual_from_gradient(u, _fd_gradient(u_field, x, fd_step))


def constraint_residual(frame: Callable, u_field: Callable, x, fd_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """xi^i_a(u(x)) du^alpha/dx^i, shape (p - k, q)."""
    x = linalg.as_vector(x)
    u = np.asarray(u_field(x), dtype=float).reshape(-1)
    return frame(u) @ _fd_gradient(u_field, x, fd_step).T


def divergence(u_field: Callable, x, fd_step: float = DEFAULT_FD_STEP, n: Optional[int] = None) -> float:
    """sum_j du^j/dx^j over the space slots 1..n (slot 0 is time)."""
    grad = fd_gradient(u_field, x, fd_step)
    n = grad.shape[1] - 1 if n is None else n
    return float(sum(grad[j, 1 + j] for j in range(n)))


@dataclass(frozen=True)
class VerifyOptions:
    fd_step: float = DEFAULT_FD_STEP
    rank_tol: float = linalg.RANK_TOL
    eval: EvalOptions = field(default_factory=EvalOptions)


@dataclass
class PointRecord:
    x: np.ndarray
    status: str
    u: Optional[np.ndarray] = None
    r: Optional[np.ndarray] = None
    det_phi1: float = float("nan")
    rank: int = -1
    residual: Optional[np.ndarray] = None
    constraint: Optional[np.ndarray] = None
    jac_mismatch: float = float("nan")
    field_residual: Optional[np.ndarray] = None
    divergence: float = float("nan")
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _max_abs(arrays) -> float:
    vals = [float(np.max(np.abs(a))) for a in arrays if a is not None and np.size(a)]
    return max(vals, default=0.0)


@dataclass
class VerificationReport:
    records: list
    k: int
    aggregates: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.aggregates:
            self.aggregates = self.recompute_aggregates()

    def recompute_aggregates(self) -> dict:
        ok = [r for r in self.records if r.ok]
        residuals = [r.residual for r in ok]
        mean = float(np.mean([np.max(np.abs(a)) for a in residuals])) if residuals else 0.0
        return {
            "points": len(self.records),
            "failed": len(self.records) - len(ok),
            "max_residual": max(_max_abs(residuals), _max_abs(r.field_residual for r in ok)),
            "mean_residual": mean,
            "max_implicit_residual": _max_abs(residuals),
            "max_field_residual": _max_abs(r.field_residual for r in ok),
            "max_constraint": _max_abs(r.constraint for r in ok),
            "max_divergence": max((abs(r.divergence) for r in ok if not math.isnan(r.divergence)), default=0.0),
            "max_jac_mismatch": max((r.jac_mismatch for r in ok), default=0.0),
            "rank_ok": all(r.rank <= self.k for r in ok),
            "max_rank": max((r.rank for r in ok), default=0),
        }

    def __getitem__(self, key):
        return self.aggregates[key]


def _status_of(exc: Exception) -> str:
    if isinstance(exc, Phi1SingularError):
        return "phi1_singular"
    if isinstance(exc, NoConvergenceError):
        return "no_convergence"
    if isinstance(exc, StencilError):
        return "stencil_error"
    if isinstance(exc, DomainError):
        return "domain_error"
    return "error"


def verify_point(sol: ImplicitSolution, x, opts: VerifyOptions = VerifyOptions(),
                 full_field: Optional[Callable] = None, full_system: Optional[QuasilinearSystem] = None,
                 check_divergence: bool = False, frame: Optional[Callable] = None) -> PointRecord:
    x = linalg.as_vector(x)
    try:
        ev = evaluate(sol, x, opts.eval)
    except RankSolutionsError as exc:
        return PointRecord(x, _status_of(exc), message=str(exc))
    rec = PointRecord(x, "ok", ev.u, ev.r, ev.phi1_det)
    try:
        field_fn = lambda y: evaluate(sol, y, opts.eval, guess=ev.u).u
        grad = _fd_gradient(field_fn, x, opts.fd_step)
        rec.residual = sol.system.residual_from_gradient(ev.u, grad)
        frame = frame or OrthogonalFrame(sol.family)
        rec.constraint = frame(ev.u) @ grad.T
        jac = analytic_jacobian(sol, x, ev.u)
        rec.jac_mismatch = float(np.max(np.abs(jac - grad)))
        rec.rank = linalg.rank_with_tolerance(jac, opts.rank_tol)
        if check_divergence:
            rec.divergence = float(sum(grad[j, 1 + j] for j in range(sol.system.q)))
        if full_field is not None:
            system = full_system or sol.system
            fu = np.asarray(full_field(x), dtype=float)
            rec.field_residual = system.residual_from_gradient(fu, _fd_gradient(full_field, x, opts.fd_step))
    except RankSolutionsError as exc:
        rec.status, rec.message = _status_of(exc), str(exc)
    return rec


def verify_solution(sol: ImplicitSolution, grid: GridSpec, opts: VerifyOptions = VerifyOptions(),
                    full_field: Optional[Callable] = None, full_system: Optional[QuasilinearSystem] = None,
                    check_divergence: bool = False) -> VerificationReport:
    """Evaluate, difference and rank-check every grid point; failures are recorded, not raised."""
    grid.check_labels(sol.system.independent_names)
    points = grid.points()
    if not points:
        raise InvalidInputError("empty grid")
    frame = OrthogonalFrame(sol.family)
    records = [verify_point(sol, x, opts, full_field, full_system, check_divergence, frame) for x in points]
    return VerificationReport(records, sol.k)


@dataclass(frozen=True)
class CatastropheBracket:
    s_lo: float
    s_hi: float
    det_lo: float
    det_hi: float
    reason: str


def catastrophe_scan(sol: ImplicitSolution, direction, s_max: float, n: int = 200, origin=None,
                     opts: Optional[EvalOptions] = None) -> Optional[CatastropheBracket]:
    """First sub-interval of origin + s*direction, s in [0, s_max], where det Phi1 degenerates.

    Returns None when the scan reaches s_max, or leaves the solution's
    domain, without a threshold crossing or sign change.
    """
    d = linalg.as_vector(direction)
    if not np.linalg.norm(d) > 0:
        raise InvalidInputError("ray direction must be nonzero")
    o = np.zeros_like(d) if origin is None else linalg.as_vector(origin)
    opts = opts or EvalOptions()
    s_prev, det_prev = None, None
    for s in np.linspace(0.0, s_max, n + 1):
        x = o + s * d
        try:
            ev = evaluate(sol, x, opts)
            det = ev.phi1_det
        except Phi1SingularError as exc:
            if s_prev is None:
                return CatastropheBracket(0.0, 0.0, exc.det, exc.det, "threshold")
            return CatastropheBracket(s_prev, float(s), det_prev, exc.det, "threshold")
        except (DomainError, NoConvergenceError):
            return None
        if det_prev is not None and det * det_prev < 0:
            return CatastropheBracket(s_prev, float(s), det_prev, det, "sign_change")
        s_prev, det_prev = float(s), det
    return None


def phi1_det_along(sol: ImplicitSolution, x, u) -> float:
    return linalg.det(phi_matrices(sol, x, u)[0])


__all__ = [
    "GridSpec",
    "VerifyOptions",
    "PointRecord",
    "VerificationReport",
    "CatastropheBracket",
    "pde_residual",
    "constraint_residual",
    "divergence",
    "fd_gradient",
    "verify_point",
    "verify_solution",
    "catastrophe_scan",
    "point_cap",
]
