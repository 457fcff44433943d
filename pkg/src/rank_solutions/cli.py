"""Command-line front end: list, eval, verify and trace-check catalog entries.

Exit codes: 0 success, 1 configuration error, 2 evaluation non-convergence,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import catalog
from .engine import EvalOptions, analytic_jacobian, evaluate, normalize_pair, phi_matrices
from .errors import DomainError, InvalidInputError, NotFoundError, RankSolutionsError
from . import linalg
from .verification import GridSpec, VerifyOptions, verify_solution, _status_of
from .waves import trace_condition_initial, trace_condition_symmetrized

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_FAILED = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    entry: str
    solution: Optional[str] = None
    overrides: dict = field(default_factory=dict)
    grid: Optional[GridSpec] = None
    tol: Optional[float] = None
    fd_step: float = 1e-5
    fmt: str = "csv"
    out: Optional[str] = None
    seed: int = 0
    perturb_lambda: float = 0.0
    samples: int = 100
    method: str = "implicit"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_json_value(x) for x in v]
    return v


class _Writer:
    """Buffers records and writes them in one go, CSV or line-delimited JSON."""

    def __init__(self, fmt: str, columns: list):
        self.fmt, self.columns, self.rows = fmt, columns, []

    def add(self, row: dict):
        self.rows.append(row)

    def render(self, summary: dict) -> str:
        buf = io.StringIO()
        if self.fmt == "csv":
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow(["" if row.get(c) is None else (row[c] if isinstance(row[c], str) else _fmt(row[c]))
                            for c in self.columns])
        else:
            for row in self.rows:
                buf.write(json.dumps({c: _json_value(row.get(c)) for c in self.columns}) + "\n")
            buf.write(json.dumps({"summary": {k: _json_value(v) for k, v in summary.items()}}) + "\n")
        return buf.getvalue()


def _emit(cfg: RunConfig, writer: _Writer, summary: dict, line: str) -> None:
    text = writer.render(summary)
    if cfg.out:
        try:
            with open(cfg.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"--out: cannot write {cfg.out}: {exc}") from None
        print(line)
    else:
        sys.stdout.write(text)
        print(line, file=sys.stderr)


def _load(cfg: RunConfig):
    entry = catalog.get_entry(cfg.entry, **cfg.overrides)
    sol = entry.solution(cfg.solution)
    implicit = sol.implicit
    if cfg.perturb_lambda:
        implicit = implicit.with_family(implicit.family.perturbed(cfg.perturb_lambda, row=sol.perturb_row))
    grid = cfg.grid or sol.grid
    grid.check_labels(implicit.system.independent_names)
    return entry, sol, implicit, grid


def _columns(p: int, q: int, k: int) -> list:
    return ([f"x{i + 1}" for i in range(p)] + [f"u{a + 1}" for a in range(q)] + [f"r{A + 1}" for A in range(k)]
            + ["det_phi1", "rank", "status"])


def _point_row(x, u, r, det, rank, status, p, q, k) -> dict:
    row = {f"x{i + 1}": x[i] for i in range(p)}
    for a in range(q):
        row[f"u{a + 1}"] = float("nan") if u is None else u[a]
    for A in range(k):
        row[f"r{A + 1}"] = float("nan") if r is None else r[A]
    row.update(det_phi1=det, rank=rank, status=status)
    return row


def cmd_list(fmt: str = "text") -> tuple:
    ids = catalog.list_catalog()
    assert ids, "catalog is empty"
    rows = []
    for eid in ids:
        e = catalog.get_entry(eid)
        l, p, q, k = e.default.dims
        rows.append({"id": eid, "l": l, "p": p, "q": q, "k": k, "solutions": list(e.solutions), "title": e.title})
    if fmt == "json":
        return EXIT_OK, json.dumps(rows, indent=2) + "\n"
    lines = [f"{'id':<28} {'l':>2} {'p':>2} {'q':>2} {'k':>2}  solutions / description"]
    for r in rows:
        lines.append(f"{r['id']:<28} {r['l']:>2} {r['p']:>2} {r['q']:>2} {r['k']:>2}  "
                     f"{', '.join(r['solutions'])}: {r['title']}")
    return EXIT_OK, "\n".join(lines) + "\n"


def cmd_eval(cfg: RunConfig) -> int:
    entry, sol, implicit, grid = _load(cfg)
    if cfg.method == "closed" and sol.closed_form is None:
        raise ConfigError(f"--method closed: solution {sol.name!r} of {entry.id} has no closed form")
    opts = EvalOptions(newton_tol=cfg.tol) if cfg.tol is not None else EvalOptions()
    p, q, k = implicit.system.p, implicit.system.q, implicit.k
    writer = _Writer(cfg.fmt, _columns(p, q, k))
    failed = 0
    for x in grid.points():
        try:
            if cfg.method == "closed":
                u = np.asarray(sol.closed_form(x), dtype=float)
                r = implicit.family.at(u) @ x
                det = linalg.det(phi_matrices(implicit, x, u)[0])
            else:
                ev = evaluate(implicit, x, opts)
                u, r, det = ev.u, ev.r, ev.phi1_det
            rank = linalg.rank_with_tolerance(analytic_jacobian(implicit, x, u))
            writer.add(_point_row(x, u, r, det, rank, "ok", p, q, k))
        except RankSolutionsError as exc:
            failed += 1
            writer.add(_point_row(x, None, None, float("nan"), -1, _status_of(exc), p, q, k))
    n = grid.size
    summary = {"entry": entry.id, "solution": sol.name, "method": cfg.method, "points": n, "failed": failed}
    _emit(cfg, writer, summary, f"points={n} converged={n - failed} failed={failed}")
    return EXIT_NONCONVERGED if failed else EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    entry, sol, implicit, grid = _load(cfg)
    if cfg.fd_step <= 0:
        raise ConfigError("--fd-step must be positive")
    tols = dict(sol.tolerances)
    if cfg.tol is not None:
        tols["residual"] = cfg.tol
    report = verify_solution(implicit, grid, VerifyOptions(fd_step=cfg.fd_step), sol.full_field,
                             sol.full_system, sol.divergence)
    p, q, k = implicit.system.p, implicit.system.q, implicit.k
    extra = ["residual", "field_residual", "constraint", "jac_mismatch", "divergence"]
    writer = _Writer(cfg.fmt, _columns(p, q, k) + extra)
    nan = float("nan")
    for rec in report.records:
        row = _point_row(rec.x, rec.u, rec.r, rec.det_phi1, rec.rank, rec.status, p, q, k)
        row["residual"] = nan if rec.residual is None else float(np.max(np.abs(rec.residual)))
        row["field_residual"] = nan if rec.field_residual is None else float(np.max(np.abs(rec.field_residual)))
        row["constraint"] = nan if rec.constraint is None else float(np.max(np.abs(rec.constraint)))
        row["jac_mismatch"] = rec.jac_mismatch
        row["divergence"] = rec.divergence
        writer.add(row)
    a = report.aggregates
    checks = {
        "residual_ok": a["max_residual"] <= tols["residual"],
        "constraint_ok": a["max_constraint"] <= tols["constraint"],
        "jacobian_ok": a["max_jac_mismatch"] <= tols["jacobian"],
        "divergence_ok": (not sol.divergence) or a["max_divergence"] <= tols["divergence"],
        "rank_ok": a["rank_ok"],
    }
    passed = all(checks.values())
    summary = {"entry": entry.id, "solution": sol.name, "fd_step": cfg.fd_step, **a, **checks, "passed": passed}
    line = (f"max_residual={a['max_residual']!r} max_constraint={a['max_constraint']!r} "
            f"rank_ok={a['rank_ok']} points={a['points']} failed={a['failed']}")
    _emit(cfg, writer, summary, line)
    if not passed:
        return EXIT_FAILED
    return EXIT_NONCONVERGED if a["failed"] else EXIT_OK


def trace_samples(box, n: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return [lo + (hi - lo) * rng.random(len(box)) for _ in range(n)]


def cmd_trace_check(cfg: RunConfig) -> int:
    entry, sol, implicit, _ = _load(cfg)
    if cfg.samples < 1:
        raise ConfigError("--samples must be at least 1")
    tol = 1e-8 if cfg.tol is None else cfg.tol
    system = sol.trace_system or implicit.system
    samples = trace_samples(sol.r_box, cfg.samples, cfg.seed)
    probes = []
    for r in samples[:3]:
        try:
            probes.append(implicit.profile.value(r))
        except DomainError:
            pass
    family, profile = normalize_pair(implicit.family, implicit.profile, probes or [implicit.profile.value(samples[0])])
    k, q = family.k, family.q
    cols = [f"r{A + 1}" for A in range(k)] + [f"u{a + 1}" for a in range(q)] + ["initial", "symmetrized", "status"]
    writer = _Writer(cfg.fmt, cols)
    worst_init = worst_sym = 0.0
    failed = 0
    for r in samples:
        row = {f"r{A + 1}": r[A] for A in range(k)}
        try:
            u = profile.value(r)
            init = trace_condition_initial(system, family, profile, r).max_abs
            sym = trace_condition_symmetrized(system, family, profile, r).max_abs
            row.update({f"u{a + 1}": u[a] for a in range(q)}, initial=init, symmetrized=sym, status="ok")
            worst_init, worst_sym = max(worst_init, init), max(worst_sym, sym)
        except RankSolutionsError as exc:
            failed += 1
            row.update({f"u{a + 1}": float("nan") for a in range(q)}, initial=float("nan"),
                       symmetrized=float("nan"), status=_status_of(exc))
        writer.add(row)
    passed = max(worst_init, worst_sym) <= tol
    summary = {"entry": entry.id, "solution": sol.name, "samples": cfg.samples, "seed": cfg.seed,
               "max_initial": worst_init, "max_symmetrized": worst_sym, "tol": tol, "failed": failed,
               "passed": passed}
    _emit(cfg, writer, summary,
          f"max_initial={worst_init!r} max_symmetrized={worst_sym!r} samples={cfg.samples} failed={failed}")
    if not passed:
        return EXIT_FAILED
    return EXIT_NONCONVERGED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rank-solutions", description="Rank-k solutions of quasilinear hyperbolic systems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    lp = sub.add_parser("list", help="list catalog entries")
    lp.add_argument("--format", choices=["text", "json"], default="text")

    def common(sp, default_fmt="csv"):
        sp.add_argument("--entry", required=True, help="catalog entry id")
        sp.add_argument("--solution", help="named solution within the entry (default: the first)")
        sp.add_argument("--set", dest="assignments", action="append", default=[], metavar="NAME=VALUE",
                        help="parameter override; values are JSON numbers or arrays")
        sp.add_argument("--format", choices=["csv", "json"], default=default_fmt)
        sp.add_argument("--out", help="write records to this file instead of stdout")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--perturb-lambda", type=float, default=0.0,
                        help="add a constant to one wave-vector entry (negative control)")
        sp.add_argument("--tol", type=float)

    ep = sub.add_parser("eval", help="evaluate a solution on a grid")
    common(ep)
    ep.add_argument("--grid")
    ep.add_argument("--method", choices=["implicit", "closed"], default="implicit")
    vp = sub.add_parser("verify", help="residual, constraint and rank verification on a grid")
    common(vp)
    vp.add_argument("--grid")
    vp.add_argument("--fd-step", type=float, default=1e-5)
    tp = sub.add_parser("trace-check", help="trace conditions at sampled invariants")
    common(tp)
    tp.add_argument("--samples", type=int, default=100)
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig(entry=args.entry, solution=args.solution, fmt=args.format, out=args.out, seed=args.seed,
                    perturb_lambda=args.perturb_lambda, tol=args.tol)
    if cfg.tol is not None and not cfg.tol > 0:
        raise ConfigError("--tol must be positive")
    cfg.overrides = catalog.parse_overrides(args.entry, args.assignments)
    if getattr(args, "grid", None):
        cfg.grid = GridSpec.parse(args.grid)
    cfg.fd_step = getattr(args, "fd_step", cfg.fd_step)
    cfg.samples = getattr(args, "samples", cfg.samples)
    cfg.method = getattr(args, "method", cfg.method)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            code, text = cmd_list(args.format)
            sys.stdout.write(text)
            return code
        cfg = _config(args)
        handler = {"eval": cmd_eval, "verify": cmd_verify, "trace-check": cmd_trace_check}[args.command]
        return handler(cfg)
    except (ConfigError, InvalidInputError, NotFoundError) as exc:
        print(f"rank-solutions: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
