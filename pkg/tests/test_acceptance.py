"""Acceptance criteria 1-9, each reported as one PASS/FAIL line."""

import json
import math

import numpy as np

from rank_solutions import catalog as C
from rank_solutions import engine as E
from rank_solutions import linalg
from rank_solutions import system as S
from rank_solutions import verification as V
from rank_solutions import waves as W
from rank_solutions.cli import main

IDS = C.list_catalog()
EULER_IDS = ("example4_euler_m2", "example5_euler3d")


def cli_json(capsys, tmp_path, *argv):
    """Run the CLI with JSON output to a file; return (exit code, records, summary)."""
    path = tmp_path / "out.jsonl"
    code = main(list(argv) + ["--format", "json", "--out", str(path)])
    capsys.readouterr()
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    return code, lines[:-1], lines[-1]["summary"]


def grid_box(reg):
    return [(lo, hi) for _, lo, hi, _ in reg.grid.axes]


def test_criterion_1_euler_closed_form(report_criterion):
    reg = C.get_entry("example4_euler_m2").default
    sol, closed = reg.implicit, reg.closed_form
    grid = V.GridSpec.parse("t=0.5:2:10,x=0.1:1:10,y=0.1:1:10")
    worst = 0.0
    for x in grid.points():
        u = E.evaluate(sol, x).u
        worst = max(worst, float(np.max(np.abs(u - closed(x)))))
    a1 = E.evaluate(sol, [1.0, 0.0, 1.0]).u
    a2 = E.evaluate(sol, [1.0, 1.0, 0.0]).u
    anchors = max(float(np.max(np.abs(a1 - [0.0, 0.0]))), float(np.max(np.abs(a2 - [-1.0, -2.0]))))
    ok = grid.size == 1000 and worst <= 1e-10 and anchors <= 1e-10
    report_criterion(1, "Euler m=2 implicit vs closed form", ok,
                     f"max|du|={worst:.2e} over {grid.size} points, anchors {anchors:.1e}")
    assert ok


def test_criterion_2_pde_residuals(report_criterion, capsys, tmp_path):
    details, ok = [], True
    for entry_id in IDS:
        code, _, summary = cli_json(capsys, tmp_path, "verify", "--entry", entry_id, "--fd-step", "1e-5")
        good = code == 0 and summary["max_residual"] <= 1e-6 and summary["failed"] == 0
        if entry_id in EULER_IDS:
            good = good and summary["max_divergence"] <= 1e-7
        ok = ok and good
        details.append(f"{entry_id}:{summary['max_residual']:.1e}")
    report_criterion(2, "PDE residuals on default grids", ok, ", ".join(details))
    assert ok


# expected solution rank of each registered solution
EXPECTED_RANK = {
    ("example1_scalar_evolution", "wave2"): 2,
    ("example1_scalar_evolution", "simple_wave"): 1,
    ("example3_hydro_2plus1", "velocity_waves"): 2,
    ("example3_hydro_2plus1", "opposed_orientation"): 2,
    ("example4_isentropic", "velocity_potential"): 1,
    ("example4_euler_m2", "implicit"): 1,
    ("example5_general", "linear_data"): 1,
    ("example5_euler3d", "nilpotent_data"): 2,
}


def _fd_jacobian(sol, x, u, h=1e-5):
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        up = E.evaluate(sol, x + e, guess=u).u
        um = E.evaluate(sol, x - e, guess=u).u
        cols.append((up - um) / (2 * h))
    return np.stack(cols, axis=1)


def test_criterion_3_jacobian_identity(report_criterion):
    rng = np.random.default_rng(2024)
    ok, details = True, []
    for (entry_id, name), expected in EXPECTED_RANK.items():
        reg = C.get_entry(entry_id).solution(name)
        sol = reg.implicit
        box = np.array(grid_box(reg))
        worst, sv_ratio, ranks = 0.0, 0.0, set()
        for _ in range(100):
            x = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random(len(box))
            u = E.evaluate(sol, x).u
            jac = E.analytic_jacobian(sol, x, u)
            fd = _fd_jacobian(sol, x, u)
            worst = max(worst, float(np.max(np.abs(jac - fd))))
            ranks.add(E.solution_rank(sol, x, u=u))
            if expected == 1:
                sv = np.linalg.svd(fd, compute_uv=False)
                if sv[0] > 0:
                    sv_ratio = max(sv_ratio, float(sv[1] / sv[0]))
        good = worst <= 1e-6 and max(ranks) <= sol.k and max(ranks) == expected
        if expected == 1:
            good = good and sv_ratio <= 1e-6
        ok = ok and good
        details.append(f"{entry_id}/{name}:{worst:.1e}")
    report_criterion(3, "analytic vs finite-difference Jacobian, rank bounds", ok, ", ".join(details))
    assert ok


def test_criterion_4_constraints(report_criterion):
    ok, details = True, []
    for entry_id in IDS:
        reg = C.get_entry(entry_id).default
        sol = reg.implicit
        frame = W.OrthogonalFrame(sol.family)
        rep = V.verify_solution(sol, reg.grid)
        us = [r.u for r in rep.records if r.ok]
        ortho = W.check_orthogonality(sol.family, frame, us)
        good = rep["failed"] == 0 and rep["max_constraint"] <= 1e-6 and ortho.max_violation <= 1e-12
        ok = ok and good
        details.append(f"{entry_id}:{rep['max_constraint']:.1e}/{ortho.max_violation:.0e}")
    report_criterion(4, "orthogonal-frame constraints and exact orthogonality", ok, ", ".join(details))
    assert ok


def test_criterion_5_trace_conditions(report_criterion, capsys, tmp_path):
    ok, details = True, []
    for entry_id in IDS:
        entry = C.get_entry(entry_id)
        for name in entry.solutions:
            code, records, summary = cli_json(capsys, tmp_path, "trace-check", "--entry", entry_id,
                                              "--solution", name, "--samples", "100")
            worst = max(summary["max_initial"], summary["max_symmetrized"])
            ok = ok and code == 0 and len(records) == 100 and summary["failed"] == 0 and worst <= 1e-8
        code, _, summary = cli_json(capsys, tmp_path, "trace-check", "--entry", entry_id,
                                    "--perturb-lambda", "0.1", "--samples", "100")
        control = max(summary["max_initial"], summary["max_symmetrized"])
        ok = ok and code == 3 and control > 1e-3
        details.append(f"{entry_id}:control={control:.2e}")
    report_criterion(5, "trace conditions and perturbed-lambda control", ok, ", ".join(details))
    assert ok


def test_criterion_6_example5_structure(report_criterion):
    entry = C.get_entry("example5_general")
    dets = [entry.checks["det_b"](t) for t in (0.0, 0.5, 1.0)]
    det_ok = all(abs(d - 1.0) <= 1e-14 for d in dets)
    a = entry.checks["sound_speed"]
    speeds = [a(t) for t in np.linspace(0.0, 3.0, 13)]
    const_ok = max(speeds) - min(speeds) == 0.0

    rng = np.random.default_rng(11)
    spread = 0.0
    for _ in range(5):
        while True:
            alpha = 0.6 * rng.standard_normal((2, 2))
            if np.linalg.cond(alpha) < 20 and all(np.linalg.det(np.eye(2) + t * alpha) > 0.2 for t in (0.0, 0.25, 0.5)):
                break
        sol = C.get_entry("example5_general", alpha=alpha.tolist(), beta=0.1).default.implicit
        for t in (0.0, 0.25, 0.5):
            coeffs = []
            for _ in range(10):
                x = np.concatenate([[t], rng.uniform(-1, 1, 2)])
                u = E.evaluate(sol, x).u
                du = E.analytic_jacobian(sol, x, u)[:, 1:]
                coeffs.append(linalg.charpoly_coefficients(du))
            coeffs = np.array(coeffs)
            spread = max(spread, float(np.max(np.ptp(coeffs, axis=0))))
    ok = det_ok and const_ok and spread <= 1e-10
    report_criterion(6, "example 5 determinant, constant sound speed, invariant charpoly", ok,
                     f"det err {max(abs(d - 1) for d in dets):.0e}, charpoly spread {spread:.1e}")
    assert ok


def test_criterion_7_monge_ampere(report_criterion):
    rng = np.random.default_rng(7)
    samples = [rng.uniform(0.1, 2.0, 2) for _ in range(100)]
    worst = 0.0
    for m in (2.0, 2.5, 3.0, -1.0):
        h = C.power_potential(m)
        worst = max(worst, C.monge_ampere_residual(h, 0.0, samples))
        C.example4_isentropic(m=m)
    try:
        C.example4_isentropic(C=0.0, h=C.bilinear_potential())
        rejected = False
    except C.InconsistentProfileError:
        rejected = True
    accepted = C.example4_isentropic(C=-1.0, h=C.bilinear_potential()).params["C"] == -1.0
    curv = 0.0
    for h, cval in [(C.power_potential(m), 0.0) for m in (2.0, 2.5, 3.0)] + [(C.bilinear_potential(), -1.0)]:
        for r in samples:
            curv = max(curv, abs(C.gaussian_curvature_graph(h, r) - C.gaussian_curvature_formula(h, cval, r)))
    ok = worst <= 1e-10 and rejected and accepted and curv <= 1e-8
    report_criterion(7, "Monge-Ampere gate and Gaussian curvature", ok,
                     f"power residual {worst:.1e}, curvature {curv:.1e}")
    assert ok


def test_criterion_8_rank1_ode_order(report_criterion):
    sys = S.scalar_evolution_system(lambda u: np.array([u[0]]), 1, 2)
    selector = E.field_selector(lambda u: np.array([u[0] ** 2, u[0] * u[1]]))
    lam = lambda u: np.array([-u[0], 1.0])

    def run(step):
        return E.integrate_rank1_profile(sys, lam, np.array([0.5, 1.0]), (0.0, 1.0), step, selector)

    diffs, ok = [], True
    for s in (0.2, 0.1, 0.05, 0.025):
        coarse, fine = run(s), run(s / 2)
        table = E.profile_table(coarse)
        d = max(float(np.max(np.abs(v - fine.value([r])))) for r, v in zip(table.nodes, table.values))
        diffs.append(d)
        ok = ok and d <= 16 * s ** 4
    orders = [math.log2(a / b) for a, b in zip(diffs, diffs[1:])]
    ok = ok and all(3.6 <= p <= 4.4 for p in orders)
    report_criterion(8, "rank-1 profile ODE step halving", ok,
                     "orders " + ", ".join(f"{p:.2f}" for p in orders))
    assert ok


def test_criterion_9_determinism(report_criterion, capsys, tmp_path):
    commands = [
        ["list", "--format", "json"],
        ["eval", "--entry", "example4_euler_m2", "--grid", "t=0.5:2:4,x=0.1:1:4,y=0.1:1:4"],
        ["verify", "--entry", "example3_hydro_2plus1", "--grid", "t=0:0.5:3,x=-0.5:0.5:3,y=-0.5:0.5:3"],
        ["trace-check", "--entry", "example4_isentropic", "--seed", "3", "--samples", "30"],
        ["trace-check", "--entry", "example5_euler3d", "--seed", "5", "--format", "json", "--perturb-lambda", "0.1"],
    ]
    ok = True
    for argv in commands:
        outputs = []
        for i in range(2):
            if argv[0] == "list":
                main(argv)
                outputs.append(capsys.readouterr().out.encode())
            else:
                path = tmp_path / f"run{i}"
                main(argv + ["--out", str(path)])
                stdout = capsys.readouterr().out
                outputs.append(path.read_bytes() + stdout.encode())
        ok = ok and outputs[0] == outputs[1] and len(outputs[0]) > 0
    report_criterion(9, "byte-identical output for identical configurations", ok, f"{len(commands)} commands")
    assert ok
