
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rank_solutions import catalog as C
from rank_solutions import engine as E
from rank_solutions import verification as V
from rank_solutions.errors import DomainError, InconsistentProfileError, InvalidInputError, NotFoundError

IDS = [
    "example1_scalar_evolution",
    "example3_hydro_2plus1",
    "example4_isentropic",
    "example4_euler_m2",
    "example5_general",
    "example5_euler3d",
]


def test_registry_ids_and_round_trip():
    assert C.list_catalog() == IDS
    for entry_id in IDS:
        entry = C.get_entry(entry_id)
        assert entry.id == entry_id
        assert entry.default is entry.solution()
        for name, reg in entry.solutions.items():
            assert entry.solution(name) is reg
            assert reg.grid.labels == reg.system.independent_names
        again = C.get_entry(entry_id, **C.parameter_defaults(entry_id))
        assert again.params == entry.params


def test_registry_errors():
    with pytest.raises(NotFoundError):
        C.get_entry("example2")
    with pytest.raises(NotFoundError):
        C.get_entry("example1_scalar_evolution").solution("nope")
    with pytest.raises(InvalidInputError):
        C.get_entry("example4_euler_m2", q=3)
    with pytest.raises(InvalidInputError):
        C.parse_overrides("example4_euler_m2", ["m"])
    with pytest.raises(InvalidInputError):
        C.parse_overrides("example4_euler_m2", ["m=abc"])
    with pytest.raises(InvalidInputError):
        C.parse_overrides("example5_general", ["alpha=[1, 2]"])
    assert C.parse_overrides("example5_general", ["alpha=[[1,0],[0,2]]", "k=3"]) == {
        "alpha": [[1.0, 0.0], [0.0, 2.0]], "k": 3}


@pytest.mark.parametrize("entry_id", IDS)
def test_default_grid_verifies(entry_id):
    reg = C.get_entry(entry_id).default
    pts = reg.grid.points()[:: max(1, reg.grid.size // 40)]
    for x in pts:
        rec = V.verify_point(reg.implicit, x, full_field=reg.full_field, full_system=reg.full_system,
                             check_divergence=reg.divergence)
        assert rec.ok, rec.message
        assert np.max(np.abs(rec.residual)) <= 1e-6
        assert np.max(np.abs(rec.constraint)) <= 1e-6 if rec.constraint.size else True
        if rec.field_residual is not None:
            assert np.max(np.abs(rec.field_residual)) <= 1e-6
        assert rec.rank <= reg.implicit.k


# example 1 -------------------------------------------------------------------

def test_scalar_evolution_matches_characteristics():
    sol = C.get_entry("example1_scalar_evolution").solution("wave2").implicit
    x = np.array([0.3, 0.2, -0.4])
    u = E.evaluate(sol, x).u
    # u is constant along the characteristic through (0, x - u t)
    assert np.allclose(u, sol.profile.value(x[1:] - u * x[0]), atol=1e-13)


# example 3 -------------------------------------------------------------------

def test_hydro_read_off_at_t0():
    entry = C.get_entry("example3_hydro_2plus1", g2=0.0, a2=0.0)
    for name in ("velocity_waves", "opposed_orientation"):
        u = E.evaluate(entry.solution(name).implicit, [0.0, 0.3, 0.4]).u
        assert np.allclose(u, [0.3, 0.4], atol=1e-14)


def test_hydro_linear_elimination():
    entry = C.get_entry("example3_hydro_2plus1", g2=0.0, a2=0.0)
    for t, x, y in ((0.5, 0.3, -0.2), (0.25, -0.4, 0.1)):
        expected = [x / (1 + t), y / (1 + t)]
        for name in ("velocity_waves", "opposed_orientation"):
            assert np.allclose(E.evaluate(entry.solution(name).implicit, [t, x, y]).u, expected, atol=1e-13)


def test_hydro_relations_and_sign_control():
    entry = C.get_entry("example3_hydro_2plus1")
    rel = entry.checks["relations"]
    flipped = C.HydroRelations(rel.g1, rel.g2, 0.0, 0.0, 0.5, sign=-1.0)
    sol = entry.solution("velocity_waves").implicit
    x = np.array([0.5, 0.3, 0.4])
    u = E.evaluate(sol, x).u
    assert np.max(np.abs(rel.residual(x, u))) <= 1e-13
    assert np.allclose(rel.solve(x), u, atol=1e-12)
    assert np.max(np.abs(flipped.residual(x, u))) > 1e-2
    # the flipped relations, solved exactly, do not satisfy the system
    field = flipped.solve
    assert np.max(np.abs(V.pde_residual(sol.system, field, x))) > 1e-3


@pytest.mark.parametrize("A", [(0.0, 0.0, 0.0, 0.0), (0.7, -1.1, 2.0, 0.3)])
def test_hydro_relations_solve_for_any_coefficients(A):
    entry = C.get_entry("example3_hydro_2plus1", A11=A[0], A12=A[1], A21=A[2], A22=A[3])
    reg = entry.solution("velocity_waves")
    for x in ([0.3, 0.1, 0.2], [0.5, -0.4, 0.3]):
        assert np.max(np.abs(V.pde_residual(reg.system, reg.full_field, x))) <= 1e-8


def test_hydro_bc_terms_still_solved():
    entry = C.get_entry("example3_hydro_2plus1", b=0.8, c=-1.3)
    reg = entry.solution("opposed_orientation")
    for x in ([0.3, 0.1, 0.2], [0.5, -0.4, 0.3]):
        u = E.evaluate(reg.implicit, x).u
        assert np.allclose(u, reg.closed_form(x), atol=1e-12)
        assert np.max(np.abs(V.pde_residual(reg.system, reg.full_field, x))) <= 1e-8


# example 4: isentropic --------------------------------------------------------

def test_monge_ampere_gate():
    assert C.monge_ampere_residual(C.power_potential(2.0), 0.0) <= 1e-12
    assert C.monge_ampere_residual(C.power_potential(2.5), 0.0) <= 1e-12
    with pytest.raises(InconsistentProfileError):
        C.example4_isentropic(C=0.0, h=C.bilinear_potential())
    entry = C.example4_isentropic(C=-1.0, h=C.bilinear_potential())
    assert entry.checks["potential"].name == "bilinear"
    with pytest.raises(InconsistentProfileError):
        C.get_entry("example4_isentropic", C=1.0)


def test_gaussian_curvature():
    samples = [np.array(r) for r in ((0.3, 0.7), (1.2, 0.5), (1.9, 1.9))]
    for h, Cval in ((C.power_potential(2.0), 0.0), (C.bilinear_potential(), -1.0)):
        for r in samples:
            k_graph = C.gaussian_curvature_graph(h, r)
            assert abs(k_graph - C.gaussian_curvature_formula(h, Cval, r)) <= 1e-12
    h = C.bilinear_potential()
    r = samples[1]
    g = h.grad(r)
    unsquared = -1.0 / (1.0 + g @ g)
    assert abs(C.gaussian_curvature_graph(h, r) - unsquared) > 1e-2


def test_isentropic_sound_speed_and_field():
    entry = C.get_entry("example4_isentropic", C1=0.5, a0=2.0)
    a = entry.checks["sound_speed"]
    assert a(0.0) == 2.0
    assert abs(a(1.0) - 2.0 * 2.25 ** (-1 / 5)) <= 1e-15
    reg = entry.default
    for x in ([1.0, 0.5, 0.7], [1.5, 0.2, 0.9]):
        assert np.max(np.abs(V.pde_residual(reg.full_system, reg.full_field, x))) <= 1e-6
    with pytest.raises(DomainError):
        C.get_entry("example4_isentropic", C1=-1.0).checks["sound_speed"](1.0)


# example 4: Euler -------------------------------------------------------------

def test_euler_closed_form_branches():
    entry = C.get_entry("example4_euler_m2")
    sol = entry.default.implicit
    minus, plus = C.euler_m2_closed_form(-1.0), C.euler_m2_closed_form(1.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = np.array([rng.uniform(0.5, 2), rng.uniform(0.1, 1), rng.uniform(0.1, 1)])
        u = E.evaluate(sol, x).u
        assert np.max(np.abs(u - minus(x))) <= 1e-12
        assert np.max(np.abs(sol.residual(x, plus(x)))) <= 1e-10
        assert np.max(np.abs(u - plus(x))) > 1e-3


def test_euler_domain_errors():
    cf = C.euler_m2_closed_form(-1.0)
    with pytest.raises(DomainError):
        cf([0.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        cf([1.0, -1.0, 0.5])
    with pytest.raises(InvalidInputError):
        C.euler_m2_closed_form(0.5)
    prof = C.euler_m_profile(2.5)
    with pytest.raises(DomainError):
        prof.value([-1.0, 1.0])
    with pytest.raises(DomainError):
        prof.value([1.0, 0.0])
    with pytest.raises(DomainError):
        C.euler_m_profile(-1.0).value([0.0, 1.0])
    assert np.all(np.isfinite(prof.value([0.5, 1.0])))


# example 5 --------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.floats(-0.9, 2.0), st.floats(-1.0, 1.0), st.floats(0.0, 1.0), st.floats(-1.0, 1.0))
def test_example5_scalar_closed_form(alpha, beta, t, x):
    vel, _, _, det_b = C.example5_closed_form([[alpha]], beta, 1.0, 5.0)
    assert abs(vel([t, x])[0] - (beta + alpha * x) / (1 + alpha * t)) <= 1e-12
    assert abs(det_b(t) - (1 + alpha * t)) <= 1e-15


def test_example5_nilpotent_constant_sound_speed():
    entry = C.get_entry("example5_general")
    a = entry.checks["sound_speed"]
    for t in (0.0, 0.3, 1.7):
        assert entry.checks["det_b"](t) == 1.0
        assert a(t) == 1.0


def test_example5_random_alpha_residual():
    rng = np.random.default_rng(5)
    alpha = 0.4 * rng.standard_normal((2, 2))
    entry = C.get_entry("example5_general", alpha=alpha.tolist(), beta=0.2)
    reg = entry.default
    for _ in range(10):
        x = np.array([rng.uniform(0, 0.5), rng.uniform(-1, 1), rng.uniform(-1, 1)])
        assert np.max(np.abs(E.evaluate(reg.implicit, x).u - reg.closed_form(x))) <= 1e-12
        assert np.max(np.abs(V.pde_residual(reg.full_system, reg.full_field, x))) <= 1e-7


def test_example5_singular_time_is_domain_error():
    _, a, _, _ = C.example5_closed_form([[-1.0]], 0.0, 1.0, 5.0)
    with pytest.raises(DomainError):
        a(1.0)
    with pytest.raises(DomainError):
        a(2.0)


def test_euler3d_hand_values():
    entry = C.get_entry("example5_euler3d")
    reg = entry.default
    x = np.array([0.5, 0.3, 1.0, 0.0])
    # s = 0.5 (1 - 0) = 0.5, u1 = (1 - 0.25)(0 - 0.25)
    assert np.allclose(reg.closed_form(x), [-0.1875, 0.5, 0.5], atol=1e-15)
    assert np.allclose(E.evaluate(reg.implicit, x).u, [-0.1875, 0.5, 0.5], atol=1e-13)
    jac = entry.checks["data_jacobian"]
    for r in ([0.1, 0.2, 0.3], [1.0, -1.0, 0.5]):
        m = jac(np.array(r))
        assert np.max(np.abs(m @ m @ m)) <= 1e-15
        for t in (0.0, 0.5, 1.0):
            assert abs(entry.checks["det_b"](t, r) - 1.0) <= 1e-14
    flat = C.get_entry("example5_euler3d", f2_slope=0.0).default
    assert np.allclose(E.evaluate(flat.implicit, x).u[1:], 0.0)


def test_charpoly_constancy():
    jac = C.get_entry("example5_euler3d").checks["data_jacobian"]
    samples = [np.array(r) for r in ([0.1, 0.2, 0.3], [1.0, -1.0, 0.5], [-0.7, 0.4, 0.9])]
    assert C.charpoly_constancy(jac, samples) <= 1e-12
    varying = lambda r: np.diag([r[0], 0.0, 0.0])
    assert C.charpoly_constancy(varying, samples) > 0.5
