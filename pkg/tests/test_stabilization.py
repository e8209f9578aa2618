import warnings

import numpy as np
import pytest

from cgstab import build_reference_element
from cgstab.fluxes import Burgers, LinearAdvection
from cgstab.stabilization import (
    Mesh1D,
    StabilizationSpec,
    assemble_system,
    lps_project_gradient,
    semi_discrete_energy_rate,
    tau_cell,
)

from conftest import ALL_DEGREES, ALL_FAMILIES, ALL_STABS


def make_system(family="basic", p=1, kind="none", delta=0.0, n=8,
                boundary="periodic", flux=None, bc=None):
    mesh = Mesh1D(0.0, 2.0, n, boundary)
    ref = build_reference_element(family, p)
    return assemble_system(mesh, ref, StabilizationSpec(kind, delta),
                           flux or LinearAdvection(1.0), bc=bc)


def test_tau_formulas():
    assert tau_cell(StabilizationSpec("supg", 0.5), 0.1, 2.0) == pytest.approx(0.025)
    assert tau_cell(StabilizationSpec("cip", 0.1), 0.1, 1.0) == pytest.approx(1e-3)
    assert tau_cell(StabilizationSpec("lps", 0.3), 0.2, 2.0) == pytest.approx(0.12)
    assert tau_cell(StabilizationSpec("none", 0.0), 0.1, 1.0) == 0.0


def test_tau_supg_zero_speed_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tau = tau_cell(StabilizationSpec("supg", 0.5), 0.1, 0.0)
    assert tau == 0.0
    assert any("zero speed" in str(w.message) for w in caught)


def test_mesh_dof_counts():
    assert Mesh1D(0, 1, 10, "periodic").n_nodes(3) == 30
    assert Mesh1D(0, 1, 10, "dirichlet").n_nodes(3) == 31
    with pytest.raises(ValueError):
        Mesh1D(0, 1, 10, "neumann")


@pytest.mark.parametrize("family", ALL_FAMILIES)
@pytest.mark.parametrize("kind,delta", ALL_STABS)
def test_constant_state_annihilated(family, kind, delta):
    system = make_system(family, 2, kind, delta)
    U = np.full(system.n_nodes, 3.7)
    r = system.residual(U)
    assert np.max(np.abs(r)) < 1e-13


def test_pure_galerkin_convection_skew():
    system = make_system("basic", 2, "none", 0.0)
    rng = np.random.default_rng(3)
    for _ in range(5):
        U = rng.normal(size=system.n_nodes)
        assert abs(U @ system.residual(U)) < 1e-12 * (U @ U)


@pytest.mark.parametrize("family", ALL_FAMILIES)
@pytest.mark.parametrize("degree", ALL_DEGREES)
@pytest.mark.parametrize("kind,delta", ALL_STABS)
def test_conservation_periodic(family, degree, kind, delta):
    system = make_system(family, degree, kind, delta)
    rng = np.random.default_rng(degree)
    U = rng.normal(size=system.n_nodes)
    r = system.residual(U)
    assert abs(r.sum()) < 1e-12 * max(np.linalg.norm(r), 1.0)


def test_conservation_burgers():
    system = make_system("cubature", 2, "cip", 0.2, flux=Burgers())
    rng = np.random.default_rng(5)
    U = rng.normal(size=system.n_nodes)
    r = system.residual(U)
    assert abs(r.sum()) < 1e-12 * max(np.linalg.norm(r), 1.0)


def test_residual_linear_in_state():
    system = make_system("bernstein", 2, "lps", 0.4)
    rng = np.random.default_rng(11)
    U, V = rng.normal(size=(2, system.n_nodes))
    lhs = system.residual(2.5 * U - 1.25 * V)
    rhs = 2.5 * system.residual(U) - 1.25 * system.residual(V)
    assert np.max(np.abs(lhs - rhs)) < 1e-11


def test_cip_matches_hand_assembled_matrix():
    """Four-cell periodic P1 mesh against an independent jump assembly."""
    n, dx = 4, 0.5
    system = make_system("basic", 1, "cip", 0.37, n=n)
    delta, a = 0.37, 1.0
    tau = delta * dx**2 * a
    S = np.zeros((n, n))
    for f in range(n):  # face at node f: cells f-1 (left), f (right)
        jump = np.zeros(n)
        left, right = (f - 1) % n, f
        # d/dx u in cell c = (U[c+1] - U[c]) / dx
        jump[(right + 1) % n] += 1.0 / dx
        jump[right] -= 1.0 / dx
        jump[(left + 1) % n] += -1.0 / dx
        jump[left] -= -1.0 / dx
        S += tau * np.outer(jump, jump)
    rng = np.random.default_rng(2)
    U = rng.normal(size=n)
    r_conv = make_system("basic", 1, "none", 0.0, n=n).residual(U)
    r_full = system.residual(U)
    assert np.max(np.abs((r_conv - S @ U) - r_full)) < 1e-13


def test_lps_projection_constant_and_linear():
    system = make_system("basic", 2, "lps", 0.3, boundary="dirichlet",
                         bc=lambda t: (np.array([0.0]), np.array([2.0])))
    W = lps_project_gradient(system, np.full(system.n_nodes, 4.0))
    assert np.max(np.abs(W)) < 1e-12
    U = system.node_x.copy()
    W = lps_project_gradient(system, U)[:, 0]
    inner = slice(2, -2)
    assert np.max(np.abs(W[inner] - 1.0)) < 1e-10


def test_lps_projection_cubature_needs_no_factorization():
    system = make_system("cubature", 2, "lps", 0.3)
    assert system._proj_solver is None and system._proj_diag is not None
    rng = np.random.default_rng(8)
    U = rng.normal(size=system.n_nodes)
    W = lps_project_gradient(system, U)
    # diagonal projection solves the lumped system, not the consistent one
    lumped = np.asarray(system.M_galerkin.sum(axis=1)).ravel()
    assert np.max(np.abs(lumped[:, None] * W - system._lps_weak_grad @ U[:, None])) < 1e-12


def test_energy_rate_none_zero():
    system = make_system("basic", 3, "none", 0.0)
    rng = np.random.default_rng(4)
    U = rng.normal(size=system.n_nodes)
    assert abs(semi_discrete_energy_rate(system, U)) < 1e-12 * (U @ U)


@pytest.mark.parametrize("family", ALL_FAMILIES)
@pytest.mark.parametrize("degree", ALL_DEGREES)
@pytest.mark.parametrize("kind", ["cip", "lps"])
def test_energy_rate_nonpositive(family, degree, kind):
    system = make_system(family, degree, kind, 0.5)
    rng = np.random.default_rng(degree + len(kind))
    for _ in range(100):
        U = rng.normal(size=system.n_nodes)
        assert semi_discrete_energy_rate(system, U) <= 1e-12 * (U @ U)


def test_energy_rate_cip_matches_jump_sum():
    system = make_system("basic", 2, "cip", 0.41, n=6)
    rng = np.random.default_rng(12)
    U = rng.normal(size=system.n_nodes)
    rate = semi_discrete_energy_rate(system, U)
    # independent evaluation of -sum_f tau [u_x]^2
    dx = system.mesh.dx
    tau = 0.41 * dx**2
    cells = U[system.cell_dofs]
    gl = cells @ system.d_right / dx
    gr = cells @ system.d_left / dx
    jumps = gr - np.roll(gl, 1)
    assert rate == pytest.approx(-tau * np.sum(jumps**2), rel=1e-10, abs=1e-12)


def test_energy_rate_lps_matches_projection_defect():
    system = make_system("cubature", 3, "lps", 0.27, n=6)
    rng = np.random.default_rng(13)
    U = rng.normal(size=system.n_nodes)
    rate = semi_discrete_energy_rate(system, U)
    dx = system.mesh.dx
    tau = 0.27 * dx
    W = lps_project_gradient(system, U)[:, 0]
    cells_u = U[system.cell_dofs]
    cells_w = W[system.cell_dofs]
    ux = cells_u @ system.Vd.T / dx
    wq = cells_w @ system.V.T
    w = system.ref.quad_weights
    defect = dx * np.sum(w[None, :] * (ux - wq) ** 2)
    assert rate == pytest.approx(-tau * defect, rel=1e-10, abs=1e-12)


def test_energy_rate_rejects_supg():
    system = make_system("basic", 1, "supg", 0.3)
    with pytest.raises(ValueError):
        semi_discrete_energy_rate(system, np.ones(system.n_nodes))


def test_supg_mass_block_included():
    plain = make_system("basic", 2, "none", 0.0)
    supg = make_system("basic", 2, "supg", 0.4)
    diff = (supg.mass_matrix - plain.mass_matrix).toarray()
    assert np.max(np.abs(diff)) > 1e-3
    # the SUPG block has zero row sums, so the lumped masses coincide
    assert np.allclose(supg.lumped, plain.lumped, atol=1e-13)


def test_dirichlet_residual_rows_zeroed():
    system = make_system("basic", 2, "cip", 0.1, boundary="dirichlet",
                         bc=lambda t: (np.array([1.0]), np.array([-1.0])))
    rng = np.random.default_rng(6)
    U = rng.normal(size=system.n_nodes)
    r = system.residual(U)
    assert r[0] == 0.0 and r[-1] == 0.0
