import numpy as np
import pytest
import scipy.sparse as sp

from fsiwave.assembly import (CoupledOperator, DiscreteSpace, assemble_blocks, compose_system, element_mass,
                              energy_norms, facet_load)
from fsiwave.dtn import DtnOperator
from fsiwave.errors import SingularElement
from fsiwave.geometry import FLUID, HEMISPHERE, INTERFACE, SOLID, MeshModel

from conftest import BODY_SPEC, MAT


def test_reference_tet_mass():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
    vol = 1 / 6
    M = element_mass(np.array([vol]))[0]
    assert np.allclose(np.diag(M), vol / 10)
    assert np.allclose(M[~np.eye(4, dtype=bool)], vol / 20)
    assert verts.shape == (4, 3)


def test_degenerate_tet_raises():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]])
    mesh = MeshModel(verts, np.array([[0, 1, 2, 3]]), np.array([FLUID]), np.zeros((0, 3)), np.zeros(0))
    with pytest.raises(SingularElement):
        assemble_blocks(DiscreteSpace.build(mesh, R=1.0), MAT, n_max=2)


def test_block_symmetry_and_definiteness(body_blocks, rng):
    b = body_blocks
    for A in (b.M_f, b.K_f, b.M_s, b.G, b.D):
        assert abs(A - A.T).max() < 1e-14 * abs(A).max()
    for A in (b.M_f, b.M_s):
        x = rng.standard_normal(A.shape[0])
        assert x @ (A @ x) > 0
    for A in (b.K_f, b.G, b.D):
        x = rng.standard_normal(A.shape[0])
        assert x @ (A @ x) >= -1e-12


def test_rigid_motions_in_null_space(body_blocks):
    ns = body_blocks.space.n_solid
    for d in range(3):
        u = np.zeros((ns, 3))
        u[:, d] = 1.0
        assert np.max(np.abs(body_blocks.G @ u.ravel())) < 1e-12
        assert np.max(np.abs(body_blocks.D @ u.ravel())) < 1e-12


def test_divergence_of_linear_field(body_blocks, body_mesh):
    space = body_blocks.space
    x = body_mesh.vertices[space.solid_vertices]
    u = np.zeros_like(x)
    u[:, 0] = x[:, 0]
    vol = body_mesh.signed_volumes()[body_mesh.regions == SOLID].sum()
    assert u.ravel() @ (body_blocks.D @ u.ravel()) == pytest.approx(vol, rel=1e-12)
    assert u.ravel() @ (body_blocks.G @ u.ravel()) == pytest.approx(vol, rel=1e-12)
    # the coarse mesh cuts the ellipsoid's curvature
    assert 0.8 * BODY_SPEC.body.volume < vol < BODY_SPEC.body.volume


def test_interface_coupling_integrates_normal(body_blocks):
    # sum_i sum_j Q[i,(j,d)] = int_Gamma n_d = 0 over a closed surface
    b = body_blocks
    ones_f = np.ones(b.space.n_fluid)
    for d in range(3):
        u = np.zeros((b.space.n_solid, 3))
        u[:, d] = 1.0
        assert abs(ones_f @ (b.Q @ u.ravel())) < 1e-12


def test_coupling_is_skew(body_blocks):
    C = body_blocks.coupling
    assert abs(C + C.T).max() == 0


def test_projection_reproduces_basis(flat_blocks, rng):
    # P maps nodal values to real mode coefficients; orthonormal rows up to faceting
    P = flat_blocks.P
    assert P.shape == (210, flat_blocks.space.n_fluid)
    assert np.all(np.isfinite(P))


def test_coercivity(body_blocks, rng):
    b = body_blocks
    for _ in range(100):
        s = 10 ** rng.uniform(-1, 1) + 1j * rng.uniform(-20, 20)
        op = compose_system(b, DtnOperator.build(s, n_max=b.n_max), s)
        x = rng.standard_normal(b.space.n_dofs) + 1j * rng.standard_normal(b.space.n_dofs)
        e = energy_norms(b, x)
        m = MAT
        energy = (m.rho_0 * (e["grad_phi"] + abs(s) ** 2 / m.c**2 * e["phi"]) + m.mu * e["grad_u"]
                  + (m.lam + m.mu) * e["div_u"] + m.rho_e * abs(s) ** 2 * e["u"])
        assert op.form(x, x).real >= s.real / abs(s) ** 2 * energy * (1 - 1e-10)


def test_coupling_cancels_in_real_part(body_blocks, rng):
    x = rng.standard_normal(body_blocks.space.n_dofs) + 1j * rng.standard_normal(body_blocks.space.n_dofs)
    C = body_blocks.coupling
    assert abs(np.vdot(x, C @ x).real) < 1e-12 * np.linalg.norm(x) ** 2


def test_real_s_without_tbc_or_coupling_is_symmetric(body_blocks):
    op = compose_system(body_blocks, None, 2.0, tbc=False, coupling=False)
    A = op.S
    assert abs(A - A.T).max() < 1e-13 * abs(A).max()
    assert np.all(A.data.imag == 0)


def test_continuity_constant_finite(body_blocks, rng):
    s = 1.0 + 2j
    op = compose_system(body_blocks, DtnOperator.build(s), s)
    b = body_blocks
    H = sp.block_diag([b.M_f + b.K_f, b.M_s + b.G]).tocsr()
    ratios = []
    for _ in range(20):
        x, y = (rng.standard_normal(b.space.n_dofs) for _ in range(2))
        ratios.append(abs(op.form(x, y)) / np.sqrt((x @ H @ x) * (y @ H @ y)))
    assert np.isfinite(max(ratios))


def test_interior_fields_see_no_boundary_terms(body_blocks, rng):
    b = body_blocks
    mesh = b.space.mesh
    boundary = set(mesh.tag_vertices(HEMISPHERE)) | set(mesh.tag_vertices(INTERFACE))
    phi = rng.standard_normal(b.space.n_fluid)
    phi[[i for i, v in enumerate(b.space.fluid_vertices) if v in boundary]] = 0
    x = np.concatenate([phi, np.zeros(3 * b.space.n_solid)])
    s = 1.5 + 0.5j
    full = compose_system(b, DtnOperator.build(s), s).form(x, x)
    vol = MAT.rho_0 * (phi @ (b.K_f @ phi) / s + s * phi @ (b.M_f @ phi))
    assert full == pytest.approx(vol, rel=1e-13)


def test_tbc_sign_at_assembled_level(flat_blocks, rng):
    for _ in range(20):
        s = 10 ** rng.uniform(-2, 2) + 1j * rng.uniform(-100, 100)
        op = CoupledOperator(sp.csr_matrix((flat_blocks.space.n_dofs,) * 2),
                             flat_blocks.P_full.T,
                             -MAT.rho_0 / s * DtnOperator.build(s).mode_symbols(20))
        x = rng.standard_normal(flat_blocks.space.n_dofs) + 1j * rng.standard_normal(flat_blocks.space.n_dofs)
        assert op.form(x, x).real >= -1e-12 * np.linalg.norm(x) ** 2


def test_woodbury_solve_matches_dense(body_blocks, rng):
    s = 0.7 - 4j
    op = compose_system(body_blocks, DtnOperator.build(s), s)
    b = rng.standard_normal(body_blocks.space.n_dofs) + 0j
    x, res = op.solve(b)
    assert res < 1e-10
    assert np.allclose(op.to_dense() @ x, b, atol=1e-9 * np.linalg.norm(b))


def test_facet_load_integrates_constants(flat_blocks, flat_mesh):
    load = facet_load(flat_blocks.space, HEMISPHERE, lambda p, n: np.ones(p.shape[:2]))
    area = flat_mesh.facet_areas[flat_mesh.facet_tags == HEMISPHERE].sum()
    # Dirichlet vertices on the rim drop part of the integral
    assert 0.8 * area < load.sum() <= area
