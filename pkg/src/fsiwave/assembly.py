"""P1 finite element blocks for the coupled acoustic-elastic sesquilinear form.

Unknowns are ordered as ``[phi on free fluid nodes, u on solid nodes]`` with
``u`` stored node-major (``3 k + d``).  Fluid nodes on the sound-soft surface
carry no unknown.  The hemisphere term is kept in factored form
``P^T diag(g) P`` (``P`` maps nodal values to hemisphere coefficients) so the
sparse part stays sparse.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularElement, SolverBreakdown
from .geometry import FLUID, HEMISPHERE, INTERFACE, SOLID, SURFACE, MaterialParams, MeshModel
from .harmonics import DEFAULT_NMAX, basis_matrix, directions_to_angles, real_from_complex

# degree-4 symmetric rule on the reference triangle (barycentric points, weights sum to 1)
_TRI_A, _TRI_B = 0.445948490915965, 0.091576213509771
_TRI_POINTS = np.array([
    [_TRI_A, _TRI_A, 1 - 2 * _TRI_A], [_TRI_A, 1 - 2 * _TRI_A, _TRI_A], [1 - 2 * _TRI_A, _TRI_A, _TRI_A],
    [_TRI_B, _TRI_B, 1 - 2 * _TRI_B], [_TRI_B, 1 - 2 * _TRI_B, _TRI_B], [1 - 2 * _TRI_B, _TRI_B, _TRI_B],
])
_TRI_WEIGHTS = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)


@dataclass(frozen=True, eq=False)
class DiscreteSpace:
    mesh: MeshModel
    fluid_vertices: np.ndarray     # vertex id of each free fluid dof
    fluid_index: np.ndarray        # vertex id -> fluid dof, -1 if none
    solid_vertices: np.ndarray
    solid_index: np.ndarray
    fluid_all: np.ndarray          # every fluid-region vertex, Dirichlet ones included
    R: float

    @classmethod
    def build(cls, mesh: MeshModel, R: float | None = None) -> "DiscreteSpace":
        nv = mesh.n_vertices
        fluid_all = mesh.region_vertices(FLUID)
        dirichlet = mesh.tag_vertices(SURFACE)
        free = np.setdiff1d(fluid_all, dirichlet)
        findex = np.full(nv, -1, dtype=np.int64)
        findex[free] = np.arange(len(free))
        solid = mesh.region_vertices(SOLID) if np.any(mesh.regions == SOLID) else np.zeros(0, np.int64)
        sindex = np.full(nv, -1, dtype=np.int64)
        sindex[solid] = np.arange(len(solid))
        if R is None:
            hv = mesh.tag_vertices(HEMISPHERE)
            R = float(np.max(np.linalg.norm(mesh.vertices[hv], axis=1)))
        return cls(mesh, free, findex, solid, sindex, fluid_all, R)

    @property
    def n_fluid(self) -> int:
        return len(self.fluid_vertices)

    @property
    def n_solid(self) -> int:
        return len(self.solid_vertices)

    @property
    def n_dofs(self) -> int:
        return self.n_fluid + 3 * self.n_solid

    def split(self, x):
        x = np.asarray(x)
        return x[: self.n_fluid], x[self.n_fluid:].reshape(self.n_solid, 3)

    def join(self, phi, u):
        return np.concatenate([np.asarray(phi), np.asarray(u).reshape(-1)])

    def fluid_nodal(self, phi):
        """Expand fluid dofs to values on every mesh vertex (zero elsewhere)."""
        out = np.zeros(self.mesh.n_vertices, dtype=np.result_type(phi, float))
        out[self.fluid_vertices] = phi
        return out

    def interface_pairs(self) -> np.ndarray:
        """``(vertex, fluid-or-dirichlet flag, solid dof)`` for every interface vertex."""
        gv = self.mesh.tag_vertices(INTERFACE)
        return np.column_stack([gv, self.fluid_index[gv], self.solid_index[gv]])


def _tet_geometry(mesh: MeshModel, mask):
    tets = mesh.tets[mask]
    p = mesh.vertices[tets]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=1)
    det = np.linalg.det(J)
    vol = det / 6.0
    scale = np.max(np.linalg.norm(J, axis=2), axis=1) ** 3
    bad = np.abs(det) <= 1e-12 * scale
    if np.any(bad):
        raise SingularElement(f"{int(bad.sum())} degenerate tetrahedra (first: {np.flatnonzero(bad)[0]})")
    inv = np.linalg.inv(J)  # columns are gradients of barycentrics 1..3
    g = np.empty((len(tets), 4, 3))
    g[:, 1:] = np.transpose(inv, (0, 2, 1))
    g[:, 0] = -g[:, 1:].sum(axis=1)
    return tets, np.abs(vol), g


def element_mass(vol):
    base = (np.ones((4, 4)) + np.eye(4)) / 20.0
    return vol[:, None, None] * base


def element_stiffness(vol, grads):
    return vol[:, None, None] * np.einsum("eid,ejd->eij", grads, grads)


def _scatter(rows, cols, vals, shape):
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()


def _facet_points(mesh: MeshModel, facets):
    p = mesh.vertices[facets]
    return np.einsum("qk,fkd->fqd", _TRI_POINTS, p)


@dataclass(frozen=True, eq=False)
class SystemBlocks:
    space: DiscreteSpace
    mat: MaterialParams
    M_f: sp.csr_matrix
    K_f: sp.csr_matrix
    M_all: sp.csr_matrix   # fluid mass on all fluid-region vertices (vertex numbering)
    K_all: sp.csr_matrix
    M_s: sp.csr_matrix
    G: sp.csr_matrix
    D: sp.csr_matrix
    Q: sp.csr_matrix       # int_Gamma N_i N_j n_d, fluid dofs x solid dofs
    P: np.ndarray          # real hemisphere basis against fluid dofs, (modes, n_fluid)
    Pc: np.ndarray         # complex basis X_k (no conjugate), (modes, n_fluid)
    n_max: int

    @property
    def coupling(self) -> sp.csr_matrix:
        """Velocity coupling ``[[0, -rho0 Q], [rho0 Q^T, 0]]``; skew-symmetric."""
        r0 = self.mat.rho_0
        return sp.bmat([[None, -r0 * self.Q], [r0 * self.Q.T, None]], format="csr") \
            if self.space.n_solid else sp.csr_matrix((self.space.n_dofs, self.space.n_dofs))

    @cached_property
    def mass(self) -> sp.csr_matrix:
        m = self.mat
        return _block_diag(m.rho_0 / m.c**2 * self.M_f, m.rho_e * self.M_s)

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        m = self.mat
        return _block_diag(m.rho_0 * self.K_f, m.mu * self.G + (m.lam + m.mu) * self.D)

    @cached_property
    def P_full(self) -> np.ndarray:
        """``P`` padded with zero columns for the solid unknowns."""
        return np.hstack([self.P, np.zeros((self.P.shape[0], 3 * self.space.n_solid))])


def _block_diag(a, b):
    if b.shape[0] == 0:
        return sp.csr_matrix(a)
    return sp.block_diag([a, b], format="csr")


def assemble_blocks(space: DiscreteSpace, mat: MaterialParams, n_max: int = DEFAULT_NMAX) -> SystemBlocks:
    mat.validate()
    mesh = space.mesh
    nv = mesh.n_vertices
    free = space.fluid_vertices

    tets, vol, g = _tet_geometry(mesh, mesh.regions == FLUID)
    rows = np.repeat(tets[:, :, None], 4, axis=2)
    cols = np.repeat(tets[:, None, :], 4, axis=1)
    M_all = _scatter(rows, cols, element_mass(vol), (nv, nv))
    K_all = _scatter(rows, cols, element_stiffness(vol, g), (nv, nv))
    M_f = M_all[free][:, free].tocsr()
    K_f = K_all[free][:, free].tocsr()
    keep = space.fluid_all
    M_all = M_all[keep][:, keep].tocsr()
    K_all = K_all[keep][:, keep].tocsr()

    ns = space.n_solid
    if ns:
        tets_s, vol_s, g_s = _tet_geometry(mesh, mesh.regions == SOLID)
        loc = space.solid_index[tets_s]
        Ms, G, D = _solid_blocks(loc, vol_s, g_s, ns)
        Q = _interface_coupling(space)
    else:
        Ms = G = D = sp.csr_matrix((0, 0))
        Q = sp.csr_matrix((space.n_fluid, 0))

    P, Pc = hemisphere_projection(space, n_max)
    return SystemBlocks(space, mat, M_f, K_f, M_all, K_all, Ms, G, D, Q, P, Pc, n_max)


def _solid_blocks(loc, vol, g, ns):
    n = 3 * ns
    me = element_mass(vol)
    ke = element_stiffness(vol, g)
    rows, cols, mv, gv = [], [], [], []
    for d in range(3):
        rows.append(np.repeat(3 * loc[:, :, None] + d, 4, axis=2))
        cols.append(np.repeat(3 * loc[:, None, :] + d, 4, axis=1))
        mv.append(me)
        gv.append(ke)
    Ms = _scatter(np.stack(rows), np.stack(cols), np.stack(mv), (n, n))
    G = _scatter(np.stack(rows), np.stack(cols), np.stack(gv), (n, n))
    # (div u)(div v): entries d_a N_i d_b N_j for dofs (i, a), (j, b)
    de = vol[:, None, None, None, None] * np.einsum("eia,ejb->eiajb", g, g)
    r = np.broadcast_to((3 * loc[:, :, None] + np.arange(3))[:, :, :, None, None], de.shape)
    c = np.broadcast_to((3 * loc[:, :, None] + np.arange(3))[:, None, None, :, :], de.shape)
    D = _scatter(r, c, de, (n, n))
    return Ms, G, D


def _interface_coupling(space: DiscreteSpace) -> sp.csr_matrix:
    mesh = space.mesh
    facets = mesh.facets_with(INTERFACE)
    normals = mesh.normals[mesh.facet_tags == INTERFACE]
    area = mesh.facet_areas[mesh.facet_tags == INTERFACE]
    fm = area[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
    fi = space.fluid_index[facets]
    si = space.solid_index[facets]
    if np.any(si < 0):
        raise SingularElement("interface facet with a vertex outside the solid")
    rows, cols, vals = [], [], []
    for d in range(3):
        rows.append(np.repeat(fi[:, :, None], 3, axis=2))
        cols.append(np.repeat(3 * si[:, None, :] + d, 3, axis=1))
        vals.append(fm * normals[:, d, None, None])
    rows, cols, vals = np.stack(rows), np.stack(cols), np.stack(vals)
    keep = rows >= 0  # Dirichlet fluid rows drop out
    return sp.coo_matrix((vals[keep], (rows[keep], cols[keep])),
                         shape=(space.n_fluid, 3 * space.n_solid)).tocsr()


def hemisphere_projection(space: DiscreteSpace, n_max: int):
    """``P[k, j] = int_{Gamma_R^+} N_j X_k`` in the real and the complex basis.

    Quadrature points on the flat facets are projected radially to obtain
    angles; facet areas are used as surface weights.
    """
    mesh = space.mesh
    mask = mesh.facet_tags == HEMISPHERE
    facets = mesh.facets[mask]
    area = mesh.facet_areas[mask]
    pts = _facet_points(mesh, facets).reshape(-1, 3)
    theta, phi = directions_to_angles(pts)
    theta = np.minimum(theta, 0.5 * np.pi)
    w = (area[:, None] * _TRI_WEIGHTS[None, :]).ravel()
    Xc = basis_matrix(n_max, theta, phi, space.R) * w
    Xr = real_from_complex(n_max, Xc)
    n_q = len(_TRI_WEIGHTS)
    idx = space.fluid_index[facets]  # (F, 3)
    modes = Xr.shape[0]
    P = np.zeros((modes, space.n_fluid))
    Pc = np.zeros((modes, space.n_fluid), dtype=complex)
    for k in range(3):
        shape_k = np.tile(_TRI_POINTS[:, k], len(facets))
        col = np.repeat(idx[:, k], n_q)
        ok = col >= 0
        # accumulate shape function weights into the column of vertex k
        A = sp.coo_matrix((shape_k[ok], (np.flatnonzero(ok), col[ok])),
                          shape=(len(shape_k), space.n_fluid)).tocsr()
        P += (A.T @ Xr.T).T
        Pc += (A.T @ Xc.T).T
    return P, Pc


def facet_load(space: DiscreteSpace, tag: int, func) -> np.ndarray:
    """``int_facets func(x, normal) N_i`` for fluid dofs; ``func`` gets (F, q, 3) points."""
    mesh = space.mesh
    mask = mesh.facet_tags == tag
    facets = mesh.facets[mask]
    area = mesh.facet_areas[mask]
    normals = mesh.normals[mask]
    pts = _facet_points(mesh, facets)
    vals = func(pts, normals)  # (F, q)
    out = np.zeros(space.n_fluid, dtype=np.result_type(vals, float))
    for k in range(3):
        contrib = area * np.einsum("fq,q,q->f", vals, _TRI_WEIGHTS, _TRI_POINTS[:, k])
        idx = space.fluid_index[facets[:, k]]
        ok = idx >= 0
        np.add.at(out, idx[ok], contrib[ok])
    return out


class CoupledOperator:
    """``A = S + U diag(d) U^T`` with sparse ``S`` and a rank-``r`` hemisphere term.

    Solves use one sparse LU of ``S`` and the Woodbury identity.
    """

    def __init__(self, S: sp.spmatrix, U: np.ndarray, d: np.ndarray):
        self.S = sp.csc_matrix(S)
        self.U = U
        self.d = d
        self._lu = None
        self._cap = None

    @property
    def shape(self):
        return self.S.shape

    def matvec(self, x):
        return self.S @ x + self.U @ (self.d * (self.U.T @ x))

    def form(self, x, y) -> complex:
        """``a(x, y) = y^H A x``."""
        return complex(np.vdot(y, self.matvec(x)))

    def to_dense(self) -> np.ndarray:
        return self.S.toarray() + (self.U * self.d) @ self.U.T

    def factorize(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.S)
            except RuntimeError as exc:
                raise SolverBreakdown(f"sparse factorization failed: {exc}") from exc
            Z = self._lu.solve(np.asarray(self.U, dtype=self.S.dtype))
            cap = np.eye(len(self.d), dtype=np.result_type(self.d, Z)) + self.d[:, None] * (self.U.T @ Z)
            self._Z = Z
            self._cap = sla.lu_factor(cap)
        return self

    def _solve_once(self, b):
        y = self._lu.solve(b)
        corr = sla.lu_solve(self._cap, self.d * (self.U.T @ y))
        return y - self._Z @ corr

    def solve(self, b, rtol: float = 1e-10, refine: int = 3):
        self.factorize()
        b = np.asarray(b, dtype=np.result_type(self.S.dtype, b))
        bnorm = np.linalg.norm(b)
        if bnorm == 0:
            return np.zeros_like(b), 0.0
        x = self._solve_once(b)
        res = np.linalg.norm(b - self.matvec(x)) / bnorm
        for _ in range(refine):
            if res < rtol:
                break
            x = x + self._solve_once(b - self.matvec(x))
            res = np.linalg.norm(b - self.matvec(x)) / bnorm
        if not np.isfinite(res) or res >= rtol:
            raise SolverBreakdown(f"relative residual {res:.2e} above {rtol:.0e}")
        return x, res


def compose_system(blocks: SystemBlocks, dtn, s, tbc: bool = True, coupling: bool = True) -> CoupledOperator:
    """Matrix of ``a((phi,u),(psi,v))`` at frequency ``s`` (row = test function)."""
    from .hankel import ComplexFreq

    s = ComplexFreq.of(s).value
    m = blocks.mat
    S = (m.rho_0 * (blocks.K_f / s + s / m.c**2 * blocks.M_f)).astype(complex)
    if blocks.space.n_solid:
        Ss = (m.mu * blocks.G + (m.lam + m.mu) * blocks.D) / s + s * m.rho_e * blocks.M_s
        S = sp.block_diag([S, Ss], format="csr")
        if coupling:
            S = S + blocks.coupling
    U = blocks.P_full.T
    if tbc:
        g = dtn.mode_symbols(blocks.n_max)
        d = -m.rho_0 / s * g
    else:
        d = np.zeros(U.shape[0], dtype=complex)
    return CoupledOperator(S, U, d)


def energy_norms(blocks: SystemBlocks, x) -> dict:
    """Squared L2 norms of the discrete field ``x`` and of its derivatives."""
    phi, u = blocks.space.split(x)
    uf = u.reshape(-1)
    q = lambda A, v: float(np.real(np.vdot(v, A @ v))) if v.size else 0.0
    return {
        "grad_phi": q(blocks.K_f, phi),
        "phi": q(blocks.M_f, phi),
        "grad_u": q(blocks.G, uf),
        "div_u": q(blocks.D, uf),
        "u": q(blocks.M_s, uf),
    }
