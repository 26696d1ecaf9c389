"""Laplace-domain solves, stability ratios and time reconstruction."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import SystemBlocks, compose_system, energy_norms, facet_load
from .dtn import DtnOperator
from .geometry import HEMISPHERE
from .harmonics import TraceCoeffs
from .hankel import ComplexFreq
from .incident import IncidentSpec, incident_norm_sdomain, laplace_incident_total, rho_data_sdomain
from .laplace import SampledSignal, _integrate, inverse_vertical_line


@dataclass(frozen=True, eq=False)
class SDomainState:
    s: complex
    phi: np.ndarray
    u: np.ndarray          # (n_solid, 3)
    rho: TraceCoeffs | None
    residual: float

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.phi, self.u.reshape(-1)])


def rhs_from_rho(blocks: SystemBlocks, rho: TraceCoeffs, s) -> np.ndarray:
    """``rho0 s^{-1} int rho conj(psi)`` for each test function (solid rows are zero)."""
    s = ComplexFreq.of(s).value
    if rho.n_max != blocks.n_max:
        rho = _retruncate(rho, blocks.n_max)
    b = np.zeros(blocks.space.n_dofs, dtype=complex)
    b[: blocks.space.n_fluid] = blocks.mat.rho_0 / s * (blocks.Pc.T @ rho.values)
    return b


def _retruncate(rho: TraceCoeffs, n_max: int) -> TraceCoeffs:
    out = TraceCoeffs(n_max)
    for key, v in rho.as_dict().items():
        if key[0] <= n_max:
            out[key] = v
    return out


def interpolate_incident_sdomain(blocks: SystemBlocks, spec: IncidentSpec, s, free_only: bool = True):
    """Nodal values of the transformed incident field on fluid vertices."""
    space = blocks.space
    verts = space.fluid_vertices if free_only else space.fluid_all
    val, _ = laplace_incident_total(spec, space.mesh.vertices[verts], s)
    return val


def incident_load_sdomain(blocks: SystemBlocks, spec: IncidentSpec, dtn: DtnOperator, s) -> np.ndarray:
    """Nodal right-hand side built from the exact normal derivative of the incident field.

    Uses ``rho = d_n phi0 - B[I_h phi0]`` so that the boundary operator acts on
    ``phi - I_h phi0`` only; this removes the harmonic truncation from the data.
    """
    s = ComplexFreq.of(s).value
    space = blocks.space

    def dn(points, normals):
        _, grad = laplace_incident_total(spec, points, s)
        return np.einsum("fqd,fd->fq", grad, normals)

    flux = facet_load(space, HEMISPHERE, dn)
    interp = interpolate_incident_sdomain(blocks, spec, s)
    g = dtn.mode_symbols(blocks.n_max)
    tbc = blocks.P.T @ (g * (blocks.P @ interp))
    b = np.zeros(space.n_dofs, dtype=complex)
    b[: space.n_fluid] = blocks.mat.rho_0 / s * (flux - tbc)
    return b


def solve_sdomain(blocks: SystemBlocks, dtn: DtnOperator, s, rho: TraceCoeffs | None = None,
                  rhs: np.ndarray | None = None, rtol: float = 1e-10) -> SDomainState:
    """Solve ``a(X, Y) = rho0 <s^{-1} rho, psi>`` for all test pairs ``Y``."""
    s = ComplexFreq.of(s).value
    if rhs is None:
        rhs = rhs_from_rho(blocks, rho, s) if rho is not None else np.zeros(blocks.space.n_dofs, complex)
    op = compose_system(blocks, dtn, s)
    x, res = op.solve(rhs, rtol=rtol)
    phi, u = blocks.space.split(x)
    return SDomainState(s, phi, u, rho, res)


@dataclass(frozen=True)
class StabilityRecord:
    s1: float
    s2: float
    grad_phi: float
    s_phi: float
    grad_u: float
    div_u: float
    s_u: float
    incident_norm: float
    incident_h1: float
    ratio: float
    ratio_h1: float

    @property
    def lhs(self) -> float:
        return self.grad_phi + self.s_phi + self.grad_u + self.div_u + self.s_u


def stability_residual(state: SDomainState, blocks: SystemBlocks, incident_norm: float,
                       incident_h1: float = float("nan")) -> StabilityRecord:
    """Norms of the solution against ``(1+|s|)^2/s1`` times the incident data norm."""
    s = state.s
    e = energy_norms(blocks, state.x)
    grad_phi = np.sqrt(e["grad_phi"])
    s_phi = abs(s) * np.sqrt(e["phi"])
    grad_u = np.sqrt(e["grad_u"])
    div_u = np.sqrt(e["div_u"])
    s_u = abs(s) * np.sqrt(e["u"])
    lhs = grad_phi + s_phi + grad_u + div_u + s_u
    scale = (1 + abs(s)) ** 2 / s.real
    ratio = lhs / (scale * incident_norm) if incident_norm > 0 else 0.0
    ratio_h1 = lhs / (scale * incident_h1) if incident_h1 > 0 else float("nan")
    return StabilityRecord(s.real, s.imag, grad_phi, s_phi, grad_u, div_u, s_u,
                           incident_norm, incident_h1, ratio, ratio_h1)


@dataclass
class StabilityReport:
    records: list = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max((r.ratio for r in self.records), default=0.0)

    @property
    def max_ratio_h1(self) -> float:
        return max((r.ratio_h1 for r in self.records), default=0.0)

    def write_csv(self, path) -> None:
        names = list(StabilityRecord.__dataclass_fields__)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names + ["lhs"])
            for r in self.records:
                row = asdict(r)
                w.writerow([repr(float(row[k])) for k in names] + [repr(float(r.lhs))])


def incident_h1_norm(blocks: SystemBlocks, spec: IncidentSpec, s) -> float:
    """``H^1(Omega_R)`` norm of the interpolated transformed incident field."""
    v = interpolate_incident_sdomain(blocks, spec, s, free_only=False)
    q = lambda A: float(np.real(np.vdot(v, A @ v)))
    return float(np.sqrt(q(blocks.M_all) + q(blocks.K_all)))


def stability_point(blocks: SystemBlocks, spec: IncidentSpec, s, data: str = "spectral") -> StabilityRecord:
    """Solve with physical incident data at ``s`` and return its stability record."""
    s = ComplexFreq.of(s).value
    dtn = DtnOperator.build(s, spec.c, blocks.space.R, blocks.n_max)
    if data == "spectral":
        rho = rho_data_sdomain(spec, dtn, s)
        state = solve_sdomain(blocks, dtn, s, rho)
    else:
        state = solve_sdomain(blocks, dtn, s, rhs=incident_load_sdomain(blocks, spec, dtn, s))
    inc = incident_norm_sdomain(spec, s, blocks.space.R, blocks.n_max)
    return stability_residual(state, blocks, inc, incident_h1_norm(blocks, spec, s))


def stability_sweep(blocks: SystemBlocks, spec: IncidentSpec, s_values, workers: int = 1,
                    data: str = "spectral") -> StabilityReport:
    s_values = [ComplexFreq.of(s).value for s in s_values]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            recs = list(pool.map(lambda s: stability_point(blocks, spec, s, data), s_values))
    else:
        recs = [stability_point(blocks, spec, s, data) for s in s_values]
    return StabilityReport(recs)


def default_s_grid(n1: int = 7, n2: int = 9, s1_range=(0.01, 100.0), s2_max: float = 100.0):
    """Log grid in ``s1`` times a symmetric log-spaced set of ``s2`` values including 0."""
    s1 = np.geomspace(*s1_range, n1)
    half = np.geomspace(1.0, s2_max, (n2 - 1) // 2)
    s2 = np.concatenate([-half[::-1], [0.0], half])
    return [complex(a, b) for a in s1 for b in s2]


def inverse_laplace_reconstruct(values, dw: float, sigma: float, times,
                                edge_threshold: float | None = 1e-6) -> np.ndarray:
    """Time samples from transforms at ``sigma + i k dw`` (``values`` frequency-first).

    Real signals only need ``k >= 0``; the negative half follows from conjugate
    symmetry, which the real part in the inversion enforces.
    """
    return inverse_vertical_line(values, dw, sigma, times, edge_threshold)


def parseval_residual(u: SampledSignal, U, dw: float, s1: float,
                      v: SampledSignal | None = None, V=None) -> float:
    """Relative gap between the two sides of the Parseval identity.

    ``U`` (and ``V``) hold transforms at ``s1 + i k dw``, ``k = 0..J``; the
    time side uses the samples in ``u`` (and ``v``).
    """
    v = u if v is None else v
    V = U if V is None else V
    U = np.asarray(U)
    V = np.asarray(V)
    time_side = float(_integrate(np.exp(-2 * s1 * u.times) * u.values * v.values, u.dt))
    weights = np.full(len(U), dw)
    weights[0] = weights[-1] = 0.5 * dw
    freq_side = float(np.sum(weights * (U * np.conj(V)).real) / np.pi)
    if time_side == 0.0 and freq_side == 0.0:
        return 0.0
    return abs(freq_side - time_side) / max(abs(time_side), abs(freq_side))


def scattered_seminorm(blocks: SystemBlocks, state: SDomainState, spec: IncidentSpec) -> float:
    """Relative ``H^1`` seminorm of ``phi - I_h phi0`` (flat surface, no body)."""
    ref = interpolate_incident_sdomain(blocks, spec, state.s)
    diff = state.phi - ref
    q = lambda v: float(np.real(np.vdot(v, blocks.K_f @ v)))
    return float(np.sqrt(q(diff) / q(ref)))
