"""Time stepping of the coupled system with a convolution-quadrature boundary condition.

The acoustic and elastic fields are advanced together by the average
acceleration Newmark scheme.  On the hemisphere the condition
``d_n phi = T[phi] + rho`` is realised by BDF2 convolution quadrature of the
symbol ``gamma_n(s)/s`` applied to the velocity trace: this equals ``T[phi]``
for fields starting from rest, and keeps every discrete boundary work sum
non-positive (BDF2 is A-stable and ``Re(gamma_n(s)/s) < 0`` on the right
half-plane).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import CoupledOperator, SystemBlocks, facet_load
from .dtn import sobolev_weights
from .geometry import HEMISPHERE
from .harmonics import HemisphereQuadrature, mode_degrees
from .hankel import dtn_symbols
from .incident import IncidentSpec, eval_incident_total, grad_incident_total, rho_data_time


def bdf2_delta(zeta):
    """Generating polynomial of BDF2: ``3/2 - 2 zeta + zeta^2 / 2``."""
    zeta = np.asarray(zeta)
    return 1.5 - 2.0 * zeta + 0.5 * zeta**2


def bdf1_delta(zeta):
    return 1.0 - np.asarray(zeta)


_SCHEMES = {"BDF2": bdf2_delta, "BDF1": bdf1_delta}


def cq_weights(symbol, dt: float, steps: int, scheme: str = "BDF2", n_fft: int | None = None,
               real: bool = True) -> np.ndarray:
    """Taylor coefficients ``w_0..w_K`` of ``symbol(delta(zeta)/dt)``.

    ``symbol`` maps an array of Laplace frequencies (shape ``(L,)``) to values
    of shape ``(L, ...)``.  The coefficients come from an FFT on the circle
    of radius ``lam`` with ``lam^L = 1e-14``.
    """
    if dt <= 0:
        raise ValueError("time step must be positive")
    delta = _SCHEMES[scheme]
    L = n_fft or 4 * (steps + 1)
    lam = 10.0 ** (-14.0 / L)
    zeta = lam * np.exp(2j * np.pi * np.arange(L) / L)
    vals = np.asarray(symbol(delta(zeta) / dt))
    coeffs = np.fft.fft(vals, axis=0)[: steps + 1] / L
    scale = lam ** -np.arange(steps + 1)
    w = coeffs * scale.reshape((-1,) + (1,) * (vals.ndim - 1))
    return w.real if real else w


def cq_apply(weights: np.ndarray, signal: np.ndarray) -> np.ndarray:
    """Causal discrete convolution ``out_k = sum_j w_j signal_{k-j}`` along axis 0.

    ``weights`` broadcasts against one time slice of ``signal``.
    """
    signal = np.asarray(signal)
    K = signal.shape[0]
    out = np.zeros((K,) + np.broadcast_shapes(weights.shape[1:], signal.shape[1:]),
                   dtype=np.result_type(weights, signal))
    for j in range(min(K, len(weights))):
        out[j:] += weights[j] * signal[: K - j]
    return out


def bdf2_derivative(signal: np.ndarray, dt: float) -> np.ndarray:
    """BDF2 difference with zero history: ``(3 g_k - 4 g_{k-1} + g_{k-2}) / (2 dt)``."""
    g = np.asarray(signal)
    pad = np.concatenate([np.zeros((2,) + g.shape[1:], dtype=g.dtype), g])
    return (3 * pad[2:] - 4 * pad[1:-1] + pad[:-2]) / (2 * dt)


@dataclass(frozen=True, eq=False)
class CqTbc:
    """BDF2 convolution weights of ``gamma_n(s)/s`` for ``n = 0..n_max``."""

    dt: float
    steps: int
    n_max: int
    c: float
    R: float
    weights: np.ndarray    # (steps + 1, n_max + 1)
    scheme: str = "BDF2"

    @classmethod
    def build(cls, dt: float, steps: int, n_max: int, c: float = 1.0, R: float = 1.0,
              scheme: str = "BDF2") -> "CqTbc":
        w = cq_weights(lambda s: (dtn_symbols(n_max, s, c, R) / s).T, dt, steps, scheme)
        w.setflags(write=False)
        return cls(dt, steps, n_max, c, R, w, scheme)

    @property
    def mode_weights(self) -> np.ndarray:
        """Weights expanded to every hemisphere mode, ``(steps + 1, modes)``."""
        return self.weights[:, mode_degrees(self.n_max)]

    def convolve(self, signal: np.ndarray) -> np.ndarray:
        """Apply the boundary operator to a mode signal of shape ``(steps+1, modes)``."""
        return cq_apply(self.mode_weights, signal)


@dataclass(frozen=True)
class CoupledState:
    k: int
    t: float
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray


class NewmarkCQ:
    """Average-acceleration Newmark for ``M a + C v + K x = coef U (w * U^T v) + f``.

    ``w * g`` is the causal convolution with per-column weights ``W`` (shape
    ``(steps+1, r)``).  The implicit weight ``W[0]`` enters the system matrix;
    the history enters the right-hand side.  ``U`` may be ``None``.
    """

    def __init__(self, M, C, K, dt: float, U=None, W=None, coef: float = 1.0):
        self.M, self.C, self.K = (sp.csr_matrix(A) for A in (M, C, K))
        self.dt = dt
        n = self.M.shape[0]
        self.U = np.zeros((n, 0)) if U is None else np.asarray(U)
        r = self.U.shape[1]
        self.W = np.zeros((1, r)) if W is None else np.asarray(W)
        self.coef = coef
        S = self.M + 0.5 * dt * self.C + 0.25 * dt * dt * self.K
        self.op = CoupledOperator(S, self.U, -coef * 0.5 * dt * self.W[0])
        self.op.factorize()
        self.trace_v = []  # U^T v_k history

    def initial(self) -> CoupledState:
        n = self.M.shape[0]
        z = np.zeros(n)
        self.trace_v = [self.U.T @ z]
        return CoupledState(0, 0.0, z, z.copy(), z.copy())

    def _history(self, k_next: int) -> np.ndarray:
        r = self.U.shape[1]
        h = np.zeros(r)
        top = min(k_next, len(self.W) - 1)
        for j in range(1, top + 1):
            h += self.W[j] * self.trace_v[k_next - j]
        return h

    def boundary_force(self, k: int) -> np.ndarray:
        """Boundary force at step ``k`` from the stored velocity traces."""
        h = self._history(k) + self.W[0] * self.trace_v[k]
        return self.coef * (self.U @ h)

    def step(self, state: CoupledState, f_next: np.ndarray) -> CoupledState:
        dt = self.dt
        k1 = state.k + 1
        if k1 >= len(self.W) and self.U.shape[1]:
            raise ValueError(f"convolution weights only cover {len(self.W) - 1} steps")
        v_star = state.v + 0.5 * dt * state.a
        x_star = state.x + dt * state.v + 0.25 * dt * dt * state.a
        hist = self._history(k1) if self.U.shape[1] else 0.0
        rhs = f_next - self.C @ v_star - self.K @ x_star
        if self.U.shape[1]:
            rhs = rhs + self.coef * (self.U @ (self.W[0] * (self.U.T @ v_star) + hist))
        a, _ = self.op.solve(rhs, rtol=1e-9)
        v = v_star + 0.5 * dt * a
        x = x_star + 0.25 * dt * dt * a
        self.trace_v.append(self.U.T @ v)
        return CoupledState(k1, k1 * dt, x, v, a)


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    e1: float
    e2: float
    e3: float
    e4: float
    eps1: float
    eps2: float
    tbc_work: float
    rho_work: float
    balance_residual: float


ENERGY_COLUMNS = list(EnergyRecord.__dataclass_fields__)


def energy_snapshot(blocks: SystemBlocks, state: CoupledState, tbc_work: float = 0.0,
                    rho_work: float = 0.0) -> EnergyRecord:
    """``e1..e4`` from the mass and stiffness forms; work terms are passed through."""
    m = blocks.mat
    nf = blocks.space.n_fluid
    q = lambda A, v: float(v @ (A @ v)) if v.size else 0.0
    xf, xs = state.x[:nf], state.x[nf:]
    vf, vs = state.v[:nf], state.v[nf:]
    af, as_ = state.a[:nf], state.a[nf:]
    Ks = m.mu * blocks.G + (m.lam + m.mu) * blocks.D if xs.size else None
    e1 = m.rho_0 / m.c**2 * q(blocks.M_f, vf) + m.rho_0 * q(blocks.K_f, xf)
    e3 = m.rho_0 / m.c**2 * q(blocks.M_f, af) + m.rho_0 * q(blocks.K_f, vf)
    e2 = m.rho_e * q(blocks.M_s, vs) + q(Ks, xs) if xs.size else 0.0
    e4 = m.rho_e * q(blocks.M_s, as_) + q(Ks, vs) if xs.size else 0.0
    eps1 = e1 + e2
    return EnergyRecord(state.t, e1, e2, e3, e4, eps1, e3 + e4, tbc_work, rho_work,
                        eps1 - 2 * tbc_work - 2 * rho_work)


class IncidentLoad:
    """Nodal boundary data ``rho0 [int d_nu phi0 N_i - P^T T(P I_h d_t phi0)]`` on the hemisphere."""

    def __init__(self, blocks: SystemBlocks, spec: IncidentSpec, tbc: CqTbc):
        self.blocks = blocks
        self.spec = spec
        self.tbc = tbc
        space = blocks.space
        cols = np.flatnonzero(np.any(blocks.P != 0, axis=0))
        pts = space.mesh.vertices[space.fluid_vertices[cols]]
        times = tbc.dt * np.arange(tbc.steps + 1)
        vel = eval_incident_total(spec, pts[None, :, :], times[:, None], dt_order=1)  # (K+1, nb)
        trace = vel @ blocks.P[:, cols].T
        self.tbc_part = tbc.convolve(trace) @ blocks.P  # (K+1, n_fluid)

    def flux(self, t: float) -> np.ndarray:
        spec = self.spec

        def dn(points, normals):
            g = grad_incident_total(spec, points, t)
            return np.einsum("fqd,fd->fq", g, normals)

        return facet_load(self.blocks.space, HEMISPHERE, dn)

    def __call__(self, k: int) -> np.ndarray:
        b = np.zeros(self.blocks.space.n_dofs)
        b[: self.blocks.space.n_fluid] = self.blocks.mat.rho_0 * (
            self.flux(k * self.tbc.dt) - self.tbc_part[k])
        return b


@dataclass
class TimeRun:
    """Complete history of a time-domain run."""

    blocks: SystemBlocks
    tbc: CqTbc
    dt: float
    states: list
    loads: np.ndarray          # (K+1, n_dofs) data forces
    tbc_forces: np.ndarray     # (K+1, n_dofs)
    spec: IncidentSpec | None = None
    records: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.states))

    def stacked(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states])

    @property
    def peak_eps1(self) -> float:
        return max((r.eps1 for r in self.records), default=0.0)

    def balance_residual(self) -> float:
        """Max over steps of ``|eps1 - 2 W_T - 2 W_rho|`` relative to the peak of ``eps1``."""
        peak = self.peak_eps1
        if peak == 0.0:
            return 0.0
        return max(abs(r.balance_residual) for r in self.records) / peak

    def boundary_works(self) -> dict:
        """Cumulative trapezoid work of the boundary operator on the displacement,
        velocity and acceleration traces of the hemisphere (each pairs the
        operator output with its input)."""
        P = self.blocks.P_full
        coef = self.blocks.mat.rho_0
        out = {}
        for name in ("x", "v", "a"):
            g = self.stacked(name) @ P.T
            Tg = self.tbc.convolve(g)
            out[name] = coef * _trapezoid_cumulative(np.einsum("km,km->k", Tg, g), self.dt)
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(ENERGY_COLUMNS)
            for r in self.records:
                w.writerow([repr(float(getattr(r, c))) for c in ENERGY_COLUMNS])


def _trapezoid_cumulative(values: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros(len(values))
    out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]))
    return out


def time_system(blocks: SystemBlocks):
    """``(M, C, K)`` of the second-order system (``C`` is the skew interface coupling)."""
    return blocks.mass, blocks.coupling, blocks.stiffness


def run_time_domain(blocks: SystemBlocks, spec: IncidentSpec | None, dt: float, steps: int,
                    load=None, snapshot_every: int = 0, on_snapshot=None) -> TimeRun:
    """Advance ``steps`` implicit steps from rest and record energies and work."""
    m = blocks.mat
    tbc = CqTbc.build(dt, steps, blocks.n_max, m.c, blocks.space.R)
    if load is None:
        load = IncidentLoad(blocks, spec, tbc) if spec is not None else (lambda k: np.zeros(blocks.space.n_dofs))
    M, C, K = time_system(blocks)
    solver = NewmarkCQ(M, C, K, dt, U=blocks.P_full.T, W=tbc.mode_weights, coef=m.rho_0)
    state = solver.initial()
    states = [state]
    loads = [load(0)]
    tbc_forces = [solver.boundary_force(0)]
    for k in range(steps):
        f = load(k + 1)
        state = solver.step(state, f)
        states.append(state)
        loads.append(f)
        tbc_forces.append(solver.boundary_force(k + 1))
        if snapshot_every and on_snapshot and (k + 1) % snapshot_every == 0:
            on_snapshot(state)
    run = TimeRun(blocks, tbc, dt, states, np.array(loads), np.array(tbc_forces), spec)
    vel = run.stacked("v")
    w_tbc = _trapezoid_cumulative(np.einsum("kn,kn->k", run.tbc_forces, vel), dt)
    w_rho = _trapezoid_cumulative(np.einsum("kn,kn->k", run.loads, vel), dt)
    run.records = [energy_snapshot(blocks, s, w_tbc[i], w_rho[i]) for i, s in enumerate(states)]
    return run


def energy_balance_residual(run: TimeRun) -> np.ndarray:
    """Per-step ``eps1 - 2 W_T - 2 W_rho``."""
    return np.array([r.balance_residual for r in run.records])


def mirror_metric(run: TimeRun) -> float:
    """Relative space-time L2 distance between ``phi_h`` and the interpolated incident field."""
    blocks = run.blocks
    space = blocks.space
    pts = space.mesh.vertices[space.fluid_vertices]
    nf = space.n_fluid
    num = den = 0.0
    for s in run.states:
        ref = eval_incident_total(run.spec, pts, s.t)
        d = s.x[:nf] - ref
        num += float(d @ (blocks.M_f @ d))
        den += float(ref @ (blocks.M_f @ ref))
    return float(np.sqrt(num / den)) if den > 0 else 0.0


@dataclass(frozen=True)
class AprioriReport:
    lhs_sup: float
    lhs_l2: float
    rhs_323: float
    rhs_324: float
    ratio_323: float
    ratio_324: float


def solution_norms(blocks: SystemBlocks, state: CoupledState) -> np.ndarray:
    """``||phi||, ||grad phi||, ||d_t phi||, ||u||, ||d_t u||, ||grad u||_F, ||div u||``."""
    nf = blocks.space.n_fluid
    q = lambda A, v: float(np.sqrt(max(v @ (A @ v), 0.0))) if v.size else 0.0
    xf, xs = state.x[:nf], state.x[nf:]
    vf, vs = state.v[:nf], state.v[nf:]
    return np.array([q(blocks.M_f, xf), q(blocks.K_f, xf), q(blocks.M_f, vf),
                     q(blocks.M_s, xs), q(blocks.M_s, vs), q(blocks.G, xs), q(blocks.D, xs)])


def apriori_monitor(run: TimeRun, quad: HemisphereQuadrature | None = None) -> AprioriReport:
    """Solution norms against ``T ||rho||_{L1 H^-1/2} + ||d_t rho||_{L1 H^-1/2}``.

    ``rho`` and ``d_t rho`` are the hemisphere data built with the run's own CQ
    weights.  Zero data gives ratio 0 by convention.
    """
    blocks = run.blocks
    norms = np.array([solution_norms(blocks, s) for s in run.states])  # (K+1, 7)
    T = run.times[-1]
    lhs_sup = float(np.sum(norms.max(axis=0)))
    lhs_l2 = float(np.sum(np.sqrt(_trapezoid_cumulative(norms**2, run.dt)[-1]
                                  if norms.ndim == 1 else
                                  np.array([_trapezoid_cumulative(norms[:, i] ** 2, run.dt)[-1]
                                            for i in range(norms.shape[1])]))))
    w = sobolev_weights(run.tbc.n_max, -0.5, run.tbc.R)
    l1 = []
    for order in (0, 1):
        sig = rho_data_time(run.spec, run.tbc, dt_order=order, quad=quad) if run.spec is not None else None
        if sig is None:
            l1.append(0.0)
            continue
        hnorm = np.sqrt(np.sum(w[:, None] * np.abs(sig.coeffs.values) ** 2, axis=0))
        l1.append(float(_trapezoid_cumulative(hnorm, run.dt)[-1]))
    rhs_323 = T * l1[0] + l1[1]
    rhs_324 = T**1.5 * l1[0] + T**0.5 * l1[1]
    r1 = lhs_sup / rhs_323 if rhs_323 > 0 else 0.0
    r2 = lhs_l2 / rhs_324 if rhs_324 > 0 else 0.0
    return AprioriReport(lhs_sup, lhs_l2, rhs_323, rhs_324, r1, r2)
