"""Incident plane pulse, its mirror image, and the boundary data they induce.

The total incident field above the plane is

    phi0(x, t) = f(x.d - c t) - f(x.d' - c t),

where ``d'`` is ``d`` reflected in the plane ``x3 = 0``, so ``phi0`` vanishes
on the plane.  The data entering the transparent boundary condition is
``rho = d_n phi0 - T[phi0]`` on the hemisphere.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .errors import DomainError
from .harmonics import HemisphereQuadrature, TraceCoeffs, project_trace
from .hankel import ComplexFreq
from .laplace import adaptive_gauss

PULSE_KINDS = ("poly4", "sin4")


@dataclass(frozen=True)
class PulseProfile:
    """Compactly supported C^3 pulse on ``[a, b]``.

    ``poly4``: ``A ((t-a)(b-t))^4 / ((b-a)/2)^8``; ``sin4``: ``A sin^4(pi (t-a)/(b-a))``.
    Both peak at ``A`` in the middle of the support.
    """

    a: float
    b: float
    amplitude: float = 1.0
    kind: str = "poly4"
    smoothness: int = field(default=3, init=False)

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"pulse support needs a < b, got [{self.a}, {self.b}]")
        if self.kind not in PULSE_KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}; choose from {PULSE_KINDS}")

    @property
    def width(self) -> float:
        return self.b - self.a

    def scaled(self, factor: float) -> "PulseProfile":
        return PulseProfile(self.a, self.b, self.amplitude * factor, self.kind)

    def _poly4(self, tau, deriv: int):
        # Leibniz rule on p^4 q^4 with p = tau - a, q = b - tau; the factored
        # form keeps full relative accuracy next to the fourth-order end roots
        p, q = tau - self.a, self.b - tau
        falling = lambda j: factorial(4) // factorial(4 - j)
        vals = np.zeros_like(tau)
        for j in range(max(0, deriv - 4), min(deriv, 4) + 1):
            i = deriv - j
            vals = vals + comb(deriv, j) * falling(j) * p ** (4 - j) * (-1) ** i * falling(i) * q ** (4 - i)
        return self.amplitude * vals / (0.5 * self.width) ** 8

    def __call__(self, tau, deriv: int = 0):
        tau = np.asarray(tau, dtype=float)
        inside = (tau > self.a) & (tau < self.b)
        if self.kind == "poly4":
            vals = self._poly4(tau, deriv)
        else:
            # sin^4 x = 3/8 - cos(2x)/2 + cos(4x)/8
            k = np.pi / self.width
            x = k * (tau - self.a)
            shift = deriv * np.pi / 2
            vals = -0.5 * (2 * k) ** deriv * np.cos(2 * x + shift) + 0.125 * (4 * k) ** deriv * np.cos(4 * x + shift)
            if deriv == 0:
                vals = vals + 0.375
            vals = self.amplitude * vals
        return np.where(inside, vals, 0.0)

    def derivative(self, order: int = 1):
        return lambda tau: self(tau, order)

    def laplace(self, sigma, panels: int | None = None, tol: float = 1e-13):
        """``F(sigma) = int e^{sigma tau} f(tau) dtau`` by composite Gauss-Legendre."""
        sigma = np.asarray(sigma, dtype=complex)
        shift = np.exp(sigma * self.b)
        weighted = lambda tau: np.exp(sigma[..., None] * (tau - self.b)) * self(tau)
        return shift * adaptive_gauss(weighted, self.a, self.b, float(np.max(np.abs(sigma.imag), initial=0.0)),
                                      panels, tol)


def causal_pulse(R: float, width: float = 1.0, gap: float = 0.05, amplitude: float = 1.0,
                 kind: str = "poly4") -> PulseProfile:
    """Pulse whose phase support ends at ``-R - gap``.

    Every point of the ball of radius ``R`` sees a zero field for ``t <= gap/c``.
    """
    b = -R - gap
    return PulseProfile(b - width, b, amplitude, kind)


@dataclass(frozen=True)
class IncidentSpec:
    """Plane pulse travelling along ``d = (sin p cos t, sin p sin t, cos p)``, ``pi/2 < p <= pi``."""

    theta_inc: float
    phi_inc: float
    c: float
    pulse: PulseProfile

    def __post_init__(self):
        if not (0.5 * np.pi < self.phi_inc <= np.pi):
            raise DomainError(f"incident polar angle must lie in (pi/2, pi], got {self.phi_inc}")
        if self.c <= 0:
            raise DomainError("sound speed must be positive")

    @property
    def d(self) -> np.ndarray:
        sp = np.sin(self.phi_inc)
        return np.array([sp * np.cos(self.theta_inc), sp * np.sin(self.theta_inc), np.cos(self.phi_inc)])

    @property
    def d_mirror(self) -> np.ndarray:
        return self.d * np.array([1.0, 1.0, -1.0])

    def scaled(self, factor: float) -> "IncidentSpec":
        return IncidentSpec(self.theta_inc, self.phi_inc, self.c, self.pulse.scaled(factor))

    def arrival_time(self, R: float) -> float:
        """First time the field can be nonzero inside the ball of radius ``R``."""
        return max(0.0, (-R - self.pulse.b) / self.c)


def _phases(spec: IncidentSpec, x):
    x = np.asarray(x, dtype=float)
    return x @ spec.d, x @ spec.d_mirror


def eval_incident_total(spec: IncidentSpec, x, t, dt_order: int = 0):
    """``d^k/dt^k phi0(x, t)``; ``x`` has shape (..., 3), ``t`` broadcasts against it."""
    pd, pr = _phases(spec, x)
    ct = spec.c * np.asarray(t, dtype=float)
    f = spec.pulse
    scale = (-spec.c) ** dt_order
    return scale * (f(pd - ct, dt_order) - f(pr - ct, dt_order))


def eval_incident_parts(spec: IncidentSpec, x, t):
    """``(phi_inc, phi_ref)`` separately."""
    pd, pr = _phases(spec, x)
    ct = spec.c * np.asarray(t, dtype=float)
    return spec.pulse(pd - ct), -spec.pulse(pr - ct)


def grad_incident_total(spec: IncidentSpec, x, t, dt_order: int = 0):
    """Spatial gradient of ``d^k/dt^k phi0``, shape (..., 3)."""
    pd, pr = _phases(spec, x)
    ct = spec.c * np.asarray(t, dtype=float)
    f = spec.pulse
    scale = (-spec.c) ** dt_order
    gd = f(pd - ct, dt_order + 1)[..., None] * spec.d
    gr = f(pr - ct, dt_order + 1)[..., None] * spec.d_mirror
    return scale * (gd - gr)


def _laplace_plane(spec: IncidentSpec, phase, direction, s, tol):
    """Transform of ``f(phase - c t)`` and its gradient, for ``phase >= b``."""
    c = spec.c
    sig = s / c
    if np.any(phase < spec.pulse.b):
        raise DomainError("transform formula needs the pulse to start after t = 0 at every point")
    # e^{-s phase/c} F(s/c) with both exponentials merged to avoid overflow
    F_scaled = adaptive_gauss(lambda tau: np.exp(sig * (tau - spec.pulse.b)) * spec.pulse(tau),
                              spec.pulse.a, spec.pulse.b, abs(sig.imag), tol=tol)
    val = np.exp(-sig * (phase - spec.pulse.b)) * F_scaled / c
    grad = -sig * val[..., None] * direction
    return val, grad


def laplace_incident_total(spec: IncidentSpec, x, s, tol: float = 1e-13, parts: bool = False):
    """Laplace transform of ``phi0`` at points ``x``; returns ``(value, gradient)``.

    With ``parts=True`` the incident and reflected values are returned separately.
    """
    s = ComplexFreq.of(s).value
    pd, pr = _phases(spec, x)
    vi, gi = _laplace_plane(spec, pd, spec.d, s, tol)
    vr, gr = _laplace_plane(spec, pr, spec.d_mirror, s, tol)
    if parts:
        return (vi, -vr), (gi, -gr)
    return vi - vr, gi - gr


def hemisphere_traces_sdomain(spec: IncidentSpec, s, R: float, quad: HemisphereQuadrature):
    """Transformed ``phi0`` and ``d_r phi0`` at the nodes of ``quad`` on radius ``R``."""
    dirs = quad.directions
    val, grad = laplace_incident_total(spec, R * dirs, s)
    return val, np.einsum("ij,ij->i", grad, dirs)


def rho_data_sdomain(spec: IncidentSpec, dtn, s, n_max: int | None = None,
                     quad: HemisphereQuadrature | None = None) -> TraceCoeffs:
    """``rho = d_n phi0 - B phi0`` on the hemisphere, in the Laplace domain."""
    from .dtn import apply_dtn

    n_max = dtn.n_max if n_max is None else n_max
    quad = quad or HemisphereQuadrature.build(n_max)
    val, dn = hemisphere_traces_sdomain(spec, s, dtn.R, quad)
    beta = project_trace(val, n_max, dtn.R, quad)
    dbeta = project_trace(dn, n_max, dtn.R, quad)
    return dbeta - apply_dtn(dtn, beta)


def incident_norm_sdomain(spec: IncidentSpec, s, R: float, n_max: int,
                          quad: HemisphereQuadrature | None = None) -> float:
    """``||phi_inc||_{1/2} + ||phi_ref||_{1/2}`` of the transformed hemisphere traces."""
    from .dtn import sobolev_norm

    quad = quad or HemisphereQuadrature.build(n_max)
    (vi, vr), _ = laplace_incident_total(spec, R * quad.directions, s, parts=True)
    return float(sum(sobolev_norm(project_trace(v, n_max, R, quad), 0.5, R) for v in (vi, vr)))


@dataclass(frozen=True, eq=False)
class TraceSignal:
    """Hemisphere coefficients sampled on the uniform grid ``t_k = k dt``."""

    dt: float
    coeffs: TraceCoeffs  # values shape (modes, steps + 1)
    role: str

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.coeffs.values.shape[1])


def hemisphere_traces_time(spec: IncidentSpec, times, R: float, quad: HemisphereQuadrature,
                           dt_order: int = 0):
    """Time derivative ``dt_order`` of ``phi0`` and of ``d_r phi0`` at the nodes of ``quad``.

    Arrays have shape ``(nodes, len(times))``.
    """
    dirs = quad.directions
    pts = R * dirs
    t = np.asarray(times, dtype=float)[None, :]
    val = eval_incident_total(spec, pts[:, None, :], t, dt_order)
    grad = grad_incident_total(spec, pts[:, None, :], t, dt_order)
    return val, np.einsum("itj,ij->it", grad, dirs)


def rho_data_time(spec: IncidentSpec, tbc, dt_order: int = 0,
                  quad: HemisphereQuadrature | None = None) -> TraceSignal:
    """``d^k/dt^k rho`` on the grid of ``tbc``, using the same CQ weights as the solver.

    The boundary operator acts on the velocity trace with symbol ``gamma_n(s)/s``,
    which equals ``T[phi0]`` because ``phi0`` starts from rest.
    """
    quad = quad or HemisphereQuadrature.build(tbc.n_max)
    times = tbc.dt * np.arange(tbc.steps + 1)
    _, dn = hemisphere_traces_time(spec, times, tbc.R, quad, dt_order)
    vel, _ = hemisphere_traces_time(spec, times, tbc.R, quad, dt_order + 1)
    dn_c = project_trace(dn, tbc.n_max, tbc.R, quad).values
    vel_c = project_trace(vel, tbc.n_max, tbc.R, quad).values
    rho = dn_c - tbc.convolve(vel_c.T).T
    role = "rho" if dt_order == 0 else f"d{dt_order}rho"
    return TraceSignal(tbc.dt, TraceCoeffs(tbc.n_max, rho), role)
