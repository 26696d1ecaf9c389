"""Laplace/Fourier utilities for causal signals.

Conventions: ``L(u)(s) = int_0^inf e^{-st} u(t) dt`` and, on the vertical line
``s = sigma + i w``, the real-signal inversion

    u(t) = e^{sigma t} / pi * Re int_0^inf L(u)(sigma + i w) e^{i w t} dw.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AliasingDetected, QuadratureNotConverged, TailNotNegligible


def gauss_nodes(a: float, b: float, panels: int, order: int = 8):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def adaptive_gauss(func, a: float, b: float, freq_scale: float = 0.0, panels: int | None = None,
                   tol: float = 1e-13, max_panels: int = 4096):
    """Integrate ``func(nodes) @ weights`` on ``[a, b]``, doubling panels until two levels agree.

    Agreement is measured against the integral of ``|func|``.

    ``func`` maps a node array of shape ``(q,)`` to values of shape ``(..., q)``.
    ``freq_scale`` (largest angular frequency of the integrand) sets the first panel count.
    """
    if panels is None:
        panels = int(max(8, np.ceil(freq_scale * (b - a) / 2.0) + 8))
    nodes, w = gauss_nodes(a, b, panels)
    prev = func(nodes) @ w
    while True:
        panels *= 2
        nodes, w = gauss_nodes(a, b, panels)
        vals = func(nodes)
        cur = vals @ w
        # relative to int |f|: oscillatory integrands can cancel far below rounding level
        scale = max(float(np.max(np.abs(vals) @ w, initial=0.0)), 1e-300)
        if np.max(np.abs(cur - prev), initial=0.0) <= tol * scale:
            return cur
        if panels >= max_panels:
            raise QuadratureNotConverged(
                f"Gauss quadrature did not reach tolerance {tol:g} with {panels} panels")
        prev = cur


def laplace_compact(func, a: float, b: float, s, tol: float = 1e-13):
    """``int_a^b e^{-s t} u(t) dt`` for ``u`` supported in ``[a, b]``, ``a >= 0``."""
    s = np.asarray(s, dtype=complex)
    # factor out e^{-s a} so the integrand stays O(1) for large Re s
    inner = adaptive_gauss(lambda t: np.exp(-s[..., None] * (t - a)) * func(t), a, b,
                           float(np.max(np.abs(s.imag), initial=0.0)), tol=tol)
    return np.exp(-s * a) * inner


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Samples ``u(k dt)``, ``k = 0..K``, along the first axis; zero for ``t < 0`` when causal."""

    dt: float
    values: np.ndarray
    causal: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("time step must be positive")

    @classmethod
    def from_function(cls, func, dt: float, t_end: float, causal: bool = True) -> "SampledSignal":
        t = dt * np.arange(int(round(t_end / dt)) + 1)
        return cls(dt, np.asarray(func(t)), causal)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))

    @property
    def t_end(self) -> float:
        return self.dt * (len(self.values) - 1)

    def scaled(self, factor: float) -> "SampledSignal":
        return SampledSignal(self.dt, self.values * factor, self.causal)


def gregory_weights(n: int) -> np.ndarray:
    """Fourth-order Gregory end-corrected trapezoid weights for ``n`` samples (unit spacing)."""
    if n < 8:
        w = np.ones(n)
        w[0] = w[-1] = 0.5
        return w
    w = np.ones(n)
    corr = np.array([3 / 8, 7 / 6, 23 / 24])
    w[:3] = corr
    w[-3:] = corr[::-1]
    return w


def _integrate(values: np.ndarray, dt: float) -> np.ndarray:
    w = gregory_weights(len(values)) * dt
    return np.tensordot(w, values, axes=(0, 0))


def laplace_forward(signal: SampledSignal, s, tail_threshold: float = 1e-10):
    """Quadrature of ``int_0^T e^{-st} u(t) dt``; returns ``(value, error_estimate)``.

    The estimate compares the full grid with every second sample.  ``s`` may be
    an array; results then carry its shape in front of the signal's trailing axes.
    """
    s = np.asarray(s, dtype=complex)
    vals = np.asarray(signal.values)
    t = signal.times
    T = signal.t_end
    tail = np.max(np.abs(vals[-1]), initial=0.0)
    peak = max(float(np.max(np.abs(vals), initial=0.0)), 1e-300)
    if tail > tail_threshold * peak * np.exp(np.min(s.real, initial=0.0) * T):
        raise TailNotNegligible(
            f"|u(T)| = {tail:.3e} is not negligible at T = {T:g}; extend the grid")
    kern = np.exp(-np.multiply.outer(s, t))  # (..., K+1)
    w_full = gregory_weights(len(t)) * signal.dt
    full = np.tensordot(kern * w_full, vals, axes=(-1, 0))
    if len(t) >= 17:
        idx = np.arange(0, len(t), 2)
        w_half = gregory_weights(len(idx)) * 2 * signal.dt
        # an odd-length grid keeps the end point in the coarse set
        half = np.tensordot(kern[..., idx] * w_half, vals[idx], axes=(-1, 0))
        err = np.abs(full - half) / 15.0
    else:
        err = np.full(np.shape(full), np.inf)
    return full, err


def inverse_vertical_line(values, dw: float, sigma: float, times, edge_threshold: float | None = 1e-6):
    """Recover a real causal signal from transforms at ``sigma + i k dw``, ``k = 0..J``.

    ``values`` has the frequency index first.  The trapezoid rule in ``w`` is
    exact up to periodization with period ``2 pi / dw`` and truncation at
    ``J dw``; the latter is checked through the magnitude at the window edge.
    """
    values = np.asarray(values, dtype=complex)
    J = values.shape[0] - 1
    if edge_threshold is not None and J > 0:
        edge = np.max(np.abs(values[-1]), initial=0.0)
        peak = np.max(np.abs(values), initial=0.0)
        if peak > 0 and edge > edge_threshold * peak:
            raise AliasingDetected(
                f"transform at the frequency window edge is {edge / peak:.2e} of its peak")
    w = dw * np.arange(J + 1)
    weights = np.full(J + 1, dw)
    weights[0] = weights[-1] = 0.5 * dw
    times = np.asarray(times, dtype=float)
    phase = np.exp(1j * np.multiply.outer(times, w)) * weights
    integral = np.tensordot(phase, values, axes=(-1, 0))
    damp = np.exp(sigma * times).reshape(times.shape + (1,) * (values.ndim - 1))
    return damp / np.pi * integral.real


def antiderivative_symbol_check(signal: SampledSignal, sigma: float, w_max: float,
                                dw: float | None = None) -> float:
    """Compare ``int_0^t u`` (Gregory-free cumulative trapezoid) with ``L^{-1}(L(u)/s)``.

    Returns the max deviation over the signal's grid.
    """
    vals = np.asarray(signal.values)
    if not np.any(vals):
        return 0.0
    T = signal.t_end
    if dw is None:
        dw = np.pi / (2.0 * T)
    w = np.arange(0.0, w_max + 0.5 * dw, dw)
    s = sigma + 1j * w
    U, _ = laplace_forward(signal, s)
    Ushape = U / s.reshape((-1,) + (1,) * (U.ndim - 1))
    rec = inverse_vertical_line(Ushape, dw, sigma, signal.times, edge_threshold=None)
    cum = np.concatenate([np.zeros((1,) + vals.shape[1:]),
                          np.cumsum(0.5 * (vals[1:] + vals[:-1]) * signal.dt, axis=0)])
    return float(np.max(np.abs(rec - cum)))


def parseval_pair(u: SampledSignal, v: SampledSignal, s1: float, w_max: float | None = None,
                  dw: float | None = None):
    """Both sides of the Parseval identity for real causal signals.

    Frequency side: ``(1/2pi) int_R u^(s) conj(v^(s)) ds2`` with the transforms
    taken from the samples; time side: ``int_0^T e^{-2 s1 t} u v dt``.
    """
    if u.dt != v.dt or len(u.values) != len(v.values):
        raise ValueError("Parseval pairing needs matched time grids")
    if not (np.any(u.values) and np.any(v.values)):
        return 0.0, 0.0
    uv = np.asarray(u.values) * np.asarray(v.values)
    T = u.t_end
    time_side = float(_integrate(np.exp(-2 * s1 * u.times) * uv, u.dt))
    if w_max is None:
        w_max = np.pi / u.dt
    if dw is None:
        dw = np.pi / (2.0 * T)
    w = np.arange(0.0, w_max + 0.5 * dw, dw)
    s = s1 + 1j * w
    U, _ = laplace_forward(u, s)
    V, _ = laplace_forward(v, s)
    weights = np.full(len(w), dw)
    weights[0] = weights[-1] = 0.5 * dw
    freq_side = float(np.sum(weights * (U * np.conj(V)).real) / np.pi)
    return freq_side, time_side


def parseval_pair_compact(func_u, func_v, support, s1: float, w_max: float, dw: float):
    """Parseval sides for functions with known compact support ``[a, b]`` (``a >= 0``).

    Transforms and the time integral use adaptive Gauss quadrature; the
    frequency integral is a trapezoid rule on ``[0, w_max]`` with step ``dw``,
    which is exact up to truncation once ``2 pi / dw`` exceeds ``b``.
    """
    a, b = support
    time_side = float(adaptive_gauss(lambda t: np.exp(-2 * s1 * t) * func_u(t) * func_v(t), a, b))
    w = np.arange(0.0, w_max + 0.5 * dw, dw)
    s = s1 + 1j * w
    U = laplace_compact(func_u, a, b, s)
    V = laplace_compact(func_v, a, b, s)
    weights = np.full(len(w), dw)
    weights[0] = weights[-1] = 0.5 * dw
    freq_side = float(np.sum(weights * (U * np.conj(V)).real) / np.pi)
    return freq_side, time_side
