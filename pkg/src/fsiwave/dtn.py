"""Spectral Dirichlet-to-Neumann operator on hemisphere traces.

The operator is diagonal in the hemisphere basis: the coefficient of degree
``n`` is multiplied by ``gamma_n(s)``.  Trace-space norms are the spectral
ones, with Laplace-Beltrami weights ``(1 + n(n+1)/R^2)^order``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TruncationMismatch
from .harmonics import (DEFAULT_NMAX, HemisphereQuadrature, TraceCoeffs,
                        mode_degrees, mode_orders, project_trace)
from .hankel import ComplexFreq, DtnSymbolTable, scaled_hankel, scaled_hankel_derivative


@dataclass(frozen=True, eq=False)
class DtnOperator:
    table: DtnSymbolTable
    n_max: int

    @classmethod
    def build(cls, s, c: float = 1.0, R: float = 1.0, n_max: int = DEFAULT_NMAX) -> "DtnOperator":
        return cls(DtnSymbolTable.build(s, c, R, n_max), n_max)

    @property
    def s(self) -> complex:
        return self.table.s.value

    @property
    def R(self) -> float:
        return self.table.R

    def mode_symbols(self, n_max: int | None = None) -> np.ndarray:
        """``gamma_n`` repeated for every mode of degree ``n``."""
        n_max = self.n_max if n_max is None else n_max
        return self.table.gamma[mode_degrees(n_max)]


def _expand(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    return weights.reshape(weights.shape + (1,) * (values.ndim - 1))


def apply_dtn(op: DtnOperator, omega: TraceCoeffs) -> TraceCoeffs:
    if omega.n_max > op.n_max:
        raise TruncationMismatch(
            f"trace truncated at n_max={omega.n_max} exceeds operator n_max={op.n_max}")
    g = op.mode_symbols(omega.n_max)
    return TraceCoeffs(omega.n_max, _expand(g, omega.values) * omega.values)


def sobolev_weights(n_max: int, order: float, R: float = 1.0) -> np.ndarray:
    n = mode_degrees(n_max)
    return (1.0 + n * (n + 1) / R**2) ** order


def sobolev_norm(omega: TraceCoeffs, order: float, R: float = 1.0):
    """Spectral ``H^order`` norm on the hemisphere; trailing axes are kept."""
    w = sobolev_weights(omega.n_max, order, R)
    return np.sqrt(np.sum(_expand(w, omega.values) * np.abs(omega.values) ** 2, axis=0))


def dtn_quadratic_form(op: DtnOperator, omega: TraceCoeffs, s=None) -> complex:
    """``<s^{-1} B omega, omega>`` over the hemisphere; its real part is never positive."""
    s = op.s if s is None else ComplexFreq.of(s).value
    g = op.mode_symbols(omega.n_max)
    return complex(np.sum(g / s * np.abs(omega.values) ** 2))


def dual_pairing(a: TraceCoeffs, b: TraceCoeffs) -> complex:
    """``<a, b>`` over the hemisphere, conjugate-linear in ``b``."""
    if a.n_max != b.n_max:
        raise TruncationMismatch(f"n_max {a.n_max} != {b.n_max}")
    return complex(np.vdot(b.values, a.values))


def boundedness_constant(op: DtnOperator) -> float:
    """Exact ``sup ||B w||_{-1/2} / ||w||_{1/2}`` for the truncated operator."""
    n = np.arange(1, op.n_max + 1)
    return float(np.max(np.abs(op.table.gamma[1:]) / (1.0 + n * (n + 1) / op.R**2)))


def boundedness_power_iteration(op: DtnOperator, iters: int = 200, rng=None) -> float:
    """Estimate the same constant by power iteration on the normal operator.

    In coordinates ``v = W^{1/2} beta`` (``W`` the ``H^{1/2}`` weights) the map
    is diagonal with entries ``gamma_n / (1 + n(n+1)/R^2)``; its largest
    singular value is the operator norm.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n = mode_degrees(op.n_max)
    d = op.table.gamma[n] / (1.0 + n * (n + 1) / op.R**2)
    v = rng.standard_normal(len(n)) + 1j * rng.standard_normal(len(n))
    for _ in range(iters):
        v = np.conj(d) * (d * v)
        v /= np.linalg.norm(v)
    return float(np.linalg.norm(d * v))


def radiating_mode_traces(n: int, m: int, s, c: float, R: float, n_max: int,
                          quad: HemisphereQuadrature | None = None):
    """Project the trace and radial derivative of ``h_n(i s r / c) X_n^m`` at ``r = R``.

    Both are scaled by ``exp(s R / c)`` to keep them O(1); the DtN relation is
    linear so the scaling cancels.  Returns ``(trace, normal_derivative)``.
    """
    s = ComplexFreq.of(s).value
    quad = quad or HemisphereQuadrature.build(n_max)
    z = 1j * s * R / c
    h = scaled_hankel(n, z)[n]
    dh = scaled_hankel_derivative(n, z)[n]
    pick = np.flatnonzero((mode_degrees(n_max) == n) & (mode_orders(n_max) == m))
    X = quad.basis(n_max, R)[pick[0]]
    trace = project_trace(h * X, n_max, R, quad)
    deriv = project_trace((1j * s / c) * dh * X, n_max, R, quad)
    return trace, deriv
