"""Logarithmic derivatives of spherical Hankel functions and the DtN symbol.

``r_n(z) = z h_n'(z) / h_n(z)`` for ``h_n = h_n^{(1)}``.  The ratio is built
from ``R_k = h_k / h_{k-1}``, which obeys the upward recurrence

    R_k = (2k - 1)/z - 1/R_{k-1},     R_1 = 1/z - i,

and ``r_n = z / R_n - (n + 1)``.  ``h_n`` is the dominant solution of the
recurrence for ``Im z >= 0`` (the only half-plane a DtN argument
``i s R / c`` with ``Re s > 0`` can reach), so the upward direction is stable
there.  No Hankel values are formed, so nothing overflows for large ``Im z``.
Below the real axis ``h_n^{(1)}`` becomes recessive for ``n < |z|`` and the
recurrence loses all accuracy; such arguments are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ComplexFreq:
    s1: float
    s2: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.s1) and np.isfinite(self.s2)):
            raise DomainError("Laplace frequency must be finite")
        if self.s1 <= 0:
            raise DomainError(f"Laplace frequency needs s1 > 0, got s1={self.s1}")

    @classmethod
    def of(cls, s) -> "ComplexFreq":
        if isinstance(s, ComplexFreq):
            return s
        s = complex(s)
        return cls(s.real, s.imag)

    @property
    def value(self) -> complex:
        return complex(self.s1, self.s2)

    def __complex__(self):
        return self.value


def _as_complex(s) -> complex:
    return ComplexFreq.of(s).value


def hankel_ratios(n_max: int, z) -> np.ndarray:
    """``r_n(z)`` for ``n = 0..n_max``; broadcasts over array ``z``.

    Output shape is ``(n_max + 1,) + shape(z)``.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("hankel_ratio is undefined at z = 0")
    if np.any(z.imag < 0):
        raise DomainError("hankel_ratio is only supported for Im z >= 0")
    out = np.empty((n_max + 1,) + z.shape, dtype=complex)
    out[0] = 1j * z - 1.0
    if n_max == 0:
        return out
    ratio = 1.0 / z - 1j
    out[1] = z / ratio - 2.0
    for k in range(2, n_max + 1):
        ratio = (2 * k - 1) / z - 1.0 / ratio
        out[k] = z / ratio - (k + 1)
    return out


def hankel_ratio(n: int, z) -> complex:
    """``r_n(z) = z h_n^{(1)}'(z) / h_n^{(1)}(z)``."""
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    z = complex(z)
    return complex(hankel_ratios(n, z)[n])


def dtn_symbols(n_max: int, s, c: float, R: float) -> np.ndarray:
    """``gamma_n(s) = r_n(i s R / c) / R`` for ``n = 0..n_max``; ``s`` may be an array."""
    s = np.asarray(s, dtype=complex)
    if np.any(s.real <= 0):
        raise DomainError("DtN symbol requires Re s > 0")
    return hankel_ratios(n_max, 1j * s * R / c) / R


def dtn_symbol(n: int, s, c: float, R: float) -> complex:
    """``gamma_n(s) = (i s / c) h_n'(i s R/c) / h_n(i s R/c)``."""
    return hankel_ratio(n, 1j * _as_complex(s) * R / c) / R


@dataclass(frozen=True, eq=False)
class DtnSymbolTable:
    """``gamma_n(s)`` for ``n = 0..n_max`` at one frequency."""

    s: ComplexFreq
    c: float
    R: float
    gamma: np.ndarray

    @classmethod
    def build(cls, s, c: float, R: float, n_max: int) -> "DtnSymbolTable":
        s = ComplexFreq.of(s)
        gamma = dtn_symbols(n_max, s.value, c, R)
        gamma.setflags(write=False)
        return cls(s, c, R, gamma)

    @property
    def n_max(self) -> int:
        return len(self.gamma) - 1

    def sign_margin(self) -> np.ndarray:
        """``Re(r_n/s) + s1/|s|^2``; non-positive for every ``n``."""
        s = self.s.value
        return (self.R * self.gamma / s).real + self.s.s1 / abs(s) ** 2


def scaled_hankel(n_max: int, z) -> np.ndarray:
    """``exp(-i z) h_n^{(1)}(z)`` for ``n = 0..n_max`` (Im z >= 0).

    The exponential factor carries all the decay in ``Im z``; the remaining
    rational part follows the same stable upward recurrence.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0) or np.any(z.imag < 0):
        raise DomainError("scaled_hankel needs z != 0 and Im z >= 0")
    out = np.empty((n_max + 1,) + z.shape, dtype=complex)
    out[0] = -1j / z
    if n_max >= 1:
        out[1] = -(z + 1j) / z**2
    for k in range(1, n_max):
        out[k + 1] = (2 * k + 1) / z * out[k] - out[k - 1]
    return out


def scaled_hankel_derivative(n_max: int, z) -> np.ndarray:
    """``exp(-i z) h_n^{(1)}'(z)`` for ``n = 0..n_max``."""
    g = scaled_hankel(n_max + 1, z)
    z = np.asarray(z, dtype=complex)
    out = np.empty((n_max + 1,) + z.shape, dtype=complex)
    out[0] = -g[1]
    for k in range(1, n_max + 1):
        out[k] = g[k - 1] - (k + 1) / z * g[k]
    return out
