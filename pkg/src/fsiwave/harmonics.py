"""Hemisphere-adapted spherical harmonics.

The functions ``X_n^m = sqrt(2)/R * Y_n^m`` with ``n + m`` odd vanish on the
equatorial plane and form an orthonormal system on the hemisphere of radius
``R``.  ``Y_n^m`` are the orthonormal complex harmonics with Condon-Shortley
phase (scipy convention); ``theta`` is the polar angle from +x3, ``phi`` the
azimuth.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import sph_harm_y

from .errors import InvalidIndex, TruncationMismatch

DEFAULT_NMAX = 20


@dataclass(frozen=True, order=True)
class HarmonicIndex:
    n: int
    m: int

    def __post_init__(self):
        check_index(self.n, self.m)


def check_index(n: int, m: int) -> None:
    if n < 1 or abs(m) > n:
        raise InvalidIndex(f"invalid harmonic index (n={n}, m={m})")
    if (n + m) % 2 == 0:
        raise InvalidIndex(f"n + m must be odd, got (n={n}, m={m})")


@lru_cache(maxsize=None)
def _index_arrays(n_max: int):
    ns, ms = [], []
    for n in range(1, n_max + 1):
        for m in range(-n, n + 1):
            if (n + m) % 2:
                ns.append(n)
                ms.append(m)
    n_arr, m_arr = np.array(ns), np.array(ms)
    n_arr.setflags(write=False)
    m_arr.setflags(write=False)
    return n_arr, m_arr


def valid_indices(n_max: int) -> list:
    """All ``(n, m)`` with ``1 <= n <= n_max``, ``|m| <= n``, ``n + m`` odd."""
    n_arr, m_arr = _index_arrays(n_max)
    return list(zip(n_arr.tolist(), m_arr.tolist()))


def mode_count(n_max: int) -> int:
    return n_max * (n_max + 1) // 2


def mode_degrees(n_max: int) -> np.ndarray:
    return _index_arrays(n_max)[0]


def mode_orders(n_max: int) -> np.ndarray:
    return _index_arrays(n_max)[1]


class TraceCoeffs:
    """Coefficients ``beta_n^m`` of a hemisphere trace, for all valid ``n <= n_max``.

    ``values`` may carry trailing axes (e.g. time samples):
    shape ``(mode_count(n_max), ...)``.
    """

    __slots__ = ("n_max", "values")

    def __init__(self, n_max: int, values=None):
        self.n_max = int(n_max)
        if values is None:
            values = np.zeros(mode_count(self.n_max), dtype=complex)
        values = np.asarray(values)
        if values.shape[:1] != (mode_count(self.n_max),):
            raise TruncationMismatch(
                f"expected {mode_count(self.n_max)} coefficients for n_max={self.n_max}, "
                f"got leading dimension {values.shape[:1]}")
        self.values = values

    @classmethod
    def unit(cls, n_max: int, n: int, m: int, value=1.0) -> "TraceCoeffs":
        out = cls(n_max)
        out[n, m] = value
        return out

    @classmethod
    def from_dict(cls, n_max: int, entries: dict) -> "TraceCoeffs":
        out = cls(n_max)
        for (n, m), v in entries.items():
            out[n, m] = v
        return out

    def _pos(self, key) -> int:
        n, m = key
        check_index(n, m)
        if n > self.n_max:
            raise TruncationMismatch(f"degree {n} exceeds n_max={self.n_max}")
        # modes of degree k occupy k consecutive slots
        return (n - 1) * n // 2 + (m + n - 1) // 2

    def __getitem__(self, key):
        return self.values[self._pos(key)]

    def __setitem__(self, key, value):
        if not np.iscomplexobj(self.values):
            self.values = self.values.astype(complex)
        self.values[self._pos(key)] = value

    @property
    def degrees(self) -> np.ndarray:
        return mode_degrees(self.n_max)

    def as_dict(self) -> dict:
        return dict(zip(valid_indices(self.n_max), self.values))

    def copy(self) -> "TraceCoeffs":
        return TraceCoeffs(self.n_max, self.values.copy())

    def _check(self, other):
        if not isinstance(other, TraceCoeffs):
            return NotImplemented
        if other.n_max != self.n_max:
            raise TruncationMismatch(f"n_max {self.n_max} != {other.n_max}")
        return other

    def __add__(self, other):
        other = self._check(other)
        return TraceCoeffs(self.n_max, self.values + other.values)

    def __sub__(self, other):
        other = self._check(other)
        return TraceCoeffs(self.n_max, self.values - other.values)

    def __mul__(self, scalar):
        return TraceCoeffs(self.n_max, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return TraceCoeffs(self.n_max, -self.values)

    def __repr__(self):
        return f"TraceCoeffs(n_max={self.n_max}, shape={self.values.shape})"


@dataclass(frozen=True, eq=False)
class HemisphereQuadrature:
    """Tensor Gauss-Legendre (in cos theta on [0, 1]) x trapezoid (azimuth) rule.

    Weights integrate over the unit upper hemisphere (they sum to 2*pi).  With
    the default sizes the rule is exact for products of basis functions up to
    degree ``2 * n_max``.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    n_max: int
    _basis: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, n_max: int = DEFAULT_NMAX, n_theta: int | None = None, n_phi: int | None = None):
        n_theta = n_theta or n_max + 1
        n_phi = n_phi or 2 * n_max + 2
        x, w = np.polynomial.legendre.leggauss(n_theta)
        cos_t = 0.5 * (x + 1.0)
        w_t = 0.5 * w
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        T, P = np.meshgrid(np.arccos(cos_t), phi, indexing="ij")
        W = np.outer(w_t, np.full(n_phi, 2 * np.pi / n_phi))
        return cls(T.ravel(), P.ravel(), W.ravel(), n_max)

    @property
    def directions(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.column_stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    def points(self, R: float) -> np.ndarray:
        return R * self.directions

    def __len__(self):
        return len(self.weights)

    def basis(self, n_max: int, R: float = 1.0) -> np.ndarray:
        """Read-only ``basis_matrix`` at the nodes, computed once per ``(n_max, R)``."""
        key = (n_max, float(R))
        if key not in self._basis:
            X = basis_matrix(n_max, self.theta, self.phi, R)
            X.setflags(write=False)
            self._basis[key] = X
        return self._basis[key]

    def projector(self, n_max: int, R: float = 1.0) -> np.ndarray:
        """Rows ``conj(X_n^m) w R^2``: applied to nodal samples they give the inner products."""
        key = ("proj", n_max, float(R))
        if key not in self._basis:
            wX = np.conj(self.basis(n_max, R)) * (self.weights * R * R)
            wX.setflags(write=False)
            self._basis[key] = wX
        return self._basis[key]


def eval_basis(idx, theta, phi, R: float = 1.0):
    """``X_n^m(theta, phi) = sqrt(2)/R * Y_n^m(theta, phi)``."""
    if not isinstance(idx, HarmonicIndex):
        idx = HarmonicIndex(*idx)
    theta = np.asarray(theta, float)
    if np.any(theta < 0) or np.any(theta > 0.5 * np.pi + 1e-12):
        raise ValueError("polar angle must lie in [0, pi/2] on the upper hemisphere")
    out = np.sqrt(2.0) / R * sph_harm_y(idx.n, idx.m, theta, np.asarray(phi, float))
    return out if np.ndim(out) else complex(out)


def basis_matrix(n_max: int, theta, phi, R: float = 1.0) -> np.ndarray:
    """Complex basis values, shape ``(mode_count(n_max), n_points)``."""
    n, m = _index_arrays(n_max)
    theta = np.asarray(theta, float).ravel()
    phi = np.asarray(phi, float).ravel()
    return np.sqrt(2.0) / R * sph_harm_y(n[:, None], m[:, None], theta[None, :], phi[None, :])


def real_basis_matrix(n_max: int, theta, phi, R: float = 1.0) -> np.ndarray:
    """Real orthonormal basis spanning the same degree-wise spaces.

    ``m > 0``: sqrt(2) (-1)^m Re X_n^m, ``m < 0``: sqrt(2) (-1)^m Im X_n^|m|,
    ``m = 0``: X_n^0.  Any operator acting diagonally in ``n`` has the same
    kernel in either basis.
    """
    return real_from_complex(n_max, basis_matrix(n_max, theta, phi, R))


def real_from_complex(n_max: int, X: np.ndarray) -> np.ndarray:
    """Real basis rows from complex basis rows (same mode ordering)."""
    n, m = _index_arrays(n_max)
    pos = (n - 1) * n // 2 + (np.abs(m) + n - 1) // 2  # row of (n, |m|)
    Y = X[pos]
    sign = np.where(m % 2 == 0, 1.0, -1.0)[:, None]
    return np.where((m > 0)[:, None], np.sqrt(2) * sign * Y.real,
                    np.where((m < 0)[:, None], np.sqrt(2) * sign * Y.imag, Y.real))


def project_trace(samples, n_max: int, R: float = 1.0, quad: HemisphereQuadrature | None = None) -> TraceCoeffs:
    """Inner products ``<field, X_n^m>`` over the hemisphere of radius ``R``.

    ``samples`` holds the field at ``quad`` nodes along the first axis; any
    trailing axes are projected independently.
    """
    quad = quad or HemisphereQuadrature.build(n_max)
    samples = np.asarray(samples)
    if samples.shape[0] != len(quad):
        raise ValueError(f"expected {len(quad)} samples, got {samples.shape[0]}")
    wX = quad.projector(n_max, R)
    flat = samples.reshape(len(quad), -1)
    vals = (wX @ flat).reshape((wX.shape[0],) + samples.shape[1:])
    return TraceCoeffs(n_max, vals)


def synthesize_trace(coeffs: TraceCoeffs, theta, phi, R: float = 1.0) -> np.ndarray:
    """Evaluate ``sum beta_n^m X_n^m`` at the given directions."""
    X = basis_matrix(coeffs.n_max, theta, phi, R)
    vals = coeffs.values.reshape(X.shape[0], -1)
    out = X.T @ vals
    return out.reshape((X.shape[1],) + coeffs.values.shape[1:])


def gram_matrix(n_max: int, R: float = 1.0, quad: HemisphereQuadrature | None = None) -> np.ndarray:
    quad = quad or HemisphereQuadrature.build(n_max)
    X = quad.basis(n_max, R)
    return (X * (quad.weights * R * R)) @ X.conj().T


def directions_to_angles(xyz) -> tuple:
    xyz = np.asarray(xyz, float)
    r = np.linalg.norm(xyz, axis=-1)
    theta = np.arccos(np.clip(xyz[..., 2] / r, -1.0, 1.0))
    phi = np.arctan2(xyz[..., 1], xyz[..., 0])
    return theta, phi
