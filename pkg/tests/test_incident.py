import numpy as np
import pytest

import oracles
from fsiwave.dtn import DtnOperator
from fsiwave.errors import DomainError
from fsiwave.harmonics import HemisphereQuadrature
from fsiwave.incident import (IncidentSpec, PulseProfile, causal_pulse, eval_incident_parts, eval_incident_total,
                              grad_incident_total, laplace_incident_total, rho_data_sdomain, rho_data_time)
from fsiwave.timedomain import CqTbc


def test_pulse_values_and_support():
    f = PulseProfile(-2.0, -1.0)
    assert f(-1.5) == pytest.approx(1.0, rel=1e-15)
    assert f(-2.5) == 0.0 and f(-0.5) == 0.0
    for tau in (-1.9, -1.3, -1.0001):
        assert f(tau) == pytest.approx(float(oracles.pulse_poly4(tau, -2.0, -1.0)), rel=1e-13)


def test_pulse_derivatives_by_finite_differences():
    for kind in ("poly4", "sin4"):
        f = PulseProfile(0.0, 1.0, 2.0, kind)
        tau = np.linspace(0.05, 0.95, 19)
        h = 1e-5
        for k in range(3):
            fd = (f(tau + h, k) - f(tau - h, k)) / (2 * h)
            assert np.allclose(fd, f(tau, k + 1), rtol=1e-6, atol=1e-6 * np.abs(f(tau, k + 1)).max())


def test_pulse_is_c3_at_support_ends():
    f = PulseProfile(0.0, 1.0)
    for k in range(4):
        assert abs(f(1e-12, k)) < 1e-8 and abs(f(1 - 1e-12, k)) < 1e-8


def test_pulse_laplace_against_mpmath():
    f = PulseProfile(-2.0, -1.0)
    for sigma in (0.5, 3 + 40j, 0.01 - 90j, 100.0):
        assert f.laplace(sigma) == pytest.approx(oracles.pulse_laplace(sigma, -2.0, -1.0), rel=1e-11)


def test_directions():
    spec = IncidentSpec(0.3, 2.6, 1.0, causal_pulse(1.0))
    assert spec.d[2] < 0 and np.linalg.norm(spec.d) == pytest.approx(1.0)
    assert np.allclose(spec.d_mirror, spec.d * [1, 1, -1])
    with pytest.raises(DomainError):
        IncidentSpec(0.0, 1.0, 1.0, causal_pulse(1.0))


def test_vanishes_on_plane_and_antisymmetric(rng, incident):
    x = rng.uniform(-1, 1, (100, 3))
    t = rng.uniform(0, 4, 100)
    x0 = x.copy()
    x0[:, 2] = 0
    assert np.max(np.abs(eval_incident_total(incident, x0, t))) < 1e-15
    xm = x * [1, 1, -1]
    assert np.allclose(eval_incident_total(incident, x, t), -eval_incident_total(incident, xm, t), atol=1e-15)


def test_normal_incidence_substitution():
    f = PulseProfile(-3.0, -1.5)
    spec = IncidentSpec(0.0, np.pi, 1.0, f)
    x = np.array([0.0, 0.0, 1.0])
    for t in (0.0, 0.6, 1.2, 2.0):
        assert eval_incident_total(spec, x, t) == pytest.approx(f(-1 - t) - f(1 - t), abs=1e-15)


def test_causal_before_arrival(rng, incident):
    x = rng.standard_normal((400, 3))
    x *= rng.uniform(0, 1, (400, 1)) / np.linalg.norm(x, axis=1, keepdims=True)
    for k in (0, 1):
        assert np.all(eval_incident_total(incident, x, 0.0, k) == 0)
        assert np.all(eval_incident_total(incident, x, incident.arrival_time(1.0), k) == 0)


def test_wave_equation_residual(rng, incident):
    x = rng.uniform(-0.7, 0.7, (20, 3))
    t = rng.uniform(0.5, 2.5, 20)
    res = []
    for h in (2e-2, 1e-2):
        lap = sum((eval_incident_total(incident, x + h * e, t) - 2 * eval_incident_total(incident, x, t)
                   + eval_incident_total(incident, x - h * e, t)) / h**2 for e in np.eye(3))
        res.append(np.max(np.abs(eval_incident_total(incident, x, t, 2) - lap)))
    assert res[1] < res[0] / 3


def test_gradient_matches_finite_differences(rng, incident):
    x = rng.uniform(-0.7, 0.7, (20, 3))
    t = rng.uniform(0.5, 2.5, 20)
    h = 1e-6
    fd = np.stack([(eval_incident_total(incident, x + h * e, t) - eval_incident_total(incident, x - h * e, t))
                   / (2 * h) for e in np.eye(3)], axis=-1)
    assert np.allclose(fd, grad_incident_total(incident, x, t), atol=1e-6)
    inc, ref = eval_incident_parts(incident, x, t)
    assert np.allclose(inc + ref, eval_incident_total(incident, x, t))


def test_laplace_transform_against_time_quadrature(incident):
    x = np.array([[0.2, -0.1, 0.5], [0.0, 0.3, 0.1]])
    s = 0.7 + 2.0j
    val, grad = laplace_incident_total(incident, x, s)
    for i in range(2):
        ref = oracles.mp.quad(lambda t: oracles.mp.exp(-s * t) * float(eval_incident_total(incident, x[i], float(t))),
                              np.linspace(0, 4, 17).tolist())
        assert val[i] == pytest.approx(complex(ref), rel=1e-10)
    h = 1e-6
    fd = np.stack([(laplace_incident_total(incident, x + h * e, s)[0] - laplace_incident_total(incident, x - h * e, s)[0])
                   / (2 * h) for e in np.eye(3)], axis=-1)
    assert np.allclose(fd, grad, rtol=1e-6, atol=1e-9)


def test_rho_sdomain_linearity(incident):
    s = 1.0 + 1.0j
    op = DtnOperator.build(s)
    r1 = rho_data_sdomain(incident, op, s)
    r2 = rho_data_sdomain(incident.scaled(2.0), op, s)
    assert np.allclose(r2.values, 2 * r1.values, rtol=1e-13, atol=1e-16)


def test_rho_time_zero_pulse_and_causality(incident):
    tbc = CqTbc.build(0.05, 60, 8)
    zero = rho_data_time(incident.scaled(0.0), tbc)
    assert np.all(zero.coeffs.values == 0)
    sig = rho_data_time(incident, tbc)
    k0 = int(np.floor(incident.arrival_time(1.0) / tbc.dt))
    assert np.max(np.abs(sig.coeffs.values[:, : k0 + 1])) < 1e-8
    assert np.max(np.abs(sig.coeffs.values)) > 1e-2


def test_rho_time_consistent_with_sdomain(incident):
    """Discrete transform of the CQ-built rho approaches the s-domain rho as dt shrinks."""
    s = 2.0 + 1.0j
    n_max = 6
    quad = HemisphereQuadrature.build(n_max)
    ref = rho_data_sdomain(incident, DtnOperator.build(s, n_max=n_max), s, n_max, quad).values
    errs = []
    for dt in (0.04, 0.02):
        tbc = CqTbc.build(dt, int(round(12 / dt)), n_max)
        sig = rho_data_time(incident, tbc, quad=quad)
        w = np.full(len(sig.times), dt)
        w[0] = 0.5 * dt
        lap = sig.coeffs.values @ (w * np.exp(-s * sig.times))
        errs.append(np.max(np.abs(lap - ref)) / np.max(np.abs(ref)))
    assert errs[1] < errs[0] / 3 and errs[1] < 1e-2


def test_laplace_requires_causal_phase():
    spec = IncidentSpec(0.0, np.pi, 1.0, PulseProfile(-1.0, 0.5))
    with pytest.raises(DomainError):
        laplace_incident_total(spec, np.array([[0, 0, 0.2]]), 1.0)
