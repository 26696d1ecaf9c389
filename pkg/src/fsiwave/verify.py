"""Quick property checks over every module, used by ``--mode verify``."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .assembly import DiscreteSpace, assemble_blocks
from .dtn import DtnOperator, apply_dtn, dtn_quadratic_form, radiating_mode_traces
from .geometry import GeometrySpec, MaterialParams, build_mesh
from .hankel import dtn_symbols
from .harmonics import HemisphereQuadrature, TraceCoeffs, gram_matrix, mode_count
from .incident import IncidentSpec, causal_pulse, eval_incident_total, rho_data_sdomain
from .laplace import parseval_pair_compact
from .sdomain import solve_sdomain
from .timedomain import bdf2_derivative, cq_apply, cq_weights


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    passed: bool
    value: float
    limit: float
    seconds: float


def _random_s(rng, n):
    s1 = 10 ** rng.uniform(-2, 2, n)
    s2 = rng.uniform(-100, 100, n)
    return s1 + 1j * s2


def check_harmonics(rng):
    G = gram_matrix(20)
    return float(np.max(np.abs(G - np.eye(len(G))))), 1e-8


def check_hankel(rng):
    s = _random_s(rng, 200)
    g0 = dtn_symbols(0, s, 1.0, 1.0)[0]
    return float(np.max(np.abs(g0 + s + 1.0) / np.abs(g0))), 1e-12


def check_dtn_sign(rng):
    worst = -np.inf
    for s in _random_s(rng, 100):
        op = DtnOperator.build(s)
        w = TraceCoeffs(20, rng.standard_normal(mode_count(20)) + 1j * rng.standard_normal(mode_count(20)))
        val = dtn_quadratic_form(op, w).real / np.sum(np.abs(w.values) ** 2)
        worst = max(worst, val)
    return float(worst), 1e-12


def check_dtn_exactness(rng):
    quad = HemisphereQuadrature.build(20)
    worst = 0.0
    for s in _random_s(rng, 2):
        op = DtnOperator.build(s)
        for n, m in ((1, 0), (6, 3), (20, 11)):
            tr, dn = radiating_mode_traces(n, m, s, 1.0, 1.0, 20, quad)
            res = apply_dtn(op, tr) - dn
            worst = max(worst, float(np.max(np.abs(res.values)) / np.max(np.abs(dn.values))))
    return worst, 1e-10


def check_cq(rng):
    dt, K = 0.01, 1000
    w = cq_weights(lambda s: -(s + 1.0), dt, K)
    g = rng.standard_normal(K + 1)
    ref = -bdf2_derivative(g, dt) - g
    return float(np.max(np.abs(cq_apply(w, g) - ref)) / np.max(np.abs(ref))), 1e-10


def check_parseval(rng):
    f = causal_pulse(1.0)
    u = lambda t: f(-t)
    fs, ts = parseval_pair_compact(u, u, (-f.b, -f.a), 1.0, 40.0, 0.25)
    return abs(fs - ts) / abs(ts), 1e-6


def check_incident_causality(rng):
    spec = IncidentSpec(0.3, 2.6, 1.0, causal_pulse(1.0))
    x = rng.standard_normal((500, 3))
    x = x / np.linalg.norm(x, axis=1, keepdims=True) * rng.uniform(0, 1, (500, 1))
    return float(np.max(np.abs(eval_incident_total(spec, x, 0.05)))), 0.0


def check_mesh_and_solve(rng):
    mesh = build_mesh(GeometrySpec(R=1.0), 0.3)
    vol_ok = bool(np.all(mesh.signed_volumes() > 0))
    blocks = assemble_blocks(DiscreteSpace.build(mesh), MaterialParams(), n_max=8)
    s = 1.0 + 1.0j
    dtn = DtnOperator.build(s, n_max=8)
    spec = IncidentSpec(0.3, 2.6, 1.0, causal_pulse(1.0))
    st = solve_sdomain(blocks, dtn, s, rho_data_sdomain(spec, dtn, s))
    return (st.residual if vol_ok else np.inf), 1e-10


CHECKS = [
    ("harmonics", "Gram deviation N_max=20", check_harmonics),
    ("hankel", "gamma_0 closed form", check_hankel),
    ("dtn", "sign of <s^-1 B w, w>", check_dtn_sign),
    ("dtn", "radiating mode exactness", check_dtn_exactness),
    ("timedomain", "BDF2 CQ of gamma_0", check_cq),
    ("laplace", "Parseval dual path", check_parseval),
    ("incident", "causality before arrival", check_incident_causality),
    ("geometry/assembly/sdomain", "mesh + coupled solve residual", check_mesh_and_solve),
]


def run_checks(seed: int = 0) -> list:
    out = []
    for module, name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            value, limit = fn(rng)
            passed = bool(np.isfinite(value) and value <= limit)
        except Exception:  # a crashing check is a failed check
            value, limit, passed = float("nan"), float("nan"), False
        out.append(CheckResult(module, name, passed, float(value), float(limit), time.perf_counter() - t0))
    return out


def format_table(results) -> str:
    rows = [f"{'module':<26} {'check':<32} {'value':>10} {'limit':>8}  status"]
    for r in results:
        rows.append(f"{r.module:<26} {r.name:<32} {r.value:>10.2e} {r.limit:>8.0e}  "
                    f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(rows)
