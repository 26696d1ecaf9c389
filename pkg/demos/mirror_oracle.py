"""Zero-scattering check on a flat surface.

Without bump or body the exact total field is the incident pulse plus its
mirror image, so the discrete solution can be compared against it directly.
Halving h and dt together should shrink the relative space-time error.

    python demos/mirror_oracle.py
"""
import time

from fsiwave.assembly import DiscreteSpace, assemble_blocks
from fsiwave.config import default_scenario
from fsiwave.geometry import GeometrySpec, build_mesh
from fsiwave.timedomain import mirror_metric, run_time_domain

cfg = default_scenario()
prev = None
for h, dt in ((0.2, 0.1), (0.1, 0.05)):
    t0 = time.time()
    blocks = assemble_blocks(DiscreteSpace.build(build_mesh(GeometrySpec(R=1.0), h)), cfg.material, cfg.n_max)
    run = run_time_domain(blocks, cfg.incident, dt, int(round(cfg.t_final / dt)))
    err = mirror_metric(run)
    line = f"h={h:<5} dt={dt:<5} dofs={blocks.space.n_dofs:<6} error={err:.4f}"
    if prev:
        line += f"  reduction {prev / err:.2f}"
    print(line + f"  ({time.time() - t0:.1f} s)")
    prev = err
