"""Time-domain run of the default scenario with an energy ledger.

The pulse enters through the hemisphere, hits the bump and the elastic body
and leaves again through the transparent boundary.  The discrete energy
eps1 = e1 + e2 should match twice the work done by the data and the
boundary operator, up to the O(dt^2) error of the trapezoid rule.

    python demos/time_energy.py [h] [dt] [csv-path]
"""
import sys

import numpy as np

from fsiwave.assembly import DiscreteSpace, assemble_blocks
from fsiwave.config import default_scenario
from fsiwave.geometry import build_mesh
from fsiwave.timedomain import apriori_monitor, run_time_domain

h = float(sys.argv[1]) if len(sys.argv) > 1 else 0.2
dt = float(sys.argv[2]) if len(sys.argv) > 2 else 0.05
cfg = default_scenario()
blocks = assemble_blocks(DiscreteSpace.build(build_mesh(cfg.geometry, h), cfg.geometry.R),
                         cfg.material, cfg.n_max)
run = run_time_domain(blocks, cfg.incident, dt, int(round(cfg.t_final / dt)))

print(f"{'t':>5} {'fluid e1':>10} {'solid e2':>10} {'TBC work':>10} {'data work':>10} {'residual':>10}")
for r in run.records[:: max(1, len(run.records) // 20)]:
    print(f"{r.t:5.2f} {r.e1:10.4e} {r.e2:10.4e} {r.tbc_work:10.3e} {r.rho_work:10.3e} {r.balance_residual:10.2e}")

print(f"\npeak eps1 {run.peak_eps1:.4e}, max balance residual {run.balance_residual():.2%} of peak")
works = run.boundary_works()
print("boundary work never positive:", all(np.max(w) <= 1e-8 * run.peak_eps1 for w in works.values()))
ap = apriori_monitor(run)
print(f"a-priori ratio (sup norms) {ap.ratio_323:.3f}, (L2 in time) {ap.ratio_324:.3f}")

# energy left in the solid once the pulse has passed
print(f"solid energy at T: {run.records[-1].e2:.3e} (peak {max(r.e2 for r in run.records):.3e})")

if len(sys.argv) > 3:
    run.write_csv(sys.argv[3])
    print("energy history written to", sys.argv[3])
