"""Calibration scratchpad: prints the acceptance-relevant quantities.

Not part of the test suite; used to pick the shipped workload defaults.
"""

import sys
import time

import numpy as np

from svmsim import SimConfig, WorkloadSpec, run_sweep
from svmsim.metrics import build_report, fault_density, sweep_reports
from svmsim.units import MIB

POINTS = [78, 94, 100, 109, 125, 141, 156]
EXTRA = [300, 400]


def sweep(name, points, **kw):
    spec = WorkloadSpec(name=name, footprint_bytes=MIB, **kw)
    cfg = SimConfig(workload=spec)
    t0 = time.time()
    out = run_sweep(cfg, points)
    wall = time.time() - t0
    reports, curve, category = sweep_reports(out)
    print(f"== {name} (wall {wall:.1f}s, category {category})")
    base_mig = None
    for (dos, log), rep in zip(out, reports):
        if dos == 78:
            base_mig = rep.migrations
        dens = fault_density(log)
        nm = rep.migrations / base_mig if base_mig else float("nan")
        print(
            f"  dos={dos:<4} norm={rep.normalized_throughput if rep.normalized_throughput is None else round(rep.normalized_throughput, 3)!s:<7}"
            f" mig={rep.migrations:<6} ev={rep.evictions:<6}"
            f" ratio={rep.eviction_to_migration_ratio:.3f}"
            f" mignorm={nm:.2f}"
            f" dens_mean={dens.mean() if len(dens) else 0:.1f}"
            f" prem={rep.premature_evictions}"
            f" alloc_share={rep.stage_costs_us['alloc'] / max(1, sum(rep.stage_costs_us.values())):.3f}"
        )
    return out, reports, curve


if __name__ == "__main__":
    names = sys.argv[1:] or [
        "stream", "conv2d", "jacobi2d", "jacobi2d_aware", "bfs",
        "sgemm", "sgemm_aware", "syr2k", "mvt", "gesummv",
    ]
    for n in names:
        pts = POINTS + (EXTRA if n in ("stream", "jacobi2d", "jacobi2d_aware") else [])
        sweep(n, pts)
