"""Post-processing of event logs: densities, ratios, cost shares, categories.

All functions are pure over immutable logs.  Throughput counts logical work
units per simulated microsecond; normalized throughput divides by the
DOS=78 run of the same sweep.  Degradation categories:

  I   moderate decline as oversubscription grows
  II  a step down past DOS=100, then roughly flat
  III collapse to near zero

with artifact thresholds (0.10 collapse, 0.60 step, 0.15 flatness) chosen
to reproduce the shipped workloads' labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import STAGES
from .engine import EventLog

PERMANENT = "permanent"
PREMATURE = "premature"

CATEGORY_COLLAPSE = 0.10
CATEGORY_STEP = 0.60
CATEGORY_FLAT = 0.15


def fault_density(log: EventLog) -> np.ndarray:
    """Faults (any verdict) satisfied by each migration.

    A migration satisfies the faults on its range stamped between the
    triggering serviceable fault and the migration end; the trigger itself
    always counts, so every density is >= 1.
    """
    m = log.migrations
    n_mig = len(m["range"])
    out = np.zeros(n_mig, dtype=np.int64)
    if n_mig == 0:
        return out
    f_range = log.faults["range"]
    f_time = log.faults["time"]
    order = np.lexsort((f_time, f_range))
    fr = f_range[order]
    ft = f_time[order]
    starts = np.searchsorted(fr, m["range"], side="left")
    ends = np.searchsorted(fr, m["range"], side="right")
    for i in range(n_mig):
        lo, hi = starts[i], ends[i]
        t0, t1 = m["queue_time"][i], m["end"][i]
        a = np.searchsorted(ft[lo:hi], t0, side="left")
        b = np.searchsorted(ft[lo:hi], t1, side="right")
        out[i] = max(1, b - a)
    return out


def classify_evictions(log: EventLog) -> np.ndarray:
    """Label each eviction permanent or premature.

    An eviction is premature when the displaced range is migrated again
    later in the log (the displaced data was still needed); otherwise the
    data was done with and the eviction is permanent.
    """
    ev = log.evictions
    n = len(ev["time"])
    labels = np.empty(n, dtype=object)
    if n == 0:
        return labels
    m = log.migrations
    mig_order = np.lexsort((m["start"], m["range"]))
    mr = m["range"][mig_order]
    ms = m["start"][mig_order]
    for i in range(n):
        rid = ev["range"][i]
        t = ev["time"][i]
        lo = np.searchsorted(mr, rid, side="left")
        hi = np.searchsorted(mr, rid, side="right")
        later = np.searchsorted(ms[lo:hi], t, side="right") < (hi - lo)
        labels[i] = PREMATURE if later else PERMANENT
    return labels


def cost_breakdown(log: EventLog) -> dict[str, int]:
    """Accumulated per-stage driver time over all migrations.

    Eviction time is charged into the alloc stage, which is where the
    driver absorbs it while making space.
    """
    m = log.migrations
    out = {name: 0 for name in STAGES}
    if len(m["range"]):
        sums = m["stage"].sum(axis=0)
        for i, name in enumerate(STAGES):
            out[name] = int(sums[i])
        out["alloc"] += int(m["evict_cost"].sum())
    return out


def eviction_to_migration_ratio(log: EventLog) -> float:
    if log.n_migrations == 0:
        return 0.0
    return log.n_evictions / log.n_migrations


def categorize(curve: dict[float, float]) -> str:
    """Degradation category from a normalized-throughput-vs-DOS curve."""
    needed = (78, 109, 156)
    for k in needed:
        if k not in curve:
            raise ValueError(f"curve must include DOS={k}")
    if min(curve.values()) <= CATEGORY_COLLAPSE:
        return "III"
    if (curve[109] <= CATEGORY_STEP
            and abs(curve[156] - curve[109]) <= CATEGORY_FLAT):
        return "II"
    return "I"


@dataclass
class SimReport:
    """Per-run metrics bundle serialized into summary.json."""

    workload: str
    dos: float
    dos_target: float | None
    total_time_us: int
    total_work: int
    throughput: float
    normalized_throughput: float | None
    migrations: int
    evictions: int
    eviction_to_migration_ratio: float
    stage_costs_us: dict[str, int]
    fault_count: int
    duplicate_fraction: float
    density_mean: float
    density_min: int
    density_max: int
    density_p50: float
    density_hist: list
    premature_evictions: int
    permanent_evictions: int
    category: str | None = None
    allocations: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["schema_version"] = 1
        return d


def _density_hist(density: np.ndarray, bins: int = 32) -> list:
    if len(density) == 0:
        return []
    lo, hi = int(density.min()), int(density.max())
    counts, edges = np.histogram(density, bins=min(bins, max(1, hi - lo + 1)),
                                 range=(lo, hi + 1))
    return [[float(edges[i]), float(edges[i + 1]), int(c)]
            for i, c in enumerate(counts)]


def build_report(log: EventLog, baseline: EventLog | None = None) -> SimReport:
    density = fault_density(log)
    ev_labels = classify_evictions(log)
    premature = int(np.sum(ev_labels == PREMATURE)) if len(ev_labels) else 0
    fcount = log.n_faults
    if fcount:
        dup = int(np.sum(log.faults["verdict"] != 0))
        dup_frac = dup / fcount
    else:
        dup_frac = 0.0
    norm = None
    if baseline is not None and baseline.throughput > 0:
        norm = log.throughput / baseline.throughput
    cfg = log.config
    return SimReport(
        workload=cfg.workload.name,
        dos=log.dos,
        dos_target=log.dos_target,
        total_time_us=log.total_time_us,
        total_work=log.total_work,
        throughput=log.throughput,
        normalized_throughput=norm,
        migrations=log.n_migrations,
        evictions=log.n_evictions,
        eviction_to_migration_ratio=eviction_to_migration_ratio(log),
        stage_costs_us=cost_breakdown(log),
        fault_count=fcount,
        duplicate_fraction=dup_frac,
        density_mean=float(density.mean()) if len(density) else 0.0,
        density_min=int(density.min()) if len(density) else 0,
        density_max=int(density.max()) if len(density) else 0,
        density_p50=float(np.median(density)) if len(density) else 0.0,
        density_hist=_density_hist(density),
        premature_evictions=premature,
        permanent_evictions=int(len(ev_labels)) - premature,
        allocations=[
            {"id": a.id, "name": a.name, "base": a.base, "size": a.size}
            for a in log.prep.allocations
        ],
        config={
            "workload": cfg.workload.name,
            "seed": cfg.workload.seed,
            "footprint_bytes": cfg.workload.footprint_bytes,
            "capacity_bytes": cfg.capacity_bytes,
            "page_size": cfg.page_size,
            "alignment_bytes": cfg.alignment,
            "policy": cfg.policy,
            "mode": cfg.mode,
            "window": log.prep.window,
            "backend": log.backend,
        },
    )


def sweep_reports(
    sweep: list[tuple[float, EventLog]]
) -> tuple[list[SimReport], dict[float, float], str | None]:
    """Reports for a sweep, normalized against its DOS=78 point.

    Returns (reports, normalized curve, category or None when the curve
    lacks the category anchor points).
    """
    baseline = None
    for dos, log in sweep:
        if dos == 78:
            baseline = log
    reports = [build_report(log, baseline) for _, log in sweep]
    curve = {
        dos: r.normalized_throughput
        for (dos, _), r in zip(sweep, reports)
        if r.normalized_throughput is not None
    }
    category = None
    if all(k in curve for k in (78, 109, 156)):
        category = categorize(curve)
        for r in reports:
            r.category = category
    return reports, curve, category
