"""Simulation driver: backend selection, EventLog, run and sweep entry points.

The hot stepping loop exists twice: a Cython extension (svmsim._kernel_cy)
and a pure-Python twin (svmsim._kernel_py).  The compiled kernel is picked
at import when available; set SVMSIM_PURE=1 to force the Python fallback.
Both produce bit-identical logs for the same configuration.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ._kernel_py import (EvictionTimeoutError, SimulationDeadlockError,
                         run_kernel as _run_py)
from ._prep import PreparedSim, prepare
from .config import SimConfig

_FORCE_PURE = os.environ.get("SVMSIM_PURE", "") not in ("", "0")

if not _FORCE_PURE:
    try:
        from ._kernel_cy import run_kernel as _run_cy
        _BACKEND = "cython"
    except ImportError:
        _run_cy = None
        _BACKEND = "python"
else:
    _run_cy = None
    _BACKEND = "python"


def backend_name() -> str:
    return _BACKEND


@dataclass
class EventLog:
    """Complete, ordered record of one simulation run."""

    config: SimConfig
    prep: PreparedSim
    faults: dict
    migrations: dict
    evictions: dict
    accesses: dict
    total_time_us: int
    total_work: int
    total_gap_us: int
    dos_target: float | None = None
    backend: str = ""

    @property
    def n_faults(self) -> int:
        return len(self.faults["time"])

    @property
    def n_migrations(self) -> int:
        return len(self.migrations["range"])

    @property
    def n_evictions(self) -> int:
        return len(self.evictions["time"])

    @property
    def dos(self) -> float:
        total = sum(a.size for a in self.prep.allocations)
        return total / self.config.capacity_bytes * 100.0

    @property
    def throughput(self) -> float:
        if self.total_time_us == 0:
            return 0.0
        return self.total_work / self.total_time_us

    def migration_range_sizes(self) -> np.ndarray:
        return self.prep.r_size[self.migrations["range"]]


def run(config: SimConfig, dos_target: float | None = None) -> EventLog:
    """Replay the configured trace through the driver model."""
    prep = prepare(config)
    kernel = _run_cy if _run_cy is not None else _run_py
    raw = kernel(prep)
    return EventLog(
        config=config,
        prep=prep,
        faults=raw["faults"],
        migrations=raw["migrations"],
        evictions=raw["evictions"],
        accesses=raw["accesses"],
        total_time_us=raw["total_time_us"],
        total_work=raw["total_work"],
        total_gap_us=raw["total_gap_us"],
        dos_target=dos_target,
        backend=_BACKEND,
    )


def run_sweep(base: SimConfig, dos_points: list[float]) -> list[tuple[float, EventLog]]:
    """One run per DOS point, allocation sizes scaled to hit each point."""
    if sorted(dos_points) != list(dos_points):
        raise ValueError("dos_points must be sorted ascending")
    out = []
    for dos in dos_points:
        cfg = base.with_dos(dos)
        out.append((dos, run(cfg, dos_target=dos)))
    return out


__all__ = [
    "EventLog",
    "EvictionTimeoutError",
    "SimulationDeadlockError",
    "backend_name",
    "run",
    "run_sweep",
]
