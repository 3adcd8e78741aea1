"""svmsim: trace-driven simulator of a range-granular GPU unified-memory driver."""

from .config import SimConfig, parse_mode
from .costs import CostModel
from .engine import (EventLog, EvictionTimeoutError, SimulationDeadlockError,
                     backend_name, run, run_sweep)
from .faults import AccessType, Fault, ReplayConfig, Verdict, classify_fault
from .memmodel import (Allocation, ConfigError, DeviceMemory, Range, Residency,
                       alignment_for, compute_dos, construct_ranges,
                       place_allocations)
from .policies import EvictionDeadlockError, EvictionPolicy, PolicyKind
from .workloads import WORKLOAD_NAMES, Trace, WorkloadSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AccessType",
    "Allocation",
    "ConfigError",
    "CostModel",
    "DeviceMemory",
    "EventLog",
    "EvictionDeadlockError",
    "EvictionTimeoutError",
    "EvictionPolicy",
    "Fault",
    "PolicyKind",
    "Range",
    "ReplayConfig",
    "Residency",
    "SimConfig",
    "SimulationDeadlockError",
    "Trace",
    "Verdict",
    "WORKLOAD_NAMES",
    "WorkloadSpec",
    "alignment_for",
    "backend_name",
    "classify_fault",
    "compute_dos",
    "construct_ranges",
    "generate",
    "parse_mode",
    "place_allocations",
    "run",
    "run_sweep",
    "__version__",
]
