"""Simulation configuration: device, cost model, driver mode, workload."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .costs import CostModel
from .faults import ReplayConfig
from .memmodel import ConfigError, alignment_for
from .units import DEFAULT_PAGE_SIZE, MIB, MIN_ALIGNMENT, is_power_of_two
from .workloads import WorkloadSpec

MODES = ("demand", "zero-copy", "overlap", "delayed")
POLICIES = ("lrf", "clock")


@dataclass(frozen=True)
class SimConfig:
    workload: WorkloadSpec
    capacity_bytes: int = 256 * MIB
    page_size: int = DEFAULT_PAGE_SIZE
    alignment_bytes: int | None = None  # override; derived from capacity if None
    placement_granularity: int | None = None  # default: one page
    cost: CostModel = field(default_factory=CostModel)
    policy: str = "lrf"
    mode: str = "demand"
    delayed_k: int | None = None
    delayed_p: float | None = None
    replay: ReplayConfig = field(default_factory=ReplayConfig)
    timeout_us: int | None = None  # fault staleness horizon; None = never stale
    eviction_timeout_us: int | None = None  # guard on one migration's eviction chain
    record_accesses: bool = False

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.alignment_bytes is not None:
            if (not is_power_of_two(self.alignment_bytes)
                    or self.alignment_bytes < MIN_ALIGNMENT):
                raise ConfigError("alignment override must be a power of two >= 2 MiB")
        if self.mode == "delayed":
            if (self.delayed_k is None) == (self.delayed_p is None):
                raise ConfigError("delayed mode needs exactly one of k or p")
            if self.delayed_k is not None and self.delayed_k < 1:
                raise ConfigError("delayed k must be >= 1")
            if self.delayed_p is not None and not (0.0 < self.delayed_p <= 1.0):
                raise ConfigError("delayed p must be in (0, 1]")
        if self.timeout_us is not None and not self.replay.enabled:
            raise ConfigError(
                "a finite fault timeout requires replay: without GPU retries a "
                "stale-dismissed access would never be serviced"
            )

    @property
    def alignment(self) -> int:
        if self.alignment_bytes is not None:
            return self.alignment_bytes
        return alignment_for(self.capacity_bytes)

    def replay_period_us(self) -> int:
        """Resolved replay period: a tenth of one full-range service time."""
        if self.replay.period_us is not None:
            return self.replay.period_us
        pages = self.alignment // self.page_size
        return max(1, self.cost.service_total_us(pages) // 10)

    def with_dos(self, dos: float) -> "SimConfig":
        """Scale the workload footprint so allocations hit the target DOS."""
        footprint = int(round(dos / 100.0 * self.capacity_bytes))
        return replace(self, workload=replace(self.workload, footprint_bytes=footprint))


def parse_mode(text: str) -> dict:
    """Parse CLI mode syntax: demand | zero-copy | overlap | delayed:k=N | delayed:p=F."""
    if text in ("demand", "zero-copy", "overlap"):
        return {"mode": text}
    if text.startswith("delayed:"):
        key, _, val = text[len("delayed:"):].partition("=")
        if key == "k" and val.isdigit():
            return {"mode": "delayed", "delayed_k": int(val)}
        if key == "p":
            try:
                return {"mode": "delayed", "delayed_p": float(val)}
            except ValueError:
                pass
    raise ConfigError(
        f"bad mode {text!r}: expected demand, zero-copy, overlap, delayed:k=N "
        f"or delayed:p=F"
    )
