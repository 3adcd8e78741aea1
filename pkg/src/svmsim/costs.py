"""Staged cost model for range migration and eviction.

A migration charges five driver-visible stages.  Stage costs are fractions
of a per-range service total `base_us + pages * per_page_us`, so their
relative shares stay fixed across range sizes: cpu_update is the largest
single stage and cpu_update + SDMA_setup + alloc make up 0.76 of the total
under the calibrated defaults.  Evicting a victim costs
`eviction_cost_factor` times the victim's own stage total and is charged
into the alloc stage of the blocked migration, mirroring how allocation
absorbs eviction time in the real driver.

All times are integer microseconds; stage splits use a largest-fraction
remainder distribution so the five stages always sum exactly to the total.
"""

from __future__ import annotations

from dataclasses import dataclass, field

STAGES = ("cpu_unmap", "alloc", "sdma_setup", "cpu_update", "misc")

# calibrated stage shares, in thousandths of the service total
DEFAULT_FRACTIONS_MILLI = {
    "cpu_update": 300,
    "sdma_setup": 250,
    "alloc": 210,
    "cpu_unmap": 140,
    "misc": 100,
}


@dataclass(frozen=True)
class CostModel:
    base_us: int = 0
    per_page_milli_us: int = 1000  # 1.0 us per 4 KiB page
    fractions_milli: dict[str, int] = field(
        default_factory=lambda: dict(DEFAULT_FRACTIONS_MILLI)
    )
    eviction_cost_factor_milli: int = 1000  # 1.0x a migration of the same range
    zero_copy_latency_us: int = 2  # per remote page access

    def __post_init__(self):
        if self.base_us < 0 or self.per_page_milli_us < 0:
            raise ValueError("cost coefficients must be >= 0")
        if set(self.fractions_milli) != set(STAGES):
            raise ValueError(f"fractions must cover exactly {STAGES}")
        if sum(self.fractions_milli.values()) != 1000:
            raise ValueError("stage fractions must sum to 1000 milli")
        if self.eviction_cost_factor_milli < 0:
            raise ValueError("eviction_cost_factor must be >= 0")

    def service_total_us(self, pages: int) -> int:
        """Full stage-cost sum for migrating a range of `pages` pages."""
        return self.base_us + (pages * self.per_page_milli_us) // 1000

    def stage_costs_us(self, pages: int) -> dict[str, int]:
        """Split the service total across stages; sums exactly to the total."""
        total = self.service_total_us(pages)
        costs = {}
        acc = 0
        cum = 0
        # cumulative rounding keeps the split exact and deterministic
        for name in STAGES:
            cum += self.fractions_milli[name]
            target = total * cum // 1000
            costs[name] = target - acc
            acc = target
        return costs

    def eviction_cost_us(self, pages: int) -> int:
        """Cost of evicting a resident range: factor x its own stage total."""
        return self.service_total_us(pages) * self.eviction_cost_factor_milli // 1000

    def zero_copy_cost_us(self, pages: int) -> int:
        return self.zero_copy_latency_us * pages


def migration_duration_us(
    stage_costs: dict[str, int], eviction_costs_us: int, overlap: bool
) -> int:
    """Wall duration of one migration.

    Serial mode runs evictions then every stage.  Overlap mode runs the
    eviction chain concurrently with host-side unmap and SDMA setup (one
    worker per eviction/migration), so the blocked portion is
    max(evictions, cpu_unmap + sdma_setup) followed by the remaining stages.
    """
    total_stages = sum(stage_costs.values())
    if not overlap or eviction_costs_us == 0:
        return eviction_costs_us + total_stages
    front = stage_costs["cpu_unmap"] + stage_costs["sdma_setup"]
    rest = total_stages - front
    return max(eviction_costs_us, front) + rest
