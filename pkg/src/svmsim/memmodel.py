"""Address-space model: allocations, ranges, device memory.

The driver manages unified memory in ranges: contiguous page spans bounded
by allocation edges and by multiples of the GPU alignment granule.  The
alignment granule is derived from device capacity (capacity/32 rounded down
to a power of two, never below 2 MiB), so a 48 GiB device yields 1 GiB
ranges while a 256 MiB desk-scale device yields 8 MiB ranges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .units import MIB, MIN_ALIGNMENT, floor_power_of_two, is_power_of_two


class ConfigError(ValueError):
    """Invalid simulator configuration."""


class Residency(Enum):
    HOST = 0
    DEVICE = 1


@dataclass(frozen=True)
class Allocation:
    """A managed-memory allocation; base and size are page aligned."""

    id: int
    name: str
    base: int
    size: int

    @property
    def end(self) -> int:
        return self.base + self.size

    def validate(self, page_size: int) -> None:
        if self.size <= 0:
            raise ConfigError(f"allocation {self.name}: size must be > 0")
        if self.base % page_size or self.size % page_size:
            raise ConfigError(
                f"allocation {self.name}: base/size must be multiples of the "
                f"{page_size}-byte page"
            )


@dataclass
class Range:
    """Driver management unit: a contiguous page span within one allocation."""

    id: int
    alloc: int
    start: int
    end: int  # exclusive
    residency: Residency = Residency.HOST
    last_fault_time: int | None = None
    hot_bit: bool = False

    @property
    def size(self) -> int:
        return self.end - self.start


@dataclass
class DeviceMemory:
    """Tracks device-side occupancy of resident ranges."""

    capacity: int
    used: int = 0
    resident_set: set[int] = field(default_factory=set)

    def add(self, rng: Range) -> None:
        self.used += rng.size
        self.resident_set.add(rng.id)
        if self.used > self.capacity:
            raise AssertionError("device memory over-committed")

    def remove(self, rng: Range) -> None:
        self.used -= rng.size
        self.resident_set.discard(rng.id)

    @property
    def free(self) -> int:
        return self.capacity - self.used


def alignment_for(capacity: int) -> int:
    """Range alignment granule for a device with `capacity` bytes of managed memory.

    floor(capacity/32) rounded down to a power of two, minimum 2 MiB.
    """
    if capacity < 64 * MIB:
        raise ConfigError(
            f"capacity {capacity} too small: need >= 64 MiB so the alignment "
            f"formula yields the 2 MiB minimum"
        )
    return max(MIN_ALIGNMENT, floor_power_of_two(capacity // 32))


def validate_allocations(allocations: list[Allocation], page_size: int) -> None:
    for a in allocations:
        a.validate(page_size)
    ordered = sorted(allocations, key=lambda a: a.base)
    for prev, nxt in zip(ordered, ordered[1:]):
        if prev.end > nxt.base:
            raise ConfigError(
                f"allocations {prev.name} and {nxt.name} overlap in address space"
            )


def construct_ranges(
    capacity: int,
    allocations: list[Allocation],
    page_size: int,
    alignment: int | None = None,
) -> list[Range]:
    """Split each allocation at every alignment multiple it crosses.

    The returned ranges partition each allocation exactly and never cross an
    alignment-multiple address or an allocation boundary.  Residency starts
    on the host.
    """
    align = alignment if alignment is not None else alignment_for(capacity)
    if not is_power_of_two(align) or align < MIN_ALIGNMENT:
        raise ConfigError(f"alignment {align} must be a power of two >= 2 MiB")
    validate_allocations(allocations, page_size)

    ranges: list[Range] = []
    for alloc in allocations:
        cursor = alloc.base
        while cursor < alloc.end:
            boundary = (cursor // align + 1) * align
            end = min(boundary, alloc.end)
            ranges.append(Range(id=len(ranges), alloc=alloc.id, start=cursor, end=end))
            cursor = end
    return ranges


def compute_dos(allocations: list[Allocation], capacity: int) -> float:
    """Degree of oversubscription: total allocated bytes / capacity * 100."""
    if capacity <= 0:
        raise ConfigError("capacity must be > 0")
    return sum(a.size for a in allocations) / capacity * 100.0


def place_allocations(
    sizes: list[tuple[str, int]], page_size: int, granularity: int | None = None
) -> list[Allocation]:
    """Deterministic placement: next free address rounded up to `granularity`.

    Placement affects how allocation interiors land relative to alignment
    multiples, and therefore the range count; it is an explicit experiment
    input.  The default granularity is one page.
    """
    gran = granularity or page_size
    if gran % page_size:
        raise ConfigError("placement granularity must be a multiple of the page size")
    allocations = []
    cursor = 0
    for i, (name, size) in enumerate(sizes):
        base = (cursor + gran - 1) // gran * gran
        size_aligned = (size + page_size - 1) // page_size * page_size
        allocations.append(Allocation(id=i, name=name, base=base, size=size_aligned))
        cursor = base + size_aligned
    return allocations
