"""Eviction policies: least-recently-faulted (LRF) and a two-state Clock.

This is the reference implementation used by the single-step API and the
test oracles; the simulation kernels embed the same victim-selection rules
for speed and are checked against this module for equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .memmodel import DeviceMemory, Range, Residency


class PolicyKind(Enum):
    LRF = "lrf"
    CLOCK = "clock"


class EvictionDeadlockError(RuntimeError):
    """No evictable range exists but space is still insufficient.

    The simulated analogue of the driver stalling in its eviction loop until
    the eviction timeout fires.
    """


@dataclass
class EvictionRecord:
    range_id: int
    time: int
    cost: int
    cause: int  # migration id this eviction unblocked
    classification: str = "unclassified"  # filled post-hoc by metrics


@dataclass
class EvictionPolicy:
    kind: PolicyKind = PolicyKind.LRF
    clock_hand: int = 0

    def select_victim(
        self, ranges: list[Range], device: DeviceMemory, exclude: int | None = None
    ) -> int:
        """Pick the next victim among resident ranges, excluding `exclude`.

        LRF: minimum last_fault_time, ties broken by lower range id.
        Clock: first cold range at/after the hand; hot ranges are demoted
        and skipped.
        """
        candidates = [
            r for r in ranges
            if r.residency is Residency.DEVICE and r.id != exclude
        ]
        if not candidates:
            raise EvictionDeadlockError(
                "no evictable resident range (driver would hit its eviction timeout)"
            )
        if self.kind is PolicyKind.LRF:
            def key(r: Range):
                t = r.last_fault_time if r.last_fault_time is not None else -1
                return (t, r.id)
            return min(candidates, key=key).id

        # Clock: scan range ids circularly from the hand
        n = len(ranges)
        by_id = {r.id: r for r in candidates}
        for _ in range(2 * n + 1):
            pos = self.clock_hand % n
            self.clock_hand = (self.clock_hand + 1) % n
            r = by_id.get(pos)
            if r is None:
                continue
            if r.hot_bit:
                r.hot_bit = False
                continue
            return r.id
        raise EvictionDeadlockError("clock scan found no cold victim")


def ensure_space(
    incoming: Range,
    ranges: list[Range],
    device: DeviceMemory,
    policy: EvictionPolicy,
    cost_of: callable,
    now: int,
    cause: int,
) -> list[EvictionRecord]:
    """Evict victims one at a time until the incoming range fits.

    Returns the eviction list in order; device residency is updated.  Raises
    EvictionDeadlockError if no victim remains while space is insufficient.
    """
    if incoming.size > device.capacity:
        raise EvictionDeadlockError(
            f"range {incoming.id} ({incoming.size} B) exceeds device capacity "
            f"({device.capacity} B)"
        )
    by_id = {r.id: r for r in ranges}
    out: list[EvictionRecord] = []
    t = now
    while device.free < incoming.size:
        victim_id = policy.select_victim(ranges, device, exclude=incoming.id)
        victim = by_id[victim_id]
        cost = cost_of(victim)
        t += cost
        victim.residency = Residency.HOST
        device.remove(victim)
        out.append(EvictionRecord(range_id=victim_id, time=t, cost=cost, cause=cause))
    return out


@dataclass
class LrfOracle:
    """Brute-force LRF reference: replays a fault log, then takes the argmin.

    Kept deliberately independent of EvictionPolicy internals so tests can
    compare the two.
    """

    last_fault: dict[int, int] = field(default_factory=dict)

    def record_fault(self, range_id: int, time: int) -> None:
        self.last_fault[range_id] = time

    def victim(self, resident: set[int], exclude: int | None = None) -> int:
        pool = [r for r in resident if r != exclude]
        if not pool:
            raise EvictionDeadlockError("oracle: empty resident set")
        return min(pool, key=lambda r: (self.last_fault.get(r, -1), r))
