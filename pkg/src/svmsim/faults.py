"""Page-fault records, verdicts, and classification rules.

A non-resident access raises a page fault carrying (page, timestamp, access
type, origin).  The driver examines each fault and either services it or
dismisses it:

- stale: the fault sat unserviced longer than the configured timeout; the
  GPU re-raises a fresh fault for the same page (retry), so dismissal never
  strands an access.
- duplicate: the fault's range already has a queued or in-flight migration;
  one range transfer satisfies every fault on the range, so these dominate
  the fault stream.
- serviceable: fresh fault on a range with no pending service; triggers a
  migration.

Same-page faults within one replay interval are merged on the device before
reaching the driver (the on-GPU dedup buffer), modeled as at most one
outstanding fault per (page, replay interval).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum


class AccessType(IntEnum):
    READ = 0
    WRITE = 1


class Verdict(IntEnum):
    SERVICEABLE = 0
    DISMISS_DUPLICATE = 1
    DISMISS_STALE = 2

    @property
    def label(self) -> str:
        return _VERDICT_LABELS[self]


_VERDICT_LABELS = {
    Verdict.SERVICEABLE: "serviceable",
    Verdict.DISMISS_DUPLICATE: "dismiss_duplicate",
    Verdict.DISMISS_STALE: "dismiss_stale",
}


@dataclass(frozen=True)
class Fault:
    page: int
    range_id: int
    timestamp: int
    access: AccessType
    origin: int  # trace access id that raised it


@dataclass
class ReplayConfig:
    """GPU retry of unsatisfied faults.

    Off by default: a stalled access raises exactly one fault.  When enabled,
    each stalled page re-raises a fault every `period_us` until its range
    becomes resident (merged per page by the device dedup buffer).  A value
    of None for period_us means one tenth of the alignment-sized range
    service latency, resolved by the engine.
    """

    enabled: bool = False
    period_us: int | None = None


def classify_fault(
    fault: Fault,
    pending_service: bool,
    now: int,
    timeout_us: int | None,
) -> Verdict:
    """Driver-side examination of one fault.

    `pending_service` is true when the fault's range has a queued or
    in-flight migration.  `timeout_us` of None disables staleness.
    """
    if timeout_us is not None and now - fault.timestamp > timeout_us:
        return Verdict.DISMISS_STALE
    if pending_service:
        return Verdict.DISMISS_DUPLICATE
    return Verdict.SERVICEABLE


def replay_times(stall_time: int, service_end: int, period_us: int) -> list[int]:
    """Fault timestamps the GPU retry generates for one stalled page."""
    if period_us <= 0:
        raise ValueError("replay period must be > 0")
    out = []
    t = stall_time + period_us
    while t < service_end:
        out.append(t)
        t += period_us
    return out
