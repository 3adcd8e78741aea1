"""Pure-Python stepping kernel.

Reference implementation of the event loop; the Cython twin in
_kernel_cy.pyx mirrors this file operation for operation and must produce
identical output arrays.  The loop is deliberately written in a flat,
C-like style to keep the two in lockstep.

Semantics:
- `window` lanes model concurrently outstanding accesses.  Trace entries
  issue in order whenever a lane is free; a resident access occupies its
  lane for the compute gap, a non-resident access raises page faults and
  holds the lane until its range is migrated in.
- The driver services one serviceable fault (one migration) at a time;
  later serviceable faults queue FIFO.  A queued fault whose range already
  has pending service is dismissed as a duplicate.
- ensure-space evicts victims one at a time (LRF or Clock) until the
  incoming range fits; victims become non-resident at migration start.
- Kernel phase boundaries drain all lanes (launch barrier).
"""

from __future__ import annotations

from heapq import heappop, heappush

import numpy as np

VERDICT_SERVICEABLE = 0
VERDICT_DUPLICATE = 1
VERDICT_STALE = 2

_INF = (1 << 62)


class SimulationDeadlockError(RuntimeError):
    """Raised when space cannot be made for an incoming range."""

    def __init__(self, message, range_id=None, time_us=None):
        super().__init__(message)
        self.range_id = range_id
        self.time_us = time_us


class EvictionTimeoutError(RuntimeError):
    """One migration's eviction chain exceeded the configured guard."""


def run_kernel(prep):
    cfg = prep.config
    n_ranges = prep.n_ranges
    r_size = prep.r_size
    r_stage = prep.r_stage
    r_total = prep.r_total
    r_evcost = prep.r_evcost
    r_pinned = prep.r_pinned
    r_delay = prep.r_delay_threshold
    e_range = prep.e_range
    e_page = prep.e_page
    e_npages = prep.e_npages
    e_gap = prep.e_gap
    e_work = prep.e_work
    e_write = prep.e_write
    phase_bounds = prep.phase_bounds
    W = prep.window
    capacity = prep.capacity
    n_entries = len(e_range)

    overlap = 1 if cfg.mode == "overlap" else 0
    zero_copy = 1 if cfg.mode == "zero-copy" else 0
    zc_cost = cfg.cost.zero_copy_latency_us
    replay_on = 1 if cfg.replay.enabled else 0
    replay_period = prep.replay_period
    timeout = cfg.timeout_us if cfg.timeout_us is not None else -1
    ev_timeout = (cfg.eviction_timeout_us
                  if cfg.eviction_timeout_us is not None else -1)
    record_acc = 1 if cfg.record_accesses else 0

    # driver + device state
    resident = np.zeros(n_ranges, dtype=np.uint8)
    pending = np.zeros(n_ranges, dtype=np.uint8)
    last_fault = np.full(n_ranges, -1, dtype=np.int64)
    last_fault_idx = np.full(n_ranges, -1, dtype=np.int64)
    hot = np.zeros(n_ranges, dtype=np.uint8)
    distinct = np.zeros(n_ranges, dtype=np.int64)
    epoch = np.arange(1, n_ranges + 1, dtype=np.int64)
    page_mark = np.zeros(prep.total_pages, dtype=np.int64)
    epoch_seq = n_ranges
    used = 0
    clock_hand = 0

    # stalled-entry linked lists per range
    stall_head = np.full(n_ranges, -1, dtype=np.int64)
    stall_next = np.full(n_entries, -1, dtype=np.int64)
    stall_time = np.zeros(n_entries, dtype=np.int64)
    n_stalled = 0

    # replay bookkeeping: (page, first stall time) per pending range
    replay_pages = [[] for _ in range(n_ranges)] if replay_on else None

    # FIFO service queue (at most one pending entry per range)
    q_range = np.zeros(n_ranges + 1, dtype=np.int64)
    q_time = np.zeros(n_ranges + 1, dtype=np.int64)
    q_fault = np.zeros(n_ranges + 1, dtype=np.int64)
    q_head = 0
    q_tail = 0
    q_cap = n_ranges + 1

    driver_free = 0
    inflight = -1
    inflight_end = 0

    lanes = []  # min-heap of lane free times

    # output logs
    f_time, f_page, f_range, f_verdict, f_origin, f_write = [], [], [], [], [], []
    m_range, m_trigger, m_queue_t = [], [], []
    m_start, m_end, m_evcost, m_nevict = [], [], [], []
    m_stage = []
    ev_time, ev_range, ev_cost, ev_cause = [], [], [], []
    a_time, a_entry = [], []

    total_work = 0
    total_gap = 0

    def emit_fault(t, page_i, rid, verdict, origin, is_write):
        f_time.append(t)
        f_page.append(page_i)
        f_range.append(rid)
        f_verdict.append(verdict)
        f_origin.append(origin)
        f_write.append(is_write)
        return len(f_time) - 1

    def q_push(rid, t, fidx):
        nonlocal q_tail
        q_range[q_tail] = rid
        q_time[q_tail] = t
        q_fault[q_tail] = fidx
        q_tail = (q_tail + 1) % q_cap

    def select_victim_lrf():
        best = -1
        best_t = _INF
        for i in range(n_ranges):
            if resident[i]:
                t = last_fault[i]
                if t < best_t or (t == best_t and i < best):
                    best = i
                    best_t = t
        return best

    def select_victim_clock():
        nonlocal clock_hand
        for _ in range(2 * n_ranges + 1):
            i = clock_hand
            clock_hand = (clock_hand + 1) % n_ranges
            if not resident[i]:
                continue
            if hot[i]:
                hot[i] = 0
                continue
            return i
        return -1

    def start_migration(rid, tq, fidx):
        nonlocal used, inflight, inflight_end, driver_free, epoch_seq
        start = max(driver_free, tq)
        mig_idx = len(m_range)
        evcost_total = 0
        nev = 0
        while used + r_size[rid] > capacity:
            victim = (select_victim_lrf() if cfg.policy == "lrf"
                      else select_victim_clock())
            if victim < 0:
                raise SimulationDeadlockError(
                    f"cannot make space for range {rid} "
                    f"({int(r_size[rid])} B) at t={start}us: no evictable "
                    f"resident range (the driver would sit in its eviction "
                    f"loop until the eviction timeout)",
                    range_id=rid, time_us=start)
            cost = int(r_evcost[victim])
            evcost_total += cost
            nev += 1
            resident[victim] = 0
            used -= int(r_size[victim])
            epoch_seq += 1
            epoch[victim] = epoch_seq
            distinct[victim] = 0
            ev_time.append(start + evcost_total)
            ev_range.append(victim)
            ev_cost.append(cost)
            ev_cause.append(mig_idx)
            if ev_timeout >= 0 and evcost_total > ev_timeout:
                raise EvictionTimeoutError(
                    f"eviction chain for range {rid} exceeded "
                    f"{ev_timeout}us at t={start}us")
        stage_total = int(r_total[rid])
        if overlap and evcost_total > 0:
            front = int(r_stage[rid][0]) + int(r_stage[rid][2])
            dur = max(evcost_total, front) + (stage_total - front)
        else:
            dur = evcost_total + stage_total
        m_range.append(rid)
        m_trigger.append(fidx)
        m_queue_t.append(tq)
        m_start.append(start)
        m_end.append(start + dur)
        m_evcost.append(evcost_total)
        m_nevict.append(nev)
        m_stage.append([int(x) for x in r_stage[rid]])
        inflight = rid
        inflight_end = start + dur
        driver_free = inflight_end

    def complete_migration():
        nonlocal inflight, used, n_stalled, total_work
        rid = inflight
        end = inflight_end
        resident[rid] = 1
        pending[rid] = 0
        used += int(r_size[rid])
        hot[rid] = 1
        distinct[rid] = 0
        if replay_on:
            lst = replay_pages[rid]
            for (pg, t0) in lst:
                t = t0 + replay_period
                while t < end:
                    emit_fault(t, pg, rid, VERDICT_DUPLICATE, -1, 0)
                    if t > last_fault[rid]:
                        last_fault[rid] = t
                    t += replay_period
            lst.clear()
        it = int(stall_head[rid])
        stall_head[rid] = -1
        while it != -1:
            done = end + int(e_gap[it])
            heappush(lanes, done)
            n_stalled -= 1
            total_work += int(e_work[it])
            if record_acc:
                a_time.append(done)
                a_entry.append(it)
            it = int(stall_next[it])
        inflight = -1

    def force_enqueue():
        # delayed-migration escape hatch: every lane is stalled below its
        # range threshold; service the most-faulted stalled range anyway
        best = -1
        best_d = -1
        for i in range(n_ranges):
            if stall_head[i] != -1 and not pending[i] and not resident[i]:
                d = int(distinct[i])
                if d > best_d:
                    best = i
                    best_d = d
        if best < 0:
            raise SimulationDeadlockError(
                "simulation stuck: stalled lanes but nothing serviceable")
        pending[best] = 1
        q_push(best, int(last_fault[best]), int(last_fault_idx[best]))

    phase_time = 0
    for ph in range(len(phase_bounds) - 1):
        ei = int(phase_bounds[ph])
        phase_end = int(phase_bounds[ph + 1])
        lanes = [phase_time] * W

        while True:
            t_lane = lanes[0] if lanes else _INF

            # 1. complete a due migration (also: no issues remain this phase)
            if inflight >= 0 and (not lanes or inflight_end <= t_lane
                                  or ei >= phase_end):
                complete_migration()
                continue

            # 2. start queued service if it begins no later than the next issue
            if inflight < 0 and q_head != q_tail:
                rid = int(q_range[q_head])
                tq = int(q_time[q_head])
                fidx = int(q_fault[q_head])
                start_c = max(driver_free, tq)
                if start_c <= t_lane or ei >= phase_end:
                    q_head_new = (q_head + 1) % q_cap
                    q_head = q_head_new
                    if resident[rid]:
                        pending[rid] = 0
                        continue
                    if timeout >= 0 and start_c - tq > timeout:
                        # stale: dismiss, and the GPU retry raises a fresh fault
                        pg = int(f_page[fidx]) if fidx >= 0 else -1
                        wr = int(f_write[fidx]) if fidx >= 0 else 0
                        emit_fault(start_c, pg, rid, VERDICT_STALE, -1, wr)
                        nfidx = emit_fault(start_c, pg, rid,
                                           VERDICT_SERVICEABLE, -1, wr)
                        last_fault[rid] = start_c
                        last_fault_idx[rid] = nfidx
                        q_push(rid, start_c, nfidx)
                        continue
                    start_migration(rid, tq, fidx)
                    continue

            # 3. issue the next trace entry
            if lanes and ei < phase_end:
                t = heappop(lanes)
                rid = int(e_range[ei])
                if zero_copy and r_pinned[rid]:
                    done = t + int(e_gap[ei]) + zc_cost * int(e_npages[ei])
                    heappush(lanes, done)
                    hot[rid] = 1
                    total_work += int(e_work[ei])
                    total_gap += int(e_gap[ei])
                    if record_acc:
                        a_time.append(done)
                        a_entry.append(ei)
                elif resident[rid]:
                    done = t + int(e_gap[ei])
                    heappush(lanes, done)
                    total_work += int(e_work[ei])
                    total_gap += int(e_gap[ei])
                    if record_acc:
                        a_time.append(done)
                        a_entry.append(ei)
                else:
                    # stall: raise CAM-merged faults for the run's new pages;
                    # the fault that crosses the service threshold triggers
                    # the migration, everything after it is a duplicate
                    total_gap += int(e_gap[ei])
                    ep = epoch[rid]
                    pg = int(e_page[ei])
                    wr = int(e_write[ei])
                    for k in range(int(e_npages[ei])):
                        p = pg + k
                        if page_mark[p] != ep:
                            page_mark[p] = ep
                            if pending[rid]:
                                verdict = VERDICT_DUPLICATE
                            else:
                                distinct[rid] += 1
                                verdict = VERDICT_SERVICEABLE
                            fidx = emit_fault(t, p, rid, verdict, ei, wr)
                            last_fault[rid] = t
                            last_fault_idx[rid] = fidx
                            if replay_on:
                                replay_pages[rid].append((p, t))
                            if (verdict == VERDICT_SERVICEABLE
                                    and distinct[rid] >= r_delay[rid]):
                                pending[rid] = 1
                                q_push(rid, t, fidx)
                    stall_time[ei] = t
                    stall_next[ei] = stall_head[rid]
                    stall_head[rid] = ei
                    n_stalled += 1
                ei += 1
                continue

            # 4. drain / termination (inflight handled by branch 1 above)
            if q_head != q_tail:
                continue
            if ei < phase_end or len(lanes) < W:
                force_enqueue()
                continue
            break

        phase_time = max(lanes) if lanes else phase_time

    total_time = phase_time

    def arr(x, dtype):
        return np.asarray(x, dtype=dtype)

    return {
        "faults": {
            "time": arr(f_time, np.int64),
            "page": arr(f_page, np.int64),
            "range": arr(f_range, np.int64),
            "verdict": arr(f_verdict, np.uint8),
            "origin": arr(f_origin, np.int64),
            "write": arr(f_write, np.uint8),
        },
        "migrations": {
            "range": arr(m_range, np.int64),
            "trigger_fault": arr(m_trigger, np.int64),
            "queue_time": arr(m_queue_t, np.int64),
            "start": arr(m_start, np.int64),
            "end": arr(m_end, np.int64),
            "stage": (np.asarray(m_stage, dtype=np.int64).reshape(-1, 5)
                      if m_stage else np.empty((0, 5), dtype=np.int64)),
            "evict_cost": arr(m_evcost, np.int64),
            "n_evictions": arr(m_nevict, np.int64),
        },
        "evictions": {
            "time": arr(ev_time, np.int64),
            "range": arr(ev_range, np.int64),
            "cost": arr(ev_cost, np.int64),
            "cause": arr(ev_cause, np.int64),
        },
        "accesses": {
            "time": arr(a_time, np.int64),
            "entry": arr(a_entry, np.int64),
        },
        "total_time_us": int(total_time),
        "total_work": int(total_work),
        "total_gap_us": int(total_gap),
    }
