# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernel: line-for-line twin of _kernel_py.run_kernel.

Any semantic change there must be mirrored here; tests assert the two
backends produce identical logs.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, int32_t, uint8_t

from ._kernel_py import EvictionTimeoutError, SimulationDeadlockError

cdef int64_t INF = (<int64_t>1) << 62

cdef int VERDICT_SERVICEABLE = 0
cdef int VERDICT_DUPLICATE = 1
cdef int VERDICT_STALE = 2


cnp.import_array()


cdef class _I64Buf:
    """Growable int64 column."""
    cdef int64_t* data
    cdef Py_ssize_t n, cap
    cdef object _arr

    def __cinit__(self, Py_ssize_t cap=1024):
        self.cap = cap if cap > 0 else 1
        self.n = 0
        self._arr = np.empty(self.cap, dtype=np.int64)
        self.data = <int64_t*> cnp.PyArray_DATA(self._arr)

    cdef inline void push(self, int64_t v):
        if self.n == self.cap:
            old = self._arr
            self.cap *= 2
            new = np.empty(self.cap, dtype=np.int64)
            new[: self.n] = old[: self.n]
            self._arr = new
            self.data = <int64_t*> cnp.PyArray_DATA(new)
        self.data[self.n] = v
        self.n += 1

    cdef object array(self):
        return self._arr[: self.n].copy()


cdef inline void heap_push(int64_t* h, Py_ssize_t* n, int64_t v):
    cdef Py_ssize_t i = n[0]
    cdef Py_ssize_t parent
    h[i] = v
    n[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if h[parent] <= h[i]:
            break
        h[parent], h[i] = h[i], h[parent]
        i = parent


cdef inline int64_t heap_pop(int64_t* h, Py_ssize_t* n):
    cdef int64_t top = h[0]
    cdef Py_ssize_t i = 0, child
    n[0] -= 1
    h[0] = h[n[0]]
    while True:
        child = 2 * i + 1
        if child >= n[0]:
            break
        if child + 1 < n[0] and h[child + 1] < h[child]:
            child += 1
        if h[i] <= h[child]:
            break
        h[i], h[child] = h[child], h[i]
        i = child
    return top


def run_kernel(prep):
    cfg = prep.config
    cdef Py_ssize_t n_ranges = prep.n_ranges

    cdef int64_t[::1] r_size = np.ascontiguousarray(prep.r_size, dtype=np.int64)
    cdef int64_t[:, ::1] r_stage = np.ascontiguousarray(prep.r_stage, dtype=np.int64)
    cdef int64_t[::1] r_total = np.ascontiguousarray(prep.r_total, dtype=np.int64)
    cdef int64_t[::1] r_evcost = np.ascontiguousarray(prep.r_evcost, dtype=np.int64)
    cdef uint8_t[::1] r_pinned = np.ascontiguousarray(prep.r_pinned, dtype=np.uint8)
    cdef int64_t[::1] r_delay = np.ascontiguousarray(
        prep.r_delay_threshold, dtype=np.int64)
    cdef int32_t[::1] e_range = np.ascontiguousarray(prep.e_range, dtype=np.int32)
    cdef int64_t[::1] e_page = np.ascontiguousarray(prep.e_page, dtype=np.int64)
    cdef int32_t[::1] e_npages = np.ascontiguousarray(prep.e_npages, dtype=np.int32)
    cdef int64_t[::1] e_gap = np.ascontiguousarray(prep.e_gap, dtype=np.int64)
    cdef int64_t[::1] e_work = np.ascontiguousarray(prep.e_work, dtype=np.int64)
    cdef uint8_t[::1] e_write = np.ascontiguousarray(prep.e_write, dtype=np.uint8)
    cdef int64_t[::1] phase_bounds = np.ascontiguousarray(
        prep.phase_bounds, dtype=np.int64)

    cdef Py_ssize_t W = prep.window
    cdef int64_t capacity = prep.capacity
    cdef Py_ssize_t n_entries = len(prep.e_range)

    cdef int overlap = 1 if cfg.mode == "overlap" else 0
    cdef int zero_copy = 1 if cfg.mode == "zero-copy" else 0
    cdef int64_t zc_cost = cfg.cost.zero_copy_latency_us
    cdef int replay_on = 1 if cfg.replay.enabled else 0
    cdef int64_t replay_period = prep.replay_period
    cdef int64_t timeout = cfg.timeout_us if cfg.timeout_us is not None else -1
    cdef int64_t ev_timeout = (cfg.eviction_timeout_us
                               if cfg.eviction_timeout_us is not None else -1)
    cdef int record_acc = 1 if cfg.record_accesses else 0
    cdef int policy_lrf = 1 if cfg.policy == "lrf" else 0

    # state
    state_arrays = {
        "resident": np.zeros(n_ranges, dtype=np.uint8),
        "pending": np.zeros(n_ranges, dtype=np.uint8),
        "hot": np.zeros(n_ranges, dtype=np.uint8),
    }
    cdef uint8_t[::1] resident = state_arrays["resident"]
    cdef uint8_t[::1] pending = state_arrays["pending"]
    cdef uint8_t[::1] hot = state_arrays["hot"]
    cdef int64_t[::1] last_fault = np.full(n_ranges, -1, dtype=np.int64)
    cdef int64_t[::1] last_fault_idx = np.full(n_ranges, -1, dtype=np.int64)
    cdef int64_t[::1] distinct = np.zeros(n_ranges, dtype=np.int64)
    cdef int64_t[::1] epoch = np.arange(1, n_ranges + 1, dtype=np.int64)
    cdef int64_t[::1] page_mark = np.zeros(prep.total_pages, dtype=np.int64)
    cdef int64_t epoch_seq = n_ranges
    cdef int64_t used = 0
    cdef Py_ssize_t clock_hand = 0

    cdef int64_t[::1] stall_head = np.full(n_ranges, -1, dtype=np.int64)
    cdef int64_t[::1] stall_next = np.full(max(1, n_entries), -1, dtype=np.int64)
    cdef int64_t[::1] stall_time = np.zeros(max(1, n_entries), dtype=np.int64)
    cdef Py_ssize_t n_stalled = 0

    # replay page list per range: linked list over two growable columns
    cdef _I64Buf rp_page = _I64Buf()
    cdef _I64Buf rp_time = _I64Buf()
    cdef _I64Buf rp_next = _I64Buf()
    cdef int64_t[::1] rp_head = np.full(n_ranges, -1, dtype=np.int64)
    cdef int64_t[::1] rp_tail = np.full(n_ranges, -1, dtype=np.int64)

    cdef int64_t[::1] q_range = np.zeros(n_ranges + 1, dtype=np.int64)
    cdef int64_t[::1] q_time = np.zeros(n_ranges + 1, dtype=np.int64)
    cdef int64_t[::1] q_fault = np.zeros(n_ranges + 1, dtype=np.int64)
    cdef Py_ssize_t q_head = 0, q_tail = 0, q_cap = n_ranges + 1

    cdef int64_t driver_free = 0
    cdef Py_ssize_t inflight = -1
    cdef int64_t inflight_end = 0

    lanes_arr = np.zeros(W, dtype=np.int64)
    cdef int64_t* lanes = <int64_t*> cnp.PyArray_DATA(lanes_arr)
    cdef Py_ssize_t lanes_n = 0

    # logs
    cdef _I64Buf f_time = _I64Buf(), f_page = _I64Buf(), f_range = _I64Buf()
    cdef _I64Buf f_verdict = _I64Buf(), f_origin = _I64Buf(), f_write = _I64Buf()
    cdef _I64Buf m_range = _I64Buf(), m_trigger = _I64Buf(), m_queue_t = _I64Buf()
    cdef _I64Buf m_start = _I64Buf(), m_end = _I64Buf()
    cdef _I64Buf m_evcost = _I64Buf(), m_nevict = _I64Buf()
    cdef _I64Buf m_stage_flat = _I64Buf()
    cdef _I64Buf ev_time = _I64Buf(), ev_range = _I64Buf()
    cdef _I64Buf ev_cost = _I64Buf(), ev_cause = _I64Buf()
    cdef _I64Buf a_time = _I64Buf(), a_entry = _I64Buf()

    cdef int64_t total_work = 0
    cdef int64_t total_gap = 0

    cdef Py_ssize_t ph, ei, phase_end, i, it, k, best, victim
    cdef int64_t phase_time = 0, t_lane, t, tq, start_c, start, done
    cdef int64_t best_t, d, best_d, cost, evcost_total, stage_total, front, dur
    cdef int64_t rid64, fidx, nfidx, ep, pg, p, t_r, t0, mig_idx, nev, end
    cdef Py_ssize_t rid
    cdef int wr, verdict_i
    cdef Py_ssize_t scan

    for ph in range(len(phase_bounds) - 1):
        ei = phase_bounds[ph]
        phase_end = phase_bounds[ph + 1]
        lanes_n = 0
        for i in range(W):
            heap_push(lanes, &lanes_n, phase_time)

        while True:
            t_lane = lanes[0] if lanes_n > 0 else INF

            # 1. complete a due migration (also: no issues remain this phase)
            if inflight >= 0 and (lanes_n == 0 or inflight_end <= t_lane
                                  or ei >= phase_end):
                rid = inflight
                end = inflight_end
                resident[rid] = 1
                pending[rid] = 0
                used += r_size[rid]
                hot[rid] = 1
                distinct[rid] = 0
                if replay_on:
                    it = rp_head[rid]
                    while it != -1:
                        pg = rp_page.data[it]
                        t0 = rp_time.data[it]
                        t = t0 + replay_period
                        while t < end:
                            f_time.push(t); f_page.push(pg); f_range.push(rid)
                            f_verdict.push(VERDICT_DUPLICATE)
                            f_origin.push(-1); f_write.push(0)
                            if t > last_fault[rid]:
                                last_fault[rid] = t
                            t += replay_period
                        it = rp_next.data[it]
                    rp_head[rid] = -1
                    rp_tail[rid] = -1
                it = stall_head[rid]
                stall_head[rid] = -1
                while it != -1:
                    done = end + e_gap[it]
                    heap_push(lanes, &lanes_n, done)
                    n_stalled -= 1
                    total_work += e_work[it]
                    if record_acc:
                        a_time.push(done)
                        a_entry.push(it)
                    it = stall_next[it]
                inflight = -1
                continue

            # 2. start queued service if it begins no later than the next issue
            if inflight < 0 and q_head != q_tail:
                rid = <Py_ssize_t> q_range[q_head]
                tq = q_time[q_head]
                fidx = q_fault[q_head]
                start_c = driver_free if driver_free > tq else tq
                if start_c <= t_lane or ei >= phase_end:
                    q_head = (q_head + 1) % q_cap
                    if resident[rid]:
                        pending[rid] = 0
                        continue
                    if timeout >= 0 and start_c - tq > timeout:
                        pg = f_page.data[fidx] if fidx >= 0 else -1
                        wr = <int> (f_write.data[fidx] if fidx >= 0 else 0)
                        f_time.push(start_c); f_page.push(pg); f_range.push(rid)
                        f_verdict.push(VERDICT_STALE); f_origin.push(-1)
                        f_write.push(wr)
                        f_time.push(start_c); f_page.push(pg); f_range.push(rid)
                        f_verdict.push(VERDICT_SERVICEABLE); f_origin.push(-1)
                        f_write.push(wr)
                        nfidx = f_time.n - 1
                        last_fault[rid] = start_c
                        last_fault_idx[rid] = nfidx
                        q_range[q_tail] = rid
                        q_time[q_tail] = start_c
                        q_fault[q_tail] = nfidx
                        q_tail = (q_tail + 1) % q_cap
                        continue
                    # start migration
                    start = start_c
                    mig_idx = m_range.n
                    evcost_total = 0
                    nev = 0
                    while used + r_size[rid] > capacity:
                        if policy_lrf:
                            best = -1
                            best_t = INF
                            for i in range(n_ranges):
                                if resident[i]:
                                    if last_fault[i] < best_t:
                                        best = i
                                        best_t = last_fault[i]
                            victim = best
                        else:
                            victim = -1
                            for scan in range(2 * n_ranges + 1):
                                i = clock_hand
                                clock_hand = (clock_hand + 1) % n_ranges
                                if not resident[i]:
                                    continue
                                if hot[i]:
                                    hot[i] = 0
                                    continue
                                victim = i
                                break
                        if victim < 0:
                            raise SimulationDeadlockError(
                                f"cannot make space for range {rid} "
                                f"({int(r_size[rid])} B) at t={start}us: no "
                                f"evictable resident range (the driver would "
                                f"sit in its eviction loop until the eviction "
                                f"timeout)",
                                range_id=rid, time_us=start)
                        cost = r_evcost[victim]
                        evcost_total += cost
                        nev += 1
                        resident[victim] = 0
                        used -= r_size[victim]
                        epoch_seq += 1
                        epoch[victim] = epoch_seq
                        distinct[victim] = 0
                        ev_time.push(start + evcost_total)
                        ev_range.push(victim)
                        ev_cost.push(cost)
                        ev_cause.push(mig_idx)
                        if ev_timeout >= 0 and evcost_total > ev_timeout:
                            raise EvictionTimeoutError(
                                f"eviction chain for range {rid} exceeded "
                                f"{ev_timeout}us at t={start}us")
                    stage_total = r_total[rid]
                    if overlap and evcost_total > 0:
                        front = r_stage[rid, 0] + r_stage[rid, 2]
                        dur = evcost_total if evcost_total > front else front
                        dur += stage_total - front
                    else:
                        dur = evcost_total + stage_total
                    m_range.push(rid)
                    m_trigger.push(fidx)
                    m_queue_t.push(tq)
                    m_start.push(start)
                    m_end.push(start + dur)
                    m_evcost.push(evcost_total)
                    m_nevict.push(nev)
                    for k in range(5):
                        m_stage_flat.push(r_stage[rid, k])
                    inflight = rid
                    inflight_end = start + dur
                    driver_free = inflight_end
                    continue

            # 3. issue the next trace entry
            if lanes_n > 0 and ei < phase_end:
                t = heap_pop(lanes, &lanes_n)
                rid = <Py_ssize_t> e_range[ei]
                if zero_copy and r_pinned[rid]:
                    done = t + e_gap[ei] + zc_cost * e_npages[ei]
                    heap_push(lanes, &lanes_n, done)
                    hot[rid] = 1
                    total_work += e_work[ei]
                    total_gap += e_gap[ei]
                    if record_acc:
                        a_time.push(done)
                        a_entry.push(ei)
                elif resident[rid]:
                    done = t + e_gap[ei]
                    heap_push(lanes, &lanes_n, done)
                    total_work += e_work[ei]
                    total_gap += e_gap[ei]
                    if record_acc:
                        a_time.push(done)
                        a_entry.push(ei)
                else:
                    total_gap += e_gap[ei]
                    ep = epoch[rid]
                    pg = e_page[ei]
                    wr = <int> e_write[ei]
                    for k in range(e_npages[ei]):
                        p = pg + k
                        if page_mark[p] != ep:
                            page_mark[p] = ep
                            if pending[rid]:
                                verdict_i = VERDICT_DUPLICATE
                            else:
                                distinct[rid] += 1
                                verdict_i = VERDICT_SERVICEABLE
                            f_time.push(t); f_page.push(p); f_range.push(rid)
                            f_verdict.push(verdict_i); f_origin.push(ei)
                            f_write.push(wr)
                            fidx = f_time.n - 1
                            last_fault[rid] = t
                            last_fault_idx[rid] = fidx
                            if replay_on:
                                rp_page.push(p)
                                rp_time.push(t)
                                rp_next.push(-1)
                                if rp_tail[rid] == -1:
                                    rp_head[rid] = rp_page.n - 1
                                else:
                                    rp_next.data[rp_tail[rid]] = rp_page.n - 1
                                rp_tail[rid] = rp_page.n - 1
                            if (verdict_i == VERDICT_SERVICEABLE
                                    and distinct[rid] >= r_delay[rid]):
                                pending[rid] = 1
                                q_range[q_tail] = rid
                                q_time[q_tail] = t
                                q_fault[q_tail] = fidx
                                q_tail = (q_tail + 1) % q_cap
                    stall_time[ei] = t
                    stall_next[ei] = stall_head[rid]
                    stall_head[rid] = ei
                    n_stalled += 1
                ei += 1
                continue

            # 4. drain / termination (inflight handled by branch 1 above)
            if q_head != q_tail:
                continue
            if ei < phase_end or lanes_n < W:
                # delayed-migration escape hatch
                best = -1
                best_d = -1
                for i in range(n_ranges):
                    if stall_head[i] != -1 and not pending[i] and not resident[i]:
                        d = distinct[i]
                        if d > best_d:
                            best = i
                            best_d = d
                if best < 0:
                    raise SimulationDeadlockError(
                        "simulation stuck: stalled lanes but nothing serviceable")
                pending[best] = 1
                q_range[q_tail] = best
                q_time[q_tail] = last_fault[best]
                q_fault[q_tail] = last_fault_idx[best]
                q_tail = (q_tail + 1) % q_cap
                continue
            break

        if lanes_n > 0:
            best_t = lanes[0]
            for i in range(lanes_n):
                if lanes[i] > best_t:
                    best_t = lanes[i]
            phase_time = best_t

    stage_arr = m_stage_flat.array()
    return {
        "faults": {
            "time": f_time.array(),
            "page": f_page.array(),
            "range": f_range.array(),
            "verdict": f_verdict.array().astype(np.uint8),
            "origin": f_origin.array(),
            "write": f_write.array().astype(np.uint8),
        },
        "migrations": {
            "range": m_range.array(),
            "trigger_fault": m_trigger.array(),
            "queue_time": m_queue_t.array(),
            "start": m_start.array(),
            "end": m_end.array(),
            "stage": stage_arr.reshape(-1, 5) if len(stage_arr) else
                     np.empty((0, 5), dtype=np.int64),
            "evict_cost": m_evcost.array(),
            "n_evictions": m_nevict.array(),
        },
        "evictions": {
            "time": ev_time.array(),
            "range": ev_range.array(),
            "cost": ev_cost.array(),
            "cause": ev_cause.array(),
        },
        "accesses": {
            "time": a_time.array(),
            "entry": a_entry.array(),
        },
        "total_time_us": int(phase_time),
        "total_work": int(total_work),
        "total_gap_us": int(total_gap),
    }
