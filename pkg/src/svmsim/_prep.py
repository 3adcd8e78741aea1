"""Lowering from SimConfig to the flat arrays the stepping kernels consume.

Placement, range construction, per-range cost tables, and splitting of
trace runs at range boundaries all happen here so both kernels (compiled
and pure Python) see identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .costs import STAGES
from .memmodel import construct_ranges, place_allocations
from .workloads import Trace, generate


@dataclass
class PreparedSim:
    config: SimConfig
    trace: Trace
    allocations: list  # list[Allocation]
    ranges: list  # list[Range]
    # per-range tables
    r_start_page: np.ndarray
    r_n_pages: np.ndarray
    r_alloc: np.ndarray
    r_size: np.ndarray  # bytes
    r_stage: np.ndarray  # [n_ranges, 5] int64
    r_total: np.ndarray
    r_evcost: np.ndarray
    r_pinned: np.ndarray  # uint8
    r_delay_threshold: np.ndarray  # int64, 1 = immediate
    # trace entry tables (after boundary splitting)
    e_range: np.ndarray  # int32
    e_page: np.ndarray  # int64 global page index of run start
    e_npages: np.ndarray
    e_gap: np.ndarray
    e_work: np.ndarray
    e_write: np.ndarray
    phase_bounds: np.ndarray  # int64 [n_phases + 1]
    phase_names: list
    # scalars
    window: int
    capacity: int
    total_pages: int
    replay_period: int

    @property
    def n_ranges(self) -> int:
        return len(self.r_start_page)


def prepare(config: SimConfig) -> PreparedSim:
    cfg = config
    page = cfg.page_size
    align = cfg.alignment
    trace = generate(cfg.workload, alignment_bytes=align)

    allocations = place_allocations(
        trace.allocs, page, cfg.placement_granularity)
    ranges = construct_ranges(
        cfg.capacity_bytes, allocations, page, alignment=align)

    n_ranges = len(ranges)
    r_start_page = np.array([r.start // page for r in ranges], dtype=np.int64)
    r_n_pages = np.array([r.size // page for r in ranges], dtype=np.int64)
    r_alloc = np.array([r.alloc for r in ranges], dtype=np.int32)
    r_size = np.array([r.size for r in ranges], dtype=np.int64)

    r_stage = np.zeros((n_ranges, len(STAGES)), dtype=np.int64)
    r_total = np.zeros(n_ranges, dtype=np.int64)
    r_evcost = np.zeros(n_ranges, dtype=np.int64)
    for i, rng in enumerate(ranges):
        pages = rng.size // page
        costs = cfg.cost.stage_costs_us(pages)
        r_stage[i] = [costs[s] for s in STAGES]
        r_total[i] = sum(costs.values())
        r_evcost[i] = cfg.cost.eviction_cost_us(pages)

    pinned_ids = {i for i, (name, _) in enumerate(trace.allocs)
                  if cfg.mode == "zero-copy" and name in trace.pinned}
    r_pinned = np.array([1 if r.alloc in pinned_ids else 0 for r in ranges],
                        dtype=np.uint8)

    if cfg.mode == "delayed":
        if cfg.delayed_k is not None:
            r_delay = np.full(n_ranges, cfg.delayed_k, dtype=np.int64)
        else:
            r_delay = np.maximum(
                1, (r_n_pages * cfg.delayed_p).astype(np.int64))
    else:
        r_delay = np.ones(n_ranges, dtype=np.int64)

    # globalize trace pages and split runs at range boundaries
    bases = np.array([a.base // page for a in allocations], dtype=np.int64)
    g_page = trace.rel_page + bases[trace.alloc_id]
    npages = trace.npages.astype(np.int64)

    range_starts = r_start_page  # sorted by construction
    first = np.searchsorted(range_starts, g_page, side="right") - 1
    last = np.searchsorted(range_starts, g_page + npages - 1, side="right") - 1
    if (first < 0).any():
        raise AssertionError("trace access below first range")

    window = cfg.workload.window or trace.window

    if (first == last).all():
        e_range = first.astype(np.int32)
        e_page = g_page
        e_npages = npages.astype(np.int32)
        e_gap = trace.gap_us
        e_work = trace.work
        e_write = trace.write
        phase_bounds = np.array(
            [0] + [end for (_, _, end) in trace.phases], dtype=np.int64)
    else:
        # expand multi-range runs into per-range pieces; the compute gap and
        # work ride on the last piece
        pieces_per = (last - first + 1).astype(np.int64)
        total = int(pieces_per.sum())
        e_range = np.empty(total, dtype=np.int32)
        e_page = np.empty(total, dtype=np.int64)
        e_npages = np.empty(total, dtype=np.int32)
        e_gap = np.zeros(total, dtype=np.int64)
        e_work = np.zeros(total, dtype=np.int64)
        e_write = np.empty(total, dtype=np.uint8)
        offsets = np.zeros(len(g_page) + 1, dtype=np.int64)
        np.cumsum(pieces_per, out=offsets[1:])
        range_ends = r_start_page + r_n_pages
        for i in range(len(g_page)):
            o = offsets[i]
            rid = int(first[i])
            start = int(g_page[i])
            remaining = int(npages[i])
            while remaining > 0:
                take = min(remaining, int(range_ends[rid]) - start)
                e_range[o] = rid
                e_page[o] = start
                e_npages[o] = take
                e_write[o] = trace.write[i]
                start += take
                remaining -= take
                rid += 1
                o += 1
            e_gap[o - 1] = trace.gap_us[i]
            e_work[o - 1] = trace.work[i]
        phase_bounds = np.array(
            [0] + [int(offsets[end]) for (_, _, end) in trace.phases],
            dtype=np.int64)

    total_pages = int((allocations[-1].base + allocations[-1].size) // page)

    return PreparedSim(
        config=cfg,
        trace=trace,
        allocations=allocations,
        ranges=ranges,
        r_start_page=r_start_page,
        r_n_pages=r_n_pages,
        r_alloc=r_alloc,
        r_size=r_size,
        r_stage=r_stage,
        r_total=r_total,
        r_evcost=r_evcost,
        r_pinned=r_pinned,
        r_delay_threshold=r_delay,
        e_range=e_range,
        e_page=e_page,
        e_npages=np.asarray(e_npages, dtype=np.int32),
        e_gap=e_gap,
        e_work=e_work,
        e_write=e_write,
        phase_bounds=phase_bounds,
        phase_names=[name for (name, _, _) in trace.phases],
        window=int(window),
        capacity=cfg.capacity_bytes,
        total_pages=total_pages,
        replay_period=cfg.replay_period_us(),
    )
