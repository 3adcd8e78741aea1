"""Deterministic page-granular access-trace generators.

Each generator turns a problem size into an ordered stream of page accesses
with compute gaps, grouped into kernel phases (phase boundaries act as
launch barriers).  Element accesses that land on one page within one
compute step collapse to a single page-access event, which keeps traces
desk-scale.

Two abstractions stand in for GPU execution:

- window: how many trace accesses may be outstanding (stalled or computing)
  at once.  This models effective occupancy / memory-level parallelism and
  differs per kernel type: streaming kernels keep the most accesses in
  flight, stencil kernels fewer, divergent graph traversal the fewest.
- intensity_us: compute time charged per access event.  For irregular
  kernels (BFS) this is per *page* touched and includes the uncoalesced
  access penalty, so it is much larger than the per-element arithmetic
  alone would suggest.

Matrix workloads use a coarse logical element of several pages so that
cubic-traffic kernels stay tractable; linear workloads use one page per
element.  BLAS kernels assume column-major factor storage (so a column read
is contiguous and a row read strides across every range of the matrix);
the access-aware SGEMM variant streams row blocks through a row-major
layout of its own making.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .units import DEFAULT_PAGE_SIZE

WORKLOAD_NAMES = (
    "stream",
    "conv2d",
    "jacobi2d",
    "jacobi2d_aware",
    "bfs",
    "syr2k",
    "sgemm",
    "sgemm_aware",
    "mvt",
    "gesummv",
)

# Per-workload calibration constants: effective in-flight window, compute
# gap per access event, logical element size, and shape parameters.
WORKLOAD_DEFAULTS: dict[str, dict] = {
    "stream": dict(window=256, intensity_us=1),
    "conv2d": dict(window=176, intensity_us=8, row_pages=32),
    "jacobi2d": dict(window=96, intensity_us=20, row_pages=16),
    "jacobi2d_aware": dict(window=96, intensity_us=20, row_pages=16),
    "bfs": dict(window=48, intensity_us=110, row_pages=3, edge_density=0.1),
    "sgemm": dict(window=48, intensity_us=6, elem_pages=4, chunk_ranges=5),
    "sgemm_aware": dict(window=48, intensity_us=6, elem_pages=4, chunk_ranges=5),
    "syr2k": dict(window=16, intensity_us=6, elem_pages=8),
    "mvt": dict(window=32, intensity_us=1),
    "gesummv": dict(window=32, intensity_us=1),
}

# Allocations accessed remotely instead of migrated when zero-copy mode is on.
ZERO_COPY_PINNED: dict[str, tuple[str, ...]] = {
    "gesummv": ("A", "B"),
    "mvt": ("A",),
    "sgemm": ("A",),
    "sgemm_aware": ("A",),
    "syr2k": ("A", "B"),
    "stream": ("A",),
    "conv2d": ("input",),
    "jacobi2d": ("A",),
    "jacobi2d_aware": ("A",),
    "bfs": ("edges",),
}


@dataclass(frozen=True)
class WorkloadSpec:
    """Problem statement for one trace: workload, size, and tuning knobs."""

    name: str
    footprint_bytes: int
    page_size: int = DEFAULT_PAGE_SIZE
    seed: int = 1
    iterations: int = 1
    intensity_us: int | None = None
    window: int | None = None
    edge_density: float | None = None

    def __post_init__(self):
        if self.name not in WORKLOAD_NAMES:
            raise ValueError(f"unknown workload {self.name!r}")
        if self.footprint_bytes <= 0:
            raise ValueError("footprint must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        density = self.edge_density
        if density is not None and not (0.0 < density <= 1.0):
            raise ValueError("edge density must be in (0, 1]")

    def param(self, key: str):
        override = getattr(self, key, None)
        if override is not None:
            return override
        return WORKLOAD_DEFAULTS[self.name].get(key)


@dataclass
class Trace:
    """Ordered page-access stream produced by a generator."""

    workload: str
    allocs: list[tuple[str, int]]  # (name, bytes), in placement order
    phases: list[tuple[str, int, int]]  # (kernel name, first entry, end entry)
    alloc_id: np.ndarray  # int16
    rel_page: np.ndarray  # int64, page offset within the allocation
    npages: np.ndarray  # int32, contiguous run length
    gap_us: np.ndarray  # int64 compute gap charged after the access
    work: np.ndarray  # int64 logical work units retired by the access
    write: np.ndarray  # uint8
    window: int
    pinned: tuple[str, ...] = ()

    @property
    def n_entries(self) -> int:
        return len(self.rel_page)

    @property
    def total_work(self) -> int:
        return int(self.work.sum())

    @property
    def total_gap_us(self) -> int:
        return int(self.gap_us.sum())


class _Builder:
    def __init__(self, workload: str, window: int):
        self.workload = workload
        self.window = window
        self.allocs: list[tuple[str, int]] = []
        self.phases: list[tuple[str, int, int]] = []
        self._chunks: list[tuple[np.ndarray, ...]] = []
        self._n = 0

    def add_alloc(self, name: str, nbytes: int) -> int:
        self.allocs.append((name, nbytes))
        return len(self.allocs) - 1

    def extend(self, alloc, page, npages=None, gap=None, work=None, write=None):
        page = np.asarray(page, dtype=np.int64)
        k = len(page)
        if k == 0:
            return

        def col(v, dtype, default):
            if v is None:
                return np.full(k, default, dtype=dtype)
            if np.isscalar(v):
                return np.full(k, v, dtype=dtype)
            return np.asarray(v, dtype=dtype)

        self._chunks.append(
            (
                col(alloc, np.int16, 0),
                page,
                col(npages, np.int32, 1),
                col(gap, np.int64, 0),
                col(work, np.int64, 0),
                col(write, np.uint8, 0),
            )
        )
        self._n += k

    def end_phase(self, name: str) -> None:
        start = self.phases[-1][2] if self.phases else 0
        self.phases.append((name, start, self._n))

    def build(self, pinned: tuple[str, ...]) -> Trace:
        if not self.phases or self.phases[-1][2] != self._n:
            self.end_phase("kernel")
        cols = [np.concatenate([c[i] for c in self._chunks]) if self._chunks else
                np.empty(0, dtype=d)
                for i, d in enumerate(
                    (np.int16, np.int64, np.int32, np.int64, np.int64, np.uint8))]
        return Trace(
            workload=self.workload,
            allocs=self.allocs,
            phases=self.phases,
            alloc_id=cols[0],
            rel_page=cols[1],
            npages=cols[2],
            gap_us=cols[3],
            work=cols[4],
            write=cols[5],
            window=self.window,
            pinned=pinned,
        )


def _interleave(*arrays: np.ndarray) -> np.ndarray:
    out = np.empty(sum(len(a) for a in arrays), dtype=arrays[0].dtype)
    k = len(arrays)
    for i, a in enumerate(arrays):
        out[i::k] = a
    return out


def _gen_stream(spec: WorkloadSpec, b: _Builder) -> None:
    pages = spec.footprint_bytes // spec.page_size // 3
    if pages < 1:
        raise ValueError("stream footprint too small")
    g = spec.param("intensity_us")
    a = b.add_alloc("A", pages * spec.page_size)
    bb = b.add_alloc("B", pages * spec.page_size)
    c = b.add_alloc("C", pages * spec.page_size)
    i = np.arange(pages, dtype=np.int64)
    b.extend(
        alloc=_interleave(
            np.full(pages, a, np.int16), np.full(pages, bb, np.int16),
            np.full(pages, c, np.int16)),
        page=_interleave(i, i, i),
        gap=_interleave(np.zeros(pages, np.int64), np.zeros(pages, np.int64),
                        np.full(pages, g, np.int64)),
        work=_interleave(np.zeros(pages, np.int64), np.zeros(pages, np.int64),
                         np.ones(pages, np.int64)),
        write=_interleave(np.zeros(pages, np.uint8), np.zeros(pages, np.uint8),
                          np.ones(pages, np.uint8)),
    )
    b.end_phase("triad")


def _stencil_kernel(b, read_alloc, write_alloc, pages, row_pages, g, order):
    """One sweep: 3-row stencil read of one matrix, linear write of the other."""
    p = np.arange(pages, dtype=np.int64)
    if order == "desc":
        p = p[::-1]
    up = np.clip(p - row_pages, 0, pages - 1)
    down = np.clip(p + row_pages, 0, pages - 1)
    n = pages
    b.extend(
        alloc=_interleave(
            np.full(n, read_alloc, np.int16), np.full(n, read_alloc, np.int16),
            np.full(n, read_alloc, np.int16), np.full(n, write_alloc, np.int16)),
        page=_interleave(up, p, down, p),
        gap=_interleave(np.zeros(n, np.int64), np.zeros(n, np.int64),
                        np.zeros(n, np.int64), np.full(n, g, np.int64)),
        work=_interleave(np.zeros(n, np.int64), np.zeros(n, np.int64),
                         np.zeros(n, np.int64), np.ones(n, np.int64)),
        write=_interleave(np.zeros(n, np.uint8), np.zeros(n, np.uint8),
                          np.zeros(n, np.uint8), np.ones(n, np.uint8)),
    )


def _gen_conv2d(spec: WorkloadSpec, b: _Builder) -> None:
    total_pages = spec.footprint_bytes // spec.page_size
    w_pages = 16
    pages = (total_pages - w_pages) // 2
    if pages < 1:
        raise ValueError("conv2d footprint too small")
    g = spec.param("intensity_us")
    row_pages = spec.param("row_pages")
    src = b.add_alloc("input", pages * spec.page_size)
    dst = b.add_alloc("output", pages * spec.page_size)
    wts = b.add_alloc("weights", w_pages * spec.page_size)
    b.extend(alloc=wts, page=np.arange(w_pages, dtype=np.int64))
    _stencil_kernel(b, src, dst, pages, row_pages, g, "asc")
    b.end_phase("conv")


def _gen_jacobi2d(spec: WorkloadSpec, b: _Builder, aware: bool) -> None:
    pages = spec.footprint_bytes // spec.page_size // 2
    if pages < 1:
        raise ValueError("jacobi2d footprint too small")
    g = spec.param("intensity_us")
    row_pages = spec.param("row_pages")
    a = b.add_alloc("A", pages * spec.page_size)
    bb = b.add_alloc("B", pages * spec.page_size)
    for it in range(spec.iterations):
        _stencil_kernel(b, a, bb, pages, row_pages, g, "asc")
        b.end_phase(f"iter{it}_k1")
        # the second sweep reads back the freshly written matrix; the
        # access-aware variant walks it tail-first so the resident suffix
        # is reused instead of re-migrated
        _stencil_kernel(b, bb, a, pages, row_pages, g, "desc" if aware else "asc")
        b.end_phase(f"iter{it}_k2")


def _gen_bfs(spec: WorkloadSpec, b: _Builder, alignment_pages: int) -> None:
    total_pages = spec.footprint_bytes // spec.page_size
    row_pages = spec.param("row_pages")
    density = spec.param("edge_density")
    # adjacency rows dominate; per-node arrays hold one word per node
    words_per_page = spec.page_size // 4
    node_pages = max(1, total_pages // (row_pages * words_per_page) + 1)
    edge_pages = max(row_pages,
                     (total_pages - 2 * node_pages) // row_pages * row_pages)
    n_nodes = edge_pages // row_pages
    g = spec.param("intensity_us")
    edges = b.add_alloc("edges", edge_pages * spec.page_size)
    dist = b.add_alloc("dist", node_pages * spec.page_size)
    frontier = b.add_alloc("frontier", node_pages * spec.page_size)
    rng = np.random.default_rng(spec.seed)

    # frontier levels: the source node, the decimated wave its expansion
    # reaches, then everything else.  Membership is seed-independent; the
    # seed only permutes visit order inside each range.
    nodes = np.arange(n_nodes, dtype=np.int64)
    stride = max(2, round(1.0 / density))
    level2 = nodes[(nodes % stride) == (nodes[0] + 1) % stride]
    level1 = nodes[:1]
    mask = np.ones(n_nodes, dtype=bool)
    mask[level1] = False
    mask[level2] = False
    level3 = nodes[mask]

    nodes_per_page = spec.page_size // 4
    for li, level in enumerate((level1, level2, level3)):
        if len(level) == 0:
            continue
        # visit rows range-bucket by range-bucket, randomly ordered inside
        starts = level * row_pages
        buckets = starts // alignment_pages
        order = np.lexsort((rng.random(len(level)), buckets))
        level = level[order]
        starts = level * row_pages
        k = len(level)
        node_page = np.minimum(level // nodes_per_page, node_pages - 1)
        b.extend(
            alloc=_interleave(
                np.full(k, dist, np.int16), np.full(k, edges, np.int16),
                np.full(k, frontier, np.int16)),
            page=_interleave(node_page, starts, node_page),
            npages=_interleave(
                np.ones(k, np.int32), np.full(k, row_pages, np.int32),
                np.ones(k, np.int32)),
            gap=_interleave(
                np.zeros(k, np.int64), np.full(k, g * row_pages, np.int64),
                np.zeros(k, np.int64)),
            work=_interleave(
                np.zeros(k, np.int64), np.full(k, row_pages, np.int64),
                np.zeros(k, np.int64)),
            write=_interleave(
                np.zeros(k, np.uint8), np.zeros(k, np.uint8),
                np.ones(k, np.uint8)),
        )
        b.end_phase(f"level{li}")


def _matrix_dims(spec: WorkloadSpec, n_allocs: int, elem_pages: int) -> int:
    pages_per_matrix = spec.footprint_bytes // spec.page_size // n_allocs
    n = math.isqrt(pages_per_matrix // elem_pages)
    if n < 4:
        raise ValueError(f"{spec.name} footprint too small")
    return n


def _gen_sgemm(spec: WorkloadSpec, b: _Builder) -> None:
    """Product kernel as shipped: full-matrix first touch of both factors,
    then one output element at a time using a whole factor row against a
    whole factor column (column-major storage, so row reads stride across
    every range of the matrix)."""
    ep = spec.param("elem_pages")
    n = _matrix_dims(spec, 3, ep)
    g = spec.param("intensity_us")
    nbytes = n * n * ep * spec.page_size
    a = b.add_alloc("A", nbytes)
    bb = b.add_alloc("B", nbytes)
    c = b.add_alloc("C", nbytes)

    lin = np.arange(n * n, dtype=np.int64) * ep
    b.extend(alloc=_interleave(np.full(n * n, a, np.int16),
                               np.full(n * n, bb, np.int16)),
             page=_interleave(lin, lin))

    k = np.arange(n, dtype=np.int64)
    for i in range(n):
        arow = (k * n + i) * ep          # row i of A: strided
        for_j = np.empty((n, 2 * n + 1), dtype=np.int64)
        alloc_row = np.empty(2 * n + 1, dtype=np.int16)
        alloc_row[0:2 * n:2] = a
        alloc_row[1:2 * n:2] = bb
        alloc_row[2 * n] = c
        j = np.arange(n, dtype=np.int64)
        bcol = (j[:, None] * n + k[None, :]) * ep   # column j of B: contiguous
        for_j[:, 0:2 * n:2] = arow[None, :]
        for_j[:, 1:2 * n:2] = bcol
        for_j[:, 2 * n] = (j * n + i) * ep          # C[i, j], dispersed writes
        pages = for_j.reshape(-1)
        allocs = np.tile(alloc_row, n)
        gaps = np.zeros(2 * n + 1, dtype=np.int64)
        gaps[0:2 * n] = g
        works = np.zeros(2 * n + 1, dtype=np.int64)
        works[2 * n] = n
        writes = np.zeros(2 * n + 1, dtype=np.uint8)
        writes[2 * n] = 1
        b.extend(alloc=allocs, page=pages, npages=ep,
                 gap=np.tile(gaps, n), work=np.tile(works, n),
                 write=np.tile(writes, n))
    b.end_phase("gemm")


def _gen_sgemm_aware(spec: WorkloadSpec, b: _Builder, alignment_pages: int) -> None:
    """Blocked rewrite: keep the column factor resident, stream row blocks
    of the row factor and the product through the remaining space."""
    ep = spec.param("elem_pages")
    n = _matrix_dims(spec, 3, ep)
    g = spec.param("intensity_us")
    chunk_ranges = spec.param("chunk_ranges")
    nbytes = n * n * ep * spec.page_size
    a = b.add_alloc("A", nbytes)
    bb = b.add_alloc("B", nbytes)
    c = b.add_alloc("C", nbytes)

    lin = np.arange(n * n, dtype=np.int64) * ep
    b.extend(alloc=bb, page=lin)  # column factor migrated up front

    chunk_rows = max(1, chunk_ranges * alignment_pages // (n * ep))
    for r0 in range(0, n, chunk_rows):
        r1 = min(n, r0 + chunk_rows)
        rows = r1 - r0
        # row block of A (row-major layout private to this kernel)
        chunk = np.arange(r0 * n, r1 * n, dtype=np.int64) * ep
        b.extend(alloc=a, page=chunk, npages=ep, gap=g)
        # full pass over the resident column factor, one partial-sum round
        b.extend(alloc=bb, page=lin, npages=ep, gap=2 * rows * g, work=rows)
        b.extend(alloc=c, page=chunk, npages=ep, write=1)
    b.end_phase("gemm_blocked")


def _gen_syr2k(spec: WorkloadSpec, b: _Builder) -> None:
    """Rank-2k update: same skeleton as the product kernel with both factors
    read row-and-column per output element and a symmetric pair of writes."""
    ep = spec.param("elem_pages")
    n = _matrix_dims(spec, 3, ep)
    g = spec.param("intensity_us")
    nbytes = n * n * ep * spec.page_size
    a = b.add_alloc("A", nbytes)
    bb = b.add_alloc("B", nbytes)
    c = b.add_alloc("C", nbytes)

    lin = np.arange(n * n, dtype=np.int64) * ep
    b.extend(alloc=_interleave(np.full(n * n, a, np.int16),
                               np.full(n * n, bb, np.int16)),
             page=_interleave(lin, lin))

    k = np.arange(n, dtype=np.int64)
    width = 4 * n + 2
    for i in range(n):
        arow = (k * n + i) * ep
        brow = (k * n + i) * ep
        block = np.empty((n, width), dtype=np.int64)
        alloc_row = np.empty(width, dtype=np.int16)
        alloc_row[0:4 * n:4] = a
        alloc_row[1:4 * n:4] = bb
        alloc_row[2:4 * n:4] = bb
        alloc_row[3:4 * n:4] = a
        alloc_row[4 * n] = c
        alloc_row[4 * n + 1] = c
        j = np.arange(n, dtype=np.int64)
        bcol = (j[:, None] * n + k[None, :]) * ep
        acol = bcol
        block[:, 0:4 * n:4] = arow[None, :]
        block[:, 1:4 * n:4] = bcol
        block[:, 2:4 * n:4] = brow[None, :]
        block[:, 3:4 * n:4] = acol
        block[:, 4 * n] = (j * n + i) * ep
        block[:, 4 * n + 1] = (i * n + j) * ep
        gaps = np.zeros(width, dtype=np.int64)
        gaps[0:4 * n] = g
        works = np.zeros(width, dtype=np.int64)
        works[4 * n] = n
        works[4 * n + 1] = n
        writes = np.zeros(width, dtype=np.uint8)
        writes[4 * n] = 1
        writes[4 * n + 1] = 1
        b.extend(alloc=np.tile(alloc_row, n), page=block.reshape(-1), npages=ep,
                 gap=np.tile(gaps, n), work=np.tile(works, n),
                 write=np.tile(writes, n))
    b.end_phase("syr2k")


def _gen_mvt(spec: WorkloadSpec, b: _Builder) -> None:
    """Row-major matrix-vector pass, then the transpose pass whose column
    strides disperse consecutive accesses across every range."""
    total_pages = spec.footprint_bytes // spec.page_size
    vec_pages = max(1, math.isqrt(total_pages) // (spec.page_size // 8))
    n = math.isqrt(max(16, total_pages - 3 * vec_pages))
    g = spec.param("intensity_us")
    a = b.add_alloc("A", n * n * spec.page_size)
    x = b.add_alloc("x", vec_pages * spec.page_size)
    y1 = b.add_alloc("y1", vec_pages * spec.page_size)
    y2 = b.add_alloc("y2", vec_pages * spec.page_size)

    idx = np.arange(n, dtype=np.int64)
    for out_alloc, colwise in ((y1, False), (y2, True)):
        for i in range(n):
            pages = idx * n + i if colwise else i * n + idx
            b.extend(alloc=a, page=pages, gap=g, work=1)
            b.extend(alloc=[x, out_alloc],
                     page=[int(i % vec_pages), int(i % vec_pages)],
                     write=[0, 1])
        b.end_phase("Atx" if colwise else "Ax")


def _gen_gesummv(spec: WorkloadSpec, b: _Builder) -> None:
    """Two scaled matrix-vector products with interleaved column-stride
    traversals of both large matrices."""
    total_pages = spec.footprint_bytes // spec.page_size
    vec_pages = max(1, math.isqrt(total_pages // 2) // (spec.page_size // 8))
    n = math.isqrt(max(16, (total_pages - 2 * vec_pages) // 2))
    g = spec.param("intensity_us")
    a = b.add_alloc("A", n * n * spec.page_size)
    bb = b.add_alloc("B", n * n * spec.page_size)
    x = b.add_alloc("x", vec_pages * spec.page_size)
    y = b.add_alloc("y", vec_pages * spec.page_size)

    k = np.arange(n, dtype=np.int64)
    for i in range(n):
        col = k * n + i
        b.extend(alloc=_interleave(np.full(n, a, np.int16),
                                   np.full(n, bb, np.int16)),
                 page=_interleave(col, col), gap=g, work=1)
        b.extend(alloc=[x, y], page=[int(i % vec_pages), int(i % vec_pages)],
                 write=[0, 1])
    b.end_phase("gesummv")


def generate(spec: WorkloadSpec, alignment_bytes: int | None = None) -> Trace:
    """Build the deterministic access trace for `spec`.

    `alignment_bytes` tells range-aware generators (BFS bucketing, blocked
    GEMM chunk sizing) the driver's range granule; it defaults to 8 MiB.
    """
    alignment_pages = (alignment_bytes or 8 * 1024 * 1024) // spec.page_size
    b = _Builder(spec.name, spec.param("window"))
    if spec.name == "stream":
        _gen_stream(spec, b)
    elif spec.name == "conv2d":
        _gen_conv2d(spec, b)
    elif spec.name == "jacobi2d":
        _gen_jacobi2d(spec, b, aware=False)
    elif spec.name == "jacobi2d_aware":
        _gen_jacobi2d(spec, b, aware=True)
    elif spec.name == "bfs":
        _gen_bfs(spec, b, alignment_pages)
    elif spec.name == "sgemm":
        _gen_sgemm(spec, b)
    elif spec.name == "sgemm_aware":
        _gen_sgemm_aware(spec, b, alignment_pages)
    elif spec.name == "syr2k":
        _gen_syr2k(spec, b)
    elif spec.name == "mvt":
        _gen_mvt(spec, b)
    elif spec.name == "gesummv":
        _gen_gesummv(spec, b)
    return b.build(pinned=ZERO_COPY_PINNED.get(spec.name, ()))
