"""Hierarchical compression: partition, per-block compression, pairwise
truncated-SVD merges, and the analytic cost model.

The matrix is tiled into n_b = 4^L blocks by L-level binary index trees on
rows and columns. Every leaf block is compressed independently (blocked
cross approximation), then for each level the sibling blocks are merged
horizontally and vertically through truncated SVDs of the thin stacked
factors, never of the dense blocks. Leaf compressions and pair merges form a
task graph executed on a fixed-size process pool; every task writes one
block-id keyed slot.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .aca import DEGENERATE
from .baca import baca_compress
from .linalg import TruncatedSVD, truncated_svd
from .seeding import block_seed

__all__ = [
    "IndexTree",
    "BlockSVD",
    "HBacaDiagnostics",
    "CostModelParams",
    "build_index_tree",
    "merge_pair_horizontal",
    "merge_pair_vertical",
    "hbaca_compress",
    "cost_model",
]


@dataclass(frozen=True)
class IndexTree:
    """Binary tree of contiguous index ranges.

    ``ranges[l]`` lists the half-open (lo, hi) ranges of the nodes at level
    l, with leaves at level 0 (2^levels nodes) and the root at level
    ``levels``. Node (l, i) has children (l-1, 2i) and (l-1, 2i+1).
    """

    extent: int
    levels: int
    ranges: tuple

    def leaves(self):
        return self.ranges[0]


def build_index_tree(extent, levels):
    """Split [0, extent) into 2^levels leaves by repeated ceil/floor
    midpoint splits; raises if extent < 2^levels."""
    if extent < 2**levels:
        raise ValueError(f"extent {extent} cannot be split into 2^{levels} leaves")
    by_level = [[(0, extent)]]
    for _ in range(levels):
        children = []
        for lo, hi in by_level[-1]:
            size = hi - lo
            left = (size + 1) // 2
            children.append((lo, lo + left))
            children.append((lo + left, hi))
        by_level.append(children)
    by_level.reverse()
    return IndexTree(extent=extent, levels=levels,
                     ranges=tuple(tuple(level) for level in by_level))


@dataclass(frozen=True)
class BlockSVD:
    """Truncated SVD of one block, tagged with its (level, index) row and
    column tree nodes."""

    row_node: tuple
    col_node: tuple
    svd: TruncatedSVD

    @property
    def rank(self):
        return self.svd.rank


def merge_pair_horizontal(left, right, tol):
    """Merge two side-by-side blocks sharing a row node into their column
    parent: truncated SVD of [U1 S1, U2 S2], then V picks up the block
    diagonal of the old row bases."""
    if left.row_node != right.row_node:
        raise ValueError("horizontal merge requires a shared row node")
    lvl, li = left.col_node
    rvl, ri = right.col_node
    if rvl != lvl or ri != li + 1 or li % 2 != 0:
        raise ValueError("horizontal merge requires adjacent sibling column nodes")
    s1, s2 = left.svd, right.svd
    r1 = s1.rank
    ubar = np.hstack([s1.u * s1.sigma, s2.u * s2.sigma])
    merged = truncated_svd(ubar, tol)
    vt = np.hstack([merged.vt[:, :r1] @ s1.vt, merged.vt[:, r1:] @ s2.vt])
    out = TruncatedSVD(u=merged.u, sigma=merged.sigma, vt=vt)
    return BlockSVD(row_node=left.row_node, col_node=(lvl + 1, li // 2), svd=out)


def merge_pair_vertical(top, bottom, tol):
    """Merge two stacked blocks sharing a column node into their row parent:
    truncated SVD of [S1 V1; S2 V2], then U picks up the block diagonal of
    the old column bases."""
    if top.col_node != bottom.col_node:
        raise ValueError("vertical merge requires a shared column node")
    lvl, ti = top.row_node
    bvl, bi = bottom.row_node
    if bvl != lvl or bi != ti + 1 or ti % 2 != 0:
        raise ValueError("vertical merge requires adjacent sibling row nodes")
    s1, s2 = top.svd, bottom.svd
    r1 = s1.rank
    vbar = np.vstack([s1.sigma[:, None] * s1.vt, s2.sigma[:, None] * s2.vt])
    merged = truncated_svd(vbar, tol)
    u = np.vstack([s1.u @ merged.u[:r1, :], s2.u @ merged.u[r1:, :]])
    out = TruncatedSVD(u=u, sigma=merged.sigma, vt=merged.vt)
    return BlockSVD(row_node=(lvl + 1, ti // 2), col_node=top.col_node, svd=out)


@dataclass
class HBacaDiagnostics:
    """Per-level maximum block ranks s_l (index 0 = leaves), per-block ranks
    keyed by (level, row index, col index), leaf blocks that terminated
    degenerate, and the wall-clock split between the two phases."""

    level_max_rank: list = field(default_factory=list)
    block_ranks: dict = field(default_factory=dict)
    degenerate_blocks: list = field(default_factory=list)
    leaf_seconds: float = 0.0
    merge_seconds: float = 0.0


def _leaf_task(oracle, row_range, col_range, cfg):
    sub = oracle.subblock(row_range[0], row_range[1], col_range[0], col_range[1])
    svd, history = baca_compress(sub, cfg)
    return svd, history.termination


# Oracle shared with pool workers through the initializer: shipped once per
# worker instead of once per leaf task.
_worker_oracle = None


def _init_worker(oracle):
    global _worker_oracle
    _worker_oracle = oracle
    # workers already oversubscribe the cores; stop BLAS from multiplying that
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=1)
    except ImportError:
        pass


def _leaf_task_shared(row_range, col_range, cfg):
    return _leaf_task(_worker_oracle, row_range, col_range, cfg)


def _noop():
    return None


class _Pool:
    # workers == 1 runs inline (bitwise deterministic); otherwise tasks go to
    # a process pool and results return in submit order. Workers are spawned
    # eagerly so pool startup does not pollute the leaf-phase timing.

    def __init__(self, workers, oracle):
        self.oracle = oracle
        if workers > 1:
            self.pool = ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker, initargs=(oracle,)
            )
            for f in [self.pool.submit(_noop) for _ in range(workers)]:
                f.result()
        else:
            self.pool = None

    def map_leaves(self, jobs):
        # jobs: (row_range, col_range, cfg)
        if self.pool is None:
            return [_leaf_task(self.oracle, *args) for args in jobs]
        futures = [self.pool.submit(_leaf_task_shared, *args) for args in jobs]
        return [f.result() for f in futures]

    def map(self, fn, jobs):
        if self.pool is None:
            return [fn(*args) for args in jobs]
        futures = [self.pool.submit(fn, *args) for args in jobs]
        return [f.result() for f in futures]

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def _levels_for(n_blocks):
    levels = 0
    while 4**levels < n_blocks:
        levels += 1
    if 4**levels != n_blocks:
        raise ValueError(f"n_blocks must be a power of 4, got {n_blocks}")
    return levels


def hbaca_compress(oracle, n_blocks, config, workers=1):
    """Hierarchical blocked compression of an entry oracle.

    Parameters
    ----------
    oracle : EntryOracle
    n_blocks : int
        Number of leaf blocks; must be a power of 4 with
        sqrt(n_blocks) <= min(m, n). 1 is a literal passthrough to
        baca_compress with the caller's seed.
    config : BacaConfig
        Leaf compressor settings; block size 1 gives hierarchical plain
        cross approximation. Leaf seeds derive from (config.seed, block id).
    workers : int
        Process pool size for leaf and merge tasks.

    Returns
    -------
    (TruncatedSVD, HBacaDiagnostics)
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    levels = _levels_for(n_blocks)
    m, n = oracle.rows, oracle.cols
    if m == 0 or n == 0:
        raise ValueError("oracle must be nonempty")

    if n_blocks == 1:
        t0 = time.perf_counter()
        svd, history = baca_compress(oracle, config)
        diag = HBacaDiagnostics(
            level_max_rank=[svd.rank],
            block_ranks={(0, 0, 0): svd.rank},
            degenerate_blocks=[(0, 0)] if history.termination == DEGENERATE else [],
            leaf_seconds=time.perf_counter() - t0,
            merge_seconds=0.0,
        )
        return svd, diag

    side = 2**levels
    if side > min(m, n):
        raise ValueError(f"cannot split a {m}x{n} matrix into {side}x{side} blocks")
    row_tree = build_index_tree(m, levels)
    col_tree = build_index_tree(n, levels)

    pool = _Pool(workers, oracle)
    diag = HBacaDiagnostics()
    blocks = {}
    try:
        t0 = time.perf_counter()
        jobs = []
        for i in range(side):
            for j in range(side):
                cfg = replace(config, seed=block_seed(config.seed, i * side + j))
                jobs.append((row_tree.leaves()[i], col_tree.leaves()[j], cfg))
        results = pool.map_leaves(jobs)
        for (i, j), (svd, termination) in zip(
            ((i, j) for i in range(side) for j in range(side)), results
        ):
            blocks[(0, i), (0, j)] = BlockSVD((0, i), (0, j), svd)
            diag.block_ranks[(0, i, j)] = svd.rank
            if termination == DEGENERATE:
                diag.degenerate_blocks.append((i, j))
        diag.leaf_seconds = time.perf_counter() - t0
        diag.level_max_rank.append(
            max(blocks[key].rank for key in blocks) if blocks else 0
        )

        t1 = time.perf_counter()
        for level in range(1, levels + 1):
            rows_below = 2 ** (levels - level + 1)
            nodes = 2 ** (levels - level)
            # horizontal half-step: all column-pair merges first
            jobs = [
                (blocks[(level - 1, ti), (level - 1, 2 * tj)],
                 blocks[(level - 1, ti), (level - 1, 2 * tj + 1)],
                 config.tol)
                for ti in range(rows_below)
                for tj in range(nodes)
            ]
            for merged in pool.map(merge_pair_horizontal, jobs):
                blocks[merged.row_node, merged.col_node] = merged
            # vertical step: row-pair merges on the half-step results
            jobs = [
                (blocks[(level - 1, 2 * ti), (level, tj)],
                 blocks[(level - 1, 2 * ti + 1), (level, tj)],
                 config.tol)
                for ti in range(nodes)
                for tj in range(nodes)
            ]
            for merged in pool.map(merge_pair_vertical, jobs):
                blocks[merged.row_node, merged.col_node] = merged
                lvl, i = merged.row_node
                diag.block_ranks[(lvl, i, merged.col_node[1])] = merged.rank
            diag.level_max_rank.append(
                max(blocks[(level, i), (level, j)].rank
                    for i in range(nodes) for j in range(nodes))
            )
        diag.merge_seconds = time.perf_counter() - t1
    finally:
        pool.close()

    return blocks[(levels, 0), (levels, 0)].svd, diag


@dataclass(frozen=True)
class CostModelParams:
    """Inputs of the asymptotic cost model: matrix size, target rank, leaf
    block count, process count and the per-level rank law ('constant' keeps
    s_l = r; 'doubling' grows s_l = r 2^(l-L) from leaf to root)."""

    n: int
    rank: int
    n_blocks: int
    processes: int = 1
    rank_model: str = "constant"

    def __post_init__(self):
        if self.rank_model not in ("constant", "doubling"):
            raise ValueError(f"unknown rank model {self.rank_model!r}")
        if self.processes < 1:
            raise ValueError("processes must be >= 1")


def cost_model(params):
    """Asymptotic-unit flop and communication counts for one hierarchical
    compression (no machine constants).

    Leaf work is n_b blocks of size n/sqrt(n_b) at leaf rank s_0; merge work
    sums 4^(L-l) * n_l * s_l^2 over levels with n_l = 2^l n / sqrt(n_b);
    message/volume counts follow the grid-merge estimate with p_l = min(4^l,
    p) processes active at level l.

    Returns
    -------
    dict with keys leaf_flops, merge_flops, messages, volume.
    """
    levels = _levels_for(params.n_blocks)
    sqrt_nb = 2**levels

    def s(l):
        if params.rank_model == "constant":
            return float(params.rank)
        return params.rank * 2.0 ** (l - levels)

    leaf_flops = params.n_blocks * (params.n / sqrt_nb) * s(0) ** 2
    merge_flops = 0.0
    messages = 0.0
    volume = 0.0
    for l in range(1, levels + 1):
        n_l = 2**l * params.n / sqrt_nb
        merge_flops += 4.0 ** (levels - l) * n_l * s(l) ** 2
        p_l = min(4**l, params.processes)
        log_p = np.log2(p_l) if p_l > 1 else 0.0
        messages += s(l) * log_p
        volume += n_l * s(l) * log_p / np.sqrt(p_l)
    return {
        "leaf_flops": float(leaf_flops),
        "merge_flops": float(merge_flops),
        "messages": float(messages),
        "volume": float(volume),
    }
