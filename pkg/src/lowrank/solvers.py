"""Outer solvers: greedy rank-1 pursuit, local search, and their fast variants.

Each outer iteration extracts the dominant singular pair of the gradient,
appends it as a new factor column pair, and re-optimizes coefficients. Local
search additionally drops one rank-1 component per iteration, so it can make
progress without growing the rank.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .inner import InnerConfig, optimize_fast, optimize_full
from .linalg import FactorPair, SingularTriplet, svd_threshold, top_singular_triplet

__all__ = [
    "SolverConfig",
    "IterationTrace",
    "greedy",
    "local_search",
    "fast_greedy",
    "fast_local_search",
    "truncate_svd",
    "truncate_fast",
]

# relative threshold under which the gradient's top singular value counts as zero
_SIGMA_FLOOR = 1e-12


@dataclass
class SolverConfig:
    """Shared configuration for the four outer solvers.

    target_rank is the rank budget r; max_outer_iters is the iteration
    count L of local search (and a safety cap on fast local search passes).
    eps is the objective-improvement stopping slack; None picks the
    per-algorithm default (1e-10 for local_search, 0 i.e. strict decrease
    for fast_local_search). clipped_insertion_gradient makes the fast
    solvers take the rank-1 insertion direction from the objective's
    clipped gradient.
    """

    target_rank: int
    max_outer_iters: int = 100
    eps: float | None = None
    inner: InnerConfig = field(default_factory=InnerConfig)
    seed: int = 0
    clipped_insertion_gradient: bool = False
    power_iters: int = 200
    power_tol: float = 1e-9

    def __post_init__(self):
        if self.target_rank < 1:
            raise ValueError("target_rank must be >= 1")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.eps is not None and self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


@dataclass
class IterationTrace:
    """One outer iteration: rank, objective, insertion sigma, timing."""

    iter: int
    rank: int
    objective: float
    top_sigma: float
    truncated_column: int | None
    wall_nanos: int
    flags: str = ""


def _step_seed(seed: int, t: int) -> int:
    return (int(seed) * 1_000_003 + int(t)) % (2 ** 63)


def _insertion_triplet(objective, pair: FactorPair, config: SolverConfig,
                       t: int, use_clip: bool) -> SingularTriplet:
    if use_clip and config.clipped_insertion_gradient:
        handle = objective.insertion_gradient(pair)
    else:
        handle = objective.gradient(pair)
    return top_singular_triplet(handle.operator(), seed=_step_seed(config.seed, t),
                                max_iters=config.power_iters, tol=config.power_tol)


def truncate_svd(pair: FactorPair) -> FactorPair:
    """Drop the minimum singular value of U V^T; factors keep one fewer column.

    Retained singular values are folded into the left factor. When the
    represented matrix has rank below the column count, the dropped
    component is a zero singular value and the matrix is unchanged.
    """
    if pair.rank < 1:
        raise ValueError("cannot truncate a rank-0 pair")
    out, _ = svd_threshold(pair.matrix(), pair.rank - 1)
    return out


def truncate_fast(pair: FactorPair) -> tuple[FactorPair, int]:
    """Remove the column i minimizing ||U e_i|| * ||V e_i||; ties -> lowest i."""
    if pair.rank < 1:
        raise ValueError("cannot truncate a rank-0 pair")
    products = np.linalg.norm(pair.U, axis=0) * np.linalg.norm(pair.V, axis=0)
    i = int(np.argmin(products))
    keep = np.arange(pair.rank) != i
    return FactorPair(pair.U[:, keep], pair.V[:, keep]), i


def greedy(objective, config: SolverConfig, callback=None
           ) -> tuple[FactorPair, list[IterationTrace]]:
    """Rank-1 pursuit with the full joint coefficient refit (reference path)."""
    m, n = objective.shape
    pair = FactorPair.empty(m, n)
    traces: list[IterationTrace] = []
    sigma0 = None
    for t in range(config.target_rank):
        t0 = time.perf_counter_ns()
        trip = _insertion_triplet(objective, pair, config, t, use_clip=False)
        if sigma0 is None:
            sigma0 = trip.sigma
        if trip.sigma <= _SIGMA_FLOOR * (1.0 + sigma0):
            traces.append(IterationTrace(t, pair.rank, objective.value(pair),
                                         trip.sigma, None,
                                         time.perf_counter_ns() - t0,
                                         "gradient_zero"))
            break
        pair = pair.append(trip.u, trip.v)
        pair, info = optimize_full(pair.U, pair.V, objective,
                                   tol=config.inner.full_solve_tol)
        traces.append(IterationTrace(t, pair.rank, objective.value(pair),
                                     trip.sigma, None,
                                     time.perf_counter_ns() - t0, info.flag))
        if callback is not None:
            callback(t, pair)
    return pair, traces


def local_search(objective, config: SolverConfig, callback=None
                 ) -> tuple[FactorPair, list[IterationTrace]]:
    """Rank-constrained local search: truncate, insert, refit for L iterations.

    Starts from all-zero factors of width target_rank; while the represented
    rank is below the width, truncation removes a zero singular value and
    the iteration behaves like a greedy step.
    """
    m, n = objective.shape
    eps = 1e-10 if config.eps is None else config.eps
    pair = FactorPair.zeros(m, n, config.target_rank)
    prev_obj = objective.value(pair)
    traces: list[IterationTrace] = []
    sigma0 = None
    for t in range(config.max_outer_iters):
        t0 = time.perf_counter_ns()
        trip = _insertion_triplet(objective, pair, config, t, use_clip=False)
        if sigma0 is None:
            sigma0 = trip.sigma
        if trip.sigma <= _SIGMA_FLOOR * (1.0 + sigma0):
            traces.append(IterationTrace(t, pair.rank, prev_obj, trip.sigma, None,
                                         time.perf_counter_ns() - t0,
                                         "gradient_zero"))
            break
        cand = truncate_svd(pair)
        cand = cand.append(trip.u, trip.v)
        cand, info = optimize_full(cand.U, cand.V, objective,
                                   tol=config.inner.full_solve_tol)
        obj = objective.value(cand)
        traces.append(IterationTrace(t, cand.rank, obj, trip.sigma, None,
                                     time.perf_counter_ns() - t0, info.flag))
        if callback is not None:
            callback(t, cand)
        if prev_obj - obj <= eps:
            # stalled (or degraded, e.g. the r=1 direction oscillation):
            # keep the previous, no-worse iterate
            break
        pair = cand
        prev_obj = obj
    return pair, traces


def fast_greedy(objective, config: SolverConfig, callback=None
                ) -> tuple[FactorPair, list[IterationTrace]]:
    """Greedy with the one-sided alternating inner solve (the practical path)."""
    m, n = objective.shape
    pair = FactorPair.empty(m, n)
    traces: list[IterationTrace] = []
    sigma0 = None
    for t in range(config.target_rank):
        t0 = time.perf_counter_ns()
        trip = _insertion_triplet(objective, pair, config, t, use_clip=True)
        if sigma0 is None:
            sigma0 = trip.sigma
        if trip.sigma <= _SIGMA_FLOOR * (1.0 + sigma0):
            traces.append(IterationTrace(t, pair.rank, objective.value(pair),
                                         trip.sigma, None,
                                         time.perf_counter_ns() - t0,
                                         "gradient_zero"))
            break
        pair = pair.append(trip.u, trip.v)
        pair = optimize_fast(pair.U, pair.V, t, objective, config.inner)
        traces.append(IterationTrace(t, pair.rank, objective.value(pair),
                                     trip.sigma, None,
                                     time.perf_counter_ns() - t0))
        if callback is not None:
            callback(t, pair)
    return pair, traces


def fast_local_search(objective, config: SolverConfig, callback=None
                      ) -> tuple[FactorPair, list[IterationTrace]]:
    """Fast greedy init, then swap passes: drop the cheapest column, insert
    the gradient's top singular pair, run one alternating half-refit.

    The truncated half-refits rebuild one factor per pass, so the raw
    objective oscillates by refit side while both sides keep improving; the
    pass chain therefore runs until the best value stops decreasing, i.e.
    until two consecutive passes (one per side) fail to improve it by more
    than eps. Returns the best (last improving) pair. The trace records the
    improving passes plus the final stalled one, so its objectives are
    strictly decreasing except the final entry.
    """
    eps = 0.0 if config.eps is None else config.eps
    pair, _ = fast_greedy(objective, config, callback=None)
    best, best_obj = pair, objective.value(pair)
    chain = pair
    traces: list[IterationTrace] = []
    stall = 0
    for t in range(config.max_outer_iters):
        t0 = time.perf_counter_ns()
        trip = _insertion_triplet(objective, chain, config,
                                  config.target_rank + t, use_clip=True)
        if trip.sigma <= _SIGMA_FLOOR:
            break
        cand, removed = truncate_fast(chain)
        cand = cand.append(trip.u, trip.v)
        cand = optimize_fast(cand.U, cand.V, t, objective, config.inner)
        obj = objective.value(cand)
        chain = cand
        if obj < best_obj - eps:
            best, best_obj = cand, obj
            stall = 0
            traces.append(IterationTrace(t, cand.rank, obj, trip.sigma, removed,
                                         time.perf_counter_ns() - t0))
            if callback is not None:
                callback(t, cand)
        else:
            stall += 1
            if stall >= 2:
                traces.append(IterationTrace(t, cand.rank, obj, trip.sigma,
                                             removed,
                                             time.perf_counter_ns() - t0,
                                             "stalled"))
                break
    return best, traces
