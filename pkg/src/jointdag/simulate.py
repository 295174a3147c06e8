"""Synthetic-data generation: networks and DAG collections from the joint
prior, spike-and-normal score tables, and chain diagnostics.

The DAG sampler is a Metropolis-Hastings chain whose proposal flips one
uniformly chosen ordered vertex pair (self-pairs included; the acyclicity
indicator rejects them) in one uniformly chosen unit.  The acceptance ratio is
the full prior ratio: the regularity factor over the unit's network
neighbours times the binomial multiplicity ratio of the flipped vertex,
gated by the DAG and in-degree indicators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .graphs import Dag, DagCollection, UnitNetwork
from .scores import LocalScoreTable

__all__ = [
    "SimConfig",
    "ChainTrace",
    "Diagnostics",
    "sample_network",
    "sample_dags_mcmc",
    "synth_scores",
    "worst_case_scores",
    "diagnostics",
]


@dataclass(frozen=True)
class SimConfig:
    """Ground-truth generation settings; iterations default to 20 * p^2 * k^2."""

    p: int
    k: int
    d_max: int = 2
    lambda_true: float = 0.0
    eta_true: float = 0.0
    alpha: float = 15.0
    iterations: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.p < 1 or self.k < 1:
            raise ValueError("p and k must be positive")
        if self.d_max < 1:
            raise ValueError("d_max must be at least 1")
        if not 0 < self.alpha <= 100:
            raise ValueError("alpha must lie in (0, 100]")
        if self.lambda_true < 0 or self.eta_true < 0:
            raise ValueError("lambda_true and eta_true must be non-negative")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be at least 1")

    @property
    def resolved_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return 20 * self.p**2 * self.k**2


@dataclass
class ChainTrace:
    """Per-step total pairwise SHD plus the overall acceptance count."""

    shd: np.ndarray
    accepted: int
    steps: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.steps if self.steps else 0.0


@dataclass
class Diagnostics:
    shd_trace: np.ndarray
    acf: np.ndarray
    acceptance_rate: float


def sample_network(k: int, eta: float, rng: np.random.Generator) -> UnitNetwork:
    """Independent-edge draw from the log-linear network prior.

    Each pair enters with probability exp(eta) / (1 + exp(eta)); an infinite
    density reward yields the complete network.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    prob = 1.0 if math.isinf(eta) else 1.0 / (1.0 + math.exp(-eta))
    edges = []
    for a in range(1, k + 1):
        for b in range(a + 1, k + 1):
            if rng.random() < prob:
                edges.append((a, b))
    return UnitNetwork.from_pairs(k, edges)


def _mask_reachable(masks: Sequence[int], p: int, src: int) -> int:
    """Vertices reachable from ``src`` (1-based) along parent->child edges."""
    children: list[list[int]] = [[] for _ in range(p + 1)]
    for child in range(1, p + 1):
        m = masks[child - 1]
        parent = 1
        while m:
            if m & 1:
                children[parent].append(child)
            m >>= 1
            parent += 1
    seen = 0
    stack = [src]
    while stack:
        v = stack.pop()
        for c in children[v]:
            bit = 1 << (c - 1)
            if not seen & bit:
                seen |= bit
                stack.append(c)
    return seen


def sample_dags_mcmc(
    cfg: SimConfig,
    a: UnitNetwork,
    rng: np.random.Generator,
    on_state: Callable[[int, tuple[tuple[int, ...], ...]], None] | None = None,
) -> tuple[DagCollection, ChainTrace]:
    """Run the prior chain from empty graphs and return its final state.

    ``on_state`` (when given) receives the step index and the current parent
    bitmasks of every unit after each accept/reject decision.
    """
    if a.k != cfg.k:
        raise ValueError(f"network has {a.k} units, config says {cfg.k}")
    p, k = cfg.p, cfg.k
    lam = cfg.lambda_true
    steps = cfg.resolved_iterations
    logcomb = [math.log(math.comb(p, d)) for d in range(p + 1)]
    neighbors = {u: a.neighbors(u) for u in range(1, k + 1)}
    others = {u: tuple(v for v in range(1, k + 1) if v != u) for u in range(1, k + 1)}

    masks = [[0] * p for _ in range(k)]
    total_shd = 0
    trace = np.empty(steps, dtype=np.int64)
    accepted = 0

    for t in range(steps):
        unit = int(rng.integers(1, k + 1))
        j = int(rng.integers(1, p + 1))
        i = int(rng.integers(1, p + 1))
        u = rng.random()

        row = masks[unit - 1]
        bit = 1 << (j - 1)
        old = 1 if row[i - 1] & bit else 0
        new = 1 - old
        old_size = bin(row[i - 1]).count("1")
        new_size = old_size + (1 if new else -1)

        ok = new_size <= cfg.d_max
        if ok and new:
            # adding j -> i closes a cycle iff j is already reachable from i
            if j == i or _mask_reachable(row, p, i) & bit:
                ok = False
        if ok:
            dshd_prior = 0
            dshd_all = 0
            for l in others[unit]:
                l_bit = 1 if masks[l - 1][i - 1] & bit else 0
                delta = (new ^ l_bit) - (old ^ l_bit)
                dshd_all += delta
            for l in neighbors[unit]:
                l_bit = 1 if masks[l - 1][i - 1] & bit else 0
                dshd_prior += (new ^ l_bit) - (old ^ l_bit)
            if math.isinf(lam):
                if dshd_prior > 0:
                    log_r = -math.inf
                elif dshd_prior < 0:
                    log_r = math.inf
                else:
                    log_r = logcomb[old_size] - logcomb[new_size]
            else:
                log_r = -lam * dshd_prior + logcomb[old_size] - logcomb[new_size]
            if log_r >= 0 or u < math.exp(log_r):
                row[i - 1] ^= bit
                total_shd += dshd_all
                accepted += 1
        trace[t] = total_shd
        if on_state is not None:
            on_state(t, tuple(tuple(m) for m in masks))

    dags = []
    for u in range(k):
        sets = tuple(
            frozenset(j + 1 for j in range(p) if masks[u][child] & (1 << j))
            for child in range(p)
        )
        dags.append(Dag(p, sets))
    return DagCollection(tuple(dags)), ChainTrace(trace, accepted, steps)


def _candidate_sets(p: int, child: int, d_max: int):
    others = [j for j in range(1, p + 1) if j != child]
    for size in range(0, min(d_max, p - 1) + 1):
        for combo in combinations(others, size):
            yield frozenset(combo)


def synth_scores(gs: DagCollection, cfg: SimConfig, rng: np.random.Generator) -> LocalScoreTable:
    """Spike-and-normal local scores around the data-generating graphs.

    The true parent set always receives a score; any other set survives with
    probability alpha/100 (the empty set is always retained so every instance
    stays feasible).  Surviving scores are standard normal minus the log
    binomial count, rescaled by 1/(k*p) so one hyper-parameter grid suits all
    problem sizes.
    """
    if gs.p != cfg.p or gs.k != cfg.k:
        raise ValueError("collection dimensions do not match the config")
    p, k = cfg.p, cfg.k
    scale = 1.0 / (k * p)
    keep_prob = cfg.alpha / 100.0
    entries: dict[tuple[int, int], dict[frozenset[int], float]] = {}
    for unit in range(1, k + 1):
        g = gs.dag(unit)
        for child in range(1, p + 1):
            true_set = g.parents_of(child)
            per_child: dict[frozenset[int], float] = {}
            for pi in _candidate_sets(p, child, cfg.d_max):
                if pi == true_set or len(pi) == 0:
                    keep = True
                else:
                    keep = rng.random() < keep_prob
                if keep:
                    z = rng.standard_normal()
                    per_child[pi] = (z - math.log(math.comb(p, len(pi)))) * scale
            entries[(unit, child)] = per_child
    return LocalScoreTable(k, p, cfg.d_max, entries)


def worst_case_scores(p: int, k: int, d_max: int, rng: np.random.Generator) -> LocalScoreTable:
    """Every candidate parent set scored by an independent standard normal.

    No omissions, no multiplicity shift, no rescaling: many near-tied optima,
    which is the hardest regime for the search.
    """
    entries: dict[tuple[int, int], dict[frozenset[int], float]] = {}
    for unit in range(1, k + 1):
        for child in range(1, p + 1):
            entries[(unit, child)] = {
                pi: float(rng.standard_normal()) for pi in _candidate_sets(p, child, d_max)
            }
    return LocalScoreTable(k, p, d_max, entries)


def diagnostics(trace: ChainTrace, max_lag: int = 100) -> Diagnostics:
    """SHD series, its autocorrelation function, and the acceptance rate.

    A constant series has undefined autocorrelation; it is reported as 1 at
    every lag (degenerate-chain convention).
    """
    x = trace.shd.astype(np.float64)
    n = len(x)
    lags = min(max_lag, max(n - 1, 0))
    centered = x - x.mean() if n else x
    denom = float(centered @ centered)
    acf = np.ones(lags + 1)
    if denom > 0:
        for lag in range(1, lags + 1):
            acf[lag] = float(centered[: n - lag] @ centered[lag:]) / denom
    return Diagnostics(trace.shd.copy(), acf, trace.acceptance_rate)
