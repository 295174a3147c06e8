"""Local score tables: construction, pruning, and a Dirichlet scorer.

A local score is the log evidence of one child/parent-set model plus the log
multiplicity correction; tables hold one finite score per (unit, child,
parent set) and omitted entries mean the model is infeasible (-inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from math import lgamma
from typing import Iterable, Iterator, Mapping

import numpy as np

from .graphs import log_multiplicity

__all__ = [
    "LocalScoreTable",
    "DiscreteDataset",
    "PrunePolicy",
    "make_local_score",
    "dirichlet_score",
    "table_from_datasets",
    "prune",
]


class LocalScoreTable:
    """Per-(unit, child) maps from parent set to a finite log score.

    Tables are immutable after construction and safe to share across
    concurrent readers.  Every (unit, child) must carry the empty parent set,
    otherwise no feasible graph exists and the table is rejected.  Entry
    iteration order is preserved from construction, which pins the variable
    order of programs built from the table.
    """

    def __init__(
        self,
        k: int,
        p: int,
        d_max: int,
        entries: Mapping[tuple[int, int], Mapping[frozenset[int], float]],
    ) -> None:
        if k < 1 or p < 1 or d_max < 0:
            raise ValueError("k and p must be positive and d_max non-negative")
        self.k = k
        self.p = p
        self.d_max = d_max
        self._entries: dict[tuple[int, int], dict[frozenset[int], float]] = {}
        for unit in range(1, k + 1):
            for child in range(1, p + 1):
                try:
                    per_child = entries[(unit, child)]
                except KeyError:
                    raise ValueError(f"no entries for unit {unit}, child {child}") from None
                store: dict[frozenset[int], float] = {}
                for pi, score in per_child.items():
                    pi = frozenset(pi)
                    if child in pi:
                        raise ValueError(f"parent set of child {child} contains itself")
                    if any(not 1 <= j <= p for j in pi):
                        raise ValueError(f"parent set {sorted(pi)} outside 1..{p}")
                    if len(pi) > d_max:
                        raise ValueError(f"parent set of size {len(pi)} exceeds d_max={d_max}")
                    score = float(score)
                    if not math.isfinite(score):
                        raise ValueError("stored scores must be finite; omit infeasible entries")
                    store[pi] = score
                if frozenset() not in store:
                    raise ValueError(
                        f"unit {unit}, child {child} lacks the empty parent set; instance infeasible"
                    )
                self._entries[(unit, child)] = store

    def score_of(self, unit: int, child: int, pi: Iterable[int]) -> float | None:
        """Score of an entry, or None if the entry is absent (infeasible)."""
        return self._entries[(unit, child)].get(frozenset(pi))

    def parent_sets(self, unit: int, child: int) -> Mapping[frozenset[int], float]:
        return self._entries[(unit, child)]

    def items(self) -> Iterator[tuple[int, int, frozenset[int], float]]:
        for (unit, child), per_child in self._entries.items():
            for pi, score in per_child.items():
                yield unit, child, pi, score

    @property
    def n_entries(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LocalScoreTable):
            return NotImplemented
        return (
            (self.k, self.p, self.d_max) == (other.k, other.p, other.d_max)
            and self._entries == other._entries
        )

    def __repr__(self) -> str:
        return f"LocalScoreTable(k={self.k}, p={self.p}, d_max={self.d_max}, entries={self.n_entries})"


def make_local_score(log_evidence: float, pi: Iterable[int], p: int, d_max: int) -> float:
    """Combine log evidence with the multiplicity correction."""
    return log_evidence + log_multiplicity(frozenset(pi), p, d_max)


@dataclass(frozen=True)
class DiscreteDataset:
    """Fully-observed categorical data: ``values[n, i]`` in ``0..arity[i]-1``."""

    arity: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        if len(self.arity) == 0:
            raise ValueError("dataset must have at least one variable")
        if any(r < 1 for r in self.arity):
            raise ValueError("arities must be positive")
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[1] != len(self.arity):
            raise ValueError(f"values must be (n, {len(self.arity)})")
        if v.size and (v.min() < 0 or np.any(v.max(axis=0) >= np.array(self.arity))):
            raise ValueError("values must lie within the declared arities")
        object.__setattr__(self, "values", v.astype(np.int64, copy=False))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return len(self.arity)


def dirichlet_score(data: DiscreteDataset, i: int, pi: Iterable[int], ess: float = 1.0) -> float:
    """Exact log marginal likelihood of child ``i`` given parents ``pi``.

    Dirichlet prior with equivalent sample size ``ess`` spread uniformly over
    parent-configuration/child cells (BDeu convention).  An empty dataset
    scores 0; arity-1 variables contribute 0.
    """
    if ess <= 0:
        raise ValueError("ess must be positive")
    pi = sorted(set(pi))
    if i in pi:
        raise ValueError(f"child {i} cannot be its own parent")
    if data.n == 0:
        return 0.0
    r_i = data.arity[i - 1]
    child = data.values[:, i - 1]
    if pi:
        dims = [data.arity[j - 1] for j in pi]
        cols = [data.values[:, j - 1] for j in pi]
        config = np.ravel_multi_index(cols, dims)
        n_config = int(np.prod(dims))
    else:
        config = np.zeros(data.n, dtype=np.int64)
        n_config = 1
    alpha_c = ess / n_config
    alpha_cv = alpha_c / r_i
    counts = np.bincount(config * r_i + child, minlength=n_config * r_i).reshape(n_config, r_i)
    n_c = counts.sum(axis=1)
    total = 0.0
    for c in range(n_config):
        if n_c[c] == 0:
            continue
        total += lgamma(alpha_c) - lgamma(alpha_c + n_c[c])
        for v in range(r_i):
            if counts[c, v]:
                total += lgamma(alpha_cv + counts[c, v]) - lgamma(alpha_cv)
    return total


def table_from_datasets(
    datasets: list[DiscreteDataset], d_max: int, ess: float = 1.0
) -> LocalScoreTable:
    """Score every parent set up to ``d_max`` for each unit's dataset."""
    if not datasets:
        raise ValueError("need at least one dataset")
    p = datasets[0].p
    if any(d.p != p for d in datasets):
        raise ValueError("all datasets must share the variable count")
    entries: dict[tuple[int, int], dict[frozenset[int], float]] = {}
    for unit, data in enumerate(datasets, start=1):
        for child in range(1, p + 1):
            others = [j for j in range(1, p + 1) if j != child]
            per_child: dict[frozenset[int], float] = {}
            for size in range(0, min(d_max, len(others)) + 1):
                for combo in combinations(others, size):
                    pi = frozenset(combo)
                    per_child[pi] = make_local_score(
                        dirichlet_score(data, child, pi, ess), pi, p, d_max
                    )
            entries[(unit, child)] = per_child
    return LocalScoreTable(len(datasets), p, d_max, entries)


@dataclass(frozen=True)
class PrunePolicy:
    """Which score entries to keep per (unit, child).

    ``dominance_strict`` drops entries with a strict subset scoring at least as
    well.  That is only sound when no coupling penalty is in play (a locally
    dominated parent set can be globally optimal once similarity terms enter),
    so the caller must declare the decoupled regime explicitly.
    """

    kind: str
    top: int | None = None
    assume_decoupled: bool = False

    @classmethod
    def keep_all(cls) -> "PrunePolicy":
        return cls(kind="keep-all")

    @classmethod
    def keep_top(cls, q: int) -> "PrunePolicy":
        if q < 1:
            raise ValueError("top-q requires q >= 1")
        return cls(kind="top", top=q)

    @classmethod
    def dominance_strict(cls, assume_decoupled: bool = False) -> "PrunePolicy":
        return cls(kind="dominance", assume_decoupled=assume_decoupled)


def prune(table: LocalScoreTable, policy: PrunePolicy) -> LocalScoreTable:
    """Drop entries per policy; the empty parent set always survives."""
    if policy.kind == "keep-all":
        keep = {key: dict(table.parent_sets(*key)) for key in _keys(table)}
    elif policy.kind == "top":
        keep = {}
        for key in _keys(table):
            per_child = table.parent_sets(*key)
            ranked = sorted(
                per_child.items(), key=lambda kv: (-kv[1], len(kv[0]), sorted(kv[0]))
            )
            chosen = [pi for pi, _ in ranked[: policy.top]]
            if frozenset() not in chosen:
                chosen[-1] = frozenset()
            keep[key] = {pi: per_child[pi] for pi in per_child if pi in set(chosen)}
    elif policy.kind == "dominance":
        if not policy.assume_decoupled:
            raise ValueError(
                "dominance pruning is unsafe under coupling penalties; "
                "pass assume_decoupled=True to confirm the decoupled regime"
            )
        keep = {}
        for key in _keys(table):
            per_child = table.parent_sets(*key)
            kept: dict[frozenset[int], float] = {}
            for pi, score in per_child.items():
                dominated = any(
                    other < pi and s2 >= score for other, s2 in per_child.items()
                )
                if not dominated or pi == frozenset():
                    kept[pi] = score
            keep[key] = kept
    else:
        raise ValueError(f"unknown prune policy {policy.kind!r}")
    return LocalScoreTable(table.k, table.p, table.d_max, keep)


def _keys(table: LocalScoreTable) -> Iterator[tuple[int, int]]:
    for unit in range(1, table.k + 1):
        for child in range(1, table.p + 1):
            yield (unit, child)
