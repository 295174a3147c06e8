"""Graph types and log-prior arithmetic for collections of related DAGs.

Vertices are numbered ``1..p`` and units ``1..k`` throughout.  Extended-real
quantities (edge penalties, density rewards, log scores) are plain floats in
which ``math.inf`` marks a hard constraint; the arithmetic below never
multiplies an infinite penalty by a zero count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping

import numpy as np

if TYPE_CHECKING:
    from .scores import LocalScoreTable

__all__ = [
    "Dag",
    "DagCollection",
    "UnitNetwork",
    "HyperParams",
    "is_acyclic",
    "shd",
    "total_pairwise_shd",
    "log_regularity",
    "log_multiplicity",
    "log_joint_prior_unnormalized",
    "objective_value",
]


@dataclass(frozen=True)
class Dag:
    """Directed graph on vertices ``1..p``, stored as one parent set per vertex.

    ``parent_sets[i - 1]`` holds the parents of vertex ``i``.  Self-parents are
    rejected at construction.  Acyclicity is intentionally *not* enforced here
    (proposal states in samplers may be cyclic); use :func:`is_acyclic`.
    Instances are immutable and hashable.
    """

    p: int
    parent_sets: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError("vertex count must be positive")
        if len(self.parent_sets) != self.p:
            raise ValueError(f"expected {self.p} parent sets, got {len(self.parent_sets)}")
        for i, pi in enumerate(self.parent_sets, start=1):
            if i in pi:
                raise ValueError(f"vertex {i} lists itself as a parent")
            for j in pi:
                if not 1 <= j <= self.p:
                    raise ValueError(f"parent {j} of vertex {i} outside 1..{self.p}")

    @classmethod
    def from_parents(cls, p: int, parents: Mapping[int, Iterable[int]]) -> "Dag":
        extra = set(parents) - set(range(1, p + 1))
        if extra:
            raise ValueError(f"parent map mentions unknown vertices {sorted(extra)}")
        return cls(p, tuple(frozenset(parents.get(i, ())) for i in range(1, p + 1)))

    @classmethod
    def empty(cls, p: int) -> "Dag":
        return cls(p, (frozenset(),) * p)

    @property
    def parents(self) -> dict[int, frozenset[int]]:
        """Parent map keyed by 1-based vertex."""
        return {i: s for i, s in enumerate(self.parent_sets, start=1)}

    def parents_of(self, i: int) -> frozenset[int]:
        return self.parent_sets[i - 1]

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield directed edges as (parent, child) pairs."""
        for i, pi in enumerate(self.parent_sets, start=1):
            for j in sorted(pi):
                yield (j, i)

    def edge_count(self) -> int:
        return sum(len(s) for s in self.parent_sets)


def is_acyclic(g: Dag) -> bool:
    """True iff a topological order of ``g`` exists (Kahn's algorithm)."""
    unmet = [len(s) for s in g.parent_sets]
    children: list[list[int]] = [[] for _ in range(g.p)]
    for i, pi in enumerate(g.parent_sets, start=1):
        for j in pi:
            children[j - 1].append(i)
    ready = [i for i in range(1, g.p + 1) if unmet[i - 1] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for c in children[v - 1]:
            unmet[c - 1] -= 1
            if unmet[c - 1] == 0:
                ready.append(c)
    return seen == g.p


@dataclass(frozen=True)
class DagCollection:
    """K DAGs over a shared vertex set; every member must be acyclic."""

    dags: tuple[Dag, ...]

    def __post_init__(self) -> None:
        if not self.dags:
            raise ValueError("collection must contain at least one DAG")
        p = self.dags[0].p
        for g in self.dags:
            if g.p != p:
                raise ValueError("all DAGs in a collection must share the vertex count")
            if not is_acyclic(g):
                raise ValueError("collection members must be acyclic")

    @property
    def k(self) -> int:
        return len(self.dags)

    @property
    def p(self) -> int:
        return self.dags[0].p

    def dag(self, unit: int) -> Dag:
        """The DAG of 1-based ``unit``."""
        return self.dags[unit - 1]


@dataclass(frozen=True)
class UnitNetwork:
    """Undirected graph on units ``1..k``; edges stored as sorted pairs."""

    k: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("unit count must be positive")
        for a, b in self.edges:
            if not (1 <= a < b <= self.k):
                raise ValueError(f"bad unit pair ({a},{b}); store pairs as a < b within 1..{self.k}")

    @classmethod
    def from_pairs(cls, k: int, pairs: Iterable[tuple[int, int]]) -> "UnitNetwork":
        norm = frozenset((min(a, b), max(a, b)) for a, b in pairs)
        return cls(k, norm)

    @classmethod
    def complete(cls, k: int) -> "UnitNetwork":
        return cls(k, frozenset((a, b) for a in range(1, k + 1) for b in range(a + 1, k + 1)))

    @classmethod
    def empty(cls, k: int) -> "UnitNetwork":
        return cls(k, frozenset())

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def neighbors(self, unit: int) -> tuple[int, ...]:
        out = [b if a == unit else a for a, b in self.edges if unit in (a, b)]
        return tuple(sorted(out))

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True, eq=False)
class HyperParams:
    """Coupling penalties, density rewards and the in-degree cap.

    ``lam`` and ``eta`` are scalar defaults broadcast to every (j, i, k, l)
    resp. (k, l); per-pair overrides go in ``lam_pairs`` / ``eta_pairs`` keyed
    by a sorted unit pair.  A ``lam_pairs`` value may be a scalar or a (p, p)
    array indexed ``[j - 1, i - 1]`` (parent j, child i).  Values live in
    [0, inf]; infinity means a hard constraint and is handled structurally by
    the program builder, never as a big finite number.
    """

    lam: float = 0.0
    eta: float = 0.0
    d_max: int = 2
    lam_pairs: Mapping[tuple[int, int], float | np.ndarray] | None = None
    eta_pairs: Mapping[tuple[int, int], float] | None = None

    def __post_init__(self) -> None:
        if self.d_max < 1:
            raise ValueError("d_max must be at least 1")
        _check_nonneg(self.lam, "lam")
        _check_nonneg(self.eta, "eta")
        for name, pairs in (("lam_pairs", self.lam_pairs), ("eta_pairs", self.eta_pairs)):
            if pairs is None:
                continue
            for (a, b), v in pairs.items():
                if not a < b:
                    raise ValueError(f"{name} keys must be sorted unit pairs, got ({a},{b})")
                if isinstance(v, np.ndarray):
                    if np.any(v < 0) or np.isnan(v).any():
                        raise ValueError(f"{name}[{a},{b}] entries must be in [0, inf]")
                else:
                    _check_nonneg(v, f"{name}[{a},{b}]")

    def lam_slice(self, k: int, l: int) -> float | np.ndarray:
        """Penalty slice for the sorted pair (k, l): scalar or (p, p) array."""
        key = (min(k, l), max(k, l))
        if self.lam_pairs is not None and key in self.lam_pairs:
            return self.lam_pairs[key]
        return self.lam

    def lam_value(self, j: int, i: int, k: int, l: int) -> float:
        s = self.lam_slice(k, l)
        if isinstance(s, np.ndarray):
            return float(s[j - 1, i - 1])
        return float(s)

    def eta_value(self, k: int, l: int) -> float:
        key = (min(k, l), max(k, l))
        if self.eta_pairs is not None and key in self.eta_pairs:
            return float(self.eta_pairs[key])
        return float(self.eta)


def _check_nonneg(v: float, name: str) -> None:
    if math.isnan(v) or v < 0:
        raise ValueError(f"{name} must be in [0, inf], got {v}")


def shd(g1: Dag, g2: Dag) -> int:
    """Structural Hamming distance: number of directed-edge mismatches."""
    if g1.p != g2.p:
        raise ValueError(f"vertex counts differ: {g1.p} vs {g2.p}")
    return sum(len(a ^ b) for a, b in zip(g1.parent_sets, g2.parent_sets))


def total_pairwise_shd(gs: DagCollection, a: UnitNetwork | None = None) -> int:
    """SHD summed over unit pairs: over the edges of ``a``, or all pairs if None."""
    if a is None:
        pairs = [(k, l) for k in range(1, gs.k + 1) for l in range(k + 1, gs.k + 1)]
    else:
        pairs = a.edge_list()
    return sum(shd(gs.dag(k), gs.dag(l)) for k, l in pairs)


def log_regularity(g1: Dag, g2: Dag, lam: float | np.ndarray) -> float:
    """Log of the similarity factor between two DAGs, up to an additive constant.

    Returns ``-sum`` of the per-edge penalty over mismatched edges, hence 0 for
    identical graphs and ``-inf`` iff a mismatched edge carries an infinite
    penalty.  ``lam`` is a scalar or a (p, p) array indexed [parent-1, child-1].
    """
    if g1.p != g2.p:
        raise ValueError(f"vertex counts differ: {g1.p} vs {g2.p}")
    scalar = not isinstance(lam, np.ndarray)
    if scalar:
        _check_nonneg(float(lam), "lam")
    total = 0.0
    for i in range(1, g1.p + 1):
        for j in g1.parents_of(i) ^ g2.parents_of(i):
            w = float(lam) if scalar else float(lam[j - 1, i - 1])
            if math.isinf(w):
                return -math.inf
            total += w
    return -total


def log_multiplicity(pi: frozenset[int] | Iterable[int], p: int, d_max: int) -> float:
    """Log binomial multiplicity correction: -log C(p, |pi|), -inf above d_max."""
    size = len(set(pi))
    if size > d_max:
        return -math.inf
    return -math.log(math.comb(p, size))


def log_joint_prior_unnormalized(gs: DagCollection, a: UnitNetwork, hp: HyperParams) -> float:
    """Unnormalised log prior of (DAG collection, unit network).

    Sum of pairwise regularity over the network edges, per-vertex multiplicity
    corrections, and the density reward for each present edge.  Additive
    constants (including the network-dependent normaliser) are dropped; an
    infinite density reward contributes 0 for a present edge, by the same
    dropped-constant convention.
    """
    if gs.k != a.k:
        raise ValueError(f"unit counts differ: {gs.k} vs {a.k}")
    total = 0.0
    for k, l in a.edge_list():
        r = log_regularity(gs.dag(k), gs.dag(l), hp.lam_slice(k, l))
        if math.isinf(r):
            return -math.inf
        total += r
    for g in gs.dags:
        for pi in g.parent_sets:
            m = log_multiplicity(pi, gs.p, hp.d_max)
            if math.isinf(m):
                return -math.inf
            total += m
    for k, l in a.edge_list():
        e = hp.eta_value(k, l)
        if not math.isinf(e):
            total += e
    return total


def objective_value(
    gs: DagCollection,
    a: UnitNetwork,
    scores: "LocalScoreTable",
    hp: HyperParams,
    mode: str = "known",
) -> float:
    """Objective of a candidate solution, matching the binary program exactly.

    Sum of local scores for the chosen parent sets, minus the coupling penalty
    over network edges; in ``unknown`` mode the density reward for each present
    network edge is added as well (infinite rewards contribute 0 for present
    edges and -inf for absent ones).  A missing score entry makes the
    configuration infeasible (-inf).
    """
    if mode not in ("known", "unknown"):
        raise ValueError(f"mode must be 'known' or 'unknown', got {mode!r}")
    if gs.k != a.k:
        raise ValueError(f"unit counts differ: {gs.k} vs {a.k}")
    if gs.p != scores.p or gs.k != scores.k:
        raise ValueError("score table dimensions do not match the collection")
    parts: list[float] = []
    for k in range(1, gs.k + 1):
        g = gs.dag(k)
        for i in range(1, gs.p + 1):
            s = scores.score_of(k, i, g.parents_of(i))
            if s is None:
                return -math.inf
            parts.append(s)
    penalty = 0.0
    for k, l in a.edge_list():
        r = log_regularity(gs.dag(k), gs.dag(l), hp.lam_slice(k, l))
        if math.isinf(r):
            return -math.inf
        penalty += r
    reward = 0.0
    if mode == "unknown":
        present = set(a.edges)
        for k in range(1, gs.k + 1):
            for l in range(k + 1, gs.k + 1):
                e = hp.eta_value(k, l)
                if (k, l) in present:
                    if not math.isinf(e):
                        reward += e
                elif math.isinf(e):
                    return -math.inf
    return math.fsum(parts) + penalty + reward
