"""Binary-program assembly for joint DAG estimation.

Variable blocks, in deterministic order: family indicators (one per score
entry, unit-major then child then table order), edge indicators, pairwise
edge-difference indicators, and in unknown-network mode the network-edge
indicators plus the network-gated difference indicators.  Constraint families:

  C1  each (unit, child) selects exactly one parent set
  C2  cluster (acyclicity) constraints, registered lazily, separated on demand
  C3  edge indicator equals the sum of selecting parent sets containing it
  C4  four inequalities tying a difference indicator to the XOR of two edges
  C5  three inequalities tying a gated difference to (network edge AND diff)
  C6  redundant complement form of C3; sharpens propagation and branching

Infinite hyper-parameters never enter coefficients: they become variable
fixings (difference forced 0, network edge forced 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from io import StringIO
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .graphs import Dag, DagCollection, HyperParams, UnitNetwork, is_acyclic
from .scores import LocalScoreTable

__all__ = [
    "FAMILY",
    "EDGE",
    "DIFF",
    "NET",
    "LINKDIFF",
    "VarSpace",
    "LinearConstraint",
    "IlpInstance",
    "MalformedAssignmentError",
    "build_known_network",
    "build_unknown_network",
    "count_variables",
    "decode",
    "encode",
    "write_lp",
]

FAMILY, EDGE, DIFF, NET, LINKDIFF = range(5)


class MalformedAssignmentError(ValueError):
    """Assignment violates the one-parent-set-per-vertex rule or is cyclic."""


def _mask(pi: Iterable[int]) -> int:
    m = 0
    for j in pi:
        m |= 1 << (j - 1)
    return m


class VarSpace:
    """Index space of one program; layout is deterministic given the table."""

    def __init__(self, table: LocalScoreTable, mode: str, pairs: Sequence[tuple[int, int]]):
        if mode not in ("known", "unknown"):
            raise ValueError(f"mode must be 'known' or 'unknown', got {mode!r}")
        self.p = table.p
        self.k = table.k
        self.d_max = table.d_max
        self.mode = mode
        self.pairs = tuple(pairs)
        self.pair_pos = {pair: t for t, pair in enumerate(self.pairs)}

        self.fam_unit: list[int] = []
        self.fam_child: list[int] = []
        self.fam_set: list[frozenset[int]] = []
        self.fam_mask: list[int] = []
        self.fam_range: dict[tuple[int, int], tuple[int, int]] = {}
        self.fam_lookup: dict[tuple[int, int, frozenset[int]], int] = {}
        idx = 0
        for unit in range(1, self.k + 1):
            for child in range(1, self.p + 1):
                start = idx
                for pi in table.parent_sets(unit, child):
                    self.fam_unit.append(unit)
                    self.fam_child.append(child)
                    self.fam_set.append(pi)
                    self.fam_mask.append(_mask(pi))
                    self.fam_lookup[(unit, child, pi)] = idx
                    idx += 1
                self.fam_range[(unit, child)] = (start, idx)
        self.n_fam = idx
        self.edge_off = self.n_fam
        self.n_edge = self.k * self.p * (self.p - 1)
        self.diff_off = self.edge_off + self.n_edge
        self.n_diff = len(self.pairs) * self.p * (self.p - 1)
        if mode == "unknown":
            self.net_off = self.diff_off + self.n_diff
            self.n_net = len(self.pairs)
            self.dd_off = self.net_off + self.n_net
            self.n_dd = self.n_diff
        else:
            self.net_off = self.dd_off = -1
            self.n_net = self.n_dd = 0
        self.q = self.n_fam + self.n_edge + self.n_diff + self.n_net + self.n_dd

        self.kind = np.empty(self.q, dtype=np.int8)
        self.kind[: self.n_fam] = FAMILY
        self.kind[self.edge_off : self.edge_off + self.n_edge] = EDGE
        self.kind[self.diff_off : self.diff_off + self.n_diff] = DIFF
        if mode == "unknown":
            self.kind[self.net_off : self.net_off + self.n_net] = NET
            self.kind[self.dd_off : self.dd_off + self.n_dd] = LINKDIFF

    def _jpos(self, i: int, j: int) -> int:
        return j - 1 if j < i else j - 2

    def edge_index(self, unit: int, child: int, parent: int) -> int:
        """Indicator that ``parent -> child`` is present in ``unit``'s DAG."""
        base = ((unit - 1) * self.p + (child - 1)) * (self.p - 1)
        return self.edge_off + base + self._jpos(child, parent)

    def diff_index(self, k: int, l: int, child: int, parent: int) -> int:
        t = self.pair_pos[(min(k, l), max(k, l))]
        base = (t * self.p + (child - 1)) * (self.p - 1)
        return self.diff_off + base + self._jpos(child, parent)

    def net_index(self, k: int, l: int) -> int:
        return self.net_off + self.pair_pos[(min(k, l), max(k, l))]

    def linkdiff_index(self, k: int, l: int, child: int, parent: int) -> int:
        t = self.pair_pos[(min(k, l), max(k, l))]
        base = (t * self.p + (child - 1)) * (self.p - 1)
        return self.dd_off + base + self._jpos(child, parent)

    def edge_meta(self, idx: int) -> tuple[int, int, int]:
        """(unit, child, parent) of an edge variable index."""
        off = idx - self.edge_off
        base, jpos = divmod(off, self.p - 1)
        unit, child0 = divmod(base, self.p)
        child = child0 + 1
        parent = jpos + 1 if jpos + 1 < child else jpos + 2
        return unit + 1, child, parent

    def _pair_meta(self, off: int) -> tuple[tuple[int, int], int, int]:
        base, jpos = divmod(off, self.p - 1)
        t, child0 = divmod(base, self.p)
        child = child0 + 1
        parent = jpos + 1 if jpos + 1 < child else jpos + 2
        return self.pairs[t], child, parent

    def var_name(self, idx: int) -> str:
        kind = self.kind[idx]
        if kind == FAMILY:
            pi = sorted(self.fam_set[idx])
            tail = "_".join(map(str, pi)) if pi else "none"
            return f"f_{self.fam_unit[idx]}_{self.fam_child[idx]}__{tail}"
        if kind == EDGE:
            unit, child, parent = self.edge_meta(idx)
            return f"e_{unit}_{child}_{parent}"
        if kind == DIFF:
            (k, l), child, parent = self._pair_meta(idx - self.diff_off)
            return f"d_{k}_{l}_{child}_{parent}"
        if kind == NET:
            k, l = self.pairs[idx - self.net_off]
            return f"a_{k}_{l}"
        (k, l), child, parent = self._pair_meta(idx - self.dd_off)
        return f"D_{k}_{l}_{child}_{parent}"


@dataclass(frozen=True)
class LinearConstraint:
    """Sparse row over the variable space: ``sum(coef * x[idx]) sense rhs``."""

    indices: tuple[int, ...]
    coefs: tuple[float, ...]
    sense: str  # '<=', '=' or '>='
    rhs: float
    tag: str

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.coefs):
            raise ValueError("indices and coefs must have equal length")
        if self.sense not in ("<=", "=", ">="):
            raise ValueError(f"bad sense {self.sense!r}")

    def value(self, x: np.ndarray) -> float:
        return float(sum(c * x[i] for i, c in zip(self.indices, self.coefs)))

    def satisfied(self, x: np.ndarray, tol: float = 1e-6) -> bool:
        v = self.value(x)
        if self.sense == "<=":
            return v <= self.rhs + tol
        if self.sense == ">=":
            return v >= self.rhs - tol
        return abs(v - self.rhs) <= tol


@dataclass(frozen=True)
class IlpInstance:
    """An assembled binary program plus everything needed to decode solutions.

    Immutable and shareable across concurrent solves.  ``fixed`` holds the
    structural fixings induced by infinite hyper-parameters.  Cluster
    (acyclicity) constraints are not materialised; they are separated lazily
    by the solver from the family block described by ``space``.
    """

    space: VarSpace
    objective: np.ndarray
    constraints: tuple[LinearConstraint, ...]
    fixed: dict[int, int]
    mode: str
    network: UnitNetwork | None
    table: LocalScoreTable
    hp: HyperParams

    @property
    def q(self) -> int:
        return self.space.q

    def with_constraints(self, extra: Iterable[LinearConstraint]) -> "IlpInstance":
        return replace(self, constraints=self.constraints + tuple(extra))


def _ordered_edge_pairs(p: int, child_first: bool = True) -> Iterable[tuple[int, int]]:
    for i in range(1, p + 1):
        for j in range(1, p + 1):
            if j != i:
                yield (i, j)


def _build(table: LocalScoreTable, hp: HyperParams, mode: str, network: UnitNetwork | None) -> IlpInstance:
    if mode == "known":
        assert network is not None
        if network.k != table.k:
            raise ValueError(f"network has {network.k} units, table has {table.k}")
        pairs = network.edge_list()
    else:
        pairs = [(k, l) for k in range(1, table.k + 1) for l in range(k + 1, table.k + 1)]
    space = VarSpace(table, mode, pairs)
    p, k = space.p, space.k

    objective = np.zeros(space.q)
    fixed: dict[int, int] = {}
    for idx in range(space.n_fam):
        objective[idx] = table.score_of(space.fam_unit[idx], space.fam_child[idx], space.fam_set[idx])
    for ku, lu in pairs:
        for i, j in _ordered_edge_pairs(p):
            lam = hp.lam_value(j, i, ku, lu)
            if mode == "known":
                if math.isinf(lam):
                    fixed[space.diff_index(ku, lu, i, j)] = 0
                else:
                    objective[space.diff_index(ku, lu, i, j)] = -lam
            else:
                if math.isinf(lam):
                    fixed[space.linkdiff_index(ku, lu, i, j)] = 0
                else:
                    objective[space.linkdiff_index(ku, lu, i, j)] = -lam
    if mode == "unknown":
        for ku, lu in pairs:
            eta = hp.eta_value(ku, lu)
            if math.isinf(eta):
                fixed[space.net_index(ku, lu)] = 1
            else:
                objective[space.net_index(ku, lu)] = eta

    cons: list[LinearConstraint] = []
    for unit in range(1, k + 1):
        for child in range(1, p + 1):
            start, end = space.fam_range[(unit, child)]
            cons.append(
                LinearConstraint(tuple(range(start, end)), (1.0,) * (end - start), "=", 1.0, "C1")
            )
    for unit in range(1, k + 1):
        for child in range(1, p + 1):
            start, end = space.fam_range[(unit, child)]
            for parent in range(1, p + 1):
                if parent == child:
                    continue
                bit = 1 << (parent - 1)
                members = [f for f in range(start, end) if space.fam_mask[f] & bit]
                idxs = (space.edge_index(unit, child, parent), *members)
                coefs = (1.0, *(-1.0,) * len(members))
                cons.append(LinearConstraint(idxs, coefs, "=", 0.0, "C3"))
    for ku, lu in pairs:
        for i, j in _ordered_edge_pairs(p):
            dv = space.diff_index(ku, lu, i, j)
            av = space.edge_index(ku, i, j)
            bv = space.edge_index(lu, i, j)
            cons.append(LinearConstraint((dv, av, bv), (1.0, -1.0, -1.0), "<=", 0.0, "C4"))
            cons.append(LinearConstraint((dv, av, bv), (-1.0, 1.0, -1.0), "<=", 0.0, "C4"))
            cons.append(LinearConstraint((dv, av, bv), (-1.0, -1.0, 1.0), "<=", 0.0, "C4"))
            cons.append(LinearConstraint((dv, av, bv), (1.0, 1.0, 1.0), "<=", 2.0, "C4"))
    if mode == "unknown":
        for ku, lu in pairs:
            nv = space.net_index(ku, lu)
            for i, j in _ordered_edge_pairs(p):
                ddv = space.linkdiff_index(ku, lu, i, j)
                dv = space.diff_index(ku, lu, i, j)
                cons.append(LinearConstraint((ddv, nv), (1.0, -1.0), "<=", 0.0, "C5"))
                cons.append(LinearConstraint((ddv, dv), (1.0, -1.0), "<=", 0.0, "C5"))
                cons.append(LinearConstraint((ddv, nv, dv), (-1.0, 1.0, 1.0), "<=", 1.0, "C5"))
    for unit in range(1, k + 1):
        for child in range(1, p + 1):
            start, end = space.fam_range[(unit, child)]
            for parent in range(1, p + 1):
                if parent == child:
                    continue
                bit = 1 << (parent - 1)
                non_members = [f for f in range(start, end) if not space.fam_mask[f] & bit]
                idxs = (space.edge_index(unit, child, parent), *non_members)
                coefs = (1.0,) * (1 + len(non_members))
                cons.append(LinearConstraint(idxs, coefs, "=", 1.0, "C6"))

    return IlpInstance(
        space=space,
        objective=objective,
        constraints=tuple(cons),
        fixed=fixed,
        mode=mode,
        network=network,
        table=table,
        hp=hp,
    )


def build_known_network(table: LocalScoreTable, network: UnitNetwork, hp: HyperParams) -> IlpInstance:
    """Program for MAP estimation with the unit network given."""
    return _build(table, hp, "known", network)


def build_unknown_network(table: LocalScoreTable, hp: HyperParams) -> IlpInstance:
    """Program that estimates the unit network jointly with the DAGs."""
    return _build(table, hp, "unknown", None)


def count_variables(p: int, k: int, d_max: int, mode: str) -> int:
    """Closed-form length of the binary state vector for a full score table.

    ``known`` assumes the complete unit network (every pair carries difference
    variables); ``unknown`` additionally counts network and gated-difference
    variables.
    """
    if mode not in ("known", "unknown"):
        raise ValueError(f"mode must be 'known' or 'unknown', got {mode!r}")
    sets_per_child = sum(math.comb(p - 1, d) for d in range(0, min(d_max, p - 1) + 1))
    fam = k * p * sets_per_child
    edge = k * p * (p - 1)
    npairs = math.comb(k, 2)
    diff = npairs * p * (p - 1)
    total = fam + edge + diff
    if mode == "unknown":
        total += npairs + diff
    return total


def decode(x: np.ndarray, inst: IlpInstance) -> tuple[DagCollection, UnitNetwork]:
    """Read the DAGs (and network) off a feasible 0/1 assignment."""
    space = inst.space
    dags = []
    for unit in range(1, space.k + 1):
        parent_sets = []
        for child in range(1, space.p + 1):
            start, end = space.fam_range[(unit, child)]
            chosen = [f for f in range(start, end) if x[f] > 0.5]
            if len(chosen) != 1:
                raise MalformedAssignmentError(
                    f"unit {unit}, vertex {child}: {len(chosen)} parent sets selected"
                )
            parent_sets.append(space.fam_set[chosen[0]])
        g = Dag(space.p, tuple(parent_sets))
        if not is_acyclic(g):
            raise MalformedAssignmentError(f"decoded graph for unit {unit} contains a cycle")
        dags.append(g)
    if inst.mode == "known":
        network = inst.network
    else:
        edges = [pair for t, pair in enumerate(space.pairs) if x[space.net_off + t] > 0.5]
        network = UnitNetwork.from_pairs(space.k, edges)
    return DagCollection(tuple(dags)), network


def encode(inst: IlpInstance, gs: DagCollection, network: UnitNetwork | None = None) -> np.ndarray:
    """Full 0/1 assignment for a candidate solution, differences recomputed.

    Raises ``KeyError`` if some chosen parent set has no score entry.
    """
    space = inst.space
    if network is None:
        network = inst.network
    if network is None:
        raise ValueError("unknown-network mode requires an explicit network")
    x = np.zeros(space.q)
    for unit in range(1, space.k + 1):
        g = gs.dag(unit)
        for child in range(1, space.p + 1):
            pi = g.parents_of(child)
            x[space.fam_lookup[(unit, child, pi)]] = 1.0
            for parent in pi:
                x[space.edge_index(unit, child, parent)] = 1.0
    for ku, lu in space.pairs:
        for i, j in _ordered_edge_pairs(space.p):
            a = x[space.edge_index(ku, i, j)]
            b = x[space.edge_index(lu, i, j)]
            d = float(int(a) ^ int(b))
            x[space.diff_index(ku, lu, i, j)] = d
            if inst.mode == "unknown":
                nv = 1.0 if network.has_edge(ku, lu) else 0.0
                x[space.net_index(ku, lu)] = nv
                x[space.linkdiff_index(ku, lu, i, j)] = d * nv
    return x


def cluster_constraint(space: VarSpace, unit: int, cluster_mask: int) -> LinearConstraint:
    """C2 row for one unit and vertex cluster: someone parents outside it."""
    idxs = []
    for child in range(1, space.p + 1):
        if not cluster_mask & (1 << (child - 1)):
            continue
        start, end = space.fam_range[(unit, child)]
        for f in range(start, end):
            if space.fam_mask[f] & cluster_mask == 0:
                idxs.append(f)
    return LinearConstraint(tuple(idxs), (1.0,) * len(idxs), ">=", 1.0, "C2")


def write_lp(inst: IlpInstance, path, include_clusters: bool | None = None) -> None:
    """Write the program in LP text format for cross-checking with other solvers.

    Cluster constraints are exponential in vertex count, so they are included
    (making the file self-contained) only when ``p`` is small; pass
    ``include_clusters`` to override.
    """
    space = inst.space
    if include_clusters is None:
        include_clusters = space.p <= 12
    out = StringIO()
    out.write("\\ joint DAG estimation instance\n")
    out.write("Maximize\n obj:")
    col = 5
    for idx in range(space.q):
        coef = inst.objective[idx]
        if coef == 0.0:
            continue
        term = f" {'+' if coef >= 0 else '-'} {abs(coef):.17g} {space.var_name(idx)}"
        if col + len(term) > 220:
            out.write("\n      ")
            col = 6
        out.write(term)
        col += len(term)
    out.write("\nSubject To\n")
    counters: dict[str, int] = {}

    def emit(con: LinearConstraint) -> None:
        n = counters.get(con.tag, 0)
        counters[con.tag] = n + 1
        parts = []
        for i, cf in zip(con.indices, con.coefs):
            parts.append(f"{'+' if cf >= 0 else '-'} {abs(cf):g} {space.var_name(i)}")
        sense = {"<=": "<=", ">=": ">=", "=": "="}[con.sense]
        out.write(f" {con.tag}_{n}: {' '.join(parts)} {sense} {con.rhs:g}\n")

    for con in inst.constraints:
        emit(con)
    if include_clusters:
        for unit in range(1, space.k + 1):
            for size in range(2, space.p + 1):
                for combo in combinations(range(1, space.p + 1), size):
                    emit(cluster_constraint(space, unit, _mask(combo)))
    if inst.fixed:
        out.write("Bounds\n")
        for idx in sorted(inst.fixed):
            out.write(f" {space.var_name(idx)} = {inst.fixed[idx]}\n")
    out.write("Binary\n")
    col = 0
    for idx in range(space.q):
        name = space.var_name(idx)
        if col + len(name) + 1 > 220:
            out.write("\n")
            col = 0
        out.write(" " + name)
        col += len(name) + 1
    out.write("\nEnd\n")
    text = out.getvalue()
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
