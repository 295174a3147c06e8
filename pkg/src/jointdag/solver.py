"""Branch-and-cut engine for the joint-DAG binary programs.

Lazy acyclicity constraints are separated exactly (every vertex cluster is
enumerated, which is the point at desk scale), node relaxations run on the
in-house bounded simplex with a propagation-consistent crash basis, search is
best-bound with oldest-node tie-breaking, and incumbents are only accepted
once exact separation confirms acyclicity.  Everything is deterministic for
fixed options; solves on distinct instances share no mutable state and may
run concurrently.
"""

from __future__ import annotations

import heapq
import math
import time
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphs import (
    Dag,
    DagCollection,
    HyperParams,
    UnitNetwork,
    is_acyclic,
    log_regularity,
    objective_value,
)
from .ilp import (
    EDGE,
    FAMILY,
    NET,
    IlpInstance,
    LinearConstraint,
    VarSpace,
    build_known_network,
    build_unknown_network,
    cluster_constraint,
    decode,
    encode,
)
from .scores import LocalScoreTable
from .simplex import LpResult, solve_bounded_lp

__all__ = [
    "SolveOptions",
    "SolveResult",
    "SolverError",
    "LpInfeasibleError",
    "EnumerationTooLarge",
    "solve",
    "solve_topn",
    "lp_relax",
    "propagate",
    "separate_clusters",
    "branch_select",
    "rounding_heuristic",
    "brute_force",
    "enumerate_dags",
    "DAG_COUNT_BY_P",
]

BOUND_PAD = 1e-6
INT_TOL = 1e-6
SEP_TOL = 1e-6

# acyclic digraphs on p labelled vertices (OEIS A003024), used as a sanity net
DAG_COUNT_BY_P = {1: 1, 2: 3, 3: 25, 4: 543, 5: 29281}


class SolverError(RuntimeError):
    pass


class LpInfeasibleError(SolverError):
    """The relaxation at the requested fixings has no feasible point."""


class EnumerationTooLarge(SolverError):
    """Brute-force enumeration would exceed the configured guard."""


@dataclass(frozen=True)
class SolveOptions:
    node_limit: int | None = None
    time_limit: float | None = None
    heuristic: bool = True
    cut_rounds: int = 20
    max_cuts_per_round: int = 50
    seed: int = 0
    collect_log: bool = False


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | node-limit | time-limit
    assignment: np.ndarray | None
    objective: float
    dual_bound: float
    dags: DagCollection | None
    network: UnitNetwork | None
    nodes: int
    cuts: int
    wall_time: float
    events: tuple = ()


# ---------------------------------------------------------------------------
# propagation


class Propagator:
    """Fixpoint of the logical rules implied by C1/C3/C6, XOR and AND links."""

    def __init__(self, inst: IlpInstance):
        self.inst = inst
        space = inst.space
        self.space = space
        p, k = space.p, space.k
        # family variables grouped per (unit, child), plus membership splits
        self.n_alive0 = np.zeros(k * p, dtype=np.int32)
        for unit in range(1, k + 1):
            for child in range(1, p + 1):
                start, end = space.fam_range[(unit, child)]
                self.n_alive0[(unit - 1) * p + (child - 1)] = end - start
        self.in_fams: dict[int, np.ndarray] = {}
        self.out_fams: dict[int, np.ndarray] = {}
        self.n_in0 = np.zeros(space.n_edge, dtype=np.int32)
        self.n_out0 = np.zeros(space.n_edge, dtype=np.int32)
        for unit in range(1, k + 1):
            for child in range(1, p + 1):
                start, end = space.fam_range[(unit, child)]
                for parent in range(1, p + 1):
                    if parent == child:
                        continue
                    e = space.edge_index(unit, child, parent)
                    bit = 1 << (parent - 1)
                    inside = [f for f in range(start, end) if space.fam_mask[f] & bit]
                    outside = [f for f in range(start, end) if not space.fam_mask[f] & bit]
                    self.in_fams[e] = np.array(inside, dtype=np.int64)
                    self.out_fams[e] = np.array(outside, dtype=np.int64)
                    self.n_in0[e - space.edge_off] = len(inside)
                    self.n_out0[e - space.edge_off] = len(outside)
        self.pairs_of_unit: dict[int, list[tuple[int, int]]] = {u: [] for u in range(1, k + 1)}
        for ku, lu in space.pairs:
            self.pairs_of_unit[ku].append((ku, lu))
            self.pairs_of_unit[lu].append((ku, lu))

    def run(self, extra: Mapping[int, int] | None = None, base: np.ndarray | None = None) -> np.ndarray | None:
        """Extend the fixings to the rule fixpoint; None signals a conflict."""
        space = self.space
        q = space.q
        fix = np.full(q, -1, dtype=np.int8)
        queue: deque[int] = deque()
        conflict = False

        def assign(v: int, val: int) -> bool:
            cur = fix[v]
            if cur < 0:
                fix[v] = val
                queue.append(v)
                return True
            return cur == val

        seeds: list[tuple[int, int]] = list(self.inst.fixed.items())
        if base is not None:
            seeds.extend((int(v), int(base[v])) for v in np.nonzero(base >= 0)[0])
        if extra:
            seeds.extend((int(v), int(val)) for v, val in extra.items())
        for v, val in seeds:
            if not assign(v, val):
                return None

        n_alive = self.n_alive0.copy()
        n_in = self.n_in0.copy()
        n_out = self.n_out0.copy()
        p = space.p

        def check_xor(d: int, a: int, b: int) -> bool:
            vd, va, vb = int(fix[d]), int(fix[a]), int(fix[b])
            known = (vd >= 0) + (va >= 0) + (vb >= 0)
            if known < 2:
                return True
            if known == 3:
                return vd == (va ^ vb)
            if vd < 0:
                return assign(d, va ^ vb)
            if va < 0:
                return assign(a, vd ^ vb)
            return assign(b, vd ^ va)

        def check_and(dd: int, nv: int, dv: int) -> bool:
            vD, vn, vd = int(fix[dd]), int(fix[nv]), int(fix[dv])
            if vD == 1:
                return assign(nv, 1) and assign(dv, 1)
            if vn == 0 or vd == 0:
                return assign(dd, 0)
            if vn == 1 and vd == 1:
                return assign(dd, 1)
            if vD == 0:
                if vn == 1:
                    return assign(dv, 0)
                if vd == 1:
                    return assign(nv, 0)
            return True

        def xor_and_for_edge(unit: int, child: int, parent: int) -> bool:
            for ku, lu in self.pairs_of_unit[unit]:
                other = lu if unit == ku else ku
                d = space.diff_index(ku, lu, child, parent)
                a = space.edge_index(unit, child, parent)
                b = space.edge_index(other, child, parent)
                if not check_xor(d, a, b):
                    return False
                if space.mode == "unknown":
                    if not check_and(
                        space.linkdiff_index(ku, lu, child, parent),
                        space.net_index(ku, lu),
                        d,
                    ):
                        return False
            return True

        while queue:
            v = queue.popleft()
            val = fix[v]
            kind = space.kind[v]
            if kind == FAMILY:
                unit = space.fam_unit[v]
                child = space.fam_child[v]
                start, end = space.fam_range[(unit, child)]
                if val == 1:
                    for f in range(start, end):
                        if f != v and not assign(f, 0):
                            return None
                    mask = space.fam_mask[v]
                    for parent in range(1, p + 1):
                        if parent == child:
                            continue
                        want = 1 if mask & (1 << (parent - 1)) else 0
                        if not assign(space.edge_index(unit, child, parent), want):
                            return None
                else:
                    slot = (unit - 1) * p + (child - 1)
                    n_alive[slot] -= 1
                    if n_alive[slot] == 0:
                        return None
                    mask = space.fam_mask[v]
                    for parent in range(1, p + 1):
                        if parent == child:
                            continue
                        e = space.edge_index(unit, child, parent)
                        if mask & (1 << (parent - 1)):
                            n_in[e - space.edge_off] -= 1
                            if n_in[e - space.edge_off] == 0 and not assign(e, 0):
                                return None
                        else:
                            n_out[e - space.edge_off] -= 1
                            if n_out[e - space.edge_off] == 0 and not assign(e, 1):
                                return None
            elif kind == EDGE:
                unit, child, parent = space.edge_meta(v)
                doomed = self.out_fams[v] if val == 1 else self.in_fams[v]
                for f in doomed:
                    if not assign(int(f), 0):
                        return None
                if not xor_and_for_edge(unit, child, parent):
                    return None
            elif kind == NET:
                ku, lu = space.pairs[v - space.net_off]
                for child in range(1, p + 1):
                    for parent in range(1, p + 1):
                        if parent == child:
                            continue
                        if not check_and(
                            space.linkdiff_index(ku, lu, child, parent),
                            v,
                            space.diff_index(ku, lu, child, parent),
                        ):
                            return None
            else:  # DIFF or LINKDIFF
                if kind == 2:  # DIFF
                    (ku, lu), child, parent = space._pair_meta(v - space.diff_off)
                else:
                    (ku, lu), child, parent = space._pair_meta(v - space.dd_off)
                d = space.diff_index(ku, lu, child, parent)
                if not check_xor(
                    d,
                    space.edge_index(ku, child, parent),
                    space.edge_index(lu, child, parent),
                ):
                    return None
                if space.mode == "unknown":
                    if not check_and(
                        space.linkdiff_index(ku, lu, child, parent),
                        space.net_index(ku, lu),
                        d,
                    ):
                        return None
        return fix


def propagate(inst: IlpInstance, fixings: Mapping[int, int] | None = None) -> np.ndarray | None:
    """Public propagation entry point: fixpoint array, or None on conflict."""
    return Propagator(inst).run(extra=fixings)


# ---------------------------------------------------------------------------
# separation, branching, rounding


def _violated_clusters(space: VarSpace, x: np.ndarray, unit: int, tol: float = SEP_TOL):
    """All clusters whose C2 row is violated by ``x``: (violation, mask) pairs."""
    start, _ = space.fam_range[(unit, 1)]
    _, end = space.fam_range[(unit, space.p)]
    idxs = np.arange(start, end)
    vals = x[idxs]
    child_bits = np.array([1 << (space.fam_child[f] - 1) for f in range(start, end)], dtype=np.int64)
    masks = np.array([space.fam_mask[f] for f in range(start, end)], dtype=np.int64)
    nz = vals > 1e-12
    vals, child_bits, masks = vals[nz], child_bits[nz], masks[nz]
    out = []
    for cmask in range(1, 1 << space.p):
        lhs = float(vals[((child_bits & cmask) != 0) & ((masks & cmask) == 0)].sum())
        if lhs < 1.0 - tol:
            out.append((1.0 - lhs, cmask))
    out.sort(key=lambda t: (-t[0], t[1]))
    return out


def separate_clusters(inst_or_space, x: np.ndarray, unit: int, tol: float = SEP_TOL) -> list[LinearConstraint]:
    """Exact C2 separation for one unit, most violated first (empty iff none)."""
    space = inst_or_space.space if isinstance(inst_or_space, IlpInstance) else inst_or_space
    return [cluster_constraint(space, unit, m) for _, m in _violated_clusters(space, x, unit, tol)]


def branch_select(space_or_inst, x: np.ndarray, int_tol: float = INT_TOL) -> int | None:
    """Most fractional edge variable, then family, then network variables."""
    space = space_or_inst.space if isinstance(space_or_inst, IlpInstance) else space_or_inst
    frac = np.abs(x - np.round(x)) > int_tol
    for kinds in ((EDGE,), (FAMILY,), (NET,), (2, 4)):
        cand = frac & np.isin(space.kind, kinds)
        idxs = np.nonzero(cand)[0]
        if idxs.size:
            return int(idxs[np.argmin(np.abs(x[idxs] - 0.5))])
    return None


def _children_of(masks: Sequence[int], p: int) -> list[list[int]]:
    children: list[list[int]] = [[] for _ in range(p + 1)]
    for i in range(1, p + 1):
        m = masks[i - 1]
        j = 1
        while m:
            if m & 1:
                children[j].append(i)
            m >>= 1
            j += 1
    return children


def _masks_acyclic(masks: Sequence[int], p: int) -> bool:
    removed = 0
    full = (1 << p) - 1
    changed = True
    while changed and removed != full:
        changed = False
        for i in range(p):
            bit = 1 << i
            if not removed & bit and masks[i] & ~removed == 0:
                removed |= bit
                changed = True
    return removed == full


def _find_cycle_vertices(masks: Sequence[int], p: int) -> list[int]:
    """Vertices left over after peeling parent-free vertices: the cyclic core."""
    removed = 0
    full = (1 << p) - 1
    changed = True
    while changed:
        changed = False
        for i in range(p):
            bit = 1 << i
            if not removed & bit and masks[i] & ~removed == 0:
                removed |= bit
                changed = True
    return [i + 1 for i in range(p) if not removed & (1 << i)]


def _reachable_from(masks: Sequence[int], p: int, src: int) -> int:
    """Bitmask of vertices reachable from ``src`` along parent->child edges."""
    children = _children_of(masks, p)
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


def rounding_heuristic(inst: IlpInstance, x: np.ndarray):
    """Round the relaxation to a feasible incumbent, repairing cycles.

    Per (unit, child) the parent set with the largest relaxation value is
    chosen; while a unit stays cyclic, the cheapest choice on the cyclic core
    is swapped for its best-scoring alternative that cannot close a cycle.
    Returns ``(assignment, dags, network, objective)`` or None.  Incumbents
    found here only tighten pruning, never exactness.
    """
    space = inst.space
    choice: dict[tuple[int, int], int] = {}
    for unit in range(1, space.k + 1):
        for child in range(1, space.p + 1):
            start, end = space.fam_range[(unit, child)]
            rel = x[start:end]
            choice[(unit, child)] = start + int(np.argmax(rel))
    p = space.p
    for unit in range(1, space.k + 1):
        masks = [space.fam_mask[choice[(unit, child)]] for child in range(1, p + 1)]
        for _ in range(4 * p):
            if _masks_acyclic(masks, p):
                break
            core = _find_cycle_vertices(masks, p)
            pivot = min(core, key=lambda v: (x[choice[(unit, v)]], v))
            saved = masks[pivot - 1]
            masks[pivot - 1] = 0
            reach = _reachable_from(masks, p, pivot)
            start, end = space.fam_range[(unit, pivot)]
            ranked = sorted(range(start, end), key=lambda f: (-inst.objective[f], f))
            repaired = False
            for f in ranked:
                if f == choice[(unit, pivot)]:
                    continue
                if space.fam_mask[f] & reach == 0:
                    choice[(unit, pivot)] = f
                    masks[pivot - 1] = space.fam_mask[f]
                    repaired = True
                    break
            if not repaired:
                masks[pivot - 1] = saved
                return None
        else:
            return None
    dags = []
    for unit in range(1, space.k + 1):
        sets = tuple(space.fam_set[choice[(unit, child)]] for child in range(1, p + 1))
        g = Dag(p, sets)
        if not is_acyclic(g):
            return None
        dags.append(g)
    gs = DagCollection(tuple(dags))
    if inst.mode == "known":
        network = inst.network
    else:
        edges = []
        for ku, lu in space.pairs:
            eta = inst.hp.eta_value(ku, lu)
            if math.isinf(eta):
                edges.append((ku, lu))
                continue
            gain = eta
            r = log_regularity(gs.dag(ku), gs.dag(lu), inst.hp.lam_slice(ku, lu))
            if math.isinf(r):
                continue
            if gain + r > 0:
                edges.append((ku, lu))
        network = UnitNetwork.from_pairs(space.k, edges)
    obj = objective_value(gs, network, inst.table, inst.hp, mode=inst.mode)
    if math.isinf(obj):
        return None
    assignment = encode(inst, gs, network)
    # encode guarantees C1/C3/C4/C5/C6; extra rows (e.g. no-goods) and the
    # structural fixings still have to be honoured by an incumbent
    for idx, val in inst.fixed.items():
        if assignment[idx] != val:
            return None
    for con in inst.constraints:
        if con.tag not in ("C1", "C3", "C4", "C5", "C6") and not con.satisfied(assignment):
            return None
    return assignment, gs, network, obj


# ---------------------------------------------------------------------------
# node relaxations


class _RowSet:
    """Constraint rows in array form, extended as cuts arrive."""

    def __init__(self, inst: IlpInstance):
        self.rows: list[tuple[np.ndarray, np.ndarray, str, float]] = []
        for con in inst.constraints:
            self.append(con)

    def append(self, con: LinearConstraint) -> None:
        self.rows.append(
            (np.asarray(con.indices, dtype=np.int64), np.asarray(con.coefs, dtype=np.float64), con.sense, con.rhs)
        )


def _crash_reference(inst: IlpInstance, fix: np.ndarray) -> np.ndarray | None:
    """Integral point consistent with the fixings; rows it satisfies need no
    phase-1 work in the simplex."""
    space = inst.space
    y = np.where(fix >= 0, fix, 0).astype(np.float64)
    for unit in range(1, space.k + 1):
        for child in range(1, space.p + 1):
            start, end = space.fam_range[(unit, child)]
            block = fix[start:end]
            ones = np.nonzero(block == 1)[0]
            if ones.size:
                sel = start + int(ones[0])
            else:
                alive = np.nonzero(block != 0)[0]
                if alive.size == 0:
                    return None
                empty = space.fam_lookup.get((unit, child, frozenset()))
                if empty is not None and fix[empty] != 0:
                    sel = empty
                else:
                    sel = start + int(alive[0])
            y[sel] = 1.0
            mask = space.fam_mask[sel]
            for parent in range(1, space.p + 1):
                if parent == child:
                    continue
                e = space.edge_index(unit, child, parent)
                if fix[e] < 0:
                    y[e] = 1.0 if mask & (1 << (parent - 1)) else 0.0
    for ku, lu in space.pairs:
        for child in range(1, space.p + 1):
            for parent in range(1, space.p + 1):
                if parent == child:
                    continue
                d = space.diff_index(ku, lu, child, parent)
                if fix[d] < 0:
                    a = y[space.edge_index(ku, child, parent)]
                    b = y[space.edge_index(lu, child, parent)]
                    y[d] = float(int(a) ^ int(b))
                if space.mode == "unknown":
                    nv = space.net_index(ku, lu)
                    if fix[nv] < 0:
                        y[nv] = 1.0
                    dd = space.linkdiff_index(ku, lu, child, parent)
                    if fix[dd] < 0:
                        y[dd] = y[nv] * y[d]
    return y


def _node_lp(inst: IlpInstance, rows: _RowSet, fix: np.ndarray) -> tuple[str, np.ndarray | None, float]:
    """Relaxation at the given fixings: fixed columns are eliminated, rows with
    no free variable are checked for consistency, and the crash point seeds
    the simplex basis."""
    q = inst.q
    free = fix < 0
    nfree = int(free.sum())
    col = np.full(q, -1, dtype=np.int64)
    col[free] = np.arange(nfree)
    fixf = fix.astype(np.float64)
    const = float(inst.objective[fix == 1].sum())

    a_rows: list[tuple[np.ndarray, np.ndarray]] = []
    senses: list[str] = []
    rhs: list[float] = []
    for idx, coef, sense, b0 in rows.rows:
        fvals = fix[idx]
        live = fvals < 0
        b2 = b0 - float(coef[~live] @ fixf[idx[~live]]) if not live.all() else b0
        if not live.any():
            ok = (
                (sense == "<=" and b2 >= -1e-9)
                or (sense == ">=" and b2 <= 1e-9)
                or (sense == "=" and abs(b2) <= 1e-9)
            )
            if not ok:
                return "infeasible", None, -np.inf
            continue
        a_rows.append((col[idx[live]], coef[live]))
        senses.append(sense)
        rhs.append(b2)

    if nfree == 0:
        return "optimal", fixf.copy(), const

    amat = np.zeros((len(a_rows), nfree))
    for r, (cols, coefs) in enumerate(a_rows):
        amat[r, cols] = coefs
    ref = _crash_reference(inst, fix)
    if ref is None:
        return "infeasible", None, -np.inf
    res = solve_bounded_lp(
        amat,
        senses,
        np.asarray(rhs),
        inst.objective[free],
        np.zeros(nfree),
        np.ones(nfree),
        x0=ref[free],
    )
    if res.status == "infeasible":
        return "infeasible", None, -np.inf
    if res.status != "optimal":  # pragma: no cover - bounded by construction
        raise SolverError(f"unexpected LP status {res.status}")
    xfull = fixf.copy()
    xfull[free] = res.x
    return "optimal", xfull, res.value + const


def lp_relax(
    inst: IlpInstance,
    fixings: Mapping[int, int] | None = None,
    cuts: Iterable[LinearConstraint] = (),
) -> tuple[np.ndarray, float]:
    """Solve the relaxation over the explicit rows plus ``cuts`` at ``fixings``.

    Returns the (possibly fractional) solution over the full variable space
    and its value, a valid upper bound on every integral completion.  Raises
    :class:`LpInfeasibleError` when the node region is empty.
    """
    prop = Propagator(inst)
    fix = prop.run(extra=fixings)
    if fix is None:
        raise LpInfeasibleError("fixings conflict under propagation")
    rows = _RowSet(inst)
    for cut in cuts:
        rows.append(cut)
    status, x, value = _node_lp(inst, rows, fix)
    if status == "infeasible":
        raise LpInfeasibleError("relaxation infeasible")
    return x, value


# ---------------------------------------------------------------------------
# main search


@dataclass(order=True)
class _HeapEntry:
    neg_bound: float
    node_id: int
    fix: np.ndarray = field(compare=False)
    bound: float = field(compare=False)


def solve(inst: IlpInstance, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """Exact maximisation of the program with an optimality certificate."""
    t0 = time.perf_counter()
    events: list[dict] = []

    def log(event: str, **kw) -> None:
        if opts.collect_log:
            kw["event"] = event
            kw["t"] = round(time.perf_counter() - t0, 6)
            events.append(kw)

    prop = Propagator(inst)
    rows = _RowSet(inst)
    seen_cuts: set[tuple[int, int]] = set()
    n_cuts = 0
    best_obj = -np.inf
    best: tuple[np.ndarray, DagCollection, UnitNetwork] | None = None
    nodes_done = 0
    next_id = 1
    status = "optimal"

    root_fix = prop.run()
    heap: list[_HeapEntry] = []
    if root_fix is not None:
        heapq.heappush(heap, _HeapEntry(-np.inf, 0, root_fix, np.inf))
    log("start", q=inst.q, rows=len(inst.constraints))

    def out_of_budget() -> str | None:
        if opts.node_limit is not None and nodes_done >= opts.node_limit:
            return "node-limit"
        if opts.time_limit is not None and time.perf_counter() - t0 > opts.time_limit:
            return "time-limit"
        return None

    def try_incumbent(assignment, gs, network, obj) -> None:
        nonlocal best, best_obj
        if obj > best_obj:
            best = (assignment, gs, network)
            best_obj = obj
            log("incumbent", objective=obj)

    while heap:
        limit = out_of_budget()
        if limit:
            status = limit
            break
        entry = heapq.heappop(heap)
        if entry.bound <= best_obj:
            log("node_close", node=entry.node_id, reason="bound")
            continue
        nodes_done += 1
        node_bound = entry.bound
        fix = entry.fix
        log("node_open", node=entry.node_id, bound=node_bound)

        rounds_left = opts.cut_rounds
        closed = False
        x = None
        while True:
            lp_status, x, lp_value = _node_lp(inst, rows, fix)
            if lp_status == "infeasible":
                log("node_close", node=entry.node_id, reason="infeasible")
                closed = True
                break
            node_bound = min(node_bound, lp_value + BOUND_PAD)
            if node_bound <= best_obj:
                log("node_close", node=entry.node_id, reason="bound")
                closed = True
                break
            integral = bool(np.all(np.abs(x - np.round(x)) <= INT_TOL))
            found = []
            for unit in range(1, inst.space.k + 1):
                for viol, mask in _violated_clusters(inst.space, x, unit):
                    if (unit, mask) not in seen_cuts:
                        found.append((viol, unit, mask))
            found.sort(key=lambda t: (-t[0], t[1], t[2]))
            found = found[: opts.max_cuts_per_round]
            if found and (integral or rounds_left > 0):
                for _, unit, mask in found:
                    seen_cuts.add((unit, mask))
                    rows.append(cluster_constraint(inst.space, unit, mask))
                n_cuts += len(found)
                rounds_left -= 1
                log("cuts", node=entry.node_id, added=len(found), total=n_cuts)
                continue
            if found:  # fractional, cut budget exhausted: keep them for children
                for _, unit, mask in found:
                    seen_cuts.add((unit, mask))
                    rows.append(cluster_constraint(inst.space, unit, mask))
                n_cuts += len(found)
                log("cuts", node=entry.node_id, added=len(found), total=n_cuts)
            if integral and not found:
                gs, network = decode(x, inst)
                obj = objective_value(gs, network, inst.table, inst.hp, mode=inst.mode)
                try_incumbent(np.round(x), gs, network, obj)
                log("node_close", node=entry.node_id, reason="integral")
                closed = True
            break

        if closed:
            if opts.collect_log:
                log("bound", value=max(best_obj, heap[0].bound) if heap else best_obj)
            continue

        if opts.heuristic and x is not None:
            rounded = rounding_heuristic(inst, x)
            if rounded is not None:
                try_incumbent(*rounded)

        var = branch_select(inst.space, x)
        if var is None:  # pragma: no cover - integral points close above
            raise SolverError("no fractional variable to branch on")
        for val in (0, 1):
            child_fix = prop.run(extra={var: val}, base=fix)
            if child_fix is None:
                continue
            heapq.heappush(heap, _HeapEntry(-node_bound, next_id, child_fix, node_bound))
            next_id += 1
        log("branch", node=entry.node_id, var=int(var))
        if opts.collect_log:
            log("bound", value=max(best_obj, heap[0].bound) if heap else best_obj)

    wall = time.perf_counter() - t0
    if status == "optimal":
        if best is None:
            return SolveResult("infeasible", None, -np.inf, -np.inf, None, None, nodes_done, n_cuts, wall, tuple(events))
        dual = best_obj
    else:
        # every unresolved subtree lives in the heap at this point
        dual = max([best_obj, *(e.bound for e in heap)])
    if best is None:
        return SolveResult(status, None, -np.inf, dual, None, None, nodes_done, n_cuts, wall, tuple(events))
    assignment, gs, network = best
    log("done", status=status, objective=best_obj, dual=dual)
    return SolveResult(status, assignment, best_obj, dual, gs, network, nodes_done, n_cuts, wall, tuple(events))


def _nogood(inst: IlpInstance, assignment: np.ndarray) -> LinearConstraint:
    """Row excluding one family/network configuration from future solves."""
    space = inst.space
    idxs: list[int] = []
    coefs: list[float] = []
    rhs = -1.0
    for f in range(space.n_fam):
        if assignment[f] > 0.5:
            idxs.append(f)
            coefs.append(1.0)
            rhs += 1.0
    if inst.mode == "unknown":
        for t in range(space.n_net):
            v = space.net_off + t
            idxs.append(v)
            rhs += 1.0
            if assignment[v] > 0.5:
                coefs.append(1.0)
            else:
                coefs.append(-1.0)
                rhs -= 1.0
    return LinearConstraint(tuple(idxs), tuple(coefs), "<=", rhs, "NOGOOD")


def solve_topn(inst: IlpInstance, n: int, opts: SolveOptions = SolveOptions()) -> list[SolveResult]:
    """The ``n`` best solutions, distinct in family or network variables,
    ordered by non-increasing objective."""
    if n < 1:
        raise ValueError("n must be at least 1")
    results: list[SolveResult] = []
    work = inst
    for _ in range(n):
        res = solve(work, opts)
        if res.status != "optimal":
            break
        results.append(res)
        work = work.with_constraints([_nogood(work, res.assignment)])
    return results


# ---------------------------------------------------------------------------
# exhaustive oracle


def enumerate_dags(p: int) -> list[Dag]:
    """Every DAG on ``p`` labelled vertices, in deterministic order."""
    per_vertex: list[list[int]] = []
    for i in range(p):
        allowed = ((1 << p) - 1) & ~(1 << i)
        masks = []
        sub = allowed
        while True:
            masks.append(sub)
            if sub == 0:
                break
            sub = (sub - 1) & allowed
        per_vertex.append(sorted(masks))
    out = []
    for combo in product(*per_vertex):
        if _masks_acyclic(combo, p):
            sets = tuple(
                frozenset(j + 1 for j in range(p) if combo[i] & (1 << j)) for i in range(p)
            )
            out.append(Dag(p, sets))
    if p in DAG_COUNT_BY_P and len(out) != DAG_COUNT_BY_P[p]:  # pragma: no cover
        raise SolverError(f"DAG enumeration broken: {len(out)} != {DAG_COUNT_BY_P[p]}")
    return out


def brute_force(
    table: LocalScoreTable,
    hp: HyperParams,
    mode: str = "known",
    network: UnitNetwork | None = None,
    guard: int = 10**8,
) -> SolveResult:
    """Exact MAP by exhaustive enumeration; the ground truth for the search.

    Enumerates every DAG collection (and every unit network in unknown mode),
    scoring candidates with the same objective the solver certifies against.
    """
    t0 = time.perf_counter()
    if mode not in ("known", "unknown"):
        raise ValueError(f"mode must be 'known' or 'unknown', got {mode!r}")
    if mode == "known" and network is None:
        raise ValueError("known-network mode needs the network")
    dags = enumerate_dags(table.p)
    ndag = len(dags)
    npairs = math.comb(table.k, 2)
    n_networks = 2**npairs if mode == "unknown" else 1
    total = ndag**table.k * n_networks
    if total > guard:
        raise EnumerationTooLarge(f"{total} candidates exceed guard {guard}")

    score_of = np.full((table.k, ndag), -np.inf)
    for k in range(1, table.k + 1):
        for d, g in enumerate(dags):
            s = 0.0
            for i in range(1, table.p + 1):
                v = table.score_of(k, i, g.parents_of(i))
                if v is None:
                    s = -np.inf
                    break
                s += v
            score_of[k - 1, d] = s

    all_pairs = [(a, b) for a in range(1, table.k + 1) for b in range(a + 1, table.k + 1)]
    reg: dict[tuple[int, int], np.ndarray] = {}
    for a, b in all_pairs:
        mat = np.zeros((ndag, ndag))
        lam = hp.lam_slice(a, b)
        for d1 in range(ndag):
            for d2 in range(d1, ndag):
                r = log_regularity(dags[d1], dags[d2], lam)
                mat[d1, d2] = mat[d2, d1] = r
        reg[(a, b)] = mat

    if mode == "known":
        networks = [network]
    else:
        networks = [
            UnitNetwork.from_pairs(table.k, sel)
            for r in range(npairs + 1)
            for sel in combinations(all_pairs, r)
        ]

    best_val = -np.inf
    best_combo: tuple[int, ...] | None = None
    best_net: UnitNetwork | None = None
    evaluated = 0
    for net in networks:
        pairs = net.edge_list()
        eta_sum = 0.0
        if mode == "unknown":
            bad = False
            for a, b in all_pairs:
                e = hp.eta_value(a, b)
                if net.has_edge(a, b):
                    if not math.isinf(e):
                        eta_sum += e
                elif math.isinf(e):
                    bad = True
                    break
            if bad:
                continue
        for combo in product(range(ndag), repeat=table.k):
            evaluated += 1
            val = eta_sum
            for k in range(table.k):
                val += score_of[k, combo[k]]
            if val == -np.inf:
                continue
            for a, b in pairs:
                val += reg[(a, b)][combo[a - 1], combo[b - 1]]
            if val > best_val:
                best_val = val
                best_combo = combo
                best_net = net

    wall = time.perf_counter() - t0
    if best_combo is None:
        return SolveResult("infeasible", None, -np.inf, -np.inf, None, None, evaluated, 0, wall)
    gs = DagCollection(tuple(dags[d] for d in best_combo))
    check = objective_value(gs, best_net, table, hp, mode=mode)
    if not math.isclose(check, best_val, rel_tol=0.0, abs_tol=1e-9):  # pragma: no cover
        raise SolverError(f"oracle bookkeeping drifted: {check} vs {best_val}")
    return SolveResult("optimal", None, check, check, gs, best_net, evaluated, 0, wall)
