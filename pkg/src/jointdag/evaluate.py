"""Estimation-quality metrics and the hyper-parameter grid search.

Edge recovery is treated as binary classification over ordered vertex pairs
(DAGs) or unordered unit pairs (networks); model selection maximises an AIC
in which each recovered edge costs one free parameter.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .graphs import DagCollection, HyperParams, UnitNetwork, log_multiplicity
from .ilp import build_known_network, build_unknown_network
from .scores import LocalScoreTable
from .solver import SolveOptions, SolveResult, solve

__all__ = [
    "Confusion",
    "GridCell",
    "DEFAULT_GRID",
    "confusion_dags",
    "confusion_network",
    "mcc",
    "aic",
    "grid_search",
]

DEFAULT_GRID: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, math.inf)


@dataclass(frozen=True)
class Confusion:
    """Edge-classification counts; totals are fixed by the problem size."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion_dags(est: DagCollection, truth: DagCollection) -> Confusion:
    """Counts over all units and ordered vertex pairs (p * (p-1) per unit)."""
    if est.k != truth.k or est.p != truth.p:
        raise ValueError("estimate and truth dimensions differ")
    tp = fp = tn = fn = 0
    for unit in range(1, est.k + 1):
        ge, gt = est.dag(unit), truth.dag(unit)
        for i in range(1, est.p + 1):
            pe, pt = ge.parents_of(i), gt.parents_of(i)
            for j in range(1, est.p + 1):
                if j == i:
                    continue
                in_e, in_t = j in pe, j in pt
                if in_e and in_t:
                    tp += 1
                elif in_e:
                    fp += 1
                elif in_t:
                    fn += 1
                else:
                    tn += 1
    return Confusion(tp, fp, tn, fn)


def confusion_network(est: UnitNetwork, truth: UnitNetwork) -> Confusion:
    """Counts over unordered unit pairs (k * (k-1) / 2)."""
    if est.k != truth.k:
        raise ValueError("estimate and truth unit counts differ")
    tp = fp = tn = fn = 0
    for a in range(1, est.k + 1):
        for b in range(a + 1, est.k + 1):
            in_e, in_t = est.has_edge(a, b), truth.has_edge(a, b)
            if in_e and in_t:
                tp += 1
            elif in_e:
                fp += 1
            elif in_t:
                fn += 1
            else:
                tn += 1
    return Confusion(tp, fp, tn, fn)


def mcc(c: Confusion) -> float:
    """Matthews correlation coefficient; 0 when a denominator factor vanishes."""
    denom = (
        (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    )
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def aic(scores: LocalScoreTable, gs: DagCollection) -> float:
    """Information criterion of a decoded estimate, one parameter per edge.

    The stored score is evidence plus the multiplicity correction; the
    correction is inverted from the table metadata so the criterion compares
    pure fit against dimensionality.
    """
    if gs.k != scores.k or gs.p != scores.p:
        raise ValueError("collection and table dimensions differ")
    total = 0.0
    dim = 0
    for unit in range(1, gs.k + 1):
        g = gs.dag(unit)
        for i in range(1, gs.p + 1):
            pi = g.parents_of(i)
            s = scores.score_of(unit, i, pi)
            if s is None:
                raise ValueError(f"missing score entry for unit {unit}, child {i}")
            total += s - log_multiplicity(pi, scores.p, scores.d_max)
            dim += len(pi)
    return total - dim


@dataclass(frozen=True)
class GridCell:
    lam: float
    eta: float | None
    objective: float | None
    aic: float | None
    status: str
    wall_time: float


def _solve_cell(args) -> tuple[GridCell, SolveResult | None]:
    table, lam, eta, mode, network, opts = args
    t0 = time.perf_counter()
    try:
        if mode == "known":
            hp = HyperParams(lam=lam, eta=0.0, d_max=table.d_max)
            inst = build_known_network(table, network, hp)
        else:
            hp = HyperParams(lam=lam, eta=eta, d_max=table.d_max)
            inst = build_unknown_network(table, hp)
        res = solve(inst, opts)
    except Exception:
        return GridCell(lam, eta, None, None, "error", time.perf_counter() - t0), None
    if res.status != "optimal":
        return GridCell(lam, eta, res.objective if res.dags else None, None, res.status, res.wall_time), None
    cell_aic = aic(table, res.dags)
    return GridCell(lam, eta, res.objective, cell_aic, res.status, res.wall_time), res


def grid_search(
    table: LocalScoreTable,
    lambda_grid: tuple[float, ...] = DEFAULT_GRID,
    eta_grid: tuple[float, ...] = DEFAULT_GRID,
    mode: str = "known",
    network: UnitNetwork | None = None,
    opts: SolveOptions = SolveOptions(),
    jobs: int = 1,
) -> tuple[tuple[float, float | None], SolveResult, list[GridCell]]:
    """Solve one program per grid cell and keep the AIC-maximising estimate.

    Known-network mode ignores the density grid (one cell per penalty value).
    Cells are independent, so they may be solved in parallel; results are
    reduced in cell order, and AIC ties break toward the smaller penalty, then
    the smaller density reward.  Failed cells stay in the table but never win.
    """
    if mode not in ("known", "unknown"):
        raise ValueError(f"mode must be 'known' or 'unknown', got {mode!r}")
    if mode == "known":
        if network is None:
            raise ValueError("known-network mode needs the network")
        cells_in = [(lam, None) for lam in lambda_grid]
    else:
        cells_in = [(lam, eta) for lam in lambda_grid for eta in eta_grid]
    work = [(table, lam, eta, mode, network, opts) for lam, eta in cells_in]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_solve_cell, work))
    else:
        outcomes = [_solve_cell(w) for w in work]
    cells = [cell for cell, _ in outcomes]
    best_cell: GridCell | None = None
    best_res: SolveResult | None = None
    for cell, res in outcomes:
        if cell.aic is None:
            continue
        if best_cell is None or cell.aic > best_cell.aic:
            best_cell, best_res = cell, res
        elif cell.aic == best_cell.aic:
            key = (cell.lam, cell.eta if cell.eta is not None else -1.0)
            best_key = (best_cell.lam, best_cell.eta if best_cell.eta is not None else -1.0)
            if key < best_key:
                best_cell, best_res = cell, res
    if best_cell is None:
        raise RuntimeError("no grid cell solved to optimality")
    return (best_cell.lam, best_cell.eta), best_res, cells
