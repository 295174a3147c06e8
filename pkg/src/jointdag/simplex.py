"""Dense bounded-variable simplex used for the node relaxations.

Two-phase tableau method, maximising.  Upper bounds are handled implicitly
(nonbasic variables may sit at either bound), artificial columns are added
only for rows the crash basis cannot satisfy, and reduced costs are recomputed
from the tableau every iteration, which keeps drift in check at these sizes.
Dantzig pricing with a Bland's-rule fallback once the iteration stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
COST_TOL = 1e-9
PIVOT_TOL = 1e-9
_STALL_LIMIT = 120
_CHECK_EVERY = 200

_NB_LOWER, _NB_UPPER, _BASIC = 0, 1, 2


class SimplexError(RuntimeError):
    """Numerical failure or iteration-limit overrun in the LP core."""


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    value: float
    iterations: int


def solve_bounded_lp(
    a: np.ndarray,
    senses: list[str],
    b: np.ndarray,
    c: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    x0: np.ndarray | None = None,
    max_iter: int | None = None,
) -> LpResult:
    """Maximise ``c @ x`` subject to ``a x (senses) b`` and ``lower <= x <= upper``.

    ``senses`` entries are '<=', '=' or '>='.  ``x0``, when given, is a crash
    point whose coordinates lie on their bounds; rows it satisfies start with a
    feasible slack basis and need no artificial variable.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("constraint matrix must be 2-d")
    m, n = a.shape
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if len(senses) != m or b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent problem dimensions")
    if np.any(lower > upper + FEAS_TOL):
        return LpResult("infeasible", None, -np.inf, 0)

    slack_lo = np.empty(m)
    slack_up = np.empty(m)
    for r, s in enumerate(senses):
        if s in ("<=", "<"):
            slack_lo[r], slack_up[r] = 0.0, np.inf
        elif s in (">=", ">"):
            slack_lo[r], slack_up[r] = -np.inf, 0.0
        elif s in ("=", "=="):
            slack_lo[r], slack_up[r] = 0.0, 0.0
        else:
            raise ValueError(f"unknown sense {s!r}")

    # Start point: structurals sit exactly on a bound.
    xs = np.empty(n)
    if x0 is not None:
        x0 = np.clip(np.asarray(x0, dtype=np.float64), lower, upper)
    for j in range(n):
        if x0 is not None and np.isfinite(x0[j]):
            xs[j] = x0[j]
        elif np.isfinite(lower[j]):
            xs[j] = lower[j]
        elif np.isfinite(upper[j]):
            xs[j] = upper[j]
        else:
            xs[j] = 0.0
    stat_s = np.where(
        np.abs(xs - lower) <= np.abs(xs - upper), _NB_LOWER, _NB_UPPER
    ).astype(np.int8)
    xs = np.where(stat_s == _NB_LOWER, lower, upper)
    xs[~np.isfinite(xs)] = 0.0  # free structurals (not used by the solver core)

    resid = b - a @ xs if n else b.copy()
    slack_val = np.clip(resid, slack_lo, slack_up)
    art_rows = np.nonzero(np.abs(resid - slack_val) > FEAS_TOL)[0]
    nart = len(art_rows)

    ncols = n + m + nart
    a_ext = np.zeros((m, ncols))
    a_ext[:, :n] = a
    a_ext[np.arange(m), n + np.arange(m)] = 1.0
    lo = np.concatenate([lower, slack_lo, np.zeros(nart)])
    up = np.concatenate([upper, slack_up, np.full(nart, np.inf)])
    xval = np.zeros(ncols)
    xval[:n] = xs
    xval[n : n + m] = slack_val
    stat = np.full(ncols, _NB_LOWER, dtype=np.int8)
    stat[:n] = stat_s
    basis = np.empty(m, dtype=np.int64)
    diag = np.ones(m)
    art_of_row = {}
    for t, r in enumerate(art_rows):
        j = n + m + t
        gap = resid[r] - slack_val[r]
        a_ext[r, j] = 1.0 if gap > 0 else -1.0
        diag[r] = a_ext[r, j]
        xval[j] = abs(gap)
        basis[r] = j
        art_of_row[r] = j
        # the clamped slack sits at whichever of its bounds the clip hit
        stat[n + r] = _NB_LOWER if slack_val[r] == slack_lo[r] else _NB_UPPER
    for r in range(m):
        if r not in art_of_row:
            basis[r] = n + r
    stat[basis] = _BASIC
    tableau = a_ext / diag[:, None]

    if max_iter is None:
        max_iter = 400 + 60 * (m + n)

    state = _State(tableau, a_ext, basis, stat, xval, lo, up, b, max_iter)

    if nart:
        c1 = np.zeros(ncols)
        c1[n + m :] = -1.0
        status = _iterate(state, c1)
        if status == "unbounded":  # phase 1 is bounded; defensive
            raise SimplexError("phase 1 reported unbounded")
        if float(c1 @ state.xval) < -1e-7:
            return LpResult("infeasible", None, -np.inf, state.iters)
        state.lo[n + m :] = 0.0
        state.up[n + m :] = 0.0

    c2 = np.zeros(ncols)
    c2[:n] = c
    status = _iterate(state, c2)
    if status == "unbounded":
        return LpResult("unbounded", None, np.inf, state.iters)
    x = state.xval[:n].copy()
    return LpResult("optimal", x, float(c @ x), state.iters)


class _State:
    def __init__(self, tableau, a_ext, basis, stat, xval, lo, up, b, max_iter):
        self.tableau = tableau
        self.a_ext = a_ext
        self.basis = basis
        self.stat = stat
        self.xval = xval
        self.lo = lo
        self.up = up
        self.b = b
        self.max_iter = max_iter
        self.iters = 0

    def refactorize(self) -> None:
        m = len(self.basis)
        if m == 0:
            return
        bmat = self.a_ext[:, self.basis]
        try:
            self.tableau = np.linalg.solve(bmat, self.a_ext)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise SimplexError("singular basis during refactorisation") from exc
        nonbasic = self.stat != _BASIC
        rhs = self.b - self.a_ext[:, nonbasic] @ self.xval[nonbasic]
        self.xval[self.basis] = np.linalg.solve(bmat, rhs)


def _iterate(st: _State, cvec: np.ndarray) -> str:
    m = len(st.basis)
    movable = (st.up - st.lo) > FEAS_TOL
    bland = False
    stall = 0
    while True:
        st.iters += 1
        if st.iters > st.max_iter:
            raise SimplexError(f"simplex iteration limit ({st.max_iter}) exceeded")
        if m and st.iters % _CHECK_EVERY == 0:
            drift = np.abs(st.a_ext @ st.xval - st.b).max()
            if drift > 1e-7:
                st.refactorize()

        d = cvec - (cvec[st.basis] @ st.tableau if m else 0.0)
        cand = movable & (
            ((st.stat == _NB_LOWER) & (d > COST_TOL))
            | ((st.stat == _NB_UPPER) & (d < -COST_TOL))
        )
        idx = np.nonzero(cand)[0]
        if idx.size == 0:
            return "optimal"
        j = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
        dirn = 1.0 if st.stat[j] == _NB_LOWER else -1.0
        col = st.tableau[:, j].copy() if m else np.empty(0)
        effcol = dirn * col

        xb = st.xval[st.basis]
        ratios = np.full(m, np.inf)
        dec = effcol > PIVOT_TOL
        inc = effcol < -PIVOT_TOL
        if dec.any():
            ratios[dec] = (xb[dec] - st.lo[st.basis[dec]]) / effcol[dec]
        if inc.any():
            ratios[inc] = (st.up[st.basis[inc]] - xb[inc]) / (-effcol[inc])
        ratios = np.maximum(ratios, 0.0)
        rmin = ratios.min() if m else np.inf
        bound_step = st.up[j] - st.lo[j]

        if bound_step <= rmin:
            if not np.isfinite(bound_step):
                return "unbounded"
            st.xval[st.basis] = xb - dirn * bound_step * col
            if st.stat[j] == _NB_LOWER:
                st.xval[j] = st.up[j]
                st.stat[j] = _NB_UPPER
            else:
                st.xval[j] = st.lo[j]
                st.stat[j] = _NB_LOWER
            step = bound_step
        else:
            if not np.isfinite(rmin):
                return "unbounded"
            tied = np.nonzero(ratios <= rmin + 1e-12)[0]
            if bland:
                r = int(tied[np.argmin(st.basis[tied])])
            else:
                r = int(tied[np.argmax(np.abs(effcol[tied]))])
            leaving = int(st.basis[r])
            st.xval[st.basis] = xb - dirn * rmin * col
            st.xval[j] = st.xval[j] + dirn * rmin
            if effcol[r] > 0:
                st.xval[leaving] = st.lo[leaving]
                st.stat[leaving] = _NB_LOWER
            else:
                st.xval[leaving] = st.up[leaving]
                st.stat[leaving] = _NB_UPPER
            piv = st.tableau[r, j]
            trow = st.tableau[r] / piv
            colv = st.tableau[:, j].copy()
            colv[r] = 0.0
            st.tableau -= np.outer(colv, trow)
            st.tableau[r] = trow
            st.basis[r] = j
            st.stat[j] = _BASIC
            step = rmin

        if step <= FEAS_TOL:
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True
        else:
            stall = 0
            bland = False
