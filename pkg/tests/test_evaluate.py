import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointdag.evaluate import (
    DEFAULT_GRID,
    Confusion,
    aic,
    confusion_dags,
    confusion_network,
    grid_search,
    mcc,
)
from jointdag.graphs import Dag, DagCollection, HyperParams, UnitNetwork
from jointdag.ilp import build_known_network
from jointdag.scores import LocalScoreTable
from jointdag.solver import SolveOptions, solve

from conftest import EMPTY, collection, fs, worst_table


class TestConfusion:
    def test_totals_enforced(self):
        with pytest.raises(ValueError):
            Confusion(-1, 0, 0, 0)

    def test_perfect_estimate(self):
        gs = collection({2: [1]}, {3: [2]}, p=3)
        c = confusion_dags(gs, gs)
        assert (c.fp, c.fn) == (0, 0)
        assert c.total == 2 * 3 * 2

    def test_empty_estimate_counts_misses(self):
        truth = collection({2: [1], 3: [1, 2]}, p=3)
        est = collection({}, p=3)
        c = confusion_dags(est, truth)
        assert c.tp == 0 and c.fn == 3 and c.fp == 0
        assert c.tn == 6 - 3

    def test_hand_counted_example(self):
        truth = collection({2: [1]}, p=3)
        est = collection({2: [1], 3: [2]}, p=3)
        c = confusion_dags(est, truth)
        assert (c.tp, c.fp, c.fn, c.tn) == (1, 1, 0, 4)

    def test_network_counts(self):
        est = UnitNetwork.from_pairs(3, [(1, 2)])
        truth = UnitNetwork.from_pairs(3, [(1, 2), (2, 3)])
        c = confusion_network(est, truth)
        assert (c.tp, c.fp, c.fn, c.tn) == (1, 0, 1, 1)
        assert c.total == 3

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_total_is_problem_size(self, seed):
        rng = np.random.default_rng(seed)

        def rand_gs():
            dags = []
            for _ in range(2):
                parents = {}
                for i in (2, 3):
                    parents[i] = [j for j in range(1, i) if rng.random() < 0.5]
                dags.append(Dag.from_parents(3, parents))
            return DagCollection(tuple(dags))

        c = confusion_dags(rand_gs(), rand_gs())
        assert c.total == 2 * 3 * 2


class TestMcc:
    def test_perfect_prediction(self):
        assert mcc(Confusion(3, 0, 5, 0)) == pytest.approx(1.0)

    def test_hand_value(self):
        assert mcc(Confusion(1, 0, 2, 1)) == pytest.approx(2 / math.sqrt(12))

    def test_degenerate_convention(self):
        assert mcc(Confusion(0, 0, 6, 0)) == 0.0
        assert mcc(Confusion(4, 0, 0, 0)) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(st.tuples(*[st.integers(0, 20)] * 4))
    def test_symmetry_under_class_swap(self, counts):
        tp, fp, tn, fn = counts
        assert mcc(Confusion(tp, fp, tn, fn)) == pytest.approx(
            mcc(Confusion(tn, fn, tp, fp))
        )


def fixed_table(entries, p, k, d_max=2):
    return LocalScoreTable(k, p, d_max, entries)


class TestAic:
    def test_all_empty_is_plain_score_sum(self):
        tab = fixed_table(
            {
                (1, 1): {EMPTY: -1.0},
                (1, 2): {EMPTY: -2.0},
            },
            p=2,
            k=1,
            d_max=1,
        )
        gs = collection({}, p=2)
        assert aic(tab, gs) == pytest.approx(-3.0)

    def test_edge_with_unchanged_evidence_costs_one(self):
        # stored score embeds the multiplicity term, so equal evidence means
        # s({1}) = s(empty) + log m({1}); the criterion then drops by the
        # single free parameter
        ev = -1.5
        m1 = -math.log(math.comb(2, 1))
        tab = fixed_table(
            {
                (1, 1): {EMPTY: 0.0},
                (1, 2): {EMPTY: ev, fs(1): ev + m1},
            },
            p=2,
            k=1,
            d_max=1,
        )
        without = aic(tab, collection({}, p=2))
        with_edge = aic(tab, collection({2: [1]}, p=2))
        assert with_edge - without == pytest.approx(-1.0)

    def test_differences_invariant_to_evidence_shift(self):
        base = {
            (1, 1): {EMPTY: 0.3},
            (1, 2): {EMPTY: -0.4, fs(1): 0.9},
        }
        shifted = {key: {pi: s + 7.5 for pi, s in per.items()} for key, per in base.items()}
        t1 = fixed_table(base, p=2, k=1, d_max=1)
        t2 = fixed_table(shifted, p=2, k=1, d_max=1)
        g_a = collection({}, p=2)
        g_b = collection({2: [1]}, p=2)
        d1 = aic(t1, g_b) - aic(t1, g_a)
        d2 = aic(t2, g_b) - aic(t2, g_a)
        assert d1 == pytest.approx(d2)

    def test_missing_entry_raises(self):
        tab = fixed_table({(1, 1): {EMPTY: 0.0}, (1, 2): {EMPTY: 0.0}}, p=2, k=1, d_max=1)
        with pytest.raises(ValueError, match="missing score"):
            aic(tab, collection({2: [1]}, p=2))


class TestGridSearch:
    def test_singleton_grid_equals_solve_plus_aic(self):
        tab = worst_table(3, 2, 2, seed=0)
        net = UnitNetwork.complete(2)
        (lam, eta), best, cells = grid_search(tab, (0.5,), (0.0,), "known", net)
        assert (lam, eta) == (0.5, None)
        assert len(cells) == 1
        direct = solve(build_known_network(tab, net, HyperParams(lam=0.5, d_max=2)))
        assert best.objective == pytest.approx(direct.objective)
        assert cells[0].aic == pytest.approx(aic(tab, direct.dags))

    def test_known_mode_cell_count(self):
        tab = worst_table(3, 2, 2, seed=1)
        _, _, cells = grid_search(tab, DEFAULT_GRID, DEFAULT_GRID, "known", UnitNetwork.complete(2))
        assert len(cells) == 5

    def test_unknown_mode_runs_twenty_five_cells(self):
        tab = worst_table(3, 2, 2, seed=2)
        _, _, cells = grid_search(tab, DEFAULT_GRID, DEFAULT_GRID, mode="unknown")
        assert len(cells) == 25
        assert all(c.status == "optimal" for c in cells)

    def test_best_cell_maximises_reported_aic(self):
        tab = worst_table(3, 2, 2, seed=3)
        (lam, eta), _, cells = grid_search(tab, DEFAULT_GRID, DEFAULT_GRID, mode="unknown")
        best_aic = max(c.aic for c in cells if c.aic is not None)
        winning = [c for c in cells if c.aic == best_aic]
        assert any((c.lam, c.eta) == (lam, eta) for c in winning)
        # tie-break: no winning cell has a strictly smaller (lam, eta)
        assert all((lam, eta if eta is not None else -1) <= (c.lam, c.eta) for c in winning)

    def test_failed_cells_are_excluded(self):
        tab = worst_table(3, 2, 2, seed=4)
        net = UnitNetwork.complete(2)
        opts = SolveOptions(node_limit=0)
        with pytest.raises(RuntimeError, match="no grid cell"):
            grid_search(tab, (0.5,), (0.0,), "known", net, opts=opts)

    def test_parallel_jobs_match_serial(self):
        tab = worst_table(3, 2, 2, seed=5)
        net = UnitNetwork.complete(2)
        serial = grid_search(tab, (0.0, 0.5), (0.0,), "known", net, jobs=1)
        parallel = grid_search(tab, (0.0, 0.5), (0.0,), "known", net, jobs=2)
        assert serial[0] == parallel[0]
        assert [c.aic for c in serial[2]] == pytest.approx([c.aic for c in parallel[2]])

    def test_hard_equality_selected_when_units_share_truth(self):
        # shared chain 1->2->3; per-unit noise sometimes flips a local argmax
        # to the empty set, which costs the criterion its multiplicity bonus;
        # pooling across units repairs those flips, so the hard-equality cell
        # should win on most replicates
        p, k = 3, 4
        chain = {2: [1], 3: [2]}
        truth = collection(*([chain] * k), p=p)
        wins = 0
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            entries = {}
            for unit in range(1, k + 1):
                for child in range(1, p + 1):
                    true_set = truth.dag(unit).parents_of(child)
                    per = {EMPTY: float(rng.normal(0.0, 0.05))}
                    if true_set != EMPTY:
                        per[true_set] = float(rng.normal(0.05, 0.05))
                    entries[(unit, child)] = per
            tab = LocalScoreTable(k, p, 2, entries)
            (lam, _), _, _ = grid_search(tab, (0.0, math.inf), (0.0,), "known", UnitNetwork.complete(k))
            if math.isinf(lam):
                wins += 1
        assert wins > 5
