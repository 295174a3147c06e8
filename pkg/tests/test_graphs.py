import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointdag.graphs import (
    Dag,
    DagCollection,
    HyperParams,
    UnitNetwork,
    is_acyclic,
    log_joint_prior_unnormalized,
    log_multiplicity,
    log_regularity,
    objective_value,
    shd,
    total_pairwise_shd,
)
from jointdag.scores import LocalScoreTable

from conftest import EMPTY, collection, fs


def dag(p, parents):
    return Dag.from_parents(p, parents)


class TestDagBasics:
    def test_self_parent_rejected(self):
        with pytest.raises(ValueError):
            dag(2, {1: [1]})

    def test_out_of_range_parent_rejected(self):
        with pytest.raises(ValueError):
            dag(2, {1: [3]})

    def test_parents_view(self):
        g = dag(3, {2: [1], 3: [1, 2]})
        assert g.parents == {1: EMPTY, 2: fs(1), 3: fs(1, 2)}
        assert list(g.edges()) == [(1, 2), (1, 3), (2, 3)]
        assert g.edge_count() == 3


class TestIsAcyclic:
    def test_chain(self):
        assert is_acyclic(dag(3, {2: [1], 3: [2]}))

    def test_two_cycle(self):
        assert not is_acyclic(dag(2, {1: [2], 2: [1]}))

    def test_empty_graph(self):
        assert is_acyclic(Dag.empty(5))

    def test_long_cycle(self):
        assert not is_acyclic(dag(4, {1: [4], 2: [1], 3: [2], 4: [3]}))


def random_dag(rng, p):
    """Random DAG via a random topological order."""
    order = rng.permutation(p) + 1
    parents = {}
    for pos, v in enumerate(order):
        earlier = [int(u) for u in order[:pos]]
        take = [u for u in earlier if rng.random() < 0.4]
        parents[int(v)] = take
    return dag(p, parents)


class TestShd:
    def test_identity(self):
        g = dag(3, {2: [1]})
        assert shd(g, g) == 0

    def test_one_extra_edge(self):
        g1 = dag(3, {2: [1]})
        g2 = dag(3, {2: [1], 3: [1]})
        assert shd(g1, g2) == 1

    def test_reversed_edge_counts_twice(self):
        g1 = dag(2, {1: [2]})
        g2 = dag(2, {2: [1]})
        assert shd(g1, g2) == 2

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            shd(Dag.empty(2), Dag.empty(3))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6))
    def test_metric_axioms_on_random_triples(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_dag(rng, 4) for _ in range(3))
        assert shd(a, b) == shd(b, a)
        assert (shd(a, b) == 0) == (a == b)
        assert shd(a, c) <= shd(a, b) + shd(b, c)


class TestLogRegularity:
    def test_identical_zero_for_any_penalty(self):
        g = dag(3, {2: [1]})
        for lam in (0.0, 2.0, math.inf):
            assert log_regularity(g, g, lam) == 0.0

    def test_one_mismatch_scalar(self):
        g1 = dag(3, {2: [1]})
        g2 = dag(3, {})
        assert log_regularity(g1, g2, 2.0) == -2.0

    def test_infinite_penalty_on_mismatch(self):
        g1 = dag(3, {2: [1]})
        g2 = dag(3, {})
        assert log_regularity(g1, g2, math.inf) == -math.inf

    def test_matrix_penalty_indexes_parent_child(self):
        lam = np.zeros((3, 3))
        lam[0, 1] = 5.0  # edge 1 -> 2
        g1 = dag(3, {2: [1]})
        g2 = dag(3, {})
        assert log_regularity(g1, g2, lam) == -5.0
        lam[0, 1] = 0.0
        assert log_regularity(g1, g2, lam) == 0.0

    def test_scalar_equals_shd_scaling(self):
        rng = np.random.default_rng(3)
        g1, g2 = random_dag(rng, 4), random_dag(rng, 4)
        assert log_regularity(g1, g2, 0.5) == pytest.approx(-0.5 * shd(g1, g2))


class TestLogMultiplicity:
    def test_binomial_value_p4_size1(self):
        assert log_multiplicity(fs(2), 4, 2) == pytest.approx(-math.log(4))

    def test_empty_set_is_free(self):
        assert log_multiplicity(EMPTY, 4, 2) == 0.0

    def test_above_cap_is_impossible(self):
        assert log_multiplicity(fs(1, 2, 3), 4, 2) == -math.inf


class TestJointPrior:
    def test_all_flat_is_zero(self):
        gs = collection({}, {}, p=3)
        a = UnitNetwork.complete(2)
        hp = HyperParams(lam=0.0, eta=0.0, d_max=2)
        assert log_joint_prior_unnormalized(gs, a, hp) == 0.0

    def test_direct_sum_decomposition(self):
        gs = collection({2: [1], 3: [2]}, {3: [1]}, p=3)
        a = UnitNetwork.complete(2)
        hp = HyperParams(lam=0.7, eta=0.25, d_max=2)
        expected = -0.7 * shd(gs.dag(1), gs.dag(2))
        for g in gs.dags:
            for pi in g.parent_sets:
                expected += log_multiplicity(pi, 3, 2)
        expected += 0.25  # one network edge
        assert log_joint_prior_unnormalized(gs, a, hp) == pytest.approx(expected)

    def test_exceeding_in_degree_cap(self):
        gs = collection({4: [1, 2, 3]}, p=4)
        hp = HyperParams(lam=0.0, d_max=2)
        assert log_joint_prior_unnormalized(gs, UnitNetwork.empty(1), hp) == -math.inf

    def test_infinite_eta_contributes_dropped_constant(self):
        gs = collection({}, {}, p=2)
        a = UnitNetwork.complete(2)
        hp = HyperParams(eta=math.inf, d_max=2)
        assert log_joint_prior_unnormalized(gs, a, hp) == 0.0


def table_for(gs, values):
    entries = {}
    p, k = gs.p, gs.k
    for unit in range(1, k + 1):
        for child in range(1, p + 1):
            per = {EMPTY: 0.0}
            pi = gs.dag(unit).parents_of(child)
            per[pi] = values.get((unit, child), 0.0)
            entries[(unit, child)] = per
    return LocalScoreTable(k, p, p - 1, entries)


class TestObjectiveValue:
    def test_decoupled_is_score_sum(self):
        gs = collection({2: [1]}, {3: [2]}, p=3)
        tab = table_for(gs, {(1, 2): 1.5, (2, 3): -0.5})
        hp = HyperParams(lam=0.0, d_max=2)
        a = UnitNetwork.complete(2)
        assert objective_value(gs, a, tab, hp) == pytest.approx(1.0)

    def test_hand_evaluated_penalty(self):
        gs = collection({2: [1]}, {}, p=2)
        tab = table_for(gs, {(1, 2): 3.0})
        hp = HyperParams(lam=2.0, d_max=1)
        a = UnitNetwork.complete(2)
        # one mismatched edge between the units
        assert objective_value(gs, a, tab, hp) == pytest.approx(3.0 - 2.0)

    def test_unknown_mode_empty_network_is_score_sum(self):
        gs = collection({2: [1]}, {}, p=2)
        tab = table_for(gs, {(1, 2): 3.0})
        hp = HyperParams(lam=2.0, eta=0.75, d_max=1)
        a = UnitNetwork.empty(2)
        assert objective_value(gs, a, tab, hp, mode="unknown") == pytest.approx(3.0)

    def test_unknown_mode_adds_density_reward(self):
        gs = collection({}, {}, p=2)
        tab = table_for(gs, {})
        hp = HyperParams(lam=0.0, eta=0.75, d_max=1)
        a = UnitNetwork.complete(2)
        assert objective_value(gs, a, tab, hp, mode="unknown") == pytest.approx(0.75)
        assert objective_value(gs, a, tab, hp, mode="known") == pytest.approx(0.0)

    def test_missing_entry_is_infeasible(self):
        gs = collection({2: [1], 3: [1, 2]}, p=3)
        tab = table_for(collection({2: [1]}, p=3), {})  # lacks {1,2} for child 3
        hp = HyperParams(d_max=2)
        assert objective_value(gs, UnitNetwork.empty(1), tab, hp) == -math.inf

    def test_scalar_penalty_equals_shd_identity(self):
        rng = np.random.default_rng(9)
        dags = tuple(random_dag(rng, 3) for _ in range(3))
        gs = DagCollection(dags)
        entries = {}
        for unit in range(1, 4):
            for child in range(1, 4):
                per = {EMPTY: float(rng.standard_normal())}
                pi = gs.dag(unit).parents_of(child)
                if pi not in per:
                    per[pi] = float(rng.standard_normal())
                entries[(unit, child)] = per
        tab = LocalScoreTable(3, 3, 2, entries)
        hp = HyperParams(lam=0.5, d_max=2)
        a = UnitNetwork.complete(3)
        score_sum = sum(
            tab.score_of(u, i, gs.dag(u).parents_of(i)) for u in range(1, 4) for i in range(1, 4)
        )
        expected = score_sum - 0.5 * total_pairwise_shd(gs, a)
        assert objective_value(gs, a, tab, hp) == pytest.approx(expected, abs=1e-12)


class TestUnitNetwork:
    def test_complete_and_empty(self):
        assert len(UnitNetwork.complete(4).edges) == 6
        assert len(UnitNetwork.empty(4).edges) == 0

    def test_pair_normalisation(self):
        n = UnitNetwork.from_pairs(3, [(3, 1)])
        assert n.has_edge(1, 3) and n.has_edge(3, 1)
        assert n.neighbors(1) == (3,)

    def test_bad_pair_rejected(self):
        with pytest.raises(ValueError):
            UnitNetwork(2, frozenset({(1, 1)}))


class TestHyperParams:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            HyperParams(lam=-0.5)
        with pytest.raises(ValueError):
            HyperParams(eta=-1.0)
        with pytest.raises(ValueError):
            HyperParams(d_max=0)

    def test_pair_overrides(self):
        hp = HyperParams(lam=1.0, lam_pairs={(1, 2): 3.0}, eta=0.5, eta_pairs={(1, 3): 2.0})
        assert hp.lam_value(1, 2, 2, 1) == 3.0
        assert hp.lam_value(1, 2, 1, 3) == 1.0
        assert hp.eta_value(3, 1) == 2.0
        assert hp.eta_value(1, 2) == 0.5

    def test_matrix_slice(self):
        m = np.full((2, 2), 0.25)
        hp = HyperParams(lam_pairs={(1, 2): m})
        assert hp.lam_value(1, 2, 1, 2) == 0.25
