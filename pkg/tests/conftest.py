import numpy as np
import pytest

from jointdag.graphs import Dag, DagCollection, HyperParams, UnitNetwork
from jointdag.scores import LocalScoreTable
from jointdag.simulate import worst_case_scores

EMPTY = frozenset()


def fs(*xs):
    return frozenset(xs)


def worst_table(p, k, d_max, seed):
    return worst_case_scores(p, k, d_max, np.random.default_rng(seed))


@pytest.fixture
def tiny_table():
    """P=2, K=1: one optional edge per direction, scores favour both."""
    return LocalScoreTable(
        1,
        2,
        1,
        {
            (1, 1): {EMPTY: 0.0, fs(2): 1.0},
            (1, 2): {EMPTY: 0.0, fs(1): 1.0},
        },
    )


@pytest.fixture
def two_unit_table():
    """K=2, P=2: unit 1 favours the edge 1->2 by +1, unit 2 disfavours it by 0.4."""
    return LocalScoreTable(
        2,
        2,
        1,
        {
            (1, 1): {EMPTY: 0.0, fs(2): 0.0},
            (1, 2): {EMPTY: 0.0, fs(1): 1.0},
            (2, 1): {EMPTY: 0.0, fs(2): 0.0},
            (2, 2): {EMPTY: 0.0, fs(1): -0.4},
        },
    )


def chain_dag(p):
    return Dag.from_parents(p, {i: [i - 1] for i in range(2, p + 1)})


def collection(*parent_maps, p):
    return DagCollection(tuple(Dag.from_parents(p, pm) for pm in parent_maps))
