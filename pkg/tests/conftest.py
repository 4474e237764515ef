import sys

import numpy as np
import pytest

from motsink import CircleGraph, DiscreteMeasure, TreeGraph


def random_measure(rng, n, d, low=0.0, high=1.0):
    w = rng.uniform(0.1, 1.0, n)
    return DiscreteMeasure(rng.uniform(low, high, (n, d)), w / w.sum())


def random_tree(rng, K):
    return TreeGraph([-1] + [int(rng.integers(0, k)) for k in range(1, K)])


def brute_force_plan(measures, edges, eta, potentials):
    """Plan entries by explicit iteration over every multi-index."""
    shape = tuple(m.n for m in measures)
    out = np.zeros(shape)
    for idx in np.ndindex(*shape):
        c = sum(np.sum((measures[a].points[idx[a]] - measures[b].points[idx[b]]) ** 2)
                for a, b in edges)
        val = np.exp(-c / eta)
        for k, i in enumerate(idx):
            val *= potentials[k][i]
        out[idx] = val
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
