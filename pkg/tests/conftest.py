"""Shared fixtures and independent test oracles."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import rankdata

from botimpact.graph import DirectedGraph


def graph_of(edges, nodes=()) -> DirectedGraph:
    """Build a graph from (source, target[, weight]) tuples plus extra nodes."""
    g = DirectedGraph()
    for n in nodes:
        g.add_node(n)
    for edge in edges:
        if len(edge) == 2:
            g.add_interaction(edge[0], edge[1])
        else:
            g.add_interaction(edge[0], edge[1], edge[2])
    return g


def random_instance(seed: int, n_lo: int = 10, n_hi: int = 200):
    """Random opinion-dynamics instance: graph, rates, stubborn map, measured.

    Stubborn opinions are drawn from {0, 1}; rates from (0, 10]; between 20%
    and 40% of nodes are stubborn.  Degenerate nodes are left in on purpose:
    preprocessing is part of the solve contract.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    g = DirectedGraph()
    names = [f"n{i:03d}" for i in range(n)]
    for name in names:
        g.add_node(name)
    for i in range(n):
        for j in rng.choice(n, size=int(rng.integers(1, 6)), replace=False):
            if int(j) != i:
                # node i follows node j: edge j -> i
                g.add_interaction(names[int(j)], names[i], 1.0)
    lam = 10.0 - rng.uniform(0.0, 10.0, size=n)  # uniform is half-open, this keeps (0, 10]
    stubborn_count = max(1, int(n * rng.uniform(0.2, 0.4)))
    stubborn = rng.choice(n, size=stubborn_count, replace=False)
    psi = {int(i): float(rng.integers(0, 2)) for i in stubborn}
    measured = rng.uniform(0.0, 1.0, size=n)
    for i, value in psi.items():
        measured[i] = value
    return g, lam, psi, measured


def auc_score(scores_pos, scores_neg) -> float:
    """Tie-aware area under the ROC curve (Mann-Whitney form)."""
    pos = np.asarray(scores_pos, dtype=float)
    neg = np.asarray(scores_neg, dtype=float)
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[: len(pos)].sum() - len(pos) * (len(pos) + 1) / 2.0
    return float(u / (len(pos) * len(neg)))


def permutation_pvalue(a, b, shuffles: int = 100_000, seed: int = 0) -> float:
    """Two-sided permutation test on the difference of means (vectorized)."""
    rng = np.random.default_rng(seed)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pooled = np.concatenate([a, b])
    observed = abs(a.mean() - b.mean())
    hits = 0
    done = 0
    batch = 20_000
    while done < shuffles:
        rows = min(batch, shuffles - done)
        perms = rng.permuted(np.tile(pooled, (rows, 1)), axis=1)
        mean_a = perms[:, : len(a)].mean(axis=1)
        mean_b = perms[:, len(a) :].mean(axis=1)
        hits += int(np.sum(np.abs(mean_a - mean_b) >= observed - 1e-15))
        done += rows
    return (hits + 1) / (shuffles + 1)


@pytest.fixture
def tiny_follower_graph() -> DirectedGraph:
    """Two bots with partially overlapping follower sets."""
    return graph_of(
        [
            ("botA", "f1"),
            ("botA", "f2"),
            ("botB", "f2"),
            ("botB", "f3"),
        ]
    )
