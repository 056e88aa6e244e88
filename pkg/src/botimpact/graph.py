"""Directed weighted graphs with the information-flow edge convention.

An edge ``(u, v)`` means information flows from ``u`` to ``v``: v follows
or retweets u.  Consequently the *in*-neighbors of a node are the accounts
it follows (its "following"), and the *out*-neighbors are its followers /
retweeters.

Nodes are referenced externally by string account ids and internally by
dense integer indices.  Adjacency is stored, once frozen, as offset-indexed
arrays sorted by (source, target) plus the transpose, so neighbor scans are
O(degree) and the structure stays compact at tens of millions of edges.
A frozen graph is immutable and safe for concurrent reads.
"""

from __future__ import annotations

import gzip
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np


class GraphError(ValueError):
    """Invalid graph construction or query."""


class DirectedGraph:
    """Directed weighted graph, mutable until frozen.

    Parallel interactions accumulate into a single edge weight at
    insertion time.  Self-loops and non-positive weights are rejected.
    """

    def __init__(self) -> None:
        self._index: dict[str, int] = {}
        self._labels: list[str] = []
        self._edges: dict[tuple[int, int], float] = {}
        self._frozen = False
        # CSR-style views, built by freeze()
        self.out_offsets: np.ndarray | None = None
        self.out_targets: np.ndarray | None = None
        self.out_weights: np.ndarray | None = None
        self.in_offsets: np.ndarray | None = None
        self.in_sources: np.ndarray | None = None
        self.in_weights: np.ndarray | None = None

    # -- construction ------------------------------------------------------

    def add_node(self, label: str) -> int:
        """Register an account id, returning its dense index (idempotent)."""
        idx = self._index.get(label)
        if idx is not None:
            return idx
        if self._frozen:
            raise GraphError("graph is frozen; cannot add nodes")
        idx = len(self._labels)
        self._index[label] = idx
        self._labels.append(label)
        return idx

    def add_interaction(self, source: str, target: str, weight: float = 1.0) -> None:
        """Accumulate ``weight`` onto the edge source -> target.

        Raises GraphError on self-loops or non-positive weight.
        """
        if source == target:
            raise GraphError(f"self-loop rejected for account {source!r}")
        if weight <= 0:
            raise GraphError(f"edge weight must be positive, got {weight}")
        if self._frozen:
            raise GraphError("graph is frozen; cannot add edges")
        u = self.add_node(source)
        v = self.add_node(target)
        key = (u, v)
        self._edges[key] = self._edges.get(key, 0.0) + weight

    def freeze(self) -> "DirectedGraph":
        """Build the sorted adjacency index; further mutation raises."""
        if self._frozen:
            return self
        n = len(self._labels)
        m = len(self._edges)
        src = np.empty(m, dtype=np.int64)
        tgt = np.empty(m, dtype=np.int64)
        w = np.empty(m, dtype=np.float64)
        for k, (uv, wt) in enumerate(self._edges.items()):
            src[k], tgt[k] = uv
            w[k] = wt
        order = np.lexsort((tgt, src))
        src, tgt, w = src[order], tgt[order], w[order]
        self.out_offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.out_offsets, src + 1, 1)
        np.cumsum(self.out_offsets, out=self.out_offsets)
        self.out_targets = tgt
        self.out_weights = w

        order_t = np.lexsort((src, tgt))
        self.in_offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.in_offsets, tgt + 1, 1)
        np.cumsum(self.in_offsets, out=self.in_offsets)
        self.in_sources = src[order_t]
        self.in_weights = w[order_t]
        self._frozen = True
        return self

    # -- queries -----------------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self._labels)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def total_weight(self) -> float:
        return float(sum(self._edges.values()))

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise GraphError(f"unknown account id {label!r}") from None

    def label(self, idx: int) -> str:
        return self._labels[idx]

    @property
    def labels(self) -> list[str]:
        return self._labels

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def has_edge(self, source: str, target: str) -> bool:
        return (self.index(source), self.index(target)) in self._edges

    def weight(self, source: str, target: str) -> float:
        try:
            return self._edges[(self.index(source), self.index(target))]
        except KeyError:
            raise GraphError(f"no edge {source!r} -> {target!r}") from None

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield (source index, target index, weight) sorted by (source, target)."""
        self.freeze()
        for k in range(len(self.out_targets)):
            u = int(np.searchsorted(self.out_offsets, k, side="right") - 1)
            yield u, int(self.out_targets[k]), float(self.out_weights[k])

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sources, targets, weights) arrays sorted by (source, target)."""
        self.freeze()
        n = self.node_count
        counts = np.diff(self.out_offsets)
        src = np.repeat(np.arange(n, dtype=np.int64), counts)
        return src, self.out_targets, self.out_weights

    def following_of(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """In-neighbors of node ``i`` (the accounts whose content reaches i).

        Returns (source indices, edge weights); O(in-degree).
        """
        self.freeze()
        if not 0 <= i < self.node_count:
            raise GraphError(f"unknown node index {i}")
        lo, hi = self.in_offsets[i], self.in_offsets[i + 1]
        return self.in_sources[lo:hi], self.in_weights[lo:hi]

    def followers_of(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Out-neighbors of node ``i`` (the accounts that receive i's content)."""
        self.freeze()
        if not 0 <= i < self.node_count:
            raise GraphError(f"unknown node index {i}")
        lo, hi = self.out_offsets[i], self.out_offsets[i + 1]
        return self.out_targets[lo:hi], self.out_weights[lo:hi]

    def induced_subgraph(self, keep: Iterable[str]) -> "DirectedGraph":
        """Subgraph on the given account ids, edge weights unchanged.

        Node order in the result follows the parent's index order, so
        graphs built with sorted node insertion stay canonically ordered.
        Unknown ids are rejected.
        """
        keep_idx = sorted(self.index(label) for label in set(keep))
        sub = DirectedGraph()
        for i in keep_idx:
            sub.add_node(self._labels[i])
        kept = set(keep_idx)
        for (u, v), wt in self._edges.items():
            if u in kept and v in kept:
                sub.add_interaction(self._labels[u], self._labels[v], wt)
        return sub


# -- edge list files -------------------------------------------------------


def open_maybe_gzip(path: str | Path, mode: str = "rt"):
    """Open a file, transparently decoding gzip (detected by magic bytes)."""
    path = Path(path)
    if "r" in mode:
        with open(path, "rb") as fh:
            magic = fh.read(2)
        if magic == b"\x1f\x8b":
            return gzip.open(path, mode, encoding="utf-8" if "t" in mode else None)
        return open(path, mode, encoding="utf-8" if "t" in mode else None)
    if str(path).endswith(".gz"):
        return gzip.open(path, mode, encoding="utf-8" if "t" in mode else None)
    return open(path, mode, encoding="utf-8" if "t" in mode else None)


def load_edge_list(path: str | Path) -> DirectedGraph:
    """Read a tab-separated ``source<TAB>target[<TAB>weight]`` edge file.

    Missing weight defaults to 1.  Node lines (single column) register an
    isolated node, which keeps induced subgraphs well-defined for accounts
    that have no edges.
    """
    graph = DirectedGraph()
    with open_maybe_gzip(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) == 1:
                graph.add_node(parts[0])
                continue
            if len(parts) not in (2, 3):
                raise GraphError(f"{path}:{lineno}: expected 1-3 tab-separated fields")
            weight = 1.0
            if len(parts) == 3:
                try:
                    weight = float(parts[2])
                except ValueError:
                    raise GraphError(f"{path}:{lineno}: bad weight {parts[2]!r}") from None
            graph.add_interaction(parts[0], parts[1], weight)
    return graph


def save_edge_list(graph: DirectedGraph, path: str | Path) -> None:
    """Write a graph as a tab-separated edge list (isolated nodes as bare lines)."""
    graph.freeze()
    src, tgt, w = graph.edge_arrays()
    touched = np.zeros(graph.node_count, dtype=bool)
    touched[src] = True
    touched[tgt] = True
    with open_maybe_gzip(path, "wt") as fh:
        for k in range(len(src)):
            fh.write(
                f"{graph.label(int(src[k]))}\t{graph.label(int(tgt[k]))}\t{w[k]:.12g}\n"
            )
        for i in range(graph.node_count):
            if not touched[i]:
                fh.write(f"{graph.label(i)}\n")
