"""Random conductance networks on explicit trees.

An environment attaches to every non-root vertex the conductance of its
parent edge, exp(S(v)), where S is the running sum of i.i.d. labels along the
root path.  Conductances are held as logs so deep environments with drift
cannot overflow; all network reductions run in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .laws import Law
from .trees import Cutset, ExplicitTree, min_cutset

_ENV_TAG = 0x0E17


@dataclass(frozen=True)
class ConductanceMap:
    """log-conductance of the parent edge per vertex (entry 0 unused)."""

    log_c: np.ndarray

    def conductance(self, v: int) -> float:
        return float(math.exp(self.log_c[v]))

    def scaled(self, factor: float) -> "ConductanceMap":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        out = self.log_c.copy()
        out[1:] += math.log(factor)
        return ConductanceMap(out)


def labels_to_environment(tree: ExplicitTree, labels: np.ndarray) -> ConductanceMap:
    """Prefix-sum per-vertex labels X(v) down the tree: log C(v) = S(v)."""
    log_c = np.zeros(tree.n_vertices)
    for v in range(1, tree.n_vertices):
        log_c[v] = log_c[tree.parent[v]] + labels[v]
    return ConductanceMap(log_c)


def sample_environment(tree: ExplicitTree, law: Law, seed: int) -> ConductanceMap:
    """Draw i.i.d. labels per non-root vertex (a pure function of seed and
    the vertex id) and accumulate them along root paths."""
    key = rng.derive_key(_ENV_TAG, seed)
    streams = np.arange(1, tree.n_vertices, dtype=np.uint64)
    labels = np.zeros(tree.n_vertices)
    if tree.n_vertices > 1:
        labels[1:] = law.sample(key, streams, 1)[:, 0]
    return labels_to_environment(tree, labels)


def recover_labels(tree: ExplicitTree, kernel: "TransitionKernel") -> dict[int, float]:
    """Invert the kernel back to the labels X(v) = log q(p, v) - log q(p, g)
    for vertices of depth >= 2, where p is the parent and g the grandparent."""
    out = {}
    for v in range(1, tree.n_vertices):
        p = tree.parent[v]
        if p == 0:
            continue
        g = tree.parent[p]
        out[v] = math.log(kernel.prob(p, v)) - math.log(kernel.prob(p, g))
    return out


@dataclass(frozen=True)
class TransitionKernel:
    neighbors: tuple[tuple[int, ...], ...]
    probs: tuple[tuple[float, ...], ...]

    def prob(self, v: int, w: int) -> float:
        try:
            return self.probs[v][self.neighbors[v].index(w)]
        except ValueError:
            return 0.0

    def row(self, v: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
        return self.neighbors[v], self.probs[v]


def transition_kernel(tree: ExplicitTree, cond: ConductanceMap) -> TransitionKernel:
    """Nearest-neighbour kernel with moves proportional to the incident edge
    conductances; the root redistributes over its children only."""
    neighbors = []
    probs = []
    log_c = cond.log_c
    for v in range(tree.n_vertices):
        nbrs: list[int] = []
        logs: list[float] = []
        if v != 0:
            nbrs.append(tree.parent[v])
            logs.append(log_c[v])
        for c in tree.children[v]:
            nbrs.append(c)
            logs.append(log_c[c])
        arr = np.asarray(logs)
        w = np.exp(arr - arr.max())
        w /= w.sum()
        neighbors.append(tuple(nbrs))
        probs.append(tuple(float(x) for x in w))
    return TransitionKernel(tuple(neighbors), tuple(probs))


def _log_subtree_conductance(tree: ExplicitTree, log_c: np.ndarray) -> np.ndarray:
    """log of the effective conductance from each vertex's parent edge down
    to the leaf level, seen through that edge."""
    out = np.empty(tree.n_vertices)
    for v in range(tree.n_vertices - 1, 0, -1):
        if tree.is_leaf(v):
            out[v] = log_c[v]
        else:
            below = np.logaddexp.reduce([out[c] for c in tree.children[v]])
            # series: 1/C = 1/c_edge + 1/C_below
            out[v] = -np.logaddexp(-log_c[v], -below)
    return out


def log_effective_conductance(tree: ExplicitTree, cond: ConductanceMap) -> float:
    sub = _log_subtree_conductance(tree, cond.log_c)
    return float(np.logaddexp.reduce([sub[c] for c in tree.children[0]]))


def effective_conductance(tree: ExplicitTree, cond: ConductanceMap) -> float:
    """Effective conductance from the root to the leaf level by leaf-up
    series/parallel reduction."""
    return math.exp(log_effective_conductance(tree, cond))


def escape_probability(tree: ExplicitTree, cond: ConductanceMap) -> float:
    """P(walk started at the root reaches the leaf level before returning),
    the ratio of the effective conductance to the total root-edge conductance."""
    log_ceff = log_effective_conductance(tree, cond)
    root_edges = np.asarray([cond.log_c[c] for c in tree.children[0]])
    return float(math.exp(log_ceff - np.logaddexp.reduce(root_edges)))


def bottleneck_bound(tree: ExplicitTree, cond: ConductanceMap) -> tuple[float, Cutset]:
    """Tightest cutset bound on the root-to-leaves conductance: minimize over
    antichain cutsets the sum of per-vertex prefix-minimum conductances."""
    log_c = cond.log_c
    prefix_min = np.empty(tree.n_vertices)
    prefix_min[0] = math.inf
    for v in range(1, tree.n_vertices):
        prefix_min[v] = min(prefix_min[tree.parent[v]], log_c[v])
    return min_cutset(tree, lambda v: math.exp(prefix_min[v]), 1)
