"""Shared independent oracles for the test suite.

Everything here recomputes expected values by brute force (path enumeration,
antichain enumeration, dense linear solves) so the library's dynamic
programs are checked against a second, structurally different route.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest


def enumerate_stay_above(law, thresholds, n):
    """P(S_k >= thresholds[k] for k = 1..n when threshold is not None), by
    exhaustive enumeration over the lattice support (exact rationals)."""
    total = Fraction(0)
    atoms = law.atoms
    probs = law.probs
    for seq in itertools.product(range(len(atoms)), repeat=n):
        s = 0
        ok = True
        p = Fraction(1)
        for k, idx in enumerate(seq, start=1):
            s += atoms[idx]
            p *= probs[idx]
            t = thresholds[k]
            if t is not None and s < t:
                ok = False
                break
        if ok:
            total += p
    return total


def enumerate_cutsets(tree, min_level, cap=200_000):
    """All antichain cutsets with members at depth >= min_level, as frozensets."""

    def sets_for(v):
        out = []
        if tree.depth_of[v] >= min_level:
            out.append(frozenset([v]))
        if not tree.is_leaf(v):
            child_sets = [sets_for(c) for c in tree.children[v]]
            for combo in itertools.product(*child_sets):
                merged = frozenset().union(*combo)
                out.append(merged)
                if len(out) > cap:
                    raise RuntimeError("cutset enumeration blew past the cap")
        return out

    if tree.depth_of[0] >= min_level:
        return sets_for(0)
    child_sets = [sets_for(c) for c in tree.children[0]]
    out = []
    for combo in itertools.product(*child_sets):
        out.append(frozenset().union(*combo))
        if len(out) > cap:
            raise RuntimeError("cutset enumeration blew past the cap")
    return out


def brute_force_survival(tree, law, target, advance_by_value):
    """Exact survival by enumerating every label assignment on the tree."""
    from treewalk import percolation

    dyn = percolation.make_dynamics(law, target)
    n_labels = tree.n_vertices - 1
    atoms = law.atoms
    probs = law.probs
    total = Fraction(0)
    for assign in itertools.product(range(len(atoms)), repeat=n_labels):
        p = Fraction(1)
        for idx in assign:
            p *= probs[idx]
        state = {0: dyn.initial}
        alive_leaf = False
        for v in range(1, tree.n_vertices):
            parent_state = state.get(tree.parent[v])
            if parent_state is None:
                state[v] = None
                continue
            s2 = advance_by_value(dyn, parent_state, tree.depth_of[v], atoms[assign[v - 1]])
            state[v] = s2
            if s2 is not None and tree.is_leaf(v):
                alive_leaf = True
        if alive_leaf:
            total += p
    return total


def brute_force_box_survival(tree, retention):
    """Exact independent-retention survival by enumerating open/closed
    patterns over all non-root vertices."""
    n = tree.n_vertices - 1
    total = Fraction(0)
    for bits in range(1 << n):
        p = Fraction(1)
        open_v = {0}
        for v in range(1, tree.n_vertices):
            q = Fraction(retention[tree.depth_of[v] - 1])
            if bits >> (v - 1) & 1:
                p *= q
                if tree.parent[v] in open_v:
                    open_v.add(v)
            else:
                p *= 1 - q
        if p == 0:
            continue
        if any(leaf in open_v for leaf in tree.leaves()):
            total += p
    return total


def harmonic_escape(tree, cond):
    """Escape probability by solving the harmonic equations directly."""
    from scipy.sparse import lil_matrix
    from scipy.sparse.linalg import spsolve
    from treewalk import network as net

    kernel = net.transition_kernel(tree, cond)
    interior = [v for v in range(1, tree.n_vertices) if not tree.is_leaf(v)]
    index = {v: i for i, v in enumerate(interior)}
    n = len(interior)
    rhs = np.zeros(n)
    mat = lil_matrix((n, n))
    for v in interior:
        i = index[v]
        mat[i, i] = 1.0
        nbrs, probs = kernel.row(v)
        for w, q in zip(nbrs, probs):
            if w == 0:
                continue  # absorbed at the root with value 0
            if tree.is_leaf(w):
                rhs[i] += q
            else:
                mat[i, index[w]] -= q
    h = spsolve(mat.tocsr(), rhs) if n else np.zeros(0)

    nbrs, probs = kernel.row(0)
    total = 0.0
    for w, q in zip(nbrs, probs):
        total += q * (1.0 if tree.is_leaf(w) else h[index[w]])
    return total


def stable_tail(alpha: float, c: float) -> float:
    """P(X > c) for the symmetric stable law, via the library integrator."""
    from scipy.stats import levy_stable

    return float(levy_stable.sf(c, alpha, 0.0))


@pytest.fixture
def rademacher():
    from treewalk import laws

    return laws.rademacher()
