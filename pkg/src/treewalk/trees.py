"""Rooted trees truncated at a fixed depth.

Vertices carry dense integer ids in breadth-first order (root = 0), so level
slices are contiguous ranges and level-synchronous dynamic programs can index
arrays directly.  Every maximal root path reaches the truncation depth
exactly; leaves above it are rejected at construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import rng

DEFAULT_DEGREE_CAP = 64


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class ExplicitTree:
    depth: int
    parent: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]
    depth_of: tuple[int, ...]
    level_offsets: tuple[int, ...]  # level k occupies ids [off[k], off[k+1])

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    def level(self, k: int) -> range:
        return range(self.level_offsets[k], self.level_offsets[k + 1])

    def level_sizes(self) -> list[int]:
        return [len(self.level(k)) for k in range(self.depth + 1)]

    def is_leaf(self, v: int) -> bool:
        return self.depth_of[v] == self.depth

    def leaves(self) -> range:
        return self.level(self.depth)

    def child_counts_by_level(self) -> list[list[int]]:
        return [[len(self.children[v]) for v in self.level(k)] for k in range(self.depth)]

    def to_json(self) -> str:
        return json.dumps({"children": self.child_counts_by_level(), "depth": self.depth})

    def ancestors_to_root(self, v: int) -> list[int]:
        path = []
        while v != 0:
            path.append(v)
            v = self.parent[v]
        path.append(0)
        return path


def _build_from_counts(counts: Sequence[Sequence[int]], degree_cap: int) -> ExplicitTree:
    depth = len(counts)
    if depth == 0:
        raise TreeError("tree must have depth at least 1")
    parent = [-1]
    depth_of = [0]
    children: list[list[int]] = [[]]
    level_offsets = [0, 1]
    prev_level = [0]
    for k, level_counts in enumerate(counts):
        if len(level_counts) != len(prev_level):
            raise TreeError(
                f"level {k} lists {len(level_counts)} child counts for {len(prev_level)} vertices")
        next_level = []
        for v, c in zip(prev_level, level_counts):
            c = int(c)
            if c < 1:
                raise TreeError(
                    f"vertex {v} at depth {k} has {c} children; every maximal path "
                    f"must reach depth {depth}")
            if c > degree_cap:
                raise TreeError(f"vertex {v} exceeds the degree cap {degree_cap}")
            for _ in range(c):
                w = len(parent)
                parent.append(v)
                depth_of.append(k + 1)
                children[v].append(w)
                children.append([])
                next_level.append(w)
        level_offsets.append(len(parent))
        prev_level = next_level
    tree = ExplicitTree(
        depth=depth,
        parent=tuple(parent),
        children=tuple(tuple(c) for c in children),
        depth_of=tuple(depth_of),
        level_offsets=tuple(level_offsets),
    )
    validate_tree(tree)
    return tree


def build_explicit(counts: Sequence[Sequence[int]], degree_cap: int = DEFAULT_DEGREE_CAP) -> ExplicitTree:
    """Build a tree from per-level child-count lists in breadth-first order."""
    return _build_from_counts(counts, degree_cap)


def validate_tree(tree: ExplicitTree) -> None:
    n = tree.n_vertices
    if tree.parent[0] != -1 or tree.depth_of[0] != 0:
        raise TreeError("vertex 0 must be the root")
    for v in range(1, n):
        p = tree.parent[v]
        if not (0 <= p < n) or v not in tree.children[p]:
            raise TreeError(f"parent/child tables disagree at vertex {v}")
        if tree.depth_of[v] != tree.depth_of[p] + 1:
            raise TreeError(f"depth mismatch at vertex {v}")
    for v in range(n):
        d = tree.depth_of[v]
        if d < tree.depth and not tree.children[v]:
            raise TreeError(f"vertex {v} is a leaf above the truncation depth")
        if d == tree.depth and tree.children[v]:
            raise TreeError(f"vertex {v} lies below the truncation depth")
        if not (tree.level_offsets[d] <= v < tree.level_offsets[d + 1]):
            raise TreeError("ids are not in breadth-first level order")


def from_json(text: str, degree_cap: int = DEFAULT_DEGREE_CAP) -> ExplicitTree:
    data = json.loads(text)
    unknown = set(data) - {"children", "depth"}
    if unknown:
        raise TreeError(f"unknown keys in tree file: {sorted(unknown)}")
    tree = build_explicit(data["children"], degree_cap)
    if tree.depth != data.get("depth", tree.depth):
        raise TreeError("declared depth does not match the child-count table")
    return tree


@dataclass(frozen=True)
class GrowthProfile:
    """Per-level growth numbers f(1..N); real values >= 1 are allowed, in
    which case the profile describes a virtual tree that only exists through
    the symmetric recursions."""

    ratios: tuple[Fraction, ...]
    growth_exponent: float | None = None

    def __post_init__(self):
        ratios = tuple(Fraction(r) for r in self.ratios)
        object.__setattr__(self, "ratios", ratios)
        if not ratios:
            raise TreeError("profile must cover at least one level")
        if any(r < 1 for r in ratios):
            raise TreeError("growth numbers must be >= 1")

    @property
    def depth(self) -> int:
        return len(self.ratios)

    @property
    def is_integral(self) -> bool:
        return all(r.denominator == 1 for r in self.ratios)

    def level_sizes(self) -> list[Fraction]:
        """Cumulative products lambda_0 .. lambda_N (lambda_0 = 1)."""
        out = [Fraction(1)]
        for r in self.ratios:
            out.append(out[-1] * r)
        return out

    def level_sizes_float(self) -> list[float]:
        return [float(x) for x in self.level_sizes()]

    def as_floats(self) -> list[float]:
        return [float(r) for r in self.ratios]

    def truncated(self, depth: int) -> "GrowthProfile":
        if depth > self.depth:
            raise TreeError("cannot extend a profile by truncation")
        return GrowthProfile(self.ratios[:depth], self.growth_exponent)

    def describe(self) -> str:
        return ",".join(str(r) for r in self.ratios)


def build_symmetric(profile: GrowthProfile, depth: int | None = None,
                    degree_cap: int = DEFAULT_DEGREE_CAP) -> ExplicitTree:
    """Materialize the spherically symmetric tree of an integer profile."""
    depth = profile.depth if depth is None else depth
    if depth > profile.depth:
        raise TreeError("depth exceeds the profile length")
    ratios = profile.ratios[:depth]
    for r in ratios:
        if r.denominator != 1:
            raise TreeError(
                f"growth number {r} is not an integer; virtual profiles are only "
                f"valid for the symmetric recursions, not for explicit trees")
    counts: list[list[int]] = []
    width = 1
    for r in ratios:
        counts.append([int(r)] * width)
        width *= int(r)
    return _build_from_counts(counts, degree_cap)


def symmetrize_tree(tree: ExplicitTree) -> GrowthProfile:
    """Growth profile f(n) = |level n| / |level n-1| as exact rationals."""
    sizes = tree.level_sizes()
    return GrowthProfile(tuple(Fraction(sizes[k + 1], sizes[k]) for k in range(tree.depth)))


def uniform_profile(branching: int, depth: int) -> GrowthProfile:
    return GrowthProfile((Fraction(branching),) * depth)


def path_profile(depth: int) -> GrowthProfile:
    return GrowthProfile((Fraction(1),) * depth, growth_exponent=0.0)


def polynomial_profile(gamma: float, depth: int) -> GrowthProfile:
    """Integer profile whose level sizes track (n+1)**gamma within a factor
    of two, by doubling the width whenever it falls behind the target."""
    ratios = []
    size = 1
    for n in range(1, depth + 1):
        target = (n + 1) ** gamma
        f = 2 if size < target else 1
        ratios.append(Fraction(f))
        size *= f
    return GrowthProfile(tuple(ratios), growth_exponent=gamma)


def build_galton_watson(offspring: dict[int, Fraction | float], depth: int, seed: int,
                        degree_cap: int = DEFAULT_DEGREE_CAP) -> ExplicitTree:
    """Random tree with i.i.d. child counts, a deterministic function of seed.

    The offspring law must be supported on {1, 2, ...}: conditioning on
    survival-to-depth is achieved by construction rather than by pruning.
    """
    support = sorted(offspring)
    if not support or support[0] < 1:
        raise TreeError("offspring support must be a subset of {1, 2, ...}")
    probs = [float(offspring[k]) for k in support]
    total = sum(probs)
    if abs(total - 1.0) > 1e-12:
        raise TreeError(f"offspring probabilities sum to {total}, not 1")
    cum = []
    acc = 0.0
    for p in probs:
        acc += p
        cum.append(acc)
    cum[-1] = 1.0
    key = rng.derive_key(0x47A1, seed)

    counts: list[list[int]] = []
    width = 1
    vertex = 0
    for _ in range(depth):
        level_counts = []
        for _ in range(width):
            u = rng.uniform_at(key, vertex)
            vertex += 1
            lo = 0
            while cum[lo] < u:
                lo += 1
            level_counts.append(support[lo])
        counts.append(level_counts)
        width = sum(level_counts)
    return _build_from_counts(counts, degree_cap)


def meet(tree: ExplicitTree, a: int, b: int) -> int:
    """Deepest common ancestor of two vertices."""
    n = tree.n_vertices
    if not (0 <= a < n and 0 <= b < n):
        raise TreeError(f"unknown vertex id in meet({a}, {b})")
    while tree.depth_of[a] > tree.depth_of[b]:
        a = tree.parent[a]
    while tree.depth_of[b] > tree.depth_of[a]:
        b = tree.parent[b]
    while a != b:
        a = tree.parent[a]
        b = tree.parent[b]
    return a


@dataclass(frozen=True)
class Cutset:
    vertices: frozenset[int]

    def weight(self, w: Callable[[int], float]) -> float:
        return sum(w(v) for v in self.vertices)


def is_antichain_cutset(tree: ExplicitTree, cut: Cutset, min_level: int = 1) -> bool:
    verts = cut.vertices
    if any(tree.depth_of[v] < min_level for v in verts):
        return False
    for v in verts:
        p = tree.parent[v]
        while p != -1:
            if p in verts:
                return False
            p = tree.parent[p]
    for leaf in tree.leaves():
        v = leaf
        hit = False
        while v != -1:
            if v in verts:
                hit = True
                break
            v = tree.parent[v]
        if not hit:
            return False
    return True


def min_cutset(tree: ExplicitTree, weight, min_level: int = 1):
    """Minimum of sum-of-weights over antichain cutsets with all members at
    depth >= min_level.

    weight: callable on vertex ids, or an indexable of per-vertex weights;
    it is only evaluated at depths >= min_level.  Leaf-up recursion; ties
    between cutting at a vertex and delegating to its children are broken
    toward the shallower vertex.  Returns (value, Cutset).
    """
    if not (1 <= min_level <= tree.depth):
        raise TreeError(f"min_level {min_level} outside [1, {tree.depth}]")
    w = weight if callable(weight) else (lambda v: weight[v])

    best: list[float] = [0.0] * tree.n_vertices
    take: list[bool] = [False] * tree.n_vertices
    for v in range(tree.n_vertices - 1, -1, -1):
        d = tree.depth_of[v]
        if tree.is_leaf(v):
            best[v] = float(w(v))
            take[v] = True
            continue
        s = sum(best[c] for c in tree.children[v])
        if d >= min_level and float(w(v)) <= s:
            best[v] = float(w(v))
            take[v] = True
        else:
            best[v] = s
            take[v] = False

    members = []
    stack = [0]
    while stack:
        v = stack.pop()
        if take[v] and tree.depth_of[v] >= min_level:
            members.append(v)
        else:
            stack.extend(tree.children[v])
    return best[0], Cutset(frozenset(members))
