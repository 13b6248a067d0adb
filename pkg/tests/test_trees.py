import math
import random
from fractions import Fraction

import pytest

from treewalk import rng, trees


def test_build_symmetric_binary_depth2():
    t = trees.build_symmetric(trees.GrowthProfile((2, 2)))
    assert t.level_sizes() == [1, 2, 4]
    assert t.n_vertices == 7


def test_build_symmetric_path():
    t = trees.build_symmetric(trees.GrowthProfile((1, 1, 1)))
    assert t.level_sizes() == [1, 1, 1, 1]
    assert len(t.leaves()) == 1


def test_build_symmetric_mixed_profile():
    t = trees.build_symmetric(trees.GrowthProfile((1, 2, 1)))
    assert t.level_sizes() == [1, 1, 2, 2]


def test_build_symmetric_rejects_virtual_profile():
    with pytest.raises(trees.TreeError, match="virtual"):
        trees.build_symmetric(trees.GrowthProfile((1, 2, Fraction(3, 2))))


def test_build_explicit_counterexample_tree():
    t = trees.build_explicit([[1], [2], [2, 1]])
    assert t.level_sizes() == [1, 1, 2, 3]
    trees.validate_tree(t)


def test_build_explicit_small_cases():
    star = trees.build_explicit([[2]])
    assert star.depth == 1 and star.n_vertices == 3
    path2 = trees.build_explicit([[1], [1]])
    assert path2.depth == 2 and path2.n_vertices == 3


def test_build_explicit_rejects_ragged_depth():
    # a vertex with zero children above the truncation depth is a ragged leaf
    with pytest.raises(trees.TreeError):
        trees.build_explicit([[2], [1, 0]])
    with pytest.raises(trees.TreeError):
        trees.build_explicit([[1], [1, 1]])  # wrong width at level 1


def test_degree_cap_enforced():
    with pytest.raises(trees.TreeError, match="degree cap"):
        trees.build_explicit([[65]])
    t = trees.build_explicit([[65]], degree_cap=128)
    assert t.n_vertices == 66


def test_galton_watson_deterministic_law_gives_full_tree():
    t = trees.build_galton_watson({2: 1}, depth=3, seed=123)
    assert t.level_sizes() == [1, 2, 4, 8]


def test_galton_watson_seed_determinism():
    a = trees.build_galton_watson({1: 0.5, 2: 0.5}, depth=5, seed=9)
    b = trees.build_galton_watson({1: 0.5, 2: 0.5}, depth=5, seed=9)
    assert a.children == b.children
    c = trees.build_galton_watson({1: 0.5, 2: 0.5}, depth=5, seed=10)
    assert a.children != c.children or a.n_vertices != c.n_vertices


def test_galton_watson_rejects_extinction():
    with pytest.raises(trees.TreeError):
        trees.build_galton_watson({0: 0.5, 2: 0.5}, depth=3, seed=1)


def test_galton_watson_mean_growth():
    # mean level-8 size of the uniform {1,2} offspring law is 1.5**8
    sizes = []
    for seed in range(10_000):
        t = trees.build_galton_watson({1: 0.5, 2: 0.5}, depth=8, seed=seed)
        sizes.append(len(t.leaves()))
    mean = sum(sizes) / len(sizes)
    sd = math.sqrt(sum((s - mean) ** 2 for s in sizes) / (len(sizes) - 1))
    se = sd / math.sqrt(len(sizes))
    assert abs(mean - 1.5 ** 8) <= 3 * se


def test_symmetrize_tree_counterexample_rationals():
    t = trees.build_explicit([[1], [2], [2, 1]])
    prof = trees.symmetrize_tree(t)
    assert prof.ratios == (Fraction(1), Fraction(2), Fraction(3, 2))
    assert not prof.is_integral


def test_symmetrize_roundtrip_exact():
    rnd = random.Random(5)
    for _ in range(20):
        depth = rnd.randint(1, 4)
        ratios = tuple(Fraction(rnd.randint(1, 3)) for _ in range(depth))
        prof = trees.GrowthProfile(ratios)
        t = trees.build_symmetric(prof)
        assert trees.symmetrize_tree(t).ratios == ratios


def test_meet_basics():
    t = trees.build_symmetric(trees.GrowthProfile((2, 2)))
    v = t.level(2)[0]
    assert trees.meet(t, v, v) == v
    assert trees.meet(t, v, 0) == 0
    left, right = t.level(1)
    a = t.children[left][0]
    b = t.children[right][0]
    assert trees.meet(t, a, b) == 0
    with pytest.raises(trees.TreeError):
        trees.meet(t, 0, 99)


def test_meet_commutative_and_depth_bounded():
    rnd = random.Random(11)
    from treewalk.acceptance import random_tree

    for _ in range(10):
        t = random_tree(rnd, max_depth=5, max_children=3)
        ids = rnd.sample(range(t.n_vertices), min(8, t.n_vertices))
        for a in ids:
            for b in ids:
                m = trees.meet(t, a, b)
                assert m == trees.meet(t, b, a)
                assert t.depth_of[m] <= min(t.depth_of[a], t.depth_of[b])


def test_min_cutset_binary_dyadic_weights():
    t = trees.build_symmetric(trees.GrowthProfile((2, 2, 2, 2)))
    value, cut = trees.min_cutset(t, lambda v: 2.0 ** -t.depth_of[v], 1)
    assert value == pytest.approx(1.0, abs=1e-15)
    assert trees.is_antichain_cutset(t, cut, 1)


def test_min_cutset_unit_weights_counterexample():
    t = trees.build_explicit([[1], [2], [2, 1]])
    value, cut = trees.min_cutset(t, lambda v: 1.0, 1)
    assert value == 1.0
    assert cut.vertices == frozenset([1])


def test_min_cutset_path_takes_cheapest_allowed_vertex():
    # weights decrease with depth, so the optimum is the single deepest vertex
    n = 9
    t = trees.build_symmetric(trees.path_profile(n))
    for m in (1, 3, 5):
        value, cut = trees.min_cutset(t, lambda v: t.depth_of[v] ** -0.5, m)
        assert value == pytest.approx(n ** -0.5)
        (v,) = cut.vertices
        assert t.depth_of[v] == n


def test_min_cutset_min_level_bounds():
    t = trees.build_symmetric(trees.GrowthProfile((2, 2)))
    with pytest.raises(trees.TreeError):
        trees.min_cutset(t, lambda v: 1.0, 3)
    with pytest.raises(trees.TreeError):
        trees.min_cutset(t, lambda v: 1.0, 0)


def _cutset_count(t):
    counts = [0] * t.n_vertices
    for v in range(t.n_vertices - 1, -1, -1):
        if t.is_leaf(v):
            counts[v] = 1
        else:
            prod = 1
            for c in t.children[v]:
                prod *= counts[c]
                prod = min(prod, 10 ** 9)
            counts[v] = 1 + prod
    return counts[0]


def test_min_cutset_matches_enumeration():
    from conftest import enumerate_cutsets
    from treewalk.acceptance import random_tree

    rnd = random.Random(77)
    checked = 0
    for i in range(60):
        t = random_tree(rnd, max_depth=4, max_children=3, width_cap=40)
        if t.n_vertices > 200 or _cutset_count(t) > 30_000:
            continue
        checked += 1
        weights = [0.0] + [rnd.uniform(0.1, 2.0) for _ in range(t.n_vertices - 1)]
        for min_level in range(1, t.depth + 1):
            value, cut = trees.min_cutset(t, lambda v: weights[v], min_level)
            assert trees.is_antichain_cutset(t, cut, min_level)
            best = min(sum(weights[v] for v in c)
                       for c in enumerate_cutsets(t, min_level))
            assert value == pytest.approx(best, rel=1e-12)
            assert sum(weights[v] for v in cut.vertices) == pytest.approx(value, rel=1e-12)
    assert checked >= 10


def test_json_roundtrip():
    t = trees.build_explicit([[2], [1, 2], [1, 1, 1]])
    back = trees.from_json(t.to_json())
    assert back.children == t.children
    assert back.depth == t.depth


def test_json_rejects_unknown_keys():
    with pytest.raises(trees.TreeError, match="unknown"):
        trees.from_json('{"children": [[1]], "depth": 1, "extra": 2}')


def test_polynomial_profile_tracks_target():
    prof = trees.polynomial_profile(2.0, 64)
    sizes = prof.level_sizes_float()
    for n in range(4, 65):
        target = (n + 1) ** 2
        assert target / 2 <= sizes[n] <= 2 * target


def test_generated_trees_validate():
    rnd = random.Random(3)
    from treewalk.acceptance import random_tree

    for _ in range(20):
        trees.validate_tree(random_tree(rnd, max_depth=5, max_children=3))
    for seed in range(5):
        trees.validate_tree(trees.build_galton_watson({1: 0.3, 2: 0.4, 3: 0.3}, 5, seed))
