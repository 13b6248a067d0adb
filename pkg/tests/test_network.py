import math
import random
from fractions import Fraction

import numpy as np
import pytest

from treewalk import laws, network, rng, trees
from treewalk.acceptance import random_tree


def unit_map(tree):
    return network.ConductanceMap(np.zeros(tree.n_vertices))


def test_environment_zero_labels_gives_unit_conductances():
    t = trees.build_symmetric(trees.uniform_profile(2, 3))
    env = network.sample_environment(t, laws.constant(0), seed=1)
    assert np.allclose(env.log_c[1:], 0.0)


def test_environment_constant_drift_telescopes():
    t = trees.build_symmetric(trees.uniform_profile(2, 4))
    env = network.sample_environment(t, laws.constant(3), seed=1)
    for v in range(1, t.n_vertices):
        assert env.log_c[v] == pytest.approx(3.0 * t.depth_of[v])


def test_environment_star_label_frequencies():
    t = trees.build_explicit([[2]])
    vals = []
    for seed in range(4000):
        env = network.sample_environment(t, laws.rademacher(), seed)
        vals.extend(env.log_c[1:])
    freq = np.mean([v > 0 for v in vals])
    assert abs(freq - 0.5) <= 3 * math.sqrt(0.25 / len(vals))


def test_effective_conductance_examples():
    single = trees.build_explicit([[1]])
    c = network.ConductanceMap(np.asarray([0.0, math.log(3.5)]))
    assert network.effective_conductance(single, c) == pytest.approx(3.5)

    path2 = trees.build_symmetric(trees.path_profile(2))
    assert network.effective_conductance(path2, unit_map(path2)) == pytest.approx(0.5)

    bin2 = trees.build_symmetric(trees.uniform_profile(2, 2))
    assert network.effective_conductance(bin2, unit_map(bin2)) == pytest.approx(4.0 / 3.0)


def test_effective_conductance_binary_closed_form():
    for n in (2, 4, 8):
        t = trees.build_symmetric(trees.uniform_profile(2, n))
        expected = 1.0 / sum(2.0 ** -i for i in range(1, n + 1))
        assert network.effective_conductance(t, unit_map(t)) == pytest.approx(
            expected, rel=1e-12)


def test_escape_probability_examples_and_scale_invariance():
    path2 = trees.build_symmetric(trees.path_profile(2))
    assert network.escape_probability(path2, unit_map(path2)) == pytest.approx(0.5)
    bin2 = trees.build_symmetric(trees.uniform_profile(2, 2))
    assert network.escape_probability(bin2, unit_map(bin2)) == pytest.approx(2.0 / 3.0)
    env = network.sample_environment(bin2, laws.Gaussian(0, 1), seed=5)
    base = network.escape_probability(bin2, env)
    scaled = network.escape_probability(bin2, env.scaled(7.3))
    assert scaled == pytest.approx(base, rel=1e-12)


def test_escape_matches_harmonic_solve():
    from conftest import harmonic_escape

    rnd = random.Random(13)
    for i in range(15):
        t = random_tree(rnd, max_depth=5, max_children=3, width_cap=150)
        env = network.sample_environment(t, laws.Gaussian(0, 1), seed=i)
        assert network.escape_probability(t, env) == pytest.approx(
            harmonic_escape(t, env), abs=1e-10)
        assert 0.0 < network.escape_probability(t, env) <= 1.0


def test_escape_matches_harmonic_solve_large_tree():
    from conftest import harmonic_escape

    t = trees.build_symmetric(trees.uniform_profile(2, 11))  # 4095 vertices
    env = network.sample_environment(t, laws.rademacher(), seed=40)
    assert network.escape_probability(t, env) == pytest.approx(
        harmonic_escape(t, env), abs=1e-10)


def test_bottleneck_examples():
    path2 = trees.build_symmetric(trees.path_profile(2))
    value, cut = network.bottleneck_bound(path2, unit_map(path2))
    assert value == pytest.approx(1.0)
    bin2 = trees.build_symmetric(trees.uniform_profile(2, 2))
    value, cut = network.bottleneck_bound(bin2, unit_map(bin2))
    assert value == pytest.approx(2.0)
    assert cut.vertices == frozenset(bin2.level(1))


def test_bottleneck_tiny_edge_on_path():
    t = trees.build_symmetric(trees.path_profile(3))
    logc = np.asarray([0.0, 0.0, math.log(1e-9), 0.0])
    cmap = network.ConductanceMap(logc)
    value, _ = network.bottleneck_bound(t, cmap)
    assert value == pytest.approx(1e-9, rel=1e-9)
    assert network.effective_conductance(t, cmap) <= value


def test_bottleneck_dominates_on_random_instances():
    rnd = random.Random(31)
    for i in range(100):
        t = random_tree(rnd, max_depth=5, max_children=3, width_cap=100)
        env = network.sample_environment(t, laws.LogExponentialRatio(), seed=i)
        bound, _ = network.bottleneck_bound(t, env)
        assert network.effective_conductance(t, env) <= bound * (1 + 1e-9)


def test_rayleigh_monotonicity():
    rnd = random.Random(17)
    t = random_tree(rnd, max_depth=4, max_children=3)
    env = network.sample_environment(t, laws.Gaussian(0, 1), seed=2)
    base = network.effective_conductance(t, env)
    for _ in range(20):
        v = rnd.randrange(1, t.n_vertices)
        bumped = env.log_c.copy()
        bumped[v] += 0.5
        assert network.effective_conductance(
            t, network.ConductanceMap(bumped)) >= base - 1e-12


def test_transition_kernel_rows():
    bin2 = trees.build_symmetric(trees.uniform_profile(2, 2))
    kernel = network.transition_kernel(bin2, unit_map(bin2))
    nbrs, probs = kernel.row(1)
    assert nbrs == (0, 3, 4)
    assert probs == pytest.approx((1 / 3, 1 / 3, 1 / 3))
    for v in range(bin2.n_vertices):
        assert sum(kernel.row(v)[1]) == pytest.approx(1.0, abs=1e-12)


def test_kernel_projective_invariance():
    t = trees.build_symmetric(trees.uniform_profile(2, 3))
    env = network.sample_environment(t, laws.Gaussian(0, 1), seed=8)
    k1 = network.transition_kernel(t, env)
    k2 = network.transition_kernel(t, env.scaled(2.0))
    for v in range(t.n_vertices):
        assert k1.row(v)[1] == pytest.approx(k2.row(v)[1], abs=1e-12)


def test_recover_labels_inverts_sampling():
    rnd = random.Random(23)
    for i in range(5):
        t = random_tree(rnd, max_depth=4, max_children=3)
        env = network.sample_environment(t, laws.Gaussian(0, 1), seed=100 + i)
        kernel = network.transition_kernel(t, env)
        recovered = network.recover_labels(t, kernel)
        for v, x in recovered.items():
            truth = env.log_c[v] - env.log_c[t.parent[v]]
            assert x == pytest.approx(truth, abs=1e-12)
        deep = [v for v in range(1, t.n_vertices) if t.depth_of[v] >= 2]
        assert set(recovered) == set(deep)
