import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from treewalk import laws, network, rng, rwre, trees


def test_polya_examples():
    assert rwre.polya_sequence_prob(2, (1, 1)) == Fraction(1, 3)
    assert rwre.polya_sequence_prob(3, (1, 2)) == Fraction(1, 12)
    for d in (2, 3, 5):
        for c in range(1, d + 1):
            assert rwre.polya_sequence_prob(d, (c,)) == Fraction(1, d)


def test_dirichlet_examples_and_moment():
    assert rwre.dirichlet_exit_prob(2, (1, 1)) == Fraction(1, 3)
    assert rwre.dirichlet_exit_prob(3, (1, 2, 1)) == rwre.dirichlet_exit_prob(3, (1, 1, 2))
    # E sum_c p_c^2 over the uniform simplex equals 2/(d+1)
    d = 2
    second = sum(rwre.dirichlet_exit_prob(d, (c, c)) for c in range(1, d + 1))
    assert second == Fraction(2, d + 1) == Fraction(2, 3)


def test_polya_equals_dirichlet_and_normalizes():
    for d in (2, 3):
        for length in (1, 2, 3, 4):
            total = Fraction(0)
            for seq in itertools.product(range(1, d + 1), repeat=length):
                p = rwre.polya_sequence_prob(d, seq)
                assert p == rwre.dirichlet_exit_prob(d, seq)
                total += p
            assert total == 1


def test_polya_exchangeable():
    seqs = [(1, 2, 1, 1), (1, 1, 2, 1), (1, 1, 1, 2), (2, 1, 1, 1)]
    vals = {rwre.polya_sequence_prob(2, s) for s in seqs}
    assert len(vals) == 1


def test_polya_validates_colors():
    with pytest.raises(ValueError):
        rwre.polya_sequence_prob(2, (3,))
    with pytest.raises(ValueError):
        rwre.dirichlet_exit_prob(2, (0,))


def test_reinforced_single_edge_bookkeeping():
    star1 = rwre.SymmetricSource(trees.uniform_profile(1, 1))
    st = rwre.reinforced_episode(star1, steps=6, seed=1)
    # forced oscillation: 6 crossings = 3 completed return trips
    assert st.urn.weights[(0,)] == 4
    assert st.urn.pending[(0,)] is False
    assert st.returns_to_root == 3
    st = rwre.reinforced_episode(star1, steps=5, seed=1)
    assert st.urn.pending[(0,)] is True
    assert st.urn.weights[(0,)] == 3


def test_reinforced_first_exit_uniform_and_second_exit_reinforced():
    star = rwre.SymmetricSource(trees.uniform_profile(2, 1))
    first = [0, 0]
    same = 0
    n = 20_000
    for ep in range(n):
        st = rwre.reinforced_episode(star, steps=4, seed=rng.derive_key(0xF00, ep))
        exits = st.exit_sequences[()]
        first[exits[0]] += 1
        same += exits[0] == exits[1]
    se_first = 3 * math.sqrt(0.25 / n)
    assert abs(first[0] / n - 0.5) <= se_first
    p = same / n
    assert abs(p - 2 / 3) <= 3 * math.sqrt(p * (1 - p) / n)


def test_equivalence_exact_table_and_chi_square():
    rep = rwre.equivalence_test(2, 2, 20_000, seed=31)
    assert rep.table[(1, 1)] == Fraction(1, 3)
    assert rep.table[(1, 2)] == Fraction(1, 6)
    assert rep.table[(2, 1)] == Fraction(1, 6)
    assert rep.table[(2, 2)] == Fraction(1, 3)
    assert rep.both_pass
    rep3 = rwre.equivalence_test(3, 1, 5_000, seed=32)
    assert all(p == Fraction(1, 3) for p in rep3.table.values())
    assert rep3.both_pass


def test_lazy_environment_interleaving_invariance():
    # expand the same vertices in two different orders; every stored value
    # and the digest of the whole memo must agree
    prof = trees.uniform_profile(2, 4)
    env_a = rwre.LazyEnvironment(rwre.SymmetricSource(prof), laws.Gaussian(0, 1), seed=5)
    a_root = env_a.child_logs((), 0.0)
    a_left = env_a.child_logs((0,), a_root[0])
    a_right = env_a.child_logs((1,), a_root[1])

    env_b = rwre.LazyEnvironment(rwre.SymmetricSource(prof), laws.Gaussian(0, 1), seed=5)
    b_root = env_b.child_logs((), 0.0)
    b_right = env_b.child_logs((1,), b_root[1])
    b_left = env_b.child_logs((0,), b_root[0])

    assert np.array_equal(a_root, b_root)
    assert np.array_equal(a_left, b_left)
    assert np.array_equal(a_right, b_right)
    assert env_a.memo_digest() == env_b.memo_digest()


def test_walk_episode_stop_conditions():
    src = rwre.SymmetricSource(trees.uniform_profile(2, 3))
    env = rwre.LazyEnvironment(src, laws.constant(0), seed=1)
    out = rwre.walk_episode(env, target_depth=3, max_steps=1, episode_seed=4)
    assert out.tag in {"returned", "exhausted"}  # one step cannot reach depth 3
    out = rwre.walk_episode(env, target_depth=1, max_steps=10, episode_seed=4)
    assert out.tag == "reached_depth" and out.max_depth == 1 and out.steps == 1


def test_gamblers_ruin_escape():
    src = rwre.SymmetricSource(trees.path_profile(64))
    for depth, episodes in ((4, 20_000), (16, 20_000), (64, 12_000)):
        p, se = rwre.escape_frequency(src, laws.constant(0), depth, episodes, seed=depth)
        assert abs(p - 1.0 / depth) <= 3 * max(se, 1e-9)


def test_binary_escape_matches_network_oracle():
    src = rwre.SymmetricSource(trees.uniform_profile(2, 2))
    p, se = rwre.escape_frequency(src, laws.constant(0), 2, 20_000, seed=8)
    tree = trees.build_symmetric(trees.uniform_profile(2, 2))
    oracle = network.escape_probability(tree, network.ConductanceMap(np.zeros(tree.n_vertices)))
    assert abs(p - oracle) <= 3 * se


def test_scaling_engine_matches_explicit_reduction():
    prof = trees.uniform_profile(2, 4)
    logs = rwre.symmetric_environment_logs(prof, laws.Gaussian(0, 1), seed=3, env_index=0,
                                           depth=4)
    ceff, escape = rwre.conductance_from_logs(prof, logs)
    tree = trees.build_symmetric(prof)
    log_c = np.zeros(tree.n_vertices)
    for level, arr in enumerate(logs, start=1):
        for pos, v in enumerate(tree.level(level)):
            log_c[v] = arr[pos]
    cmap = network.ConductanceMap(log_c)
    assert ceff == pytest.approx(network.effective_conductance(tree, cmap), rel=1e-12)
    assert escape == pytest.approx(network.escape_probability(tree, cmap), rel=1e-12)


def test_scaling_environments_nest_across_depths():
    prof = trees.uniform_profile(2, 6)
    shallow = rwre.symmetric_environment_logs(prof, laws.rademacher(), 7, 0, depth=3)
    deep = rwre.symmetric_environment_logs(prof, laws.rademacher(), 7, 0, depth=6)
    for k in range(3):
        assert np.array_equal(shallow[k], deep[k])


def test_scaling_degenerate_medians_exact():
    prof = trees.uniform_profile(2, 8)
    rep = rwre.conductance_scaling_mc(prof, laws.constant(0), [2, 4, 8], 5, seed=1)
    for row in rep.rows:
        expected = 1.0 / sum(2.0 ** -i for i in range(1, row.depth + 1))
        assert row.conductance_q[1] == pytest.approx(expected, rel=1e-12)
        assert row.conductance_q[0] == row.conductance_q[2]  # no randomness at all


def test_scaling_worker_count_invariance():
    prof = trees.uniform_profile(2, 5)
    a = rwre.conductance_scaling_mc(prof, laws.rademacher(), [2, 5], 16, seed=3, threads=1)
    b = rwre.conductance_scaling_mc(prof, laws.rademacher(), [2, 5], 16, seed=3, threads=4)
    assert [r.conductance_q for r in a.rows] == [r.conductance_q for r in b.rows]


def test_stable_decay_single_step_matches_tail_oracle():
    from conftest import stable_tail

    rep = rwre.stable_ray_decay(1.5, 1.0, [1], 200_000, seed=12)
    row = rep.rows[0]
    exact = stable_tail(1.5, 1.0)
    assert abs(row.estimate - exact) <= 3.5 * max(row.stderr, 1e-9)


def test_stable_decay_monotone_in_drift():
    estimates = []
    for c in (0.5, 1.0, 2.0, 4.0):
        rep = rwre.stable_ray_decay(1.5, c, [2], 50_000, seed=13)
        estimates.append(rep.rows[0].estimate)
    assert all(a >= b for a, b in zip(estimates, estimates[1:]))


def test_stable_decay_worker_invariance_and_slope():
    a = rwre.stable_ray_decay(1.5, 1.0, [5, 10, 20], 30_000, seed=14, threads=1)
    b = rwre.stable_ray_decay(1.5, 1.0, [5, 10, 20], 30_000, seed=14, threads=3)
    assert [(r.n, r.estimate) for r in a.rows] == [(r.n, r.estimate) for r in b.rows]
    assert -2.5 <= a.slope <= -0.8
