import math
import random
from fractions import Fraction

import numpy as np
import pytest

from treewalk import laws, walk1d


ZERO = walk1d.ZeroBoundary()


def test_stay_above_rademacher_small(rademacher):
    assert walk1d.dp_stay_above(rademacher, ZERO, 1, 1).mid == 0.5
    assert walk1d.dp_stay_above(rademacher, ZERO, 1, 2).mid == 0.5
    assert walk1d.dp_stay_above(rademacher, ZERO, 1, 4).mid == 0.375


def test_hitting_tail_small(rademacher):
    assert walk1d.dp_hitting_tail(rademacher, 1, 2).mid == 0.75
    # a barrier at least as deep as the horizon cannot be crossed
    for n in (3, 5):
        assert walk1d.dp_hitting_tail(rademacher, n, n).mid == 1.0
    z = walk1d.dp_stay_above(rademacher, ZERO, 1, 2)
    t = walk1d.dp_hitting_tail(rademacher, 0, 2)
    assert z.lower == t.lower and z.upper == t.upper


def test_dp_matches_path_enumeration():
    from conftest import enumerate_stay_above

    rnd = random.Random(21)
    for trial in range(12):
        n_atoms = rnd.randint(2, 3)
        atoms = tuple(rnd.sample(range(-2, 3), n_atoms))
        weights = [rnd.randint(1, 4) for _ in range(n_atoms)]
        law = laws.FiniteLattice(atoms, tuple(Fraction(w, sum(weights)) for w in weights))
        n = rnd.randint(3, 9)
        a = rnd.randint(1, n)
        thr = [None] * (n + 1)
        for k in range(a, n + 1):
            thr[k] = rnd.randint(-2, 1)
        exact = enumerate_stay_above(law, thr, n)
        # go through the raw DP so arbitrary thresholds are exercised
        out, _, _ = walk1d._run_lattice_dp(law, n, thr, 12.0, [n])
        lo, up = out[n]
        assert lo - 1e-12 <= float(exact) <= up + 1e-12


def test_dp_matches_path_enumeration_deeper(rademacher):
    from conftest import enumerate_stay_above

    n = 14
    thr = [None] + [0] * n
    exact = enumerate_stay_above(rademacher, thr, n)  # 2**14 paths
    bracket = walk1d.dp_stay_above(rademacher, ZERO, 1, n)
    assert bracket.lower - 1e-15 <= float(exact) <= bracket.upper + 1e-15


def test_stay_above_monotone_in_horizon_and_boundary(rademacher):
    grid = [2, 4, 8, 16]
    br = walk1d.dp_stay_above_grid(rademacher, ZERO, 1, grid)
    vals = [br[n].mid for n in grid]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    small = walk1d.dp_stay_above(rademacher, walk1d.PowerBoundary(0.5, 0.2), 1, 16)
    large = walk1d.dp_stay_above(rademacher, walk1d.PowerBoundary(1.0, 0.4), 1, 16)
    assert large.mid <= small.mid + 1e-15


def test_conditional_moment_examples(rademacher):
    assert walk1d.dp_conditional_moment(rademacher, 1, 2) == 1.0
    assert walk1d.dp_conditional_moment(rademacher, 2, 2) == 2.0
    ratio = walk1d.dp_conditional_moment(rademacher, 4096, 2) / 4096
    assert 1.5 <= ratio <= 2.05


def test_hitting_tail_reflection_oracle(rademacher):
    # P(stay >= -h) = P(S_n in [-h, h+1]) for the unit lattice, by reflection
    for n in (256, 1024):
        for h in (0, 1, 2, 4):
            bracket = walk1d.dp_hitting_tail(rademacher, h, n)
            exact = sum(math.comb(n, (n + x) // 2) / 2 ** n
                        for x in range(-h, h + 2) if (n + x) % 2 == 0)
            assert bracket.mid == pytest.approx(exact, abs=1e-12)


def test_barrier_sandwich_window(rademacher):
    for n in (256, 1024, 4096):
        for h in (1, 2, 4):
            v = math.sqrt(n) * walk1d.dp_hitting_tail(rademacher, h, n).mid
            assert 0.55 <= v / (h + 1) <= 1.1


def test_summability_verdicts():
    v, partial = walk1d.summability_verdict(walk1d.PowerBoundary(1, 0.25), 100)
    assert v is walk1d.Verdict.CONVERGES
    v, _ = walk1d.summability_verdict(walk1d.PowerBoundary(1, 0.5), 100)
    assert v is walk1d.Verdict.DIVERGES
    v, partial = walk1d.summability_verdict(walk1d.PowerLogBoundary(1, 0.5, -2), 10_000)
    assert v is walk1d.Verdict.CONVERGES
    # integral-test oracle: sum 1/(n log^2(n+1)) <= first term + int dx/(x log^2 x)
    bound = 1.0 / math.log(2.0) ** 2 + 1.0 / math.log(2.0)
    assert partial[-1] <= bound
    # and the dyadic tail increments shrink (Cauchy behaviour)
    assert partial[-1] - partial[len(partial) // 2] < 0.15
    v, _ = walk1d.summability_verdict(walk1d.TabulatedBoundary((1.0,) * 50), 50)
    assert v is walk1d.Verdict.UNDETERMINED


def test_boundary_validation():
    with pytest.raises(walk1d.BoundaryError):
        walk1d.validate_boundary(walk1d.TabulatedBoundary((1.0, 0.5)), 1, 2)
    with pytest.raises(walk1d.BoundaryError):
        walk1d.validate_boundary(walk1d.TabulatedBoundary((-1.0,)), 1, 1)
    walk1d.validate_boundary(walk1d.PowerBoundary(1, 0.5), 1, 100)


def test_bracket_warning_for_small_cap(rademacher):
    with pytest.warns(RuntimeWarning, match="cap_multiplier"):
        walk1d.dp_stay_above(rademacher, ZERO, 1, 256, cap_multiplier=4.0)


def test_mc_matches_dp_and_symmetry(rademacher):
    est, se = walk1d.mc_stay_above(laws.Gaussian(0, 1), ZERO, 1, 1, 40_000, seed=2)
    assert abs(est - 0.5) <= 3 * se
    est, se = walk1d.mc_stay_above(rademacher, ZERO, 1, 4, 40_000, seed=3)
    assert abs(est - 0.375) <= 3 * se


def test_mc_worker_count_invariance(rademacher):
    a = walk1d.mc_stay_above(rademacher, ZERO, 1, 8, 10_000, seed=9, threads=1)
    b = walk1d.mc_stay_above(rademacher, ZERO, 1, 8, 10_000, seed=9, threads=4)
    assert a == b


def test_backward_push_values(rademacher):
    assert walk1d.backward_push(rademacher) == 0.0
    assert walk1d.backward_push(laws.Gaussian(0, 1)) == 0.0
    # the gamma-function route can round a hair below 1 near lambda = 0
    assert walk1d.backward_push(laws.LogExponentialRatio()) == pytest.approx(0.0, abs=1e-12)
    assert walk1d.backward_push(laws.constant(-3)) == pytest.approx(3.0, abs=1e-9)
    law = laws.FiniteLattice((1, -1), (Fraction(1, 3), Fraction(2, 3)))
    assert walk1d.backward_push(law) == pytest.approx(math.log(3 / (2 * math.sqrt(2))), abs=1e-10)


def test_backward_push_mixture_inequality():
    base = laws.FiniteLattice((1, -1), (Fraction(1, 4), Fraction(3, 4)))
    beta = walk1d.backward_push(base)
    for q in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
        mix = laws.FiniteLattice(
            (1, 0, -1), (q * Fraction(1, 4), 1 - q, q * Fraction(3, 4)))
        assert walk1d.backward_push(mix) <= beta + 1e-12


def test_backward_push_rejects_stable():
    with pytest.raises(laws.MgfDivergence, match="stable"):
        walk1d.backward_push(laws.SymmetricStable(1.5))


def test_asymptotics_report_small(rademacher):
    rep = walk1d.asymptotics_report(rademacher, ZERO, [4], n_f=1)
    row = rep.rows[0]
    assert row.n == 4
    scaled = row.scaled()
    assert scaled[0] == pytest.approx(2 * 0.375)
    assert scaled[1] == pytest.approx(2 * 0.375)


def test_find_boundary_start_zero_boundary(rademacher):
    n_f, found = walk1d.find_boundary_start(rademacher, ZERO, 64)
    assert found and n_f == 1
