"""Executable acceptance battery.

Each criterion is a deterministic, self-contained check with its tolerance
pinned in code.  ``run_criteria`` executes a subset (default: all) and
reports one pass/fail record per criterion; the CLI ``accept`` subcommand
and the test suite both drive this module.
"""

from __future__ import annotations

import filecmp
import itertools
import math
import os
import random
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import capacity, gauges, laws, network, percolation, rng, rwre, trees, walk1d

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    seconds: float
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# deterministic random instances shared by several criteria


def random_tree(rnd: random.Random, max_depth: int, max_children: int,
                width_cap: int = 400) -> trees.ExplicitTree:
    depth = rnd.randint(2, max_depth)
    counts = []
    width = 1
    for _ in range(depth):
        row = [rnd.randint(1, max_children) for _ in range(width)]
        if sum(row) > width_cap:
            row = [1] * width
        counts.append(row)
        width = sum(row)
    return trees.build_explicit(counts)


def random_lattice_law(rnd: random.Random, max_atoms: int = 3) -> laws.FiniteLattice:
    n = rnd.randint(2, max_atoms)
    atoms = rnd.sample(range(-2, 3), n)
    weights = [rnd.randint(1, 5) for _ in range(n)]
    total = sum(weights)
    return laws.FiniteLattice(tuple(atoms), tuple(Fraction(w, total) for w in weights))


def random_target(rnd: random.Random, law: laws.FiniteLattice, depth: int) -> percolation.Target:
    if rnd.random() < 0.5:
        qs = tuple(Fraction(rnd.randint(1, 8), 8) for _ in range(depth))
        return percolation.BoxTarget(qs)
    max_atom = max(law.atoms)
    lower = []
    for k in range(1, depth + 1):
        if rnd.random() < 0.5:
            lower.append(float("-inf"))
        else:
            lower.append(Fraction(rnd.randint(-2, max(0, min(2, k * max_atom)))))
    upper = []
    for k in range(1, depth + 1):
        if rnd.random() < 0.75:
            upper.append(float("inf"))
        else:
            base = lower[k - 1] if lower[k - 1] != float("-inf") else -2
            upper.append(Fraction(int(base) + rnd.randint(1, 4)))
    return percolation.SumBand(tuple(lower), tuple(upper))


def chain_instance(index: int):
    """Deterministic (tree, law, target) with positive terminal marginal."""
    rnd = random.Random(rng.derive_key(0xC2A1, index))
    for _ in range(80):
        tree = random_tree(rnd, max_depth=4, max_children=3)
        law = random_lattice_law(rnd)
        target = random_target(rnd, law, tree.depth)
        margs = percolation.marginals(law, target, tree.depth)
        if float(margs[-1]) > 0:
            return tree, law, target
    raise RuntimeError(f"no feasible chain instance at index {index}")


# ---------------------------------------------------------------------------
# criteria


def crit_counterexample_exactness() -> tuple[bool, dict]:
    eps = Fraction(1, 100)
    target, law = percolation.counterexample_target(eps)
    tree = percolation.counterexample_tree()
    chain = percolation.symmetrization_chain(tree, law, target)
    expected = 1 - 2 * eps ** 2 - 32 * eps ** 3
    ok = (
        chain.p_b_gamma_exact == expected
        and chain.p_b_gamma_exact == Fraction(124971, 125000)
        and chain.p_sb_gamma_exact is not None
        and chain.p_sb_gamma_exact <= 1 - 3 * eps ** 2
        and chain.p_sb_gamma_exact < chain.p_b_gamma_exact
    )
    return ok, {
        "p_b_gamma": str(chain.p_b_gamma_exact),
        "p_sb_gamma": str(chain.p_sb_gamma_exact),
        "upper_bound_1_minus_3eps2": str(Fraction(9997, 10000)),
        "swap_strict": chain.swap_counterexample,
    }


def crit_symmetrization_chain_sweep(n_instances: int = 500) -> tuple[bool, dict]:
    failures = []
    swaps = 0
    for i in range(n_instances):
        tree, law, target = chain_instance(i)
        chain = percolation.symmetrization_chain(tree, law, target, slack=1e-10)
        if not chain.chain_holds:
            failures.append(i)
        swaps += chain.swap_counterexample
    return not failures, {
        "instances": n_instances,
        "chain_failures": failures[:10],
        "swap_examples_seen": swaps,
    }


def crit_hitting_tail_limit() -> tuple[bool, dict]:
    n = 4096
    law = laws.rademacher()
    bracket = walk1d.dp_hitting_tail(law, 0.0, n)
    value = math.sqrt(n) * bracket.mid
    exact = math.comb(n, n // 2) / 2 ** n  # central binomial oracle
    rel = abs(value / SQRT_2_OVER_PI - 1.0)
    agrees = abs(bracket.mid - exact) <= 1e-12
    return (rel <= 0.03 and agrees), {
        "sqrt_n_p": value,
        "target": SQRT_2_OVER_PI,
        "relative_error": rel,
        "dp_matches_binomial_oracle": agrees,
    }


def crit_convergent_boundary() -> tuple[bool, dict]:
    law = laws.rademacher()
    f = walk1d.PowerBoundary(1.0, 0.25)
    n_f, found = walk1d.find_boundary_start(law, f, 256)
    lo_n, hi_n = 2 ** 10, 2 ** 17
    brackets = walk1d.dp_stay_above_grid(law, f, n_f, [lo_n, hi_n])
    v_lo = math.sqrt(lo_n) * brackets[lo_n].mid
    v_hi = math.sqrt(hi_n) * brackets[hi_n].mid
    return v_hi >= 0.5 * v_lo, {
        "n_f": n_f, "scan_found": found,
        "sqrt_n_p_at_2^10": v_lo, "sqrt_n_p_at_2^17": v_hi,
        "ratio": v_hi / v_lo, "threshold": 0.5,
    }


def crit_divergent_boundary() -> tuple[bool, dict]:
    law = laws.rademacher()
    f = walk1d.PowerBoundary(1.0, 0.5)
    n_f, found = walk1d.find_boundary_start(law, f, 256)
    lo_n, hi_n = 2 ** 10, 2 ** 16
    brackets = walk1d.dp_stay_above_grid(law, f, n_f, [lo_n, hi_n])
    v_lo = math.sqrt(lo_n) * brackets[lo_n].mid
    v_hi = math.sqrt(hi_n) * brackets[hi_n].mid
    return v_lo >= 2.0 * v_hi, {
        "n_f": n_f, "scan_found": found,
        "sqrt_n_p_at_2^10": v_lo, "sqrt_n_p_at_2^16": v_hi,
        "drop_factor": v_lo / v_hi, "threshold": 2.0,
    }


def crit_conditional_moment() -> tuple[bool, dict]:
    law = laws.rademacher()
    ratios = {n: walk1d.dp_conditional_moment(law, n, 2) / n for n in (256, 1024, 4096)}
    monotone = ratios[256] < ratios[1024] < ratios[4096]
    in_window = 1.5 <= ratios[4096] <= 2.05
    return monotone and in_window, {"ratios": ratios, "window": [1.5, 2.05]}


def crit_barrier_tail_sandwich() -> tuple[bool, dict]:
    # The strict barrier rule (dip below -h) makes the effective barrier depth
    # h+1 on the unit lattice, so the reflection value sqrt(2/pi) is bracketed
    # by sqrt(n) P / (h+1); the raw /h ratio is reported alongside.
    law = laws.rademacher()
    n = 4096
    per_unit = {}
    raw = {}
    ok = True
    for h in (1, 2, 4):
        bracket = walk1d.dp_hitting_tail(law, float(h), n)
        v = math.sqrt(n) * bracket.mid
        per_unit[h] = v / (h + 1)
        raw[h] = v / h
        ok = ok and 0.55 <= per_unit[h] <= 1.1
    return ok, {
        "per_unit_barrier_ratio": per_unit,
        "raw_over_h": raw,
        "window": [0.55, 1.1],
        "reflection_value": SQRT_2_OVER_PI,
    }


def crit_bottleneck_bound(n_instances: int = 1000) -> tuple[bool, dict]:
    law_pool = [laws.rademacher(), laws.Gaussian(0.0, 1.0), laws.LogExponentialRatio()]
    failures = []
    worst = 0.0
    for i in range(n_instances):
        rnd = random.Random(rng.derive_key(0xB0, i))
        tree = random_tree(rnd, max_depth=5, max_children=3, width_cap=120)
        law = law_pool[i % len(law_pool)]
        env = network.sample_environment(tree, law, i)
        ceff = network.effective_conductance(tree, env)
        bound, _ = network.bottleneck_bound(tree, env)
        ratio = ceff / bound if bound > 0 else math.inf
        worst = max(worst, ratio)
        if ceff > bound * (1 + 1e-9):
            failures.append(i)
    return not failures, {"instances": n_instances, "failures": failures[:10],
                          "worst_conductance_over_bound": worst}


def crit_capacity_consistency() -> tuple[bool, dict]:
    worst_energy = 0.0
    energy_fail = []
    for i in range(100):
        rnd = random.Random(rng.derive_key(0xCA9, i))
        tree = random_tree(rnd, max_depth=6, max_children=3)
        gauge = (gauges.PowerGauge(0.5) if i % 2 == 0
                 else gauges.ExpGauge(0.3 + 0.7 * rnd.random()))
        cap_net = capacity.capacity_network(tree, gauge)
        cap_en = capacity.capacity_energy(tree, gauge).capacity
        rel = abs(cap_net - cap_en) / cap_net
        worst_energy = max(worst_energy, rel)
        if rel > 1e-6:
            energy_fail.append(i)

    profiles = [trees.path_profile(4), trees.uniform_profile(2, 4),
                trees.uniform_profile(3, 3), trees.GrowthProfile((1, 2, 3)),
                trees.GrowthProfile((2, 1, 2, 2))]
    gs = [gauges.PowerGauge(0.5), gauges.ExpGauge(math.log(2)), gauges.PowerGauge(1.0)]
    worst_rp = 0.0
    rp_fail = []
    for profile in profiles:
        tree = trees.build_symmetric(profile)
        for gauge in gs:
            cap_net = capacity.capacity_network(tree, gauge)
            _, bound = capacity.symmetric_resistance(profile, gauge)
            rel = abs(bound - 2.0 * cap_net) / max(1e-30, 2.0 * cap_net)
            worst_rp = max(worst_rp, rel)
            if rel > 1e-12:
                rp_fail.append((profile.describe(), gauge.describe()))
    return not energy_fail and not rp_fail, {
        "worst_energy_rel": worst_energy,
        "worst_rp_rel": worst_rp,
        "energy_failures": energy_fail[:5],
        "rp_failures": rp_fail[:5],
    }


def crit_moment_method_bounds() -> tuple[bool, dict]:
    tree = trees.build_symmetric(trees.uniform_profile(2, 8))
    details: dict = {}

    # independent per-level retention at 3/4: pairwise bound holds with g = p
    q = Fraction(3, 4)
    box = percolation.BoxTarget((q,) * 8)
    rep = percolation.survival_exact(tree, None, box)
    p_seq = [float(q) ** k for k in range(1, 9)]
    bounds = percolation.moment_bounds(tree, p_seq, gauges.TabulatedGauge(tuple(p_seq)))
    ok_box = (bounds["second_moment_lower"] <= rep.survival + 1e-12
              and rep.survival <= bounds["first_moment_upper"] + 1e-12)
    details["box"] = {
        "survival": rep.survival,
        "cap_lower": bounds["second_moment_lower"],
        "content_upper": bounds["first_moment_upper"],
    }

    # nonnegative-sum percolation: certify the pair constant then use cap/M
    law = laws.rademacher()
    band = percolation.nonnegative_sums(8)
    rep2 = percolation.survival_exact(tree, law, band)
    margs = [float(p) for p in rep2.marginals]
    m_const = 1.0
    for k in range(8):
        pair = percolation.pair_survival(law, band, 8, k)
        p_meet = 1.0 if k == 0 else margs[k - 1]
        m_const = max(m_const, pair.joint * p_meet / margs[-1] ** 2)
    cap_p = capacity.capacity_network(tree, gauges.TabulatedGauge(tuple(margs)))
    ok_band = rep2.survival >= cap_p / m_const - 1e-12
    content_band = percolation.moment_bounds(
        tree, margs, gauges.TabulatedGauge(tuple(margs)))["first_moment_upper"]
    ok_band = ok_band and rep2.survival <= content_band + 1e-12
    details["nonnegative_sums"] = {
        "survival": rep2.survival,
        "cap_over_m": cap_p / m_const,
        "pair_constant": m_const,
        "content_upper": content_band,
    }
    return ok_box and ok_band, details


def crit_growth_dichotomy() -> tuple[bool, dict]:
    law = laws.rademacher()
    depths = [16, 64, 256]
    quad = rwre.conductance_scaling_mc(trees.polynomial_profile(2.0, 256), law,
                                       depths, 200, seed=1101)
    path = rwre.conductance_scaling_mc(trees.path_profile(256), law, depths, 200, seed=1102)
    q_med = [r.conductance_q[1] for r in quad.rows]
    p_med = [r.conductance_q[1] for r in path.rows]
    ok = (quad.verdict == "transient-like" and path.verdict == "recurrent-like"
          and q_med[-1] >= 0.25 * q_med[0] and p_med[-1] <= 0.05 * p_med[0])
    return ok, {
        "quadratic_medians": dict(zip(depths, q_med)),
        "path_medians": dict(zip(depths, p_med)),
        "quadratic_verdict": quad.verdict,
        "path_verdict": path.verdict,
    }


def crit_urn_equivalence() -> tuple[bool, dict]:
    mismatch = 0
    total = 0
    for d in range(1, 6):
        for length in range(1, 7):
            for seq in itertools.product(range(1, d + 1), repeat=length):
                total += 1
                if rwre.polya_sequence_prob(d, seq) != rwre.dirichlet_exit_prob(d, seq):
                    mismatch += 1
    rep = rwre.equivalence_test(2, 3, 100_000, seed=77)
    freq_ok = abs(rep.first_two_equal_freq - 2.0 / 3.0) <= 3 * rep.first_two_equal_se
    ok = mismatch == 0 and rep.both_pass and freq_ok
    return ok, {
        "sequences_checked": total,
        "closed_form_mismatches": mismatch,
        "reinforced_pvalue": rep.reinforced_pvalue,
        "rwre_pvalue": rep.rwre_pvalue,
        "first_two_equal": rep.first_two_equal_freq,
        "first_two_equal_3se": 3 * rep.first_two_equal_se,
    }


def crit_symmetric_recursion(n_instances: int = 200) -> tuple[bool, dict]:
    worst = 0.0
    failures = []
    for i in range(n_instances):
        rnd = random.Random(rng.derive_key(0x51D, i))
        depth = rnd.randint(1, 4)
        profile = trees.GrowthProfile(tuple(Fraction(rnd.randint(1, 3)) for _ in range(depth)))
        law = random_lattice_law(rnd)
        target = random_target(rnd, law, depth)
        tree = trees.build_symmetric(profile)
        exact = percolation.survival_exact(tree, law, target).survival
        sym = 1.0 - percolation.nonsurvival_symmetric(profile, law, target)
        diff = abs(exact - sym)
        worst = max(worst, diff)
        if diff > 1e-12:
            failures.append(i)
    psi = percolation.nonsurvival_symmetric(
        trees.uniform_profile(2, 2), laws.rademacher(), percolation.nonnegative_sums(2))
    exact_binary = (1.0 - psi) == 0.75
    return not failures and exact_binary, {
        "instances": n_instances, "worst_gap": worst,
        "binary_depth2_value": 1.0 - psi, "binary_exact": exact_binary,
    }


def crit_stable_decay() -> tuple[bool, dict]:
    rep = rwre.stable_ray_decay(1.5, 1.0, [10, 20, 40, 80], 1_000_000, seed=2024)
    ok = -2.0 <= rep.slope <= -1.0
    return ok, {
        "slope": rep.slope,
        "window": [-2.0, -1.0],
        "estimates": {r.n: r.estimate for r in rep.rows},
    }


def crit_determinism() -> tuple[bool, dict]:
    from . import cli

    cases = {
        "walk1d": ["walk1d", "--mode", "mc", "--law", "gauss:0:1", "--boundary", "zero",
                   "--grid", "8,16", "--episodes", "4000", "--seed", "5"],
        "capacity": ["capacity", "--profile", "binary:4", "--gauge", "pow:0.5",
                     "--min-levels", "1,2,3"],
        "network": ["network", "--profile", "binary:3", "--law", "rademacher",
                    "--seeds", "0:4", "--seed", "1"],
        "percolate": ["percolate", "--profile", "binary:3", "--law", "rademacher",
                      "--target", "b0"],
        "thm42-check": ["thm42-check", "--profile", "binary:3", "--law", "rademacher",
                        "--target", "b0"],
        "counterexample": ["counterexample", "--eps", "0.01"],
        "rwre": ["rwre", "--profile", "path:16", "--law", "rademacher",
                 "--depths", "4,16", "--envs", "8", "--seed", "3"],
        "reinforced": ["reinforced", "--degree", "2", "--prefix", "2",
                       "--episodes", "3000", "--seed", "9"],
        "stable": ["stable", "--alpha", "1.5", "--drift", "1.0", "--grid", "4,8",
                   "--episodes", "20000", "--seed", "4"],
        "accept": ["accept", "--criteria", "1", "--seed", "1"],
    }
    mismatches = []
    with tempfile.TemporaryDirectory() as tmp:
        for name, argv in cases.items():
            out1 = os.path.join(tmp, f"{name}-t1.out")
            out3 = os.path.join(tmp, f"{name}-t3.out")
            rc1 = cli.main(argv + ["--threads", "1", "--out", out1])
            rc3 = cli.main(argv + ["--threads", "3", "--out", out3])
            same = rc1 == rc3 == 0 and filecmp.cmp(out1, out3, shallow=False)
            if not same:
                mismatches.append(name)
    return not mismatches, {"subcommands": sorted(cases), "mismatches": mismatches}


CRITERIA: list[tuple[str, Callable[[], tuple[bool, dict]]]] = [
    ("counterexample-exactness", crit_counterexample_exactness),
    ("symmetrization-chain-sweep", crit_symmetrization_chain_sweep),
    ("hitting-tail-sqrt-limit", crit_hitting_tail_limit),
    ("convergent-boundary-persistence", crit_convergent_boundary),
    ("divergent-boundary-decay", crit_divergent_boundary),
    ("conditional-moment-growth", crit_conditional_moment),
    ("barrier-tail-sandwich", crit_barrier_tail_sandwich),
    ("bottleneck-dominates-conductance", crit_bottleneck_bound),
    ("capacity-two-routes-agree", crit_capacity_consistency),
    ("moment-method-bounds", crit_moment_method_bounds),
    ("growth-dichotomy-classification", crit_growth_dichotomy),
    ("urn-walk-equivalence", crit_urn_equivalence),
    ("symmetric-recursion-consistency", crit_symmetric_recursion),
    ("stable-boundary-decay-slope", crit_stable_decay),
    ("worker-count-determinism", crit_determinism),
]


def run_criteria(selected: Optional[Sequence[int]] = None,
                 verbose: bool = False) -> list[CriterionResult]:
    wanted = set(selected) if selected else set(range(1, len(CRITERIA) + 1))
    results = []
    for idx, (name, fn) in enumerate(CRITERIA, start=1):
        if idx not in wanted:
            continue
        t0 = time.monotonic()
        try:
            passed, details = fn()
        except Exception as exc:  # a crashed criterion is a failed criterion
            passed, details = False, {"error": f"{type(exc).__name__}: {exc}"}
        dt = time.monotonic() - t0
        results.append(CriterionResult(idx, name, bool(passed), dt, details))
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {idx:2d} {name} ({dt:.1f} s)", flush=True)
    return results
