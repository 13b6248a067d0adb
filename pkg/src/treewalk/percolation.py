"""Target percolation on finite trees.

A vertex at depth k survives when the label sequence along its root path
lies in the level-k cross-section of a target set.  All supported targets
are state-trackable: membership of a prefix depends only on a small per-level
state (the partial sum for sum-bands, the set of still-alive boxes for box
unions), which is what makes exact leaf-up dynamic programming possible.
Rational law data and target data propagate as exact fractions end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence, Union

from . import rng
from .capacity import capacity_network, hausdorff_content, symmetric_resistance
from .gauges import Gauge, TabulatedGauge
from .laws import FiniteLattice, Gaussian, Law, Uniform
from .trees import ExplicitTree, GrowthProfile, symmetrize_tree
from .walk1d import Boundary

_NEG_INF = float("-inf")
_POS_INF = float("inf")


class PercolationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# target sets


@dataclass(frozen=True)
class SumBand:
    """Per-level bounds L_k <= S_k <= U_k on the running label sum."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise PercolationError("lower and upper bound lists must have equal positive length")
        for k, (lo, hi) in enumerate(zip(self.lower, self.upper), start=1):
            if _num(lo) > _num(hi):
                raise PercolationError(f"empty band at level {k}: {lo} > {hi}")

    @property
    def depth(self) -> int:
        return len(self.lower)

    def describe(self) -> str:
        return f"sumband[{self.depth} levels]"


@dataclass(frozen=True)
class BoxTarget:
    """Independent per-level retention with probability q_k (a Cartesian
    product target expressed through quantile levels)."""

    retention: tuple

    def __post_init__(self):
        for k, q in enumerate(self.retention, start=1):
            if not (0 <= _num(q) <= 1):
                raise PercolationError(f"retention at level {k} outside [0, 1]")

    @property
    def depth(self) -> int:
        return len(self.retention)

    def describe(self) -> str:
        return f"box[{','.join(str(q) for q in self.retention)}]"


@dataclass(frozen=True)
class UnionOfBoxes:
    """Union of coordinate boxes over a common coordinate law; the box at
    index b constrains the level-k coordinate to intervals[b][k-1]."""

    intervals: tuple  # intervals[b] = ((lo, hi), ...) per level

    def __post_init__(self):
        if not self.intervals:
            raise PercolationError("need at least one box")
        depths = {len(box) for box in self.intervals}
        if len(depths) != 1:
            raise PercolationError("all boxes must constrain the same number of levels")
        if len(self.intervals) > 62:
            raise PercolationError("too many boxes for the bitmask state")

    @property
    def depth(self) -> int:
        return len(self.intervals[0])

    def describe(self) -> str:
        return f"unionboxes[{len(self.intervals)} boxes, {self.depth} levels]"


Target = Union[SumBand, BoxTarget, UnionOfBoxes]


def half_space(f: Boundary, n_f: int, depth: int) -> SumBand:
    """S_k >= f(k) from level n_f on, unconstrained below and above."""
    lower = tuple(Fraction(f.value(k)) if k >= n_f else _NEG_INF for k in range(1, depth + 1))
    return SumBand(lower, (_POS_INF,) * depth)


def nonnegative_sums(depth: int) -> SumBand:
    """The flagship target: every partial sum stays nonnegative."""
    return SumBand((Fraction(0),) * depth, (_POS_INF,) * depth)


def counterexample_tree(builder=None) -> ExplicitTree:
    from .trees import build_explicit
    return build_explicit([[1], [2], [2, 1]])


def counterexample_target(eps: Fraction) -> tuple[UnionOfBoxes, Uniform]:
    """The two-box union on uniform [0,1] coordinates whose survival drops
    under target symmetrization on the asymmetric three-level tree."""
    eps = Fraction(eps)
    if not (0 < eps < Fraction(1, 4)):
        raise PercolationError("eps must lie in (0, 1/4)")
    one, half = Fraction(1), Fraction(1, 2)
    b1 = ((Fraction(0), half), (2 * eps, one), (Fraction(0), one))
    b2 = ((half, one), (Fraction(0), one), (4 * eps, one))
    return UnionOfBoxes((b1, b2)), Uniform(Fraction(0), Fraction(1))


# ---------------------------------------------------------------------------
# state dynamics shared by the exact tree DP, the symmetric recursion,
# marginals, pair survival and the minor checker


def _num(x) -> float:
    return float(x)


def _is_rational(x) -> bool:
    return isinstance(x, (int, Fraction)) or isinstance(x, Rational)


class _BandDynamics:
    """Lattice partial-sum state for a SumBand target."""

    def __init__(self, law: FiniteLattice, band: SumBand):
        if not isinstance(law, FiniteLattice):
            raise PercolationError(
                "sum-band targets need a lattice law; quantize the law first "
                "(laws.quantize) or pass quantize_atoms to the caller")
        self.law = law
        self.band = band
        self.exact = law.is_exact
        self.initial = 0
        unit = law.unit
        self._range: list[tuple[Optional[int], Optional[int]]] = []
        for lo, hi in zip(band.lower, band.upper):
            lo_i = None if _num(lo) == _NEG_INF else math.ceil(_to_frac(lo) / unit)
            hi_i = None if _num(hi) == _POS_INF else math.floor(_to_frac(hi) / unit)
            self._range.append((lo_i, hi_i))
        self._pieces = [(p if self.exact else float(p), a)
                        for a, p in zip(law.atoms, law.probs)]

    @property
    def depth(self) -> int:
        return self.band.depth

    def pieces(self, level: int):
        return self._pieces

    def advance(self, state: int, level: int, atom: int):
        s = state + atom
        lo, hi = self._range[level - 1]
        if (lo is not None and s < lo) or (hi is not None and s > hi):
            return None
        return s

    def support_tokens(self):
        return list(self.law.atoms)


class _BoxDynamics:
    """Stateless Bernoulli retention; the optional law is only consulted by
    the minor checker, which needs value-indexed rows."""

    def __init__(self, box: BoxTarget, law: Optional[Law] = None):
        self.box = box
        self.law = law
        self.exact = all(_is_rational(q) for q in box.retention)
        self.initial = 0
        self._pieces = []
        for q in box.retention:
            q = q if self.exact else float(q)
            self._pieces.append([(q, 1), ((1 - q) if self.exact else 1.0 - float(q), 0)])

    @property
    def depth(self) -> int:
        return self.box.depth

    def pieces(self, level: int):
        return self._pieces[level - 1]

    def advance(self, state: int, level: int, token: int):
        return 0 if token else None

    def support_tokens(self):
        if not isinstance(self.law, FiniteLattice):
            raise PercolationError("value-indexed rows need a lattice law")
        return list(self.law.atoms)

    def advance_value(self, state: int, level: int, atom: int):
        q = self.box.retention[level - 1]
        return 0 if self.law.cdf_exact(atom) <= q else None


class _UnionDynamics:
    """Alive-box bitmask state for a union of coordinate boxes."""

    def __init__(self, target: UnionOfBoxes, law: Law):
        self.target = target
        self.law = law
        self.initial = (1 << len(target.intervals)) - 1
        self._level_pieces = []
        exact = True
        for level in range(1, target.depth + 1):
            pieces, level_exact = self._build_pieces(level)
            exact = exact and level_exact
            self._level_pieces.append(pieces)
        self.exact = exact

    @property
    def depth(self) -> int:
        return self.target.depth

    def _intervals_at(self, level: int):
        return [box[level - 1] for box in self.target.intervals]

    def _mask_of_value(self, x, level: int) -> int:
        mask = 0
        for b, (lo, hi) in enumerate(self._intervals_at(level)):
            if _to_frac_or_float(lo) <= x <= _to_frac_or_float(hi):
                mask |= 1 << b
        return mask

    def _build_pieces(self, level: int):
        law = self.law
        ivals = self._intervals_at(level)
        if isinstance(law, FiniteLattice):
            pieces = []
            for a, p in zip(law.atoms, law.probs):
                x = a * law.unit
                pieces.append((p if law.is_exact else float(p), self._mask_of_value(x, level)))
            return pieces, law.is_exact
        if isinstance(law, Uniform):
            cuts = {law.lo, law.hi}
            for lo, hi in ivals:
                cuts.add(min(max(_to_frac(lo), law.lo), law.hi))
                cuts.add(min(max(_to_frac(hi), law.lo), law.hi))
            cuts = sorted(cuts)
            pieces = []
            for a, b in zip(cuts, cuts[1:]):
                if b <= a:
                    continue
                mid = (a + b) / 2
                pieces.append((law.interval_prob_exact(a, b), self._mask_of_value(mid, level)))
            return pieces, True
        if isinstance(law, Gaussian):
            lows = sorted({_num(lo) for lo, _ in ivals} | {_num(hi) for _, hi in ivals})
            cuts = [-1e30] + lows + [1e30]
            pieces = []
            for a, b in zip(cuts, cuts[1:]):
                if b <= a:
                    continue
                p = law.interval_prob(a, b)
                if p > 0:
                    pieces.append((p, self._mask_of_value((a + b) / 2, level)))
            return pieces, False
        raise PercolationError(f"no interval probabilities for {law.describe()}")

    def pieces(self, level: int):
        return self._level_pieces[level - 1]

    def advance(self, state: int, level: int, mask: int):
        s = state & mask
        return s if s else None

    def support_tokens(self):
        if not isinstance(self.law, FiniteLattice):
            raise PercolationError("value-indexed rows need a lattice law")
        return list(self.law.atoms)

    def advance_value(self, state: int, level: int, atom: int):
        return self.advance(state, level, self._mask_of_value(atom * self.law.unit, level))


def _to_frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _to_frac_or_float(x):
    return x if isinstance(x, (Fraction, int)) else float(x)


def make_dynamics(law: Optional[Law], target: Target):
    if isinstance(target, SumBand):
        return _BandDynamics(law, target)
    if isinstance(target, BoxTarget):
        return _BoxDynamics(target, law)
    if isinstance(target, UnionOfBoxes):
        return _UnionDynamics(target, law)
    raise PercolationError(f"unsupported target {target!r}")


def advance_by_value(dyn, state, level: int, atom: int):
    """Advance by an actual support value (for value-indexed minor rows)."""
    if isinstance(dyn, _BandDynamics):
        return dyn.advance(state, level, atom)
    return dyn.advance_value(state, level, atom)


def _reachable_states(dyn, depth: int, budget: int = 2_000_000):
    """Alive states per level, with one witness prefix of tokens per state."""
    levels: list[dict] = [{dyn.initial: ()}]
    total = 1
    for k in range(1, depth + 1):
        nxt: dict = {}
        for state, prefix in levels[k - 1].items():
            for p, tok in dyn.pieces(k):
                if _num(p) == 0.0:
                    continue
                s2 = dyn.advance(state, k, tok)
                if s2 is not None and s2 not in nxt:
                    nxt[s2] = prefix + (tok,)
        total += len(nxt)
        if total > budget:
            raise PercolationError(
                f"state space exceeds the budget: more than {budget} (level, state) pairs")
        levels.append(nxt)
    return levels


# ---------------------------------------------------------------------------
# exact survival on an explicit tree


@dataclass
class SurvivalReport:
    survival: float
    survival_exact: Optional[Fraction]
    marginals: list
    method: str
    target: str
    law: str

    def marginal_floats(self) -> list[float]:
        return [float(p) for p in self.marginals]


def survival_exact(tree: ExplicitTree, law: Optional[Law], target: Target,
                   budget: int = 2_000_000) -> SurvivalReport:
    """Exact survival probability (some root-to-leaf path entirely alive) by
    a leaf-up DP over (vertex, target state).  Rational throughout whenever
    the law and target data are rational."""
    if target.depth != tree.depth:
        raise PercolationError(
            f"target constrains {target.depth} levels but the tree has depth {tree.depth}")
    dyn = make_dynamics(law, target)
    reach = _reachable_states(dyn, tree.depth, budget)
    if sum(len(r) for r in reach) * tree.n_vertices > 50 * budget:
        raise PercolationError(
            f"DP size estimate {sum(len(r) for r in reach) * tree.n_vertices} states x vertices "
            f"exceeds the budget")

    one = Fraction(1) if dyn.exact else 1.0
    zero = Fraction(0) if dyn.exact else 0.0
    # g[v][state] = P(no alive path to the leaf level below v | state at v)
    g: list[Optional[dict]] = [None] * tree.n_vertices
    for v in range(tree.n_vertices - 1, -1, -1):
        d = tree.depth_of[v]
        states = reach[d].keys()
        if tree.is_leaf(v):
            g[v] = {s: zero for s in states}
            continue
        table = {}
        for s in states:
            val = one
            for c in tree.children[v]:
                acc = zero
                for p, tok in dyn.pieces(d + 1):
                    s2 = dyn.advance(s, d + 1, tok)
                    if s2 is None:
                        acc += p
                    else:
                        acc += p * g[c][s2]
                val *= acc
            table[s] = val
        g[v] = table
        for c in tree.children[v]:
            g[c] = None  # free; parents never look back
    root_ns = g[0][dyn.initial]
    surv = one - root_ns
    margs = marginals(law, target, tree.depth, dyn=dyn)
    return SurvivalReport(
        survival=float(surv),
        survival_exact=surv if dyn.exact else None,
        marginals=margs,
        method="exact-dp",
        target=target.describe(),
        law=law.describe() if law is not None else "none",
    )


def marginals(law: Optional[Law], target: Target, depth: int, dyn=None) -> list:
    """p(n) = P(a fixed depth-n prefix is alive), n = 1..depth."""
    if dyn is None:
        dyn = make_dynamics(law, target)
    one = Fraction(1) if dyn.exact else 1.0
    dist = {dyn.initial: one}
    out = []
    for k in range(1, depth + 1):
        nxt: dict = {}
        for s, mass in dist.items():
            for p, tok in dyn.pieces(k):
                s2 = dyn.advance(s, k, tok)
                if s2 is not None:
                    nxt[s2] = nxt.get(s2, 0) + mass * p
        dist = nxt
        out.append(sum(dist.values()))
    return out


def symmetrize_target(law: Optional[Law], target: Target, depth: int) -> BoxTarget:
    """Product (box) target with the same marginal sequence: retention
    q_n = p(n)/p(n-1).  Idempotent on box targets."""
    margs = marginals(law, target, depth)
    qs = []
    prev = Fraction(1) if isinstance(margs[0], (Fraction, int)) else 1.0
    for k, p in enumerate(margs, start=1):
        if _num(prev) == 0.0:
            raise PercolationError(f"zero marginal at level {k - 1}; cannot symmetrize")
        qs.append(p / prev)
        prev = p
    return BoxTarget(tuple(qs))


# ---------------------------------------------------------------------------
# symmetric (possibly virtual) recursion


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else _NEG_INF


def _logsumexp(vals: list[float]) -> float:
    m = max(vals, default=_NEG_INF)
    if m == _NEG_INF:
        return _NEG_INF
    return m + math.log(sum(math.exp(v - m) for v in vals))


def nonsurvival_symmetric(profile: GrowthProfile, law: Optional[Law], target: Target,
                          budget: int = 2_000_000) -> float:
    """Non-survival probability of the target percolation on the spherically
    symmetric tree with the given growth numbers, which may be real (virtual
    trees): level-down recursion

        G_N(state) = 0,
        G_k(state) = [ E over X of (1 if dead else G_{k+1}(state')) ]^{f(k+1)}.

    Values are carried both linearly (exact for integral profiles at ordinary
    magnitudes) and in log space (immune to underflow for huge growth).
    """
    depth = profile.depth
    if target.depth != depth:
        raise PercolationError(
            f"target constrains {target.depth} levels but the profile has depth {depth}")
    dyn = make_dynamics(law, target)
    reach = _reachable_states(dyn, depth, budget)

    # value per state: (linear float or None once underflowed, log float)
    cur: dict = {s: (0.0, _NEG_INF) for s in reach[depth].keys()}
    for k in range(depth - 1, -1, -1):
        f = profile.ratios[k]  # growth into level k+1
        f_float = float(f)
        nxt: dict = {}
        for s in reach[k].keys():
            lin_sum: Optional[float] = 0.0
            log_terms: list[float] = []
            dead_mass = 0.0
            for p, tok in dyn.pieces(k + 1):
                pf = float(p)
                if pf == 0.0:
                    continue
                s2 = dyn.advance(s, k + 1, tok)
                if s2 is None:
                    dead_mass += pf
                    continue
                lin, lg = cur[s2]
                if lin_sum is not None and lin is not None:
                    lin_sum += pf * lin
                else:
                    lin_sum = None
                if lg != _NEG_INF:
                    log_terms.append(math.log(pf) + lg)
            if lin_sum is not None:
                lin_sum += dead_mass
            if dead_mass > 0.0:
                log_terms.append(math.log(dead_mass))
            log_e = _logsumexp(log_terms)
            if lin_sum is not None:
                if f.denominator == 1:
                    lin_new = lin_sum ** int(f)
                else:
                    lin_new = lin_sum ** f_float if lin_sum > 0.0 else 0.0
                if lin_new == 0.0 and log_e != _NEG_INF and f_float * log_e > -700.0:
                    lin_new = None  # underflowed; the log track still knows the value
            else:
                lin_new = None
            nxt[s] = (lin_new, f_float * log_e)
        cur = nxt
    lin, lg = cur[dyn.initial]
    return lin if lin is not None else math.exp(lg)


def survival_symmetric(profile: GrowthProfile, law: Optional[Law], target: Target) -> float:
    return 1.0 - nonsurvival_symmetric(profile, law, target)


# ---------------------------------------------------------------------------
# chain of symmetrization comparisons


@dataclass
class ChainReport:
    p_b_gamma: float
    p_b_sgamma: float
    p_sb_sgamma: float
    cap_bound: float
    chain_holds: bool
    p_sb_gamma: float
    swap_counterexample: bool
    p_b_gamma_exact: Optional[Fraction]
    p_sb_gamma_exact: Optional[Fraction]
    marginals: list


def symmetrization_chain(tree: ExplicitTree, law: Optional[Law], target: Target,
                         slack: float = 1e-10) -> ChainReport:
    """Survival on the tree, on its spherical symmetrization, after target
    symmetrization, and the series-resistance bound, with monotonicity flags.
    The swap comparison (symmetrized target on the original tree) is the
    separately reported phenomenon that can go the other way."""
    rep_b = survival_exact(tree, law, target)
    profile = symmetrize_tree(tree)
    p_b_s = survival_symmetric(profile, law, target)
    sb = symmetrize_target(law, target, tree.depth)
    p_sb_s = survival_symmetric(profile, None, sb)
    margs = rep_b.marginals
    gauge = TabulatedGauge(tuple(float(p) for p in margs))
    _, bound = symmetric_resistance(profile, gauge)
    rep_sb = survival_exact(tree, None, sb)

    vals = [rep_b.survival, p_b_s, p_sb_s, bound]
    chain = all(vals[i] <= vals[i + 1] + slack for i in range(3))
    if rep_b.survival_exact is not None and rep_sb.survival_exact is not None:
        swap = rep_sb.survival_exact < rep_b.survival_exact
    else:
        swap = rep_sb.survival < rep_b.survival - 1e-12
    return ChainReport(
        p_b_gamma=rep_b.survival,
        p_b_sgamma=p_b_s,
        p_sb_sgamma=p_sb_s,
        cap_bound=bound,
        chain_holds=chain,
        p_sb_gamma=rep_sb.survival,
        swap_counterexample=swap,
        p_b_gamma_exact=rep_b.survival_exact,
        p_sb_gamma_exact=rep_sb.survival_exact,
        marginals=margs,
    )


# ---------------------------------------------------------------------------
# pairwise survival and moment-method bounds


@dataclass
class PairReport:
    joint: float
    ratio: float
    p_meet: float
    p_n: float
    joint_exact: Optional[Fraction]


def pair_survival(law: FiniteLattice, band: SumBand, n: int, k: int) -> PairReport:
    """P(two depth-n vertices whose paths split at depth k are both alive),
    by conditioning on the state where the spine splits."""
    if not (0 <= k < n <= band.depth):
        raise PercolationError(f"need 0 <= k < n <= {band.depth}")
    dyn = make_dynamics(law, band)
    one = Fraction(1) if dyn.exact else 1.0

    dist = {dyn.initial: one}
    for level in range(1, k + 1):
        nxt: dict = {}
        for s, mass in dist.items():
            for p, tok in dyn.pieces(level):
                s2 = dyn.advance(s, level, tok)
                if s2 is not None:
                    nxt[s2] = nxt.get(s2, 0) + mass * p
        dist = nxt

    reach = {s: None for s in dist}
    frontier = [dict.fromkeys(dist)]
    for level in range(k + 1, n + 1):
        nxt = {}
        for s in frontier[-1]:
            for p, tok in dyn.pieces(level):
                s2 = dyn.advance(s, level, tok)
                if s2 is not None:
                    nxt[s2] = None
        frontier.append(nxt)

    tail = {s: one for s in frontier[-1]}
    for level in range(n, k, -1):
        newtail = {}
        for s in frontier[level - k - 1]:
            acc = one - one  # typed zero
            for p, tok in dyn.pieces(level):
                s2 = dyn.advance(s, level, tok)
                if s2 is not None:
                    acc += p * tail[s2]
            newtail[s] = acc
        tail = newtail

    joint = sum(mass * tail[s] * tail[s] for s, mass in dist.items())
    p_meet = sum(dist.values())
    p_n = sum(mass * tail[s] for s, mass in dist.items())
    ratio = float(joint) / float(p_n) ** 2 if float(p_n) > 0 else math.inf
    return PairReport(
        joint=float(joint), ratio=ratio, p_meet=float(p_meet), p_n=float(p_n),
        joint_exact=joint if dyn.exact else None)


def moment_bounds(tree: ExplicitTree, marginal_seq: Sequence[float], gauge_g: Gauge):
    """First and second moment method bounds on the survival probability:
    content in the marginal gauge from above, capacity in g from below."""
    p_gauge = TabulatedGauge(tuple(float(p) for p in marginal_seq))
    content, cut = hausdorff_content(tree, p_gauge, 1)
    cap = capacity_network(tree, gauge_g)
    return {"first_moment_upper": content, "second_moment_lower": cap, "cutset": cut}


# ---------------------------------------------------------------------------
# total positivity of the cross-section matrix


@dataclass
class MinorWitness:
    level: int
    prefix: tuple
    x: int
    y: int
    col_i: int
    col_j: int
    minor: float


@dataclass
class Tp2Report:
    holds: bool
    witness: Optional[MinorWitness]
    states_checked: int
    exhaustive: bool


def tp2_check(law: FiniteLattice, target: Target, depth: int,
              state_budget: int = 100_000) -> Tp2Report:
    """Check all 2x2 minors of the matrices M[(y, j)] = P(a prefix extended
    by support value y at level k stays alive through level j), over every
    reachable prefix state.  Returns the first violated minor as a witness.
    """
    dyn = make_dynamics(law, target)
    if not isinstance(law, FiniteLattice):
        raise PercolationError("total-positivity rows are indexed by lattice support values")
    reach = _reachable_states(dyn, depth)
    tokens = sorted(dyn.support_tokens())
    one = Fraction(1) if dyn.exact else 1.0
    zero = one - one

    def alive_profile(state, level: int):
        """P(alive through j | state after level), j = level..depth."""
        dist = {state: one}
        out = [one]
        for j in range(level + 1, depth + 1):
            nxt: dict = {}
            for s, mass in dist.items():
                for p, tok in dyn.pieces(j):
                    s2 = dyn.advance(s, j, tok)
                    if s2 is not None:
                        nxt[s2] = nxt.get(s2, 0) + mass * p
            dist = nxt
            out.append(sum(dist.values()))
        return out

    checked = 0
    exhaustive = True
    for k in range(1, depth + 1):
        states = list(reach[k - 1].items())
        if checked + len(states) > state_budget:
            keep = max(1, state_budget - checked)
            states = states[:keep]
            exhaustive = False
        for state, prefix in states:
            checked += 1
            rows = []
            for y in tokens:
                s2 = advance_by_value(dyn, state, k, y)
                if s2 is None:
                    rows.append([zero] * (depth - k + 1))
                else:
                    rows.append(alive_profile(s2, k))
            n_cols = depth - k + 1
            for xi in range(len(tokens)):
                for yi in range(xi + 1, len(tokens)):
                    rx, ry = rows[xi], rows[yi]
                    for i in range(n_cols):
                        for j in range(i + 1, n_cols):
                            minor = rx[i] * ry[j] - ry[i] * rx[j]
                            bad = (minor < 0) if dyn.exact else (float(minor) < -1e-12)
                            if bad:
                                return Tp2Report(
                                    holds=False,
                                    witness=MinorWitness(
                                        level=k, prefix=prefix,
                                        x=tokens[xi], y=tokens[yi],
                                        col_i=k + i, col_j=k + j,
                                        minor=float(minor)),
                                    states_checked=checked,
                                    exhaustive=exhaustive)
    return Tp2Report(True, None, checked, exhaustive)


# ---------------------------------------------------------------------------
# convexity probe for the symmetric box recursion


def _ratio_list(ratios_or_profile) -> list[float]:
    if isinstance(ratios_or_profile, GrowthProfile):
        return ratios_or_profile.as_floats()
    return [float(r) for r in ratios_or_profile]


def box_nonsurvival_from_marginals(ratios_or_profile, z: Sequence[float]) -> float:
    """Non-survival of the box percolation whose marginal sequence is z
    (nonincreasing, z_0 = 1 implicit) on the symmetric tree with the given
    growth numbers.  Raw ratio lists may dip below 1, which leaves the
    guaranteed-convex regime but is useful for probing."""
    ratios = _ratio_list(ratios_or_profile)
    n = len(ratios)
    if len(z) != n:
        raise PercolationError("need one marginal per level")
    ns = 0.0
    for k in range(n, 0, -1):
        prev = 1.0 if k == 1 else float(z[k - 2])
        q = float(z[k - 1]) / prev if prev > 0 else 0.0
        ns = (1.0 - q * (1.0 - ns)) ** ratios[k - 1]
    return ns


@dataclass
class ConvexityReport:
    trials: int
    violations: int
    examples: list


def h_convexity_probe(ratios_or_profile, trials: int, seed: int,
                      tol: float = 1e-12) -> ConvexityReport:
    """Midpoint-convexity probe for the symmetric box non-survival as a
    function of the ordered marginal vector.  Expected violations: none when
    every growth number is >= 1; sub-1 ratio lists are probed and reported,
    not asserted."""
    ratios = _ratio_list(ratios_or_profile)
    n = len(ratios)
    if n > 8:
        raise PercolationError("probe arguments limited to 8 levels")
    key = rng.derive_key(0xC0F3, seed)
    violations = 0
    examples = []
    for t in range(trials):
        u = rng.uniforms(key, 2 * t * n, 2 * n)
        z = sorted(u[:n], reverse=True)
        w = sorted(u[n:], reverse=True)
        mid = [(a + b) / 2.0 for a, b in zip(z, w)]
        h_mid = box_nonsurvival_from_marginals(ratios, mid)
        h_avg = 0.5 * (box_nonsurvival_from_marginals(ratios, z)
                       + box_nonsurvival_from_marginals(ratios, w))
        if h_mid > h_avg + tol:
            violations += 1
            if len(examples) < 5:
                examples.append((tuple(z), tuple(w), h_mid, h_avg))
    return ConvexityReport(trials, violations, examples)
