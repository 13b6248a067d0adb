"""Boundary-crossing events for one-dimensional random walks.

Exact lattice dynamic programs produce certified probability brackets for
events of the form "S_k stays above a boundary on [a, n]" and for barrier
hitting tails; Monte Carlo covers non-lattice laws.  The DP state space is
truncated at ``cap_multiplier`` standard deviations times sqrt(n); all mass
leaving the window is routed to the upper bound only, so the bracket is
always valid and its width equals the routed mass.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import rng
from .laws import FiniteLattice, Law, MgfDivergence

_DP_TAG = 0x1D01
_MC_TAG = 0x1D02


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class ZeroBoundary:
    def value(self, n: int) -> float:
        return 0.0

    def describe(self) -> str:
        return "zero"


@dataclass(frozen=True)
class PowerBoundary:
    a: float
    b: float

    def value(self, n: int) -> float:
        return self.a * n ** self.b

    def describe(self) -> str:
        return f"pow[{self.a},{self.b}]"


@dataclass(frozen=True)
class PowerLogBoundary:
    a: float
    b: float
    c: float

    def value(self, n: int) -> float:
        return self.a * n ** self.b * math.log(n + 1.0) ** self.c

    def describe(self) -> str:
        return f"powlog[{self.a},{self.b},{self.c}]"


@dataclass(frozen=True)
class TabulatedBoundary:
    values: tuple[float, ...]  # values[k-1] = f(k)

    def value(self, n: int) -> float:
        if not (1 <= n <= len(self.values)):
            raise BoundaryError(f"tabulated boundary has no value at {n}")
        return self.values[n - 1]

    def describe(self) -> str:
        return f"tab[{len(self.values)} values]"


Boundary = ZeroBoundary | PowerBoundary | PowerLogBoundary | TabulatedBoundary


def parse_boundary(spec: str) -> Boundary:
    parts = spec.split(":")
    kind = parts[0].lower()
    if kind == "zero":
        return ZeroBoundary()
    if kind == "pow":
        return PowerBoundary(float(parts[1]), float(parts[2]))
    if kind == "powlog":
        return PowerLogBoundary(float(parts[1]), float(parts[2]), float(parts[3]))
    if kind == "tab":
        return TabulatedBoundary(tuple(float(x) for x in parts[1].split(",")))
    raise BoundaryError(f"unknown boundary spec {spec!r}")


def validate_boundary(f: Boundary, lo: int, hi: int) -> None:
    """Nonnegative and nondecreasing on [lo, hi]."""
    prev = None
    for k in range(lo, hi + 1):
        v = f.value(k)
        if v < 0:
            raise BoundaryError(f"boundary is negative at {k}")
        if prev is not None and v < prev - 1e-12:
            raise BoundaryError(f"boundary decreases at {k}")
        prev = v


class Verdict(str, enum.Enum):
    CONVERGES = "converges"
    DIVERGES = "diverges"
    UNDETERMINED = "undetermined"


def summability_verdict(f: Boundary, horizon: int):
    """Verdict for sum n^(-3/2) f(n) plus its partial sums up to horizon."""
    ns = np.arange(1, horizon + 1, dtype=np.float64)
    terms = np.array([f.value(int(n)) for n in range(1, horizon + 1)]) * ns ** -1.5
    partial = np.cumsum(terms)
    if isinstance(f, ZeroBoundary):
        return Verdict.CONVERGES, partial
    if isinstance(f, PowerBoundary):
        if f.a == 0.0 or f.b < 0.5:
            return Verdict.CONVERGES, partial
        return Verdict.DIVERGES, partial
    if isinstance(f, PowerLogBoundary):
        if f.a == 0.0 or f.b < 0.5 or (f.b == 0.5 and f.c < -1.0):
            return Verdict.CONVERGES, partial
        return Verdict.DIVERGES, partial
    return Verdict.UNDETERMINED, partial


@dataclass(frozen=True)
class ProbBracket:
    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"invalid bracket [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _lattice_units(law: FiniteLattice):
    atoms = np.asarray(law.atoms, dtype=np.int64)
    probs = np.asarray([float(p) for p in law.probs])
    mean_u = float(sum(p * a for a, p in zip(law.atoms, law.probs)))
    var_u = float(sum(p * (a - mean_u) ** 2 for a, p in zip(law.atoms, law.probs)))
    return atoms, probs, math.sqrt(max(var_u, 1e-300))


def _run_lattice_dp(law: FiniteLattice, n: int, thresholds, cap_multiplier: float,
                    snapshots: Sequence[int], want_table: bool = False):
    """Core DP.  thresholds[k] (k = 1..n) is the minimal allowed lattice state
    after step k, or None for no constraint.  Returns ({k: (lower, upper)},
    final_state_values, final_probs)."""
    atoms, probs, sd_u = _lattice_units(law)
    cap = max(8, math.ceil(cap_multiplier * sd_u * math.sqrt(n)))
    finite = [t for t in thresholds[1:] if t is not None]
    hi = cap + max([0] + finite)
    lo = min([0] + finite) - cap
    size = hi - lo + 1

    cur = np.zeros(size)
    nxt = np.zeros(size)
    cur[-lo] = 1.0  # S_0 = 0
    routed = 0.0
    out: dict[int, tuple[float, float]] = {}
    snapset = set(snapshots)
    min_atom, max_atom = int(atoms.min()), int(atoms.max())

    for k in range(1, n + 1):
        nxt.fill(0.0)
        for a, p in zip(atoms, probs):
            a = int(a)
            src_lo = max(0, -a)
            src_hi = min(size, size - a)
            if src_hi > src_lo:
                nxt[src_lo + a:src_hi + a] += p * cur[src_lo:src_hi]
            # mass shifted outside the window is uncertain: upper bound only
            if a > 0:
                routed += p * cur[size - a:].sum()
            elif a < 0:
                routed += p * cur[:-a].sum()
        t = thresholds[k]
        if t is not None:
            idx = t - lo
            if idx > 0:
                nxt[:min(idx, size)] = 0.0  # definite failures
        cur, nxt = nxt, cur
        if k in snapset:
            lower = float(cur.sum())
            out[k] = (lower, min(1.0, lower + routed))

    states = (np.arange(lo, hi + 1)) if want_table else None
    return out, states, (cur.copy() if want_table else None)


def _thresholds_for_boundary(f: Boundary, unit: Fraction, a: int, n: int, sign: int):
    """Integer lattice thresholds for the events S_k >= f(k) (sign +1, using
    ceil) or S_k >= -f(k) (sign -1, using floor); both roundings make the
    lattice event no larger than the real-valued one."""
    u = float(unit)
    thr: list[int | None] = [None] * (n + 1)
    for k in range(a, n + 1):
        v = f.value(k)
        thr[k] = math.ceil(v / u - 1e-12) if sign > 0 else -math.floor(v / u + 1e-12)
    return thr


def dp_stay_above_grid(law: FiniteLattice, f: Boundary, a: int, grid: Sequence[int],
                       cap_multiplier: float = 12.0, sign: int = 1) -> dict[int, ProbBracket]:
    """Brackets for P(S_k >= sign*f(k), a <= k <= n) at every n in grid."""
    n = max(grid)
    if not (1 <= a <= n):
        raise BoundaryError(f"need 1 <= a <= n, got a={a}, n={n}")
    if cap_multiplier < 4:
        raise BoundaryError("cap_multiplier must be at least 4")
    validate_boundary(f, a, n)
    thr = _thresholds_for_boundary(f, law.unit, a, n, sign)
    out, _, _ = _run_lattice_dp(law, n, thr, cap_multiplier, grid)
    brackets = {k: ProbBracket(lo, up) for k, (lo, up) in out.items()}
    worst = max(b.width for b in brackets.values())
    if worst > 1e-9:
        warnings.warn(
            f"DP bracket width {worst:.3g} exceeds 1e-9; rerun with "
            f"cap_multiplier > {cap_multiplier}", RuntimeWarning)
    return brackets


def dp_stay_above(law: FiniteLattice, f: Boundary, a: int, n: int,
                  cap_multiplier: float = 12.0) -> ProbBracket:
    """Bracket for P(S_k >= f(k) for all k in [a, n])."""
    return dp_stay_above_grid(law, f, a, [n], cap_multiplier)[n]


def dp_hitting_tail_grid(law: FiniteLattice, h: float, grid: Sequence[int],
                         cap_multiplier: float = 12.0) -> dict[int, ProbBracket]:
    """Brackets for P(T_h > n) where T_h is the first time S_k < -h."""
    if h < 0:
        raise BoundaryError("barrier h must be nonnegative")
    n = max(grid)
    t = -math.floor(h / float(law.unit) + 1e-12)  # S_k >= -h in lattice units
    thr = [None] + [t] * n
    out, _, _ = _run_lattice_dp(law, n, thr, cap_multiplier, grid)
    return {k: ProbBracket(lo, up) for k, (lo, up) in out.items()}


def dp_hitting_tail(law: FiniteLattice, h: float, n: int,
                    cap_multiplier: float = 12.0) -> ProbBracket:
    return dp_hitting_tail_grid(law, h, [n], cap_multiplier)[n]


def dp_conditional_moment(law: FiniteLattice, n: int, power: int = 2,
                          cap_multiplier: float = 12.0) -> float:
    """E(S_n^power | S_k >= 0 for k <= n), from the same DP table."""
    if power not in (1, 2):
        raise BoundaryError("power must be 1 or 2")
    thr = [None] + [0] * n
    out, states, table = _run_lattice_dp(law, n, thr, cap_multiplier, [n], want_table=True)
    alive = table.sum()
    if alive <= 0.0:
        raise BoundaryError(f"conditioning event has zero probability at n={n}")
    vals = (states * float(law.unit)) ** power
    return float((table * vals).sum() / alive)


def find_boundary_start(law: FiniteLattice, f: Boundary, n_limit: int,
                        cap_multiplier: float = 12.0) -> tuple[int, bool]:
    """Smallest power of two n_f for which sqrt(n) * P(S_k >= f(k), n_f<=k<=n)
    is nondecreasing over the next two doublings.  Falls back to n_f = 1
    (found=False) when no candidate up to n_limit/4 qualifies, which is the
    expected outcome for non-summable boundaries."""
    j = 0
    while (1 << (j + 2)) <= n_limit:
        nf = 1 << j
        grid = [nf, nf * 2, nf * 4]
        br = dp_stay_above_grid(law, f, nf, grid, cap_multiplier)
        v = [math.sqrt(n) * br[n].mid for n in grid]
        if v[0] <= v[1] + 1e-12 and v[1] <= v[2] + 1e-12:
            return nf, True
        j += 1
    return 1, False


@dataclass
class AsymptoticsRow:
    n: int
    above_f: ProbBracket
    tail_zero: ProbBracket
    above_neg_f: ProbBracket

    def scaled(self) -> tuple[float, float, float]:
        r = math.sqrt(self.n)
        return (r * self.above_f.mid, r * self.tail_zero.mid, r * self.above_neg_f.mid)


@dataclass
class AsymptoticsReport:
    law: str
    boundary: str
    n_f: int
    n_f_found: bool
    rows: list[AsymptoticsRow]


def asymptotics_report(law: FiniteLattice, f: Boundary, grid: Sequence[int],
                       cap_multiplier: float = 12.0,
                       n_f: int | None = None) -> AsymptoticsReport:
    """sqrt(n)-scaled brackets for the three canonical boundary events on a
    grid of horizons: staying above f from n_f on, staying nonnegative, and
    staying above -f from the start."""
    grid = sorted(set(int(n) for n in grid))
    if n_f is None:
        nf, found = find_boundary_start(law, f, max(grid), cap_multiplier)
    else:
        nf, found = int(n_f), True
    above = dp_stay_above_grid(law, f, nf, grid, cap_multiplier)
    tails = dp_hitting_tail_grid(law, 0.0, grid, cap_multiplier)
    below = dp_stay_above_grid(law, f, 1, grid, cap_multiplier, sign=-1)
    rows = [AsymptoticsRow(n, above[n], tails[n], below[n]) for n in grid]
    return AsymptoticsReport(law.describe(), f.describe(), nf, found, rows)


def mc_stay_above(law: Law, f: Boundary, a: int, n: int, episodes: int, seed: int,
                  threads: int = 1, chunk: int = 16384) -> tuple[float, float]:
    """Frequency estimate and standard error for P(S_k >= f(k), a <= k <= n).

    Episode i draws from the counter stream (seed, i), so the estimate is
    bit-identical for any worker count.
    """
    if episodes < 1:
        raise BoundaryError("episodes must be >= 1")
    validate_boundary(f, a, n)
    fvals = np.array([f.value(k) for k in range(a, n + 1)])
    key = rng.derive_key(_MC_TAG, seed)

    def worker(start: int, stop: int) -> int:
        streams = np.arange(start, stop, dtype=np.uint64)
        x = law.sample(key, streams, n)
        s = np.cumsum(x, axis=1)
        ok = np.all(s[:, a - 1:n] >= fvals[None, :], axis=1)
        return int(ok.sum())

    counts = rng.run_chunks(episodes, chunk, worker, threads)
    hits = sum(counts)
    est = hits / episodes
    stderr = math.sqrt(max(est * (1.0 - est), 1e-300) / episodes)
    return est, stderr


def backward_push(law: Law, tol: float = 1e-12) -> float:
    """-log min over lam in [0,1] of E exp(lam * X), by golden section on the
    convex moment generating function."""
    try:
        probe = [law.mgf(x) for x in (0.0, 0.25, 0.5, 0.75, 1.0)]
    except MgfDivergence:
        raise
    if any(math.isnan(v) for v in probe) or any(math.isinf(v) for v in probe[:-1]):
        raise MgfDivergence(f"{law.describe()} has a divergent moment generating function on [0,1)")

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, 1.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = law.mgf(x1), law.mgf(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = law.mgf(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = law.mgf(x2)
    best = min(probe[0], probe[-1], f1, f2)
    return max(0.0, -math.log(best))
