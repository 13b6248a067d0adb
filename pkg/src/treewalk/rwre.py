"""Monte Carlo engines: walks on random environments, growth-profile
conductance scaling, the edge-reinforced walk with its urn equivalence, and
heavy-tailed boundary survival.

Determinism contract: every environment label and every walk step is a pure
function of (seed, identifying indices), and aggregates are reduced in index
order, so results are independent of how work is sharded.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from . import rng
from .laws import FiniteLattice, Law, SymmetricStable
from .trees import ExplicitTree, GrowthProfile

_ENVLAZY_TAG = 0x1A27
_WALK_TAG = 0x3A1C
_REINF_TAG = 0x6E1F
_STABLE_TAG = 0x57AB
_SCALE_TAG = 0x5CA1


def _sample_scalar(law: Law, key: int, stream: int) -> float:
    return float(law.sample(key, np.asarray([stream], dtype=np.uint64), 1)[0, 0])


class SymmetricSource:
    """Child counts from an integer growth profile (depth-limited)."""

    def __init__(self, profile: GrowthProfile):
        if not profile.is_integral:
            raise ValueError("walks need an integer profile")
        self.counts = [int(r) for r in profile.ratios]
        self.depth = profile.depth

    def child_count(self, path: tuple) -> int:
        d = len(path)
        return self.counts[d] if d < self.depth else 0


class ExplicitSource:
    """Child counts read off an explicit tree; paths are child-index tuples."""

    def __init__(self, tree: ExplicitTree):
        self.tree = tree
        self.depth = tree.depth

    def _vertex(self, path: tuple) -> int:
        v = 0
        for j in path:
            v = self.tree.children[v][j]
        return v

    def child_count(self, path: tuple) -> int:
        return len(self.tree.children[self._vertex(path)])


class LazyEnvironment:
    """Environment generated on demand: expanding a vertex draws one label
    per child, a pure function of (master seed, child path), and sets the
    child's parent-edge log conductance to the parent's plus the label.
    Revisits always see identical data."""

    def __init__(self, source, law: Law, seed: int):
        self.source = source
        self.law = law
        self.key = rng.derive_key(_ENVLAZY_TAG, seed)
        self._memo: dict[tuple, np.ndarray] = {}

    def _path_stream(self, path: tuple) -> int:
        h = 0
        for step in path:
            h = rng.mix64(h ^ (step + 0x9E37))
        return h

    def child_logs(self, path: tuple, parent_log: float) -> np.ndarray:
        cached = self._memo.get(path)
        if cached is not None:
            return cached
        n = self.source.child_count(path)
        if n == 0:
            logs = np.empty(0)
        else:
            streams = np.asarray(
                [self._path_stream(path + (j,)) for j in range(n)], dtype=np.uint64)
            labels = self.law.sample(self.key, streams, 1)[:, 0]
            logs = parent_log + labels
        self._memo[path] = logs
        return logs

    def memo_digest(self) -> str:
        h = hashlib.sha256()
        for path in sorted(self._memo):
            h.update(repr(path).encode())
            h.update(self._memo[path].tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class EpisodeOutcome:
    tag: str  # returned | reached_depth | exhausted
    steps: int
    max_depth: int


def walk_episode(env: LazyEnvironment, target_depth: int, max_steps: int,
                 episode_seed: int) -> EpisodeOutcome:
    """One nearest-neighbour episode with transition weights proportional to
    incident conductances (the root reflects into its children); stops at the
    first root return, the first visit to target_depth, or the step budget."""
    if target_depth < 1 or max_steps < 1:
        raise ValueError("target_depth and max_steps must be >= 1")
    wkey = rng.derive_key(_WALK_TAG, episode_seed)
    path: tuple = ()
    logsum_path: list[float] = [0.0]  # log conductance of the edge above each path vertex
    max_depth = 0
    for step in range(1, max_steps + 1):
        parent_log = logsum_path[-1]
        child_logs = env.child_logs(path, parent_log)
        if path:
            logs = np.concatenate(([parent_log], child_logs))
        else:
            logs = child_logs
        w = np.exp(logs - logs.max())
        w /= w.sum()
        u = rng.uniform_at(wkey, step)
        idx = int(np.searchsorted(np.cumsum(w), u))
        idx = min(idx, len(w) - 1)
        if path and idx == 0:
            path = path[:-1]
            logsum_path.pop()
        else:
            j = idx - 1 if path else idx
            path = path + (j,)
            logsum_path.append(float(child_logs[j]))
        depth = len(path)
        max_depth = max(max_depth, depth)
        if depth == 0:
            return EpisodeOutcome("returned", step, max_depth)
        if depth == target_depth:
            return EpisodeOutcome("reached_depth", step, max_depth)
    return EpisodeOutcome("exhausted", max_steps, max_depth)


def escape_frequency(source, law: Law, target_depth: int, episodes: int, seed: int,
                     fresh_env_per_episode: bool = False) -> tuple[float, float]:
    """Fraction of episodes that reach target_depth before returning to the
    root, with its binomial standard error."""
    env = LazyEnvironment(source, law, seed)
    hits = 0
    for i in range(episodes):
        if fresh_env_per_episode:
            env = LazyEnvironment(source, law, rng.derive_key(seed, i))
        out = walk_episode(env, target_depth, max_steps=1_000_000,
                           episode_seed=rng.derive_key(seed, 0xE1, i))
        hits += out.tag == "reached_depth"
    p = hits / episodes
    return p, math.sqrt(max(p * (1 - p), 1e-300) / episodes)


# ---------------------------------------------------------------------------
# growth-profile conductance scaling (vectorized symmetric engine)


def _grouped_logsumexp(x: np.ndarray, group: int) -> np.ndarray:
    if group == 1:
        return x
    m = x.reshape(-1, group)
    mx = m.max(axis=1)
    return mx + np.log(np.exp(m - mx[:, None]).sum(axis=1))


def symmetric_environment_logs(profile: GrowthProfile, law: Law, seed: int,
                               env_index: int, depth: int) -> list[np.ndarray]:
    """Per-level log conductances for one sampled environment on the
    symmetric tree.  Level k labels come from stream (seed, env, k, position),
    so truncations at different depths share the same environment prefix."""
    counts = [int(r) for r in profile.ratios[:depth]]
    logs: list[np.ndarray] = []
    size = 1
    prev = np.zeros(1)
    for k, f in enumerate(counts, start=1):
        size *= f
        key = rng.derive_key(_SCALE_TAG, seed, env_index, k)
        labels = law.sample(key, np.arange(size, dtype=np.uint64), 1)[:, 0]
        cur = np.repeat(prev, f) + labels
        logs.append(cur)
        prev = cur
    return logs


def conductance_from_logs(profile: GrowthProfile, level_logs: list[np.ndarray]) -> tuple[float, float]:
    """(effective conductance root->bottom level, escape probability) by the
    leaf-up series/parallel reduction in log space."""
    depth = len(level_logs)
    counts = [int(r) for r in profile.ratios[:depth]]
    log_c = level_logs[depth - 1]
    for k in range(depth - 1, 0, -1):
        below = _grouped_logsumexp(log_c, counts[k])
        edge = level_logs[k - 1]
        log_c = -np.logaddexp(-edge, -below)
    log_ceff = _grouped_logsumexp(log_c, counts[0])[0]
    log_root_edges = _grouped_logsumexp(level_logs[0], counts[0])[0]
    return math.exp(log_ceff), math.exp(log_ceff - log_root_edges)


@dataclass
class DepthQuantiles:
    depth: int
    conductance_q: tuple[float, float, float]  # 25, 50, 75 percentiles
    escape_q: tuple[float, float, float]


@dataclass
class ScalingReport:
    profile: str
    law: str
    n_envs: int
    rows: list[DepthQuantiles]
    verdict: str


def conductance_scaling_mc(profile: GrowthProfile, law: Law, depths: Sequence[int],
                           n_envs: int, seed: int, threads: int = 1,
                           size_budget: int = 40_000_000) -> ScalingReport:
    """Exact effective conductance per sampled environment over a grid of
    truncation depths; medians falling no faster than 4x across the grid are
    classified transient-like, a collapse below 5 percent recurrent-like."""
    depths = sorted(set(int(d) for d in depths))
    if depths[-1] > profile.depth:
        raise ValueError("profile shorter than the largest requested depth")
    sizes = profile.level_sizes()
    total = int(sum(sizes[1:depths[-1] + 1]))
    if total > size_budget:
        raise ValueError(f"tree with {total} vertices exceeds the size budget {size_budget}")

    rows = []
    for d in depths:
        def worker(start: int, stop: int, _d=d):
            out = []
            for env in range(start, stop):
                logs = symmetric_environment_logs(profile, law, seed, env, _d)
                out.append(conductance_from_logs(profile, logs))
            return out
        chunks = rng.run_chunks(n_envs, max(1, n_envs // max(1, 4 * threads)), worker, threads)
        vals = [v for chunk in chunks for v in chunk]
        cond = np.asarray([c for c, _ in vals])
        esc = np.asarray([e for _, e in vals])
        rows.append(DepthQuantiles(
            d,
            tuple(np.percentile(cond, [25, 50, 75])),
            tuple(np.percentile(esc, [25, 50, 75])),
        ))
    first, last = rows[0].conductance_q[1], rows[-1].conductance_q[1]
    if last >= 0.25 * first:
        verdict = "transient-like"
    elif last <= 0.05 * first:
        verdict = "recurrent-like"
    else:
        verdict = "ambiguous"
    return ScalingReport(profile.describe(), law.describe(), n_envs, rows, verdict)


# ---------------------------------------------------------------------------
# edge-reinforced walk and its urn description


@dataclass
class UrnState:
    weights: dict  # child-path of the edge -> weight (1 + completed return trips)
    pending: dict  # child-path -> True when one crossing awaits its return


@dataclass
class ReinforcedStats:
    steps: int
    returns_to_root: int
    max_depth: int
    exit_sequences: dict  # vertex path -> list of local edge indices
    urn: UrnState


def reinforced_episode(source, steps: int, seed: int,
                       record_exits: bool = True) -> ReinforcedStats:
    """Walk with edge weights that start at 1 and gain 1 after each completed
    back-and-forth traversal (a crossing immediately undone by the opposite
    crossing of the same edge; on a tree, crossings of an edge alternate, so
    the weight is 1 + floor(crossings / 2))."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    key = rng.derive_key(_REINF_TAG, seed)
    weights: dict[tuple, int] = {}
    crossings: dict[tuple, int] = {}
    exits: dict[tuple, list[int]] = {}
    path: tuple = ()
    max_depth = 0
    returns = 0
    for step in range(1, steps + 1):
        n_children = source.child_count(path)
        edges: list[tuple] = []
        if path:
            edges.append(path)  # parent edge, identified by its lower endpoint
        edges.extend(path + (j,) for j in range(n_children))
        w = np.asarray([weights.get(e, 1) for e in edges], dtype=np.float64)
        cum = np.cumsum(w / w.sum())
        u = rng.uniform_at(key, step)
        idx = min(int(np.searchsorted(cum, u)), len(edges) - 1)
        if record_exits:
            exits.setdefault(path, []).append(idx)
        chosen = edges[idx]
        crossings[chosen] = crossings.get(chosen, 0) + 1
        if crossings[chosen] % 2 == 0:
            weights[chosen] = weights.get(chosen, 1) + 1
        path = path[:-1] if (path and idx == 0) else chosen
        if not path:
            returns += 1
        max_depth = max(max_depth, len(path))
    pending = {e: (c % 2 == 1) for e, c in crossings.items()}
    urn = UrnState({e: weights.get(e, 1) for e in crossings}, pending)
    return ReinforcedStats(steps, returns, max_depth, exits, urn)


def polya_sequence_prob(d: int, colors: Sequence[int]) -> Fraction:
    """Exact probability of an exit-color sequence under the single-vertex
    urn started with one ball of each of d colors."""
    if d < 1 or any(not (1 <= c <= d) for c in colors):
        raise ValueError("colors must lie in 1..d")
    w = [1] * d
    prob = Fraction(1)
    for t, c in enumerate(colors):
        prob *= Fraction(w[c - 1], d + t)
        w[c - 1] += 1
    return prob


def dirichlet_exit_prob(d: int, colors: Sequence[int]) -> Fraction:
    """Same probability through the i.i.d.-mixture representation: the exit
    distribution is uniform on the simplex, so the sequence probability has
    the closed form prod_c count_c! * (d-1)! / (d-1+T)!."""
    if d < 1 or any(not (1 <= c <= d) for c in colors):
        raise ValueError("colors must lie in 1..d")
    t = len(colors)
    counts = [0] * d
    for c in colors:
        counts[c - 1] += 1
    num = Fraction(math.factorial(d - 1))
    for cnt in counts:
        num *= math.factorial(cnt)
    return num / math.factorial(d - 1 + t)


def _chi_square_vs_table(counts: np.ndarray, probs: np.ndarray, total: int):
    expected = probs * total
    stat = float(((counts - expected) ** 2 / expected).sum())
    pvalue = float(_scipy_stats.chi2.sf(stat, df=len(probs) - 1))
    return stat, pvalue


@dataclass
class EquivalenceReport:
    d: int
    prefix: int
    episodes: int
    table: dict  # sequence -> exact Fraction
    reinforced_stat: float
    reinforced_pvalue: float
    rwre_stat: float
    rwre_pvalue: float
    both_pass: bool
    first_two_equal_freq: Optional[float]
    first_two_equal_se: Optional[float]


def equivalence_test(d: int, prefix: int, episodes: int, seed: int,
                     significance: float = 0.001) -> EquivalenceReport:
    """Compare the empirical distribution of the first `prefix` root exits of
    the reinforced walk on a d-star, and of the walk in an i.i.d.-exponential
    edge environment at one vertex, against the exact urn table."""
    n_cells = d ** prefix
    if n_cells > 1024:
        raise ValueError("d**prefix must stay testable (<= 1024 cells)")
    from .trees import uniform_profile
    star = SymmetricSource(uniform_profile(d, 1))

    seqs = []
    def gen(prefix_so_far):
        if len(prefix_so_far) == prefix:
            seqs.append(tuple(prefix_so_far))
            return
        for c in range(1, d + 1):
            gen(prefix_so_far + [c])
    gen([])
    table = {s: polya_sequence_prob(d, s) for s in seqs}
    cell_index = {s: i for i, s in enumerate(seqs)}
    probs = np.asarray([float(table[s]) for s in seqs])

    reinforced_counts = np.zeros(n_cells, dtype=np.int64)
    equal_hits = 0
    for ep in range(episodes):
        st = reinforced_episode(star, steps=2 * prefix, seed=rng.derive_key(seed, 0xA1, ep))
        root_exits = tuple(j + 1 for j in st.exit_sequences[()][:prefix])
        reinforced_counts[cell_index[root_exits]] += 1
        if prefix >= 2 and root_exits[0] == root_exits[1]:
            equal_hits += 1

    key = rng.derive_key(seed, 0xB2)
    rwre_counts = np.zeros(n_cells, dtype=np.int64)
    chunk = 16384
    for start in range(0, episodes, chunk):
        stop = min(start + chunk, episodes)
        streams = np.arange(start, stop, dtype=np.uint64)
        u = rng.uniform_matrix(key, streams, d + prefix)
        labels = -np.log(u[:, :d])  # exponential weights per directed root edge
        p = labels / labels.sum(axis=1, keepdims=True)
        cum = np.cumsum(p, axis=1)
        draws = u[:, d:d + prefix]
        idx = (draws[:, :, None] > cum[:, None, :]).sum(axis=2)
        flat = np.zeros(stop - start, dtype=np.int64)
        for t in range(prefix):
            flat = flat * d + idx[:, t]
        np.add.at(rwre_counts, flat, 1)

    # flat index above enumerates colors 0..d-1 most-significant-first, which
    # matches the lexicographic order of seqs
    r_stat, r_p = _chi_square_vs_table(reinforced_counts, probs, episodes)
    w_stat, w_p = _chi_square_vs_table(rwre_counts, probs, episodes)
    freq = se = None
    if prefix >= 2:
        freq = equal_hits / episodes
        se = math.sqrt(max(freq * (1 - freq), 1e-300) / episodes)
    return EquivalenceReport(
        d, prefix, episodes, table, r_stat, r_p, w_stat, w_p,
        bool(r_p > significance and w_p > significance), freq, se)


# ---------------------------------------------------------------------------
# heavy-tailed linear-boundary survival


@dataclass
class StableDecayRow:
    n: int
    estimate: float
    stderr: float
    ci_low: float
    ci_high: float


@dataclass
class StableDecayReport:
    alpha: float
    drift: float
    episodes: int
    rows: list[StableDecayRow]
    slope: float
    slope_points: int


def stable_ray_decay(alpha: float, drift: float, grid: Sequence[int], episodes: int,
                     seed: int, threads: int = 1, chunk: int = 16384) -> StableDecayReport:
    """Estimate P(S_k > drift*k for all k <= n) for symmetric stable steps on
    a grid of horizons, plus the weighted log-log slope of the decay."""
    law = SymmetricStable(alpha)
    grid = sorted(set(int(n) for n in grid))
    nmax = grid[-1]
    key = rng.derive_key(_STABLE_TAG, seed)
    ks = np.arange(1, nmax + 1)
    bound = drift * ks

    def worker(start: int, stop: int) -> np.ndarray:
        streams = np.arange(start, stop, dtype=np.uint64)
        x = law.sample(key, streams, nmax)
        s = np.cumsum(x, axis=1)
        ok = s > bound[None, :]
        bad = ~ok
        first_bad = np.where(bad.any(axis=1), bad.argmax(axis=1) + 1, nmax + 1)
        return np.asarray([(first_bad > n).sum() for n in grid], dtype=np.int64)

    parts = rng.run_chunks(episodes, chunk, worker, threads)
    counts = np.sum(parts, axis=0)

    rows = []
    xs, ys, ws = [], [], []
    for n, cnt in zip(grid, counts):
        p = cnt / episodes
        z = 1.959963984540054
        if cnt == 0:
            # all-zero cell: rule-of-three upper bound, dropped from the fit
            se = 1.0 / episodes
            rows.append(StableDecayRow(n, 0.0, se, 0.0, 3.0 / episodes))
            continue
        se = math.sqrt(max(p * (1 - p), 1e-300) / episodes)
        rows.append(StableDecayRow(n, p, se, max(0.0, p - z * se), min(1.0, p + z * se)))
        xs.append(math.log(n))
        ys.append(math.log(p))
        ws.append(p * episodes / max(1.0 - p, 1e-12))
    if len(xs) >= 2:
        xs_a, ys_a, ws_a = map(np.asarray, (xs, ys, ws))
        xbar = (ws_a * xs_a).sum() / ws_a.sum()
        ybar = (ws_a * ys_a).sum() / ws_a.sum()
        slope = float((ws_a * (xs_a - xbar) * (ys_a - ybar)).sum()
                      / (ws_a * (xs_a - xbar) ** 2).sum())
    else:
        slope = math.nan
    return StableDecayReport(alpha, drift, episodes, rows, slope, len(xs))
