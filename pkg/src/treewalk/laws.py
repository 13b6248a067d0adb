"""Increment and coordinate laws.

A law bundles exact descriptive data (mean, variance, interval probabilities,
moment generating function where it exists) with deterministic vectorized
sampling driven by the counter streams in :mod:`treewalk.rng`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from . import rng

Rational = Union[int, Fraction]


class LawError(ValueError):
    pass


class MgfDivergence(LawError):
    """Raised when E exp(lam*X) is requested for a law without one."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # exact binary value of the float
    if isinstance(x, str):
        return Fraction(x)
    raise LawError(f"cannot interpret {x!r} as an exact probability")


@dataclass(frozen=True)
class FiniteLattice:
    """Law supported on ``atoms[i] * unit`` with probabilities ``probs[i]``.

    Atoms are integers on a common lattice unit; probabilities are kept as
    exact rationals so downstream dynamic programs can stay exact whenever
    the inputs are exact.
    """

    atoms: tuple[int, ...]
    probs: tuple[Fraction, ...]
    unit: Fraction = Fraction(1)

    def __post_init__(self):
        if len(self.atoms) != len(self.probs) or not self.atoms:
            raise LawError("atoms and probs must be nonempty and equal length")
        if len(set(self.atoms)) != len(self.atoms):
            raise LawError("lattice atoms must be distinct")
        if any(int(a) != a for a in self.atoms):
            raise LawError("lattice atoms must be integers")
        probs = tuple(_as_fraction(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "atoms", tuple(int(a) for a in self.atoms))
        object.__setattr__(self, "unit", _as_fraction(self.unit))
        if self.unit <= 0:
            raise LawError("lattice unit must be positive")
        if any(p < 0 for p in probs):
            raise LawError("negative probability")
        total = sum(probs)
        if abs(float(total) - 1.0) > 1e-15:
            raise LawError(f"probabilities sum to {float(total)}, not 1")
        order = sorted(range(len(self.atoms)), key=lambda i: self.atoms[i])
        object.__setattr__(self, "atoms", tuple(self.atoms[i] for i in order))
        object.__setattr__(self, "probs", tuple(probs[i] for i in order))

    @property
    def is_exact(self) -> bool:
        return sum(self.probs) == 1

    def mean_exact(self) -> Fraction:
        return sum((p * a for a, p in zip(self.atoms, self.probs)), Fraction(0)) * self.unit

    def mean(self) -> float:
        return float(self.mean_exact())

    def variance(self) -> float:
        m = self.mean_exact()
        var = sum((p * (a * self.unit - m) ** 2 for a, p in zip(self.atoms, self.probs)), Fraction(0))
        return float(var)

    def is_centered(self, tol: float = 1e-12) -> bool:
        return abs(self.mean()) <= tol

    def mgf(self, lam: float) -> float:
        return float(sum(float(p) * math.exp(lam * a * float(self.unit))
                         for a, p in zip(self.atoms, self.probs)))

    def cdf_exact(self, atom: int) -> Fraction:
        """P(X <= atom * unit) as a rational."""
        return sum((p for a, p in zip(self.atoms, self.probs) if a <= atom), Fraction(0))

    def sample_lattice(self, key: int, streams, count: int) -> np.ndarray:
        """Integer atoms, matrix (len(streams), count)."""
        u = rng.uniform_matrix(key, streams, count)
        cum = np.cumsum(np.asarray([float(p) for p in self.probs]))
        cum[-1] = 1.0
        idx = np.searchsorted(cum, u, side="left")
        return np.asarray(self.atoms)[idx]

    def sample(self, key: int, streams, count: int) -> np.ndarray:
        return self.sample_lattice(key, streams, count) * float(self.unit)

    def describe(self) -> str:
        items = ",".join(f"{a}:{p}" for a, p in zip(self.atoms, self.probs))
        return f"lattice[{items};unit={self.unit}]"


def rademacher() -> FiniteLattice:
    return FiniteLattice((-1, 1), (Fraction(1, 2), Fraction(1, 2)))


def constant(value: int, unit: Rational = 1) -> FiniteLattice:
    return FiniteLattice((value,), (Fraction(1),), Fraction(unit))


@dataclass(frozen=True)
class Gaussian:
    mean_: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.sd <= 0:
            raise LawError("sd must be positive")

    def mean(self) -> float:
        return self.mean_

    def variance(self) -> float:
        return self.sd ** 2

    def is_centered(self, tol: float = 1e-12) -> bool:
        return abs(self.mean_) <= tol

    def mgf(self, lam: float) -> float:
        return math.exp(lam * self.mean_ + 0.5 * (lam * self.sd) ** 2)

    def sample(self, key: int, streams, count: int) -> np.ndarray:
        u = rng.uniform_matrix(key, streams, 2 * count)
        u1, u2 = u[:, :count], u[:, count:]
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return self.mean_ + self.sd * z

    def interval_prob(self, lo: float, hi: float) -> float:
        a = (lo - self.mean_) / (self.sd * math.sqrt(2.0))
        b = (hi - self.mean_) / (self.sd * math.sqrt(2.0))
        return max(0.0, 0.5 * (math.erf(b) - math.erf(a)))

    def describe(self) -> str:
        return f"gauss[{self.mean_},{self.sd}]"


@dataclass(frozen=True)
class SymmetricStable:
    """Symmetric stable law, characteristic function exp(-|scale*t|^alpha)."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not (1.0 < self.alpha <= 2.0):
            raise LawError("stable index must lie in (1, 2]")
        if self.scale <= 0:
            raise LawError("scale must be positive")

    def mean(self) -> float:
        return 0.0

    def is_centered(self, tol: float = 1e-12) -> bool:
        return True

    def mgf(self, lam: float) -> float:
        raise MgfDivergence(f"{self.describe()} has no moment generating function")

    def sample(self, key: int, streams, count: int) -> np.ndarray:
        # Chambers-Mallows-Stuck transform, symmetric case.
        u = rng.uniform_matrix(key, streams, 2 * count)
        v = np.pi * (u[:, :count] - 0.5)
        w = -np.log(u[:, count:])
        a = self.alpha
        if a == 2.0:
            x = 2.0 * np.sin(v) * np.sqrt(w)  # N(0, 2), the alpha=2 boundary
        else:
            x = (np.sin(a * v) / np.cos(v) ** (1.0 / a)
                 * (np.cos((1.0 - a) * v) / w) ** ((1.0 - a) / a))
        return self.scale * x

    def describe(self) -> str:
        return f"stable[{self.alpha},{self.scale}]"


@dataclass(frozen=True)
class LogExponentialRatio:
    """Law of log(E1/E2) for independent unit exponentials (standard logistic)."""

    def mean(self) -> float:
        return 0.0

    def variance(self) -> float:
        return math.pi ** 2 / 3.0

    def is_centered(self, tol: float = 1e-12) -> bool:
        return True

    def mgf(self, lam: float) -> float:
        # E (E1/E2)^lam = Gamma(1+lam) * Gamma(1-lam), finite on [0, 1)
        if lam >= 1.0:
            return math.inf
        return math.gamma(1.0 + lam) * math.gamma(1.0 - lam)

    def sample(self, key: int, streams, count: int) -> np.ndarray:
        u = rng.uniform_matrix(key, streams, 2 * count)
        return np.log(-np.log(u[:, :count])) - np.log(-np.log(u[:, count:]))

    def describe(self) -> str:
        return "logexpratio"


@dataclass(frozen=True)
class Uniform:
    """Uniform coordinate law on [lo, hi]; interval probabilities are exact
    rationals when the endpoints are."""

    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_fraction(self.lo))
        object.__setattr__(self, "hi", _as_fraction(self.hi))
        if self.hi <= self.lo:
            raise LawError("uniform law needs lo < hi")

    def mean(self) -> float:
        return float((self.lo + self.hi) / 2)

    def variance(self) -> float:
        return float((self.hi - self.lo) ** 2 / 12)

    def is_centered(self, tol: float = 1e-12) -> bool:
        return abs(self.mean()) <= tol

    def mgf(self, lam: float) -> float:
        if lam == 0.0:
            return 1.0
        a, b = float(self.lo), float(self.hi)
        return (math.exp(lam * b) - math.exp(lam * a)) / (lam * (b - a))

    def interval_prob_exact(self, lo, hi) -> Fraction:
        lo = max(_as_fraction(lo), self.lo)
        hi = min(_as_fraction(hi), self.hi)
        if hi <= lo:
            return Fraction(0)
        return (hi - lo) / (self.hi - self.lo)

    def sample(self, key: int, streams, count: int) -> np.ndarray:
        u = rng.uniform_matrix(key, streams, count)
        return float(self.lo) + (float(self.hi) - float(self.lo)) * u

    def describe(self) -> str:
        return f"uniform[{self.lo},{self.hi}]"


Law = Union[FiniteLattice, Gaussian, SymmetricStable, LogExponentialRatio, Uniform]


def quantize(law, n_atoms: int = 128, spread: float = 8.0) -> FiniteLattice:
    """Lattice approximation of a continuous law on ``n_atoms`` mid-quantile
    points, recentred so the lattice mean is zero to within half a unit."""
    if isinstance(law, FiniteLattice):
        return law
    qs = (np.arange(n_atoms) + 0.5) / n_atoms
    if isinstance(law, Gaussian):
        from scipy.stats import norm
        vals = law.mean_ + law.sd * norm.ppf(qs)
        sd = law.sd
    elif isinstance(law, LogExponentialRatio):
        vals = np.log(qs / (1.0 - qs))
        sd = math.pi / math.sqrt(3.0)
    elif isinstance(law, Uniform):
        vals = float(law.lo) + (float(law.hi) - float(law.lo)) * qs
        sd = math.sqrt(law.variance())
    else:
        raise LawError(f"cannot quantize {law.describe()}")
    unit = Fraction(sd / (spread * n_atoms)).limit_denominator(10 ** 9)
    vals = vals - vals.mean()
    ints = np.rint(vals / float(unit)).astype(int)
    weight: dict[int, Fraction] = {}
    p = Fraction(1, n_atoms)
    for a in ints:
        weight[int(a)] = weight.get(int(a), Fraction(0)) + p
    atoms = tuple(sorted(weight))
    return FiniteLattice(atoms, tuple(weight[a] for a in atoms), unit)


def parse_law(spec: str) -> Law:
    """Parse a CLI law spec.

    rademacher | lattice:a:p,a:p,...[:unit=u] | gauss:mean:sd |
    stable:alpha[:scale] | logexpratio | uniform:lo:hi
    """
    parts = spec.split(":")
    kind = parts[0].lower()
    if kind == "rademacher":
        return rademacher()
    if kind == "gauss":
        return Gaussian(float(parts[1]), float(parts[2]))
    if kind == "stable":
        scale = float(parts[2]) if len(parts) > 2 else 1.0
        return SymmetricStable(float(parts[1]), scale)
    if kind == "logexpratio":
        return LogExponentialRatio()
    if kind == "uniform":
        return Uniform(Fraction(parts[1]), Fraction(parts[2]))
    if kind == "lattice":
        unit = Fraction(1)
        body = parts[1:]
        if body and body[-1].startswith("unit="):
            unit = Fraction(body[-1][5:])
            body = body[:-1]
        atoms, probs = [], []
        for item in ":".join(body).split(","):
            a, p = item.split("@")
            atoms.append(int(a))
            probs.append(Fraction(p))
        return FiniteLattice(tuple(atoms), tuple(probs), unit)
    raise LawError(f"unknown law spec {spec!r}")
