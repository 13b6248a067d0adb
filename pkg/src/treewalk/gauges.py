"""Level gauges: positive nonincreasing weights phi(n) with phi(0) = 1."""

from __future__ import annotations

import math
from dataclasses import dataclass


class GaugeError(ValueError):
    pass


@dataclass(frozen=True)
class PowerGauge:
    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise GaugeError("power gauge exponent must be positive")

    def value(self, n: int) -> float:
        return 1.0 if n == 0 else float(n) ** -self.alpha

    def describe(self) -> str:
        return f"pow[{self.alpha}]"


@dataclass(frozen=True)
class ExpGauge:
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise GaugeError("exponential gauge rate must be positive")

    def value(self, n: int) -> float:
        return math.exp(-self.beta * n)

    def describe(self) -> str:
        return f"exp[{self.beta}]"


@dataclass(frozen=True)
class TabulatedGauge:
    values: tuple[float, ...]  # values[n-1] = phi(n); phi(0) = 1 by convention

    def __post_init__(self):
        prev = 1.0
        for i, v in enumerate(self.values):
            if v <= 0:
                raise GaugeError(f"gauge value at level {i + 1} is not positive")
            if v > prev + 1e-15:
                raise GaugeError(f"gauge increases at level {i + 1}")
            prev = v

    def value(self, n: int) -> float:
        if n == 0:
            return 1.0
        if n > len(self.values):
            raise GaugeError(f"tabulated gauge has no value at level {n}")
        return self.values[n - 1]

    def describe(self) -> str:
        return f"tab[{len(self.values)} values]"


Gauge = PowerGauge | ExpGauge | TabulatedGauge


def parse_gauge(spec: str) -> Gauge:
    """pow:alpha | exp:beta | tab:v1,v2,... | tab:@file.csv (one value per line)"""
    kind, _, rest = spec.partition(":")
    kind = kind.lower()
    if kind == "pow":
        return PowerGauge(float(rest))
    if kind == "exp":
        return ExpGauge(float(rest))
    if kind == "tab":
        if rest.startswith("@"):
            with open(rest[1:]) as fh:
                vals = [float(line.strip()) for line in fh if line.strip()]
        else:
            vals = [float(x) for x in rest.split(",")]
        return TabulatedGauge(tuple(vals))
    raise GaugeError(f"unknown gauge spec {spec!r}")
