"""Oscillatory coefficients A(x, x/eps) with explicit slow and fast parts.

Every material here freezes, at a fixed slow position, to a fast profile of
the form ``alpha + beta * sin(2 pi y)``, so harmonic means have a closed
form.  A generic periodic-trapezoid harmonic mean is provided as well and is
used to cross-check the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ConfigError

__all__ = [
    "SineProfile",
    "SineFast",
    "SumSlowFast",
    "ProductSlowFast",
    "Constant",
    "Material",
    "REGISTRY",
    "material_eval",
    "frozen_fast_profile",
    "harmonic_mean_barA",
    "harmonic_mean_quadrature",
    "arithmetic_mean",
    "parse_material",
]

_TWO_PI = 2.0 * math.pi
_N_CHECK = 10_000
_N_HARMONIC = 2**12


@dataclass(frozen=True)
class SineProfile:
    """The 1-periodic fast profile y -> alpha + beta * sin(2 pi y)."""

    alpha: float
    beta: float

    def __call__(self, y):
        return self.alpha + self.beta * np.sin(_TWO_PI * np.asarray(y, dtype=float))

    @property
    def harmonic_mean(self) -> float:
        return math.sqrt(self.alpha**2 - self.beta**2)

    @property
    def mean(self) -> float:
        return self.alpha

    @property
    def max(self) -> float:
        return self.alpha + abs(self.beta)

    @property
    def min(self) -> float:
        return self.alpha - abs(self.beta)


def _sample_axis() -> np.ndarray:
    return np.arange(_N_CHECK) / _N_CHECK


def _require_positive(lowest: float, what: str) -> None:
    if not lowest > 0:
        raise ConfigError(f"{what} is not uniformly positive (sampled minimum {lowest:g})")


@dataclass(frozen=True)
class SineFast:
    """A(y) = alpha + beta_amp * sin(2 pi y); no slow variation."""

    alpha: float
    beta_amp: float

    def __post_init__(self):
        _require_positive(float(self.profile(_sample_axis()).min()), str(self))

    @property
    def profile(self) -> SineProfile:
        return SineProfile(self.alpha, self.beta_amp)

    def __call__(self, x, eps):
        return self.profile(np.asarray(x, dtype=float) / eps)

    def frozen(self, x_slow) -> SineProfile:
        return self.profile

    @property
    def has_slow_variation(self) -> bool:
        return False

    @property
    def max_value(self) -> float:
        return self.profile.max


@dataclass(frozen=True)
class SumSlowFast:
    """A(x, y) = alpha + slow_amp * cos(2 pi x) + fast_amp * sin(2 pi y)."""

    alpha: float
    slow_amp: float
    fast_amp: float

    def __post_init__(self):
        s = _sample_axis()
        lowest = (self.alpha + self.slow_amp * np.cos(_TWO_PI * s)).min() + (
            self.fast_amp * np.sin(_TWO_PI * s)
        ).min()
        _require_positive(float(lowest), str(self))

    def __call__(self, x, eps):
        x = np.asarray(x, dtype=float)
        return (
            self.alpha
            + self.slow_amp * np.cos(_TWO_PI * x)
            + self.fast_amp * np.sin(_TWO_PI * x / eps)
        )

    def frozen(self, x_slow) -> SineProfile:
        return SineProfile(self.alpha + self.slow_amp * math.cos(_TWO_PI * x_slow), self.fast_amp)

    @property
    def has_slow_variation(self) -> bool:
        return self.slow_amp != 0

    @property
    def max_value(self) -> float:
        return self.alpha + abs(self.slow_amp) + abs(self.fast_amp)


@dataclass(frozen=True)
class ProductSlowFast:
    """A(x, y) = fast(y) * (c0 + c1 * (cos(2 pi x) - 1))."""

    fast: SineFast
    c0: float
    c1: float

    def __post_init__(self):
        slow = self.slow_factor(_sample_axis())
        _require_positive(float(slow.min()), f"slow factor of {self}")

    def slow_factor(self, x):
        return self.c0 + self.c1 * (np.cos(_TWO_PI * np.asarray(x, dtype=float)) - 1.0)

    def __call__(self, x, eps):
        return self.fast(x, eps) * self.slow_factor(x)

    def frozen(self, x_slow) -> SineProfile:
        s = float(self.slow_factor(x_slow))
        return SineProfile(s * self.fast.alpha, s * self.fast.beta_amp)

    @property
    def has_slow_variation(self) -> bool:
        return self.c1 != 0

    @property
    def max_value(self) -> float:
        slow_max = float(self.slow_factor(_sample_axis()).max())
        return self.fast.max_value * slow_max


@dataclass(frozen=True)
class Constant:
    """A homogeneous medium, A = c."""

    c: float

    def __post_init__(self):
        _require_positive(self.c, str(self))

    def __call__(self, x, eps):
        return np.full_like(np.asarray(x, dtype=float), self.c)

    def frozen(self, x_slow) -> SineProfile:
        return SineProfile(self.c, 0.0)

    @property
    def has_slow_variation(self) -> bool:
        return False

    @property
    def max_value(self) -> float:
        return self.c


Material = Union[SineFast, SumSlowFast, ProductSlowFast, Constant]

REGISTRY: dict[str, Material] = {
    "A1": SineFast(1.1, 1.0),
    "A2": SumSlowFast(1.1, 0.5, 0.5),
    "A3": ProductSlowFast(SineFast(1.1, 1.0), 1.5, 0.5),
}


def material_eval(m: Material, x, eps: float):
    """A(x, x/eps), vectorized over ``x``."""
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    return m(x, eps)


def frozen_fast_profile(m: Material, x_slow: float) -> SineProfile:
    """The 1-periodic profile y -> A(x_slow, y)."""
    return m.frozen(x_slow)


def harmonic_mean_quadrature(profile: Callable, n: int = _N_HARMONIC) -> float:
    """Harmonic mean of a 1-periodic function by the periodic trapezoid rule."""
    y = np.arange(n) / n
    return float(1.0 / np.mean(1.0 / np.asarray(profile(y), dtype=float)))


def harmonic_mean_barA(m: Material, x=0.0):
    """Homogenized coefficient Abar(x), the harmonic mean of the frozen profile.

    Vectorized over ``x``.
    """
    if np.ndim(x):
        return np.array([harmonic_mean_barA(m, xi) for xi in np.ravel(x)]).reshape(np.shape(x))
    return m.frozen(float(x)).harmonic_mean


def arithmetic_mean(m: Material, x=0.0) -> float:
    return m.frozen(float(x)).mean


def parse_material(key: str) -> Material:
    """Parse ``A1|A2|A3|constant:<c>|sinefast:<alpha>,<beta>``."""
    key = key.strip()
    if key in REGISTRY:
        return REGISTRY[key]
    kind, _, args = key.partition(":")
    try:
        if kind.lower() == "constant":
            return Constant(float(args))
        if kind.lower() == "sinefast":
            alpha, beta = (float(v) for v in args.split(","))
            return SineFast(alpha, beta)
    except ValueError as exc:
        raise ConfigError(f"bad material specification {key!r}: {exc}") from exc
    raise ConfigError(
        f"unknown material {key!r}; expected A1, A2, A3, constant:<c> or sinefast:<alpha>,<beta>"
    )


def material_name(m: Material) -> str:
    for name, known in REGISTRY.items():
        if known == m:
            return name
    if isinstance(m, Constant):
        return f"constant:{m.c:g}"
    if isinstance(m, SineFast):
        return f"sinefast:{m.alpha:g},{m.beta_amp:g}"
    return repr(m)
