"""Leapfrog engine for u_tt = d/dx F on a periodic 1D grid, and reference solvers.

The scheme is second order in time and fourth order in space:

    U^{n+1}_m = 2 U^n_m - U^{n-1}_m
                + dt^2/(24 h) (-F_{m+3/2} + 27 F_{m+1/2} - 27 F_{m-1/2} + F_{m-3/2})

Fluxes live on the half points.  Throughout the package, index ``m`` of a
flux array refers to the half point x_{m-1/2} = a + (m - 1/2) h.

Three flux closures give the reference solvers: the fully resolved
oscillatory medium (DNS), the homogenized medium (HOM), and the long-time
dispersive effective equation (EFF).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .errors import ConfigError, StabilityError
from .materials import Material, harmonic_mean_barA

__all__ = [
    "Grid1D",
    "WaveField",
    "Trajectory",
    "FluxProvider",
    "CoefficientFlux",
    "DispersiveFlux",
    "fd4_halfpoint_derivative",
    "halfpoint_d1",
    "halfpoint_d3",
    "flux_divergence",
    "leapfrog_step",
    "start_from_rest",
    "integrate",
    "run_dns",
    "run_homogenized",
    "run_effective",
    "l2_distance",
    "gaussian_pulse",
    "symbol_bounds",
]

log = logging.getLogger(__name__)

# Leapfrog is stable iff dt^2 * rho(L) < 4; keep a hair of margin for round-off.
_LEAPFROG_LIMIT = 4.0 * (1.0 - 1e-9)
_D1_SYMBOL_MAX = 28.0 / 12.0  # max of |(27 * 2 sin(t/2) - 2 sin(3t/2)) / 24|


@dataclass(frozen=True)
class Grid1D:
    """Periodic uniform grid with nodes x_m = a + m h, m = 0..n-1."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ConfigError(f"grid needs at least 8 cells, got n={self.n}")
        if not self.b > self.a:
            raise ConfigError(f"empty domain [{self.a}, {self.b}]")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.n)

    @property
    def half_points(self) -> np.ndarray:
        """x_{m-1/2} for m = 0..n-1 (the first one lies just left of ``a``)."""
        return self.a + self.h * (np.arange(self.n) - 0.5)

    @classmethod
    def unit(cls, n: int) -> "Grid1D":
        return cls(0.0, 1.0, int(n))


@dataclass
class WaveField:
    """Two consecutive time levels of a periodic grid function."""

    grid: Grid1D
    u_prev: np.ndarray
    u_curr: np.ndarray
    t: float
    dt: float

    def __post_init__(self):
        n = self.grid.n
        if np.shape(self.u_prev) != (n,) or np.shape(self.u_curr) != (n,):
            raise ConfigError(f"field levels must have length {n}")
        if not self.dt > 0:
            raise ConfigError(f"time step must be positive, got {self.dt}")

    def reversed(self) -> "WaveField":
        """The same state with time running backwards."""
        return WaveField(self.grid, self.u_curr.copy(), self.u_prev.copy(), -self.t, self.dt)


@dataclass
class Trajectory:
    grid: Grid1D
    times: np.ndarray
    states: np.ndarray
    label: str = ""
    info: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def t_final(self) -> float:
        return float(self.times[-1])


class FluxProvider(Protocol):
    """Maps the nodal values u to the fluxes F_{m-1/2} at every half point.

    ``stiffness`` bounds h^2 times the spectral radius of the discrete operator
    u -> divergence(F(u)); the leapfrog guard uses it.
    """

    stiffness: float

    def __call__(self, u: np.ndarray) -> np.ndarray: ...


def fd4_halfpoint_derivative(values: np.ndarray, m: int, h: float) -> float:
    """Fourth-order first derivative at x_{m-1/2} from v_{m-2}, .., v_{m+1} (periodic)."""
    n = len(values)
    v = [values[(m + k) % n] for k in (-2, -1, 0, 1)]
    return (v[0] - 27.0 * v[1] + 27.0 * v[2] - v[3]) / (24.0 * h)


def halfpoint_d1(u: np.ndarray, h: float) -> np.ndarray:
    """:func:`fd4_halfpoint_derivative` at every half point."""
    return (np.roll(u, 2, axis=-1) - 27.0 * np.roll(u, 1, axis=-1) + 27.0 * u - np.roll(u, -1, axis=-1)) / (
        24.0 * h
    )


def halfpoint_d3(u: np.ndarray, h: float) -> np.ndarray:
    """Second-order third derivative at every half point, exact for cubics."""
    return (np.roll(u, -1, axis=-1) - 3.0 * u + 3.0 * np.roll(u, 1, axis=-1) - np.roll(u, 2, axis=-1)) / h**3


def flux_divergence(flux: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order divergence at the nodes of half-point fluxes."""
    return (
        -np.roll(flux, -2, axis=-1) + 27.0 * np.roll(flux, -1, axis=-1) - 27.0 * flux + np.roll(flux, 1, axis=-1)
    ) / (24.0 * h)


def symbol_bounds(a, b, h: float, n_theta: int = 2049) -> tuple[float, float]:
    """Range of h^2 omega^2 over the grid modes for the flux a*D1 + b*D3.

    ``a`` and ``b`` may be arrays of local (frozen) coefficients; the range is
    taken over all of them.  Returns ``(min, max)``; a negative minimum means
    that some grid mode grows exponentially.
    """
    theta = np.linspace(0.0, math.pi, n_theta)
    s = np.sin(theta / 2)
    g = (54.0 * s - 2.0 * np.sin(1.5 * theta)) / 24.0
    a = np.atleast_1d(np.asarray(a, dtype=float))[:, None]
    b = np.atleast_1d(np.asarray(b, dtype=float))[:, None]
    w2 = a * g**2 - 8.0 * (b / h**2) * g * s**3
    return float(w2.min()), float(w2.max())


class CoefficientFlux:
    """F_{m-1/2} = a_{m-1/2} * D1(u)_{m-1/2}."""

    def __init__(self, coeff: np.ndarray, h: float):
        self.coeff = np.asarray(coeff, dtype=float)
        self.h = h
        self.stiffness = float(self.coeff.max()) * _D1_SYMBOL_MAX**2

    def __call__(self, u):
        return self.coeff * halfpoint_d1(u, self.h)


class DispersiveFlux:
    """F_{m-1/2} = a * D1(u) + b * D3(u) with per-half-point a and b."""

    def __init__(self, a: np.ndarray, b: np.ndarray, h: float, check_coarse: bool = True):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.h = h
        lo, hi = symbol_bounds(self.a, self.b, h)
        if check_coarse and lo < 0:
            raise StabilityError(
                f"grid spacing h={h:g} is too fine for the dispersive flux "
                f"(a negative-frequency mode exists, min h^2 omega^2 = {lo:.3g}); use a coarser grid"
            )
        self.stiffness = hi

    def __call__(self, u):
        return self.a * halfpoint_d1(u, self.h) + self.b * halfpoint_d3(u, self.h)


def _check_cfl(flux: FluxProvider, dt: float, h: float) -> None:
    ratio = (dt / h) ** 2 * flux.stiffness
    if not ratio <= _LEAPFROG_LIMIT:
        lam_max = math.sqrt(_LEAPFROG_LIMIT / flux.stiffness)
        raise StabilityError(
            f"CFL violated: dt/h = {dt / h:.4g} exceeds the leapfrog limit {lam_max:.4g} for this flux"
        )


def leapfrog_step(w: WaveField, flux: FluxProvider) -> WaveField:
    """Advance two time levels by one step."""
    h = w.grid.h
    _check_cfl(flux, w.dt, h)
    u_next = 2.0 * w.u_curr - w.u_prev + w.dt**2 * flux_divergence(flux(w.u_curr), h)
    return WaveField(w.grid, w.u_curr, u_next, w.t + w.dt, w.dt)


def start_from_rest(grid: Grid1D, u0: np.ndarray, flux: FluxProvider, dt: float) -> WaveField:
    """Levels (u^0, u^1) for zero initial velocity, using the ghost level u^{-1} = u^1."""
    _check_cfl(flux, dt, grid.h)
    u0 = np.asarray(u0, dtype=float)
    u1 = u0 + 0.5 * dt**2 * flux_divergence(flux(u0), grid.h)
    return WaveField(grid, u0.copy(), u1, dt, dt)


def _step_count(T: float, lam: float, h: float) -> int:
    if T < 0:
        raise ConfigError(f"final time must be non-negative, got {T}")
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    return int(math.ceil(T / (lam * h) - 1e-9)) if T > 0 else 0


def integrate(
    grid: Grid1D,
    u0: np.ndarray,
    flux: FluxProvider,
    T: float,
    lam: float,
    snapshots: int = 1,
    label: str = "",
) -> Trajectory:
    """Solve u_tt = d/dx F(u) from rest up to time T.

    The step is dt = T / ceil(T / (lam h)), so T is hit exactly and the
    effective CFL ratio never exceeds ``lam``.

    Args:
        snapshots: number of equal intervals at whose ends the state is
            recorded; the initial state is always recorded too.
    """
    u0 = np.asarray(u0, dtype=float)
    n_steps = _step_count(T, lam, grid.h)
    if n_steps == 0:
        return Trajectory(grid, np.array([0.0]), u0[None, :].copy(), label, {"steps": 0})
    dt = T / n_steps
    snapshots = max(1, min(int(snapshots), n_steps))
    marks = {round(k * n_steps / snapshots): k for k in range(1, snapshots + 1)}
    times = [0.0]
    states = [u0.copy()]
    _check_cfl(flux, dt, grid.h)
    w = start_from_rest(grid, u0, flux, dt)
    for step in range(1, n_steps + 1):
        if step > 1:
            # inlined leapfrog_step; the CFL check was done once above
            u_next = 2.0 * w.u_curr - w.u_prev + dt**2 * flux_divergence(flux(w.u_curr), grid.h)
            w.u_prev, w.u_curr = w.u_curr, u_next
        if step in marks:
            times.append(step * dt)
            states.append(w.u_curr.copy())
    log.debug("%s: %d steps of dt=%.4g on %d cells", label or "run", n_steps, dt, grid.n)
    return Trajectory(grid, np.array(times), np.array(states), label, {"steps": n_steps, "dt": dt})


def gaussian_pulse(x):
    """The periodic pulse exp(-100 x^2) + exp(-100 (1 - x)^2) used in all experiments."""
    x = np.asarray(x, dtype=float)
    return np.exp(-100.0 * x**2) + np.exp(-100.0 * (1.0 - x) ** 2)


def _coarse_grid(rho: int) -> Grid1D:
    if int(rho) != rho or rho < 8:
        raise ConfigError(f"rho must be an integer >= 8, got {rho}")
    return Grid1D.unit(int(rho))


def run_dns(
    m: Material,
    eps: float,
    f: Callable,
    T: float,
    rho_eps: int,
    lam: float,
    snapshots: int = 1,
) -> Trajectory:
    """Fully resolved solve of u_tt = (A(x, x/eps) u_x)_x on [0, 1] with rho_eps points per eps."""
    if int(rho_eps) != rho_eps or rho_eps < 16:
        raise ConfigError(f"rho_eps must be an integer >= 16, got {rho_eps}")
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    n = int(round(rho_eps / eps))
    grid = Grid1D.unit(n)
    flux = CoefficientFlux(m(grid.half_points, eps), grid.h)
    return integrate(grid, f(grid.nodes), flux, T, lam, snapshots, "dns")


def run_homogenized(m: Material, f: Callable, T: float, rho: int, lam: float, snapshots: int = 1) -> Trajectory:
    """Solve the homogenized equation u_tt = (Abar(x) u_x)_x on the coarse grid h = 1/rho."""
    grid = _coarse_grid(rho)
    flux = CoefficientFlux(harmonic_mean_barA(m, grid.half_points), grid.h)
    return integrate(grid, f(grid.nodes), flux, T, lam, snapshots, "hom")


def run_effective(
    m: Material,
    eps: float,
    f: Callable,
    T: float,
    rho: int,
    lam: float,
    coeffs=None,
    snapshots: int = 1,
) -> Trajectory:
    """Solve the long-time effective equation u_tt = (Abar u_x + eps^2 beta u_xxx)_x.

    The equation is ill-posed, so it is only solved on coarse grids; a grid on
    which some mode would grow is refused.

    Args:
        coeffs: effective coefficients at the half points: a single
            :class:`~hmmwave.bloch.EffectiveCoeffs`, a sequence with one entry
            per half point, or ``None`` to compute them from the material.
    """
    grid = _coarse_grid(rho)
    if coeffs is None:
        from .bloch import beta_profile

        if m.has_slow_variation:
            coeffs = beta_profile(m, grid.half_points)
        else:
            coeffs = beta_profile(m, [0.0])[0]
    if isinstance(coeffs, Sequence):
        if len(coeffs) != grid.n:
            raise ConfigError(f"need {grid.n} effective coefficient entries, got {len(coeffs)}")
        bar_a = np.array([c.barA for c in coeffs])
        beta = np.array([c.beta for c in coeffs])
    else:
        bar_a = np.full(grid.n, coeffs.barA)
        beta = np.full(grid.n, coeffs.beta)
    flux = DispersiveFlux(bar_a, eps**2 * beta, grid.h)
    return integrate(grid, f(grid.nodes), flux, T, lam, snapshots, "eff")


def l2_distance(a: np.ndarray, b: np.ndarray, h: float) -> float:
    """Discrete L2 distance sqrt(h * sum (a_i - b_i)^2)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ConfigError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(math.sqrt(h * np.sum((a - b) ** 2)))
