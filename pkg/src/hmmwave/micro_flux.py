"""HMM micro problems, flux reconstruction and the consistency correction.

For a macro half point x' and cubic initial data Q, the micro problem

    v_tt = (A(x + x', (x + x')/eps) v_x)_x,   v(x, 0) = Q(x),  v_t(x, 0) = 0,

is solved on a box [-L, L] of whole eps-periods, writing v = Q + w with w
periodic.  Kernel averages of the micro flux A v_x and of v itself are folded
into running sums while stepping, so nothing of size grid x steps is stored.

Solving for the four monomials Q = 1, x, x^2, x^3 gives the raw flux vector f
and the correction matrix M, whose column i holds the cubic fitted to the
averaged solution when Q = x^i.  The corrected flux is f~ = M^{-T} f, and the
macro flux for local cubic coefficients c~ is f~ . c~.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, NumericalError, StabilityError
from .kernels import KernelSpec, construct_kernel, kernel_midpoint_weights, kernel_quadrature_weights
from .materials import Material
from .wave_core import Grid1D, _LEAPFROG_LIMIT, _D1_SYMBOL_MAX, flux_divergence, halfpoint_d1

__all__ = [
    "MicroConfig",
    "MicroResult",
    "FluxTable",
    "MicroSolution",
    "solve_micro",
    "compute_raw_flux",
    "compute_correction_matrix",
    "build_flux_table",
]

log = logging.getLogger(__name__)

_MONOMIALS = np.eye(4)


@dataclass(frozen=True)
class MicroConfig:
    """Parameters of the micro solver and of the averaging.

    Attributes:
        eps: period of the fast oscillation.
        eta, tau: half-widths of the space and time averaging kernels.
        rho_eps: micro grid points per eps.
        lam: micro CFL ratio dt/h.
        kernel_p, kernel_q: kernel class K^{p,q}, used in space and time.
        sample_offsets: points Delta_k at which the averaged solution is
            sampled for the cubic fit.  ``None`` gives {-2,-1,0,1,2} * eta/4.
        box_halfwidth: half-width L of the micro box.  ``None`` gives the
            smallest whole number of periods covering eta + max|Delta_k| +
            tau * sqrt(max A) + eps.
    """

    eps: float
    eta: float
    tau: float
    rho_eps: int = 64
    lam: float = 0.5
    kernel_p: int = 9
    kernel_q: int = 9
    sample_offsets: Optional[tuple[float, ...]] = None
    box_halfwidth: Optional[float] = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.eta / self.eps < 2 - 1e-12 or self.tau / self.eps < 2 - 1e-12:
            raise ConfigError("kernel half-widths must span at least two periods (eta/eps >= 2)")
        if int(self.rho_eps) != self.rho_eps or self.rho_eps < 4:
            raise ConfigError(f"rho_eps must be an integer >= 4, got {self.rho_eps}")
        if not 0 < self.lam:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        offsets = self.offsets
        if len(offsets) < 5 or len(set(offsets)) != len(offsets):
            raise ConfigError("need at least five distinct sample offsets")

    @classmethod
    def standard(
        cls,
        eps: float,
        eta_ratio: float = 20.0,
        rho_eps: int = 64,
        lam: float = 0.5,
        p: int = 9,
        q: int = 9,
        **kw,
    ) -> "MicroConfig":
        """eta = tau = eta_ratio * eps."""
        return cls(eps, eta_ratio * eps, eta_ratio * eps, rho_eps, lam, p, q, **kw)

    @property
    def h(self) -> float:
        return self.eps / self.rho_eps

    @property
    def offsets(self) -> tuple[float, ...]:
        """Sample offsets snapped to the micro grid."""
        raw = self.sample_offsets
        if raw is None:
            raw = tuple(k * self.eta / 4 for k in (-2, -1, 0, 1, 2))
        return tuple(round(d / self.h) * self.h for d in raw)

    def kernel(self) -> KernelSpec:
        return construct_kernel(self.kernel_p, self.kernel_q)

    def box(self, a_max: float) -> float:
        """Half-width of the micro box for a medium bounded by ``a_max``."""
        need = self.eta + max(abs(d) for d in self.offsets) + self.tau * math.sqrt(a_max) + self.eps
        if self.box_halfwidth is None:
            return math.ceil(need / self.eps - 1e-9) * self.eps
        if self.box_halfwidth < need * (1 - 1e-12):
            raise DomainError(
                f"micro box half-width {self.box_halfwidth:g} is below {need:g}: "
                "boundary information would reach the averaging windows"
            )
        return self.box_halfwidth


@dataclass(frozen=True)
class MicroResult:
    """Raw flux vector f, correction matrix M and corrected flux f~ = M^{-T} f."""

    f: np.ndarray
    M: np.ndarray
    f_tilde: np.ndarray
    x_center: float = 0.0

    def flux(self, c_tilde: np.ndarray) -> np.ndarray:
        """Corrected macro flux f~ . c~ (``c_tilde`` may be stacked along axis 0)."""
        return np.tensordot(self.f_tilde, c_tilde, axes=(0, 0))


@dataclass
class FluxTable:
    """One :class:`MicroResult` per half point of a macro grid."""

    grid: Grid1D
    entries: list[MicroResult]
    micro_solves: int = 0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.entries) != self.grid.n:
            raise ConfigError(f"flux table needs {self.grid.n} entries, got {len(self.entries)}")

    @property
    def x_half(self) -> np.ndarray:
        return self.grid.half_points

    @property
    def f_tilde(self) -> np.ndarray:
        """Corrected flux vectors stacked as shape (4, n)."""
        return np.stack([e.f_tilde for e in self.entries], axis=1)

    @property
    def f_raw(self) -> np.ndarray:
        return np.stack([e.f for e in self.entries], axis=1)


class MicroSolution:
    """Streaming access to a (batched) micro solution.

    Iterating yields ``(n, t_n, v_n, F_n)`` for n = 0..n_t, where ``v_n`` holds
    the solution at the nodes and ``F_n`` the micro flux at the half points,
    each with one row per initial polynomial.  The solution for negative times
    is the mirror image, since the initial velocity is zero.
    """

    def __init__(self, material: Material, x_center: float, q_coeffs, cfg: MicroConfig):
        q = np.atleast_2d(np.asarray(q_coeffs, dtype=float))
        if q.shape[1] != 4:
            raise ConfigError("initial data must be given as cubic coefficients (c0, c1, c2, c3)")
        self.q = q
        self.cfg = cfg
        self.x_center = float(x_center)
        h = cfg.h
        a_max = material.max_value
        L = cfg.box(a_max)
        half_n = int(round(L / h))
        self.x = h * np.arange(-half_n, half_n)
        self.x_half = self.x - 0.5 * h
        self.h = h
        self.coeff = np.asarray(material(self.x_half + self.x_center, cfg.eps), dtype=float)
        n_t = int(math.ceil(cfg.tau / (cfg.lam * h) - 1e-9))
        self.dt = cfg.tau / n_t
        self.n_t = n_t
        stiffness = float(self.coeff.max()) * _D1_SYMBOL_MAX**2
        if (self.dt / h) ** 2 * stiffness > _LEAPFROG_LIMIT:
            raise StabilityError(
                f"micro CFL violated: dt/h = {self.dt / h:.4g} with max A = {self.coeff.max():.4g}; "
                f"need dt/h <= {math.sqrt(_LEAPFROG_LIMIT / stiffness):.4g}"
            )
        powers = np.vander(self.x, 4, increasing=True)
        self.q_nodes = q @ powers.T
        # Q' at half points, exact for cubics
        xh = self.x_half
        dpow = np.stack([np.zeros_like(xh), np.ones_like(xh), 2 * xh, 3 * xh**2], axis=1)
        self.source = self.coeff * (q @ dpow.T)

    def _flux(self, w):
        return self.coeff * halfpoint_d1(w, self.h) + self.source

    def __iter__(self) -> Iterator[tuple[int, float, np.ndarray, np.ndarray]]:
        dt2 = self.dt**2
        h = self.h
        w_prev = np.zeros_like(self.q_nodes)
        F = self._flux(w_prev)
        yield 0, 0.0, self.q_nodes, F
        w = 0.5 * dt2 * flux_divergence(F, h)
        for n in range(1, self.n_t + 1):
            F = self._flux(w)
            yield n, n * self.dt, self.q_nodes + w, F
            if n < self.n_t:
                w, w_prev = 2.0 * w - w_prev + dt2 * flux_divergence(F, h), w


def solve_micro(material: Material, x_center: float, q_coeffs, cfg: MicroConfig) -> MicroSolution:
    """Set up the micro problem around ``x_center`` for cubic data ``q_coeffs``.

    ``q_coeffs`` holds (c0, c1, c2, c3) in the local coordinate, or a stack of
    such rows to solve several problems at once.
    """
    return MicroSolution(material, x_center, q_coeffs, cfg)


def _time_weights(cfg: MicroConfig, kernel: KernelSpec, n_t: int) -> np.ndarray:
    # trapezoid on [-tau, tau] folded onto [0, tau] using evenness in time
    _, full = kernel_quadrature_weights(kernel, cfg.tau, 2 * n_t)
    wt = full[n_t:].copy()
    wt[1:] *= 2.0
    return wt


def _space_weights(sol: MicroSolution, kernel: KernelSpec, offsets: Sequence[float]):
    cfg = sol.cfg
    h = sol.h
    n_eta = int(round(cfg.eta / h))
    if abs(cfg.eta / h - n_eta) > 1e-8 * n_eta:
        raise DomainError(f"micro spacing {h:g} does not divide eta = {cfg.eta:g}")
    n = sol.x.size
    centre = n // 2  # index of x = 0
    _, wmid = kernel_midpoint_weights(kernel, cfg.eta, 2 * n_eta)
    w_flux = np.zeros(n)
    # half points x_{i-1/2} with |x| < eta are indices centre-n_eta+1 .. centre+n_eta
    w_flux[centre - n_eta + 1 : centre + n_eta + 1] = wmid
    _, wtrap = kernel_quadrature_weights(kernel, cfg.eta, 2 * n_eta)
    w_samp = np.zeros((n, len(offsets)))
    for k, d in enumerate(offsets):
        c = centre + int(round(d / h))
        lo, hi = c - n_eta, c + n_eta + 1
        if lo < 0 or hi > n:
            raise DomainError(f"averaging window around offset {d:g} leaves the micro box")
        w_samp[lo:hi, k] = wtrap
    return w_flux, w_samp


def _accumulate(sol: MicroSolution, offsets: Sequence[float] = ()):
    kernel = sol.cfg.kernel()
    wt = _time_weights(sol.cfg, kernel, sol.n_t)
    w_flux, w_samp = _space_weights(sol, kernel, offsets)
    flux_sum = np.zeros(sol.q.shape[0])
    samp_sum = np.zeros((sol.q.shape[0], len(offsets)))
    for n, _, v, F in sol:
        if wt[n] == 0.0:
            continue
        flux_sum += wt[n] * (F @ w_flux)
        if len(offsets):
            samp_sum += wt[n] * (v @ w_samp)
    return flux_sum, samp_sum


def compute_raw_flux(sol: MicroSolution, full_time: bool = False):
    """Kernel-averaged micro flux, one value per initial polynomial.

    With ``full_time`` the solution is also stepped backwards over [-tau, 0]
    instead of folding the time integral by symmetry; both agree to
    round-off and the option exists to check exactly that.
    """
    if not full_time:
        flux, _ = _accumulate(sol)
        return flux if flux.size > 1 else float(flux[0])
    kernel = sol.cfg.kernel()
    _, wt = kernel_quadrature_weights(kernel, sol.cfg.tau, 2 * sol.n_t)
    w_flux, _ = _space_weights(sol, kernel, ())
    levels = {}
    for n, _, _, F in sol:
        levels[n] = F @ w_flux
    # backward sweep from (u^1, u^0): u^{-n} by the same recursion
    dt2, h = sol.dt**2, sol.h
    w_next = np.zeros_like(sol.q_nodes)
    w_here = 0.5 * dt2 * flux_divergence(sol._flux(w_next), h)
    w_prev, w_curr = w_here, w_next  # (w^1, w^0)
    back = {}
    for n in range(1, sol.n_t + 1):
        w_prev, w_curr = w_curr, 2.0 * w_curr - w_prev + dt2 * flux_divergence(sol._flux(w_curr), h)
        back[n] = sol._flux(w_curr) @ w_flux
    total = sum(wt[sol.n_t + n] * levels[n] for n in range(sol.n_t + 1))
    total = total + sum(wt[sol.n_t - n] * back[n] for n in range(1, sol.n_t + 1))
    return total if total.size > 1 else float(total[0])


def _fit_cubic(offsets: Sequence[float], values: np.ndarray, eta: float) -> np.ndarray:
    s = np.asarray(offsets) / eta
    V = np.vander(s, 4, increasing=True)
    cond = np.linalg.cond(V)
    if cond > 1e8:
        raise NumericalError(f"sample offsets too clustered for a cubic fit (condition {cond:.2e})")
    coef, *_ = np.linalg.lstsq(V, values.T, rcond=None)
    return coef / (eta ** np.arange(4))[:, None]


def compute_correction_matrix(material: Material, x_center: float, cfg: MicroConfig) -> MicroResult:
    """Solve the four monomial micro problems at ``x_center``; return f, M and f~."""
    sol = solve_micro(material, x_center, _MONOMIALS, cfg)
    offsets = cfg.offsets
    flux, samples = _accumulate(sol, offsets)
    M = _fit_cubic(offsets, samples, cfg.eta)
    try:
        f_tilde = np.linalg.solve(M.T, flux)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular correction matrix at x = {x_center:g}") from exc
    if not np.all(np.isfinite(f_tilde)):
        raise NumericalError(f"non-finite corrected flux at x = {x_center:g}")
    return MicroResult(flux, M, f_tilde, float(x_center))


def _entry(args):
    material, x, cfg = args
    return compute_correction_matrix(material, x, cfg)


def build_flux_table(
    material: Material,
    macro_grid: Grid1D,
    cfg: MicroConfig,
    workers: Optional[int] = None,
) -> FluxTable:
    """Correction data for every half point of ``macro_grid``.

    A medium without slow variation gives the same entry everywhere, so only
    one set of micro problems is solved (at x' = 0) and reused.

    Args:
        workers: process count for the independent half points; ``None`` or 1
            runs serially.
    """
    xs = macro_grid.half_points
    if not material.has_slow_variation:
        entry = compute_correction_matrix(material, 0.0, cfg)
        return FluxTable(macro_grid, [replace(entry, x_center=float(x)) for x in xs], micro_solves=4)
    jobs = [(material, float(x), cfg) for x in xs]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_entry, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        entries = [_entry(j) for j in jobs]
    log.info("flux table: %d half points, %d micro solves", len(entries), 4 * len(entries))
    return FluxTable(macro_grid, entries, micro_solves=4 * len(entries))
