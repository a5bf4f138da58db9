"""Macro-scale HMM time stepper.

At every step and half point the macro data u_{m-2}, .., u_{m+1} is
interpolated by a cubic in the local coordinate around x_{m-1/2}, and the
flux is the dot product of its coefficients with the precomputed corrected
flux vector of that half point.  Because the micro problem is linear, no
micro problem is solved inside the time loop.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, StabilityError
from .materials import Material
from .micro_flux import FluxTable, MicroConfig, MicroResult, build_flux_table
from .wave_core import Grid1D, Trajectory, integrate, symbol_bounds

__all__ = ["HmmConfig", "HmmFlux", "fit_local_cubic", "local_cubic_coeffs", "hmm_flux", "run_hmm"]

log = logging.getLogger(__name__)


def _inverse_vandermonde() -> np.ndarray:
    nodes = [Fraction(-3, 2), Fraction(-1, 2), Fraction(1, 2), Fraction(3, 2)]
    # Lagrange basis coefficients: row j of the inverse gives c_j from the values
    inv = [[Fraction(0)] * 4 for _ in range(4)]
    for i, xi in enumerate(nodes):
        others = [xj for j, xj in enumerate(nodes) if j != i]
        denom = Fraction(1)
        for xj in others:
            denom *= xi - xj
        a, b, c = others
        poly = [-a * b * c, a * b + a * c + b * c, -(a + b + c), Fraction(1)]
        for j in range(4):
            inv[j][i] = poly[j] / denom
    return np.array([[float(v) for v in row] for row in inv])


_VINV = _inverse_vandermonde()


def fit_local_cubic(u_window, H: float) -> np.ndarray:
    """Coefficients of the cubic through u_{m-2..m+1} in xi = x - x_{m-1/2}.

    >>> fit_local_cubic([1.0, 1.0, 1.0, 1.0], 0.1)
    array([1., 0., 0., 0.])
    """
    u_window = np.asarray(u_window, dtype=float)
    if u_window.shape[0] != 4:
        raise ConfigError("the interpolation window needs exactly four values")
    scaled = np.tensordot(_VINV, u_window, axes=(1, 0))
    scale = H ** np.arange(4)
    return scaled / scale.reshape((4,) + (1,) * (scaled.ndim - 1))


def local_cubic_coeffs(u: np.ndarray, H: float) -> np.ndarray:
    """:func:`fit_local_cubic` at every half point of a periodic grid, shape (4, n)."""
    window = np.stack([np.roll(u, 2), np.roll(u, 1), u, np.roll(u, -1)])
    return fit_local_cubic(window, H)


def hmm_flux(entry: MicroResult, c_tilde) -> float:
    """Corrected HMM flux f~ . c~."""
    return float(np.dot(entry.f_tilde, c_tilde))


class HmmFlux:
    """Flux provider backed by a :class:`FluxTable`."""

    def __init__(self, table: FluxTable, check_coarse: bool = True):
        self.table = table
        self.h = table.grid.h
        self.f_tilde = table.f_tilde
        lo, hi = symbol_bounds(self.f_tilde[1], self.f_tilde[3] / 6.0, self.h)
        if check_coarse and lo < 0:
            raise StabilityError(
                f"macro grid h={self.h:g} is too fine for the HMM flux: some grid mode grows "
                f"(min h^2 omega^2 = {lo:.3g}); use a coarser macro grid"
            )
        self.stiffness = hi

    def __call__(self, u):
        return np.einsum("in,in->n", self.f_tilde, local_cubic_coeffs(u, self.h))


@dataclass(frozen=True)
class HmmConfig:
    """Macro and micro parameters of an HMM run.

    ``rho`` is the number of macro cells per unit length on [0, 1].
    """

    rho: int
    lam: float
    T_final: float
    micro: MicroConfig
    material: Material
    eps: float

    def __post_init__(self):
        if int(self.rho) != self.rho or self.rho < 8:
            raise ConfigError(f"rho must be an integer >= 8, got {self.rho}")
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.T_final < 0:
            raise ConfigError(f"T_final must be non-negative, got {self.T_final}")
        if not math.isclose(self.micro.eps, self.eps, rel_tol=1e-12):
            raise ConfigError(f"micro eps {self.micro.eps} differs from eps {self.eps}")
        if 1.0 / self.rho <= self.micro.h:
            raise ConfigError("the macro grid must be coarser than the micro grid")

    @property
    def grid(self) -> Grid1D:
        return Grid1D.unit(int(self.rho))


def run_hmm(
    cfg: HmmConfig,
    f: Callable,
    snapshots: int = 1,
    table: Optional[FluxTable] = None,
    workers: Optional[int] = None,
) -> Trajectory:
    """Run the HMM from rest with initial displacement ``f``.

    The flux table is built once before stepping (or passed in, in which case
    it must belong to the same macro grid).
    """
    grid = cfg.grid
    if table is None:
        table = build_flux_table(cfg.material, grid, cfg.micro, workers=workers)
    elif table.grid != grid:
        raise ConfigError("flux table was built for a different macro grid")
    flux = HmmFlux(table)
    traj = integrate(grid, f(grid.nodes), flux, cfg.T_final, cfg.lam, snapshots, "hmm")
    traj.info["micro_solves"] = table.micro_solves
    return traj
