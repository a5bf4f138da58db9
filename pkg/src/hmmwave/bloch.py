"""Bloch-wave dispersion of a 1-periodic medium and the derived effective coefficients.

The shifted cell problem

    -(d/dy + i k) A(y) (d/dy + i k) psi = omega^2(k) psi,   psi 1-periodic,

is discretized by Fourier-Galerkin: with psi = sum_n psi_n exp(2 pi i n y) the
matrix is H_nm = (k + 2 pi n)(k + 2 pi m) Ahat(n - m).  The bottom band
Omega(k) = omega_0(k)^2 and B(k) = |b_0(k)|^2 give

    Abar  =  Omega''(0) / 2,
    beta  = -Omega''''(0) / 24,
    gamma = -B''(0) / 2,

extracted here by polynomial (Richardson) extrapolation in k^2 over a ladder
of small wavenumbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericalError
from .materials import Material, frozen_fast_profile

__all__ = [
    "CellProblem",
    "DispersionSample",
    "EffectiveCoeffs",
    "cell_eigensolve",
    "dispersion_curve",
    "effective_coeffs",
    "beta_profile",
    "richardson_limit",
    "DEFAULT_LADDER",
]

DEFAULT_LADDER = tuple(2.0 * math.pi * d for d in (0.005, 0.01, 0.02, 0.04))
AGREEMENT_TOL = 1e-7


@dataclass(frozen=True)
class CellProblem:
    fast_profile: Callable
    n_modes: int = 64

    def __post_init__(self):
        if self.n_modes < 16:
            raise ConfigError(f"n_modes must be >= 16, got {self.n_modes}")

    def fourier_coeffs(self) -> np.ndarray:
        """Ahat(j) for j = -2 n_modes .. 2 n_modes."""
        nm = self.n_modes
        n_samp = 8 * nm
        y = np.arange(n_samp) / n_samp
        vals = np.asarray(self.fast_profile(y), dtype=float) * np.ones(n_samp)
        c = np.fft.fft(vals) / n_samp
        return c[np.arange(-2 * nm, 2 * nm + 1) % n_samp]

    def toeplitz(self) -> np.ndarray:
        nm = self.n_modes
        n = np.arange(-nm, nm + 1)
        return self.fourier_coeffs()[n[:, None] - n[None, :] + 2 * nm]


@dataclass(frozen=True)
class DispersionSample:
    k: float
    omega0_sq: float
    b0: complex
    B: float
    one_minus_B: float
    residual: float


@dataclass(frozen=True)
class EffectiveCoeffs:
    barA: float
    beta: float
    gamma: float
    x: float = 0.0


def cell_eigensolve(cp: CellProblem, k: float, _toeplitz: np.ndarray | None = None) -> DispersionSample:
    """Bottom eigenpair of the shifted cell problem at wavenumber ``k``.

    The eigenvalue is taken as the Rayleigh quotient of the computed
    eigenvector, evaluated in the factored form (D psi)^* T (D psi).  That
    keeps its relative accuracy near k = 0, where the eigenvalue itself is
    tiny compared with the matrix norm.
    """
    if abs(k) > math.pi + 1e-12:
        raise ConfigError(f"k must lie in [-pi, pi], got {k}")
    nm = cp.n_modes
    T = cp.toeplitz() if _toeplitz is None else _toeplitz
    d = k + 2.0 * math.pi * np.arange(-nm, nm + 1)
    H = d[:, None] * T * d[None, :]
    _, vecs = np.linalg.eigh(H)
    psi = vecs[:, 0]
    psi = psi / np.linalg.norm(psi)
    zero = psi[nm]
    if abs(zero) > 0:
        psi = psi * (abs(zero) / zero)
    dpsi = d * psi
    omega_sq = float(np.real(np.vdot(dpsi, T @ dpsi)))
    residual = float(np.linalg.norm(H @ psi - omega_sq * psi))
    if residual > 1e-10 * max(np.linalg.norm(H, 2), 1.0):
        raise NumericalError(f"cell eigensolve did not converge at k={k} (residual {residual:.3e})")
    b0 = complex(np.conj(psi[nm]))
    tail = float(np.sum(np.abs(psi[:nm]) ** 2) + np.sum(np.abs(psi[nm + 1 :]) ** 2))
    return DispersionSample(float(k), omega_sq, b0, abs(b0) ** 2, tail, residual)


def dispersion_curve(cp: CellProblem, ks: Sequence[float]) -> list[DispersionSample]:
    T = cp.toeplitz()
    return [cell_eigensolve(cp, float(k), T) for k in ks]


def richardson_limit(xs: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Extrapolate values(x) to x = 0 with Neville's scheme.

    Returns the highest-order estimate and the size of its last correction,
    which serves as an error estimate.
    """
    xs = [float(x) for x in xs]
    col = [float(v) for v in values]
    diag = [col[0]]
    for level in range(1, len(xs)):
        col = [
            (xs[i + level] * col[i] - xs[i] * col[i + 1]) / (xs[i + level] - xs[i])
            for i in range(len(col) - 1)
        ]
        diag.append(col[0])
    err = abs(diag[-1] - diag[-2]) if len(diag) > 1 else math.inf
    return diag[-1], err


def effective_coeffs(
    cp: CellProblem,
    ladder: Sequence[float] = DEFAULT_LADDER,
    tol: float = AGREEMENT_TOL,
    x: float = 0.0,
) -> EffectiveCoeffs:
    """Abar, beta and gamma from the small-k behaviour of the bottom band.

    Omega(k)/k^2 = Abar - beta k^2 + O(k^4) and (1 - B(k))/k^2 = gamma + O(k^2)
    are sampled on ``ladder`` and extrapolated in k^2.  The fourth-derivative
    quotient (Omega/k^2 - Abar)/k^2 is extrapolated the same way.

    Raises:
        NumericalError: if successive extrapolation levels disagree by more
            than ``tol`` relative (too coarse a ladder, or round-off).
    """
    ahat = cp.fourier_coeffs()
    mid = ahat.size // 2
    if not np.any(np.delete(ahat, mid)):
        # homogeneous cell: plane waves are exact, Omega = A k^2 and B = 1
        return EffectiveCoeffs(float(ahat[mid].real), 0.0, 0.0, x)
    samples = dispersion_curve(cp, ladder)
    k2 = np.array(ladder, dtype=float) ** 2
    om = np.array([s.omega0_sq for s in samples]) / k2
    bar_a, err_a = richardson_limit(k2, om)
    beta_neg, err_b = richardson_limit(k2, (om - bar_a) / k2)
    gamma, err_g = richardson_limit(k2, np.array([s.one_minus_B for s in samples]) / k2)
    scale = max(abs(bar_a), 1e-300)
    checks = {
        "Abar": err_a / scale,
        # beta and gamma may vanish; measure against Abar's magnitude then
        "beta": err_b / max(abs(beta_neg), 1e-3 * scale),
        "gamma": err_g / max(abs(gamma), 1e-3),
    }
    bad = {name: v for name, v in checks.items() if v > tol}
    if bad:
        raise NumericalError(f"Richardson extrapolation did not settle: {bad} (tolerance {tol:g})")
    return EffectiveCoeffs(bar_a, 0.0 - beta_neg, gamma, x)


def beta_profile(m: Material, x_samples: Sequence[float], n_modes: int = 64) -> list[EffectiveCoeffs]:
    """Effective coefficients of the frozen fast profile at each slow location."""
    out = []
    cache: dict = {}
    for x in x_samples:
        prof = frozen_fast_profile(m, float(x))
        if prof not in cache:
            cache[prof] = effective_coeffs(CellProblem(prof, n_modes))
        c = cache[prof]
        out.append(EffectiveCoeffs(c.barA, c.beta, c.gamma, float(x)))
    return out
