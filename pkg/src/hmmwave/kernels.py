"""Compactly supported polynomial averaging kernels.

A kernel ``K`` in the class K^{p,q} is supported on [-1, 1], has unit mass,
``p`` vanishing moments and ``q`` continuous derivatives.  All kernels built
here are even and kept in the factorized form

    K(x) = (1 - x^2)^(q+1) * P(x),

with ``P`` an even polynomial.  Evaluating the factorized form is far more
accurate than expanding ``K`` into monomials, whose coefficients grow very
large for high ``p`` and ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import ConfigError, DomainError, NumericalError

__all__ = [
    "KernelSpec",
    "ScaledKernelView",
    "construct_kernel",
    "kernel_value",
    "kernel_quadrature_weights",
    "kernel_midpoint_weights",
    "space_time_average",
    "factor_moment",
]


def factor_moment(m: int, q: int) -> Fraction:
    """Exact value of the integral of (1 - x^2)^(q+1) x^(2m) over [-1, 1].

    This is the Beta function B(m + 1/2, q + 2), which is rational because
    the second argument is an integer.
    """
    n = q + 2
    denom = Fraction(1)
    for k in range(n):
        denom *= Fraction(2 * m + 1 + 2 * k, 2)
    return Fraction(factorial(n - 1)) / denom


def _solve_exact(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    # Gaussian elimination with partial pivoting in rational arithmetic.
    n = len(rhs)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if aug[piv][col] == 0:
            cond = np.linalg.cond(np.array(matrix, dtype=float))
            raise NumericalError(
                f"singular kernel moment system (condition estimate {cond:.3e})"
            )
        aug[col], aug[piv] = aug[piv], aug[col]
        for r in range(col + 1, n):
            f = aug[r][col] / aug[col][col]
            if f:
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    sol = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = aug[r][n] - sum(aug[r][c] * sol[c] for c in range(r + 1, n))
        sol[r] = acc / aug[r][r]
    return sol


@dataclass(frozen=True)
class KernelSpec:
    """An even kernel K(x) = (1 - x^2)^(q+1) P(x) in K^{p,q}.

    Attributes:
        p: number of vanishing moments.
        q: smoothness order; K and its first q derivatives vanish at +-1.
        coeffs: coefficients of P in powers of x^2, i.e. ``coeffs[m]``
            multiplies ``x**(2*m)``.  Odd coefficients are zero by symmetry and
            not stored.
        exact: the same coefficients as exact rationals.
    """

    p: int
    q: int
    coeffs: tuple[float, ...]
    exact: tuple[Fraction, ...] = field(default=(), repr=False, compare=False)

    @property
    def monomial_coeffs(self) -> np.ndarray:
        """Coefficients of P in increasing powers of x, odd entries zero."""
        out = np.zeros(2 * len(self.coeffs) - 1)
        out[::2] = self.coeffs
        return out

    def __call__(self, x):
        return kernel_value(self, x)

    def scaled(self, eta: float) -> "ScaledKernelView":
        return ScaledKernelView(self, eta)


@dataclass(frozen=True)
class ScaledKernelView:
    """The kernel rescaled to half-width ``eta``: K_eta(x) = K(x / eta) / eta."""

    base: KernelSpec
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError(f"kernel half-width must be positive, got {self.eta}")

    def __call__(self, x):
        return kernel_value(self.base, np.asarray(x, dtype=float) / self.eta) / self.eta


def construct_kernel(p: int, q: int) -> KernelSpec:
    """Build the even kernel in K^{p,q} of lowest polynomial degree.

    Only the even moments constrain ``P``; odd moments vanish by symmetry.
    The moment matrix entries are the exact integrals from
    :func:`factor_moment`, so the system is solved without quadrature error.

    >>> construct_kernel(1, 1).coeffs
    (0.9375,)
    """
    if int(p) != p or int(q) != q or p < 1 or q < 1:
        raise ConfigError(f"kernel orders must be integers >= 1, got p={p}, q={q}")
    p, q = int(p), int(q)
    r = p // 2
    gram = [[factor_moment(i + j, q) for j in range(r + 1)] for i in range(r + 1)]
    rhs = [Fraction(1)] + [Fraction(0)] * r
    exact = tuple(_solve_exact(gram, rhs))
    return KernelSpec(p, q, tuple(float(c) for c in exact), exact)


def kernel_value(k: KernelSpec, x):
    """Evaluate K at ``x`` (scalar or array); zero outside [-1, 1]."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    poly = np.zeros_like(x)
    for c in reversed(k.coeffs):
        poly = poly * x2 + c
    inside = np.abs(x) <= 1.0
    val = np.where(inside, (1.0 - np.where(inside, x2, 0.0)) ** (k.q + 1) * poly, 0.0)
    return val if val.ndim else float(val)


def kernel_quadrature_weights(k: KernelSpec, eta: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite trapezoid nodes and weights for K_eta on [-eta, eta].

    Args:
        k: the unscaled kernel.
        eta: half-width of the scaled kernel.
        n: number of grid intervals across [-eta, eta].

    Returns:
        ``(nodes, weights)``, both of length ``n + 1``.  ``weights @ g(nodes)``
        approximates the integral of K_eta * g.
    """
    if int(n) != n or n < 2:
        raise ConfigError(f"need at least 2 grid intervals, got n={n}")
    n = int(n)
    nodes = np.linspace(-eta, eta, n + 1)
    w = np.full(n + 1, 2.0 * eta / n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return nodes, w * ScaledKernelView(k, eta)(nodes)


def kernel_midpoint_weights(k: KernelSpec, eta: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint-rule nodes and weights for K_eta, for data on a staggered grid.

    The ``n`` nodes are the cell centres of the ``n`` equal intervals of
    [-eta, eta].
    """
    if int(n) != n or n < 2:
        raise ConfigError(f"need at least 2 grid intervals, got n={n}")
    n = int(n)
    step = 2.0 * eta / n
    nodes = -eta + step * (np.arange(n) + 0.5)
    return nodes, step * ScaledKernelView(k, eta)(nodes)


def _window(coord: np.ndarray, half_width: float, name: str) -> tuple[slice, int]:
    step = coord[1] - coord[0]
    if not np.allclose(np.diff(coord), step, rtol=1e-9, atol=0.0):
        raise DomainError(f"{name} grid is not uniform")
    ratio = half_width / step
    n_half = int(round(ratio))
    if abs(ratio - n_half) > 1e-8 * max(1.0, ratio):
        raise DomainError(f"{name} spacing {step:g} does not divide half-width {half_width:g}")
    centre = int(round(-coord[0] / step))
    if abs(coord[centre]) > 1e-8 * step:
        raise DomainError(f"{name} grid has no node at the origin")
    lo, hi = centre - n_half, centre + n_half
    return slice(max(lo, 0), hi + 1), lo


def space_time_average(
    values: np.ndarray,
    x: np.ndarray,
    t: np.ndarray,
    kx: KernelSpec,
    eta: float,
    kt: KernelSpec,
    tau: float,
) -> float:
    """Tensor-product kernel average of samples ``values[i_t, i_x]``.

    Computes the double integral of K_tau(t) K_eta(x) values(x, t) with the
    trapezoid rule in both directions.  The grids must contain the origin and
    reach at least to +-eta and +-tau.  If ``t`` starts at zero the samples are
    taken to be even in time and the [-tau, 0] half is filled in by symmetry.
    """
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if values.shape != (t.size, x.size):
        raise DomainError(f"samples have shape {values.shape}, expected {(t.size, x.size)}")
    xs, xlo = _window(x, eta, "space")
    if xlo < 0 or xs.stop > x.size:
        raise DomainError(f"space grid [{x[0]:g}, {x[-1]:g}] does not cover [-{eta:g}, {eta:g}]")
    _, wx = kernel_quadrature_weights(kx, eta, xs.stop - xs.start - 1)

    half = abs(t[0]) < 1e-14 * max(1.0, abs(t[-1]))
    if half:
        dt = t[1] - t[0]
        nt = int(round(tau / dt))
        if abs(tau / dt - nt) > 1e-8 * max(1.0, nt) or not np.allclose(np.diff(t), dt):
            raise DomainError("time spacing does not divide tau")
        if nt >= t.size:
            raise DomainError(f"time grid [0, {t[-1]:g}] does not cover [0, {tau:g}]")
        _, full = kernel_quadrature_weights(kt, tau, 2 * nt)
        wt = full[nt:].copy()
        wt[1:] *= 2.0
        ts = slice(0, nt + 1)
    else:
        ts, tlo = _window(t, tau, "time")
        if tlo < 0 or ts.stop > t.size:
            raise DomainError(f"time grid [{t[0]:g}, {t[-1]:g}] does not cover [-{tau:g}, {tau:g}]")
        _, wt = kernel_quadrature_weights(kt, tau, ts.stop - ts.start - 1)
    return float(wt @ values[ts, xs] @ wx)
