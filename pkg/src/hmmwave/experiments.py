"""Run manifests and the reproducible experiments behind the command line."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bloch import CellProblem, beta_profile, dispersion_curve, effective_coeffs
from .errors import ConfigError
from .hmm import HmmConfig, run_hmm
from .io import write_csv, write_snapshots
from .kernels import construct_kernel, kernel_quadrature_weights
from .materials import frozen_fast_profile, harmonic_mean_barA, parse_material
from .micro_flux import MicroConfig, compute_correction_matrix
from .wave_core import (
    _D1_SYMBOL_MAX,
    _LEAPFROG_LIMIT,
    Trajectory,
    gaussian_pulse,
    l2_distance,
    run_dns,
    run_effective,
    run_homogenized,
)

log = logging.getLogger(__name__)

SOLVERS = ("dns", "hom", "eff", "hmm")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce one solver run."""

    solver: str
    material: str
    eps: float = 0.03
    rho: int = 80
    lam: float = 0.5
    T: float = 12.4976
    eta_ratio: float = 20.0
    p: int = 19
    q: int = 19
    rho_eps: int = 64
    dns_lam: Optional[float] = None
    micro_lam: float = 0.5
    snapshots: int = 8
    out: Optional[str] = None

    def validate(self) -> None:
        """Check every parameter the chosen solver will use, before any solve."""
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {', '.join(SOLVERS)}")
        mat = parse_material(self.material)
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.T < 0:
            raise ConfigError(f"T must be non-negative, got {self.T}")
        if int(self.snapshots) != self.snapshots or self.snapshots < 1:
            raise ConfigError(f"snapshots must be a positive integer, got {self.snapshots}")
        if self.solver == "dns":
            if int(self.rho_eps) != self.rho_eps or self.rho_eps < 16:
                raise ConfigError(f"rho_eps must be an integer >= 16, got {self.rho_eps}")
            _check_lambda(self.dns_lambda, mat.max_value, "dns lambda")
            return
        if int(self.rho) != self.rho or self.rho < 8:
            raise ConfigError(f"rho must be an integer >= 8, got {self.rho}")
        bar_a_max = float(np.max(harmonic_mean_barA(mat, np.linspace(0, 1, 257))))
        _check_lambda(self.lam, bar_a_max, "lambda")
        if self.solver == "hmm":
            construct_kernel(self.p, self.q)
            micro = self.micro_config()
            _check_lambda(micro.lam, mat.max_value, "micro lambda")
            HmmConfig(int(self.rho), self.lam, self.T, micro, mat, self.eps)

    @property
    def dns_lambda(self) -> float:
        return self.lam if self.dns_lam is None else self.dns_lam

    def micro_config(self) -> MicroConfig:
        return MicroConfig.standard(
            self.eps, self.eta_ratio, int(self.rho_eps), self.micro_lam, int(self.p), int(self.q)
        )


def _check_lambda(lam: float, a_max: float, name: str) -> None:
    limit = math.sqrt(_LEAPFROG_LIMIT / (a_max * _D1_SYMBOL_MAX**2))
    if not 0 < lam <= limit:
        raise ConfigError(f"{name} = {lam:g} is outside the stable range (0, {limit:.4g}] for max A = {a_max:.4g}")


def run_manifest(man: RunManifest, workers: Optional[int] = None) -> Trajectory:
    man.validate()
    mat = parse_material(man.material)
    if man.solver == "dns":
        traj = run_dns(mat, man.eps, gaussian_pulse, man.T, int(man.rho_eps), man.dns_lambda, man.snapshots)
    elif man.solver == "hom":
        traj = run_homogenized(mat, gaussian_pulse, man.T, int(man.rho), man.lam, man.snapshots)
    elif man.solver == "eff":
        traj = run_effective(mat, man.eps, gaussian_pulse, man.T, int(man.rho), man.lam, snapshots=man.snapshots)
    else:
        cfg = HmmConfig(int(man.rho), man.lam, man.T, man.micro_config(), mat, man.eps)
        traj = run_hmm(cfg, gaussian_pulse, man.snapshots, workers=workers)
    traj.info["manifest"] = asdict(man)
    if man.out:
        write_snapshots(traj, man.out, man.solver)
    return traj


# Parameters of the three long-time experiments.  The micro grid and micro
# lambda are not given for these runs; rho_eps = 64 is taken from the flux
# study, and A3 needs a smaller micro step because max A = 3.15.
EXPERIMENTS = {
    "one": dict(material="A1", T=12.4976, rho=80, lam=0.5, dns_lam=0.5, micro_lam=0.5),
    "two": dict(material="A2", T=7.9985, rho=100, lam=0.5, dns_lam=0.25, micro_lam=0.5),
    "three": dict(material="A3", T=8.5677, rho=70, lam=0.5, dns_lam=0.25, micro_lam=0.25),
}


def experiment_manifests(name: str, scale: float = 1.0, out: Optional[str] = None, snapshots: int = 8):
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    if not scale > 0:
        raise ConfigError(f"scale must be positive, got {scale}")
    base = dict(EXPERIMENTS[name], eps=0.03 * scale, eta_ratio=20.0, p=19, q=19, rho_eps=64, snapshots=snapshots)
    base["T"] = base["T"] * scale
    return {s: RunManifest(solver=s, out=out, **base) for s in SOLVERS}


def on_coarse_grid(traj: Trajectory, x: np.ndarray) -> np.ndarray:
    """The final state of ``traj`` sampled at nodes ``x`` (periodic linear interpolation)."""
    if traj.grid.n == x.size:
        return traj.final
    return np.interp(x, traj.grid.nodes, traj.final, period=traj.grid.b - traj.grid.a)


def run_experiment(
    name: str,
    out: Optional[str] = None,
    scale: float = 1.0,
    workers: Optional[int] = None,
    snapshots: int = 8,
    solvers: Sequence[str] = SOLVERS,
) -> tuple[dict[str, Trajectory], list[tuple[str, str, float]]]:
    """Run the requested solvers and compare their final states pairwise.

    Returns the trajectories and rows ``(solver_a, solver_b, l2)``; with
    ``out`` the snapshot CSVs and ``summary.csv`` are written there.
    """
    mans = experiment_manifests(name, scale, out, snapshots)
    for s in solvers:
        mans[s].validate()
    trajs = {s: run_manifest(mans[s], workers=workers) for s in solvers}
    coarse = next(t for s, t in trajs.items() if s != "dns") if set(solvers) - {"dns"} else trajs["dns"]
    x = coarse.grid.nodes
    finals = {s: on_coarse_grid(t, x) for s, t in trajs.items()}
    rows = [(a, b, l2_distance(finals[a], finals[b], coarse.grid.h)) for a, b in itertools.combinations(solvers, 2)]
    if out:
        write_csv(Path(out) / "summary.csv", ("solver_a", "solver_b", "l2"), rows)
    return trajs, rows


def parse_eps_list(spec: str, count: int = 7) -> list[float]:
    """``a:b`` gives ``count`` log-spaced values from a to b; otherwise a comma list."""
    if ":" in spec:
        a, b = (float(v) for v in spec.split(":"))
        if not (a > 0 and b > 0):
            raise ConfigError("eps range ends must be positive")
        return [float(v) for v in np.geomspace(a, b, count)]
    return [float(v) for v in spec.split(",") if v.strip()]


def flux_study_rows(material_key: str, eps: float, x: float, p: int, q: int, eta_ratio: float, rho_eps: int, lam: float):
    """Rows ``(eps, x, i, raw_err, corrected_err, effective_err)`` for i = 1..3.

    raw_err = |f_i - e_i| / eps^2, corrected_err = |f~_i - f_i| / eps^2 and
    effective_err = |f~_i - e_i| / eps^2, where e = (Abar(x), 0, 6 eps^2 beta(x))
    is the flux of the effective equation.
    """
    mat = parse_material(material_key)
    res = compute_correction_matrix(mat, x, MicroConfig.standard(eps, eta_ratio, rho_eps, lam, p, q))
    coeffs = beta_profile(mat, [x])[0]
    exact = np.array([0.0, coeffs.barA, 0.0, 6.0 * eps**2 * coeffs.beta])
    e2 = eps**2
    return [
        (eps, x, i, abs(res.f[i] - exact[i]) / e2, abs(res.f_tilde[i] - res.f[i]) / e2, abs(res.f_tilde[i] - exact[i]) / e2)
        for i in (1, 2, 3)
    ]


def kernel_table_rows(p: int, q: int, ns: Sequence[int]):
    """Relative error of the trapezoid integral of K^{p,q} with n intervals."""
    k = construct_kernel(p, q)
    return [(n, abs(kernel_quadrature_weights(k, 1.0, n)[1].sum() - 1.0)) for n in ns]


def coeffs_row(material_key: str, x: float, n_modes: int):
    prof = frozen_fast_profile(parse_material(material_key), x)
    c = effective_coeffs(CellProblem(prof, n_modes), x=x)
    return (c.barA, c.beta, c.gamma)


def dispersion_rows(material_key: str, k_samples: int, x: float = 0.0, n_modes: int = 64):
    prof = frozen_fast_profile(parse_material(material_key), x)
    ks = np.linspace(-math.pi, math.pi, int(k_samples))
    return [(s.k, s.omega0_sq, s.B) for s in dispersion_curve(CellProblem(prof, n_modes), ks)]
