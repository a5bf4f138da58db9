"""Heterogeneous multiscale method for long-time wave propagation in 1D oscillatory media."""

from .bloch import CellProblem, EffectiveCoeffs, beta_profile, cell_eigensolve, effective_coeffs
from .errors import ConfigError, DomainError, HmmWaveError, NumericalError, StabilityError
from .hmm import HmmConfig, fit_local_cubic, hmm_flux, run_hmm
from .kernels import KernelSpec, construct_kernel, kernel_quadrature_weights, kernel_value, space_time_average
from .materials import REGISTRY, Constant, ProductSlowFast, SineFast, SumSlowFast, harmonic_mean_barA, parse_material
from .micro_flux import MicroConfig, MicroResult, build_flux_table, compute_correction_matrix
from .wave_core import Grid1D, WaveField, l2_distance, run_dns, run_effective, run_homogenized

__version__ = "0.1.0"
