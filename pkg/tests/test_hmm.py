import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmmwave.errors import ConfigError, StabilityError
from hmmwave.hmm import HmmConfig, HmmFlux, fit_local_cubic, hmm_flux, local_cubic_coeffs, run_hmm
from hmmwave.materials import REGISTRY, Constant
from hmmwave.micro_flux import MicroConfig, MicroResult, build_flux_table
from hmmwave.wave_core import Grid1D, gaussian_pulse, l2_distance, run_homogenized

A1, A2 = REGISTRY["A1"], REGISTRY["A2"]
NODES = np.array([-1.5, -0.5, 0.5, 1.5])
BETA = 0.01078280318


def exact_entry(eps=0.01):
    f = np.array([0.0, math.sqrt(0.21), 0.0, 6 * BETA * eps**2])
    return MicroResult(f, np.eye(4), f)


def test_fit_constant():
    np.testing.assert_allclose(fit_local_cubic([2.5] * 4, 0.1), [2.5, 0, 0, 0], atol=1e-15)


def test_fit_cubic_monomial():
    H = 0.1
    np.testing.assert_allclose(fit_local_cubic((NODES * H) ** 3, H), [0, 0, 0, 1], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(c=st.lists(st.floats(-10, 10), min_size=4, max_size=4), H=st.floats(1e-3, 1.0))
def test_fit_reproduces_cubics(c, H):
    xi = NODES * H
    vals = sum(ci * xi**i for i, ci in enumerate(c))
    got = fit_local_cubic(vals, H)
    scale = H ** np.arange(4)
    # compare in the scaled coordinate, where the fit is well conditioned
    np.testing.assert_allclose(got * scale, np.array(c) * scale, atol=1e-12 * (1 + np.abs(vals).max()))


def test_fit_sine_taylor():
    H = 0.0125
    got = fit_local_cubic(np.sin(NODES * H), H)
    taylor = np.array([0, 1, 0, -1 / 6])
    for j in range(4):
        assert abs(got[j] - taylor[j]) <= H ** (4 - j)


def test_fit_window_size():
    with pytest.raises(ConfigError):
        fit_local_cubic([1.0, 2.0, 3.0], 0.1)


def test_local_coeffs_periodic_windows():
    g = Grid1D.unit(16)
    u = np.sin(2 * np.pi * g.nodes)
    c = local_cubic_coeffs(u, g.h)
    m = 5
    np.testing.assert_allclose(c[:, m], fit_local_cubic(u[m - 2 : m + 2], g.h))
    np.testing.assert_allclose(c[:, 0], fit_local_cubic(u[[-2, -1, 0, 1]], g.h))


def test_hmm_flux_examples():
    e = exact_entry()
    assert hmm_flux(e, [0, 1, 0, 0]) == pytest.approx(math.sqrt(0.21))
    assert hmm_flux(e, np.zeros(4)) == 0.0
    assert hmm_flux(e, [0, 0, 0, 1]) == pytest.approx(6.469681908e-06, rel=1e-12)


def test_hmm_flux_provider_matches_pointwise():
    g = Grid1D.unit(16)
    cfg = MicroConfig.standard(0.005, 5, 16)
    tab = build_flux_table(A1, g, cfg)
    flux = HmmFlux(tab)
    u = gaussian_pulse(g.nodes)
    c = local_cubic_coeffs(u, g.h)
    F = flux(u)
    for m in (0, 3, 15):
        assert F[m] == pytest.approx(hmm_flux(tab.entries[m], c[:, m]), rel=1e-14)


def test_config_checks():
    micro = MicroConfig.standard(0.01, 20, 16)
    with pytest.raises(ConfigError):
        HmmConfig(4, 0.5, 1.0, micro, A1, 0.01)
    with pytest.raises(ConfigError):
        HmmConfig(80, 0.5, 1.0, micro, A1, 0.02)
    with pytest.raises(ConfigError):
        HmmConfig(80, 0.5, -1.0, micro, A1, 0.01)
    cfg = HmmConfig(80, 0.5, 1.0, micro, A1, 0.01)
    assert cfg.grid.n == 80


def test_constant_material_equals_hom():
    c = 1.3
    micro = MicroConfig.standard(0.01, 5, 16)
    cfg = HmmConfig(40, 0.5, 1.0, micro, Constant(c), 0.01)
    hmm = run_hmm(cfg, gaussian_pulse)
    hom = run_homogenized(Constant(c), gaussian_pulse, 1.0, 40, 0.5)
    assert l2_distance(hmm.final, hom.final, 1 / 40) <= 1e-10


def test_zero_time():
    cfg = HmmConfig(20, 0.5, 0.0, MicroConfig.standard(0.01, 5, 16), A1, 0.01)
    tr = run_hmm(cfg, gaussian_pulse)
    np.testing.assert_array_equal(tr.final, gaussian_pulse(cfg.grid.nodes))


def test_micro_solves_independent_of_steps():
    micro = MicroConfig.standard(0.01, 5, 16)
    short = run_hmm(HmmConfig(16, 0.5, 0.1, micro, A2, 0.01), gaussian_pulse)
    long = run_hmm(HmmConfig(16, 0.5, 1.0, micro, A2, 0.01), gaussian_pulse)
    assert short.info["micro_solves"] == long.info["micro_solves"] == 4 * 16
    assert long.info["steps"] > 5 * short.info["steps"]


def test_translation_commutes():
    micro = MicroConfig.standard(0.01, 5, 16)
    cfg = HmmConfig(32, 0.5, 2.0, micro, A1, 0.01)
    tab = build_flux_table(A1, cfg.grid, micro)
    base = run_hmm(cfg, gaussian_pulse, table=tab)
    h = cfg.grid.h
    shifted = run_hmm(cfg, lambda x: gaussian_pulse((x - h) % 1.0), table=tab)
    np.testing.assert_allclose(shifted.final, np.roll(base.final, 1), atol=1e-13)


def test_mean_conserved():
    micro = MicroConfig.standard(0.01, 5, 16)
    tr = run_hmm(HmmConfig(16, 0.5, 2.0, micro, A2, 0.01), gaussian_pulse, snapshots=10)
    assert np.ptp(tr.states.mean(axis=1)) < 1e-13


def test_table_grid_mismatch():
    micro = MicroConfig.standard(0.01, 5, 16)
    cfg = HmmConfig(16, 0.5, 0.1, micro, A1, 0.01)
    tab = build_flux_table(A1, Grid1D.unit(20), micro)
    with pytest.raises(ConfigError):
        run_hmm(cfg, gaussian_pulse, table=tab)


def test_uncorrected_flux_misses_dispersion():
    # forcing M = I keeps the raw f, whose eps^2 entry is wrong by O(1)
    micro = MicroConfig.standard(0.01, 20, 32)
    tab = build_flux_table(A1, Grid1D.unit(16), micro)
    f3 = tab.entries[0].f[3]
    target = 6 * BETA * 0.01**2
    assert abs(f3 - target) / target == pytest.approx(1.0, abs=0.05)
    assert abs(tab.entries[0].f_tilde[3] - target) / target < 1e-3


def test_too_fine_macro_grid_refused():
    # h = eps / 4: the corrected eps^2 u_xxx term makes the shortest grid modes grow
    micro = MicroConfig.standard(0.01, 20, 32)
    cfg = HmmConfig(400, 0.5, 0.1, micro, A1, 0.01)
    with pytest.raises(StabilityError):
        run_hmm(cfg, gaussian_pulse)
