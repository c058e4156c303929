import numpy as np
import pytest

from absorbns.diagnostics import (
    FitDomainError,
    absorption_operator_bounds,
    check_envelope,
    detect_extinction,
    energy_residual,
    fit_exponential_rate,
    fit_power_exponent,
    integrated_energy_check,
    perturbation_gronwall_check,
)
from absorbns.series import EnergySeries
from absorbns.solver import RandomDivFree, SimConfig, TaylorGreen, run
from absorbns.spectral import TorusGrid
from absorbns.theory import Exponential


def series_of(t, e, ens=None, lsig=None, fp=None):
    z = np.zeros_like(t)
    return EnergySeries.from_arrays(t=t, energy=e, enstrophy=z if ens is None else ens,
                                    lsigma_pow=z if lsig is None else lsig,
                                    forcing_power=z if fp is None else fp)


def test_detect_extinction():
    t = np.linspace(0, 10, 101)
    e = np.where(t < 4.0, (4.0 - t) ** 2, 0.0)
    ext = detect_extinction(series_of(t, e), confirm_window=1.0)
    assert ext.t_ext == pytest.approx(4.0) and ext.confirmed
    assert not detect_extinction(series_of(t, e), confirm_window=7.0).confirmed


def test_no_extinction_when_tail_rises():
    t = np.linspace(0, 10, 101)
    e = np.where((t > 4) & (t < 9), 0.0, 1.0)
    assert detect_extinction(series_of(t, e)) is None


def test_exponential_fit_recovers_rate():
    t = np.linspace(0, 10, 201)
    fit = fit_exponential_rate(series_of(t, 3.0 * np.exp(-0.37 * t)))
    assert fit.rate == pytest.approx(0.37, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.window == pytest.approx((1.0, 9.0))


def test_power_fit_recovers_exponent():
    t = np.linspace(0, 20, 201)
    fit = fit_power_exponent(series_of(t, 2.0 * (1 + t) ** -1.7), (0, 20))
    assert fit.exponent == pytest.approx(1.7, rel=1e-12)


def test_fit_domain_errors():
    t = np.linspace(0, 1, 11)
    with pytest.raises(FitDomainError):
        fit_exponential_rate(series_of(t, np.zeros_like(t)))
    with pytest.raises(FitDomainError):
        fit_exponential_rate(series_of(t, np.ones_like(t)), (2.0, 3.0))


def test_check_envelope():
    t = np.linspace(0, 5, 51)
    env = Exponential(1.0, 0.5)
    ok = check_envelope(series_of(t, np.exp(-0.6 * t)), env)
    assert ok.passed and ok.max_ratio == pytest.approx(1.0)
    bad = check_envelope(series_of(t, np.exp(-0.4 * t)), env)
    assert not bad.passed and bad.first_violation > 0
    # Within the relative slack.
    assert check_envelope(series_of(t, 1.005 * np.exp(-0.5 * t)), env).passed


def test_residual_of_exact_balance_is_second_order():
    # E = exp(-2t) with nu * enstrophy = 2 exp(-2t) balances exactly.
    maxes = []
    for n in (51, 101, 201):
        t = np.linspace(0, 2, n)
        s = series_of(t, np.exp(-2 * t), ens=2 * np.exp(-2 * t))
        maxes.append(energy_residual(s, 1.0, 0.0).max_abs)
    assert maxes[0] / maxes[1] > 3.9 and maxes[1] / maxes[2] > 3.9


def test_residual_needs_uniform_sampling():
    t = np.array([0.0, 0.1, 0.3])
    with pytest.raises(ValueError):
        energy_residual(series_of(t, np.ones(3)), 1.0, 0.0)


def test_integrated_check_flags_energy_creation():
    t = np.linspace(0, 1, 101)
    good = series_of(t, np.exp(-2 * t), ens=2 * np.exp(-2 * t))
    assert integrated_energy_check(good, 1.0, 0.0)["holds"]
    bad = series_of(t, np.exp(t), ens=np.zeros_like(t))
    assert not integrated_energy_check(bad, 1.0, 0.0, slack_factor=0.0)["holds"]


def test_simulated_residual_small():
    cfg = SimConfig(nu=0.1, alpha=0.2, sigma=3.0, grid=TorusGrid(16), dt=1e-3, t_end=0.2,
                    initial_condition=RandomDivFree(1.0, -2.0, seed=4))
    series, _ = run(cfg)
    assert energy_residual(series, cfg.nu, cfg.alpha).max_abs < 1e-4
    assert integrated_energy_check(series, cfg.nu, cfg.alpha)["holds"]


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_absorption_operator_monotone(p):
    r = absorption_operator_bounds(p, n_pairs=20000, seed=1)
    assert r["min_inner"] >= 0.0
    assert r["min_lower_ratio"] > 0.0
    assert np.isfinite(r["max_upper_ratio"])


def test_perturbation_scales_linearly():
    cfg = SimConfig(nu=0.1, alpha=0.1, sigma=3.0, grid=TorusGrid(16), dt=1e-2, t_end=1.0, sample_interval=0.1,
                    initial_condition=TaylorGreen(1.0))
    r = perturbation_gronwall_check(cfg, 1e-6)
    assert r["scaling_ratio_max_dev"] < 1e-3
    assert r["full"]["c_empirical"] >= 0.0
    zero = perturbation_gronwall_check(cfg, 0.0)
    assert np.all(zero["full"]["diff2"] == 0.0)
