"""Acceptance criteria; each test prints one PASS/FAIL line with its measurements."""

import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from absorbns.cli import main
from absorbns.diagnostics import (
    absorption_operator_bounds,
    detect_extinction,
    energy_residual,
    integrated_energy_check,
)
from absorbns.manifest import RunManifest
from absorbns.solver import SimConfig, TaylorGreen, absorption_magnitude, run
from absorbns.spectral import (
    SpectralField,
    TorusGrid,
    leray_project,
    transform_to_physical,
    transform_to_spectral,
)
from absorbns.suites import run_suite
from absorbns.theory import (
    Extinction,
    GnsParams,
    envelope_value,
    extinction_decay_constant,
    extinction_time_bound,
    gamma,
    mu,
    theta_general,
    theta_sigma,
)


@pytest.fixture
def report(capsys):
    """Print a single verdict line per criterion, bypassing output capture."""

    def emit(n, ok, title, details, elapsed, limit=None):
        within = limit is None or elapsed < limit
        verdict = "PASS" if ok and within else "FAIL"
        budget = "" if limit is None else f" / limit {limit:g}s"
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {verdict}  {title}: {details} ({elapsed:.1f}s{budget})")
        assert ok, details
        assert within, f"runtime {elapsed:.1f}s exceeds {limit}s"

    return emit


_SUITES = {}


def suite(name):
    """Run each preset once per session; return (result, seconds)."""
    if name not in _SUITES:
        t0 = time.perf_counter()
        res = run_suite(name, seed=0)
        _SUITES[name] = (res, time.perf_counter() - t0)
    return _SUITES[name]


def _ode_magnitude(m0, alpha, sigma, tau):
    # Adaptive embedded Runge-Kutta 4(5), tight tolerances.
    sol = solve_ivp(lambda t, m: -alpha * np.abs(m) ** (sigma - 1), (0, tau), [m0],
                    method="RK45", rtol=1e-11, atol=1e-300)
    return sol.y[0, -1]


def test_criterion_01_absorption_substep(report):
    t0 = time.perf_counter()
    worst = 0.0
    zero_ok = True
    for sigma in (1.2, 1.5, 2.0, 3.0, 4.0):
        for alpha in (0.1, 1.0):
            for m0 in (0.1, 1.0, 10.0):
                horizon = m0 ** (2 - sigma) / (alpha * (2 - sigma)) if sigma < 2 else 5.0 / alpha
                for frac in (0.05, 0.5, 0.95):
                    tau = frac * horizon
                    exact = absorption_magnitude(m0, alpha, sigma, tau)
                    worst = max(worst, abs(exact / _ode_magnitude(m0, alpha, sigma, tau) - 1))
                if sigma < 2:
                    zero_ok &= absorption_magnitude(m0, alpha, sigma, horizon) == 0.0
                    zero_ok &= absorption_magnitude(m0, alpha, sigma, horizon * (1 - 1e-9)) > 0.0
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and zero_ok
    report(1, ok, "absorption substep", f"max rel err {worst:.2e} (tol 1e-8), exact zero at t_ext: {zero_ok}",
           elapsed, 1.0)


def test_criterion_02_projection_and_transforms(report):
    t0 = time.perf_counter()
    grid = TorusGrid(64)
    rng = np.random.default_rng(2024)
    idem = div = trip = 0.0
    for _ in range(100):
        phys = rng.standard_normal((2, 64, 64))
        f = transform_to_spectral(phys, grid)
        p = leray_project(f)
        scale = np.abs(f.coeffs).max()
        idem = max(idem, np.abs(leray_project(p).coeffs - p.coeffs).max() / scale)
        div = max(div, p.divergence_max() / scale)
        trip = max(trip, np.abs(transform_to_physical(f) - phys).max() / np.abs(phys).max())
    elapsed = time.perf_counter() - t0
    ok = idem <= 1e-14 and div <= 1e-12 and trip <= 1e-12
    report(2, ok, "projection/transforms",
           f"idempotence {idem:.1e} (1e-14), divergence {div:.1e} (1e-12), round trip {trip:.1e} (1e-12)",
           elapsed, 5.0)


def test_criterion_03_formula_regressions(report):
    t0 = time.perf_counter()
    errs = []
    for N in (1, 2, 3):
        errs.append(abs(mu(1.0, N) - (1 + 2 / (N + 2))))
        errs.append(abs(mu(2.0, N) - 1.0))
        errs.append(abs(theta_sigma(2.0, N)))
        for s in np.linspace(1.0, 2.0, 101):
            errs.append(abs(theta_sigma(s, N) - theta_general(GnsParams(N, 2, 2, s))))
    gam = max(abs(gamma(2.0 - 1e-13) - 1), abs(gamma(2.0 + 1e-13) - 1), abs(gamma(2.0) - 1))
    E0, s, c = 3.0, 1.5, 0.7
    ts = extinction_time_bound(E0, s, 2, 0.1, 0.1, c)
    env = Extinction(E0, mu(s), extinction_decay_constant(s, 2, 0.1, 0.1, c))
    hits = envelope_value(env, ts) == 0.0 and envelope_value(env, ts * (1 - 1e-12)) > 0.0
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= 1e-14 and gam <= 1e-12 and hits
    report(3, ok, "formula regressions",
           f"max formula err {max(errs):.1e}, gamma at 2 err {gam:.1e}, envelope zero at t*: {hits}", elapsed, 1.0)


def test_criterion_04_finite_time_extinction(report):
    res, dt_ext = suite("extinction_unforced")
    base, dt_base = suite("classical_ns_baseline")
    m = res.manifest
    e = res.series.column("energy")
    ext = detect_extinction(res.series, 1e-12, confirm_window=res.config.grace)
    env = m.checks["envelope"]
    below = ext is not None and ext.confirmed and e[-1] < 1e-12 * e[0]
    ok = below and m.pass_flags["within_bound"] and env["passed"] and all(base.manifest.pass_flags.values())
    details = (f"t_ext={m.extra['t_ext']:.3g} <= t*={m.extra['t_star']:.3g} (c={m.extra['calibration']['value']:.4f}), "
               f"envelope max ratio {env['max_ratio']:.3f} slack 1e-2, baseline flags {base.manifest.pass_flags}")
    report(4, ok, "finite-time extinction", details, dt_ext + dt_base, 120.0)


def test_criterion_05_forced_extinction(report):
    res, elapsed = suite("extinction_forced")
    m = res.manifest
    t = res.series.column("t")
    e = res.series.column("energy")
    after = t >= m.extra["t_f"] - 1e-12
    tail_ok = after.any() and bool(np.all(e[after] < 1e-10 * e[0]))
    comp = m.checks["comparison"]
    ok = tail_ok and comp["hypothesis_holds"]
    details = (f"eps={m.extra['epsilon']:.3e}=eps0/2, max E/E0 after t_f {np.max(e[after]) / e[0]:.1e} (<1e-10) "
               f"over {int(after.sum())} samples, comparison max ratio {comp['max_ratio']:.3f}")
    report(5, ok, "forced extinction", details, elapsed, 120.0)


def test_criterion_06_exponential_decay_sigma2(report):
    res, elapsed = suite("exp_decay_sigma2")
    m = res.manifest
    fit = [f for f in m.fits if f["kind"] == "exponential_rate"][0]
    ok = fit["r_squared"] > 0.999 and fit["rate"] >= res.envelope.rate and m.checks["envelope"]["passed"]
    details = (f"r^2={fit['r_squared']:.6f}, fitted rate {fit['rate']:.4f} >= bound {res.envelope.rate:.4f} "
               f"(c={m.extra['calibration']['value']:.6f}), envelope {m.checks['envelope']['passed']}")
    report(6, ok, "exponential decay at sigma=2", details, elapsed, 60.0)


def test_criterion_07_power_decay(report):
    res, elapsed = suite("power_decay")
    m = res.manifest
    early = m.extra["early_power_exponent"]
    ok = m.pass_flags["envelope"]
    details = (f"envelope max ratio {m.checks['envelope']['max_ratio']:.3f} (C_S={m.extra['calibration']['value']:.4f}), "
               f"early-window exponent {early['exponent']:.3f} (r^2={early['r_squared']:.3f}) vs bound exponent "
               f"{m.extra['bound_exponent']:g}; rigorous C_S envelope {m.pass_flags['envelope_holder_poincare']}")
    report(7, ok, "power decay at sigma=3", details, elapsed, 60.0)


def test_criterion_08_forced_equilibrium(report):
    res, elapsed = suite("forced_equilibrium")
    m = res.manifest
    e = res.series.column("energy")
    big = m.theory["script_e_star"]
    ok = (e[0] > big and m.pass_flags["reaches_band"] and m.pass_flags["decreasing_above_level"]
          and m.pass_flags["envelope_absorbing_level"] and m.pass_flags["envelope"])
    details = (f"E0={e[0]:.3f} > level {big:.3f}, final E={e[-1]:.3f} <= 1.05 level, "
               f"rate {m.theory['decay_rate_constants']['forced_equilibrium']:.4f}, envelope max ratio "
               f"{m.checks['envelope_absorbing_level']['max_ratio']:.3f}")
    report(8, ok, "forced equilibrium", details, elapsed, 120.0)


def test_criterion_09_energy_balance(report):
    t0 = time.perf_counter()
    maxes = []
    integrated = []
    for dt in (2e-3, 1e-3, 5e-4):
        cfg = SimConfig(nu=0.1, alpha=0.1, sigma=3.0, grid=TorusGrid(64), dt=dt, t_end=0.5,
                        initial_condition=TaylorGreen(1.0))
        series, _ = run(cfg)
        maxes.append(energy_residual(series, cfg.nu, cfg.alpha).max_abs)
        integrated.append(integrated_energy_check(series, cfg.nu, cfg.alpha)["holds"])
    ratios = [maxes[0] / maxes[1], maxes[1] / maxes[2]]
    elapsed = time.perf_counter() - t0
    ok = min(ratios) >= 3.5 and all(integrated)
    report(9, ok, "energy balance",
           f"max|R| {', '.join(f'{x:.2e}' for x in maxes)}; halving ratios {ratios[0]:.3f}, {ratios[1]:.3f} (>=3.5); "
           f"integrated inequality holds: {all(integrated)}", elapsed, 120.0)


def test_criterion_10_absorption_operator(report):
    t0 = time.perf_counter()
    rows = [absorption_operator_bounds(p, n_pairs=10**6, seed=10) for p in (1.5, 2.0, 3.0)]
    elapsed = time.perf_counter() - t0
    ok = all(r["min_inner"] >= 0 and r["min_lower_ratio"] > 0 and math.isfinite(r["max_upper_ratio"]) for r in rows)
    details = "; ".join(
        f"p={r['p']}: min inner {r['min_inner']:.1e}, lower ratio {r['min_lower_ratio']:.3f}, "
        f"upper ratio {r['max_upper_ratio']:.3f}" for r in rows)
    report(10, ok, "absorption operator monotone/bounded", details, elapsed, 10.0)


def test_criterion_11_determinism(report, tmp_path, capsys):
    t0 = time.perf_counter()
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(["verify", "extinction_forced", "--seed", "7", "--out", str(out)])
        outs.append((code, (out / "energy.csv").read_bytes(), RunManifest.read(out / "manifest.json").pass_flags))
    capsys.readouterr()
    elapsed = time.perf_counter() - t0
    same_csv = outs[0][1] == outs[1][1]
    same_flags = outs[0][2] == outs[1][2]
    ok = same_csv and same_flags and outs[0][0] == outs[1][0] == 0
    report(11, ok, "determinism", f"byte-identical CSV {same_csv}, identical pass_flags {same_flags}", elapsed)
