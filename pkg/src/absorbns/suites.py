"""Preset verification runs and the analysis shared with ad hoc runs.

Each suite fixes a configuration, derives the constants entering the bounds,
integrates, and reduces the result to a dictionary of boolean pass flags.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .calibration import (
    Calibration,
    calibrate_gns_constant,
    calibrate_sobolev_constant,
    gns_ratio,
    sobolev_ratio,
)
from .config import TheoryOptions, config_to_dict
from .diagnostics import (
    FitDomainError,
    check_envelope,
    detect_extinction,
    fit_exponential_rate,
    fit_power_exponent,
)
from .manifest import RunManifest, to_plain
from .series import EnergySeries
from .solver import (
    BoundedConstant,
    SimConfig,
    TaylorGreen,
    VanishingPower,
    realize_initial_condition,
    run,
)
from .spectral import SpectralField, TorusGrid, energy
from .theory import (
    ForcedEquilibrium,
    TheoryReport,
    _forced_c1c2,
    build_theory_report,
    comparison_lemma_check,
    gamma,
    gns_constant,
    GnsParams,
    extinction_time_bound,
)

log = logging.getLogger(__name__)

SUITES: dict[str, Callable] = {}
ENVELOPE_SLACK = 1e-2
# Final energy must lie within this factor of the absorbing level.
BAND = 1.05


def _suite(name):
    def deco(fn):
        SUITES[name] = fn
        return fn

    return deco


@dataclass
class SuiteResult:
    name: str
    config: SimConfig
    series: EnergySeries
    manifest: RunManifest
    envelope: object = None
    others: dict = field(default_factory=dict)
    hline: Optional[tuple] = None


class RatioTracker:
    """Observer recording the largest interpolation ratio met along a trajectory."""

    def __init__(self, ratio: Callable[[SpectralField], float]):
        self.ratio = ratio
        self.max = -np.inf
        self.t_max = None

    def __call__(self, state):
        r = self.ratio(state.field)
        if np.isfinite(r) and r > self.max:
            self.max, self.t_max = float(r), state.t


def _sobolev_energies(E0: float) -> np.ndarray:
    return np.geomspace(1e-3 * E0, E0, 7)


def calibrate_for(cfg: SimConfig, u0: SpectralField, seed: int, n_per_family: int = 8) -> Calibration:
    """Calibrate the constant relevant to ``cfg.sigma``, using ``u0`` as an extra probe."""
    if cfg.sigma <= 2:
        return calibrate_gns_constant(cfg.grid, cfg.sigma, n_per_family=n_per_family, seed=seed, probes=[u0])
    E0 = energy(u0)
    return calibrate_sobolev_constant(
        cfg.grid, cfg.sigma, _sobolev_energies(E0), n_per_family=max(1, n_per_family // 2), seed=seed, probes=[u0]
    )


def theory_for_config(cfg: SimConfig, options: TheoryOptions = TheoryOptions(), u0: Optional[SpectralField] = None):
    """Theory report for a run configuration; returns ``(report, calibration or None)``."""
    if u0 is None:
        u0 = realize_initial_condition(cfg.initial_condition, cfg.grid, cfg.seed)
    E0 = energy(u0)
    c_gns, c_s = options.c_gns, options.c_s
    gprov = sprov = None
    cal = None
    if options.calibrate:
        cal = calibrate_for(cfg, u0, cfg.seed, options.calibration_samples)
        if cfg.sigma <= 2 and c_gns is None:
            c_gns, gprov = cal.value, cal.provenance
        if cfg.sigma > 2 and c_s is None:
            c_s, sprov = cal.value, cal.provenance
    C_f = cfg.forcing.C_f if isinstance(cfg.forcing, BoundedConstant) else None
    rep = build_theory_report(
        cfg.sigma, cfg.nu, cfg.alpha, E0,
        c_gns=c_gns, c_gns_provenance=gprov, c_s=c_s, c_s_provenance=sprov,
        domain_length=cfg.grid.length, C_f=C_f,
        vanishing_forcing=isinstance(cfg.forcing, VanishingPower), kbar=options.kbar,
    )
    return rep, cal


def fits_for(series: EnergySeries, cfg: SimConfig) -> list:
    """Extinction time plus whichever rate fits the data admits."""
    out = []
    ext = detect_extinction(series, cfg.extinction_tol, confirm_window=cfg.grace)
    if ext is not None:
        out.append(asdict(ext))
    for fit in (fit_exponential_rate, fit_power_exponent):
        try:
            out.append(asdict(fit(series)))
        except FitDomainError as exc:
            log.debug("skipping %s: %s", fit.__name__, exc)
    return out


def analyze_run(series, cfg, report: TheoryReport, options=None, command="run", extra=None) -> RunManifest:
    checks = {}
    flags = {}
    if report.envelope is not None:
        chk = check_envelope(series, report.envelope, slack_rel=ENVELOPE_SLACK)
        checks["envelope"] = asdict(chk)
        flags["envelope"] = chk.passed
    return RunManifest(
        command=command,
        config=config_to_dict(cfg, options),
        seed=cfg.seed,
        theory=report.to_dict(),
        fits=fits_for(series, cfg),
        checks=checks,
        pass_flags=flags,
        extra=extra or {},
    )


# -- presets --------------------------------------------------------------------

GRID = TorusGrid(64)


def _base(seed: int, **kw) -> SimConfig:
    params = dict(nu=0.1, alpha=0.1, sigma=1.5, grid=GRID, dt=1e-3, t_end=15.0, sample_interval=0.05,
                  initial_condition=TaylorGreen(1.0), seed=seed)
    params.update(kw)
    return SimConfig(**params)


def _calibrated_report(cfg, seed, **kw):
    u0 = realize_initial_condition(cfg.initial_condition, cfg.grid, cfg.seed)
    cal = calibrate_for(cfg, u0, seed)
    key = "c_gns" if cfg.sigma <= 2 else "c_s"
    rep = build_theory_report(
        cfg.sigma, cfg.nu, cfg.alpha, energy(u0), domain_length=cfg.grid.length,
        **{key: cal.value, key + "_provenance": cal.provenance}, **kw,
    )
    return u0, cal, rep


def _manifest(name, cfg, rep, series, checks, flags, fits=None, extra=None):
    return RunManifest(
        command="verify",
        suite=name,
        config=config_to_dict(cfg),
        seed=cfg.seed,
        theory=rep.to_dict(),
        fits=fits if fits is not None else fits_for(series, cfg),
        checks=to_plain(checks),
        pass_flags={k: bool(v) for k, v in flags.items()},
        extra=to_plain(extra or {}),
    )


@_suite("extinction_unforced")
def extinction_unforced(seed: int = 0) -> SuiteResult:
    """Sublinear absorption drives the energy to zero in finite time."""
    name = "extinction_unforced"
    cfg = _base(seed)
    u0, cal, rep = _calibrated_report(cfg, seed)
    tracker = RatioTracker(lambda f: gns_ratio(f, cfg.sigma))
    series, _ = run(cfg, observer=tracker)
    ext = detect_extinction(series, cfg.extinction_tol, confirm_window=cfg.grace)
    env = check_envelope(series, rep.envelope, slack_rel=ENVELOPE_SLACK)
    lemma_c = gns_constant(GnsParams(2, 2, 2, cfg.sigma))
    flags = {
        "extinct": ext is not None and ext.confirmed,
        "within_bound": ext is not None and ext.t_ext <= rep.t_star,
        "envelope": env.passed,
        "constant_covers_trajectory": tracker.max <= cal.value,
    }
    extra = {
        "calibration": asdict(cal),
        "trajectory_max_ratio": tracker.max,
        "trajectory_argmax_t": tracker.t_max,
        "t_ext": None if ext is None else ext.t_ext,
        "t_star": rep.t_star,
        "t_star_lemma_constant": extinction_time_bound(rep.E0, cfg.sigma, 2, cfg.nu, cfg.alpha, lemma_c),
        "lemma_constant": lemma_c,
    }
    man = _manifest(name, cfg, rep, series, {"envelope": asdict(env)}, flags, extra=extra)
    return SuiteResult(name, cfg, series, man, rep.envelope)


@_suite("classical_ns_baseline")
def classical_ns_baseline(seed: int = 0) -> SuiteResult:
    """Same flow without absorption: energy decays but never vanishes."""
    name = "classical_ns_baseline"
    cfg = _base(seed, alpha=0.0)
    series, _ = run(cfg)
    e = series.column("energy")
    ext = detect_extinction(series, cfg.extinction_tol)
    flags = {
        "energy_monotone": bool(np.all(np.diff(e) <= 0.0)),
        "no_extinction": ext is None and e[-1] > cfg.extinction_tol * e[0],
        "full_horizon": abs(series.t[-1] - cfg.t_end) < 1e-9,
    }
    rep = build_theory_report(cfg.sigma, cfg.nu, cfg.alpha, float(e[0]), c_gns=1.0, c_gns_provenance="unused")
    rep.envelope = None
    rep.notes.append("no absorption: extinction bounds do not apply")
    man = _manifest(name, cfg, rep, series, {}, flags, extra={"final_energy": float(e[-1])})
    return SuiteResult(name, cfg, series, man)


@_suite("extinction_forced")
def extinction_forced(seed: int = 0) -> SuiteResult:
    """Forcing with vanishing power below the admissible threshold, switched off at ``t_f``."""
    name = "extinction_forced"
    t_f = 5.0
    cfg0 = _base(seed, initial_condition=TaylorGreen(0.1), t_end=t_f + 2.0, stop_on_extinction=False)
    u0, cal, rep = _calibrated_report(cfg0, seed, vanishing_forcing=True)
    eps = 0.5 * rep.epsilon_0
    cfg = cfg0.with_(forcing=VanishingPower(t_f=t_f, epsilon=eps, mu=rep.mu, shape=TaylorGreen()))
    tracker = RatioTracker(lambda f: gns_ratio(f, cfg.sigma))
    series, _ = run(cfg, observer=tracker)
    c1 = rep.decay_rate_constants["forced_extinction_C1"]
    c2 = rep.decay_rate_constants["forced_extinction_C2"]
    comp = comparison_lemma_check(series, t_f, eps, rep.mu, rep.kbar, c1, c2, tol_rel=cfg.extinction_tol)
    flags = {
        "hypothesis": comp.hypothesis_holds,
        "extinct_after_tf": bool(comp.extinct_after_tf),
        "constant_covers_trajectory": tracker.max <= cal.value,
    }
    ext = detect_extinction(series, cfg.extinction_tol)
    extra = {
        "calibration": asdict(cal),
        "trajectory_max_ratio": tracker.max,
        "epsilon": eps,
        "epsilon_0": rep.epsilon_0,
        "t_f": t_f,
        "t_ext": None if ext is None else ext.t_ext,
    }
    man = _manifest(name, cfg, rep, series, {"comparison": asdict(comp)}, flags, extra=extra)
    return SuiteResult(name, cfg, series, man)


@_suite("exp_decay_sigma2")
def exp_decay_sigma2(seed: int = 0) -> SuiteResult:
    """Linear absorption: exponential decay at no less than the predicted rate."""
    name = "exp_decay_sigma2"
    cfg = _base(seed, sigma=2.0, t_end=10.0)
    u0, cal, rep = _calibrated_report(cfg, seed)
    series, _ = run(cfg)
    fit = fit_exponential_rate(series)
    env = check_envelope(series, rep.envelope, slack_rel=ENVELOPE_SLACK)
    flags = {
        "fit_quality": fit.r_squared > 0.999,
        "rate_dominates": fit.rate >= rep.envelope.rate,
        "envelope": env.passed,
    }
    extra = {"calibration": asdict(cal), "fitted_rate": fit.rate, "bound_rate": rep.envelope.rate}
    man = _manifest(name, cfg, rep, series, {"envelope": asdict(env)}, flags, extra=extra)
    return SuiteResult(name, cfg, series, man, rep.envelope)


@_suite("power_decay")
def power_decay(seed: int = 0) -> SuiteResult:
    """Superlinear absorption: algebraic decay dominated by the power-law bound."""
    name = "power_decay"
    cfg = _base(seed, sigma=3.0, t_end=10.0)
    u0, cal, rep = _calibrated_report(cfg, seed)
    rigorous = build_theory_report(cfg.sigma, cfg.nu, cfg.alpha, rep.E0, domain_length=cfg.grid.length)
    tracker = RatioTracker(lambda f: sobolev_ratio(f, cfg.sigma))
    series, _ = run(cfg, observer=tracker)
    env = check_envelope(series, rep.envelope, slack_rel=ENVELOPE_SLACK)
    env_hp = check_envelope(series, rigorous.envelope, slack_rel=ENVELOPE_SLACK)
    early = fit_power_exponent(series, (0.0, 0.2 * cfg.t_end))
    flags = {
        "envelope": env.passed,
        "envelope_holder_poincare": env_hp.passed,
        "constant_covers_trajectory": tracker.max <= cal.value,
    }
    extra = {
        "calibration": asdict(cal),
        "trajectory_max_ratio": tracker.max,
        "c_s_holder_poincare": rigorous.c_s,
        "early_power_exponent": asdict(early),
        "bound_exponent": rep.envelope.exponent,
    }
    checks = {"envelope": asdict(env), "envelope_holder_poincare": asdict(env_hp)}
    man = _manifest(name, cfg, rep, series, checks, flags, extra=extra)
    return SuiteResult(name, cfg, series, man, rep.envelope)


@_suite("forced_equilibrium")
def forced_equilibrium(seed: int = 0) -> SuiteResult:
    """Bounded forcing: energy relaxes into the absorbing ball of radius ``2 E*``."""
    name = "forced_equilibrium"
    cfg0 = _base(seed, sigma=3.0, t_end=20.0)
    u0, cal, _ = _calibrated_report(cfg0, seed)
    E0 = energy(u0)
    # Pick C_f so that the absorbing level 2 E* equals E0 / 4.
    c1, _ = _forced_c1c2(cfg0.sigma, 2, cfg0.nu, cfg0.alpha, cal.value, 1.0)
    C_f = 2.0 * cfg0.nu * c1 * (E0 / 8.0) ** gamma(cfg0.sigma)
    cfg = cfg0.with_(forcing=BoundedConstant(C_f=C_f, shape=TaylorGreen()))
    rep = build_theory_report(cfg.sigma, cfg.nu, cfg.alpha, E0, c_s=cal.value, c_s_provenance=cal.provenance,
                              domain_length=cfg.grid.length, C_f=C_f)
    tracker = RatioTracker(lambda f: sobolev_ratio(f, cfg.sigma))
    series, _ = run(cfg, observer=tracker)
    env = check_envelope(series, rep.envelope, slack_rel=ENVELOPE_SLACK)
    big = ForcedEquilibrium(rep.script_e_star, rep.envelope.rate, E0)
    env_big = check_envelope(series, big, slack_rel=ENVELOPE_SLACK)
    e = series.column("energy")
    flags = {
        "envelope": env.passed,
        "envelope_absorbing_level": env_big.passed,
        "decreasing_above_level": bool(np.all(np.diff(e)[e[:-1] > rep.script_e_star] <= 0.0)),
        "reaches_band": e[-1] <= BAND * rep.script_e_star,
        "constant_covers_trajectory": tracker.max <= cal.value,
    }
    extra = {
        "calibration": asdict(cal),
        "trajectory_max_ratio": tracker.max,
        "C_f": C_f,
        "final_energy": float(e[-1]),
    }
    checks = {"envelope": asdict(env), "envelope_absorbing_level": asdict(env_big)}
    man = _manifest(name, cfg, rep, series, checks, flags, extra=extra)
    return SuiteResult(name, cfg, series, man, rep.envelope, hline=(rep.script_e_star, "absorbing level"))


def run_suite(name: str, seed: int = 0) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite '{name}' (available: {', '.join(SUITES)})")
    t0 = time.perf_counter()
    res = SUITES[name](seed)
    res.manifest.wall_time = round(time.perf_counter() - t0, 3)
    log.info("suite %s finished in %.1fs", name, res.manifest.wall_time)
    return res


def write_outputs(series: EnergySeries, manifest: RunManifest, out_dir, envelope=None, title="", hline=None) -> dict:
    """Write ``energy.csv``, ``manifest.json`` and ``energy.png`` into ``out_dir``."""
    from .plotting import plot_energy

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series.write_csv(out / "energy.csv")
    plot_energy(series, out / "energy.png", envelope=envelope, title=title, hline=hline)
    manifest.outputs = {"csv": "energy.csv", "figure": "energy.png", "manifest": "manifest.json"}
    manifest.write(out / "manifest.json")
    return manifest.outputs
