"""Measured decay characteristics and their comparison with theoretical bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .series import EnergySeries
from .spectral import SpectralField, gradient_norm_sq, l2_norm_sq
from .theory import EnvelopeSpec, envelope_value

__all__ = [
    "EnergySeries",
    "FitDomainError",
    "ExtinctionTime",
    "ExponentialRate",
    "PowerFit",
    "FitResult",
    "EnvelopeCheck",
    "ResidualReport",
    "detect_extinction",
    "default_window",
    "fit_exponential_rate",
    "fit_power_exponent",
    "check_envelope",
    "energy_residual",
    "integrated_energy_check",
    "perturbation_gronwall_check",
    "absorption_operator_bounds",
]


class FitDomainError(ValueError):
    pass


@dataclass(frozen=True)
class ExtinctionTime:
    t_ext: float
    confirmed: bool
    kind: str = "extinction_time"


@dataclass(frozen=True)
class ExponentialRate:
    rate: float
    r_squared: float
    window: tuple
    kind: str = "exponential_rate"


@dataclass(frozen=True)
class PowerFit:
    exponent: float
    r_squared: float
    window: tuple
    kind: str = "power_fit"


FitResult = Union[ExtinctionTime, ExponentialRate, PowerFit]


def _extinct_mask(e: np.ndarray, tol_rel: float) -> np.ndarray:
    return (e < tol_rel * e[0]) | (e == 0.0)


def detect_extinction(series: EnergySeries, tol_rel: float = 1e-12, confirm_window: float = 0.0):
    """First sample from which energy stays below ``tol_rel * E(0)``, or None.

    ``confirmed`` is set when the below-tolerance tail spans at least ``confirm_window``.
    """
    if not len(series):
        raise ValueError("empty series")
    t = series.column("t")
    below = _extinct_mask(series.column("energy"), tol_rel)
    if not below[-1]:
        return None
    above = np.flatnonzero(~below)
    first = 0 if above.size == 0 else above[-1] + 1
    t_ext = float(t[first])
    return ExtinctionTime(t_ext, bool(t[-1] - t_ext >= confirm_window))


def default_window(series: EnergySeries) -> tuple[float, float]:
    """``[0.1 T, 0.9 T]`` with ``T`` the last sample time of positive energy."""
    t = series.column("t")
    e = series.column("energy")
    pos = np.flatnonzero(e > 0)
    if pos.size == 0:
        raise FitDomainError("series has no positive-energy samples")
    t_last = t[pos[-1]]
    return (t[0] + 0.1 * (t_last - t[0]), t[0] + 0.9 * (t_last - t[0]))


def _select(series, window):
    t = series.column("t")
    e = series.column("energy")
    if window is None:
        window = default_window(series)
    lo, hi = window
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if sel.sum() < 2:
        raise FitDomainError(f"fewer than two samples in window {window}")
    if np.any(e[sel] <= 0):
        raise FitDomainError(f"window {window} contains non-positive energy")
    return t[sel], e[sel], (float(lo), float(hi))


def _linfit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), min(max(r2, 0.0), 1.0)


def fit_exponential_rate(series: EnergySeries, window=None) -> ExponentialRate:
    """Least-squares slope of ``log E`` against ``t``; rate is minus the slope."""
    t, e, window = _select(series, window)
    slope, r2 = _linfit(t, np.log(e))
    return ExponentialRate(-slope, r2, window)


def fit_power_exponent(series: EnergySeries, window=None) -> PowerFit:
    """Least-squares slope of ``log E`` against ``log(1 + t)``."""
    t, e, window = _select(series, window)
    slope, r2 = _linfit(np.log1p(t), np.log(e))
    return PowerFit(-slope, r2, window)


@dataclass
class EnvelopeCheck:
    passed: bool
    max_ratio: float
    first_violation: Optional[float]
    n_checked: int
    slack_rel: float
    slack_abs: float
    kind: str = ""


def check_envelope(
    series: EnergySeries,
    spec: EnvelopeSpec,
    slack_rel: float = 1e-2,
    slack_abs: Optional[float] = None,
    offset: float = 0.0,
) -> EnvelopeCheck:
    """Verify ``E(t) - offset <= env(t) (1 + slack_rel) + slack_abs`` at every sample after ``spec.t0``.

    ``slack_abs`` defaults to ``1e-10 E(0)``.  ``max_ratio`` is taken over
    samples where the envelope is positive.
    """
    t = series.column("t")
    e = series.column("energy") - offset
    if slack_abs is None:
        slack_abs = 1e-10 * series.energy[0]
    sel = t >= spec.t0 - 1e-12
    t, e = t[sel], e[sel]
    env = np.atleast_1d(envelope_value(spec, np.maximum(t, spec.t0)))
    bad = e > env * (1.0 + slack_rel) + slack_abs
    pos = env > 0
    max_ratio = float(np.max(e[pos] / env[pos])) if pos.any() else 0.0
    first = float(t[np.argmax(bad)]) if bad.any() else None
    return EnvelopeCheck(not bad.any(), max_ratio, first, int(sel.sum()), slack_rel, slack_abs, spec.kind)


@dataclass
class ResidualReport:
    t_mid: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    max_abs: float = 0.0


def energy_residual(series: EnergySeries, nu: float, alpha: float, rtol_uniform: float = 1e-6) -> ResidualReport:
    """``R_n = (E_{n+1} - E_n)/dt + <nu ||grad u||^2 + alpha ||u||_s^s - int f.u>_mid``.

    The bracket is the trapezoidal average of the two endpoint samples.
    Sampling must be uniform.
    """
    a = series.arrays()
    t = a["t"]
    if len(t) < 2:
        return ResidualReport(np.empty(0), np.empty(0), 0.0)
    dts = np.diff(t)
    if np.ptp(dts) > rtol_uniform * dts.mean():
        raise ValueError("energy residual needs uniform sampling")
    d = nu * a["enstrophy"] + alpha * a["lsigma_pow"] - a["forcing_power"]
    r = np.diff(a["energy"]) / dts + 0.5 * (d[1:] + d[:-1])
    return ResidualReport(0.5 * (t[1:] + t[:-1]), r, float(np.max(np.abs(r))))


def integrated_energy_check(series: EnergySeries, nu: float, alpha: float, slack_factor: float = 10.0) -> dict:
    """Integrated balance ``||u||^2 + 2 int (nu ens + alpha lsig - f.u) <= ||u0||^2`` within residual scale.

    The allowance is ``slack_factor * ||u0||^2 * slack`` where ``slack`` is the
    integrated residual bound ``max|R_n| T / E(0)``.
    """
    a = series.arrays()
    t = a["t"]
    d = nu * a["enstrophy"] + alpha * a["lsigma_pow"] - a["forcing_power"]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(t))])
    lhs = 2.0 * a["energy"] + 2.0 * cum
    u0sq = 2.0 * a["energy"][0]
    res = energy_residual(series, nu, alpha)
    span = t[-1] - t[0]
    slack = res.max_abs * span / a["energy"][0] if a["energy"][0] > 0 else 0.0
    excess = lhs - u0sq
    allowed = u0sq * slack_factor * slack
    return {
        "holds": bool(np.all(excess <= allowed + 1e-14 * u0sq)),
        "max_excess": float(np.max(excess)),
        "allowed": float(allowed),
        "slack": float(slack),
    }


def _unit_perturbation(grid, seed):
    from .solver import RandomDivFree, realize_initial_condition

    f = realize_initial_condition(RandomDivFree(energy=0.5, spectrum_exponent=-1.0, seed=seed, kmax=8.5), grid)
    return f * (1.0 / math.sqrt(l2_norm_sq(f)))


def _difference_history(config, delta, direction):
    from .solver import realize_initial_condition, run

    u0 = realize_initial_condition(config.initial_condition, config.grid, config.seed)
    cfg = config.with_(stop_on_extinction=False)
    a, b = [], []
    run(cfg, observer=lambda s: a.append(s.field.coeffs), initial=u0)
    run(cfg, observer=lambda s: b.append((s.t, s.field)), initial=u0 + direction * delta)
    t = np.array([tb for tb, _ in b])
    diff2 = np.array([l2_norm_sq(SpectralField(config.grid, ca - fb.coeffs)) for ca, (_, fb) in zip(a, b)])
    h1 = np.array([l2_norm_sq(fb) + gradient_norm_sq(fb) for _, fb in b])
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (h1[1:] + h1[:-1]) * np.diff(t))])
    return t, diff2, integral


def perturbation_gronwall_check(config, delta: float, seed: Optional[int] = None) -> dict:
    """Run from ``u0`` and ``u0 + delta w`` (``||w|| = 1``) and fit the stability constant.

    Reports the smallest ``C`` with ``||u1-u2||^2(t) <= delta^2 exp((C/nu) int_0^t ||u2||_H1^2)``
    at every sample, and the same quantity for ``delta/2`` to expose linear scaling.
    """
    w = _unit_perturbation(config.grid, config.seed if seed is None else seed)
    out = {"delta": delta}
    for key, d in (("full", delta), ("half", delta / 2)):
        t, diff2, integral = _difference_history(config, d, w)
        if d == 0:
            c_emp = 0.0
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.log(diff2[1:] / d**2)
                c = np.where(integral[1:] > 0, config.nu * logs / integral[1:], 0.0)
            c_emp = float(max(0.0, np.max(c))) if c.size else 0.0
        out[key] = {
            "t": t,
            "diff2": diff2,
            "integral_h1": integral,
            "c_empirical": c_emp,
            "monotone_decreasing": bool(np.all(np.diff(diff2) <= 1e-15 * max(diff2[0], 1e-300))),
        }
        if d == 0:
            break
    if delta > 0:
        nf = np.sqrt(out["full"]["diff2"]) / delta
        nh = np.sqrt(out["half"]["diff2"]) / (delta / 2)
        pos = nf > 0
        out["scaling_ratio_max_dev"] = float(np.max(np.abs(nh[pos] / nf[pos] - 1.0))) if pos.any() else 0.0
    return out


def absorption_operator_bounds(p: float, n_pairs: int = 10**6, seed: int = 0, dim: int = 2) -> dict:
    """Sample ``(xi, eta)`` pairs and bound the vector p-power map ``a(x) = |x|^(p-2) x``.

    Returns the minimum of ``(a(xi)-a(eta)).(xi-eta)``, the minimum of that
    quantity over ``|xi-eta|^2 (|xi|+|eta|)^(p-2)`` and the maximum of
    ``|a(xi)-a(eta)| / (|xi-eta| (|xi|+|eta|)^(p-2))``.
    """
    rng = np.random.default_rng(seed)
    scale = 10.0 ** rng.uniform(-4, 4, size=(n_pairs, 1))
    xi = rng.standard_normal((n_pairs, dim)) * scale
    # A third of the pairs are near-coincident, a third independent, a third opposed.
    mode = rng.integers(0, 3, size=(n_pairs, 1))
    rel = 10.0 ** rng.uniform(-6, 0, size=(n_pairs, 1))
    near = xi + rel * scale * rng.standard_normal((n_pairs, dim))
    indep = rng.standard_normal((n_pairs, dim)) * scale * 10.0 ** rng.uniform(-3, 3, size=(n_pairs, 1))
    opposed = -xi * 10.0 ** rng.uniform(-3, 3, size=(n_pairs, 1))
    eta = np.where(mode == 0, near, np.where(mode == 1, indep, opposed))

    def a(x):
        n = np.linalg.norm(x, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(n > 0, n ** (p - 2.0) * x, 0.0)

    da = a(xi) - a(eta)
    dx = xi - eta
    ndx = np.linalg.norm(dx, axis=1)
    s = np.linalg.norm(xi, axis=1) + np.linalg.norm(eta, axis=1)
    inner = np.sum(da * dx, axis=1)
    keep = ndx > 0
    lower = inner[keep] / (ndx[keep] ** 2 * s[keep] ** (p - 2.0))
    upper = np.linalg.norm(da, axis=1)[keep] / (ndx[keep] * s[keep] ** (p - 2.0))
    return {
        "p": p,
        "n_pairs": n_pairs,
        "min_inner": float(inner.min()),
        "min_lower_ratio": float(lower.min()),
        "max_upper_ratio": float(upper.max()),
    }
