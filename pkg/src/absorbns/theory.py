"""Closed-form exponents, constants, thresholds and energy envelopes.

All energies are kinetic energies ``E = ||u||^2 / 2``.  Envelope variants are
obtained by integrating the energy-level differential inequalities directly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import optimize

__all__ = [
    "TheoryDomainError",
    "GnsParams",
    "theta_general",
    "theta_sigma",
    "mu",
    "gamma",
    "gns_case",
    "gns_constant",
    "extinction_decay_constant",
    "extinction_time_bound",
    "forced_extinction_constants",
    "epsilon_zero",
    "optimal_kbar",
    "eta_k",
    "theta_k",
    "e_star",
    "forced_decay_rate",
    "holder_poincare_constant",
    "Extinction",
    "Exponential",
    "Power",
    "ForcedEquilibrium",
    "EnvelopeSpec",
    "envelope_value",
    "ComparisonReport",
    "comparison_lemma_check",
    "TheoryReport",
    "build_theory_report",
]


class TheoryDomainError(ValueError):
    """Parameters outside the range where a formula applies."""


# -- interpolation inequality -------------------------------------------------


@dataclass(frozen=True)
class GnsParams:
    """Exponents of ``||u||_q <= C ||grad u||_p^theta ||u||_r^(1-theta)`` in dimension N."""

    N: int
    p: float
    q: float
    r: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise TheoryDomainError(f"dimension must be a positive integer, got {self.N}")
        if min(self.p, self.q, self.r) < 1:
            raise TheoryDomainError("exponents p, q, r must be >= 1")
        _check_admissible(self)


def _raw_theta(N, p, q, r):
    denom = 1.0 / N - 1.0 / p + 1.0 / r
    if denom == 0:
        raise TheoryDomainError("1/N - 1/p + 1/r vanishes; theta undefined")
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    return (1.0 / r - inv_q) / denom


def gns_case(params: GnsParams) -> int:
    """Which admissibility case (1, 2 or 3) the exponents fall under."""
    if params.N == 1:
        return 1
    if params.p < params.N:
        return 2
    return 3


def _check_admissible(g: GnsParams) -> None:
    N, p, q, r = g.N, g.p, g.q, g.r
    case = gns_case(g)
    theta = _raw_theta(N, p, q, r)
    eps = 1e-14
    if case == 1:
        if q < r:
            raise TheoryDomainError(f"case 1 (N=1) needs q >= r, got q={q}, r={r}")
        hi = p / (p + r * (p - 1))
        if not -eps <= theta <= hi + eps:
            raise TheoryDomainError(f"case 1 (N=1) needs theta in [0, {hi:.6g}], got {theta:.6g}")
    elif case == 2:
        crit = N * p / (N - p)
        lo, hi = (crit, r) if r >= crit else (r, crit)
        if not lo - eps <= q <= hi + eps:
            raise TheoryDomainError(f"case 2 (p<N) needs q in [{lo:.6g}, {hi:.6g}], got {q}")
        if not -eps <= theta <= 1 + eps:
            raise TheoryDomainError(f"case 2 (p<N) needs theta in [0, 1], got {theta:.6g}")
    else:
        if math.isinf(q) or q < r:
            raise TheoryDomainError(f"case 3 (p>=N>1) needs q in [r, inf), got q={q}, r={r}")
        hi = N * p / (N * p + r * (p - N))
        if not (-eps <= theta < hi):
            raise TheoryDomainError(f"case 3 (p>=N>1) needs theta in [0, {hi:.6g}), got {theta:.6g}")


def theta_general(params: GnsParams) -> float:
    return _raw_theta(params.N, params.p, params.q, params.r)


def gns_constant(params: GnsParams) -> float:
    """Constant of the interpolation inequality for the admissible case.

    Case 3 evaluates ``max{q(N-1)/N, 1+(p-1)pr}^theta`` literally.
    """
    N, p, q, r = params.N, params.p, params.q, params.r
    theta = theta_general(params)
    case = gns_case(params)
    if case == 1:
        base = 1.0 + (p - 1.0) / (p * r)
    elif case == 2:
        base = (N - 1.0) * p / (N - p)
    else:
        base = max(q * (N - 1.0) / N, 1.0 + (p - 1.0) * p * r)
    return base**theta


def _check_sigma_12(sigma):
    if not 1 <= sigma <= 2:
        raise TheoryDomainError(f"formula requires 1 <= sigma <= 2, got {sigma}")


def theta_sigma(sigma: float, N: int = 2) -> float:
    """Interpolation exponent for ``p = q = 2``, ``r = sigma``."""
    _check_sigma_12(sigma)
    return 1.0 - 2.0 * sigma / ((2.0 - sigma) * N + 2.0 * sigma)


def mu(sigma: float, N: int = 2) -> float:
    """Nonlinearity exponent of the homogeneous energy inequality ``E' + C E^(1/mu) <= 0``."""
    _check_sigma_12(sigma)
    return 1.0 + 2.0 * (2.0 - sigma) / ((2.0 - sigma) * N + 2.0 * sigma)


def gamma(sigma: float, N: int = 2) -> float:
    """Exponent of ``E' + C1 E^gamma <= C2`` under bounded forcing."""
    if not sigma > 1:
        raise TheoryDomainError(f"gamma requires sigma > 1, got {sigma}")
    if sigma < 2:
        return ((2.0 - sigma) * N + 2.0 * sigma) / (4.0 + (2.0 - sigma) * N)
    return 2.0 * sigma / (sigma + 2.0)


def holder_poincare_constant(sigma: float, domain_length: float = 2 * np.pi) -> float:
    """Torus constant ``C_S`` with ``||u||^2 <= C_S (||grad u||^2 + ||u||_s^s)^((s+2)/(2s))``, ``s >= 2``.

    Follows from Hoelder (``||u||_2 <= |Omega|^(1/2-1/s) ||u||_s``), the
    zero-mean Poincare inequality (constant ``L/2pi``) and ``A^a B^b <= (A+B)^(a+b)``.
    """
    if sigma < 2:
        raise TheoryDomainError(f"Hoelder-Poincare route needs sigma >= 2, got {sigma}")
    area = domain_length**2
    return (domain_length / (2 * np.pi)) * area ** ((sigma - 2.0) / (2.0 * sigma))


# -- finite-time extinction ---------------------------------------------------


def extinction_decay_constant(sigma, N, nu, alpha, c_gns) -> float:
    """``C`` in ``E(t) <= (E0^((mu-1)/mu) - C t)_+^(mu/(mu-1))``."""
    m = mu(sigma, N)
    return (m - 1.0) / m * min(nu, alpha) * (2.0 / c_gns**2) ** (1.0 / m)


def extinction_time_bound(E0, sigma, N, nu, alpha, c_gns) -> float:
    """Time by which the unforced energy must vanish; ``inf`` if ``min(nu, alpha) = 0``."""
    if sigma >= 2 or sigma < 1:
        raise TheoryDomainError(f"extinction bound requires 1 <= sigma < 2, got {sigma}")
    if E0 < 0:
        raise TheoryDomainError("E0 must be non-negative")
    if E0 == 0:
        return 0.0
    if min(nu, alpha) == 0:
        return math.inf
    m = mu(sigma, N)
    return E0 ** ((m - 1.0) / m) / extinction_decay_constant(sigma, N, nu, alpha, c_gns)


def forced_extinction_constants(sigma, N, nu, alpha, c_gns) -> tuple[float, float]:
    """``(C1, C2)`` of ``E' + C1 E^(1/mu) <= C2 eps^2 (1 - t/t_f)_+^(1/(mu-1))``."""
    m = mu(sigma, N)
    return min(nu / 2.0, alpha) / (c_gns**2 / 2.0) ** (1.0 / m), 1.0 / (2.0 * nu)


def epsilon_zero(sigma, N, nu, alpha, c_gns, kbar) -> float:
    """Largest forcing amplitude for which the comparison hypothesis holds at ``kbar``."""
    if not 0 < kbar < 1:
        raise TheoryDomainError(f"kbar must lie in (0, 1), got {kbar}")
    if not 1 <= sigma < 2:
        raise TheoryDomainError(f"epsilon_0 requires 1 <= sigma < 2, got {sigma}")
    m = mu(sigma, N)
    c1, c2 = forced_extinction_constants(sigma, N, nu, alpha, c_gns)
    return math.sqrt(c1 / c2 * (1.0 - kbar) * (kbar * (m - 1.0) / m) ** (1.0 / (m - 1.0)))


def optimal_kbar(sigma, N, nu, alpha, c_gns, tol: float = 1e-10) -> float:
    """Interior maximizer of ``epsilon_zero`` over ``kbar``, by golden-section search."""
    res = optimize.minimize_scalar(
        lambda k: -epsilon_zero(sigma, N, nu, alpha, c_gns, k) if 0 < k < 1 else 0.0,
        bracket=(1e-6, 0.5, 1 - 1e-6),
        method="golden",
        tol=tol,
    )
    return float(res.x)


def theta_k(s, k, mu_):
    """``int_0^s dt / (k phi(t))`` with ``phi(s) = s^(1/mu)``, as used by the comparison lemma."""
    return mu_ / (k * (mu_ - 1.0)) * np.asarray(s, dtype=float) ** ((mu_ - 1.0) / mu_)


def eta_k(s, k, mu_):
    """Inverse of :func:`theta_k`."""
    return (k * (mu_ - 1.0) / mu_ * np.asarray(s, dtype=float)) ** (mu_ / (mu_ - 1.0))


# -- bounded forcing ----------------------------------------------------------


def _forced_c1c2(sigma, N, nu, alpha, c_const, C_f):
    g = gamma(sigma, N)
    return (2.0 / c_const) ** g * min(nu / 2.0, alpha), C_f / (2.0 * nu)


def e_star(sigma, N, nu, alpha, c_const, C_f) -> tuple[float, float]:
    """Equilibrium ``(E*, 2E*)`` of ``E' = C2 - C1 E^gamma``.

    ``c_const`` is ``c_gns**2`` for ``sigma < 2`` and ``C_S`` for ``sigma >= 2``.
    """
    if not C_f > 0:
        raise TheoryDomainError("C_f must be positive")
    g = gamma(sigma, N)
    c1, c2 = _forced_c1c2(sigma, N, nu, alpha, c_const, C_f)
    es = (c2 / c1) ** (1.0 / g)
    return es, 2.0 * es


def forced_decay_rate(sigma, N, nu, alpha, c_const, C_f, E0=None) -> float:
    """Rate ``C`` of ``E(t) - E* <= (E(t0) - E*) exp(-C (t - t0))``.

    For ``sigma > 2`` this is the tangent slope at ``E*``; for ``sigma < 2``
    the chord slope between ``E*`` and ``E0 = E(t0)``, which must exceed ``E*``.
    """
    g = gamma(sigma, N)
    c1, c2 = _forced_c1c2(sigma, N, nu, alpha, c_const, C_f)
    if sigma == 2:
        return c1
    if sigma > 2:
        return g * c1 ** (1.0 / g) * c2 ** ((g - 1.0) / g)
    if E0 is None:
        raise TheoryDomainError("sigma < 2 needs the starting energy E0")
    es = (c2 / c1) ** (1.0 / g)
    if not E0 > es:
        raise TheoryDomainError(f"E0={E0:.6g} must exceed E*={es:.6g}")
    return c1 * (E0**g - es**g) / (E0 - es)


# -- envelopes ----------------------------------------------------------------


@dataclass(frozen=True)
class Extinction:
    E0: float
    mu: float
    C: float
    t0: float = 0.0
    kind: str = "extinction"


@dataclass(frozen=True)
class Exponential:
    E0: float
    rate: float
    t0: float = 0.0
    kind: str = "exponential"


@dataclass(frozen=True)
class Power:
    """``(E0^(-1/exponent) + C t / exponent)^(-exponent)``, ``exponent = (sigma+2)/(sigma-2)``."""

    E0: float
    C: float
    exponent: float
    t0: float = 0.0
    kind: str = "power"


@dataclass(frozen=True)
class ForcedEquilibrium:
    E_star: float
    rate: float
    E_t0: float
    t0: float = 0.0
    kind: str = "forced_equilibrium"


EnvelopeSpec = Union[Extinction, Exponential, Power, ForcedEquilibrium]


def envelope_value(spec: EnvelopeSpec, t):
    """Upper bound on ``E(t)`` for ``t >= spec.t0``; vectorized over ``t``."""
    s = np.asarray(t, dtype=float) - spec.t0
    if np.any(s < 0):
        raise ValueError("envelope evaluated before its start time")
    if isinstance(spec, Extinction):
        a = (spec.mu - 1.0) / spec.mu
        out = np.maximum(spec.E0**a - spec.C * s, 0.0) ** (1.0 / a)
    elif isinstance(spec, Exponential):
        out = spec.E0 * np.exp(-spec.rate * s)
    elif isinstance(spec, Power):
        n = spec.exponent
        out = (spec.E0 ** (-1.0 / n) + spec.C * s / n) ** (-n)
    elif isinstance(spec, ForcedEquilibrium):
        out = (spec.E_t0 - spec.E_star) * np.exp(-spec.rate * s) + spec.E_star
    else:
        raise TypeError(f"unknown envelope {spec!r}")
    return float(out) if np.ndim(out) == 0 else out


# -- comparison lemma ---------------------------------------------------------


@dataclass
class ComparisonReport:
    hypothesis_holds: bool
    max_ratio: float
    extinct_after_tf: Optional[bool]
    samples_after_tf: int
    max_energy_after_tf: Optional[float]


def comparison_lemma_check(
    series,
    t_f: float,
    epsilon: float,
    mu: float,
    kbar: float,
    C1: float,
    C2: float,
    tol_rel: float = 1e-10,
    n_grid: int = 1001,
    rtol: float = 1e-10,
) -> ComparisonReport:
    """Check ``F(s) <= (1-kbar) phi(eta_kbar(s))`` on ``(0, t_f)`` and extinction after ``t_f``.

    ``phi(s) = C1 s^(1/mu)``, ``F(s) = C2 eps^2 s^(1/(mu-1))``.
    """
    s = np.linspace(0.0, t_f, n_grid + 2)[1:-1]
    F = C2 * epsilon**2 * s ** (1.0 / (mu - 1.0))
    rhs = (1.0 - kbar) * C1 * eta_k(s, kbar, mu) ** (1.0 / mu)
    ratio = F / rhs
    max_ratio = float(np.max(ratio))
    extinct = None
    count = 0
    emax = None
    if series is not None and len(series):
        t = np.asarray(series.t)
        e = np.asarray(series.energy)
        after = t >= t_f - 1e-12
        count = int(np.sum(after))
        if count:
            emax = float(np.max(e[after]))
            extinct = bool(np.all(e[after] < tol_rel * e[0]) or np.all(e[after] == 0))
    return ComparisonReport(max_ratio <= 1.0 + rtol, max_ratio, extinct, count, emax)


# -- aggregate report ---------------------------------------------------------


@dataclass
class TheoryReport:
    sigma: float
    N: int
    nu: float
    alpha: float
    E0: float
    gamma: float
    theta: Optional[float] = None
    mu: Optional[float] = None
    c_gns: Optional[float] = None
    c_gns_provenance: Optional[str] = None
    c_s: Optional[float] = None
    c_s_provenance: Optional[str] = None
    t_star: Optional[float] = None
    kbar: Optional[float] = None
    epsilon_0: Optional[float] = None
    e_star: Optional[float] = None
    script_e_star: Optional[float] = None
    envelope: Optional[EnvelopeSpec] = None
    decay_rate_constants: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["t_star"] is not None and math.isinf(d["t_star"]):
            d["t_star"] = "inf"
        return d


def build_theory_report(
    sigma: float,
    nu: float,
    alpha: float,
    E0: float,
    N: int = 2,
    c_gns: Optional[float] = None,
    c_gns_provenance: Optional[str] = None,
    c_s: Optional[float] = None,
    c_s_provenance: Optional[str] = None,
    domain_length: float = 2 * np.pi,
    C_f: Optional[float] = None,
    vanishing_forcing: bool = False,
    kbar: Optional[float] = None,
) -> TheoryReport:
    """Every applicable closed-form quantity for one parameter set.

    Constants not supplied default to the interpolation-lemma value
    (``sigma <= 2``) and the Hoelder-Poincare torus constant (``sigma >= 2``).
    """
    rep = TheoryReport(sigma=sigma, N=N, nu=nu, alpha=alpha, E0=E0, gamma=gamma(sigma, N))
    if sigma <= 2:
        params = GnsParams(N, 2, 2, sigma)
        rep.theta = theta_sigma(sigma, N)
        rep.mu = mu(sigma, N)
        if c_gns is None:
            c_gns, c_gns_provenance = gns_constant(params), "lemma1"
            if gns_case(params) == 3:
                rep.notes.append("c_gns from case 3 of the interpolation lemma, evaluated as printed")
        rep.c_gns = c_gns
        rep.c_gns_provenance = c_gns_provenance or "user-supplied"
    if sigma >= 2:
        if c_s is None:
            c_s, c_s_provenance = holder_poincare_constant(sigma, domain_length), "holder-poincare"
        rep.c_s = c_s
        rep.c_s_provenance = c_s_provenance or "user-supplied"

    consts = rep.decay_rate_constants
    m = min(nu, alpha)
    if sigma < 2:
        C = extinction_decay_constant(sigma, N, nu, alpha, rep.c_gns)
        consts["extinction"] = C
        rep.t_star = extinction_time_bound(E0, sigma, N, nu, alpha, rep.c_gns)
        if C_f is None:
            rep.envelope = Extinction(E0, rep.mu, C)
        if alpha > 0:
            c1, c2 = forced_extinction_constants(sigma, N, nu, alpha, rep.c_gns)
            consts["forced_extinction_C1"] = c1
            consts["forced_extinction_C2"] = c2
            rep.kbar = kbar if kbar is not None else optimal_kbar(sigma, N, nu, alpha, rep.c_gns)
            rep.epsilon_0 = epsilon_zero(sigma, N, nu, alpha, rep.c_gns, rep.kbar)
    elif sigma == 2:
        consts["exponential"] = 2.0 * m / rep.c_gns**2
        if C_f is None:
            rep.envelope = Exponential(E0, consts["exponential"])
    else:
        consts["power"] = (2.0 / rep.c_s) ** (2.0 * sigma / (sigma + 2.0)) * m
        if C_f is None:
            rep.envelope = Power(E0, consts["power"], (sigma + 2.0) / (sigma - 2.0))

    if C_f is not None:
        c_const = rep.c_gns**2 if sigma < 2 else rep.c_s
        rep.e_star, rep.script_e_star = e_star(sigma, N, nu, alpha, c_const, C_f)
        c1, c2 = _forced_c1c2(sigma, N, nu, alpha, c_const, C_f)
        consts["forced_C1"] = c1
        consts["forced_C2"] = c2
        if sigma >= 2 or E0 > rep.e_star:
            rate = forced_decay_rate(sigma, N, nu, alpha, c_const, C_f, E0)
            consts["forced_equilibrium"] = rate
            if E0 > rep.e_star:
                rep.envelope = ForcedEquilibrium(rep.e_star, rate, E0)
    if vanishing_forcing:
        rep.envelope = None
    return rep
