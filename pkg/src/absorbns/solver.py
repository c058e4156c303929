"""Pseudo-spectral solver for 2D Navier-Stokes with velocity absorption.

The momentum equation is

    du/dt + (u.grad)u = f - grad p + nu lap(u) - alpha |u|^(sigma-2) u,   div u = 0

on the periodic torus.  One step is a Strang composition: half an exact
pointwise absorption flow, a full integrating-factor RK4 step for advection,
forcing and viscosity, then the second absorption half.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np
import scipy.fft as sfft

from .series import EnergySeries
from .spectral import (
    SpectralField,
    TorusGrid,
    gradient_norm_sq,
    l2_norm_sq,
    project_coeffs,
)

log = logging.getLogger(__name__)

__all__ = [
    "TaylorGreen",
    "RandomDivFree",
    "Modes",
    "InitialCondition",
    "ZeroForcing",
    "VanishingPower",
    "BoundedConstant",
    "CustomForcing",
    "ForcingSpec",
    "SimConfig",
    "SolverState",
    "SolverDivergenceError",
    "CFLViolation",
    "CFLWarning",
    "absorption_magnitude",
    "absorption_substep",
    "advect_diffuse_step",
    "step",
    "run",
    "realize_initial_condition",
    "realize_forcing",
]


class SolverDivergenceError(FloatingPointError):
    def __init__(self, step_index: int, t: float):
        super().__init__(f"non-finite velocity at step {step_index} (t={t:.6g})")
        self.step_index = step_index
        self.t = t


class CFLWarning(RuntimeWarning):
    pass


class CFLViolation(RuntimeError):
    pass


# -- initial conditions -------------------------------------------------------


@dataclass(frozen=True)
class TaylorGreen:
    """``u = A (sin x cos y, -cos x sin y)`` in units of the scaled coordinates."""

    amplitude: float = 1.0


@dataclass(frozen=True)
class RandomDivFree:
    """Random-phase field with ``|c(k)| ~ |k|^spectrum_exponent`` for ``0 < |k| <= kmax``.

    ``energy`` is the kinetic energy of the realized field.  ``seed=None``
    defers to the configuration seed.
    """

    energy: float = 1.0
    spectrum_exponent: float = -1.0
    seed: Optional[int] = None
    kmax: Optional[float] = None


@dataclass(frozen=True)
class Modes:
    """Explicit coefficients ``((kx, ky), (c1, c2))``; conjugate partners are filled in."""

    coefficients: tuple = ()


InitialCondition = Union[TaylorGreen, RandomDivFree, Modes]


# -- forcing ------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroForcing:
    pass


@dataclass(frozen=True)
class VanishingPower:
    """``||f(t)||_2 = epsilon (1 - t/t_f)_+^(1/(2(mu-1)))`` along a fixed unit-norm shape."""

    t_f: float
    epsilon: float
    mu: float
    shape: InitialCondition = TaylorGreen()

    def __post_init__(self):
        if not (self.t_f > 0 and self.epsilon >= 0 and self.mu > 1):
            raise ValueError("VanishingPower needs t_f > 0, epsilon >= 0, mu > 1")

    def amplitude(self, t: float) -> float:
        if t >= self.t_f:
            return 0.0
        return self.epsilon * (1.0 - t / self.t_f) ** (1.0 / (2.0 * (self.mu - 1.0)))


@dataclass(frozen=True)
class BoundedConstant:
    """Steady forcing with ``int |f|^2 dx = C_f``."""

    C_f: float
    shape: InitialCondition = TaylorGreen()

    def __post_init__(self):
        if not self.C_f > 0:
            raise ValueError("BoundedConstant needs C_f > 0")

    def amplitude(self, t: float) -> float:
        return math.sqrt(self.C_f)


@dataclass(frozen=True)
class CustomForcing:
    """Arbitrary ``t -> SpectralField``; projected before use."""

    func: Callable[[float], SpectralField]


ForcingSpec = Union[ZeroForcing, VanishingPower, BoundedConstant, CustomForcing]


# -- configuration and state --------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    nu: float
    alpha: float
    sigma: float
    grid: TorusGrid
    dt: float
    t_end: float
    sample_interval: Optional[float] = None
    dealias: bool = True
    initial_condition: InitialCondition = TaylorGreen()
    forcing: ForcingSpec = ZeroForcing()
    extinction_tol: float = 1e-12
    extinction_grace: Optional[float] = None
    stop_on_extinction: bool = True
    splitting: str = "compensated"
    cfl_action: str = "warn"
    seed: int = 0

    def __post_init__(self):
        if self.sample_interval is None:
            object.__setattr__(self, "sample_interval", self.dt)
        checks = [
            (self.nu > 0, "nu > 0 required"),
            (self.alpha >= 0, "alpha >= 0 required"),
            (self.sigma > 1, "σ > 1 required"),
            (self.dt > 0, "dt > 0 required"),
            (self.t_end >= 0, "t_end >= 0 required"),
            (self.t_end == 0 or self.dt <= self.t_end, "dt <= t_end required"),
            (self.sample_interval >= self.dt * (1 - 1e-12), "sample_interval >= dt required"),
            (self.extinction_tol > 0, "extinction_tol > 0 required"),
            (self.splitting in ("compensated", "projected"), "splitting must be 'compensated' or 'projected'"),
            (self.cfl_action in ("warn", "error"), "cfl_action must be 'warn' or 'error'"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def sample_stride(self) -> int:
        return max(1, int(round(self.sample_interval / self.dt)))

    @property
    def grace(self) -> float:
        if self.extinction_grace is not None:
            return self.extinction_grace
        return 10.0 * self.sample_interval

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SolverState:
    t: float
    field: SpectralField
    step_count: int = 0


# -- realization helpers ------------------------------------------------------


def _project_zero_mean(coeffs: np.ndarray, grid: TorusGrid) -> np.ndarray:
    out = project_coeffs(coeffs, grid)
    out[:, 0, 0] = 0.0
    return out


def _hermitian_fill(coeffs: np.ndarray) -> np.ndarray:
    flipped = np.roll(coeffs[:, ::-1, ::-1], 1, axis=(1, 2))
    return 0.5 * (coeffs + np.conj(flipped))


def realize_initial_condition(ic: InitialCondition, grid: TorusGrid, seed: int = 0) -> SpectralField:
    """Divergence-free, zero-mean, Hermitian field for ``ic``."""
    if isinstance(ic, TaylorGreen):
        x, y = grid.coords
        s = 2 * np.pi / grid.length
        phys = ic.amplitude * np.stack([np.sin(s * x) * np.cos(s * y), -np.cos(s * x) * np.sin(s * y)])
        coeffs = np.fft.fft2(phys, axes=(1, 2)) / grid.n**2
    elif isinstance(ic, RandomDivFree):
        rng = np.random.default_rng(seed if ic.seed is None else ic.seed)
        noise = np.fft.fft2(rng.standard_normal((2, grid.n, grid.n)), axes=(1, 2))
        kmag = np.sqrt(grid.k2) * grid.length / (2 * np.pi)
        kmax = grid.n / 3.0 if ic.kmax is None else ic.kmax
        band = (kmag > 0) & (kmag <= kmax)
        amp = np.zeros_like(kmag)
        amp[band] = kmag[band] ** ic.spectrum_exponent
        with np.errstate(invalid="ignore", divide="ignore"):
            phase = np.where(np.abs(noise) > 0, noise / np.abs(noise), 0.0)
        coeffs = amp * phase
        coeffs[:, grid.n // 2, :] = 0.0
        coeffs[:, :, grid.n // 2] = 0.0
        coeffs = _project_zero_mean(coeffs, grid)
        e = 0.5 * grid.area * np.sum(np.abs(coeffs) ** 2)
        if e > 0:
            coeffs *= math.sqrt(ic.energy / e)
    elif isinstance(ic, Modes):
        coeffs = grid.zero_coeffs()
        listed = {}
        for (kx, ky), (c1, c2) in ic.coefficients:
            listed[(int(round(kx)) % grid.n, int(round(ky)) % grid.n)] = (complex(c1), complex(c2))
        for (i, j), (c1, c2) in listed.items():
            coeffs[:, i, j] = (c1, c2)
            partner = (-i % grid.n, -j % grid.n)
            if partner not in listed:
                coeffs[:, partner[0], partner[1]] = (np.conj(c1), np.conj(c2))
        coeffs = _hermitian_fill(coeffs)
    else:
        raise TypeError(f"unknown initial condition {ic!r}")
    return SpectralField(grid, _project_zero_mean(coeffs, grid))


def _unit_shape(shape: InitialCondition, grid: TorusGrid, seed: int) -> np.ndarray:
    coeffs = realize_initial_condition(shape, grid, seed).coeffs
    norm = math.sqrt(grid.area * np.sum(np.abs(coeffs) ** 2))
    if norm == 0:
        raise ValueError("forcing shape has zero norm")
    return coeffs / norm


class _ForcingEvaluator:
    """Caches the unit-norm shape so RK stages only rescale it.

    With a workspace the output is in its half-spectrum layout.
    """

    def __init__(self, spec: ForcingSpec, grid: TorusGrid, ws=None, seed: int = 0):
        self.spec = spec
        self.grid = grid
        self.cols = grid.n // 2 + 1 if ws is not None else grid.n
        self.shape = None
        if isinstance(spec, (VanishingPower, BoundedConstant)):
            self.shape = _unit_shape(spec.shape, grid, seed)[..., : self.cols].copy()

    def __call__(self, t: float) -> Optional[np.ndarray]:
        spec = self.spec
        if isinstance(spec, ZeroForcing):
            return None
        if isinstance(spec, CustomForcing):
            return _project_zero_mean(spec.func(t).coeffs, self.grid)[..., : self.cols]
        a = spec.amplitude(t)
        if a == 0.0:
            return None
        return a * self.shape


def realize_forcing(spec: ForcingSpec, t: float, grid: TorusGrid, seed: int = 0) -> SpectralField:
    """Forcing field at time ``t``: projected, zero-mean."""
    coeffs = _ForcingEvaluator(spec, grid, seed=seed)(t)
    if coeffs is None:
        return SpectralField.zeros(grid)
    return SpectralField(grid, coeffs)


# -- absorption ---------------------------------------------------------------


def absorption_magnitude(m0, alpha: float, sigma: float, tau: float):
    """Exact solution of ``dm/dt = -alpha m^(sigma-1)`` from ``m0 >= 0`` after ``tau``."""
    m0 = np.asarray(m0, dtype=float)
    if alpha == 0 or tau == 0:
        return m0.copy()
    if sigma == 2:
        return m0 * math.exp(-alpha * tau)
    a = 2.0 - sigma
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if a > 0:
            base = np.maximum(m0**a - alpha * a * tau, 0.0)
            out = base ** (1.0 / a)
        else:
            # m0 = 0 gives inf**(-1) -> 0.
            out = (m0**a - alpha * a * tau) ** (1.0 / a)
    return np.where(m0 > 0, out, 0.0)


def absorption_substep(u, alpha: float, sigma: float, tau: float) -> np.ndarray:
    """Pointwise exact flow of ``du/dt = -alpha |u|^(sigma-2) u`` over ``tau``.

    ``u`` has the vector components on the leading axis.  Directions are kept;
    for ``sigma < 2`` points reach exactly zero in finite time.
    """
    if tau < 0 or alpha < 0 or not sigma > 1:
        raise ValueError("absorption substep needs tau >= 0, alpha >= 0, sigma > 1")
    u = np.asarray(u, dtype=float)
    m0 = np.sqrt(np.sum(u * u, axis=0))
    m = absorption_magnitude(m0, alpha, sigma, tau)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(m0 > 0, m / np.where(m0 > 0, m0, 1.0), 0.0)
    return u * ratio


# -- advection / diffusion ----------------------------------------------------


class _Workspace:
    """Half-spectrum (real FFT) operators shared by the stepping kernels.

    Arrays have shape ``(2, n, n // 2 + 1)``; coefficients are normalized as in
    :class:`SpectralField`.
    """

    def __init__(self, grid: TorusGrid, nu: float, dt: float, dealias: bool):
        n = grid.n
        self.grid = grid
        self.shape = (n, n)
        s = 2 * np.pi / grid.length
        kx = np.fft.fftfreq(n, 1.0 / n)[:, None] * s
        ky = np.fft.rfftfreq(n, 1.0 / n)[None, :] * s
        kx, ky = np.broadcast_arrays(kx, ky)
        self.kxd = kx.copy()
        self.kxd[n // 2, :] = 0.0
        self.kyd = ky.copy()
        self.kyd[:, n // 2] = 0.0
        k2 = kx**2 + ky**2
        inv = np.zeros_like(k2)
        np.divide(1.0, k2, out=inv, where=k2 > 0)
        self.pxx = 1.0 - kx * kx * inv
        self.pxy = -kx * ky * inv
        self.pyy = 1.0 - ky * ky * inv
        for p in (self.pxx, self.pxy, self.pyy):
            p[0, 0] = 0.0
            p[n // 2, :] = 0.0
            p[:, n // 2] = 0.0
        if dealias:
            mx = np.abs(np.fft.fftfreq(n, 1.0 / n))[:, None] < n / 3.0
            my = np.fft.rfftfreq(n, 1.0 / n)[None, :] < n / 3.0
            self.mask = mx & my
        else:
            self.mask = None
        self.dt = dt
        self.ef = np.exp(-nu * k2 * dt)
        self.ef_half = np.exp(-nu * k2 * dt / 2)

    def to_phys(self, c):
        return sfft.irfft2(c, s=self.shape, norm="forward")

    def to_spec(self, u):
        return sfft.rfft2(u, norm="forward")

    def project(self, c):
        """Projection onto divergence-free, zero-mean fields."""
        return np.stack([self.pxx * c[0] + self.pxy * c[1], self.pxy * c[0] + self.pyy * c[1]])

    def half(self, field: SpectralField):
        return field.coeffs[..., : self.grid.n // 2 + 1].copy()

    def full(self, c) -> SpectralField:
        """Full spectrum by Hermitian symmetry; exact, no transform round trip."""
        n = self.grid.n
        m = n // 2 + 1
        out = np.empty(c.shape[:-1] + (n,), dtype=complex)
        out[..., :m] = c
        mirror = np.conj(np.roll(c[:, ::-1, 1 : n - m + 1], 1, axis=1))
        out[..., m:] = mirror[..., ::-1]
        return SpectralField(self.grid, out)


def _rhs(ws: _Workspace, c, forcing, absorption):
    """Projected advection + forcing (+ gradient part of the absorption)."""
    u = ws.to_phys(c)
    omega = ws.to_phys(1j * (ws.kxd * c[1] - ws.kyd * c[0]))
    nl = ws.to_spec(np.stack([omega * u[1], -omega * u[0]]))
    if ws.mask is not None:
        nl *= ws.mask
    out = ws.project(nl)
    if forcing is not None:
        out += forcing
    if absorption is not None:
        alpha, sigma = absorption
        if sigma != 2:
            mag = np.sqrt(u[0] ** 2 + u[1] ** 2)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = np.where(mag > 0, mag ** (sigma - 2.0), 0.0)
            gh = ws.to_spec(u * w)
            out += alpha * (gh - ws.project(gh))
        else:
            out += alpha * (c - ws.project(c))
    return out


def _if_rk4(ws: _Workspace, c, t, forcing_at, absorption):
    dt = ws.dt
    e, eh = ws.ef, ws.ef_half
    f0 = forcing_at(t)
    fh = forcing_at(t + dt / 2)
    f1 = forcing_at(t + dt)
    k1 = _rhs(ws, c, f0, absorption)
    k2 = _rhs(ws, eh * (c + 0.5 * dt * k1), fh, absorption)
    k3 = _rhs(ws, eh * c + 0.5 * dt * k2, fh, absorption)
    k4 = _rhs(ws, e * c + dt * eh * k3, f1, absorption)
    return e * c + (dt / 6.0) * (e * k1 + 2.0 * eh * (k2 + k3) + k4)


def _check_cfl(u_phys, dt, dx, action):
    umax = float(np.sqrt(np.max(u_phys[0] ** 2 + u_phys[1] ** 2)))
    cfl = umax * dt / dx
    if cfl > 1:
        msg = f"CFL number {cfl:.3g} exceeds 1"
        if action == "error":
            raise CFLViolation(msg)
        warnings.warn(msg, CFLWarning, stacklevel=3)
    return cfl


def advect_diffuse_step(
    state: SolverState,
    nu: float,
    dt: float,
    forcing: Optional[ForcingSpec] = None,
    dealias: bool = True,
    cfl_action: str = "warn",
) -> SolverState:
    """One IF-RK4 step of projected advection and forcing, with exact viscous decay."""
    grid = state.field.grid
    ws = _Workspace(grid, nu, dt, dealias)
    forcing_at = _ForcingEvaluator(forcing or ZeroForcing(), grid, ws)
    c = ws.half(state.field)
    _check_cfl(ws.to_phys(c), dt, grid.dx, cfl_action)
    new = ws.project(_if_rk4(ws, c, state.t, forcing_at, None))
    return SolverState(state.t + dt, ws.full(new), state.step_count + 1)


class _Stepper:
    """Strang step on half-spectrum arrays."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.ws = _Workspace(config.grid, config.nu, config.dt, config.dealias)
        self.forcing = _ForcingEvaluator(config.forcing, config.grid, self.ws, config.seed)
        self.compensated = config.splitting == "compensated"

    def absorb(self, u_phys, tau, project):
        c = self.config
        out = self.ws.to_spec(absorption_substep(u_phys, c.alpha, c.sigma, tau))
        return self.ws.project(out) if project else out

    def __call__(self, c, t):
        cfg = self.config
        ws = self.ws
        dt = cfg.dt
        u = ws.to_phys(c)
        _check_cfl(u, dt, cfg.grid.dx, cfg.cfl_action)
        if cfg.alpha == 0:
            return ws.project(_if_rk4(ws, c, t, self.forcing, None))
        half = self.absorb(u, dt / 2, project=not self.compensated)
        absorption = (cfg.alpha, cfg.sigma) if self.compensated else None
        mid = _if_rk4(ws, half, t, self.forcing, absorption)
        if not self.compensated:
            mid = ws.project(mid)
        return self.absorb(ws.to_phys(mid), dt / 2, project=True)


def step(state: SolverState, config: SimConfig) -> SolverState:
    """One Strang step: half absorption, advection-diffusion, half absorption."""
    stepper = _Stepper(config)
    ws = stepper.ws
    new = stepper(ws.half(state.field), state.t)
    return SolverState(state.t + config.dt, ws.full(new), state.step_count + 1)


def sample_diagnostics(field: SpectralField, t: float, sigma: float, forcing=None) -> tuple:
    """``(energy, enstrophy, int |u|^sigma, int f.u)`` for one sample."""
    grid = field.grid
    u = sfft.ifft2(field.coeffs, norm="forward").real
    mag = np.sqrt(u[0] ** 2 + u[1] ** 2)
    lsig = float(np.mean(mag**sigma) * grid.area)
    fc = forcing(t) if forcing is not None else None
    power = 0.0 if fc is None else float(grid.area * np.sum((np.conj(fc) * field.coeffs).real))
    return 0.5 * l2_norm_sq(field), gradient_norm_sq(field), lsig, power


def _forcing_off_after(forcing, t: float) -> bool:
    """True when the forcing vanishes identically from ``t`` on."""
    if isinstance(forcing, ZeroForcing):
        return True
    if isinstance(forcing, VanishingPower):
        return t >= forcing.t_f
    return False


def run(
    config: SimConfig,
    observer: Optional[Callable[[SolverState], None]] = None,
    initial: Optional[SpectralField] = None,
) -> tuple[EnergySeries, SolverState]:
    """Integrate to ``t_end`` or confirmed extinction; sample every ``sample_interval``.

    ``observer`` is called with the state at every sample.  ``initial``
    overrides the configured initial condition.
    """
    stepper = _Stepper(config)
    ws = stepper.ws
    diag_forcing = _ForcingEvaluator(config.forcing, config.grid, seed=config.seed)
    u0 = initial if initial is not None else realize_initial_condition(
        config.initial_condition, config.grid, config.seed
    )
    series = EnergySeries()
    stride = config.sample_stride
    n_steps = config.n_steps

    def record(state):
        series.append(state.t, *sample_diagnostics(state.field, state.t, config.sigma, diag_forcing))
        if observer is not None:
            observer(state)

    state = SolverState(0.0, u0, 0)
    record(state)
    e0 = series.energy[0]
    c = ws.half(u0)
    below_since = None
    for n in range(1, n_steps + 1):
        c = stepper(c, (n - 1) * config.dt)
        if n % stride and n != n_steps:
            continue
        if not np.all(np.isfinite(c)):
            raise SolverDivergenceError(n, n * config.dt)
        state = SolverState(n * config.dt, ws.full(c), n)
        record(state)
        e = series.energy[-1]
        if e < config.extinction_tol * e0 or e == 0.0:
            if below_since is None:
                below_since = state.t
            elif (
                config.stop_on_extinction
                and _forcing_off_after(config.forcing, below_since)
                and state.t - below_since >= config.grace - 1e-9 * config.dt
            ):
                log.info("extinction confirmed at t=%.6g (stopped at t=%.6g)", below_since, state.t)
                break
        else:
            below_since = None
    return series, state
