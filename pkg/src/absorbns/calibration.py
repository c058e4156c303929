"""Empirical estimates of interpolation constants on the torus.

The sharp constants for the periodic, zero-mean setting are not known in
closed form.  These routines take the largest observed ratio over an ensemble
of random divergence-free fields plus any supplied probe fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .solver import RandomDivFree, realize_initial_condition
from .spectral import SpectralField, TorusGrid, gradient_norm_sq, l2_norm_sq, lsigma_pow
from .theory import theta_sigma

SPECTRUM_EXPONENTS = (-3.0, -2.0, -1.0, 0.0, 1.0)
BANDWIDTHS = (1.5, 2.5, 4.5, 8.5, None)


@dataclass(frozen=True)
class Calibration:
    value: float
    provenance: str
    n_random: int
    n_probes: int
    argmax: str


def gns_ratio(field: SpectralField, sigma: float, N: int = 2) -> float:
    """``||u||_2 / (||grad u||_2^theta ||u||_sigma^(1-theta))``; nan for the zero field."""
    l2sq = l2_norm_sq(field)
    if l2sq == 0:
        return float("nan")
    theta = theta_sigma(sigma, N)
    lsig = lsigma_pow(field, sigma) ** (1.0 / sigma)
    return float(np.sqrt(l2sq) / (gradient_norm_sq(field) ** (theta / 2) * lsig ** (1 - theta)))


def sobolev_ratio(field: SpectralField, sigma: float) -> float:
    """``||u||^2 / (||grad u||^2 + ||u||_s^s)^((s+2)/(2s))``; not scale invariant."""
    l2sq = l2_norm_sq(field)
    if l2sq == 0:
        return float("nan")
    e2s = gradient_norm_sq(field) + lsigma_pow(field, sigma)
    return float(l2sq / e2s ** ((sigma + 2.0) / (2.0 * sigma)))


def random_ensemble(grid: TorusGrid, n_per_family: int, seed: int, energies: Sequence[float] = (1.0,)):
    """Yield ``(label, field)`` over spectral slopes, bandwidths and energies."""
    rng = np.random.default_rng(seed)
    for ex in SPECTRUM_EXPONENTS:
        for km in BANDWIDTHS:
            for e in energies:
                for _ in range(n_per_family):
                    s = int(rng.integers(0, 2**31 - 1))
                    ic = RandomDivFree(energy=e, spectrum_exponent=ex, seed=s, kmax=km)
                    yield f"random(exp={ex},kmax={km},E={e:.3g},seed={s})", realize_initial_condition(ic, grid)


def _calibrate(ratio, grid, n_per_family, seed, probes, energies):
    best, where = -np.inf, ""
    n_rand = 0
    for label, f in random_ensemble(grid, n_per_family, seed, energies):
        r = ratio(f)
        n_rand += 1
        if r > best:
            best, where = r, label
    n_probe = 0
    for i, f in enumerate(probes):
        r = ratio(f)
        if np.isfinite(r):
            n_probe += 1
            if r > best:
                best, where = r, f"probe[{i}]"
    prov = "calibrated(random" + ("+probes)" if n_probe else ")")
    return Calibration(float(best), prov, n_rand, n_probe, where)


def calibrate_gns_constant(
    grid: TorusGrid,
    sigma: float,
    n_per_family: int = 8,
    seed: int = 0,
    probes: Iterable[SpectralField] = (),
    N: int = 2,
) -> Calibration:
    """Largest ``gns_ratio`` seen; the ratio is amplitude invariant so one energy suffices."""
    return _calibrate(lambda f: gns_ratio(f, sigma, N), grid, n_per_family, seed, list(probes), (1.0,))


def calibrate_sobolev_constant(
    grid: TorusGrid,
    sigma: float,
    energies: Sequence[float],
    n_per_family: int = 4,
    seed: int = 0,
    probes: Iterable[SpectralField] = (),
) -> Calibration:
    """Largest ``sobolev_ratio`` over random fields scaled to each of ``energies``."""
    return _calibrate(lambda f: sobolev_ratio(f, sigma), grid, n_per_family, seed, list(probes), tuple(energies))
