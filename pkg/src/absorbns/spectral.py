"""Fourier representation of 2D velocity fields on a periodic torus.

Coefficients are normalized Fourier-series coefficients, so a physical field
``u(x) = sum_k c_k exp(i k.x)`` is stored as ``c_k``.  Arrays are laid out as
``[component, ix, iy]`` with ``indexing='ij'``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "SymmetryError",
    "TorusGrid",
    "SpectralField",
    "transform_to_physical",
    "transform_to_spectral",
    "leray_project",
    "gradient_norm_sq",
    "l2_norm_sq",
    "lsigma_norm",
    "lsigma_pow",
    "energy",
]


class SymmetryError(ValueError):
    """Coefficients do not describe a real-valued field."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform ``n x n`` collocation grid on the torus ``[0, L)^2``."""

    n: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"modes per axis must be an even integer >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"domain length must be positive, got {self.length}")

    @property
    def area(self) -> float:
        return self.length**2

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def k1d(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / self.n) * (2 * np.pi / self.length)

    @cached_property
    def kx(self) -> np.ndarray:
        return np.broadcast_to(self.k1d[:, None], (self.n, self.n))

    @cached_property
    def ky(self) -> np.ndarray:
        return np.broadcast_to(self.k1d[None, :], (self.n, self.n))

    @cached_property
    def k2(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def inv_k2(self) -> np.ndarray:
        out = np.zeros_like(self.k2)
        np.divide(1.0, self.k2, out=out, where=self.k2 > 0)
        return out

    @cached_property
    def kx_deriv(self) -> np.ndarray:
        # Nyquist wavenumber dropped for odd derivatives to keep outputs real.
        k = self.k1d.copy()
        k[self.n // 2] = 0.0
        return np.broadcast_to(k[:, None], (self.n, self.n))

    @cached_property
    def ky_deriv(self) -> np.ndarray:
        k = self.k1d.copy()
        k[self.n // 2] = 0.0
        return np.broadcast_to(k[None, :], (self.n, self.n))

    @cached_property
    def dealias(self) -> np.ndarray:
        """2/3-rule mask on integer mode indices."""
        m = np.abs(np.fft.fftfreq(self.n, d=1.0 / self.n))
        keep = m < self.n / 3.0
        return keep[:, None] & keep[None, :]

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n) * self.dx
        return np.meshgrid(x, x, indexing="ij")

    def zero_coeffs(self) -> np.ndarray:
        return np.zeros((2, self.n, self.n), dtype=complex)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real 2-component velocity field."""

    grid: TorusGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = (2, self.grid.n, self.grid.n)
        if self.coeffs.shape != shape:
            raise ValueError(f"coefficient array has shape {self.coeffs.shape}, expected {shape}")

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, grid.zero_coeffs())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scale: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scale)

    __rmul__ = __mul__

    def hermitian_defect(self) -> float:
        """Largest ``|c(k) - conj(c(-k))|`` over all modes and components."""
        flipped = np.roll(self.coeffs[:, ::-1, ::-1], 1, axis=(1, 2))
        return float(np.max(np.abs(self.coeffs - np.conj(flipped)), initial=0.0))

    def divergence_max(self) -> float:
        """Largest ``|k . c(k)|``."""
        g = self.grid
        return float(np.max(np.abs(g.kx * self.coeffs[0] + g.ky * self.coeffs[1])))

    def is_divergence_free(self, rtol: float = 1e-12) -> bool:
        scale = float(np.max(np.abs(self.coeffs), initial=0.0))
        return self.divergence_max() <= rtol * scale

    @property
    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0, 0].real.copy()


def _check_hermitian(f: SpectralField, rtol: float = 1e-10) -> None:
    scale = float(np.max(np.abs(f.coeffs), initial=0.0))
    defect = f.hermitian_defect()
    if defect > rtol * max(scale, 1e-300):
        raise SymmetryError(
            f"coefficients violate Hermitian symmetry (defect {defect:.3e}, scale {scale:.3e})"
        )


def transform_to_physical(field: SpectralField, check: bool = True) -> np.ndarray:
    """Evaluate the field on the collocation grid; returns a real ``(2, n, n)`` array."""
    if check:
        _check_hermitian(field)
    n = field.grid.n
    return np.fft.ifft2(field.coeffs, axes=(1, 2)).real * (n * n)


def transform_to_spectral(
    phys: np.ndarray, grid: TorusGrid, remove_mean: bool = False
) -> SpectralField:
    phys = np.asarray(phys, dtype=float)
    if phys.shape != (2, grid.n, grid.n):
        raise ValueError(f"physical array has shape {phys.shape}, expected {(2, grid.n, grid.n)}")
    coeffs = np.fft.fft2(phys, axes=(1, 2)) / (grid.n * grid.n)
    if remove_mean:
        coeffs[:, 0, 0] = 0.0
    return SpectralField(grid, coeffs)


def project_coeffs(coeffs: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Array-level Leray projection ``c - k (k.c)/|k|^2``; mean mode untouched.

    Nyquist modes are zeroed: ``k`` and ``-k`` share a storage slot there, so
    no Hermitian-consistent divergence-free component exists.
    """
    kdotc = (grid.kx * coeffs[0] + grid.ky * coeffs[1]) * grid.inv_k2
    out = np.empty_like(coeffs)
    out[0] = coeffs[0] - grid.kx * kdotc
    out[1] = coeffs[1] - grid.ky * kdotc
    out[:, grid.n // 2, :] = 0.0
    out[:, :, grid.n // 2] = 0.0
    return out


def leray_project(field: SpectralField) -> SpectralField:
    """Orthogonal projection onto divergence-free fields."""
    return SpectralField(field.grid, project_coeffs(field.coeffs, field.grid))


def l2_norm_sq(field: SpectralField) -> float:
    """``||u||^2`` over the torus, by Parseval."""
    return float(field.grid.area * np.sum(np.abs(field.coeffs) ** 2))


def energy(field: SpectralField) -> float:
    """Kinetic energy ``||u||^2 / 2``."""
    return 0.5 * l2_norm_sq(field)


def gradient_norm_sq(field: SpectralField) -> float:
    """Enstrophy ``||grad u||^2``, by Parseval."""
    g = field.grid
    return float(g.area * np.sum(g.k2 * np.abs(field.coeffs) ** 2))


def _lsigma_integral(phys: np.ndarray, sigma: float, area: float) -> float:
    mag = np.sqrt(phys[0] ** 2 + phys[1] ** 2)
    return float(np.mean(mag**sigma) * area)


def lsigma_pow(field: SpectralField, sigma: float) -> float:
    """``int |u|^sigma dx`` by collocation quadrature."""
    if not sigma > 1:
        raise ValueError(f"sigma > 1 required, got {sigma}")
    return _lsigma_integral(transform_to_physical(field), sigma, field.grid.area)


def lsigma_norm(field: SpectralField, sigma: float) -> float:
    return lsigma_pow(field, sigma) ** (1.0 / sigma)
