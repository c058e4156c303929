import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from absorbns.spectral import (
    SpectralField,
    SymmetryError,
    TorusGrid,
    energy,
    gradient_norm_sq,
    l2_norm_sq,
    leray_project,
    lsigma_pow,
    transform_to_physical,
    transform_to_spectral,
)
from conftest import random_hermitian


@pytest.mark.parametrize("n", [7, 6, 0, -8])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        TorusGrid(n)


def test_cosine_has_half_coefficients(grid32):
    x, y = grid32.coords
    f = transform_to_spectral(np.stack([np.cos(x), np.zeros_like(x)]), grid32)
    assert f.coeffs[0, 1, 0] == pytest.approx(0.5, abs=1e-14)
    assert f.coeffs[0, -1, 0] == pytest.approx(0.5, abs=1e-14)
    others = np.abs(f.coeffs).sum() - 1.0
    assert others < 1e-13


def test_round_trip(grid32):
    rng = np.random.default_rng(1)
    phys = rng.standard_normal((2, 32, 32))
    back = transform_to_physical(transform_to_spectral(phys, grid32))
    np.testing.assert_allclose(back, phys, atol=1e-12)


def test_non_hermitian_rejected(grid32):
    c = grid32.zero_coeffs()
    c[0, 1, 2] = 1.0
    with pytest.raises(SymmetryError):
        transform_to_physical(SpectralField(grid32, c))


def test_projection_removes_gradient_part(grid32):
    # A pure gradient projects to zero; a solenoidal field is unchanged.
    x, y = grid32.coords
    grad = np.stack([np.cos(x) * np.sin(2 * y), 2 * np.sin(x) * np.cos(2 * y)])
    p = leray_project(transform_to_spectral(grad, grid32))
    assert np.max(np.abs(p.coeffs)) < 1e-14
    tg = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
    f = transform_to_spectral(tg, grid32)
    np.testing.assert_allclose(leray_project(f).coeffs, f.coeffs, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projection_idempotent_and_solenoidal(seed):
    grid = TorusGrid(16)
    f = SpectralField(grid, random_hermitian(grid, np.random.default_rng(seed)))
    p = leray_project(f)
    np.testing.assert_allclose(leray_project(p).coeffs, p.coeffs, atol=1e-14)
    assert p.divergence_max() < 1e-12
    # Orthogonal projection never increases the norm.
    assert l2_norm_sq(p) <= l2_norm_sq(f) * (1 + 1e-14)


def test_taylor_green_norms(grid32):
    x, y = grid32.coords
    tg = transform_to_spectral(np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)]), grid32)
    assert energy(tg) == pytest.approx(math.pi**2, rel=1e-14)
    # Each component is an eigenfunction with |k|^2 = 2.
    assert gradient_norm_sq(tg) == pytest.approx(4 * math.pi**2, rel=1e-14)


@pytest.mark.parametrize("sigma", [1.2, 1.5, 3.0, 4.0])
def test_lsigma_against_quadrature(sigma):
    one_d, _ = integrate.quad(lambda s: abs(math.cos(s)) ** sigma, 0, 2 * math.pi, limit=200)
    exact = 2 * math.pi * one_d
    errs = []
    for n in (64, 128, 256):
        grid = TorusGrid(n)
        x, _ = grid.coords
        f = transform_to_spectral(np.stack([np.cos(x), np.zeros_like(x)]), grid)
        errs.append(abs(lsigma_pow(f, sigma) / exact - 1))
    # |cos|^sigma has a kink of order sigma at its zeros, so the grid sum
    # converges like n^-(sigma+1); exactly for even integer sigma.
    assert errs[-1] < 1e-4
    if errs[0] > 1e-13:
        assert errs[1] < errs[0] / 2 ** sigma and errs[2] < errs[1] / 2 ** sigma


def test_lsigma_rejects_sigma_le_one(grid32, random_field):
    with pytest.raises(ValueError):
        lsigma_pow(random_field(), 1.0)


def test_parseval(grid32):
    rng = np.random.default_rng(3)
    phys = rng.standard_normal((2, 32, 32))
    f = transform_to_spectral(phys, grid32)
    direct = np.sum(phys**2) * grid32.dx**2
    assert l2_norm_sq(f) == pytest.approx(direct, rel=1e-12)
