"""
Tests for the spectral core: grids, transforms, multipliers, Hilbert and ILW operators
"""

import math

import numpy as np
import pytest

from spectral_core import (
    Field,
    MultiplierSymbol,
    SingularSymbolError,
    TorusGrid,
    apply_multiplier,
    coth,
    coth_minus_sign,
    dealias,
    derivative,
    forward_transform,
    hilbert,
    hilbert_symbol,
    ilw_apply,
    ilw_symbol,
    inner_product,
    inverse_transform,
    make_grid,
    random_band_limited,
    symbol_values,
    zcothz_minus_one,
)


class TestTorusGrid:
    def test_points_and_spacing(self):
        grid = make_grid(8, 4.0)
        assert grid.spacing == 0.5
        np.testing.assert_allclose(grid.points, [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5])

    def test_wavenumbers_fft_order(self):
        grid = make_grid(8, 2.0)
        np.testing.assert_array_equal(grid.mode_numbers, [0, 1, 2, 3, -4, -3, -2, -1])
        np.testing.assert_allclose(grid.wavenumbers, grid.mode_numbers / 2.0)
        np.testing.assert_allclose(grid.sorted_wavenumbers(), np.arange(-4, 4) / 2.0)

    def test_arrays_read_only(self):
        grid = make_grid(16, 1.0)
        with pytest.raises(ValueError):
            grid.points[0] = 1.0

    @pytest.mark.parametrize("n, length, message", [
        (1001, 1.0, "n must be even"),
        (6, 1.0, "at least 8"),
        (8.0, 1.0, "must be an integer"),
        (16, 0.0, "length must be positive"),
        (16, -2.0, "length must be positive"),
    ])
    def test_validation(self, n, length, message):
        with pytest.raises(ValueError, match=message):
            make_grid(n, length)

    def test_grid_equality_by_parameters(self):
        assert TorusGrid(64, 10.0) == make_grid(64, 10)
        assert hash(TorusGrid(64, 10.0)) == hash(make_grid(64, 10.0))

    def test_dealias_mask(self):
        grid = make_grid(96, 1.0)
        kept = grid.mode_numbers[grid.dealias_mask]
        assert np.max(np.abs(kept)) == 32


class TestTransforms:
    @pytest.mark.parametrize("n", [64, 256, 1024])
    def test_round_trip(self, rng, n):
        grid = make_grid(n, 7.0)
        u = rng.standard_normal(n)
        back = inverse_transform(grid, forward_transform(grid, u))
        assert np.linalg.norm(back - u) <= 1e-12 * np.linalg.norm(u)

    def test_parseval(self, rng):
        grid = make_grid(256, 13.0)
        u = Field(grid, rng.standard_normal(grid.n))
        physical = np.sum(u.samples ** 2) * grid.spacing
        spectral = np.sum(np.abs(u.spectrum) ** 2) / grid.length
        assert math.isclose(physical, spectral, rel_tol=1e-10)

    def test_hermitian_symmetry(self, rng):
        grid = make_grid(128, 3.0)
        u = Field(grid, rng.standard_normal(grid.n))
        s = u.spectrum
        k = grid.mode_numbers
        for i in range(1, grid.n // 2):
            j = np.flatnonzero(k == -k[i])[0]
            assert abs(s[j] - np.conj(s[i])) <= 1e-12 * np.max(np.abs(s))

    def test_spectrum_approximates_continuous_transform(self):
        grid = make_grid(256, 40.0)
        u = Field(grid, np.exp(-np.pi * grid.points ** 2))
        # Fourier transform of exp(-pi x^2) is exp(-pi xi^2)
        np.testing.assert_allclose(u.spectrum.real, np.exp(-np.pi * grid.wavenumbers ** 2), atol=1e-12)
        np.testing.assert_allclose(u.spectrum.imag, 0.0, atol=1e-12)

    def test_field_shape_checked(self, grid_64):
        with pytest.raises(ValueError, match="expected 64 samples"):
            Field(grid_64, np.zeros(32))


class TestHilbert:
    @pytest.mark.parametrize("n", [64, 256, 1024])
    def test_sine_to_minus_cosine(self, n):
        grid = make_grid(n, 5.0)
        theta = 2.0 * np.pi * grid.points / grid.length
        out = hilbert(Field(grid, np.sin(3 * theta)))
        expected = -np.cos(3 * theta)
        assert np.linalg.norm(out.samples - expected) <= 1e-10 * np.linalg.norm(expected)

    @pytest.mark.parametrize("n", [64, 256, 1024])
    def test_square_is_minus_identity_off_the_mean(self, rng, n):
        grid = make_grid(n, 2.0)
        f = random_band_limited(grid, rng)
        twice = hilbert(hilbert(f))
        expected = -(f.samples - f.samples.mean())
        assert np.linalg.norm(twice.samples - expected) <= 1e-10 * np.linalg.norm(f.samples)

    @pytest.mark.parametrize("n", [64, 256, 1024])
    def test_skew_adjoint(self, rng, n):
        grid = make_grid(n, 9.0)
        f = random_band_limited(grid, rng)
        g = random_band_limited(grid, rng)
        left = inner_product(hilbert(f), g)
        right = -inner_product(f, hilbert(g))
        scale = f.l2_norm() * g.l2_norm()
        assert abs(left - right) <= 1e-10 * scale

    def test_kills_constants(self, grid_64):
        out = hilbert(Field(grid_64, np.full(64, 3.0)))
        np.testing.assert_allclose(out.samples, 0.0, atol=1e-14)

    @pytest.mark.parametrize("n", [64, 256, 1024])
    def test_output_real(self, rng, n):
        grid = make_grid(n, 9.0)
        f = random_band_limited(grid, rng)
        out = hilbert(f)
        assert out.is_real
        raw = inverse_transform(grid, symbol_values(grid, hilbert_symbol()) * f.spectrum)
        assert np.max(np.abs(raw.imag)) < 1e-12 * f.sup_norm()
        np.testing.assert_allclose(out.samples, raw.real, atol=1e-15)


class TestDerivative:
    def test_exact_on_modes(self):
        grid = make_grid(64, 4.0)
        kappa = 2.0 * np.pi * 3 / grid.length
        u = Field(grid, np.sin(kappa * grid.points))
        np.testing.assert_allclose(derivative(u, 1).samples, kappa * np.cos(kappa * grid.points), atol=1e-11)
        np.testing.assert_allclose(derivative(u, 2).samples, -kappa ** 2 * u.samples, atol=1e-10)

    def test_order_zero_is_identity(self, rng, grid_64):
        u = random_band_limited(grid_64, rng)
        np.testing.assert_allclose(derivative(u, 0).samples, u.samples, atol=1e-14)

    @pytest.mark.parametrize("order", [5, -1])
    def test_order_checked(self, grid_64, order):
        with pytest.raises(ValueError, match="derivative order"):
            derivative(Field(grid_64, np.zeros(64)), order)


class TestILWOperator:
    def test_zero_frequency_limits(self):
        delta = 0.7
        zero = np.array([0.0])
        assert ilw_symbol(delta, "L")(zero)[0] == 0
        assert ilw_symbol(delta, "L_dx")(zero)[0] == pytest.approx(1.0 / delta, rel=1e-15)
        assert ilw_symbol(delta, "L_dxx")(zero)[0] == 0

    def test_dx_symbol_matches_coth_form(self):
        delta = 1.3
        xi = np.array([-2.0, -0.3, 0.05, 0.4, 3.0])
        expected = 2.0 * np.pi * xi / np.tanh(2.0 * np.pi * delta * xi)
        np.testing.assert_allclose(ilw_symbol(delta, "L_dx")(xi).real, expected, rtol=1e-13)

    def test_deep_water_gap_closed_form(self):
        delta = 0.5
        xi = np.linspace(-3.0, 3.0, 61)
        xi = xi[xi != 0]
        dxx_ilw = 1j * 2 * np.pi * xi * ilw_symbol(delta, "L_dx")(xi)
        dxx_hilbert = 1j * 4 * np.pi ** 2 * xi ** 2 * np.sign(xi)
        a = 4 * np.pi * delta * np.abs(xi)
        closed = 8 * np.pi ** 2 * xi ** 2 * np.exp(-a) / (1 - np.exp(-a))
        np.testing.assert_allclose(np.abs(dxx_ilw - dxx_hilbert), closed, rtol=1e-9, atol=1e-12)

    def test_matches_derivative_composition(self, rng):
        grid = make_grid(128, 10.0)
        f = random_band_limited(grid, rng, max_mode=20)
        composed = ilw_apply(derivative(f, 1), 0.8, "L")
        direct = ilw_apply(f, 0.8, "L_dx")
        # L_dx also carries the mean / delta that d_x removes
        np.testing.assert_allclose(composed.samples + f.samples.mean() / 0.8, direct.samples, atol=1e-10)

    def test_approaches_hilbert_in_deep_water(self, rng):
        grid = make_grid(128, 10.0)
        f = random_band_limited(grid, rng, max_mode=30, zero_mean=True)
        gap = ilw_apply(f, 50.0, "L").samples - hilbert(f).samples
        assert np.max(np.abs(gap)) < 1e-10

    def test_delta_checked(self, grid_64):
        with pytest.raises(ValueError, match="delta must be positive"):
            ilw_apply(Field(grid_64, np.zeros(64)), 0.0)

    def test_mode_checked(self):
        with pytest.raises(ValueError, match="mode must be one of"):
            ilw_symbol(1.0, "L_dxxx")


class TestMultipliers:
    def test_singular_symbol_rejected(self, grid_64):
        symbol = MultiplierSymbol(lambda xi: 1.0 / xi, "odd-imaginary", "inverse")
        with pytest.raises(SingularSymbolError, match="singular symbol 'inverse'"):
            symbol_values(grid_64, symbol)

    def test_nyquist_uses_average(self):
        grid = make_grid(8, 1.0)
        odd = symbol_values(grid, MultiplierSymbol(lambda xi: 1j * xi, "odd-imaginary"))
        assert odd[grid.nyquist_index] == 0

    def test_general_symbol_gives_complex_field(self, rng, grid_64):
        f = random_band_limited(grid_64, rng)
        out = apply_multiplier(f, MultiplierSymbol(lambda xi: 1.0 + np.sign(xi)))
        assert not out.is_real

    def test_mislabeled_parity_rejected(self, grid_64):
        # i xi^2 is even and imaginary, so cos(x) maps to an imaginary field
        symbol = MultiplierSymbol(lambda xi: 1j * xi ** 2, "odd-imaginary", "i xi^2")
        with pytest.raises(ValueError, match="left an imaginary residue"):
            apply_multiplier(Field(grid_64, np.cos(grid_64.points)), symbol)

    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_real_preserving_derivatives_pass_the_residue_check(self, rng, order):
        grid = make_grid(1024, 2.0)
        out = derivative(random_band_limited(grid, rng), order)
        assert out.is_real

    def test_non_finite_input_rejected(self, grid_64):
        samples = np.zeros(64)
        samples[3] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            hilbert(Field(grid_64, samples))

    def test_invalid_parity(self):
        with pytest.raises(ValueError, match="parity must be one of"):
            MultiplierSymbol(lambda xi: xi, "odd")


class TestDealias:
    def test_removes_top_third(self, rng):
        grid = make_grid(96, 1.0)
        f = random_band_limited(grid, rng)
        out = dealias(f)
        high = np.abs(grid.mode_numbers) > 32
        assert np.max(np.abs(out.spectrum[high])) < 1e-13
        np.testing.assert_allclose(out.spectrum[~high], f.spectrum[~high], atol=1e-12)


class TestStableFunctions:
    def test_coth(self):
        z = np.array([-30.0, -1.0, 0.2, 5.0, 800.0])
        np.testing.assert_allclose(coth(z)[:4], 1.0 / np.tanh(z[:4]), rtol=1e-14)
        assert coth(np.array([800.0]))[0] == 1.0
        assert np.isnan(coth(np.array([0.0]))[0])

    def test_coth_minus_sign_keeps_precision(self):
        z = np.array([20.0])
        assert coth_minus_sign(z)[0] == pytest.approx(2.0 * np.exp(-40.0), rel=1e-12)

    def test_zcothz_minus_one_near_zero(self):
        z = np.array([0.0, 1e-8, 0.05, 0.0999, 0.1001, 2.0])
        out = zcothz_minus_one(z)
        assert out[0] == 0.0
        assert out[1] == pytest.approx(1e-16 / 3.0, rel=1e-12)
        np.testing.assert_allclose(out[2:], z[2:] / np.tanh(z[2:]) - 1.0, rtol=1e-12)


class TestRandomField:
    def test_band_limited_and_no_nyquist(self, rng):
        grid = make_grid(64, 1.0)
        f = random_band_limited(grid, rng, max_mode=10)
        assert f.is_real
        assert abs(f.spectrum[grid.nyquist_index]) < 1e-14
        assert np.max(np.abs(f.spectrum[np.abs(grid.mode_numbers) > 10])) < 1e-14
        assert f.sup_norm() == pytest.approx(1.0)
