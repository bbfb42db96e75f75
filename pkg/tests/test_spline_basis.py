import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfbs.errors import BasisRangeError, ContractError, DomainError
from tfbs.spline_basis import (
    SpatialGrid,
    basis_constants,
    cosh_minus_one,
    evaluate_basis,
    evaluate_basis_closed_form,
    nodal_first_derivative,
    nodal_second_derivative,
    nodal_values,
    reconstruct,
    sinh_minus_identity,
)

mpmath.mp.dps = 50


def mp_constants(rho, h):
    """High-precision eta, e_tilde, eta_bar straight from the nodal formulas."""
    rho, h = mpmath.mpf(rho), mpmath.mpf(h)
    p = rho * h
    s, c = mpmath.sinh(p), mpmath.cosh(p)
    d = p * c - s
    return (s - p) / (2 * d), rho / (2 * d), rho**2 * s / (2 * d), rho * (c - 1) / (2 * d)


@pytest.mark.parametrize("z", [0.0, 1e-8, 1e-3, 0.3, 0.4999, 0.5, 0.7, 3.0, -0.2, -2.0])
def test_series_helpers_match_high_precision(z):
    exact_smx = float(mpmath.sinh(z) - z)
    exact_cm1 = float(mpmath.cosh(z) - 1)
    assert sinh_minus_identity(z) == pytest.approx(exact_smx, rel=1e-14, abs=1e-300)
    assert cosh_minus_one(z) == pytest.approx(exact_cm1, rel=1e-14, abs=1e-300)


def test_eta_at_unit_tension_and_spacing():
    b = basis_constants(1.0, 1.0)
    printed = (math.sinh(1) - 1) / (2 * (math.cosh(1) - math.sinh(1)))
    assert b.eta == pytest.approx(printed, rel=1e-13)
    assert b.eta == pytest.approx(float(mp_constants(1, 1)[0]), rel=1e-14)


@pytest.mark.parametrize(
    "rho,h", [(1.5, 0.002), (1.5, 0.125), (0.5, 1 / 64), (8.6, 1e-3), (8.6, 0.5), (1e-3, 1e-4), (20.0, 1.0)]
)
def test_constants_against_high_precision(rho, h):
    b = basis_constants(rho, h)
    eta, e_tilde, eta_bar, slope = (float(v) for v in mp_constants(rho, h))
    assert b.eta == pytest.approx(eta, rel=1e-12)
    assert b.e_tilde == pytest.approx(e_tilde, rel=1e-12)
    assert b.eta_bar == pytest.approx(eta_bar, rel=1e-12)
    assert b.slope == pytest.approx(slope, rel=1e-12)


def test_cubic_limit_with_monotone_error_decay():
    rho = 1.5
    err_eta, err_bar = [], []
    for p in (1e-1, 1e-2, 1e-3):
        h = p / rho
        b = basis_constants(rho, h)
        err_eta.append(abs(b.eta - 0.25))
        err_bar.append(abs(h * h * b.eta_bar - 1.5))
    assert err_eta[0] > err_eta[1] > err_eta[2]
    assert err_bar[0] > err_bar[1] > err_bar[2]
    assert err_eta[-1] < 1e-7 and err_bar[-1] < 1e-6


def test_tiny_product_stays_accurate():
    b = basis_constants(1.5, 1e-8)
    assert b.eta == pytest.approx(float(mp_constants(1.5, 1e-8)[0]), rel=1e-12)


@pytest.mark.parametrize("rho,h", [(1000.0, 1.0), (1.0, 800.0)])
def test_overflow_names_product(rho, h):
    with pytest.raises(BasisRangeError, match=r"rho\*h_x"):
        basis_constants(rho, h)


@pytest.mark.parametrize("rho,h", [(0.0, 0.1), (-1.0, 0.1), (1.0, 0.0), (1.0, -0.1), (math.nan, 0.1), (1.0, math.inf)])
def test_invalid_constants_rejected(rho, h):
    with pytest.raises(DomainError):
        basis_constants(rho, h)


def test_grid_validation_and_ghost_nodes():
    with pytest.raises(DomainError):
        SpatialGrid(1.0, 0.0, 4)
    with pytest.raises(DomainError):
        SpatialGrid(0.0, 1.0, 0)
    g = SpatialGrid(0.0, 1.0, 4)
    assert g.spacing == 0.25
    assert g.node(-3) == pytest.approx(-0.75)
    assert g.node(7) == pytest.approx(1.75)
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0


GRIDS = [(1.5, SpatialGrid(0.0, 1.0, 8)), (0.5, SpatialGrid(0.0, 1.0, 16)), (8.6, SpatialGrid(-1.0, 2.0, 6))]


@pytest.mark.parametrize("rho,grid", GRIDS)
def test_nodal_values_match_reference_table(rho, grid):
    b = basis_constants(rho, grid.spacing)
    s, c, p = b.sinh_val, b.cosh_val, rho * grid.spacing
    d = p * c - s
    n = grid.interior_count
    for m in range(-1, n + 2):
        for i in range(m - 3, m + 4):
            v, d1, d2 = evaluate_basis(b, grid, m, grid.node(i))
            if i == m:
                assert v == pytest.approx(1.0, rel=1e-12)
                assert abs(d1) < 1e-12 * b.slope
                assert d2 == pytest.approx(-rho**2 * s / d, rel=1e-12)
            elif abs(i - m) == 1:
                sign = 1 if i == m - 1 else -1
                assert v == pytest.approx((s - p) / (2 * d), rel=1e-12)
                assert d1 == pytest.approx(sign * rho * (c - 1) / (2 * d), rel=1e-12)
                assert d2 == pytest.approx(rho**2 * s / (2 * d), rel=1e-12)
            else:
                assert (v, d1, d2) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("rho,grid", GRIDS)
def test_second_continuity_at_breakpoints(rho, grid):
    b = basis_constants(rho, grid.spacing)
    h = grid.spacing
    m = grid.interior_count // 2
    delta = 1e-7 * h
    for k in (-2, -1, 0, 1, 2):
        xb = grid.node(m + k)
        # one-sided limits by linear extrapolation from offsets delta and 2*delta
        left = 2 * np.array(evaluate_basis(b, grid, m, xb - delta)) - np.array(evaluate_basis(b, grid, m, xb - 2 * delta))
        right = 2 * np.array(evaluate_basis(b, grid, m, xb + delta)) - np.array(evaluate_basis(b, grid, m, xb + 2 * delta))
        scale = np.array([1.0, b.slope, b.eta_bar])
        np.testing.assert_allclose(left / scale, right / scale, rtol=0, atol=1e-9)


def mp_closed_form(rho, h, d):
    """Printed piecewise formula in 50-digit arithmetic; ``d`` is x - x_m."""
    rho, h, d = mpmath.mpf(rho), mpmath.mpf(h), mpmath.mpf(d)
    p = rho * h
    s, c = mpmath.sinh(p), mpmath.cosh(p)
    den = p * c - s
    r = rho / (2 * den)
    a = p * c / den
    b = rho / 2 * (c * (c - 1) + s**2) / (den * (1 - c))
    cb = (mpmath.exp(-p) * (1 - c) + s * (mpmath.exp(-p) - 1)) / (4 * den * (1 - c))
    q = (mpmath.exp(p) * (c - 1) + s * (mpmath.exp(p) - 1)) / (4 * den * (1 - c))
    u = abs(d)
    if u < h:
        return a + b * u + cb * mpmath.exp(rho * u) + q * mpmath.exp(-rho * u)
    if u < 2 * h:
        return r * (u - 2 * h) - r / rho * mpmath.sinh(rho * (u - 2 * h))
    return mpmath.mpf(0)


@pytest.mark.parametrize("rho,grid", GRIDS + [(1e-3, SpatialGrid(0.0, 1.0, 50))])
def test_stable_form_matches_high_precision_closed_form(rho, grid):
    b = basis_constants(rho, grid.spacing)
    m = grid.interior_count // 2
    x = np.linspace(grid.node(m - 2), grid.node(m + 2), 81)
    stable = evaluate_basis(b, grid, m, x)[0]
    oracle = np.array([float(mp_closed_form(rho, grid.spacing, xi - grid.node(m))) for xi in x])
    np.testing.assert_allclose(stable, oracle, rtol=0, atol=1e-13)


@pytest.mark.parametrize("rho,grid", [(1.5, SpatialGrid(0.0, 1.0, 8)), (8.6, SpatialGrid(-1.0, 2.0, 6))])
def test_float_closed_form_agrees_at_moderate_tension(rho, grid):
    b = basis_constants(rho, grid.spacing)
    m = grid.interior_count // 2
    x = np.linspace(grid.node(m - 2), grid.node(m + 2), 401)
    np.testing.assert_allclose(evaluate_basis(b, grid, m, x)[0], evaluate_basis_closed_form(b, grid, m, x), atol=1e-11)


@settings(max_examples=50, deadline=None)
@given(
    rho=st.floats(0.01, 20.0),
    n=st.integers(2, 40),
    frac=st.floats(0.0, 1.0, exclude_max=True),
)
def test_symmetry_about_centre(rho, n, frac):
    grid = SpatialGrid(0.0, 1.0, n)
    b = basis_constants(rho, grid.spacing)
    m = n // 2
    delta = frac * 2 * grid.spacing
    lv, ld1, ld2 = evaluate_basis(b, grid, m, grid.node(m) - delta)
    rv, rd1, rd2 = evaluate_basis(b, grid, m, grid.node(m) + delta)
    assert lv == pytest.approx(rv, rel=1e-9, abs=1e-12)
    assert ld1 == pytest.approx(-rd1, rel=1e-8, abs=1e-9 * b.slope)
    assert ld2 == pytest.approx(rd2, rel=1e-8, abs=1e-9 * b.eta_bar)


@settings(max_examples=25, deadline=None)
@given(rho=st.floats(0.01, 30.0), n=st.integers(1, 64), seed=st.integers(0, 2**16))
def test_basis_sum_bounded(rho, n, seed):
    grid = SpatialGrid(0.0, 1.0, n)
    b = basis_constants(rho, grid.spacing)
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 1000)
    total = sum(np.abs(evaluate_basis(b, grid, m, x)[0]) for m in range(-1, n + 2))
    assert np.all(total <= 2.5 + 1e-12)


def test_support_ends_and_outside():
    grid = SpatialGrid(0.0, 1.0, 8)
    b = basis_constants(1.5, grid.spacing)
    m = 4
    for x in (grid.node(m + 2), grid.node(m - 2), grid.node(m + 3), -5.0):
        assert evaluate_basis(b, grid, m, x) == (0.0, 0.0, 0.0)


def test_evaluate_rejects_bad_index_and_point():
    grid = SpatialGrid(0.0, 1.0, 4)
    b = basis_constants(1.5, grid.spacing)
    with pytest.raises(ContractError):
        evaluate_basis(b, grid, -2, 0.0)
    with pytest.raises(ContractError):
        evaluate_basis(b, grid, 6, 0.0)
    with pytest.raises(DomainError):
        evaluate_basis(b, grid, 0, math.nan)


class TestReconstruct:
    grid = SpatialGrid(0.0, 1.0, 10)
    basis = basis_constants(1.5, 0.1)

    def test_zero(self):
        x = np.linspace(0, 1, 57)
        assert np.all(reconstruct(np.zeros(13), self.basis, self.grid, x) == 0.0)

    def test_constant_coefficients(self):
        c = 3.7
        for x in self.grid.nodes:
            assert reconstruct(np.full(13, c), self.basis, self.grid, x) == pytest.approx(
                c * (1 + 2 * self.basis.eta), rel=1e-13
            )

    def test_random_against_brute_force(self):
        rng = np.random.default_rng(5)
        coeffs = rng.normal(size=13)
        x = rng.uniform(0, 1, 200)
        brute = sum(coeffs[m + 1] * evaluate_basis(self.basis, self.grid, m, x)[0] for m in range(-1, 12))
        np.testing.assert_allclose(reconstruct(coeffs, self.basis, self.grid, x), brute, rtol=1e-13, atol=1e-13)
        at_nodes = reconstruct(coeffs, self.basis, self.grid, self.grid.nodes)
        np.testing.assert_allclose(at_nodes, nodal_values(coeffs, self.basis.eta), rtol=1e-13, atol=1e-13)

    def test_nodal_derivatives(self):
        coeffs = np.random.default_rng(6).normal(size=13)
        d1 = sum(coeffs[m + 1] * evaluate_basis(self.basis, self.grid, m, self.grid.nodes)[1] for m in range(-1, 12))
        d2 = sum(coeffs[m + 1] * evaluate_basis(self.basis, self.grid, m, self.grid.nodes)[2] for m in range(-1, 12))
        np.testing.assert_allclose(nodal_first_derivative(coeffs, self.basis), d1, rtol=1e-11, atol=1e-11)
        np.testing.assert_allclose(nodal_second_derivative(coeffs, self.basis), d2, rtol=1e-11, atol=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            reconstruct(np.zeros(12), self.basis, self.grid, 0.5)
