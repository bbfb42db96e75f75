import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfbs.collocation import CoefficientHistory
from tfbs.errors import ContractError, DomainError
from tfbs.l1_caputo import history_term, l1_weights

ORDERS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99]


def compensated_cumsum(values):
    out = np.empty(len(values))
    total = comp = 0.0
    for i, v in enumerate(values.tolist()):
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out


@pytest.mark.parametrize("mu", ORDERS)
def test_weight_properties_up_to_large_count(mu):
    w = l1_weights(mu, 100_000, 1e-5).weights
    assert w[0] == 1.0
    assert np.all(w > 0)
    assert np.all(np.diff(w) < 0)
    # sum_{k<=n} (w_k - w_{k+1}) + w_{n+1} = 1 for every n
    telescoped = compensated_cumsum(w[:-1] - w[1:]) + w[1:]
    assert np.max(np.abs(telescoped - 1.0)) <= 1e-14


@pytest.mark.parametrize("mu", [0.05, 0.5, 0.95, 0.999])
def test_weights_against_high_precision(mu):
    w = l1_weights(mu, 2000, 0.01).weights
    mpmath.mp.dps = 40
    for k in (1, 2, 3, 10, 137, 1999):
        exact = mpmath.mpf(k + 1) ** (1 - mpmath.mpf(mu)) - mpmath.mpf(k) ** (1 - mpmath.mpf(mu))
        assert w[k] == pytest.approx(float(exact), rel=1e-13)


def test_square_root_weights():
    w = l1_weights(0.5, 4, 0.1).weights
    np.testing.assert_allclose(w[1:], [math.sqrt(2) - 1, math.sqrt(3) - math.sqrt(2), 2 - math.sqrt(3)], rtol=1e-14)
    np.testing.assert_allclose(w[1:], [0.414214, 0.317837, 0.267949], atol=5e-7)


def test_unit_order_degenerates_to_backward_difference():
    lw = l1_weights(1.0, 6, 0.2)
    assert lw.weights.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    assert lw.gamma_factor == pytest.approx(0.2)


@pytest.mark.parametrize("mu,ht", [(0.5, 0.1), (0.2, 1 / 2500), (0.9, 1 / 256)])
def test_gamma_factor(mu, ht):
    assert l1_weights(mu, 3, ht).gamma_factor == pytest.approx(math.gamma(2 - mu) * ht**mu, rel=1e-14)


@pytest.mark.parametrize("mu", [0.0, -0.1, 1.0000001, 2.0, math.nan])
def test_order_outside_domain(mu):
    with pytest.raises(DomainError):
        l1_weights(mu, 5, 0.1)


@pytest.mark.parametrize("count,ht", [(0, 0.1), (2.5, 0.1), (3, 0.0), (3, -1.0)])
def test_invalid_count_or_step(count, ht):
    with pytest.raises(DomainError):
        l1_weights(0.5, count, ht)


def test_weights_read_only():
    with pytest.raises(ValueError):
        l1_weights(0.5, 3, 0.1).weights[1] = 0.0


def brute_history(w, levels, n):
    # reversed summation order, one component at a time
    out = []
    for j in range(levels.shape[1]):
        acc = 0.0
        for k in range(n, 0, -1):
            acc += w[k] * (levels[n - k + 1, j] - levels[n - k, j])
        out.append(levels[n, j] - acc)
    return np.array(out)


def test_history_at_first_level_is_copy():
    levels = np.arange(12.0).reshape(3, 4)
    out = history_term(l1_weights(0.5, 5, 0.1), levels, 0)
    np.testing.assert_array_equal(out, levels[0])
    out[0] = 99.0
    assert levels[0, 0] == 0.0


def test_constant_history_returns_level():
    levels = np.tile(np.array([1.5, -2.0, 3.25]), (6, 1))
    np.testing.assert_allclose(history_term(l1_weights(0.3, 10, 0.1), levels, 5), levels[0], rtol=1e-15)


def test_three_steps_against_brute_force():
    rng = np.random.default_rng(11)
    levels = rng.normal(size=(4, 7))
    w = l1_weights(0.5, 4, 0.25)
    np.testing.assert_allclose(history_term(w, levels, 3), brute_history(w.weights, levels, 3), rtol=1e-13, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(mu=st.floats(0.01, 1.0), n=st.integers(1, 30), seed=st.integers(0, 2**20))
def test_regrouped_form_agrees(mu, n, seed):
    rng = np.random.default_rng(seed)
    levels = rng.normal(size=(n + 1, 5))
    lw = l1_weights(mu, n + 1, 0.1)
    w = lw.weights
    regrouped = w[n] * levels[0] + sum((w[k] - w[k + 1]) * levels[n - k] for k in range(n))
    direct = history_term(lw, levels, n)
    scale = np.max(np.abs(levels))
    np.testing.assert_allclose(direct, regrouped, rtol=0, atol=1e-12 * scale)
    np.testing.assert_allclose(direct, brute_history(w, levels, n), rtol=0, atol=1e-12 * scale)


def test_scalar_sequences():
    seq = [0.0, 1.0, 4.0, 9.0]
    lw = l1_weights(0.5, 4, 0.1)
    expected = 9.0 - (lw.weights[1] * 5 + lw.weights[2] * 3 + lw.weights[3] * 1)
    assert float(history_term(lw, seq, 3)) == pytest.approx(expected, rel=1e-14)


def test_coefficient_history_input():
    rng = np.random.default_rng(3)
    hist = CoefficientHistory(4, 6)
    levels = rng.normal(size=(5, 4))
    for row in levels:
        hist.append(row, (0.0, 0.0))
    lw = l1_weights(0.7, 6, 0.1)
    np.testing.assert_allclose(history_term(lw, hist, 4), history_term(lw, levels, 4), rtol=1e-14)


def test_step_beyond_history_or_weights():
    lw = l1_weights(0.5, 3, 0.1)
    with pytest.raises(ContractError):
        history_term(lw, np.zeros((2, 3)), 2)
    with pytest.raises(ContractError):
        history_term(lw, np.zeros((5, 3)), 3)
    with pytest.raises(ContractError):
        history_term(lw, np.zeros((5, 3)), -1)
