"""Manufactured test problems and the option-pricing transforms.

Options are priced in log-price ``x = ln(xi)`` and time-to-expiry
``t = T - tau``, which turns the backward fractional Black-Scholes equation
into a forward constant-coefficient problem on a truncated interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .collocation import ProblemSpec, SolveResult
from .errors import ContractError, DomainError


@dataclass(frozen=True)
class ManufacturedProblem:
    spec: ProblemSpec
    exact: Callable  # u(x, t), vectorised over x
    example_id: int
    order: float


def _market_coefficients(rate: float, volatility: float, dividend: float = 0.0) -> tuple[float, float, float]:
    alpha = 0.5 * volatility**2
    return alpha, rate - dividend - alpha, rate


def _example_1(mu: float) -> ManufacturedProblem:
    alpha, beta, gam = _market_coefficients(0.05, 0.25)
    g2, g3 = gamma_fn(2 - mu), gamma_fn(3 - mu)

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        return (t + 1) ** 2 * x**2 * (1 - x)

    def source(x, t):
        x = np.asarray(x, dtype=float)
        shape = x**2 * (1 - x)
        return (
            2 / g3 * t ** (2 - mu) * shape
            + 2 / g2 * t ** (1 - mu) * shape
            - (t + 1) ** 2 * (alpha * (2 - 6 * x) + beta * x * (2 - 3 * x) - gam * shape)
        )

    spec = ProblemSpec(
        diffusion=alpha,
        drift=beta,
        reaction=gam,
        source=source,
        initial=lambda x: exact(x, 0.0),
        left_boundary=lambda t: 0.0,
        right_boundary=lambda t: 0.0,
        left=0.0,
        right=1.0,
        horizon=1.0,
        initial_deriv=(0.0, -1.0),
    )
    return ManufacturedProblem(spec, exact, 1, mu)


def _example_2(mu: float) -> ManufacturedProblem:
    rate, alpha = 0.5, 1.0
    beta, gam = rate - alpha, rate
    g2, g3 = gamma_fn(2 - mu), gamma_fn(3 - mu)

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        return (t + 1) ** 2 * (1 + x**2 + x**3)

    def source(x, t):
        x = np.asarray(x, dtype=float)
        shape = 1 + x**2 + x**3
        return (2 * t ** (2 - mu) / g3 + 2 * t ** (1 - mu) / g2) * shape - (t + 1) ** 2 * (
            alpha * (6 * x + 2) + beta * x * (2 + 3 * x) - gam * shape
        )

    spec = ProblemSpec(
        diffusion=alpha,
        drift=beta,
        reaction=gam,
        source=source,
        initial=lambda x: exact(x, 0.0),
        left_boundary=lambda t: (1 + t) ** 2,
        right_boundary=lambda t: 3 * (1 + t) ** 2,
        left=0.0,
        right=1.0,
        horizon=1.0,
        initial_deriv=(0.0, 5.0),
    )
    return ManufacturedProblem(spec, exact, 2, mu)


def _example_3(mu: float) -> ManufacturedProblem:
    alpha, beta, gam = _market_coefficients(0.02, 0.8)
    g4 = gamma_fn(4 - mu)

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        return (t**3 + 1) * x**4 * (x - 1)

    def source(x, t):
        x = np.asarray(x, dtype=float)
        return 6 / g4 * t ** (3 - mu) * (x**5 - x**4) - (t**3 + 1) * (
            4 * alpha * x**2 * (5 * x - 3) + beta * x**3 * (5 * x - 4) - gam * x**4 * (x - 1)
        )

    spec = ProblemSpec(
        diffusion=alpha,
        drift=beta,
        reaction=gam,
        source=source,
        initial=lambda x: exact(x, 0.0),
        left_boundary=lambda t: 0.0,
        right_boundary=lambda t: 0.0,
        left=0.0,
        right=1.0,
        horizon=1.0,
        initial_deriv=(0.0, 1.0),
    )
    return ManufacturedProblem(spec, exact, 3, mu)


_EXAMPLES = {1: _example_1, 2: _example_2, 3: _example_3}


def example_problem(example_id: int, order: float) -> ManufacturedProblem:
    """Manufactured problem 1, 2 or 3 with fractional order ``order``."""
    if example_id not in _EXAMPLES:
        raise DomainError(f"unknown example {example_id!r}; choose from {sorted(_EXAMPLES)}")
    if not (0.0 < order <= 1.0):
        raise DomainError(f"fractional order must lie in (0, 1], got {order}")
    return _EXAMPLES[example_id](float(order))


def _d_dt(u, x, t, h=1e-3):
    return (-u(x, t + 2 * h) + 8 * u(x, t + h) - 8 * u(x, t - h) + u(x, t - 2 * h)) / (12 * h)


def _d_dx(u, x, t, h=1e-3):
    return (-u(x + 2 * h, t) + 8 * u(x + h, t) - 8 * u(x - h, t) + u(x - 2 * h, t)) / (12 * h)


def _d_dxx(u, x, t, h=1e-3):
    return (
        -u(x + 2 * h, t) + 16 * u(x + h, t) - 30 * u(x, t) + 16 * u(x - h, t) - u(x - 2 * h, t)
    ) / (12 * h * h)


def caputo_quadrature(u, x: float, t: float, order: float) -> float:
    """Caputo derivative of ``u(x, .)`` at ``t`` by adaptive quadrature.

    The weakly singular kernel is handled by QUADPACK's algebraic weight;
    the time derivative inside the integral is a fourth-order central
    difference.
    """
    if order == 1.0:
        return float(_d_dt(u, x, t))
    integrand = lambda s: float(_d_dt(u, x, s))
    val, _ = integrate.quad(integrand, 0.0, t, weight="alg", wvar=(0.0, -order), epsabs=1e-13, epsrel=1e-12)
    return val / gamma_fn(1.0 - order)


def residual_check(problem: ManufacturedProblem, samples: int, seed: int = 0) -> float:
    """Max PDE residual of the exact solution at random interior points."""
    spec = problem.spec
    rng = np.random.default_rng(seed)
    u = problem.exact
    worst = 0.0
    for _ in range(samples):
        x = rng.uniform(spec.left + 0.05, spec.right - 0.05)
        t = rng.uniform(0.05, spec.horizon)
        lhs = caputo_quadrature(u, x, t, problem.order)
        rhs = (
            spec.diffusion * _d_dxx(u, x, t)
            + spec.drift * _d_dx(u, x, t)
            - spec.reaction * float(u(x, t))
            + float(spec.source(np.asarray(x), t))
        )
        worst = max(worst, abs(lhs - rhs))
    return worst


OPTION_KINDS = ("call", "put", "double_barrier_call")


@dataclass(frozen=True)
class OptionModel:
    volatility: float
    rate: float
    strike: float
    expiry: float
    price_bounds: tuple[float, float]
    kind: str
    dividend_yield: float = 0.0

    def __post_init__(self):
        if self.kind not in OPTION_KINDS:
            raise DomainError(f"unknown option kind {self.kind!r}; choose from {OPTION_KINDS}")
        if not self.volatility > 0:
            raise DomainError(f"volatility must be positive, got {self.volatility}")
        if not self.strike > 0:
            raise DomainError(f"strike must be positive, got {self.strike}")
        if not self.expiry > 0:
            raise DomainError(f"expiry must be positive, got {self.expiry}")
        if self.dividend_yield < 0:
            raise DomainError(f"dividend yield must be non-negative, got {self.dividend_yield}")
        lo, hi = self.price_bounds
        if not lo > 0:
            raise DomainError(f"lower price bound must be positive, got {lo}")
        if not hi > lo:
            raise DomainError("upper price bound must exceed the lower one")


@dataclass(frozen=True)
class PriceSurface:
    # prices[m, n] is the option value at price_nodes[m], time_nodes[n]
    prices: np.ndarray
    price_nodes: np.ndarray
    time_nodes: np.ndarray


def to_log_space(model: OptionModel) -> ProblemSpec:
    """Forward problem in ``(ln xi, T - tau)`` for the given option."""
    lo, hi = model.price_bounds
    if lo <= 0:
        raise DomainError(f"lower price bound must be positive, got {lo}")
    alpha, beta, gam = _market_coefficients(model.rate, model.volatility, model.dividend_yield)
    K, r = model.strike, model.rate

    if model.kind == "put":
        initial = lambda x: np.maximum(K - np.exp(x), 0.0)
        left_bc = lambda t: K * math.exp(-r * t)
        right_bc = lambda t: 0.0
    elif model.kind == "call":
        initial = lambda x: np.maximum(np.exp(x) - K, 0.0)
        left_bc = lambda t: 0.0
        right_bc = lambda t: hi - K * math.exp(-r * t)
    else:
        initial = lambda x: np.maximum(np.exp(x) - K, 0.0)
        left_bc = lambda t: 0.0
        right_bc = lambda t: 0.0

    return ProblemSpec(
        diffusion=alpha,
        drift=beta,
        reaction=gam,
        source=lambda x, t: 0.0,
        initial=initial,
        left_boundary=left_bc,
        right_boundary=right_bc,
        left=math.log(lo),
        right=math.log(hi),
        horizon=model.expiry,
    )


def from_log_space(result: SolveResult, model: OptionModel) -> PriceSurface:
    """Map a log-space solution back to prices; ``tau`` runs forward in time."""
    lo, hi = model.price_bounds
    grid = result.grid
    if not (
        math.isclose(grid.left_endpoint, math.log(lo), abs_tol=1e-12)
        and math.isclose(grid.right_endpoint, math.log(hi), abs_tol=1e-12)
    ):
        raise ContractError("solution grid does not match the option's price bounds")
    if not math.isclose(result.times[-1], model.expiry, rel_tol=1e-12):
        raise ContractError("solution horizon does not match the option expiry")
    # column n of the surface is tau_n = T - t_{N-n}
    prices = result.values[:, ::-1].copy()
    if model.kind == "double_barrier_call":
        # knocked out on the barriers, including the expiry corners where the
        # payoff itself is nonzero
        prices[0, :] = 0.0
        prices[-1, :] = 0.0
    time_nodes = model.expiry - result.times[::-1]
    return PriceSurface(prices=prices, price_nodes=np.exp(grid.nodes), time_nodes=time_nodes)
