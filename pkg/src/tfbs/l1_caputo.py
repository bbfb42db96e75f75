"""L1 quadrature weights for the Caputo derivative of order 0 < mu <= 1."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ContractError, DomainError


@dataclass(frozen=True)
class L1Weights:
    order: float
    count: int
    weights: np.ndarray
    # Gamma(2 - mu) * h_t**mu, the factor multiplying the right-hand side
    gamma_factor: float
    time_step: float


def l1_weights(order: float, count: int, time_step: float) -> L1Weights:
    """Weights ``w_k = (k+1)^(1-mu) - k^(1-mu)`` for ``k = 0..count-1``."""
    order = float(order)
    if not (0.0 < order <= 1.0):
        raise DomainError(f"fractional order must lie in (0, 1], got {order}")
    if int(count) != count or count < 1:
        raise DomainError(f"weight count must be a positive integer, got {count}")
    if not (time_step > 0 and math.isfinite(time_step)):
        raise DomainError(f"time step must be positive, got {time_step}")

    k = np.arange(count, dtype=float)
    power = 1.0 - order
    if power == 0.0:
        w = np.zeros(count)
    else:
        # (k+1)^p - k^p = k^p * expm1(p*log1p(1/k)) avoids cancellation for large k
        w = np.empty(count)
        w[1:] = k[1:] ** power * np.expm1(power * np.log1p(1.0 / k[1:]))
    w[0] = 1.0
    w.flags.writeable = False

    gamma_factor = math.exp(gammaln(2.0 - order)) * time_step**order
    return L1Weights(
        order=order, count=int(count), weights=w, gamma_factor=gamma_factor, time_step=float(time_step)
    )


def history_term(weights: L1Weights, history, step: int) -> np.ndarray:
    """``R^n - sum_{k=1}^{n} w_k (R^{n-k+1} - R^{n-k})`` for ``n = step``.

    ``history`` is a ``CoefficientHistory`` or any array whose leading axis is
    the time level. Works on scalar sequences (boundary data) as well.
    """
    levels = history.steps if hasattr(history, "steps") else np.asarray(history, dtype=float)
    n = int(step)
    if n < 0 or n >= len(levels):
        raise ContractError(f"history holds {len(levels)} levels, cannot form term for step {n}")
    if n > weights.count - 1:
        raise ContractError(f"only {weights.count} weights available, step {n} needs {n + 1}")
    current = levels[n]
    if n == 0:
        return np.array(current, dtype=float, copy=True)
    if hasattr(history, "diffs"):
        diffs = history.diffs[:n]
    else:
        diffs = np.diff(levels[: n + 1], axis=0)
    # w_1 pairs with the newest difference, w_n with the oldest
    return current - weights.weights[n:0:-1] @ diffs
