"""Exponential B-spline basis with tension on a uniform grid.

Each basis function ``Q_m`` is supported on ``[x_{m-2}, x_{m+2}]``, takes the
value 1 at ``x_m`` and ``eta`` at ``x_{m-1}`` and ``x_{m+1}``. As the tension
goes to zero the basis reduces to the (scaled) cubic B-spline.

Indices run from -1 to N_x + 1. Coefficient vectors over the full basis have
length N_x + 3, with array position ``j`` holding the coefficient of
``Q_{j-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BasisRangeError, ContractError, DomainError

# Below this argument the Taylor series of sinh(z) - z is used instead of the
# direct difference; 8 terms keep the truncation under 1e-16 relative.
_SERIES_CUTOFF = 0.5


def sinh_minus_identity(z):
    """``sinh(z) - z`` without cancellation near zero."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_CUTOFF
    z2 = z * z
    # Horner form of z^3/3! + z^5/5! + ... + z^17/17!
    series = np.zeros_like(z)
    for k in range(17, 1, -2):
        series = z2 * series + 1.0 / math.factorial(k)
    series = series * z2 * z
    with np.errstate(over="ignore"):
        direct = np.sinh(z) - z
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def cosh_minus_one(z):
    """``cosh(z) - 1`` without cancellation near zero."""
    with np.errstate(over="ignore"):
        out = 2.0 * np.sinh(0.5 * np.asarray(z, dtype=float)) ** 2
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform partition of ``[left_endpoint, right_endpoint]`` into
    ``interior_count`` intervals."""

    left_endpoint: float
    right_endpoint: float
    interior_count: int

    def __post_init__(self):
        if not (math.isfinite(self.left_endpoint) and math.isfinite(self.right_endpoint)):
            raise DomainError("grid endpoints must be finite")
        if self.right_endpoint <= self.left_endpoint:
            raise DomainError(
                f"right endpoint {self.right_endpoint} must exceed left endpoint {self.left_endpoint}"
            )
        if int(self.interior_count) != self.interior_count or self.interior_count < 1:
            raise DomainError(f"interior_count must be a positive integer, got {self.interior_count}")

    @property
    def spacing(self) -> float:
        return (self.right_endpoint - self.left_endpoint) / self.interior_count

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = self.left_endpoint + self.spacing * np.arange(self.interior_count + 1)
        nodes.flags.writeable = False
        return nodes

    def node(self, m: int) -> float:
        """Node ``x_m``; ghost indices outside 0..N_x are extrapolated."""
        return self.left_endpoint + m * self.spacing


@dataclass(frozen=True)
class BasisConstants:
    """Tension-dependent constants of the exponential B-spline.

    ``eta``, ``e_tilde`` and ``eta_bar`` give nodal values of the spline and
    its second derivative; ``piece_*`` are the coefficients of the
    piecewise closed form.
    """

    tension: float
    spacing: float
    sinh_val: float
    cosh_val: float
    eta: float
    e_tilde: float
    eta_bar: float
    piece_r: float
    piece_a: float
    piece_b: float
    piece_cbar: float
    piece_q: float
    # rho*h*cosh(rho*h) - sinh(rho*h), the common denominator
    denominator: float
    # cosh(rho*h) - 1 evaluated without cancellation
    cosh_m1: float

    @property
    def slope(self) -> float:
        """Nodal first-derivative factor ``e_tilde * (cosh - 1)``."""
        return self.e_tilde * self.cosh_m1


def basis_constants(tension: float, spacing: float) -> BasisConstants:
    tension = float(tension)
    spacing = float(spacing)
    if not (tension > 0 and math.isfinite(tension)):
        raise DomainError(f"tension must be positive and finite, got {tension}")
    if not (spacing > 0 and math.isfinite(spacing)):
        raise DomainError(f"spacing must be positive and finite, got {spacing}")

    p = tension * spacing
    try:
        s = math.sinh(p)
        c = math.cosh(p)
        ep, em = math.exp(p), math.exp(-p)
    except OverflowError:
        raise BasisRangeError(p) from None

    cm1 = cosh_minus_one(p)
    smx = sinh_minus_identity(p)
    # p*c - s = p*(c - 1) - (s - p); both terms are O(p^3) with ratio 3:1
    denom = p * cm1 - smx

    eta = smx / (2.0 * denom)
    e_tilde = tension / (2.0 * denom)
    eta_bar = tension**2 * s / (2.0 * denom)

    one_minus_c = -cm1
    piece_r = tension / (2.0 * denom)
    piece_a = p * c / denom
    with np.errstate(over="ignore", invalid="ignore"):
        piece_b = 0.5 * tension * (c * cm1 + s * s) / (denom * one_minus_c)
        piece_cbar = 0.25 * (em * one_minus_c + s * (em - 1.0)) / (denom * one_minus_c)
        piece_q = 0.25 * (ep * cm1 + s * (ep - 1.0)) / (denom * one_minus_c)

    values = (s, c, eta, e_tilde, eta_bar, piece_r, piece_a, piece_b, piece_cbar, piece_q, denom)
    if not all(math.isfinite(v) for v in values) or denom <= 0:
        raise BasisRangeError(p)

    return BasisConstants(
        tension=tension,
        spacing=spacing,
        sinh_val=s,
        cosh_val=c,
        eta=eta,
        e_tilde=e_tilde,
        eta_bar=eta_bar,
        piece_r=piece_r,
        piece_a=piece_a,
        piece_b=piece_b,
        piece_cbar=piece_cbar,
        piece_q=piece_q,
        denominator=denom,
        cosh_m1=cm1,
    )


def evaluate_basis(constants: BasisConstants, grid: SpatialGrid, index: int, point):
    """Value, first and second derivative of ``Q_index`` at ``point``.

    ``point`` may be a scalar or an array. The inner pieces are evaluated in a
    rearranged form (expansion about the neighbouring knot) that is
    algebraically identical to the closed form but stays accurate when
    ``rho*h`` is small.
    """
    if not -1 <= index <= grid.interior_count + 1:
        raise ContractError(f"basis index {index} outside -1..{grid.interior_count + 1}")
    x = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("evaluation point must be finite")

    rho = constants.tension
    h = grid.spacing
    d = x - grid.node(index)
    a = np.abs(d)
    sign = np.where(d < 0, -1.0, 1.0)

    value = np.zeros_like(a)
    d1 = np.zeros_like(a)
    d2 = np.zeros_like(a)

    # outer pieces: h <= |d| < 2h, e is the distance to the end of the support
    outer = (a >= h) & (a < 2 * h)
    e = 2 * h - a[outer]
    r = constants.piece_r
    value[outer] = r / rho * sinh_minus_identity(rho * e)
    d1[outer] = -sign[outer] * r * cosh_minus_one(rho * e)
    d2[outer] = r * rho * np.sinh(rho * e)

    # inner pieces: |d| < h, expanded about the knot at distance h
    inner = a < h
    f1 = -constants.slope
    f2 = constants.eta_bar
    k3 = rho**2 * (f2 * constants.sinh_val / rho - f1) / constants.cosh_m1
    z = rho * (a[inner] - h)
    value[inner] = (
        constants.eta
        + f1 * (a[inner] - h)
        + f2 * cosh_minus_one(z) / rho**2
        + k3 * sinh_minus_identity(z) / rho**3
    )
    d1[inner] = sign[inner] * (f1 + f2 * np.sinh(z) / rho + k3 * cosh_minus_one(z) / rho**2)
    d2[inner] = f2 * np.cosh(z) + k3 * np.sinh(z) / rho

    if value.ndim == 0:
        return float(value), float(d1), float(d2)
    return value, d1, d2


def evaluate_basis_closed_form(constants: BasisConstants, grid: SpatialGrid, index: int, point):
    """Value of ``Q_index`` from the textbook piecewise formula.

    Loses accuracy for small ``rho*h``; kept as a cross-check of
    :func:`evaluate_basis`.
    """
    x = np.asarray(point, dtype=float)
    rho = constants.tension
    xm = grid.node(index)
    h = grid.spacing
    r, a, b = constants.piece_r, constants.piece_a, constants.piece_b
    cb, q = constants.piece_cbar, constants.piece_q
    conds = [
        (x >= xm - 2 * h) & (x < xm - h),
        (x >= xm - h) & (x < xm),
        (x >= xm) & (x < xm + h),
        (x >= xm + h) & (x < xm + 2 * h),
    ]
    funcs = [
        lambda y: r * (xm - 2 * h - y) - r / rho * np.sinh(rho * (xm - 2 * h - y)),
        lambda y: a + b * (xm - y) + cb * np.exp(rho * (xm - y)) + q * np.exp(-rho * (xm - y)),
        lambda y: a + b * (y - xm) + cb * np.exp(rho * (y - xm)) + q * np.exp(-rho * (y - xm)),
        lambda y: r * (y - xm - 2 * h) - r / rho * np.sinh(rho * (y - xm - 2 * h)),
    ]
    out = np.piecewise(np.atleast_1d(x), [np.atleast_1d(cnd) for cnd in conds], funcs + [0.0])
    return out if x.ndim else float(out[0])


def reconstruct(coefficients, constants: BasisConstants, grid: SpatialGrid, point):
    """Evaluate ``sum_m R_m Q_m(point)`` for a full coefficient vector."""
    coefficients = np.asarray(coefficients, dtype=float)
    n = grid.interior_count
    if coefficients.shape != (n + 3,):
        raise ContractError(f"expected {n + 3} coefficients, got shape {coefficients.shape}")
    x = np.asarray(point, dtype=float)
    h = grid.spacing
    total = np.zeros_like(x)
    # only the four basis functions around the containing cell contribute
    lo = int(np.floor((np.min(x) - grid.left_endpoint) / h)) - 2
    hi = int(np.ceil((np.max(x) - grid.left_endpoint) / h)) + 2
    for m in range(max(lo, -1), min(hi, n + 1) + 1):
        value, _, _ = evaluate_basis(constants, grid, m, x)
        total = total + coefficients[m + 1] * value
    return total if total.ndim else float(total)


def nodal_values(coefficients, eta: float) -> np.ndarray:
    """Spline values at the nodes x_0..x_N from a full coefficient vector."""
    c = np.asarray(coefficients, dtype=float)
    return eta * c[..., :-2] + c[..., 1:-1] + eta * c[..., 2:]


def nodal_first_derivative(coefficients, constants: BasisConstants) -> np.ndarray:
    c = np.asarray(coefficients, dtype=float)
    return constants.slope * (c[..., 2:] - c[..., :-2])


def nodal_second_derivative(coefficients, constants: BasisConstants) -> np.ndarray:
    c = np.asarray(coefficients, dtype=float)
    return constants.eta_bar * (c[..., :-2] - 2.0 * c[..., 1:-1] + c[..., 2:])
