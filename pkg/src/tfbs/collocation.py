"""Exponential B-spline collocation in space, L1 scheme in time.

The unknowns at each time level are the spline coefficients ``R_0..R_N``; the
two ghost coefficients ``R_{-1}`` and ``R_{N+1}`` are eliminated with the
Dirichlet conditions and recovered after every solve. The per-step matrix is
constant, so it is factored once per run.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CompatibilityWarning, ContractError, DomainError, SolverError
from .l1_caputo import L1Weights, history_term, l1_weights
from .spline_basis import BasisConstants, SpatialGrid, basis_constants, nodal_values
from .tridiag import ThomasFactor, thomas_solve

COMPATIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class ProblemSpec:
    """``D_t^mu u = alpha u_xx + beta u_x - gamma u + psi`` on ``(left, right) x (0, horizon]``.

    ``source(x, t)`` and ``initial(x)`` must accept numpy arrays of ``x``;
    the boundary functions take a scalar time.
    """

    diffusion: float
    drift: float
    reaction: float
    source: Callable
    initial: Callable
    left_boundary: Callable
    right_boundary: Callable
    left: float
    right: float
    horizon: float
    initial_deriv: tuple[float, float] | None = None

    def __post_init__(self):
        for name in ("diffusion", "drift", "reaction", "left", "right", "horizon"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.diffusion <= 0:
            raise DomainError(f"diffusion must be positive, got {self.diffusion}")
        if self.reaction <= 0:
            raise DomainError(f"reaction must be positive, got {self.reaction}")
        if self.right <= self.left:
            raise DomainError("right end of the domain must exceed the left end")
        if self.horizon <= 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        for side, x, bc in (("left", self.left, self.left_boundary), ("right", self.right, self.right_boundary)):
            mismatch = abs(float(np.asarray(self.initial(np.array([x])))[0]) - float(bc(0.0)))
            if mismatch > COMPATIBILITY_TOL:
                warnings.warn(
                    f"initial data and {side} boundary data differ by {mismatch:.3g} at t=0",
                    CompatibilityWarning,
                    stacklevel=3,
                )

    def source_at(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.source(x, t), dtype=float), x.shape)

    def initial_at(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.initial(x), dtype=float), x.shape)


@dataclass(frozen=True)
class SchemeCoefficients:
    chi1: float
    chi2: float
    chi3: float
    edge1: float
    edge2: float
    edge3: float
    eta: float
    gamma_factor: float

    def bands(self, size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Lower, main and upper bands of the reduced step matrix."""
        lower = np.full(size, self.chi1)
        diag = np.full(size, self.chi2)
        upper = np.full(size, self.chi3)
        diag[0], upper[0] = self.edge1, self.edge2
        lower[-1], diag[-1] = -self.edge2, self.edge3
        return lower, diag, upper


class CoefficientHistory:
    """Interior coefficient vectors ``R^0..R^n`` and their ghost pairs.

    Storage is preallocated for ``capacity`` levels; consecutive differences
    are kept alongside so the memory term costs one matrix-vector product.
    """

    def __init__(self, size: int, capacity: int):
        self.size = size
        self._steps = np.zeros((capacity, size))
        self._diffs = np.zeros((max(capacity - 1, 1), size))
        self._ghosts = np.zeros((capacity, 2))
        self._count = 0

    def __len__(self) -> int:
        return self._count

    @property
    def steps(self) -> np.ndarray:
        return self._steps[: self._count]

    @property
    def diffs(self) -> np.ndarray:
        return self._diffs[: max(self._count - 1, 0)]

    @property
    def ghosts(self) -> np.ndarray:
        return self._ghosts[: self._count]

    def append(self, interior, ghosts) -> None:
        interior = np.asarray(interior, dtype=float)
        if interior.shape != (self.size,):
            raise ContractError(f"coefficient vector must have length {self.size}, got {interior.shape}")
        if self._count == self._steps.shape[0]:
            raise ContractError("coefficient history is full")
        n = self._count
        self._steps[n] = interior
        self._ghosts[n] = ghosts
        if n:
            self._diffs[n - 1] = interior - self._steps[n - 1]
        self._count += 1

    def full(self, n: int) -> np.ndarray:
        """Coefficients ``R_{-1}..R_{N+1}`` at level ``n``."""
        g = self._ghosts[n]
        return np.concatenate(([g[0]], self._steps[n], [g[1]]))

    def full_all(self) -> np.ndarray:
        return np.hstack([self.ghosts[:, :1], self.steps, self.ghosts[:, 1:]])


@dataclass
class SolveResult:
    grid: SpatialGrid
    time_count: int
    times: np.ndarray
    # values[m, n] approximates u(x_m, t_n)
    values: np.ndarray
    history: CoefficientHistory
    order: float
    tension: float
    basis: BasisConstants
    timings: dict[str, float] = field(default_factory=dict)


def scheme_coefficients(problem: ProblemSpec, basis: BasisConstants, weights: L1Weights) -> SchemeCoefficients:
    alpha, beta, gamma = problem.diffusion, problem.drift, problem.reaction
    g = weights.gamma_factor
    eta = basis.eta
    diff = alpha * g * basis.eta_bar
    adv = beta * g * basis.slope
    chi1 = eta - diff + adv + eta * gamma * g
    chi2 = 1.0 + 2.0 * diff + gamma * g
    chi3 = eta - diff - adv + eta * gamma * g
    edge1 = diff * (2.0 + 1.0 / eta) - adv / eta
    edge2 = -2.0 * adv
    edge3 = diff * (2.0 + 1.0 / eta) + adv / eta
    values = (chi1, chi2, chi3, edge1, edge2, edge3)
    if not all(math.isfinite(v) for v in values):
        raise DomainError("scheme coefficients are not finite")
    return SchemeCoefficients(chi1, chi2, chi3, edge1, edge2, edge3, eta, g)


def end_derivatives(problem: ProblemSpec, grid: SpatialGrid) -> tuple[float, float]:
    """Initial-data slopes at both ends, analytic if supplied.

    Falls back to one-sided fourth-order differences on the grid values
    (lower order on grids with fewer than four intervals).
    """
    if problem.initial_deriv is not None:
        left, right = problem.initial_deriv
        return float(left), float(right)
    z = problem.initial_at(grid.nodes)
    h = grid.spacing
    n = grid.interior_count
    if n >= 4:
        stencil = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
        return float(stencil @ z[:5]), float(-stencil @ z[::-1][:5])
    if n >= 2:
        return float((-3 * z[0] + 4 * z[1] - z[2]) / (2 * h)), float((3 * z[-1] - 4 * z[-2] + z[-3]) / (2 * h))
    return float((z[1] - z[0]) / h), float((z[1] - z[0]) / h)


def solve_initial_state(problem: ProblemSpec, basis: BasisConstants, grid: SpatialGrid):
    """Interpolating coefficients ``R^0`` and the ghost pair at ``t = 0``."""
    n = grid.interior_count
    if n < 1:
        raise ContractError("grid needs at least one interval")
    eta = basis.eta
    slope = basis.slope
    z = problem.initial_at(grid.nodes).astype(float)
    dz_left, dz_right = end_derivatives(problem, grid)

    lower = np.full(n + 1, eta)
    diag = np.ones(n + 1)
    upper = np.full(n + 1, eta)
    upper[0] = 2.0 * eta
    lower[-1] = 2.0 * eta
    rhs = z.copy()
    rhs[0] += eta / slope * dz_left
    rhs[-1] -= eta / slope * dz_right
    r0 = thomas_solve(lower, diag, upper, rhs)

    ghost_left = r0[1] - dz_left / slope
    ghost_right = r0[-2] + dz_right / slope
    return r0, (ghost_left, ghost_right)


def _boundary_series(problem: ProblemSpec, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    left = np.array([float(problem.left_boundary(t)) for t in times])
    right = np.array([float(problem.right_boundary(t)) for t in times])
    return left, right


def _grid_for(problem: ProblemSpec, size: int) -> SpatialGrid:
    return SpatialGrid(problem.left, problem.right, size - 1)


def step(
    problem: ProblemSpec,
    coeffs: SchemeCoefficients,
    weights: L1Weights,
    history: CoefficientHistory,
    n: int,
    *,
    factor: ThomasFactor | None = None,
    boundary: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Advance from level ``n`` to ``n + 1``.

    Returns the full coefficient vector ``R_{-1}..R_{N+1}`` at level
    ``n + 1``. ``factor`` and ``boundary`` (boundary values at ``t_0..t_{n+1}``)
    may be passed to avoid recomputing them every step.
    """
    if len(history) < n + 1:
        raise ContractError(f"history holds {len(history)} levels, step {n} needs {n + 1}")
    size = history.size
    grid = _grid_for(problem, size)
    eta = coeffs.eta
    g = coeffs.gamma_factor
    t_next = (n + 1) * weights.time_step

    if factor is None:
        factor = ThomasFactor(*coeffs.bands(size))
    if boundary is None:
        boundary = _boundary_series(problem, weights.time_step * np.arange(n + 2))
    h_vals, g_vals = boundary[0][: n + 2], boundary[1][: n + 2]

    memory = history_term(weights, history, n)
    rhs = g * problem.source_at(grid.nodes, t_next).copy()
    rhs[1:-1] += eta * memory[:-2] + memory[1:-1] + eta * memory[2:]
    rhs[0] += history_term(weights, h_vals, n) - coeffs.chi1 / eta * h_vals[n + 1]
    rhs[-1] += history_term(weights, g_vals, n) - coeffs.chi3 / eta * g_vals[n + 1]

    r = factor.solve(rhs)
    ghost_left = (h_vals[n + 1] - r[0] - eta * r[1]) / eta
    ghost_right = (g_vals[n + 1] - r[-1] - eta * r[-2]) / eta
    out = np.concatenate(([ghost_left], r, [ghost_right]))
    if not np.all(np.isfinite(out)):
        raise SolverError("non-finite coefficients", step=n + 1)
    return out


def solve(problem: ProblemSpec, grid: SpatialGrid, time_count: int, order: float, tension: float) -> SolveResult:
    """March the scheme over ``time_count`` uniform steps on ``[0, horizon]``."""
    if int(time_count) != time_count or time_count < 1:
        raise DomainError(f"time_count must be a positive integer, got {time_count}")
    if not (
        math.isclose(grid.left_endpoint, problem.left, rel_tol=0, abs_tol=1e-12)
        and math.isclose(grid.right_endpoint, problem.right, rel_tol=0, abs_tol=1e-12)
    ):
        raise ContractError("grid bounds do not match the problem domain")
    timings = {}
    clock = time.perf_counter()

    time_count = int(time_count)
    h_t = problem.horizon / time_count
    times = h_t * np.arange(time_count + 1)
    basis = basis_constants(tension, grid.spacing)
    weights = l1_weights(order, time_count, h_t)
    coeffs = scheme_coefficients(problem, basis, weights)
    size = grid.interior_count + 1
    factor = ThomasFactor(*coeffs.bands(size))
    boundary = _boundary_series(problem, times)
    timings["setup"] = time.perf_counter() - clock

    clock = time.perf_counter()
    history = CoefficientHistory(size, time_count + 1)
    r0, ghosts0 = solve_initial_state(problem, basis, grid)
    history.append(r0, ghosts0)
    timings["initial_state"] = time.perf_counter() - clock

    clock = time.perf_counter()
    for n in range(time_count):
        full = step(problem, coeffs, weights, history, n, factor=factor, boundary=boundary)
        history.append(full[1:-1], (full[0], full[-1]))
    timings["march"] = time.perf_counter() - clock

    clock = time.perf_counter()
    values = nodal_values(history.full_all(), basis.eta).T.copy()
    values[0, 1:] = boundary[0][1:]
    values[-1, 1:] = boundary[1][1:]
    if not np.all(np.isfinite(values)):
        bad = int(np.argwhere(~np.isfinite(values))[0, 1])
        raise SolverError("non-finite solution values", step=bad)
    timings["reconstruct"] = time.perf_counter() - clock

    return SolveResult(
        grid=grid,
        time_count=time_count,
        times=times,
        values=values,
        history=history,
        order=float(order),
        tension=float(tension),
        basis=basis,
        timings=timings,
    )


def collocation_residual(problem: ProblemSpec, result: SolveResult, n: int) -> float:
    """Relative residual of the unreduced collocation system at level ``n + 1``.

    Substitutes the stored full coefficient vectors (ghosts included) into the
    collocation equations at every node and into both Dirichlet conditions.
    The memory term uses spline values at the end nodes, so the residual only
    vanishes when the initial data already meets the boundary data at t=0.
    """
    grid = result.grid
    basis = result.basis
    weights = l1_weights(result.order, result.time_count, problem.horizon / result.time_count)
    coeffs = scheme_coefficients(problem, basis, weights)
    eta = basis.eta
    full = result.history.full_all()[: n + 2]
    u_nodes = nodal_values(full, eta)

    new = full[n + 1]
    lhs = coeffs.chi1 * new[:-2] + coeffs.chi2 * new[1:-1] + coeffs.chi3 * new[2:]
    memory = history_term(weights, u_nodes[: n + 1], n)
    psi = coeffs.gamma_factor * problem.source_at(grid.nodes, result.times[n + 1])
    rows = lhs - memory - psi
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(memory)), np.max(np.abs(psi)), 1e-300)

    t = result.times[n + 1]
    bc_left = u_nodes[n + 1, 0] - problem.left_boundary(t)
    bc_right = u_nodes[n + 1, -1] - problem.right_boundary(t)
    bc_scale = max(abs(problem.left_boundary(t)), abs(problem.right_boundary(t)), np.max(np.abs(new)), 1e-300)
    return max(np.max(np.abs(rows)) / scale, abs(bc_left) / bc_scale, abs(bc_right) / bc_scale)
