"""Error norms, empirical convergence orders and stability diagnostics."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .collocation import ProblemSpec, SolveResult, solve
from .errors import DomainError
from .l1_caputo import L1Weights
from .problems import ManufacturedProblem
from .spline_basis import BasisConstants, SpatialGrid

TABLE_COLUMNS = ("example", "mu", "rho", "N_x", "N_t", "L2", "EOC_L2", "Linf", "EOC_Linf", "runtime_ms")


@dataclass(frozen=True)
class ErrorReport:
    l_inf: float
    l_2: float
    grid_params: tuple[int, int, float, float]  # (N_x, N_t, mu, rho)
    runtime: float  # seconds


def error_norms(result: SolveResult, exact: Callable) -> ErrorReport:
    """Max-in-time L-infinity and discrete L2 errors over interior nodes.

    Boundary nodes carry exact Dirichlet data and the initial level is exact
    interpolation, so both are excluded.
    """
    grid = result.grid
    x = grid.nodes
    reference = np.column_stack([np.broadcast_to(exact(x, t), x.shape) for t in result.times])
    err = np.abs(reference - result.values)[1:-1, 1:]
    if err.size == 0:
        l_inf = l_2 = 0.0
    else:
        l_inf = float(err.max())
        l_2 = float(np.sqrt(grid.spacing * np.sum(err**2, axis=0)).max())
    return ErrorReport(
        l_inf=l_inf,
        l_2=l_2,
        grid_params=(grid.interior_count, result.time_count, result.order, result.tension),
        runtime=sum(result.timings.values()),
    )


def eoc_from_errors(errors: Sequence[float]) -> list[float]:
    """``log2(e_k / e_{k+1})`` for consecutive halvings."""
    errors = [float(e) for e in errors]
    if len(errors) < 2:
        raise DomainError("at least two errors are needed for a convergence order")
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]


@dataclass(frozen=True)
class LadderRow:
    nx: int
    nt: int
    l_2: float
    l_inf: float
    eoc_l2: float | None
    eoc_linf: float | None
    runtime: float


@dataclass
class EOCLadder:
    direction: str  # "time" or "space"
    example: str
    order: float
    tension: float
    rows: list[LadderRow] = field(default_factory=list)

    @property
    def eoc_l2(self) -> list[float]:
        return [r.eoc_l2 for r in self.rows[1:]]

    @property
    def eoc_linf(self) -> list[float]:
        return [r.eoc_linf for r in self.rows[1:]]


def _run_level(problem: ManufacturedProblem, nx: int, nt: int, tension: float) -> ErrorReport:
    spec = problem.spec
    grid = SpatialGrid(spec.left, spec.right, nx)
    clock = time.perf_counter()
    result = solve(spec, grid, nt, problem.order, tension)
    report = error_norms(result, problem.exact)
    return ErrorReport(report.l_inf, report.l_2, report.grid_params, time.perf_counter() - clock)


def eoc_ladder(
    problem: ManufacturedProblem,
    direction: str,
    fixed: int,
    levels: Sequence[int],
    tension: float,
    jobs: int | None = None,
) -> EOCLadder:
    """Refine one dimension through ``levels`` holding the other at ``fixed``.

    ``direction`` is ``"time"`` (levels are N_t) or ``"space"`` (levels are
    N_x). Each level must double the previous one. Levels are solved
    concurrently on up to ``jobs`` threads; rows keep level order.
    """
    if direction not in ("time", "space"):
        raise DomainError(f"direction must be 'time' or 'space', got {direction!r}")
    levels = [int(v) for v in levels]
    if len(levels) < 2:
        raise DomainError("a convergence ladder needs at least two levels")
    for a, b in zip(levels, levels[1:]):
        if b != 2 * a:
            raise DomainError(f"ladder levels must double each time, got {a} then {b}")
    if direction == "time":
        sizes = [(int(fixed), nt) for nt in levels]
    else:
        sizes = [(nx, int(fixed)) for nx in levels]

    with ThreadPoolExecutor(max_workers=max(1, jobs or 1)) as pool:
        reports = list(pool.map(lambda s: _run_level(problem, s[0], s[1], tension), sizes))

    eoc2 = [None] + eoc_from_errors([r.l_2 for r in reports])
    eocinf = [None] + eoc_from_errors([r.l_inf for r in reports])
    ladder = EOCLadder(direction, str(problem.example_id), problem.order, float(tension))
    for (nx, nt), rep, e2, ei in zip(sizes, reports, eoc2, eocinf):
        ladder.rows.append(LadderRow(nx, nt, rep.l_2, rep.l_inf, e2, ei, rep.runtime))
    return ladder


def _sci(value: float | None) -> str:
    return "" if value is None else f"{value:.5e}"


def table_report(ladders: Sequence[EOCLadder], timings: bool = True) -> str:
    """CSV text with one row per ladder level, header first.

    With ``timings=False`` the runtime column is left empty so the output is
    reproducible byte for byte.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for ladder in ladders:
        for row in ladder.rows:
            writer.writerow(
                [
                    ladder.example,
                    _sci(ladder.order),
                    _sci(ladder.tension),
                    row.nx,
                    row.nt,
                    _sci(row.l_2),
                    _sci(row.eoc_l2),
                    _sci(row.l_inf),
                    _sci(row.eoc_linf),
                    _sci(row.runtime * 1e3) if timings else "",
                ]
            )
    return buf.getvalue()


def amplification_margin(
    problem: ProblemSpec, basis: BasisConstants, weights: L1Weights, wave_numbers
) -> float:
    """Smallest value of ``(Y1+Y2+Y3)^2 + Y4^2 - Y1^2`` over the wave numbers.

    A positive margin means every Fourier mode of the constant-coefficient
    interior recursion is damped by the implicit step.
    """
    theta = np.asarray(wave_numbers, dtype=float) * basis.spacing
    g = weights.gamma_factor
    cos = np.cos(theta)
    y1 = 1.0 + 2.0 * basis.eta * cos
    y2 = 2.0 * problem.diffusion * g * basis.eta_bar * (1.0 - cos)
    y3 = problem.reaction * g * y1
    y4 = 2.0 * problem.drift * g * basis.slope * np.sin(theta)
    margin = (y1 + y2 + y3) ** 2 + y4**2 - y1**2
    return float(np.min(margin))


def perturbation_growth(
    problem: ProblemSpec,
    grid: SpatialGrid,
    time_count: int,
    order: float,
    tension: float,
    delta: float = 1e-6,
    seed: int = 0,
) -> float:
    """Worst ratio of later to initial perturbation of the interior coefficients.

    The run is repeated with the initial data perturbed by ``delta`` times
    uniform noise at the nodes; a ratio at most 1 means perturbations never
    grow.
    """
    rng = np.random.default_rng(seed)
    noise = delta * rng.uniform(-1.0, 1.0, grid.interior_count + 1)
    nodes = grid.nodes

    def perturbed_initial(x):
        base = np.asarray(problem.initial(x), dtype=float)
        x = np.asarray(x, dtype=float)
        bump = np.interp(x, nodes, noise)
        return base + bump

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        twin = dataclasses.replace(problem, initial=perturbed_initial)
    base = solve(problem, grid, time_count, order, tension).history.steps
    other = solve(twin, grid, time_count, order, tension).history.steps
    diff = np.max(np.abs(base - other), axis=1)
    return float(np.max(diff[1:]) / diff[0])
