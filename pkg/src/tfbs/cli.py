"""Command-line interface.

Four commands: ``solve``, ``converge``, ``price`` and ``stability``. Options
may also come from a config file given with ``--config``. The file holds one
``key = value`` pair per line, keys spelled like the long flags without the
dashes (``nt-ladder = 10,20,40``); ``#`` starts a comment, and an optional
``command = ...`` line selects the command. Flags on the command line win
over the file.

Exit status: 0 success, 2 invalid configuration, 3 solver failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .collocation import solve
from .convergence import amplification_margin, eoc_ladder, perturbation_growth, table_report
from .errors import BasisRangeError, CompatibilityWarning, ContractError, DomainError, SolverError
from .l1_caputo import l1_weights
from .problems import OPTION_KINDS, OptionModel, example_problem, from_log_space, to_log_space
from .spline_basis import SpatialGrid, basis_constants

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("solve", "converge", "price", "stability")
PERTURBATION_TOL = 1e-8

# standard market parameters for the option examples
OPTION_DEFAULTS = {
    "call": dict(sigma=0.55, rate=0.05, dividend=0.0, strike=50.0, expiry=1.0, xi_min=0.1, xi_max=100.0),
    "put": dict(sigma=0.55, rate=0.05, dividend=0.0, strike=50.0, expiry=1.0, xi_min=0.1, xi_max=100.0),
    "double_barrier_call": dict(sigma=0.55, rate=0.03, dividend=0.01, strike=10.0, expiry=1.0, xi_min=3.0, xi_max=15.0),
}


@dataclass
class RunConfig:
    command: str
    example: int | None = None
    kind: str | None = None
    mu: list[float] = field(default_factory=list)
    rho: float = 1.5
    nx: int | None = None
    nt: int | None = None
    nx_ladder: list[int] | None = None
    nt_ladder: list[int] | None = None
    sigma: float | None = None
    rate: float | None = None
    dividend: float | None = None
    strike: float | None = None
    expiry: float | None = None
    xi_min: float | None = None
    xi_max: float | None = None
    output: str = "-"
    seed: int = 0
    jobs: int | None = None
    timings: bool = False
    surface: bool = False
    waves: int = 1000
    delta: float = 1e-6

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        values = {f.name: getattr(ns, f.name) for f in fields(cls) if hasattr(ns, f.name)}
        mu = values.get("mu")
        values["mu"] = list(mu) if isinstance(mu, list) else [mu]
        return cls(**values)


class ConfigError(Exception):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"invalid value for '{key}': {message}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(self.prog.split()[-1], message)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _default_jobs() -> int:
    env = os.environ.get("TFBS_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("TFBS_JOBS", f"not an integer: {env!r}") from None
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tfbs", description="Exponential B-spline solver for the time-fractional Black-Scholes equation")
    parser.add_argument("--config", help="key = value file with defaults for the flags")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--output", "-o", default="-", help="output file ('-' for stdout)")
        p.add_argument("--jobs", type=int, default=None, help="worker threads (default: TFBS_JOBS or CPU count)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--rho", type=float, default=1.5, help="spline tension")

    p = sub.add_parser("solve", help="solve a manufactured example, write the solution surface")
    common(p)
    p.add_argument("--example", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--nt", type=int, required=True)

    p = sub.add_parser("converge", help="convergence ladder in time or space")
    common(p)
    p.add_argument("--example", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--mu", type=_float_list, required=True, help="order, or comma list of orders")
    p.add_argument("--nx", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--nx-ladder", type=_int_list)
    p.add_argument("--nt-ladder", type=_int_list)
    p.add_argument("--timings", action=argparse.BooleanOptionalAction, default=False,
                   help="fill the runtime_ms column (output is then not reproducible)")

    p = sub.add_parser("price", help="price curves for a European option")
    common(p)
    p.add_argument("--kind", required=True, choices=OPTION_KINDS)
    p.add_argument("--mu", type=_float_list, required=True, help="order, or comma list of orders")
    p.add_argument("--nx", type=int, default=100)
    p.add_argument("--nt", type=int, default=100)
    for name in ("sigma", "rate", "dividend", "strike", "expiry", "xi-min", "xi-max"):
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--surface", action=argparse.BooleanOptionalAction, default=False,
                   help="write every time level instead of the present-value curve")

    p = sub.add_parser("stability", help="amplification margin and perturbation test")
    common(p)
    sel = p.add_mutually_exclusive_group(required=True)
    sel.add_argument("--example", type=int, choices=(1, 2, 3))
    sel.add_argument("--kind", choices=OPTION_KINDS)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--nx", type=int, default=50)
    p.add_argument("--nt", type=int, default=50)
    p.add_argument("--waves", type=int, default=1000, help="number of sampled wave numbers")
    p.add_argument("--delta", type=float, default=1e-6, help="size of the initial perturbation")
    return parser


def read_config(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", "expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("_", "-")] = value
    return values


def _config_argv(values: dict[str, str]) -> list[str]:
    argv = []
    for key, value in values.items():
        low = value.lower()
        if low in ("true", "yes", "on"):
            argv.append(f"--{key}")
        elif low in ("false", "no", "off"):
            argv.append(f"--no-{key}")
        else:
            argv.extend([f"--{key}", value])
    return argv


def parse_args(argv: list[str]) -> RunConfig:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    file_argv: list[str] = []
    command = next((tok for tok in rest if tok in COMMANDS), None)
    if known.config:
        values = read_config(known.config)
        file_command = values.pop("command", None)
        command = command or file_command
        if command is None:
            raise ConfigError("command", "no command given on the command line or in the config file")
        if command not in COMMANDS:
            raise ConfigError("command", f"unknown command {command!r}")
        file_argv = _config_argv(values)
    if command is None:
        raise ConfigError("command", f"choose one of {', '.join(COMMANDS)}")
    rest = [tok for tok in rest if tok != command]
    return RunConfig.from_namespace(build_parser().parse_args([command] + file_argv + rest))


def _check(args: RunConfig) -> None:
    if args.command not in COMMANDS:
        raise ConfigError("command", f"unknown command {args.command!r}")
    mus = args.mu
    if not mus:
        raise ConfigError("mu", "at least one order is required")
    for mu in mus:
        if not 0.0 < mu <= 1.0:
            raise ConfigError("mu", f"{mu} is outside (0, 1]")
    if args.rho <= 0:
        raise ConfigError("rho", "tension must be positive")
    for key in ("nx", "nt", "waves"):
        val = getattr(args, key)
        if val is not None and val < 1:
            raise ConfigError(key, "must be a positive integer")
    if args.jobs is not None and args.jobs < 1:
        raise ConfigError("jobs", "must be a positive integer")
    if args.command in ("solve", "stability") and len(mus) != 1:
        raise ConfigError("mu", f"'{args.command}' takes a single order")
    if args.command == "solve":
        for key in ("example", "nx", "nt"):
            if getattr(args, key) is None:
                raise ConfigError(key, "required for 'solve'")
    if args.command in ("price", "stability"):
        for key in ("nx", "nt"):
            if getattr(args, key) is None:
                raise ConfigError(key, f"required for '{args.command}'")
    if args.command == "price" and args.kind not in OPTION_KINDS:
        raise ConfigError("kind", f"choose one of {', '.join(OPTION_KINDS)}")
    if args.command == "stability" and (args.example is None) == (args.kind is None):
        raise ConfigError("example", "give exactly one of --example and --kind")
    if args.example is not None and args.example not in (1, 2, 3):
        raise ConfigError("example", f"unknown example {args.example}")
    if args.command == "converge":
        if args.example is None:
            raise ConfigError("example", "required for 'converge'")
        if (args.nx_ladder is None) == (args.nt_ladder is None):
            raise ConfigError("nt-ladder", "give exactly one of --nx-ladder and --nt-ladder")
        ladder_key = "nt-ladder" if args.nt_ladder is not None else "nx-ladder"
        ladder = args.nt_ladder if args.nt_ladder is not None else args.nx_ladder
        fixed_key = "nx" if args.nt_ladder is not None else "nt"
        if len(ladder) < 2:
            raise ConfigError(ladder_key, "a ladder needs at least two levels")
        if any(b != 2 * a for a, b in zip(ladder, ladder[1:])) or min(ladder) < 1:
            raise ConfigError(ladder_key, "levels must be positive and double each time")
        if getattr(args, fixed_key) is None:
            raise ConfigError(fixed_key, f"required with --{ladder_key}")


def _format(v: float) -> str:
    return f"{v:.5e}"


def _write(output: str, text: str) -> None:
    if output == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _cmd_solve(args) -> str:
    mu = args.mu[0]
    problem = example_problem(args.example, mu)
    grid = SpatialGrid(problem.spec.left, problem.spec.right, args.nx)
    result = solve(problem.spec, grid, args.nt, mu, args.rho)
    rows = []
    for n, t in enumerate(result.times):
        exact = np.broadcast_to(problem.exact(grid.nodes, t), grid.nodes.shape)
        for m, x in enumerate(grid.nodes):
            u = result.values[m, n]
            rows.append([_format(x), _format(t), _format(u), _format(exact[m]), _format(abs(u - exact[m]))])
    return _csv(("x", "t", "u", "exact", "abs_error"), rows)


def _cmd_converge(args) -> str:
    jobs = args.jobs or _default_jobs()
    if args.nt_ladder is not None:
        direction, fixed, levels = "time", args.nx, args.nt_ladder
    else:
        direction, fixed, levels = "space", args.nt, args.nx_ladder
    ladders = [
        eoc_ladder(example_problem(args.example, mu), direction, fixed, levels, args.rho, jobs=jobs)
        for mu in args.mu
    ]
    return table_report(ladders, timings=args.timings)


def _option_model(args) -> OptionModel:
    base = dict(OPTION_DEFAULTS[args.kind])
    for key in base:
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    checks = (
        ("sigma", base["sigma"] > 0, "must be positive"),
        ("strike", base["strike"] > 0, "must be positive"),
        ("expiry", base["expiry"] > 0, "must be positive"),
        ("dividend", base["dividend"] >= 0, "must be non-negative"),
        ("xi-min", base["xi_min"] > 0, "must be positive"),
        ("xi-max", base["xi_max"] > base["xi_min"], "must exceed xi-min"),
    )
    for key, ok, message in checks:
        if not ok:
            raise ConfigError(key, message)
    try:
        return OptionModel(
            volatility=base["sigma"],
            rate=base["rate"],
            strike=base["strike"],
            expiry=base["expiry"],
            price_bounds=(base["xi_min"], base["xi_max"]),
            kind=args.kind,
            dividend_yield=base["dividend"],
        )
    except DomainError as exc:
        raise ConfigError("option", str(exc)) from None


def _cmd_price(args) -> str:
    model = _option_model(args)
    jobs = args.jobs or _default_jobs()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CompatibilityWarning)
        spec = to_log_space(model)
    grid = SpatialGrid(spec.left, spec.right, args.nx)

    def price_one(mu):
        return from_log_space(solve(spec, grid, args.nt, mu, args.rho), model)

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        surfaces = list(pool.map(price_one, args.mu))
    rows = []
    for mu, surf in zip(args.mu, surfaces):
        columns = range(len(surf.time_nodes)) if args.surface else [0]
        for n in columns:
            for m, xi in enumerate(surf.price_nodes):
                rows.append([_format(mu), _format(xi), _format(surf.time_nodes[n]), _format(surf.prices[m, n])])
    return _csv(("mu", "xi", "tau", "V"), rows)


def _cmd_stability(args) -> str:
    mu = args.mu[0]
    if args.example is not None:
        spec = example_problem(args.example, mu).spec
        label = f"example {args.example}"
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CompatibilityWarning)
            spec = to_log_space(_option_model(args))
        label = args.kind
    grid = SpatialGrid(spec.left, spec.right, args.nx)
    basis = basis_constants(args.rho, grid.spacing)
    weights = l1_weights(mu, args.nt, spec.horizon / args.nt)
    waves = np.linspace(0.0, np.pi / grid.spacing, args.waves + 1)[1:]
    margin = amplification_margin(spec, basis, weights, waves)
    growth = perturbation_growth(spec, grid, args.nt, mu, args.rho, delta=args.delta, seed=args.seed)
    verdict = "PASS" if margin > 0 and growth <= 1.0 + PERTURBATION_TOL else "FAIL"
    return (
        f"problem: {label}\n"
        f"mu: {mu}\n"
        f"min amplification margin: {margin:.6e}\n"
        f"max perturbation ratio: {growth:.6e}\n"
        f"perturbation decay: {verdict}\n"
    )


_HANDLERS = {"solve": _cmd_solve, "converge": _cmd_converge, "price": _cmd_price, "stability": _cmd_stability}


def run(config: RunConfig | list[str] | None = None) -> int:
    """Execute one command; ``config`` is a RunConfig or an argument list."""
    try:
        if isinstance(config, RunConfig):
            args = config
        else:
            args = parse_args(sys.argv[1:] if config is None else list(config))
        _check(args)
        text = _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"tfbs: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ContractError, BasisRangeError) as exc:
        print(f"tfbs: error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"tfbs: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"tfbs: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        _write(args.output, text)
    except OSError as exc:
        print(f"tfbs: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())
