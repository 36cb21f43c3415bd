"""
Command Line Interface for the scl-entropy package
"""

import argparse
import asyncio
import json
import logging
import math
import os
import sys
from typing import Any, Dict, List, Optional

from . import __version__
from .cover import cover_solution_set
from .errors import (
    ClassError,
    ConfigError,
    CoverageFailure,
    DegenerateError,
    DomainError,
    KindError,
    ParamError,
    RangeError,
    StallError,
    SupportError,
)
from .experiments import ExperimentConfig, entropy_scan_async, run_verification, sample_family
from .flux_analysis import (
    REGISTERED_FLUXES,
    FluxModel,
    estimate_constants,
    fitted_exponent,
    flux_from_spec,
    format_constants,
)
from .lower_bound import (
    analytic_lower_bound,
    build_witness_family,
    check_family_separation,
    roundtrip_error,
)
from .solver import PiecewiseConstantFn, WaveType, evolve, riemann
from .utils import (
    create_progress_callback,
    format_duration,
    format_log2,
    load_experiment_config,
    load_function,
    report_rows_for_display,
    save_flux_spec,
    save_function,
    save_json,
    validate_flux_spec,
)

LOG_LEVEL_ENV = "SCL_ENTROPY_LOG_LEVEL"

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2

CONFIG_ERRORS = (ConfigError, ParamError, DomainError, KindError, RangeError, SupportError,
                 DegenerateError, ClassError, FileNotFoundError)


def configure_logging(verbose: bool = False, quiet: bool = False):
    """Log level from --verbose/--quiet, else SCL_ENTROPY_LOG_LEVEL (default WARNING)."""
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.ERROR
    else:
        level = getattr(logging, os.environ.get(LOG_LEVEL_ENV, "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger("scl_entropy").setLevel(level)


def _parse_json_or_file(arg: str, what: str) -> Any:
    text = arg.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid inline JSON for {what}: {e}")
    if not os.path.exists(arg):
        raise FileNotFoundError(f"{what} file not found: {arg}")
    with open(arg, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in {arg}: {e}")


def parse_flux_argument(flux_arg: str, M: Optional[float] = None) -> FluxModel:
    """Parse a flux argument: a registered name (e.g. 'burgers', 'monomial:4'), inline JSON or a file."""
    name = flux_arg.strip().lower()
    base, _, order = name.partition(":")
    if base in REGISTERED_FLUXES or base == "-cubic":
        spec: Dict[str, Any] = {"name": base.lstrip("-")}
        if base.startswith("-"):
            spec["mirrored"] = True
        if order:
            try:
                spec["m"] = int(order)
            except ValueError:
                raise ConfigError(f"Invalid monomial order in '{flux_arg}'")
        if M is not None:
            spec["M"] = M
        return flux_from_spec(spec)
    spec = _parse_json_or_file(flux_arg, "Flux specification")
    is_valid, error_msg = validate_flux_spec(spec)
    if not is_valid:
        raise ConfigError(f"Invalid flux specification: {error_msg}")
    return flux_from_spec(spec, M=M)


def parse_function_argument(arg: str) -> PiecewiseConstantFn:
    """Parse a step function given as inline JSON or a file path."""
    text = arg.strip()
    if text.startswith("{"):
        data = _parse_json_or_file(arg, "Function")
        return PiecewiseConstantFn.from_dict(data)
    return load_function(arg)


def _print_header(flux: FluxModel):
    print(f"📋 Flux: {flux.name} ({flux.kind.value}, m={flux.m}, M={flux.M})")


# --- Subcommands ---

def cmd_constants(args) -> int:
    flux = parse_flux_argument(args.flux, args.M)
    _print_header(flux)
    constants = estimate_constants(flux, grid_n=args.grid)
    exponent = fitted_exponent(flux)
    print(f"\n📊 Flux constants:")
    for key, value in format_constants(constants).items():
        if value is not None:
            print(f"   {key}: {value}")
    print(f"   fitted Delta exponent: {exponent:.4f}")
    if args.output:
        save_json({"flux": flux.to_spec(), "constants": constants.to_dict(), "fitted_exponent": exponent},
                  args.output)
        print(f"   Results saved to: {args.output}")
    if args.save_flux:
        save_flux_spec(flux, args.save_flux)
        print(f"   Flux specification saved to: {args.save_flux}")
    return EXIT_OK


def cmd_riemann(args) -> int:
    flux = parse_flux_argument(args.flux, args.M)
    _print_header(flux)
    delta = args.delta if args.delta is not None else 1e-3 * flux.M
    fan = riemann(flux, args.left, args.right, delta, method=args.method)
    print(f"\n📊 Riemann fan ({args.left} -> {args.right}): {len(fan.waves)} waves")
    shocks = fan.shocks
    rarefaction = [w for w in fan.waves if w.type is WaveType.RAREFACTION_PIECE]
    for wave in shocks:
        print(f"   shock {wave.left_state:.6g} -> {wave.right_state:.6g} at speed {wave.speed:.6g}")
    if rarefaction:
        print(f"   rarefaction {rarefaction[0].left_state:.6g} -> {rarefaction[-1].right_state:.6g} "
              f"in {len(rarefaction)} pieces, speeds {rarefaction[0].speed:.6g} .. {rarefaction[-1].speed:.6g}")
    if args.output:
        save_json(fan.to_dict(), args.output)
        print(f"   Results saved to: {args.output}")
    return EXIT_OK


def cmd_solve(args) -> int:
    flux = parse_flux_argument(args.flux, args.M)
    _print_header(flux)
    u0 = parse_function_argument(args.initial)
    print(f"🚀 Evolving {u0.n_cells} cells to T = {args.T}...")
    u = evolve(flux, u0, args.T, delta=args.delta, max_interactions=args.max_interactions)
    support = u.support()
    print(f"\n📊 Solution at T = {args.T}:")
    print(f"   Cells: {u.n_cells}")
    print(f"   Support: {support if support is not None else 'empty'}")
    print(f"   Mass: {u.integral():.12g} (initial {u0.integral():.12g})")
    print(f"   Sup norm: {u.sup_norm():.6g}")
    for x in args.at or []:
        print(f"   u({x:g}) = {float(u(x)):.6g}")
    if args.output:
        save_function(u, args.output)
        print(f"   Results saved to: {args.output}")
    return EXIT_OK


def cmd_cover(args) -> int:
    flux = parse_flux_argument(args.flux, args.M)
    _print_header(flux)
    M = flux.M
    data = sample_family(args.L, M, args.pieces, args.seed, args.samples, args.sign)
    progress = None if args.quiet else create_progress_callback(description="evolve")
    evolved = []
    for i, u0 in enumerate(data):
        evolved.append(evolve(flux, u0, args.T, delta=args.delta))
        if progress:
            progress(f"sample {i + 1}", i + 1, len(data))
    print(f"🚀 Covering {len(evolved)} solutions at eps = {args.eps}...")
    try:
        report = cover_solution_set(flux, args.L, M, args.T, args.eps, evolved)
    except CoverageFailure as e:
        print(f"❌ {e}")
        print(f"   Uncovered samples: {e.uncovered}")
        if args.output and e.report is not None:
            save_json(e.report.to_dict(), args.output)
        return EXIT_VIOLATION
    print(f"\n📊 Cover summary:")
    print(f"   Covered: {report.covered}/{report.samples} (max error {report.max_error:.4g})")
    print(f"   Grid: N = {report.N}, eps' = {report.eps_prime:.4g}, l = {report.l:.4g}, V = {report.V:.4g}")
    print(f"   Distinct elements used: {report.realized_count} ({format_log2(report.realized_log2)})")
    print(f"   Construction size: {format_log2(report.construction_log2)}")
    print(f"   Analytic upper bound: {report.analytic_bound if report.analytic_bound is not None else 'n/a'}")
    if report.calibrated_V:
        print(f"⚠️  V was raised to cover the sampled flux variation")
    if args.output:
        save_json(report.to_dict(), args.output)
        print(f"   Results saved to: {args.output}")
    print(f"✅ Every sample lies within eps of its cover element")
    return EXIT_OK


def cmd_lower_bound(args) -> int:
    flux = parse_flux_argument(args.flux, args.M)
    _print_header(flux)
    family = build_witness_family(flux, args.L, flux.M, args.T, args.eps, n_cells=args.cells,
                                  delta=args.delta, which=args.side)
    print(f"\n📊 Witness family:")
    print(f"   Teeth: {family.n_cells} of height {family.tooth_height:.4g}, area {family.tooth_area:.4g}")
    print(f"   Codewords kept: {format_log2(family.separated_log2)}")
    print(f"   Certified entropy lower bound: {family.certified_log2:.4f} bits")
    try:
        analytic = analytic_lower_bound(flux, args.L, flux.M, args.T, args.eps)
        print(f"   Analytic lower bound: {analytic:.6g}")
    except (ParamError, DegenerateError) as e:
        analytic = None
        print(f"⚠️  Analytic lower bound unavailable: {e}")
    result: Dict[str, Any] = {"family": family.to_dict(), "analytic_lower": analytic}
    code = EXIT_OK
    if args.check:
        separated, smallest = check_family_separation(family)
        print(f"   Smallest pairwise distance: {smallest:.6g} (needs > {2 * args.eps:.6g})")
        errors = []
        for word, v in family.iter_witnesses(args.roundtrips):
            error, allowance = roundtrip_error(flux, v, family.class_spec, args.T, delta=family.delta)
            errors.append({"codeword": word, "error": error, "allowance": allowance})
        worst = max((e["error"] - e["allowance"] for e in errors), default=-math.inf)
        result.update({"separated": separated, "smallest_distance": smallest, "roundtrips": errors})
        if separated and worst <= 0.0:
            print(f"✅ Family is 2 eps-separated and {len(errors)} witnesses are reached from their data")
        else:
            print(f"❌ Witness check failed (separated={separated}, worst round-trip excess {worst:.3g})")
            code = EXIT_VIOLATION
    if args.output:
        save_json(result, args.output)
        print(f"   Results saved to: {args.output}")
    return code


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        config = load_experiment_config(args.config)
        print(f"📋 Using experiment configuration from file: {args.config}")
    else:
        if not args.flux:
            raise ConfigError("entropy-scan needs --config or --flux")
        flux = parse_flux_argument(args.flux)
        spec = flux.to_spec()
        spec.pop("M", None)
        config = ExperimentConfig(
            flux=spec,
            L=args.L,
            M=args.M if args.M is not None else 1.0,
            T=args.T,
            eps_grid=args.eps or [],
            samples=args.samples,
            pieces=args.pieces,
            seed=args.seed,
            delta=args.delta,
            sign=args.sign,
        )
    if args.csv:
        config.output_csv = args.csv
    if args.json:
        config.output_json = args.json
    return config


async def cmd_entropy_scan(args) -> int:
    config = _config_from_args(args)
    progress = None if args.quiet else create_progress_callback(description="entropy-scan")
    print(f"🚀 Starting entropy scan: {config.samples} samples, {len(config.eps_grid)} eps values...")
    report = await entropy_scan_async(config, progress_callback=progress, workers=args.workers)
    print(f"\n🎉 Scan completed in {format_duration(report.metadata['processing_time_seconds'])}")
    print(f"\n📊 Bounds per eps (log2 counts):")
    print(f"   {'eps':>10} {'packing':>8} {'cover':>8} {'witness':>8} {'upper':>12} {'lower':>12}")
    for row in report_rows_for_display(report):
        print(f"   {row['eps']:>10g} {row['packing_log2']:>8.3f} {row['cover_log2']:>8.3f} "
              f"{_cell(row['witness_log2'])} {_cell(row['analytic_upper'], 12)} {_cell(row['analytic_lower'], 12)}")
    print(f"\n📊 Fitted slopes vs log(1/eps):")
    for name, slope in report.slopes.items():
        print(f"   {name}: {'n/a' if not math.isfinite(slope) else f'{slope:.4f}'}")
    if config.output_csv:
        print(f"   CSV saved to: {config.output_csv}")
    if config.output_json:
        print(f"   JSON saved to: {config.output_json}")
    if not report.consistent:
        print(f"❌ Packing exceeds cover in some row")
        return EXIT_VIOLATION
    return EXIT_OK


def _cell(value: Optional[float], width: int = 8) -> str:
    return f"{'n/a':>{width}}" if value is None else f"{value:>{width}.4g}"


def cmd_verify(args) -> int:
    flux = parse_flux_argument(args.flux, args.M)
    _print_header(flux)
    progress = None if args.quiet else create_progress_callback(description="verify")
    print(f"🚀 Running verification on {args.samples} samples...")
    report = run_verification(flux, args.L, args.T, samples=args.samples, pieces=args.pieces, seed=args.seed,
                              delta=args.delta, riemann_trials=args.riemann_trials, progress_callback=progress)
    print(f"\n📊 Verification results:")
    for check in report.checks:
        mark = "✅" if check.passed else "❌"
        detail = f" ({check.detail})" if check.detail else ""
        print(f"   {mark} {check.name}: worst {check.worst:.3g} over {check.checked}{detail}")
    if args.output:
        save_json(report.to_dict(), args.output)
        print(f"   Results saved to: {args.output}")
    if report.passed:
        print(f"\n🎉 All checks passed")
        return EXIT_OK
    print(f"\n❌ Verification found violations")
    return EXIT_VIOLATION


# --- Parser ---

def _add_flux_args(parser: argparse.ArgumentParser, required: bool = True):
    parser.add_argument("--flux", required=required,
                        help=f"Flux name ({', '.join(REGISTERED_FLUXES)}, -cubic, monomial:m), inline JSON or file")
    parser.add_argument("-M", "--M", type=float, help="Working range [-M, M] (overrides the flux spec)")


def _add_problem_args(parser: argparse.ArgumentParser, eps: bool = True):
    parser.add_argument("-L", "--L", type=float, default=1.0, help="Half-width of the data support")
    parser.add_argument("-T", "--T", "--time", type=float, default=1.0, help="Final time")
    parser.add_argument("--delta", type=float, help="Rarefaction step (default 1e-3 M)")
    if eps:
        parser.add_argument("--eps", type=float, required=True, help="Entropy scale")


def _add_sampling_args(parser: argparse.ArgumentParser, samples: int):
    parser.add_argument("--samples", type=int, default=samples, help="Number of random initial data")
    parser.add_argument("--pieces", type=int, default=8, help="Cells per random initial datum")
    parser.add_argument("--seed", type=int, default=0, help="Random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scl-entropy",
        description="Front tracking and epsilon-entropy bounds for 1D scalar conservation laws",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Solve a Riemann problem for the cubic flux
  scl-entropy riemann --flux cubic --left 1 --right -1

  # Evolve initial data stored as {"breakpoints": [...], "values": [...]}
  scl-entropy solve --flux burgers --initial example_docs/example_initial_data.json --T 1 --output u.json

  # Cover 50 evolved samples at eps = 0.2
  scl-entropy cover --flux quartic --L 1 --T 1 --eps 0.2 --samples 50

  # Witness family with separation and round-trip checks
  scl-entropy lower-bound --flux burgers --L 2 --T 1 --eps 0.05 --cells 8 --check

  # Entropy scan from a configuration file
  scl-entropy entropy-scan --config example_docs/example_scan_config.json --csv scan.csv --json scan.json

  # Property checks on random data
  scl-entropy verify --flux mixed --samples 20

  # Flux constants from a custom polynomial
  scl-entropy constants --flux example_docs/example_flux_cubic.json

Environment:
  SCL_ENTROPY_WORKERS    process count for entropy-scan (default 1)
  SCL_ENTROPY_LOG_LEVEL  log level when neither --verbose nor --quiet is given
        """,
    )
    parser.add_argument("--version", action="version", version=f"scl-entropy {__version__}")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--quiet", action="store_true", help="Suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="Estimate the flux constants")
    _add_flux_args(p)
    p.add_argument("--grid", type=int, default=2000, help="Grid intervals on [-M, M] (>= 1000)")
    p.add_argument("--output", "--out", help="Save results to JSON")
    p.add_argument("--save-flux", help="Save the resolved flux specification to JSON")

    p = sub.add_parser("riemann", help="Solve a Riemann problem")
    _add_flux_args(p)
    p.add_argument("--left", type=float, required=True, help="Left state")
    p.add_argument("--right", type=float, required=True, help="Right state")
    p.add_argument("--delta", type=float, help="Rarefaction step (default 1e-3 M)")
    p.add_argument("--method", choices=["exact", "hull"], default="exact", help="Envelope construction")
    p.add_argument("--output", "--out", help="Save the wave fan to JSON")

    p = sub.add_parser("solve", help="Evolve step-function initial data")
    _add_flux_args(p)
    p.add_argument("--initial", "--input", required=True, help="Initial data file or inline JSON")
    p.add_argument("-T", "--T", "--time", type=float, required=True, help="Final time")
    p.add_argument("--delta", type=float, help="Rarefaction step (default 1e-3 M)")
    p.add_argument("--max-interactions", type=int, default=10 ** 7, help="Interaction budget")
    p.add_argument("--at", type=float, nargs="*", help="Print u(T, x) at these points")
    p.add_argument("--output", "--out", help="Save the solution to JSON")

    p = sub.add_parser("cover", help="Cover evolved random samples with the constructive eps-cover")
    _add_flux_args(p)
    _add_problem_args(p)
    _add_sampling_args(p, samples=50)
    p.add_argument("--sign", choices=["NonNegative", "NonPositive"], help="Sign constraint on the data")
    p.add_argument("--output", "--out", help="Save the cover report to JSON")

    p = sub.add_parser("lower-bound", help="Build an eps-separated witness family")
    _add_flux_args(p)
    _add_problem_args(p)
    p.add_argument("--cells", type=int, help="Number of teeth (default: cells three ramp runs wide)")
    p.add_argument("--side", choices=["plus", "minus"], default="plus", help="Non-negative or non-positive teeth")
    p.add_argument("--check", action="store_true", help="Check separation and backward construction")
    p.add_argument("--roundtrips", type=int, default=5, help="Witnesses to round-trip with --check")
    p.add_argument("--output", "--out", help="Save the family to JSON")

    p = sub.add_parser("entropy-scan", help="Empirical and analytic entropy bounds over an eps grid")
    p.add_argument("--config", help="Experiment configuration JSON")
    _add_flux_args(p, required=False)
    _add_problem_args(p, eps=False)
    p.add_argument("--eps", type=float, nargs="+", help="Descending eps grid (default: 8 halvings from M L / 8)")
    _add_sampling_args(p, samples=50)
    p.add_argument("--sign", choices=["NonNegative", "NonPositive"], help="Sign constraint on the data")
    p.add_argument("--workers", type=int, help="Process count (default from SCL_ENTROPY_WORKERS)")
    p.add_argument("--csv", help="CSV output path")
    p.add_argument("--json", help="JSON output path")

    p = sub.add_parser("verify", help="Property checks on seeded random data")
    _add_flux_args(p)
    _add_problem_args(p, eps=False)
    _add_sampling_args(p, samples=20)
    p.add_argument("--riemann-trials", type=int, default=1000, help="Random Riemann problems")
    p.add_argument("--output", "--out", help="Save the report to JSON")
    return parser


COMMANDS = {
    "constants": cmd_constants,
    "riemann": cmd_riemann,
    "solve": cmd_solve,
    "cover": cmd_cover,
    "lower-bound": cmd_lower_bound,
    "entropy-scan": cmd_entropy_scan,
    "verify": cmd_verify,
}


async def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI function; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    handler = COMMANDS[args.command]
    try:
        result = handler(args)
        if asyncio.iscoroutine(result):
            result = await result
        return result
    except CONFIG_ERRORS as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    except (CoverageFailure, StallError) as e:
        print(f"❌ {e}")
        return EXIT_VIOLATION


def cli_main():
    """Entry point for the CLI."""
    try:
        sys.exit(asyncio.run(main()))
    except KeyboardInterrupt:
        print(f"\n⚠️  Interrupted by user")
        sys.exit(1)


if __name__ == "__main__":
    cli_main()
