"""
End-to-end studies: sampling the data class, evolving, estimating entropy
numbers from the sample, and comparing them with the constructive and
analytic bounds.
"""

import asyncio
import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .cover import analytic_upper_bound, make_grid_cover_spec, reconstruct_T_iota, SignTuple, solution_bounds
from .errors import ConfigError, DegenerateError, KindError, ParamError, RangeError
from .flux_analysis import (
    FluxConstants,
    FluxModel,
    estimate_constants,
    flux_from_spec,
    max_abs_fprime,
)
from .lower_bound import SignConstraint, analytic_lower_bound, build_witness_family
from .solver import (
    OLEINIK_TOLERANCE,
    PiecewiseConstantFn,
    default_delta,
    e_condition_slack,
    evolve,
    l1_distance,
    oleinik_one_sided_check,
    riemann,
)

logger = logging.getLogger(__name__)

# --- Configuration ---
WORKERS_ENV = "SCL_ENTROPY_WORKERS"
DEFAULT_SAMPLES = 50
DEFAULT_PIECES = 8
DEFAULT_SEED = 0
EPS_GRID_POINTS = 8
CSV_COLUMNS = ("eps", "packing_log2", "cover_log2", "witness_log2", "analytic_upper", "analytic_lower")

# Verification thresholds
RIEMANN_TRIALS = 1000
E_CONDITION_FLOOR = -1e-10
SPEED_ORDER_TOLERANCE = 1e-12
MAX_PRINCIPLE_TOLERANCE = 1e-12
MASS_TOLERANCE = 1e-9
RECONSTRUCTION_TOLERANCE = 1e-10
RECONSTRUCTION_TRIALS = 100
RECONSTRUCTION_CELLS = 64
TV_TOLERANCE = 1e-12
SEMIGROUP_SAMPLES = 10

ProgressCallback = Callable[[str, int, int], None]


def configured_workers() -> int:
    """Worker count from SCL_ENTROPY_WORKERS (1 when unset or invalid)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        logger.warning("Ignoring %s=%r: not an integer", WORKERS_ENV, raw)
        return 1


def _sign_constraint(sign: Union[None, str, SignConstraint]) -> Optional[SignConstraint]:
    if sign is None or isinstance(sign, SignConstraint):
        return sign
    try:
        return SignConstraint(sign)
    except ValueError:
        raise ConfigError(f"Unknown sign constraint '{sign}' (use NonNegative or NonPositive)")


# --- Sampling ---

def sample_initial_data(
    L: float,
    M: float,
    pieces: int,
    seed: int,
    sign: Union[None, str, SignConstraint] = None,
) -> PiecewiseConstantFn:
    """
    Step function with `pieces` uniform cells on [-L, L] and i.i.d. uniform values.

    Values are drawn from [-M, M], or from [0, M] / [-M, 0] under a sign constraint.
    The same seed always gives the same function.
    """
    if pieces < 1:
        raise ConfigError(f"pieces must be >= 1, got {pieces}")
    constraint = _sign_constraint(sign)
    rng = np.random.default_rng(seed)
    lo, hi = -M, M
    if constraint is SignConstraint.NON_NEGATIVE:
        lo = 0.0
    elif constraint is SignConstraint.NON_POSITIVE:
        hi = 0.0
    values = rng.uniform(lo, hi, size=pieces)
    breakpoints = np.linspace(-L, L, pieces + 1)
    return PiecewiseConstantFn(breakpoints, values)


def sample_family(L: float, M: float, pieces: int, seed: int, count: int,
                  sign: Union[None, str, SignConstraint] = None) -> List[PiecewiseConstantFn]:
    """`count` independent samples; sample i uses the child seed (seed, i)."""
    return [sample_initial_data(L, M, pieces, np.random.SeedSequence([seed, i]), sign) for i in range(count)]


# --- Empirical entropy ---

def _distance_rows(functions: Sequence[PiecewiseConstantFn], start: int, stop: int) -> List[List[float]]:
    return [[l1_distance(functions[i], functions[j]) for j in range(i + 1, len(functions))]
            for i in range(start, stop)]


def pairwise_l1_matrix(functions: Sequence[PiecewiseConstantFn]) -> np.ndarray:
    """Symmetric matrix of exact L1 distances."""
    n = len(functions)
    matrix = np.zeros((n, n))
    for i, row in enumerate(_distance_rows(functions, 0, n)):
        matrix[i, i + 1:] = row
    return matrix + matrix.T


def _greedy_packing(distances: np.ndarray, eps: float, seed: Sequence[int] = ()) -> List[int]:
    """Indices of a 2 eps-separated subset, scanning in index order after the seed."""
    kept = list(seed)
    for i in range(len(distances)):
        if i in kept:
            continue
        if all(distances[i, j] > 2.0 * eps for j in kept):
            kept.append(i)
    return kept


def _greedy_cover(distances: np.ndarray, eps: float) -> List[int]:
    """Centers of eps-balls covering every sample; each uncovered sample becomes a center."""
    covered = np.zeros(len(distances), dtype=bool)
    centers = []
    for i in range(len(distances)):
        if covered[i]:
            continue
        centers.append(i)
        covered |= distances[i] <= eps
    return centers


def empirical_entropy(
    evolved: Sequence[PiecewiseConstantFn],
    eps: float,
    distances: Optional[np.ndarray] = None,
) -> Tuple[float, float]:
    """
    log2 sizes of a greedy 2 eps-separated subset and of a greedy eps-ball cover of the sample.

    Every eps-ball holds at most one point of a 2 eps-separated set, so the
    packing value never exceeds the cover value.
    """
    if not evolved:
        raise ConfigError("empirical_entropy needs at least one function")
    if distances is None:
        distances = pairwise_l1_matrix(evolved)
    packing = _greedy_packing(distances, eps)
    cover = _greedy_cover(distances, eps)
    return math.log2(len(packing)), math.log2(len(cover))


def empirical_entropy_grid(distances: np.ndarray, eps_grid: Sequence[float]) -> List[Tuple[float, float]]:
    """
    Packing and cover log2 counts for a descending eps grid.

    Packings are nested: the packing at a larger eps seeds the next one. A
    cover at a smaller eps is also a cover at every larger eps, so cover
    counts are carried upwards as a running minimum. Both columns are
    therefore nondecreasing as eps decreases.
    """
    packings: List[int] = []
    seed: List[int] = []
    for eps in eps_grid:
        seed = _greedy_packing(distances, eps, seed)
        packings.append(len(seed))
    covers = [len(_greedy_cover(distances, eps)) for eps in eps_grid]
    for k in range(len(covers) - 2, -1, -1):
        covers[k] = min(covers[k], covers[k + 1])
    return [(math.log2(p), math.log2(c)) for p, c in zip(packings, covers)]


def fit_log_slope(eps_values: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(1/eps) over the finite positive values."""
    eps_arr = np.asarray(eps_values, dtype=float)
    val_arr = np.asarray(values, dtype=float)
    mask = np.isfinite(val_arr) & (val_arr > 0.0) & (eps_arr > 0.0)
    if np.count_nonzero(mask) < 2 or np.unique(eps_arr[mask]).size < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(1.0 / eps_arr[mask]), np.log(val_arr[mask]), 1)
    return float(slope)


# --- Configuration and reports ---

def default_eps_grid(L: float, M: float, points: int = EPS_GRID_POINTS) -> List[float]:
    """Geometric grid from M L / 8, halving at each step."""
    return [M * L / 8.0 / 2 ** k for k in range(points)]


@dataclass
class ExperimentConfig:
    """Everything an entropy scan needs; a fixed seed makes the CSV reproducible byte for byte."""

    flux: Dict[str, Any]
    L: float = 1.0
    M: float = 1.0
    T: float = 1.0
    eps_grid: List[float] = field(default_factory=list)
    samples: int = DEFAULT_SAMPLES
    pieces: int = DEFAULT_PIECES
    seed: int = DEFAULT_SEED
    delta: Optional[float] = None
    sign: Optional[str] = None
    constants: Dict[str, float] = field(default_factory=dict)
    witness_side: str = "plus"
    output_csv: Optional[str] = None
    output_json: Optional[str] = None

    def __post_init__(self):
        if not self.eps_grid:
            self.eps_grid = default_eps_grid(self.L, self.M)
        self.eps_grid = [float(e) for e in self.eps_grid]
        self.validate()

    def validate(self):
        """Raise ConfigError on the first violated constraint."""
        if not isinstance(self.flux, dict):
            raise ConfigError("flux must be a flux specification object")
        for name in ("L", "M", "T"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0.0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be a positive number, got {value!r}")
        if any(e <= 0.0 for e in self.eps_grid):
            raise ConfigError("eps_grid entries must be positive")
        if any(b >= a for a, b in zip(self.eps_grid, self.eps_grid[1:])):
            raise ConfigError("eps_grid must be strictly descending")
        if self.samples < 2:
            raise ConfigError(f"samples must be >= 2, got {self.samples}")
        if self.pieces < 1:
            raise ConfigError(f"pieces must be >= 1, got {self.pieces}")
        if self.delta is not None and not self.delta > 0.0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.witness_side not in ("plus", "minus"):
            raise ConfigError(f"witness_side must be 'plus' or 'minus', got '{self.witness_side}'")
        unknown = set(self.constants) - {"C1", "c1", "c2"}
        if unknown:
            raise ConfigError(f"Unknown constants: {sorted(unknown)}")
        _sign_constraint(self.sign)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        if "flux" not in data:
            raise ConfigError("Experiment configuration needs a 'flux' entry")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid experiment configuration: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flux": self.flux,
            "L": self.L,
            "M": self.M,
            "T": self.T,
            "eps_grid": list(self.eps_grid),
            "samples": self.samples,
            "pieces": self.pieces,
            "seed": self.seed,
            "delta": self.delta,
            "sign": self.sign,
            "constants": dict(self.constants),
            "witness_side": self.witness_side,
            "output_csv": self.output_csv,
            "output_json": self.output_json,
        }


@dataclass
class BoundRow:
    eps: float
    packing_log2: float
    cover_log2: float
    witness_log2: float = float("nan")
    analytic_upper: float = float("nan")
    analytic_lower: float = float("nan")
    witness_cells: Optional[int] = None
    notes: List[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.packing_log2 <= self.cover_log2 + 1e-12

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eps": self.eps,
            "packing_log2": self.packing_log2,
            "cover_log2": self.cover_log2,
            "witness_log2": _json_number(self.witness_log2),
            "analytic_upper": _json_number(self.analytic_upper),
            "analytic_lower": _json_number(self.analytic_lower),
            "witness_cells": self.witness_cells,
            "consistent": self.consistent,
            "notes": list(self.notes),
        }


def _json_number(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


@dataclass
class BoundReport:
    """Per-eps rows, fitted log-log slopes and run metadata."""

    rows: List[BoundRow]
    slopes: Dict[str, float]
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return all(row.consistent for row in self.rows)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow([f"{getattr(row, column):.12g}" for column in CSV_COLUMNS])
        return buffer.getvalue()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": [row.to_dict() for row in self.rows],
            "slopes": {key: _json_number(value) for key, value in self.slopes.items()},
            "consistent": self.consistent,
            "metadata": self.metadata,
        }

    def save(self, csv_path: Optional[str] = None, json_path: Optional[str] = None):
        if csv_path:
            with open(csv_path, "w", encoding="utf-8", newline="") as f:
                f.write(self.to_csv())
            logger.info("Wrote %s", csv_path)
        if json_path:
            with open(json_path, "w", encoding="utf-8") as f:
                json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)
            logger.info("Wrote %s", json_path)


# --- Entropy scan ---

def _constants_for(flux: FluxModel, overrides: Dict[str, float]) -> FluxConstants:
    return estimate_constants(flux, **overrides)


def _witness_entry(flux: FluxModel, config: ExperimentConfig, eps: float, delta: float) -> Tuple[float, Optional[int], Optional[str]]:
    try:
        family = build_witness_family(flux, config.L, config.M, config.T, eps, delta=delta,
                                      which=config.witness_side)
    except (ParamError, DegenerateError) as e:
        return float("nan"), None, f"witness family unavailable: {e}"
    return family.certified_log2, family.n_cells, None


def _analytic_entries(flux: FluxModel, config: ExperimentConfig, eps: float,
                      constants: FluxConstants) -> Tuple[float, float, List[str]]:
    notes = []
    try:
        upper = analytic_upper_bound(flux, config.L, config.M, config.T, eps, constants)
    except (ParamError, RangeError) as e:
        upper = float("nan")
        notes.append(f"analytic upper bound unavailable: {e}")
    try:
        lower = analytic_lower_bound(flux, config.L, config.M, config.T, eps, constants)
    except (ParamError, DegenerateError) as e:
        lower = float("nan")
        notes.append(f"analytic lower bound unavailable: {e}")
    return upper, lower, notes


async def entropy_scan_async(
    config: ExperimentConfig,
    progress_callback: Optional[ProgressCallback] = None,
    workers: Optional[int] = None,
) -> BoundReport:
    """
    Sample, evolve, estimate entropy numbers per eps and attach the bounds (async).

    Args:
        config: Experiment configuration
        progress_callback: Function for progress updates (message, current, total)
        workers: Process count for evolution and distances (default from SCL_ENTROPY_WORKERS)

    Returns:
        BoundReport; also written to config.output_csv / config.output_json when set
    """
    config.validate()
    workers = configured_workers() if workers is None else max(int(workers), 1)
    start_time = time.time()
    flux = flux_from_spec(config.flux, M=config.M)
    delta = default_delta(flux) if config.delta is None else config.delta
    constants = _constants_for(flux, config.constants)
    total_steps = config.samples + len(config.eps_grid) + 1

    loop = asyncio.get_running_loop()
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        data = sample_family(config.L, config.M, config.pieces, config.seed, config.samples, config.sign)
        tasks = [loop.run_in_executor(executor, evolve, flux, u0, config.T, delta) for u0 in data]
        evolved: List[PiecewiseConstantFn] = []
        for i, task in enumerate(tasks):
            try:
                evolved.append(await task)
            except Exception as e:
                raise type(e)(f"sample {i}: {e}") from e
            if progress_callback:
                progress_callback(f"Evolved sample {i + 1}/{config.samples}", i + 1, total_steps)

        n = len(evolved)
        chunk = max(1, math.ceil(n / workers))
        row_tasks = [
            loop.run_in_executor(executor, _distance_rows, evolved, lo, min(lo + chunk, n))
            for lo in range(0, n, chunk)
        ]
        distances = np.zeros((n, n))
        i = 0
        for task in row_tasks:
            for row in await task:
                distances[i, i + 1:] = row
                i += 1
        distances = distances + distances.T
        if progress_callback:
            progress_callback("Computed pairwise L1 distances", config.samples + 1, total_steps)
    finally:
        if executor is not None:
            executor.shutdown()

    empirical = empirical_entropy_grid(distances, config.eps_grid)
    rows: List[BoundRow] = []
    for k, (eps, (packing, cover)) in enumerate(zip(config.eps_grid, empirical)):
        witness, cells, note = _witness_entry(flux, config, eps, delta)
        upper, lower, notes = _analytic_entries(flux, config, eps, constants)
        if note:
            notes.insert(0, note)
        row = BoundRow(eps, packing, cover, witness, upper, lower, cells, notes)
        if math.isfinite(witness) and math.isfinite(upper) and witness > upper:
            row.notes.append("witness bound exceeds the analytic upper bound at unit constants")
        rows.append(row)
        if progress_callback:
            progress_callback(f"eps = {eps:.4g}", config.samples + 2 + k, total_steps)

    eps_values = [row.eps for row in rows]
    slopes = {
        name: fit_log_slope(eps_values, [getattr(row, name) for row in rows])
        for name in ("packing_log2", "cover_log2", "witness_log2", "analytic_upper", "analytic_lower")
    }
    metadata = {
        "config": config.to_dict(),
        "flux": flux.to_spec(),
        "kind": flux.kind.value,
        "delta": delta,
        "constants": constants.to_dict(),
        "workers": workers,
        "processing_time_seconds": time.time() - start_time,
        "timestamp": time.strftime("%Y-%m-%d %H:%M:%S"),
    }
    report = BoundReport(rows=rows, slopes=slopes, metadata=metadata)
    logger.info("Entropy scan finished: %d rows, slopes %s", len(rows), slopes)
    report.save(config.output_csv, config.output_json)
    return report


def entropy_scan(
    config: ExperimentConfig,
    progress_callback: Optional[ProgressCallback] = None,
    workers: Optional[int] = None,
) -> BoundReport:
    """Synchronous wrapper around entropy_scan_async."""

    async def _scan():
        return await entropy_scan_async(config, progress_callback=progress_callback, workers=workers)

    return asyncio.run(_scan())


# --- Verification suite ---

@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int
    worst: float
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "worst": _json_number(self.worst),
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    flux: Dict[str, Any]
    checks: List[CheckResult] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> CheckResult:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flux": self.flux,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "metadata": self.metadata,
        }


def check_riemann_admissibility(flux: FluxModel, trials: int, seed: int, delta: float) -> CheckResult:
    """Random Riemann problems: shocks satisfy the E-condition and speeds never decrease."""
    rng = np.random.default_rng(seed)
    states = rng.uniform(-flux.M, flux.M, size=(trials, 2))
    worst = float("inf")
    problems = []
    for uL, uR in states:
        fan = riemann(flux, uL, uR, delta)
        speeds = fan.speeds
        if any(b < a - SPEED_ORDER_TOLERANCE for a, b in zip(speeds, speeds[1:])):
            problems.append(f"speeds decrease for ({uL:.6g}, {uR:.6g})")
        for shock in fan.shocks:
            worst = min(worst, e_condition_slack(flux, shock.left_state, shock.right_state, shock.speed))
    if worst < E_CONDITION_FLOOR:
        problems.append(f"E-condition slack {worst:.3g}")
    return CheckResult("riemann_admissibility", not problems, trials, worst, "; ".join(problems[:3]))


def check_reconstruction(flux: FluxModel, L: float, trials: int, seed: int) -> CheckResult:
    """f' o T_iota(g) = g for random grid functions g and sign tuples iota."""
    bounds = solution_bounds(flux, L, 1.0)
    V = bounds.fprime_M
    value_range = (0.0, V) if flux.sigma > 0 else (-V, 0.0)
    spec = make_grid_cover_spec(L, V, V * L / 6.0, N=RECONSTRUCTION_CELLS, value_range=value_range)
    rng = np.random.default_rng(seed)
    lo_level, hi_level = math.ceil(spec.lo / spec.step), math.floor(spec.hi / spec.step)
    edges = spec.grid_point(np.arange(spec.N + 1))
    mids = 0.5 * (edges[:-1] + edges[1:])
    worst = 0.0
    for _ in range(trials):
        levels = rng.integers(lo_level, hi_level + 1, size=spec.N) * spec.step
        g = PiecewiseConstantFn(edges, levels).normalize()
        iota = SignTuple.from_array(rng.choice([-1, 1], size=spec.N))
        u = reconstruct_T_iota(g, iota, flux, spec)
        worst = max(worst, float(np.max(np.abs(flux.fprime(u(mids)) - g(mids)))))
    return CheckResult("nc_reconstruction", worst <= RECONSTRUCTION_TOLERANCE, trials, worst)


def run_verification(
    flux: FluxModel,
    L: float,
    T: float,
    samples: int = 20,
    pieces: int = DEFAULT_PIECES,
    seed: int = DEFAULT_SEED,
    delta: Optional[float] = None,
    riemann_trials: int = RIEMANN_TRIALS,
    progress_callback: Optional[ProgressCallback] = None,
) -> VerificationReport:
    """
    Property checks on seeded random data: Riemann admissibility, maximum principle,
    finite propagation, mass conservation, L1 contraction, the one-sided bound on f'
    (convex kinds) and the branch reconstruction identity (inflection kinds).

    Args:
        flux: Flux model (its M bounds the data)
        L, T: Data half-support and final time
        samples: Number of random initial data
        pieces, seed: Sampling parameters
        delta: Rarefaction step (default 1e-3 M)
        riemann_trials: Number of random Riemann problems
        progress_callback: Function for progress updates (message, current, total)

    Returns:
        VerificationReport
    """
    if samples < 2:
        raise ConfigError(f"samples must be >= 2, got {samples}")
    delta = default_delta(flux) if delta is None else delta
    start_time = time.time()
    report = VerificationReport(flux=flux.to_spec())
    report.checks.append(check_riemann_admissibility(flux, riemann_trials, seed, delta))

    data = sample_family(L, flux.M, pieces, seed, samples)
    evolved = []
    for i, u0 in enumerate(data):
        evolved.append(evolve(flux, u0, T, delta=delta))
        if progress_callback:
            progress_callback(f"Evolved sample {i + 1}/{samples}", i + 1, samples)

    sup_excess = max(u.sup_norm() - u0.sup_norm() for u0, u in zip(data, evolved))
    report.checks.append(CheckResult("maximum_principle", sup_excess <= MAX_PRINCIPLE_TOLERANCE,
                                     samples, sup_excess))

    reach = L + T * max_abs_fprime(flux, flux.M) + delta
    support_excess = max(
        (max(abs(s[0]), abs(s[1])) - reach for s in (u.support() for u in evolved) if s is not None),
        default=-reach,
    )
    report.checks.append(CheckResult("support", support_excess <= 1e-12 * (1.0 + reach), samples,
                                     support_excess, f"reach {reach:.6g}"))

    mass_error = max(abs(u.integral() - u0.integral()) / max(1.0, abs(u0.integral()))
                     for u0, u in zip(data, evolved))
    report.checks.append(CheckResult("mass", mass_error <= MASS_TOLERANCE, samples, mass_error))

    contraction = float("-inf")
    pairs = 0
    for i in range(samples):
        for j in range(i + 1, samples):
            before = l1_distance(data[i], data[j])
            after = l1_distance(evolved[i], evolved[j])
            allowance = 1e-9 * (1.0 + before) + delta * T * (
                data[i].total_variation() + data[j].total_variation()
            )
            contraction = max(contraction, after - before - allowance)
            pairs += 1
    report.checks.append(CheckResult("l1_contraction", contraction <= 0.0, pairs, contraction,
                                     "allowance 1e-9 (1 + d0) + delta T (TV u0 + TV v0)"))

    tv_growth = max(u.total_variation() - u0.total_variation() for u0, u in zip(data, evolved))
    report.checks.append(CheckResult("tv_nonincrease", tv_growth <= TV_TOLERANCE, samples, tv_growth))

    semigroup = float("-inf")
    for u0, u in zip(data[:SEMIGROUP_SAMPLES], evolved):
        split = evolve(flux, evolve(flux, u0, T / 2.0, delta=delta), T / 2.0, delta=delta)
        semigroup = max(semigroup, l1_distance(u, split) - 3.0 * delta * T * u0.total_variation())
    report.checks.append(CheckResult("semigroup", semigroup <= 1e-12, min(samples, SEMIGROUP_SAMPLES),
                                     semigroup, "allowance 3 delta T TV u0"))

    if flux.is_convex:
        worst = min(oleinik_one_sided_check(flux, u, T, delta=delta).worst_slack for u in evolved)
        report.checks.append(CheckResult("oleinik", worst >= -OLEINIK_TOLERANCE, samples, worst,
                                         f"tol {OLEINIK_TOLERANCE:.0e}"))
    else:
        try:
            report.checks.append(check_reconstruction(flux, L, RECONSTRUCTION_TRIALS, seed))
        except (KindError, ParamError, RangeError) as e:
            report.checks.append(CheckResult("nc_reconstruction", False, 0, float("nan"), str(e)))

    report.metadata = {
        "L": L,
        "T": T,
        "samples": samples,
        "pieces": pieces,
        "seed": seed,
        "delta": delta,
        "processing_time_seconds": time.time() - start_time,
    }
    for check in report.checks:
        logger.info("%s: %s (worst %.3g)", check.name, "pass" if check.passed else "FAIL", check.worst)
    return report
