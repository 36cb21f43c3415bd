"""
Constructive upper bounds for the entropy of the solution set.

A grid cover of the class of compactly supported step functions with bounded
amplitude and total variation is applied to {f' o u}; the convex pipeline
pulls it back through the inverse of f', the inflection pipeline projects on
the grid and rebuilds each element from a sign tuple and the two branch
inverses. Elements are never enumerated: each function is assigned to its
element and counts are reported as base-2 logarithms.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CoverageFailure, DomainError, KindError, ParamError, RangeError, SupportError
from .flux_analysis import (
    FluxConstants,
    FluxKind,
    FluxModel,
    branch_inverse,
    delta,
    delta_hat,
    delta_inverse,
    estimate_constants,
    fprime_inverse,
    with_range,
)
from .solver import PiecewiseConstantFn, l1_distance, tv_fprime

logger = logging.getLogger(__name__)

# --- Configuration ---
SUPPORT_TOLERANCE = 1e-9
GRID_SNAP_TOLERANCE = 1e-9
ENUMERATION_CELL_LIMIT = 8
UPPER_EPS_DIVISOR_CONVEX = 124.0
UPPER_EPS_DIVISOR_NC = 144.0


@dataclass(frozen=True)
class SolutionSetBounds:
    """Half-support l and amplitude bound V of {f' o S_T u0}."""

    l: float
    V: float
    fprime_M: float


def solution_bounds(flux: FluxModel, L: float, T: float, C1: float = 1.0) -> SolutionSetBounds:
    """l = L + T f'_M and V = max{C1/2 (1 + L/T), f'_M}."""
    if not (L > 0.0 and T > 0.0):
        raise DomainError(f"L and T must be positive, got L={L}, T={T}")
    grid = np.linspace(-flux.M, flux.M, 2001)
    fprime_M = float(np.max(np.abs(flux.fprime(grid))))
    l_half = L + T * fprime_M
    V = max(0.5 * C1 * (1.0 + L / T), fprime_M)
    return SolutionSetBounds(l=l_half, V=V, fprime_M=fprime_M)


# --- Grid cover ---

@dataclass(frozen=True)
class GridCoverSpec:
    """
    Cell grid x_nu = -L_half + nu * 2 L_half / N and value levels k * eps / (4 L_half)
    clipped to [lo, hi].
    """

    L_half: float
    V: float
    N: int
    q: int
    eps: float
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return 2.0 * self.L_half / self.N

    @property
    def step(self) -> float:
        return self.eps / (4.0 * self.L_half)

    @property
    def min_cells(self) -> int:
        return int(math.floor(8.0 * self.L_half * self.V / self.eps))

    @property
    def log2_cardinality_bound(self) -> float:
        return 48.0 * self.V * self.L_half / self.eps

    def grid_point(self, nu):
        return -self.L_half + np.asarray(nu, dtype=float) * self.width

    def to_dict(self) -> Dict[str, Any]:
        return {
            "L_half": self.L_half,
            "V": self.V,
            "N": self.N,
            "q": self.q,
            "eps": self.eps,
            "value_range": [self.lo, self.hi],
            "cell_width": self.width,
            "value_step": self.step,
            "log2_cardinality_bound": self.log2_cardinality_bound,
        }


def make_grid_cover_spec(
    L_half: float,
    V: float,
    eps: float,
    N: Optional[int] = None,
    value_range: Optional[Tuple[float, float]] = None,
) -> GridCoverSpec:
    """
    Grid cover parameters for step functions on [-L_half, L_half] with |g| <= V and TV <= 2V.

    Raises:
        ParamError: if eps > V * L_half / 3 or N is below floor(8 L_half V / eps)
    """
    if not (L_half > 0.0 and V > 0.0 and eps > 0.0):
        raise ParamError(f"L_half, V and eps must be positive, got {L_half}, {V}, {eps}")
    if eps > V * L_half / 3.0 * (1 + 1e-12):
        raise ParamError(f"eps = {eps} exceeds V * L_half / 3 = {V * L_half / 3.0}")
    floor_N = max(int(math.floor(8.0 * L_half * V / eps)), 1)
    if N is None:
        N = floor_N
    elif N < floor_N:
        raise ParamError(f"N = {N} is below floor(8 L_half V / eps) = {floor_N}")
    lo, hi = value_range if value_range is not None else (-V, V)
    lo, hi = max(lo, -V), min(hi, V)
    step = eps / (4.0 * L_half)
    q = int(math.floor(hi / step) - math.ceil(lo / step)) + 1
    return GridCoverSpec(L_half=float(L_half), V=float(V), N=int(N), q=q, eps=float(eps), lo=float(lo), hi=float(hi))


def _check_window(u: PiecewiseConstantFn, spec: GridCoverSpec):
    support = u.support()
    if support is None:
        return
    slack = SUPPORT_TOLERANCE * (1.0 + spec.L_half)
    if support[0] < -spec.L_half - slack or support[1] > spec.L_half + slack:
        raise SupportError(f"Support {support} exceeds the window [-{spec.L_half}, {spec.L_half}]")


def _grid_index_up(spec: GridCoverSpec, x: np.ndarray) -> np.ndarray:
    ratio = (x + spec.L_half) / spec.width
    return np.clip(np.ceil(ratio - GRID_SNAP_TOLERANCE), 0, spec.N).astype(np.int64)


def project_PN(u: PiecewiseConstantFn, spec: GridCoverSpec) -> PiecewiseConstantFn:
    """
    Cell-constant projection: the value on [x_nu, x_nu+1) is u(x_nu+).

    Breakpoints are snapped up to the grid, so the cost is linear in the
    number of breakpoints of u and independent of N.
    """
    _check_window(u, spec)
    if u.is_zero:
        return u
    idx = _grid_index_up(spec, u.breakpoints)
    return PiecewiseConstantFn(spec.grid_point(idx), u.values).normalize()


def quantize(g: PiecewiseConstantFn, spec: GridCoverSpec) -> PiecewiseConstantFn:
    """Round every value to the nearest level and clip to the value range."""
    if g.is_zero:
        return g
    levels = np.clip(np.round(g.values / spec.step) * spec.step, spec.lo, spec.hi)
    return PiecewiseConstantFn(g.breakpoints, levels).normalize()


@dataclass
class SignTuple:
    """
    Sign per grid cell, stored as runs: starts[k] is the first cell of run k.
    """

    N: int
    starts: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        self.starts = np.asarray(self.starts, dtype=np.int64)
        self.signs = np.asarray(self.signs, dtype=np.int8)
        if len(self.starts) == 0 or self.starts[0] != 0:
            raise DomainError("A sign tuple needs a run starting at cell 0")
        if np.any(np.diff(self.starts) <= 0) or self.starts[-1] >= self.N:
            raise DomainError("Sign tuple runs must start at increasing cells below N")
        if not np.all(np.isin(self.signs, (-1, 1))):
            raise DomainError("Sign tuple entries must be -1 or +1")

    @classmethod
    def from_array(cls, iota: Sequence[int]) -> "SignTuple":
        arr = np.asarray(iota, dtype=np.int8)
        change = np.concatenate([[True], arr[1:] != arr[:-1]])
        return cls(len(arr), np.nonzero(change)[0], arr[change])

    @classmethod
    def constant(cls, N: int, sign: int = 1) -> "SignTuple":
        return cls(N, [0], [sign])

    @classmethod
    def of_function(cls, u: PiecewiseConstantFn, spec: GridCoverSpec) -> "SignTuple":
        """sign(u(x_nu+)) per cell with sign(0) = +1."""
        p = project_PN(u, spec)
        if p.is_zero:
            return cls.constant(spec.N)
        cells = np.round((p.breakpoints + spec.L_half) / spec.width).astype(np.int64)
        starts = [0]
        signs = [1]
        for start, value in zip(cells[:-1], p.values):
            starts.append(int(start))
            signs.append(-1 if value < 0.0 else 1)
        starts.append(int(cells[-1]))
        signs.append(1)
        arr_starts = np.array(starts)
        arr_signs = np.array(signs)
        # later runs win on equal starts; drop runs that begin at N
        keep = np.concatenate([arr_starts[1:] != arr_starts[:-1], [True]]) & (arr_starts < spec.N)
        arr_starts, arr_signs = arr_starts[keep], arr_signs[keep]
        change = np.concatenate([[True], arr_signs[1:] != arr_signs[:-1]])
        return cls(spec.N, arr_starts[change], arr_signs[change])

    def to_array(self) -> np.ndarray:
        lengths = np.diff(np.concatenate([self.starts, [self.N]]))
        return np.repeat(self.signs, lengths)

    def at(self, nu: int) -> int:
        return int(self.signs[np.searchsorted(self.starts, nu, side="right") - 1])


def reconstruct_T_iota(
    g: PiecewiseConstantFn,
    iota: SignTuple,
    flux: FluxModel,
    spec: GridCoverSpec,
    clip: bool = False,
) -> PiecewiseConstantFn:
    """
    Invert f' cell by cell on the branch iota_nu.

    Args:
        g: Cell-constant function on the spec grid
        iota: Branch choice per cell
        flux: Inflection flux
        spec: Grid specification
        clip: Clip values into the branch image instead of raising

    Returns:
        PiecewiseConstantFn with f' o result = g on the window
    """
    if flux.kind != FluxKind.NON_CONVEX_INFLECTION:
        raise KindError("Branch reconstruction needs an inflection flux")
    if iota.N != spec.N:
        raise DomainError(f"Sign tuple length {iota.N} does not match N = {spec.N}")
    _check_window(g, spec)
    if g.is_zero:
        return g

    # merge the runs of g and iota on the cell index
    g_cells = np.round((g.breakpoints + spec.L_half) / spec.width).astype(np.int64)
    cuts = np.union1d(g_cells, iota.starts)
    cuts = cuts[(cuts >= g_cells[0]) & (cuts <= g_cells[-1])]
    values = []
    for start in cuts[:-1]:
        y = float(g(spec.grid_point(start) + 0.5 * spec.width))
        branch = iota.at(int(start))
        if clip:
            end = float(flux.fprime(branch * flux.M))
            y = min(max(y, min(0.0, end)), max(0.0, end))
        values.append(branch_inverse(flux, branch, y))
    return PiecewiseConstantFn(spec.grid_point(cuts), np.array(values)).normalize()


@dataclass
class GridCover:
    """
    Implicit cover: cell grid times value levels with TV budget 2V.
    """

    spec: GridCoverSpec

    @property
    def log2_cardinality_bound(self) -> float:
        return self.spec.log2_cardinality_bound

    def assign(self, g: PiecewiseConstantFn) -> PiecewiseConstantFn:
        """Element of the cover assigned to g (projection then quantisation)."""
        return quantize(project_PN(g, self.spec), self.spec)

    def key(self, element: PiecewiseConstantFn) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        if element.is_zero:
            return (), ()
        cells = np.round((element.breakpoints + self.spec.L_half) / self.spec.width).astype(np.int64)
        levels = np.round(element.values / self.spec.step).astype(np.int64)
        return tuple(cells.tolist()), tuple(levels.tolist())

    def realize(self, key: Tuple[Sequence[int], Sequence[int]]) -> PiecewiseConstantFn:
        cells, levels = key
        if len(cells) == 0:
            return PiecewiseConstantFn.zero()
        values = np.clip(np.asarray(levels, dtype=float) * self.spec.step, self.spec.lo, self.spec.hi)
        return PiecewiseConstantFn(self.spec.grid_point(np.asarray(cells)), values).normalize()

    def iter_elements(self) -> Iterator[PiecewiseConstantFn]:
        """
        Enumerate every element with TV <= 2V; only for tiny grids.
        """
        spec = self.spec
        if spec.N > ENUMERATION_CELL_LIMIT:
            raise ParamError(f"Refusing to enumerate a grid with N = {spec.N} > {ENUMERATION_CELL_LIMIT} cells")
        levels = np.clip(
            np.arange(math.ceil(spec.lo / spec.step), math.floor(spec.hi / spec.step) + 1) * spec.step,
            spec.lo,
            spec.hi,
        )
        budget = 2.0 * spec.V + 1e-12
        bp = spec.grid_point(np.arange(spec.N + 1))

        def walk(prefix: List[float], used: float):
            if len(prefix) == spec.N:
                if used + abs(prefix[-1]) <= budget:
                    yield PiecewiseConstantFn(bp, np.array(prefix)).normalize()
                return
            last = prefix[-1] if prefix else 0.0
            for level in levels:
                cost = used + abs(level - last)
                if cost + abs(level) <= budget:
                    yield from walk(prefix + [float(level)], cost)

        yield from walk([], 0.0)


def build_grid_cover(spec: GridCoverSpec) -> GridCover:
    """Implicit grid cover for spec; checks the eps precondition."""
    if spec.eps > spec.V * spec.L_half / 3.0 * (1 + 1e-12):
        raise ParamError(f"eps = {spec.eps} exceeds V * L_half / 3 = {spec.V * spec.L_half / 3.0}")
    if spec.N < spec.min_cells:
        raise ParamError(f"N = {spec.N} is below floor(8 L_half V / eps) = {spec.min_cells}")
    logger.debug("Grid cover: N=%d, q=%d, log2 bound=%.6g", spec.N, spec.q, spec.log2_cardinality_bound)
    return GridCover(spec)


# --- Solution-set covers ---

def _slope_constants(constants: Optional[FluxConstants]) -> Tuple[float, float, float]:
    c1 = constants.c1 if constants is not None else 1.0
    c2 = constants.c2 if constants is not None else 1.0
    C1 = constants.C1 if constants is not None else 1.0
    return c1, c2, C1


def upper_eps_limit(flux: FluxModel, L: float, T: float, constants: Optional[FluxConstants] = None) -> float:
    """Largest eps for which the analytic upper bound is stated."""
    c1, _, C1 = _slope_constants(constants)
    bounds = solution_bounds(flux, L, T, C1)
    gamma = c1 * (L + T + L * L / T)
    if flux.is_convex:
        target, factor, hatted = gamma / UPPER_EPS_DIVISOR_CONVEX, 1.0 + 2.0 * bounds.l, True
    else:
        target, factor, hatted = gamma / UPPER_EPS_DIVISOR_NC, 2.0 + 4.0 * bounds.l, False
    try:
        return factor * delta_inverse(flux, target, hatted=hatted)
    except RangeError:
        # the map never reaches the target on (0, 2M]
        return factor * 2.0 * flux.M


def analytic_upper_bound(flux: FluxModel, L: float, M: float, T: float, eps: float,
                         constants: Optional[FluxConstants] = None) -> float:
    """
    Upper bound on the eps-entropy of S_T(C_[L,M]) up to the configured constants.

    Convex kinds: Gamma / Delta(eps / gamma) with Gamma = c1 (L + T + L^2/T),
    gamma = c1 (1 + L + T). Inflection fluxes: c2 (1 + L + T + L^2/T)^(m+1) / eps^m.

    Raises:
        ParamError: if eps is too large for the bound to apply
    """
    flux = with_range(flux, M)
    if not eps > 0.0:
        raise ParamError(f"eps must be positive, got {eps}")
    limit = upper_eps_limit(flux, L, T, constants)
    if eps >= limit:
        raise ParamError(f"eps = {eps} is not below the admissible limit {limit:.6g}")
    c1, c2, _ = _slope_constants(constants)
    if flux.is_convex:
        Gamma = c1 * (L + T + L * L / T)
        gamma = c1 * (1.0 + L + T)
        s = eps / gamma
        if s > 2.0 * flux.M:
            raise ParamError(f"eps / gamma = {s} exceeds 2M")
        return Gamma / delta(flux, s)
    return c2 * (1.0 + L + T + L * L / T) ** (flux.m + 1) / eps ** flux.m


def calibrate_C1(flux: FluxModel, solutions: Sequence[PiecewiseConstantFn], L: float, T: float) -> float:
    """Empirical TV{f' o u} / (1 + L/T) over the given solutions."""
    if not solutions:
        return 0.0
    return max(tv_fprime(flux, u) for u in solutions) / (1.0 + L / T)


def projection_error_bound(flux: FluxModel, u: PiecewiseConstantFn, spec: GridCoverSpec) -> Tuple[float, float]:
    """(||f' o u - f' o P^N u||_1, 2 l TV{f' o u} / N)."""
    p = project_PN(u, spec)
    lhs = l1_distance(_compose_fprime(flux, u), _compose_fprime(flux, p))
    rhs = 2.0 * spec.L_half * tv_fprime(flux, u) / spec.N
    return lhs, rhs


def pullback_estimate(flux: FluxModel, u: PiecewiseConstantFn, v: PiecewiseConstantFn,
                      hatted: Optional[bool] = None) -> Tuple[float, float]:
    """
    (||u - v||_1, (1 + 2L) Delta^-1(||f' o u - f' o v||_1)) with L the common half-support.

    hatted defaults to True for convex kinds. The same-sign form (hatted=False)
    applies to pairs with u v >= 0 everywhere.
    """
    if hatted is None:
        hatted = flux.is_convex
    if hatted and not flux.is_convex:
        raise KindError("The opposite-sign pullback needs a convex flux")
    lhs = l1_distance(u, v)
    radius = 0.0
    for w in (u, v):
        support = w.support()
        if support is not None:
            radius = max(radius, abs(support[0]), abs(support[1]))
    gap = l1_distance(_compose_fprime(flux, u), _compose_fprime(flux, v))
    if gap == 0.0:
        return lhs, 0.0
    try:
        rhs = (1.0 + 2.0 * radius) * delta_inverse(flux, gap, hatted=hatted)
    except RangeError:
        rhs = float("inf")
    return lhs, rhs


def sign_jump_tv_check(flux: FluxModel, u: PiecewiseConstantFn, kappa_tilde: float,
                       tol: float = 1e-12) -> Tuple[bool, float]:
    """
    Check TV{f' o u | [x, y]} >= kappa_tilde * max{|f'(u(x))|, |f'(u(y))|} whenever u changes sign
    between x and y. Returns (passed, worst slack).
    """
    if flux.kind != FluxKind.NON_CONVEX_INFLECTION:
        raise KindError("The sign-jump bound is stated for inflection fluxes")
    values = u.normalize().values
    if len(values) < 2:
        return True, float("inf")
    fp = flux.fprime(values)
    a = np.abs(fp)
    cumulative = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(fp)))])
    # per sign class: running max of C_i + k a_i and of C_i
    best_ca = {1: -np.inf, -1: -np.inf}
    best_c = {1: -np.inf, -1: -np.inf}
    worst = float("inf")
    for j, v in enumerate(values):
        s = 1 if v > 0 else (-1 if v < 0 else 0)
        if s != 0:
            other = -s
            if best_c[other] > -np.inf:
                worst = min(
                    worst,
                    cumulative[j] - best_ca[other],
                    cumulative[j] - kappa_tilde * a[j] - best_c[other],
                )
            best_ca[s] = max(best_ca[s], cumulative[j] + kappa_tilde * a[j])
            best_c[s] = max(best_c[s], cumulative[j])
    return worst >= -tol, worst


def _compose_fprime(flux: FluxModel, u: PiecewiseConstantFn) -> PiecewiseConstantFn:
    if u.is_zero:
        return u
    return PiecewiseConstantFn(u.breakpoints, flux.fprime(u.values)).normalize()


def _pull_back(flux: FluxModel, g: PiecewiseConstantFn) -> PiecewiseConstantFn:
    if g.is_zero:
        return g
    return PiecewiseConstantFn(g.breakpoints, fprime_inverse(flux, g.values)).normalize()


@dataclass
class CoverReport:
    """Outcome of covering a list of sampled solutions."""

    kind: str
    eps: float
    eps_prime: float
    N: int
    l: float
    V: float
    samples: int
    covered: int
    uncovered: List[int] = field(default_factory=list)
    max_error: float = 0.0
    realized_count: int = 0
    realized_log2: float = 0.0
    construction_log2: float = 0.0
    analytic_bound: Optional[float] = None
    calibrated_V: bool = False
    C1: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "eps": self.eps,
            "eps_prime": self.eps_prime,
            "N": self.N,
            "l": self.l,
            "V": self.V,
            "samples": self.samples,
            "covered": self.covered,
            "uncovered": list(self.uncovered),
            "max_error": self.max_error,
            "realized_count": self.realized_count,
            "realized_log2": self.realized_log2,
            "construction_log2": self.construction_log2,
            "analytic_bound": self.analytic_bound,
            "calibrated_V": self.calibrated_V,
            "C1": self.C1,
        }


def nc_cell_count(flux: FluxModel, L: float, T: float, eps: float, bounds: SolutionSetBounds,
                  kappa_tilde: float, C1: float) -> int:
    """Number of grid cells for the inflection pipeline: max of the projection and cover floors."""
    l_half, V = bounds.l, bounds.V
    growth = C1 * (1.0 + L / T)
    inner = eps / (2.0 + 4.0 * l_half)
    d_inner = delta(flux, min(inner, 2.0 * flux.M))
    eps_prime = 0.5 * d_inner
    s_proj = kappa_tilde * eps / (8.0 * l_half * (2.0 * kappa_tilde + growth))
    floors = [
        math.floor(1.0 / delta(flux, min(s_proj, 2.0 * flux.M))),
        math.floor(16.0 * l_half * V / d_inner),
        math.floor(8.0 * l_half * growth / d_inner),
        math.floor(8.0 * l_half * V / eps_prime),
    ]
    return max(max(floors), 1)


def cover_solution_set(
    flux: FluxModel,
    L: float,
    M: float,
    T: float,
    eps: float,
    samples: Sequence[PiecewiseConstantFn],
    constants: Optional[FluxConstants] = None,
    raise_on_failure: bool = True,
) -> CoverReport:
    """
    Assign each sampled solution to an element of the constructive eps-cover and verify the distance.

    Args:
        flux: Flux model
        L, M, T: Data support half-width, amplitude bound and time
        eps: Cover radius
        samples: Solutions S_T u0 for data in C_[L,M]
        constants: Flux constants (C1, c1, c2 and kappa_tilde are used)
        raise_on_failure: Raise CoverageFailure when a sample is left uncovered

    Returns:
        CoverReport
    """
    flux = with_range(flux, M)
    C1 = constants.C1 if constants is not None else 1.0
    bounds = solution_bounds(flux, L, T, C1)
    V = bounds.V
    calibrated = False
    if samples:
        sampled_C1 = calibrate_C1(flux, samples, L, T)
        tv_max = sampled_C1 * (1.0 + L / T)
        if tv_max > 2.0 * V:
            logger.warning("Raising V from %.6g to %.6g to cover the sampled flux variation", V, tv_max / 2.0)
            V = tv_max / 2.0
            calibrated = True
        C1 = max(C1, sampled_C1)
    bounds = SolutionSetBounds(l=bounds.l, V=V, fprime_M=bounds.fprime_M)
    l_half = bounds.l

    if flux.is_convex:
        eps_prime = delta_hat(flux, min(eps / (1.0 + 2.0 * l_half), 2.0 * flux.M))
        value_range = (float(flux.fprime(-flux.M)), float(flux.fprime(flux.M)))
        N = None
    else:
        if constants is not None and constants.kappa_tilde_M is not None:
            kappa_tilde = constants.kappa_tilde_M
        else:
            kappa_tilde = estimate_constants(flux).kappa_tilde_M
        eps_prime = 0.5 * delta(flux, min(eps / (2.0 + 4.0 * l_half), 2.0 * flux.M))
        value_range = (0.0, bounds.fprime_M) if flux.sigma > 0 else (-bounds.fprime_M, 0.0)
        N = nc_cell_count(flux, L, T, eps, bounds, kappa_tilde, C1)

    spec = make_grid_cover_spec(l_half, V, eps_prime, N=N, value_range=value_range)
    cover = build_grid_cover(spec)
    construction_log2 = spec.log2_cardinality_bound + (spec.N if not flux.is_convex else 0.0)

    try:
        analytic = analytic_upper_bound(flux, L, M, T, eps, constants)
    except ParamError as e:
        logger.info("Analytic upper bound not available: %s", e)
        analytic = None

    report = CoverReport(
        kind=flux.kind.value,
        eps=eps,
        eps_prime=eps_prime,
        N=spec.N,
        l=l_half,
        V=V,
        samples=len(samples),
        covered=0,
        construction_log2=construction_log2,
        analytic_bound=analytic,
        calibrated_V=calibrated,
        C1=C1,
    )
    if not samples:
        return report

    keys = set()
    for index, u in enumerate(samples):
        g = _compose_fprime(flux, u)
        g_i = cover.assign(g)
        if flux.is_convex:
            element = _pull_back(flux, g_i)
            key = cover.key(g_i)
        else:
            iota = SignTuple.of_function(u, spec)
            element = reconstruct_T_iota(g_i, iota, flux, spec, clip=True)
            key = (cover.key(g_i), tuple(iota.starts.tolist()), tuple(iota.signs.tolist()))
        keys.add(key)
        error = l1_distance(u, element)
        report.max_error = max(report.max_error, error)
        if error <= eps:
            report.covered += 1
        else:
            report.uncovered.append(index)

    report.realized_count = len(keys)
    report.realized_log2 = math.log2(len(keys))
    logger.info(
        "Covered %d/%d samples at eps=%g (eps'=%.3g, N=%d, realised log2=%.3f)",
        report.covered, report.samples, eps, eps_prime, spec.N, report.realized_log2,
    )
    if report.uncovered and raise_on_failure:
        raise CoverageFailure(f"{len(report.uncovered)} of {report.samples} samples are farther than eps={eps}", report)
    return report
