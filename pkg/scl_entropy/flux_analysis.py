"""
Flux model and flux-derived quantities: derivatives, branch inverses,
conjugate points, the oscillation maps Delta / Delta-hat and the numerical
constants used by the cover and lower-bound constructions.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .errors import ConfigError, DegenerateError, DomainError, KindError, RangeError

logger = logging.getLogger(__name__)

# --- Configuration ---
ASSUMPTION_GRID_POINTS = 2001     # grid used to check curvature assumptions on [-M, M]
INFIMUM_GRID_POINTS = 2001        # points per axis for Delta / Delta-hat infima
BISECTION_XTOL = 1e-15
ROOT_TOLERANCE = 1e-12
ZERO_SPEED_TOLERANCE = 1e-12
CONJUGATE_MAX_EXPANSION = 4.0     # conjugate point search reaches at most 4M
CONSTANT_FIT_POINTS = 64          # grid for beta_M / alpha_bar envelopes
DEFAULT_C1 = 1.0
DEFAULT_C1_SMALL = 1.0
DEFAULT_C2 = 1.0

Number = Union[float, np.ndarray]


class FluxKind(str, Enum):
    CONVEX = "Convex"
    CONVEX_DEGENERATE = "ConvexDegenerate"
    NON_CONVEX_INFLECTION = "NonConvexInflection"


def _horner(coeffs: Tuple[float, ...], u: Number) -> Number:
    result = 0.0 * u if isinstance(u, np.ndarray) else 0.0
    for c in reversed(coeffs):
        result = result * u + c
    return result


def _derivative(coeffs: Tuple[float, ...]) -> Tuple[float, ...]:
    if len(coeffs) <= 1:
        return (0.0,)
    return tuple(k * coeffs[k] for k in range(1, len(coeffs)))


@dataclass(frozen=True)
class FluxModel:
    """
    Polynomial flux f(u) = sum_k coefficients[k] * u**k on the working range |u| <= M.

    Construction checks zero speed at the origin, the polynomial degeneracy
    order m and the sign pattern of f'' sampled on [-M, M] \\ {0}.
    """

    kind: FluxKind
    m: int
    coefficients: Tuple[float, ...]
    M: float
    name: str = "custom"
    _d1: Tuple[float, ...] = field(init=False, repr=False, compare=False)
    _d2: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = FluxKind(self.kind)
        object.__setattr__(self, "kind", kind)
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "M", float(self.M))
        object.__setattr__(self, "_d1", _derivative(coeffs))
        object.__setattr__(self, "_d2", _derivative(_derivative(coeffs)))
        self._check_assumptions()

    # -- construction checks ------------------------------------------------

    def _check_assumptions(self):
        if not self.M > 0:
            raise ConfigError(f"Working range M must be positive, got {self.M}")
        if self.m < 1:
            raise ConfigError(f"Degeneracy order m must be >= 1, got {self.m}")
        if len(self.coefficients) < self.m + 2:
            raise ConfigError(f"Flux needs a nonzero u^{self.m + 1} coefficient")

        if self.kind == FluxKind.CONVEX and self.m != 1:
            raise ConfigError("Convex (uniformly convex) fluxes have m = 1")
        if self.kind == FluxKind.CONVEX_DEGENERATE and (self.m < 3 or self.m % 2 == 0):
            raise ConfigError("ConvexDegenerate fluxes need an odd m >= 3")
        if self.kind == FluxKind.NON_CONVEX_INFLECTION and self.m % 2 == 1:
            raise ConfigError("NonConvexInflection fluxes need an even m")

        if abs(self.fprime(0.0)) > ZERO_SPEED_TOLERANCE:
            raise ConfigError("Flux must have zero speed at the origin: f'(0) = 0")
        for k in range(1, self.m + 1):
            if abs(self.coefficients[k]) > ZERO_SPEED_TOLERANCE:
                raise ConfigError(f"Derivative of order {k} must vanish at 0 for m = {self.m}")
        if self.coefficients[self.m + 1] == 0.0:
            raise ConfigError(f"Derivative of order {self.m + 1} must not vanish at 0")

        grid = np.linspace(-self.M, self.M, ASSUMPTION_GRID_POINTS)
        grid = grid[grid != 0.0]
        second = self.fsecond(grid)
        if self.is_convex:
            if np.any(second <= 0.0):
                raise ConfigError("Convex kinds need f'' > 0 on [-M, M] \\ {0}")
        else:
            if np.any(second * grid * self.sigma <= 0.0):
                raise ConfigError("Inflection fluxes need f''(u) * u * sign(f^(m+1)(0)) > 0 on [-M, M] \\ {0}")

    # -- evaluation ---------------------------------------------------------

    @property
    def is_convex(self) -> bool:
        return self.kind in (FluxKind.CONVEX, FluxKind.CONVEX_DEGENERATE)

    @property
    def sigma(self) -> float:
        """Sign of f^(m+1)(0)."""
        return 1.0 if self.coefficients[self.m + 1] > 0 else -1.0

    @property
    def monomial(self) -> Optional[Tuple[float, int]]:
        """(c, p) when f(u) = c * u**p up to a constant, else None."""
        nonzero = [(k, c) for k, c in enumerate(self.coefficients) if k > 0 and c != 0.0]
        if len(nonzero) != 1:
            return None
        p, c = nonzero[0]
        return c, p

    def f(self, u: Number) -> Number:
        return _horner(self.coefficients, u)

    def fprime(self, u: Number) -> Number:
        return _horner(self._d1, u)

    def fsecond(self, u: Number) -> Number:
        return _horner(self._d2, u)

    def to_spec(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "m": self.m,
            "coeffs": list(self.coefficients),
            "M": self.M,
            "name": self.name,
        }


@dataclass(frozen=True)
class FluxConstants:
    """Numerically estimated (or configured) constants of a flux on [-M, M]."""

    fprime_M: float
    beta_M: float
    sigma_M: float
    alpha_bar: float
    sigma_bar: float
    C1: float = DEFAULT_C1
    c1: float = DEFAULT_C1_SMALL
    c2: float = DEFAULT_C2
    kappa_M: Optional[float] = None
    kappa_tilde_M: Optional[float] = None
    mean_value_ratio: Optional[float] = None
    mean_value_bound_holds: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# --- Registered fluxes ---

def monomial_flux(m: int, M: float = 1.0, mirrored: bool = False) -> FluxModel:
    """f(u) = +/- u^(m+1)/(m+1); the sign flip is only meaningful for even m."""
    if m % 2 == 1 and mirrored:
        raise ConfigError("Mirrored monomials are concave for odd m")
    if m == 1:
        kind = FluxKind.CONVEX
    elif m % 2 == 1:
        kind = FluxKind.CONVEX_DEGENERATE
    else:
        kind = FluxKind.NON_CONVEX_INFLECTION
    coeffs = [0.0] * (m + 2)
    coeffs[m + 1] = (-1.0 if mirrored else 1.0) / (m + 1)
    name = f"{'-' if mirrored else ''}u^{m + 1}/{m + 1}"
    return FluxModel(kind=kind, m=m, coefficients=tuple(coeffs), M=M, name=name)


def registered_flux(name: str, M: float = 1.0, m: Optional[int] = None, mirrored: bool = False) -> FluxModel:
    """Look up a named flux."""
    name = name.lower()
    if name == "burgers":
        return FluxModel(FluxKind.CONVEX, 1, (0.0, 0.0, 0.5), M, name="burgers")
    if name == "cubic":
        return FluxModel(FluxKind.NON_CONVEX_INFLECTION, 2, (0.0, 0.0, 0.0, -1.0 / 3.0 if mirrored else 1.0 / 3.0), M,
                         name="-cubic" if mirrored else "cubic")
    if name == "quartic":
        return FluxModel(FluxKind.CONVEX_DEGENERATE, 3, (0.0, 0.0, 0.0, 0.0, 0.25), M, name="quartic")
    if name == "mixed":
        return FluxModel(FluxKind.NON_CONVEX_INFLECTION, 2, (0.0, 0.0, 0.0, 1.0 / 3.0, 0.125), M, name="mixed")
    if name == "monomial":
        if m is None:
            raise ConfigError("The monomial family needs an order m")
        return monomial_flux(m, M, mirrored)
    raise ConfigError(f"Unknown flux name '{name}'. Known: {', '.join(REGISTERED_FLUXES)}")


REGISTERED_FLUXES = ("burgers", "cubic", "quartic", "mixed", "monomial")


def with_range(flux: FluxModel, M: float) -> FluxModel:
    """Same flux on a different working range."""
    if float(M) == flux.M:
        return flux
    return replace(flux, M=float(M))


def flux_from_spec(spec: Dict[str, Any], M: Optional[float] = None) -> FluxModel:
    """
    Build a FluxModel from its JSON specification.

    Args:
        spec: {"kind", "m", "coeffs", "M"} or {"name", "M", ["m"], ["mirrored"]}
        M: Optional override of the working range

    Returns:
        FluxModel
    """
    if not isinstance(spec, dict):
        raise ConfigError("Flux specification must be a dictionary")
    working_range = float(M if M is not None else spec.get("M", 1.0))
    if "coeffs" in spec:
        try:
            return FluxModel(
                kind=FluxKind(spec["kind"]),
                m=int(spec["m"]),
                coefficients=tuple(float(c) for c in spec["coeffs"]),
                M=working_range,
                name=spec.get("name", "custom"),
            )
        except KeyError as e:
            raise ConfigError(f"Flux specification is missing field {e}")
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid flux specification: {e}")
    if "name" in spec:
        m = spec.get("m")
        return registered_flux(spec["name"], working_range, None if m is None else int(m), bool(spec.get("mirrored", False)))
    raise ConfigError("Flux specification needs either 'coeffs' or 'name'")


# --- Evaluation ---

def evaluate(flux: FluxModel, order: int, u: float) -> float:
    """Evaluate f, f' or f'' at u (order 0, 1, 2)."""
    if abs(u) > flux.M * (1 + 1e-12):
        logger.warning("Evaluating %s at u=%g outside the working range |u| <= %g", flux.name, u, flux.M)
    if order == 0:
        return float(flux.f(u))
    if order == 1:
        return float(flux.fprime(u))
    if order == 2:
        return float(flux.fsecond(u))
    raise DomainError(f"Derivative order must be 0, 1 or 2, got {order}")


def max_abs_fprime(flux: FluxModel, h: float) -> float:
    """f'_h = max over |z| <= h of |f'(z)|."""
    grid = np.linspace(-h, h, ASSUMPTION_GRID_POINTS)
    return float(np.max(np.abs(flux.fprime(grid))))


def max_abs_fsecond(flux: FluxModel, lo: float, hi: float) -> float:
    """max of |f''| over [lo, hi], with the monomial shortcut (|f''| monotone in |z|)."""
    mono = flux.monomial
    if mono is not None:
        c, p = mono
        far = max(abs(lo), abs(hi))
        return abs(c) * p * (p - 1) * far ** (p - 2)
    grid = np.linspace(lo, hi, ASSUMPTION_GRID_POINTS)
    return float(np.max(np.abs(flux.fsecond(grid))))


# --- Oscillation maps ---

def _check_s(flux: FluxModel, s: float):
    if not (s > 0.0) or s > 2.0 * flux.M * (1 + 1e-12):
        raise DomainError(f"s must lie in (0, 2M] = (0, {2 * flux.M}], got {s}")


def _grid_infimum(flux: FluxModel, lo: float, hi: float, gap: float) -> float:
    """inf |f'(v) - f'(u)| / (v - u) over lo <= u < v <= hi with v - u >= gap."""
    x = np.linspace(lo, hi, INFIMUM_GRID_POINTS)
    fp = flux.fprime(x)
    best = np.inf
    for i in range(len(x) - 1):
        dx = x[i + 1:] - x[i]
        mask = dx >= gap * (1 - 1e-12)
        if not np.any(mask):
            break
        quotients = np.abs(fp[i + 1:][mask] - fp[i]) / dx[mask]
        best = min(best, float(np.min(quotients)))

    # refine along the active constraint v = u + gap
    if hi - lo - gap > 0:
        res = minimize_scalar(
            lambda u: abs(flux.fprime(u + gap) - flux.fprime(u)) / gap,
            bounds=(lo, hi - gap),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = min(best, float(res.fun))
    else:
        best = min(best, abs(flux.fprime(hi) - flux.fprime(lo)) / (hi - lo))
    return best


@lru_cache(maxsize=4096)
def _same_sign_quotient(flux: FluxModel, gap: float) -> float:
    mono = flux.monomial
    if mono is not None:
        c, p = mono
        return abs(c) * p * gap ** (p - 2)
    right = _grid_infimum(flux, 0.0, flux.M, gap)
    left = _grid_infimum(flux, -flux.M, 0.0, gap)
    return min(left, right)


@lru_cache(maxsize=4096)
def _all_pairs_quotient(flux: FluxModel, gap: float) -> float:
    mono = flux.monomial
    if mono is not None:
        c, p = mono
        m = p - 1
        return abs(c) * p * (gap / 2.0) ** (m - 1)
    return _grid_infimum(flux, -flux.M, flux.M, gap)


def delta(flux: FluxModel, s: float) -> float:
    """
    Oscillation map Delta(s): s times the infimal same-sign difference quotient
    of f' over pairs |u|, |v| <= M with |v - u| >= s.

    For s in (M, 2M] no same-sign pair is that far apart; the map is continued
    linearly with the quotient at gap M.
    """
    _check_s(flux, s)
    return s * _same_sign_quotient(flux, min(float(s), flux.M))


def delta_hat(flux: FluxModel, s: float) -> float:
    """Oscillation map allowing opposite-sign pairs; convex kinds only."""
    if not flux.is_convex:
        raise KindError("delta_hat is only defined for convex fluxes")
    _check_s(flux, s)
    return s * _all_pairs_quotient(flux, min(float(s), 2.0 * flux.M))


def delta_inverse(flux: FluxModel, y: float, hatted: bool = False) -> float:
    """
    Invert Delta (or Delta-hat) by bisection on (0, 2M].

    Raises:
        RangeError: if y exceeds the map's value at 2M
    """
    forward = delta_hat if hatted else delta
    if not y > 0.0:
        raise DomainError(f"delta_inverse needs y > 0, got {y}")
    top = forward(flux, 2.0 * flux.M)
    if y > top * (1 + 1e-12):
        raise RangeError(f"y = {y} exceeds the map's maximum {top} at s = 2M")
    if y >= top:
        return 2.0 * flux.M

    def residual(s):
        return (forward(flux, s) if s > 0.0 else 0.0) - y

    return float(bisect(residual, 0.0, 2.0 * flux.M, xtol=BISECTION_XTOL, maxiter=400))


# --- Inverses of f' ---

def branch_inverse(flux: FluxModel, branch: int, y: float) -> float:
    """
    Preimage of y under f' restricted to [0, M] (branch=+1) or [-M, 0] (branch=-1).
    """
    if branch not in (-1, 1):
        raise DomainError(f"branch must be -1 or +1, got {branch}")
    end = float(flux.fprime(branch * flux.M))
    lo, hi = min(0.0, end), max(0.0, end)
    slack = ROOT_TOLERANCE * max(1.0, abs(end))
    if y < lo - slack or y > hi + slack:
        raise RangeError(f"y = {y} outside the image [{lo}, {hi}] of branch {branch:+d}")
    if y == 0.0:
        return 0.0
    y = min(max(y, lo), hi)
    if y == end:
        return branch * flux.M
    r = bisect(lambda r: flux.fprime(branch * r) - y, 0.0, flux.M, xtol=BISECTION_XTOL, maxiter=400)
    return branch * float(r)


def branch_inverse_array(flux: FluxModel, branches: np.ndarray, y: np.ndarray, iterations: int = 90) -> np.ndarray:
    """Vectorised branch_inverse by bisection; y is clipped into each branch image."""
    branches = np.asarray(branches, dtype=float)
    y = np.asarray(y, dtype=float)
    end = flux.fprime(branches * flux.M)
    y = np.clip(y, np.minimum(0.0, end), np.maximum(0.0, end))
    lo = np.zeros_like(y)
    hi = np.full_like(y, flux.M)
    increasing = end >= 0.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        value = flux.fprime(branches * mid)
        below = np.where(increasing, value < y, value > y)
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    result = branches * 0.5 * (lo + hi)
    return np.where(y == 0.0, 0.0, result)


def fprime_inverse(flux: FluxModel, y: Number) -> Number:
    """Global inverse of f' on [-M, M] for convex kinds (values clipped to the image)."""
    if not flux.is_convex:
        raise KindError("f' is not globally invertible for inflection fluxes")
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    branches = np.where(arr >= 0.0, 1.0, -1.0)
    out = branch_inverse_array(flux, branches, arr)
    return out if isinstance(y, np.ndarray) else float(out[0])


def conjugate_point(flux: FluxModel, u: float) -> float:
    """
    pi(u): the point on the opposite branch with f'(pi(u)) = f'(u); pi(0) = 0.
    """
    if flux.kind != FluxKind.NON_CONVEX_INFLECTION:
        raise KindError("conjugate_point is only defined for inflection fluxes")
    if abs(u) > flux.M * (1 + 1e-12):
        raise DomainError(f"|u| must not exceed M = {flux.M}")
    if u == 0.0:
        return 0.0
    target = abs(float(flux.fprime(u)))
    side = -1.0 if u > 0 else 1.0

    reach = flux.M
    samples = np.linspace(0.0, reach, 513)
    while abs(flux.fprime(side * reach)) < target:
        reach *= 2.0
        if reach > CONJUGATE_MAX_EXPANSION * flux.M:
            raise RangeError(f"No conjugate point for u = {u} within {CONJUGATE_MAX_EXPANSION}M")
        samples = np.linspace(0.0, reach, 513)
        logger.debug("conjugate_point: expanding bracket to %g", reach)
    values = np.abs(flux.fprime(side * samples))
    top = int(np.argmax(values >= target))
    if np.any(np.diff(values[: top + 1]) < -ROOT_TOLERANCE):
        raise RangeError(f"f' is not monotone on the opposite branch up to the conjugate of u = {u}")
    r = bisect(lambda r: abs(flux.fprime(side * r)) - target, 0.0, samples[top], xtol=BISECTION_XTOL, maxiter=400)
    return side * float(r)


# --- Constants ---

def estimate_constants(
    flux: FluxModel,
    grid_n: int = 2000,
    C1: float = DEFAULT_C1,
    c1: float = DEFAULT_C1_SMALL,
    c2: float = DEFAULT_C2,
) -> FluxConstants:
    """
    Estimate the flux constants on a grid of [-M, M].

    Args:
        flux: Flux model
        grid_n: Number of grid intervals (>= 1000)
        C1, c1, c2: Configured constants carried into the record

    Returns:
        FluxConstants
    """
    if grid_n < 1000:
        raise DomainError(f"grid_n must be >= 1000, got {grid_n}")
    M = flux.M
    u = np.linspace(-M, M, grid_n + 1)
    fprime_M = float(np.max(np.abs(flux.fprime(u))))

    kappa = kappa_tilde = ratio = holds = None
    if flux.kind == FluxKind.NON_CONVEX_INFLECTION:
        nz = u[u != 0.0]
        full = flux.fprime(nz)
        half = flux.fprime(nz / 2.0)
        kappa = float(min(np.min((full - half) / full), np.min(half / full)))
        if not 0.0 < kappa < 1.0:
            raise DegenerateError(f"kappa_M = {kappa} is not in (0, 1)")
        kappa_tilde = kappa ** 2 / (kappa ** 2 + 2.0)
        ratio = float(np.max(np.abs((flux.f(nz) - flux.f(0.0)) / (nz * full))))
        holds = bool(ratio <= 1.0 - kappa / 2.0 + 1e-12)

    # beta_M: s^m / beta <= Delta(s) <= beta * s^m on (0, sigma_M]
    sigma_M = M
    s = np.linspace(M / CONSTANT_FIT_POINTS, sigma_M, CONSTANT_FIT_POINTS)
    scaled = np.array([delta(flux, float(si)) for si in s]) / s ** flux.m
    beta = float(max(np.max(scaled), np.max(1.0 / scaled))) * (1 + 1e-9)

    # alpha_bar: max{max_[0,s]|f''|, max_[-s,0]|f''|} <= alpha_bar * s^(m-1) on (0, sigma_bar]
    sigma_bar = M
    x = np.linspace(0.0, sigma_bar, grid_n + 1)
    right = np.maximum.accumulate(np.abs(flux.fsecond(x)))
    left = np.maximum.accumulate(np.abs(flux.fsecond(-x)))
    envelope = np.maximum(left, right)[1:] / x[1:] ** (flux.m - 1)
    alpha_bar = float(np.max(envelope))

    constants = FluxConstants(
        fprime_M=fprime_M,
        beta_M=beta,
        sigma_M=sigma_M,
        alpha_bar=alpha_bar,
        sigma_bar=sigma_bar,
        C1=C1,
        c1=c1,
        c2=c2,
        kappa_M=kappa,
        kappa_tilde_M=kappa_tilde,
        mean_value_ratio=ratio,
        mean_value_bound_holds=holds,
    )
    logger.info("Estimated constants for %s: %s", flux.name, constants)
    return constants


def fitted_exponent(flux: FluxModel, points: int = 32) -> float:
    """Least-squares slope of log Delta(s) against log s on (0, M]."""
    s = np.geomspace(flux.M / 1000.0, flux.M, points)
    values = np.array([delta(flux, float(si)) for si in s])
    slope, _ = np.polyfit(np.log(s), np.log(values), 1)
    return float(slope)


def format_constants(constants: FluxConstants) -> Dict[str, Any]:
    """Constants as a JSON-friendly dict with rounded floats."""
    out = {}
    for key, value in constants.to_dict().items():
        if isinstance(value, float) and math.isfinite(value):
            out[key] = round(value, 12)
        else:
            out[key] = value
    return out
