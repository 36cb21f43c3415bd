"""
Lower-bound machinery: classes of step functions with a one-sided bound on
their derivative, backward construction of initial data reaching a given
profile at time T, and explicit eps-separated witness families.

A witness family is a row of n teeth on [-L/2, L/2]. Each tooth is a
staircase approximating a ramp of slope b up to a plateau, followed (or
preceded) by a jump in the direction the class allows; a codeword bit
switches its tooth on or off. Teeth are disjoint, so the L1 distance between
two witnesses is the tooth area times the Hamming distance of their
codewords. Short rows use an exhaustive greedy code, long rows a
Reed-Solomon code over GF(2^r) concatenated with the Hadamard code.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ClassError, DegenerateError, DomainError, ParamError, RangeError
from .flux_analysis import FluxConstants, FluxModel, estimate_constants, max_abs_fprime, max_abs_fsecond, with_range
from .solver import PiecewiseConstantFn, default_delta, evolve, l1_distance, one_sided_slack

logger = logging.getLogger(__name__)

# --- Configuration ---
GREEDY_BIT_LIMIT = 14             # exhaustive greedy search up to 2^14 codewords
CODE_SYMBOL_BITS = 8              # largest Reed-Solomon symbol, GF(256)
TOOTH_WIDTH_FACTOR = 3.0          # default cell width in ramp runs
CODEWORD_LISTING_LIMIT = 2 ** 16
SEPARATION_CHECK_LIMIT = 64
JUMP_TOLERANCE_FACTOR = 3.0       # continuity proxy: front jumps <= 3 delta
QUOTIENT_TOLERANCE = 1e-6
WINDOW_TOLERANCE = 1e-9

IRREDUCIBLE_POLYNOMIALS = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
}


class ClassSide(str, Enum):
    DV_LEQ = "DvLeq"     # Dv <= b
    DV_GEQ = "DvGeq"     # Dv >= -b


class SignConstraint(str, Enum):
    NON_NEGATIVE = "NonNegative"
    NON_POSITIVE = "NonPositive"

    @property
    def sign(self) -> int:
        return 1 if self is SignConstraint.NON_NEGATIVE else -1


@dataclass(frozen=True)
class OneSidedClassSpec:
    """
    Step functions with support in [-L/2, L/2], |v| <= h, a sign constraint and a
    one-sided derivative bound in the sense of measures.

    For step functions the bound is read with a tolerance step_tol per jump in
    the restricted direction: a staircase of steps <= step_tol climbing at
    average slope b is a member of Dv <= b. L=None drops the support condition.
    """

    L: Optional[float]
    h: float
    bound: float
    side: ClassSide
    sign: SignConstraint
    step_tol: float = 0.0

    def membership(self, v: PiecewiseConstantFn) -> Tuple[bool, List[str]]:
        reasons: List[str] = []
        v = v.normalize()
        if v.is_zero:
            return True, reasons
        if self.L is not None:
            x0, x1 = v.support()
            half = self.L / 2.0
            slack = WINDOW_TOLERANCE * (1.0 + half)
            if x0 < -half - slack or x1 > half + slack:
                reasons.append(f"support [{x0:.6g}, {x1:.6g}] exceeds [-{half:.6g}, {half:.6g}]")
        if v.sup_norm() > self.h * (1 + 1e-12):
            reasons.append(f"sup norm {v.sup_norm():.6g} exceeds h = {self.h:.6g}")
        if self.sign is SignConstraint.NON_NEGATIVE and np.any(v.values < 0.0):
            reasons.append("negative values in a non-negative class")
        if self.sign is SignConstraint.NON_POSITIVE and np.any(v.values > 0.0):
            reasons.append("positive values in a non-positive class")

        orientation = 1.0 if self.side is ClassSide.DV_LEQ else -1.0
        lefts, rights, values = v.padded_cells()
        worst, pair = one_sided_slack(values, lefts, rights, self.bound, orientation=orientation, near=True)
        if worst < -self.step_tol - 1e-12:
            word = "rises" if self.side is ClassSide.DV_LEQ else "falls"
            reasons.append(
                f"v {word} faster than slope {self.bound:.6g} between x={pair[0]:.6g} and x={pair[1]:.6g} "
                f"(slack {worst:.3g})"
            )
        return not reasons, reasons

    def to_dict(self) -> Dict[str, Any]:
        return {
            "L": self.L,
            "h": self.h,
            "bound": self.bound,
            "side": self.side.value,
            "sign": self.sign.value,
            "step_tol": self.step_tol,
        }


def b_constants(flux: FluxModel, h: float, T: float) -> Tuple[float, float]:
    """
    b+ = 1 / (2T max_[0,h] |f''|) and b- = 1 / (2T max_[-h,0] |f''|).

    Raises:
        DegenerateError: if |f''| vanishes on either interval
    """
    if not (0.0 < h <= flux.M * (1 + 1e-12)):
        raise DomainError(f"h must lie in (0, M], got {h}")
    if not T > 0.0:
        raise DomainError(f"T must be positive, got {T}")
    right = max_abs_fsecond(flux, 0.0, h)
    left = max_abs_fsecond(flux, -h, 0.0)
    if right == 0.0 or left == 0.0:
        raise DegenerateError(f"f'' vanishes on [-{h}, {h}] for {flux.name}")
    return 1.0 / (2.0 * T * right), 1.0 / (2.0 * T * left)


def _curvature_sign(flux: FluxModel, u: float) -> int:
    return 1 if flux.fsecond(u) > 0.0 else -1


def witness_class(flux: FluxModel, L: float, h: float, T: float, which: str = "plus",
                  step_tol: float = 0.0) -> OneSidedClassSpec:
    """
    Class reachable at time T: non-negative with Dv <= b+ when f''(h) > 0 (else Dv >= -b+),
    non-positive with Dv <= b- when f''(-h) > 0 (else Dv >= -b-).
    """
    b_plus, b_minus = b_constants(flux, h, T)
    if which == "plus":
        side = ClassSide.DV_LEQ if _curvature_sign(flux, h) > 0 else ClassSide.DV_GEQ
        return OneSidedClassSpec(L, h, b_plus, side, SignConstraint.NON_NEGATIVE, step_tol)
    if which == "minus":
        side = ClassSide.DV_LEQ if _curvature_sign(flux, -h) > 0 else ClassSide.DV_GEQ
        return OneSidedClassSpec(L, h, b_minus, side, SignConstraint.NON_POSITIVE, step_tol)
    raise DomainError(f"which must be 'plus' or 'minus', got '{which}'")


def regularity_class(flux: FluxModel, L: Optional[float], h: float, T: float, which: str = "plus",
                     step_tol: float = 0.0) -> OneSidedClassSpec:
    """
    Initial data whose solutions stay continuous on (0, T]:
    sign(f''(+-h)) * Du0 >= -b+-, with u0 of one sign.
    """
    if which not in ("plus", "minus"):
        raise DomainError(f"which must be 'plus' or 'minus', got '{which}'")
    b_plus, b_minus = b_constants(flux, h, T)
    if which == "plus":
        point, bound, sign = h, b_plus, SignConstraint.NON_NEGATIVE
    else:
        point, bound, sign = -h, b_minus, SignConstraint.NON_POSITIVE
    side = ClassSide.DV_GEQ if _curvature_sign(flux, point) > 0 else ClassSide.DV_LEQ
    return OneSidedClassSpec(L, h, bound, side, sign, step_tol)


def controllability_holds(flux: FluxModel, L: float, h: float, T: float) -> bool:
    """max_{|z| <= h} |f'(z)| <= L / (2T)."""
    return max_abs_fprime(flux, h) <= L / (2.0 * T) * (1 + 1e-12)


def backward_construct(
    flux: FluxModel,
    v: PiecewiseConstantFn,
    class_spec: OneSidedClassSpec,
    T: float,
    delta: Optional[float] = None,
) -> PiecewiseConstantFn:
    """
    Initial datum u0 with S_T u0 = v, built by solving forward from the mirror image of v.

    u0(x) = (S_T w0)(-x) with w0(x) = v(-x).

    Raises:
        ClassError: if v is not a member of class_spec
        RangeError: if max_{|z| <= h} |f'(z)| > L / (2T)
    """
    ok, reasons = class_spec.membership(v)
    if not ok:
        raise ClassError("Profile is not in the reachable class", reasons)
    if class_spec.L is not None and not controllability_holds(flux, class_spec.L, class_spec.h, T):
        raise RangeError(
            f"max |f'| on [-{class_spec.h}, {class_spec.h}] = {max_abs_fprime(flux, class_spec.h):.6g} "
            f"exceeds L/(2T) = {class_spec.L / (2.0 * T):.6g}"
        )
    if v.normalize().is_zero:
        return PiecewiseConstantFn.zero()
    delta = default_delta(flux) if delta is None else delta
    w = evolve(flux, v.mirror(), T, delta=delta)
    return w.mirror()


@dataclass
class RegularityReport:
    passed: bool
    precondition_ok: bool
    precondition_reasons: List[str] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    worst_slack: List[float] = field(default_factory=list)
    max_jump: List[float] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "precondition_ok": self.precondition_ok,
            "precondition_reasons": self.precondition_reasons,
            "times": self.times,
            "worst_slack": self.worst_slack,
            "max_jump": self.max_jump,
            "violations": self.violations,
        }


def verify_regularity(flux: FluxModel, u0: PiecewiseConstantFn, h: float, T: float,
                      delta: Optional[float] = None) -> RegularityReport:
    """
    Evolve u0 to T/4, T/2 and T and check continuity and the derivative bound.

    Each solution must have no jump above 3 delta, and
    sign(f''(+-h)) * (u(x2) - u(x1)) >= -(x2 - x1) / (T max |f''|) across cells
    up to QUOTIENT_TOLERANCE.
    A u0 outside the regularity class is reported, not evolved.
    """
    delta = default_delta(flux) if delta is None else delta
    u0 = u0.normalize()
    if u0.is_zero:
        return RegularityReport(passed=True, precondition_ok=True, times=[T / 4.0, T / 2.0, T],
                                worst_slack=[float("inf")] * 3, max_jump=[0.0] * 3)

    if np.all(u0.values >= 0.0):
        which, point = "plus", h
    elif np.all(u0.values <= 0.0):
        which, point = "minus", -h
    else:
        return RegularityReport(passed=False, precondition_ok=False,
                                precondition_reasons=["u0 changes sign"])

    klass = regularity_class(flux, None, h, T, which, step_tol=delta)
    ok, reasons = klass.membership(u0)
    if not ok:
        return RegularityReport(passed=False, precondition_ok=False, precondition_reasons=reasons)

    curvature = _curvature_sign(flux, point)
    bound = 2.0 * klass.bound
    jump_tol = JUMP_TOLERANCE_FACTOR * delta
    report = RegularityReport(passed=True, precondition_ok=True)
    for t in (T / 4.0, T / 2.0, T):
        u = evolve(flux, u0, t, delta=delta)
        lefts, rights, values = u.padded_cells()
        worst, pair = one_sided_slack(values, lefts, rights, bound, orientation=-curvature, near=False)
        jump = float(np.max(np.abs(np.diff(values)))) if len(values) > 1 else 0.0
        report.times.append(t)
        report.worst_slack.append(worst)
        report.max_jump.append(jump)
        if jump > jump_tol:
            report.violations.append(f"t={t:.6g}: jump {jump:.3g} exceeds {jump_tol:.3g}")
        if worst < -QUOTIENT_TOLERANCE:
            report.violations.append(f"t={t:.6g}: derivative bound fails between x={pair[0]:.6g} and x={pair[1]:.6g}")
    report.passed = not report.violations
    return report


# --- Codes on the teeth ---

def _kleitman_log2(n: int, D: int) -> float:
    """log2 of the largest Hamming-cube subset of diameter <= D (summed in log space)."""
    if D >= n:
        return float(n)
    if D % 2 == 0:
        i = np.arange(D // 2 + 1)
        ln_total = logsumexp(gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1))
    else:
        i = np.arange((D - 1) // 2 + 1)
        ln_total = math.log(2.0) + logsumexp(gammaln(n) - gammaln(i + 1) - gammaln(n - i))
    return float(ln_total / math.log(2.0))


@lru_cache(maxsize=None)
def _popcounts(bits: int) -> np.ndarray:
    return np.array([bin(i).count("1") for i in range(1 << bits)], dtype=np.int64)


@dataclass(frozen=True)
class GreedyCode:
    """Lexicographic greedy code: every word kept when it is far enough from all earlier ones."""

    length: int
    min_distance: int
    words: Tuple[int, ...]

    @classmethod
    def build(cls, length: int, min_distance: int) -> "GreedyCode":
        if length > GREEDY_BIT_LIMIT:
            raise ParamError(f"Greedy search is limited to {GREEDY_BIT_LIMIT} bits, got {length}")
        if min_distance <= 1:
            return cls(length, min_distance, tuple(range(1 << length)))
        weight = _popcounts(length)
        chosen = np.zeros(1 << length, dtype=np.int64)
        count = 0
        for word in range(1 << length):
            if count == 0 or np.all(weight[chosen[:count] ^ word] >= min_distance):
                chosen[count] = word
                count += 1
        return cls(length, min_distance, tuple(int(w) for w in chosen[:count]))

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def log2_size(self) -> float:
        return math.log2(self.size)

    def word(self, index: int) -> str:
        return format(self.words[index], f"0{self.length}b")

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "greedy", "length": self.length, "min_distance": self.min_distance, "size": self.size}


def _gf_mul(a: int, b: int, bits: int) -> int:
    """Product in GF(2^bits) modulo IRREDUCIBLE_POLYNOMIALS[bits]."""
    poly, top = IRREDUCIBLE_POLYNOMIALS[bits], 1 << bits
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return result


@lru_cache(maxsize=None)
def _hadamard_rows(bits: int) -> Tuple[str, ...]:
    """Hadamard codeword of every symbol: bit x of symbol s is the parity of s & x."""
    return tuple(
        "".join("1" if bin(s & x).count("1") & 1 else "0" for x in range(1 << bits))
        for s in range(1 << bits)
    )


@dataclass(frozen=True)
class ConcatenatedCode:
    """
    Reed-Solomon code over GF(2^r) with `blocks` symbols and `dimension` message
    symbols, each symbol written out as its Hadamard codeword of 2^r bits.

    Distinct messages give words at Hamming distance at least
    (blocks - dimension + 1) 2^(r-1). Teeth past blocks 2^r stay off.
    """

    symbol_bits: int
    blocks: int
    dimension: int
    length: int

    def __post_init__(self):
        if self.symbol_bits not in IRREDUCIBLE_POLYNOMIALS:
            raise ParamError(f"symbol_bits must be one of {sorted(IRREDUCIBLE_POLYNOMIALS)}, got {self.symbol_bits}")
        if not 0 < self.blocks <= 1 << self.symbol_bits:
            raise ParamError(f"blocks must lie in [1, {1 << self.symbol_bits}], got {self.blocks}")
        if not 0 <= self.dimension <= self.blocks:
            raise ParamError(f"dimension must lie in [0, {self.blocks}], got {self.dimension}")
        if self.length < self.blocks << self.symbol_bits:
            raise ParamError(f"length {self.length} is shorter than {self.blocks << self.symbol_bits} code bits")

    @classmethod
    def for_distance(cls, length: int, min_distance: int) -> "ConcatenatedCode":
        """Largest code of this shape on `length` teeth with the given minimum distance."""
        r = min(CODE_SYMBOL_BITS, length.bit_length() - 1)
        blocks = min(length >> r, 1 << r)
        half = 1 << (r - 1)
        dimension = min(blocks, blocks + 1 - (-(-min_distance // half)))
        return cls(r, blocks, max(dimension, 0), length)

    @property
    def size(self) -> int:
        return 1 << (self.symbol_bits * self.dimension)

    @property
    def log2_size(self) -> float:
        return float(self.symbol_bits * self.dimension)

    @property
    def min_distance(self) -> Optional[int]:
        if self.dimension == 0:
            return None
        return (self.blocks - self.dimension + 1) << (self.symbol_bits - 1)

    def word(self, index: int) -> str:
        if not 0 <= index < self.size:
            raise DomainError(f"index must lie in [0, {self.size}), got {index}")
        r = self.symbol_bits
        digits = []
        for _ in range(self.dimension):
            index, digit = divmod(index, 1 << r)
            digits.append(digit)
        rows = _hadamard_rows(r)
        parts = []
        for point in range(self.blocks):
            symbol = 0
            for digit in reversed(digits):
                symbol = _gf_mul(symbol, point, r) ^ digit
            parts.append(rows[symbol])
        return "".join(parts).ljust(self.length, "0")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "concatenated",
            "length": self.length,
            "symbol_bits": self.symbol_bits,
            "blocks": self.blocks,
            "dimension": self.dimension,
            "min_distance": self.min_distance,
            "log2_size": self.log2_size,
        }


ToothCode = Union[GreedyCode, ConcatenatedCode]


def tooth_code(n_cells: int, min_distance: int) -> ToothCode:
    """Exhaustive greedy code on short rows, concatenated code on long ones."""
    if n_cells <= GREEDY_BIT_LIMIT:
        return GreedyCode.build(n_cells, min_distance)
    return ConcatenatedCode.for_distance(n_cells, min_distance)


def default_cell_count(L: float, h: float, b: float) -> int:
    """
    Teeth of full height h whose cells are TOOTH_WIDTH_FACTOR ramp runs wide,
    rounded down to a length the concatenated code fills.
    """
    n_max = max(int(math.floor(b * L / (TOOTH_WIDTH_FACTOR * h))), 1)
    if n_max <= GREEDY_BIT_LIMIT:
        return n_max
    r = min(CODE_SYMBOL_BITS, n_max.bit_length() - 1)
    return min(n_max >> r, 1 << r) << r


# --- Witness families ---

@dataclass
class WitnessFamilySpec:
    """
    Row of n_cells teeth of height tooth_height on [-L/2, L/2] and the code switching them.

    A tooth is a staircase ramp of slope tooth_slope up to tooth_height, a
    plateau filling the rest of its cell and a jump back to 0, mirrored when
    the class restricts the other direction.
    """

    n_cells: int
    tooth_slope: float
    tooth_height: float
    L: float
    h: float
    T: float
    eps: float
    delta: float
    steps: int
    class_spec: OneSidedClassSpec
    ramp_first: bool
    code: Optional[ToothCode] = None
    kleitman_log2: float = 0.0

    @property
    def cell_width(self) -> float:
        return self.L / self.n_cells

    @property
    def ramp_width(self) -> float:
        return min(self.tooth_height / self.tooth_slope, self.cell_width)

    @property
    def tooth_area(self) -> float:
        """Area of one tooth: H w - H run (k-1) / (2k)."""
        H, k, run = self.tooth_height, self.steps, self.ramp_width
        return H * self.cell_width - H * run * (k - 1) / (2.0 * k)

    @property
    def max_shared_distance(self) -> int:
        """Largest Hamming distance two witnesses within 2 eps of each other can have."""
        return int(math.floor(2.0 * self.eps / self.tooth_area))

    @property
    def family_size(self) -> int:
        return self.code.size if self.code is not None else 0

    @property
    def separated_log2(self) -> float:
        return self.code.log2_size if self.code is not None else 0.0

    @property
    def certified_log2(self) -> float:
        """Entropy lower bound: best of the separated family and the covering count of the cube."""
        counting = self.n_cells - self.kleitman_log2
        return max(self.separated_log2, counting, 0.0)

    @property
    def codewords(self) -> List[str]:
        if self.family_size > CODEWORD_LISTING_LIMIT:
            raise ParamError(f"Family of {self.family_size} codewords is too large to list; use iter_codewords")
        return list(self.iter_codewords())

    def iter_codewords(self, limit: Optional[int] = None) -> Iterator[str]:
        count = self.family_size if limit is None else min(self.family_size, limit)
        for index in range(count):
            yield self.code.word(index)

    def realize(self, codeword: str) -> PiecewiseConstantFn:
        """Witness for a codeword of '0'/'1' characters."""
        if len(codeword) != self.n_cells or set(codeword) - {"0", "1"}:
            raise DomainError(f"Codeword must be {self.n_cells} characters of 0/1, got '{codeword}'")
        k, H, w = self.steps, self.tooth_height, self.cell_width
        stair = self.ramp_width / k
        s = self.class_spec.sign.sign
        if self.ramp_first:
            levels = s * H * np.arange(1, k + 1) / k
            offsets = np.concatenate([stair * np.arange(k), [w]])
        else:
            levels = s * H * np.arange(k, 0, -1) / k
            offsets = np.concatenate([[0.0], w - stair * np.arange(k - 1, -1, -1)])
        breakpoints: List[float] = []
        values: List[float] = []
        for i, bit in enumerate(codeword):
            if bit != "1":
                continue
            edges = -self.L / 2.0 + i * w + offsets
            if not breakpoints:
                breakpoints.append(float(edges[0]))
            elif edges[0] - breakpoints[-1] > 1e-12 * (1.0 + abs(edges[0])):
                values.append(0.0)
                breakpoints.append(float(edges[0]))
            breakpoints.extend(edges[1:].tolist())
            values.extend(levels.tolist())
        if not breakpoints:
            return PiecewiseConstantFn.zero()
        return PiecewiseConstantFn(np.array(breakpoints), np.array(values)).normalize()

    def iter_witnesses(self, limit: Optional[int] = None) -> Iterator[Tuple[str, PiecewiseConstantFn]]:
        for word in self.iter_codewords(limit):
            yield word, self.realize(word)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_cells": self.n_cells,
            "tooth_slope": self.tooth_slope,
            "tooth_height": self.tooth_height,
            "tooth_area": self.tooth_area,
            "ramp_width": self.ramp_width,
            "steps": self.steps,
            "L": self.L,
            "h": self.h,
            "T": self.T,
            "eps": self.eps,
            "delta": self.delta,
            "ramp_first": self.ramp_first,
            "class": self.class_spec.to_dict(),
            "code": self.code.to_dict() if self.code is not None else None,
            "family_size": self.family_size,
            "separated_log2": self.separated_log2,
            "kleitman_log2": self.kleitman_log2,
            "certified_log2": self.certified_log2,
        }


def build_witness_family(
    flux: FluxModel,
    L: float,
    M: float,
    T: float,
    eps: float,
    n_cells: Optional[int] = None,
    delta: Optional[float] = None,
    which: str = "plus",
) -> WitnessFamilySpec:
    """
    eps-separated witnesses reachable at time T from data in C_[L,h] with h = 6 eps / L.

    Args:
        flux: Flux model
        L, M, T: Support width, amplitude bound and time
        eps: Separation scale (witnesses are pairwise more than 2 eps apart)
        n_cells: Number of teeth (default: cells three ramp runs wide, see default_cell_count)
        delta: Staircase resolution (default 1e-3 M)
        which: "plus" (non-negative teeth) or "minus" (non-positive teeth)

    Returns:
        WitnessFamilySpec; witnesses are realised lazily

    Raises:
        ParamError: if h exceeds M or violates max |f'| on [-h, h] <= L / (2T)
    """
    flux = with_range(flux, M)
    if not (L > 0.0 and T > 0.0 and eps > 0.0):
        raise ParamError(f"L, T and eps must be positive, got {L}, {T}, {eps}")
    h = 6.0 * eps / L
    if h > flux.M:
        raise ParamError(f"h = 6 eps / L = {h:.6g} exceeds M = {flux.M}")
    if not controllability_holds(flux, L, h, T):
        raise ParamError(
            f"eps = {eps} too large: max |f'| on [-{h:.6g}, {h:.6g}] = {max_abs_fprime(flux, h):.6g} > L/(2T)"
        )
    delta = default_delta(flux) if delta is None else float(delta)

    klass = witness_class(flux, L, h, T, which, step_tol=delta)
    b = klass.bound
    if n_cells is None:
        n_cells = default_cell_count(L, h, b)
    if n_cells < 1:
        raise ParamError(f"n_cells must be positive, got {n_cells}")
    width = L / n_cells
    H = min(h, b * width)
    k = max(int(math.ceil(H / delta - 1e-9)), 1)
    ramp_first = (klass.sign.sign * (1 if klass.side is ClassSide.DV_LEQ else -1)) > 0

    spec = WitnessFamilySpec(
        n_cells=n_cells,
        tooth_slope=b,
        tooth_height=H,
        L=L,
        h=h,
        T=T,
        eps=eps,
        delta=delta,
        steps=k,
        class_spec=klass,
        ramp_first=ramp_first,
    )
    D = spec.max_shared_distance
    spec.kleitman_log2 = _kleitman_log2(n_cells, D)
    spec.code = tooth_code(n_cells, D + 1)
    logger.info(
        "Witness family: n=%d, H=%.4g, area=%.4g, D=%d, log2 size %.4g, certified log2=%.4g",
        n_cells, H, spec.tooth_area, D, spec.separated_log2, spec.certified_log2,
    )
    return spec


def check_family_separation(family: WitnessFamilySpec,
                            limit: int = SEPARATION_CHECK_LIMIT) -> Tuple[bool, float]:
    """
    Pairwise L1 check over the first `limit` witnesses (all of them for smaller
    families); returns (all pairs > 2 eps, smallest distance).
    """
    witnesses = [fn for _, fn in family.iter_witnesses(limit)]
    smallest = float("inf")
    for a, b in itertools.combinations(witnesses, 2):
        smallest = min(smallest, l1_distance(a, b))
    return smallest > 2.0 * family.eps, smallest


def analytic_lower_bound(flux: FluxModel, L: float, M: float, T: float, eps: float,
                         constants: Optional[FluxConstants] = None) -> float:
    """
    Lower bound on the eps-entropy of S_T(C_[L,M]).

    Convex kinds: L^2 / (108 ln2 T) / (eps * min{max_[0,h] f'', max_[-h,0] f''}), h = 6 eps / L.
    Inflection fluxes: L^(m+1) / (108 ln2 6^(m-1) alpha_bar T) / eps^m.

    Raises:
        ParamError: if h = 6 eps / L violates the controllability bound
    """
    flux = with_range(flux, M)
    if not (L > 0.0 and T > 0.0 and eps > 0.0):
        raise ParamError(f"L, T and eps must be positive, got {L}, {T}, {eps}")
    h = 6.0 * eps / L
    if h > flux.M or not controllability_holds(flux, L, h, T):
        raise ParamError(f"eps = {eps} violates max |f'| on [-6 eps/L, 6 eps/L] <= L/(2T)")
    if flux.is_convex:
        curvature = min(max_abs_fsecond(flux, 0.0, h), max_abs_fsecond(flux, -h, 0.0))
        if curvature == 0.0:
            raise DegenerateError("f'' vanishes near 0")
        return L * L / (108.0 * math.log(2.0) * T) / (eps * curvature)
    if constants is None:
        constants = estimate_constants(flux)
    m = flux.m
    return L ** (m + 1) / (108.0 * math.log(2.0) * 6.0 ** (m - 1) * constants.alpha_bar * T) / eps ** m


def roundtrip_error(flux: FluxModel, v: PiecewiseConstantFn, class_spec: OneSidedClassSpec, T: float,
                    delta: Optional[float] = None) -> Tuple[float, float]:
    """(||S_T backward_construct(v) - v||_1, 5 delta (1 + TV v)(1 + T))."""
    delta = default_delta(flux) if delta is None else delta
    u0 = backward_construct(flux, v, class_spec, T, delta)
    forward = u0 if u0.is_zero else evolve(flux, u0, T, delta=delta)
    return l1_distance(forward, v), 5.0 * delta * (1.0 + v.total_variation()) * (1.0 + T)
