"""
Entropy solutions of u_t + f(u)_x = 0 for piecewise constant data.

The semigroup S_t is realised by front tracking: every discontinuity of the
data is resolved into a Riemann fan built from the convex (or concave)
envelope of f between the two states, rarefactions are chopped into small
jumps, and the fronts are advanced from collision to collision, re-solving
the local Riemann problem at each one.

For convex fluxes a Lax-Oleinik evaluation is available as an independent
oracle, together with the measurements used to check solutions (flux total
variation, one-sided Lipschitz slack and L1 distance).
"""

import heapq
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, KindError, StallError
from .flux_analysis import FluxModel, fprime_inverse, max_abs_fsecond

logger = logging.getLogger(__name__)

# --- Configuration ---
DEFAULT_DELTA_FRACTION = 1e-3        # default rarefaction step is 1e-3 * M
DEFAULT_MAX_INTERACTIONS = 10 ** 7
HULL_SAMPLES = 4096
E_CONDITION_SAMPLES = 200
E_CONDITION_TOLERANCE = 1e-10
COINCIDENCE_TOLERANCE = 1e-12
TANGENCY_XTOL = 1e-15
OLEINIK_TOLERANCE = 1e-8


# --- Piecewise constant functions ---

@dataclass(eq=False)
class PiecewiseConstantFn:
    """
    Compactly supported step function.

    values[i] is the value on [breakpoints[i], breakpoints[i+1]); the function
    is 0 outside [breakpoints[0], breakpoints[-1]]. The zero function has no
    breakpoints.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(self.breakpoints) == 0 and len(self.values) == 0:
            return
        if len(self.breakpoints) != len(self.values) + 1:
            raise DomainError(
                f"Need len(breakpoints) == len(values) + 1, got {len(self.breakpoints)} and {len(self.values)}"
            )
        if not (np.all(np.isfinite(self.breakpoints)) and np.all(np.isfinite(self.values))):
            raise DomainError("Breakpoints and values must be finite")
        if np.any(np.diff(self.breakpoints) < 0.0):
            raise DomainError("Breakpoints must be ascending")

    @classmethod
    def from_lists(cls, breakpoints: Sequence[float], values: Sequence[float]) -> "PiecewiseConstantFn":
        """Build from plain lists; breakpoints must be strictly ascending."""
        bp = np.asarray(breakpoints, dtype=float)
        if len(bp) > 1 and np.any(np.diff(bp) <= 0.0):
            raise DomainError("Breakpoints must be strictly ascending")
        return cls(bp, np.asarray(values, dtype=float)).normalize()

    @classmethod
    def zero(cls) -> "PiecewiseConstantFn":
        return cls(np.zeros(0), np.zeros(0))

    @classmethod
    def indicator(cls, a: float, b: float, value: float = 1.0) -> "PiecewiseConstantFn":
        return cls.from_lists([a, b], [value])

    @property
    def n_cells(self) -> int:
        return len(self.values)

    @property
    def is_zero(self) -> bool:
        return self.n_cells == 0

    @property
    def lefts(self) -> np.ndarray:
        return self.breakpoints[:-1]

    @property
    def rights(self) -> np.ndarray:
        return self.breakpoints[1:]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def normalize(self) -> "PiecewiseConstantFn":
        """Drop empty cells, merge equal neighbours and trim zero cells at both ends."""
        if self.is_zero:
            return self
        keep = self.widths > 0.0
        bp = np.concatenate([self.breakpoints[:-1][keep], self.breakpoints[-1:]])
        vals = self.values[keep]
        if len(vals) == 0:
            return PiecewiseConstantFn.zero()

        change = np.concatenate([[True], vals[1:] != vals[:-1]])
        vals = vals[change]
        bp = np.concatenate([bp[:-1][change], bp[-1:]])

        nonzero = np.nonzero(vals != 0.0)[0]
        if len(nonzero) == 0:
            return PiecewiseConstantFn.zero()
        first, last = nonzero[0], nonzero[-1]
        return PiecewiseConstantFn(bp[first:last + 2].copy(), vals[first:last + 1].copy())

    def __call__(self, x):
        """Right-continuous evaluation; accepts scalars or arrays."""
        xs = np.asarray(x, dtype=float)
        if self.is_zero:
            out = np.zeros_like(xs)
        else:
            idx = np.searchsorted(self.breakpoints, xs, side="right") - 1
            inside = (idx >= 0) & (idx < self.n_cells)
            out = np.where(inside, self.values[np.clip(idx, 0, self.n_cells - 1)], 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def support(self) -> Optional[Tuple[float, float]]:
        if self.is_zero:
            return None
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def integral(self) -> float:
        return float(np.sum(self.values * self.widths)) if not self.is_zero else 0.0

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if not self.is_zero else 0.0

    def padded_values(self) -> np.ndarray:
        """Values with the zero states outside the support attached at both ends."""
        return np.concatenate([[0.0], self.values, [0.0]])

    def total_variation(self) -> float:
        """Total variation including the jumps to 0 at the support edges."""
        return float(np.sum(np.abs(np.diff(self.padded_values()))))

    def mirror(self) -> "PiecewiseConstantFn":
        """x -> u(-x)."""
        if self.is_zero:
            return self
        return PiecewiseConstantFn(-self.breakpoints[::-1], self.values[::-1].copy())

    def padded_cells(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(lefts, rights, values) with the two unbounded zero regions added."""
        if self.is_zero:
            return np.array([-np.inf]), np.array([np.inf]), np.zeros(1)
        lefts = np.concatenate([[-np.inf], self.breakpoints])
        rights = np.concatenate([self.breakpoints, [np.inf]])
        return lefts, rights, self.padded_values()

    def support_cells(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(lefts, rights, values) with the zero states pinned to empty cells at the support edges."""
        if self.is_zero:
            return np.zeros(0), np.zeros(0), np.zeros(0)
        lefts = np.concatenate([self.breakpoints[:1], self.breakpoints])
        rights = np.concatenate([self.breakpoints, self.breakpoints[-1:]])
        return lefts, rights, self.padded_values()

    def to_dict(self) -> Dict[str, List[float]]:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PiecewiseConstantFn":
        try:
            return cls.from_lists(data["breakpoints"], data["values"])
        except KeyError as e:
            raise DomainError(f"Piecewise constant function is missing field {e}")

    def __repr__(self):
        return f"PiecewiseConstantFn(cells={self.n_cells}, support={self.support()})"


# --- Riemann problem ---

class WaveType(str, Enum):
    SHOCK = "Shock"
    RAREFACTION_PIECE = "RarefactionPiece"


@dataclass(frozen=True)
class Wave:
    type: WaveType
    left_state: float
    right_state: float
    speed: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": self.type.value,
            "left_state": self.left_state,
            "right_state": self.right_state,
            "speed": self.speed,
        }


@dataclass
class WaveFan:
    """Ordered waves of a Riemann solution, speeds nondecreasing left to right."""

    left_state: float
    right_state: float
    waves: List[Wave] = field(default_factory=list)

    @property
    def speeds(self) -> List[float]:
        return [w.speed for w in self.waves]

    @property
    def shocks(self) -> List[Wave]:
        return [w for w in self.waves if w.type == WaveType.SHOCK]

    def state_at(self, xi: float) -> float:
        """Self-similar state at x/t = xi (right-continuous at wave speeds)."""
        state = self.left_state
        for wave in self.waves:
            if xi >= wave.speed:
                state = wave.right_state
            else:
                break
        return state

    def to_dict(self) -> Dict[str, Any]:
        return {
            "left_state": self.left_state,
            "right_state": self.right_state,
            "waves": [w.to_dict() for w in self.waves],
        }


def _chord_speed(flux: FluxModel, a: float, b: float) -> float:
    return float((flux.f(b) - flux.f(a)) / (b - a))


def _exact_envelope(flux: FluxModel, a: float, b: float, orientation: float) -> List[Tuple[str, float, float]]:
    """
    Lower convex envelope of h = orientation * f on [a, b] as ("chord" | "curve", lo, hi) pieces.

    Uses the sign structure of f'': a convex kind has h'' of one sign, an
    inflection flux changes sign once at 0, so the envelope is at most one
    chord and one curve joined at a tangency point.
    """
    def h(u):
        return orientation * flux.f(u)

    def dh(u):
        return orientation * flux.fprime(u)

    if flux.is_convex:
        return [("curve", a, b)] if orientation > 0 else [("chord", a, b)]

    curvature_sign = orientation * flux.sigma  # sign of h'' is curvature_sign * sign(u)
    if a >= 0.0:
        return [("curve", a, b)] if curvature_sign > 0 else [("chord", a, b)]
    if b <= 0.0:
        return [("chord", a, b)] if curvature_sign > 0 else [("curve", a, b)]

    snap = COINCIDENCE_TOLERANCE * max(1.0, abs(a), abs(b))
    if curvature_sign > 0:
        # concave on [a, 0], convex on [0, b]: chord a -> t, curve t -> b
        def psi(t):
            return dh(t) * (t - a) - (h(t) - h(a))

        if psi(b) <= 0.0:
            return [("chord", a, b)]
        t = bisect(psi, 0.0, b, xtol=TANGENCY_XTOL, maxiter=400) if psi(0.0) < 0.0 else 0.0
        if b - t <= snap:
            return [("chord", a, b)]
        return [("chord", a, t), ("curve", t, b)]

    # convex on [a, 0], concave on [0, b]: curve a -> t, chord t -> b
    def phi(t):
        return dh(t) * (b - t) - (h(b) - h(t))

    if phi(a) >= 0.0:
        return [("chord", a, b)]
    t = bisect(phi, a, 0.0, xtol=TANGENCY_XTOL, maxiter=400) if phi(0.0) > 0.0 else 0.0
    if t - a <= snap:
        return [("chord", a, b)]
    return [("curve", a, t), ("chord", t, b)]


def _monotone_chain_lower(x: np.ndarray, y: np.ndarray) -> List[int]:
    hull: List[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _refine_tangency(flux: FluxModel, orientation: float, lo: float, hi: float, anchor: float) -> Optional[float]:
    """Tangency point in [lo, hi] of the line through (anchor, h(anchor)), if bracketed."""
    def condition(t):
        h_t = orientation * flux.f(t)
        return orientation * flux.fprime(t) * (anchor - t) - (orientation * flux.f(anchor) - h_t)

    g_lo, g_hi = condition(lo), condition(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0.0:
        return None
    return float(bisect(condition, lo, hi, xtol=TANGENCY_XTOL, maxiter=400))


def _sampled_envelope(flux: FluxModel, a: float, b: float, orientation: float) -> List[Tuple[str, float, float]]:
    """Sampled-hull envelope of orientation * f on [a, b] with tangency refinement."""
    x = np.linspace(a, b, HULL_SAMPLES)
    y = orientation * flux.f(x)
    hull = _monotone_chain_lower(x, y)

    # consecutive curve steps join into one curve; chords meeting at a single
    # hull vertex are collinear up to sampling and join into one chord
    pieces: List[Tuple[str, float, float]] = []
    for i0, i1 in zip(hull[:-1], hull[1:]):
        kind = "curve" if i1 == i0 + 1 else "chord"
        if pieces and pieces[-1][0] == kind:
            pieces[-1] = (kind, pieces[-1][1], float(x[i1]))
        else:
            pieces.append((kind, float(x[i0]), float(x[i1])))

    # move chord endpoints from the sample grid to the true tangency points
    refined = []
    for kind, lo, hi in pieces:
        if kind == "chord":
            i_lo = int(round((lo - a) / (b - a) * (HULL_SAMPLES - 1)))
            i_hi = int(round((hi - a) / (b - a) * (HULL_SAMPLES - 1)))
            if 0 < i_lo:
                t = _refine_tangency(flux, orientation, float(x[i_lo - 1]), float(x[min(i_lo + 1, i_hi)]), hi)
                lo = t if t is not None else lo
            if i_hi < HULL_SAMPLES - 1:
                t = _refine_tangency(flux, orientation, float(x[max(i_hi - 1, i_lo)]), float(x[i_hi + 1]), lo)
                hi = t if t is not None else hi
        refined.append([kind, lo, hi])
    for k in range(1, len(refined)):
        if refined[k][0] == "chord":
            refined[k - 1][2] = refined[k][1]
        else:
            refined[k][1] = refined[k - 1][2]
    refined[0][1], refined[-1][2] = a, b
    return [(kind, lo, hi) for kind, lo, hi in refined if hi > lo]


def _chop(flux: FluxModel, start: float, end: float, delta: float) -> List[Wave]:
    """Rarefaction from start to end cut at the grid states k * delta."""
    lo, hi = min(start, end), max(start, end)
    k_lo, k_hi = int(np.floor(lo / delta)) + 1, int(np.ceil(hi / delta)) - 1
    pad = 1e-9 * delta
    inner = [k * delta for k in range(k_lo, k_hi + 1) if lo + pad < k * delta < hi - pad]
    states = [lo] + inner + [hi]
    if start > end:
        states = states[::-1]
    return [
        Wave(WaveType.RAREFACTION_PIECE, s0, s1, _chord_speed(flux, s0, s1))
        for s0, s1 in zip(states[:-1], states[1:])
    ]


def riemann(flux: FluxModel, uL: float, uR: float, delta: float, method: str = "exact") -> WaveFan:
    """
    Solve the Riemann problem with left state uL and right state uR.

    Args:
        flux: Flux model
        uL, uR: States with |uL|, |uR| <= M
        delta: Maximal state step of a rarefaction piece
        method: "exact" (tangency by bisection) or "hull" (sampled monotone chain)

    Returns:
        WaveFan with nondecreasing speeds
    """
    uL, uR = float(uL), float(uR)
    limit = flux.M * (1 + 1e-12)
    if abs(uL) > limit or abs(uR) > limit:
        raise DomainError(f"Riemann states ({uL}, {uR}) exceed M = {flux.M}")
    if not delta > 0.0:
        raise DomainError(f"delta must be positive, got {delta}")
    fan = WaveFan(left_state=uL, right_state=uR)
    if uL == uR:
        return fan

    build = _exact_envelope if method == "exact" else _sampled_envelope
    if method not in ("exact", "hull"):
        raise DomainError(f"Unknown envelope method '{method}'")

    if uL < uR:
        pieces = build(flux, uL, uR, 1.0)
        path = [(kind, lo, hi) for kind, lo, hi in pieces]
    else:
        pieces = build(flux, uR, uL, -1.0)
        path = [(kind, hi, lo) for kind, lo, hi in reversed(pieces)]

    for kind, start, end in path:
        if kind == "chord":
            fan.waves.append(Wave(WaveType.SHOCK, start, end, _chord_speed(flux, start, end)))
        else:
            fan.waves.extend(_chop(flux, start, end, delta))
    return fan


def e_condition_slack(flux: FluxModel, uL: float, uR: float, speed: Optional[float] = None,
                      samples: int = E_CONDITION_SAMPLES) -> float:
    """
    Smallest slack of the E-condition for a shock from uL to uR.

    For every u strictly between the states the shock speed must not exceed
    the chord speed from uL to u and must not fall below the chord speed from
    u to uR. A negative value is a violation.
    """
    if uL == uR:
        return float("inf")
    s = _chord_speed(flux, uL, uR) if speed is None else speed
    u = np.linspace(uL, uR, samples + 2)[1:-1]
    left = (flux.f(u) - flux.f(uL)) / (u - uL) - s
    right = s - (flux.f(uR) - flux.f(u)) / (uR - u)
    return float(min(np.min(left), np.min(right)))


# --- Front tracking ---

class Front:
    __slots__ = ("x0", "t0", "speed", "left", "right", "prev", "next", "alive", "shock")

    def __init__(self, x0: float, t0: float, wave: Wave):
        self.x0 = x0
        self.t0 = t0
        self.speed = wave.speed
        self.left = wave.left_state
        self.right = wave.right_state
        self.shock = wave.type == WaveType.SHOCK
        self.prev: Optional["Front"] = None
        self.next: Optional["Front"] = None
        self.alive = True

    def position(self, t: float) -> float:
        return self.x0 + self.speed * (t - self.t0)


@dataclass
class FrontState:
    """Snapshot of the tracker: time, fronts and pending collisions."""

    time: float
    delta: float
    fronts: List[Dict[str, float]]
    pending_events: int
    interactions: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "time": self.time,
            "delta": self.delta,
            "fronts": self.fronts,
            "pending_events": self.pending_events,
            "interactions": self.interactions,
        }


class FrontTracker:
    """
    Event-driven front tracking for one initial datum.

    Fronts form a doubly linked list; collisions sit in a heap keyed by
    (time, position, sequence) and are validated lazily when popped.
    """

    def __init__(self, flux: FluxModel, u0: PiecewiseConstantFn, delta: float,
                 max_interactions: int = DEFAULT_MAX_INTERACTIONS, method: str = "exact"):
        self.flux = flux
        self.delta = float(delta)
        self.max_interactions = max_interactions
        self.method = method
        self.time = 0.0
        self.interactions = 0
        self._seq = 0
        self._events: List[Tuple[float, float, int, Front, Front]] = []
        self.head: Optional[Front] = None

        u0 = u0.normalize()
        states = u0.padded_values()
        last: Optional[Front] = None
        for x, uL, uR in zip(u0.breakpoints, states[:-1], states[1:]):
            for front in self._fan_fronts(float(x), 0.0, float(uL), float(uR)):
                last = self._append(last, front)
        self._schedule_all()
        logger.debug("FrontTracker: %d initial fronts", self.count_fronts())

    def _fan_fronts(self, x: float, t: float, uL: float, uR: float) -> List[Front]:
        fan = riemann(self.flux, uL, uR, self.delta, method=self.method)
        return [Front(x, t, wave) for wave in fan.waves]

    def _append(self, last: Optional[Front], front: Front) -> Front:
        if last is None:
            self.head = front
        else:
            last.next = front
            front.prev = last
        return front

    def _schedule(self, a: Optional[Front], b: Optional[Front]):
        if a is None or b is None or a.speed <= b.speed:
            return
        gap = b.position(self.time) - a.position(self.time)
        t_hit = self.time + max(gap, 0.0) / (a.speed - b.speed)
        self._seq += 1
        heapq.heappush(self._events, (t_hit, a.position(t_hit), self._seq, a, b))

    def _schedule_all(self):
        front = self.head
        while front is not None and front.next is not None:
            self._schedule(front, front.next)
            front = front.next

    def count_fronts(self) -> int:
        n, front = 0, self.head
        while front is not None:
            n += 1
            front = front.next
        return n

    def fronts(self) -> List[Front]:
        out, front = [], self.head
        while front is not None:
            out.append(front)
            front = front.next
        return out

    def _interact(self, t: float, a: Front, b: Front):
        x = 0.5 * (a.position(t) + b.position(t))
        tol = COINCIDENCE_TOLERANCE * (1.0 + abs(x))
        first, last = a, b
        while first.prev is not None and abs(first.prev.position(t) - x) <= tol:
            first = first.prev
        while last.next is not None and abs(last.next.position(t) - x) <= tol:
            last = last.next

        left_neighbor, right_neighbor = first.prev, last.next
        uL, uR = first.left, last.right
        front = first
        while front is not right_neighbor:
            front.alive = False
            front = front.next

        self.time = t
        new = self._fan_fronts(x, t, uL, uR)
        chain = [left_neighbor] + new + [right_neighbor]
        for p, q in zip(chain[:-1], chain[1:]):
            if p is not None:
                p.next = q
            if q is not None:
                q.prev = p
        if left_neighbor is None:
            self.head = new[0] if new else right_neighbor

        if new:
            self._schedule(left_neighbor, new[0])
            self._schedule(new[-1], right_neighbor)
        else:
            self._schedule(left_neighbor, right_neighbor)

    def run_until(self, T: float) -> "FrontTracker":
        """Process every collision up to time T (inclusive)."""
        if T < self.time:
            raise DomainError(f"Cannot run backwards from t={self.time} to t={T}")
        while self._events and self._events[0][0] <= T:
            t, _, _, a, b = heapq.heappop(self._events)
            if not (a.alive and b.alive and a.next is b):
                continue
            self.interactions += 1
            if self.interactions > self.max_interactions:
                raise StallError(
                    f"Front tracking exceeded {self.max_interactions} interactions at t={t:.6g}; "
                    f"delta={self.delta} is too coarse or the data is pathological"
                )
            self._interact(max(t, self.time), a, b)
        self.time = T
        logger.debug("FrontTracker: t=%g, %d fronts, %d interactions", T, self.count_fronts(), self.interactions)
        return self

    def solution(self, t: Optional[float] = None) -> PiecewiseConstantFn:
        """Piecewise constant solution at time t (defaults to the current time)."""
        t = self.time if t is None else t
        fronts = self.fronts()
        if not fronts:
            return PiecewiseConstantFn.zero()
        positions = np.array([f.position(t) for f in fronts])
        values = np.array([f.right for f in fronts[:-1]])
        positions = np.maximum.accumulate(positions)
        return PiecewiseConstantFn(positions, values).normalize()

    def state(self) -> FrontState:
        return FrontState(
            time=self.time,
            delta=self.delta,
            fronts=[
                {"position": f.position(self.time), "left_state": f.left, "right_state": f.right, "speed": f.speed}
                for f in self.fronts()
            ],
            pending_events=len(self._events),
            interactions=self.interactions,
        )

    def shock_slacks(self) -> List[float]:
        """E-condition slack of every live shock front."""
        return [e_condition_slack(self.flux, f.left, f.right, f.speed) for f in self.fronts() if f.shock]


def default_delta(flux: FluxModel) -> float:
    return DEFAULT_DELTA_FRACTION * flux.M


def _check_initial_data(flux: FluxModel, u0: PiecewiseConstantFn):
    if u0.sup_norm() > flux.M * (1 + 1e-12):
        raise DomainError(f"Initial data exceeds the working range: |u0| = {u0.sup_norm()} > M = {flux.M}")


def evolve(
    flux: FluxModel,
    u0: PiecewiseConstantFn,
    T: float,
    delta: Optional[float] = None,
    max_interactions: int = DEFAULT_MAX_INTERACTIONS,
) -> PiecewiseConstantFn:
    """
    Front-tracking approximation of S_T u0.

    Args:
        flux: Flux model
        u0: Initial datum with |u0| <= M
        T: Final time (> 0)
        delta: Rarefaction step (default 1e-3 * M)
        max_interactions: Interaction budget

    Returns:
        PiecewiseConstantFn at time T
    """
    if not T > 0.0:
        raise DomainError(f"T must be positive, got {T}")
    _check_initial_data(flux, u0)
    delta = default_delta(flux) if delta is None else float(delta)
    tracker = FrontTracker(flux, u0, delta, max_interactions=max_interactions)
    return tracker.run_until(T).solution()


# --- Lax-Oleinik oracle ---

def _conjugate(flux: FluxModel, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Conjugate of f restricted to [-M, M] and its maximiser u*(q)."""
    u_star = fprime_inverse(flux, q)
    return q * u_star - flux.f(u_star), u_star


def lax_oleinik_profile(flux: FluxModel, u0: PiecewiseConstantFn, t: float, x) -> np.ndarray:
    """
    Evaluate the Lax-Oleinik formula at many points.

    The objective y -> U0(y) + t f*((x - y)/t) is minimised exactly over a
    candidate set per point: all breakpoints, the stationary point of each
    cell and of the two outer zero regions.
    """
    if not flux.is_convex:
        raise KindError("The Lax-Oleinik formula needs a convex flux")
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t}")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    u0 = u0.normalize()
    if u0.is_zero:
        return np.zeros_like(xs)

    bp = u0.breakpoints
    cumulative = np.concatenate([[0.0], np.cumsum(u0.values * u0.widths)])
    speeds = flux.fprime(u0.values)

    X = xs[:, None]
    cell_y = np.clip(X - t * speeds[None, :], bp[None, :-1], bp[None, 1:])
    left_y = np.minimum(X, bp[0])
    right_y = np.maximum(X, bp[-1])
    candidates = np.concatenate([cell_y, np.broadcast_to(bp, (len(xs), len(bp))), left_y, right_y], axis=1)

    U0 = np.interp(candidates, bp, cumulative)
    q = (X - candidates) / t
    conj, u_star = _conjugate(flux, q.reshape(-1))
    objective = U0 + t * conj.reshape(q.shape)
    best = np.argmin(objective, axis=1)
    return u_star.reshape(q.shape)[np.arange(len(xs)), best]


def lax_oleinik(flux: FluxModel, u0: PiecewiseConstantFn, t: float, x: float) -> float:
    """u(t, x) from the Lax-Oleinik formula (convex kinds only)."""
    return float(lax_oleinik_profile(flux, u0, t, [x])[0])


# --- Measurements ---

def tv_fprime(flux: FluxModel, u: PiecewiseConstantFn) -> float:
    """Total variation of f' o u including the jumps at the support edges."""
    return float(np.sum(np.abs(np.diff(flux.fprime(u.padded_values())))))


@dataclass
class OleinikReport:
    passed: bool
    worst_slack: float
    violation: Optional[Tuple[float, float]]
    pairs_checked: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "worst_slack": self.worst_slack,
            "violation": list(self.violation) if self.violation else None,
            "pairs_checked": self.pairs_checked,
        }


def oleinik_one_sided_check(flux: FluxModel, u: PiecewiseConstantFn, T: float,
                            tol: float = OLEINIK_TOLERANCE,
                            delta: Optional[float] = None) -> OleinikReport:
    """
    Check f'(u(y)) - f'(u(x)) <= (y - x)/T on a delta-staircase solution.

    Two readings, both in units of f':
      - every jump up across a breakpoint is at most one step delta in u;
      - for cells i < j, f'(v_j) - f'(v_i) <= (L_j - R_i)/T plus one staircase
        step delta * max|f''| at each end of the pair.
    The zero states outside the support sit in empty cells at the support
    edges, so a jump there counts like any other jump.

    Returns:
        OleinikReport with the smaller of the two slacks and where it occurs
    """
    if not flux.is_convex:
        raise KindError("The one-sided Lipschitz bound on f' needs a convex flux")
    if not T > 0.0:
        raise DomainError(f"T must be positive, got {T}")
    delta = default_delta(flux) if delta is None else delta
    u = u.normalize()
    lefts, rights, values = u.support_cells()
    n = len(values)
    if n == 0:
        return OleinikReport(True, float("inf"), None, 0)

    fp = flux.fprime(values)
    step = 2.0 * delta * max_abs_fsecond(flux, -flux.M, flux.M)
    worst, pair = one_sided_slack(fp, lefts, rights, 1.0 / T, orientation=1.0, near=True)
    worst += step

    jump_slack = flux.fprime(values[:-1] + delta) - fp[1:]
    k = int(np.argmin(jump_slack))
    if jump_slack[k] < worst:
        worst = float(jump_slack[k])
        pair = (float(rights[k]), float(lefts[k + 1]))

    passed = worst >= -tol
    return OleinikReport(passed, worst, None if passed else pair, n * (n - 1) // 2 + n - 1)


def one_sided_slack(values: np.ndarray, lefts: np.ndarray, rights: np.ndarray, bound: float,
                    orientation: float = 1.0, near: bool = True) -> Tuple[float, Optional[Tuple[float, float]]]:
    """
    Worst slack of orientation * (v_j - v_i) <= bound * gap(i, j) over cells i < j.

    gap is L_j - R_i (near ends, the strict reading) or R_j - L_i (far ends,
    which forgives jumps smaller than bound times the two cell widths).
    Runs in one pass with a running maximum. Returns (slack, (x_i, x_j)).
    """
    v = orientation * np.asarray(values, dtype=float)
    with np.errstate(invalid="ignore"):
        if near:
            p = bound * lefts - v
            q = bound * rights - v
        else:
            p = bound * rights - v
            q = bound * lefts - v
    worst, pair = float("inf"), None
    if len(v) < 2:
        return worst, pair
    running, best_i = q[0], 0
    for j in range(1, len(v)):
        slack = p[j] - running
        if slack < worst:
            worst = float(slack)
            pair = (float(rights[best_i] if near else lefts[best_i]), float(lefts[j] if near else rights[j]))
        if q[j] > running:
            running, best_i = q[j], j
    return worst, pair


def l1_distance(u: PiecewiseConstantFn, v: PiecewiseConstantFn) -> float:
    """Exact L1 distance via the merged breakpoint list."""
    if u.is_zero and v.is_zero:
        return 0.0
    grid = np.union1d(u.breakpoints, v.breakpoints)
    if len(grid) < 2:
        return 0.0
    mid = 0.5 * (grid[:-1] + grid[1:])
    return float(np.sum(np.abs(u(mid) - v(mid)) * np.diff(grid)))
