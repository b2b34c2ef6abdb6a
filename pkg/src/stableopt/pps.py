"""Batch stable-PPS solver.

Probability-proportional-to-size (PPS) inclusion probabilities minimize the
sum of Horvitz-Thompson estimation variances among all distributions with a
given expected sample size.  Starting from a previous distribution ``p`` and
new weights ``w``, this module computes:

* the best-fit PPS probabilities (``pps_probabilities``),
* threshold functions for the cheapest way to *increase* total probability
  mass by ``x`` (``best_increase``) and the least damaging way to *decrease*
  it by ``x`` (``best_decrease``) — both piecewise hyperbolas in ``x``,
* the variance-optimal distribution within an L1 changeout budget ``D``
  (``delta_opt``), its Lagrangian twin priced at ``a`` per unit changeout
  (``alpha_opt``), and the full changeout/fitness tradeoff curve
  (``pps_tradeoff``).

Fitness is stored in maximization orientation: ``fitness(w, q) = -sum_i
w_i^2 / q_i``, so larger is better and the best-fit PPS distribution has the
largest (least negative) fitness.

Moving mass works on the ratios ``w_i / p_i``.  An increase of ``x`` raises
the highest-ratio entries to a common threshold ``tau_lo(x)`` (``q_i =
min(1, w_i / tau_lo)``); a decrease lowers the lowest-ratio entries to
``tau_hi(x)``.  Equal budgets on both sides keep the total at ``k``; the
multiplier relating budget to marginal variance gain is ``alpha(D) =
tau_lo(D/2)^2 - tau_hi(D/2)^2``.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .core import (
    AFFINE_RECIPROCAL,
    CONSTANT,
    SHIFTED_RECIPROCAL,
    DomainError,
    HyperbolaPiece,
    InfeasibleError,
    Interval,
    PiecewiseFunction,
    PpsDistribution,
    TradeoffCurve,
    TradeoffPoint,
    WeightVector,
    align_weights_probs,
)

__all__ = [
    "PpsSolution",
    "IncreaseFunctions",
    "DecreaseFunctions",
    "pps_probabilities",
    "best_increase",
    "best_decrease",
    "delta_opt",
    "alpha_of_changeout",
    "alpha_opt",
    "pps_tradeoff",
    "fitness",
    "thresholds_at",
    "max_changeout",
]


# ---------------------------------------------------------------------------
# PPS probabilities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PpsSolution:
    """PPS probabilities together with the threshold that produced them:
    ``p_i = min(1, w_i / tau)`` and ``sum_i p_i = k``."""

    dist: PpsDistribution
    tau: float


def _pps_arrays(weights: np.ndarray, k: float) -> tuple[np.ndarray, float]:
    """Solve ``sum_i min(1, w_i / tau) = k`` for nonnegative weights."""
    n_pos = int(np.count_nonzero(weights > 0))
    if k <= 0:
        raise InfeasibleError(f"expected sample size must be positive, got {k}")
    if n_pos == 0:
        raise InfeasibleError("all weights are zero")
    if k > n_pos + 1e-12:
        raise InfeasibleError(
            f"expected sample size {k} exceeds {n_pos} positive-weight entries"
        )
    order = np.argsort(-weights, kind="stable")
    w_sorted = weights[order]
    pos = w_sorted[:n_pos]
    if k >= n_pos:
        tau = float(pos[-1])
        probs = np.where(weights > 0, 1.0, 0.0)
        return probs, tau
    # With j entries saturated, tau = (sum of remaining weights) / (k - j).
    suffix = np.concatenate([np.cumsum(pos[::-1])[::-1], [0.0]])
    tau = None
    for j in range(0, n_pos):
        if k - j <= 0:
            break
        cand = suffix[j] / (k - j)
        if pos[j] < cand and (j == 0 or pos[j - 1] >= cand):
            tau = float(cand)
            break
    if tau is None:
        raise InfeasibleError("no consistent PPS threshold found")
    probs = np.minimum(1.0, weights / tau)
    return probs, tau


def pps_probabilities(w: WeightVector, k: float) -> PpsSolution:
    """Best-fit PPS distribution of expected size ``k`` for weights ``w``.

    Raises :class:`InfeasibleError` if ``k`` exceeds the number of
    positive-weight entries or no entry has positive weight.  ``k`` need not
    be an integer.
    """
    probs, tau = _pps_arrays(w.array(), float(k))
    dist = PpsDistribution(w.keys, tuple(float(q) for q in probs), float(k))
    return PpsSolution(dist, tau)


def fitness(w: WeightVector | np.ndarray, q: PpsDistribution | np.ndarray) -> float:
    """Fitness of distribution ``q`` for weights ``w``: ``-sum w_i^2/q_i``.

    Entries with zero weight contribute nothing; a zero probability on a
    positive weight yields ``-inf``.
    """
    if isinstance(w, WeightVector) and isinstance(q, PpsDistribution):
        _, warr, qarr = align_weights_probs(w, q)
    else:
        warr = np.asarray(w, dtype=float)
        qarr = np.asarray(q, dtype=float)
    mask = warr > 0
    if np.any(qarr[mask] == 0):
        return -math.inf
    return -float(np.sum(warr[mask] ** 2 / qarr[mask]))


# ---------------------------------------------------------------------------
# Breakpoint tables (shared by the threshold functions and the fast path)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Segment:
    """One linear-in-1/y segment: x(y) = d + s*w/y on y in [y_lo, y_hi]."""

    y_lo: float
    y_hi: float
    d: float
    w: float


def _increase_segments(warr: np.ndarray, parr: np.ndarray) -> list[_Segment]:
    """Segments of the total-increase function x(y) = sum_i q_i(y) - p_i with
    q_i(y) = min(1, max(p_i, w_i/y)), scanned from high thresholds down.

    Entry events at ratio w_i/p_i (infinity for p_i = 0) activate an entry,
    exit events at w_i saturate it.  Only entries with w_i > 0 and p_i < 1
    participate.
    """
    events: dict[float, list[tuple[str, float, float]]] = {}
    head_w = 0.0
    for wi, pi in zip(warr, parr):
        if wi <= 0 or pi >= 1:
            continue
        if pi == 0:
            head_w += wi
        else:
            events.setdefault(wi / pi, []).append(("entry", wi, pi))
        events.setdefault(float(wi), []).append(("exit", wi, pi))
    if not events:
        return []
    values = sorted(events, reverse=True)
    segs: list[_Segment] = []
    W = head_w
    D = 0.0
    if W > 0:
        segs.append(_Segment(values[0], math.inf, 0.0, W))
    for j, v in enumerate(values):
        for kind, wi, pi in events[v]:
            if kind == "entry":
                W += wi
                D -= pi
            else:
                W -= wi
                D += 1.0
        if j + 1 < len(values):
            segs.append(_Segment(values[j + 1], v, D, W))
    return segs


def _decrease_segments(
    warr: np.ndarray, parr: np.ndarray
) -> tuple[float, list[_Segment]]:
    """Zero-weight slack ``D0`` and segments of the total-decrease function
    x(y) = D0 + sum over absorbed entries of (p_i - w_i/y), scanned from low
    ratios up.  Entries join at ratio w_i/p_i (saturated entries at w_i)."""
    d0 = float(np.sum(parr[warr == 0]))
    events: dict[float, list[tuple[float, float]]] = {}
    for wi, pi in zip(warr, parr):
        if wi <= 0 or pi <= 0:
            continue
        events.setdefault(wi / pi, []).append((wi, pi))
    values = sorted(events)
    segs: list[_Segment] = []
    W = 0.0
    D = d0
    for j, v in enumerate(values):
        for wi, pi in events[v]:
            W += wi
            D += pi
        hi = values[j + 1] if j + 1 < len(values) else math.inf
        segs.append(_Segment(v, hi, D, -W))
    return d0, segs


class _ThresholdTable:
    """x-indexed lookup over segments: within segment i the threshold is
    ``tau(x) = |w| / (sign * (x - d))`` with x in (x_lo_i, x_hi_i]."""

    def __init__(self, segs: list[_Segment], increase: bool):
        self.increase = increase
        xs: list[float] = []
        kept: list[_Segment] = []
        x_prev = 0.0 if increase else None
        for seg in segs:
            if increase:
                # x(y) = d + w/y decreasing in y: low x at y_hi, high at y_lo
                x_hi = seg.d + (seg.w / seg.y_lo if seg.y_lo > 0 else math.inf)
            else:
                # x(y) = d - |w|/y increasing in y: high x at y_hi
                x_hi = seg.d + (seg.w / seg.y_hi if not math.isinf(seg.y_hi) else 0.0)
            if xs and not x_hi > xs[-1]:
                continue  # flat or zero-width in x
            if seg.w == 0 and increase:
                continue
            xs.append(x_hi)
            kept.append(seg)
        self.x_his = xs
        self.segs = kept

    @property
    def empty(self) -> bool:
        return not self.segs

    def x_max(self) -> float:
        return self.x_his[-1] if self.x_his else 0.0

    def tau(self, x: float) -> float:
        """Threshold for total move ``x`` (x > 0, within range)."""
        idx = bisect_left(self.x_his, x)
        if idx >= len(self.segs):
            if self.x_his and x - self.x_his[-1] <= 1e-9:
                idx = len(self.segs) - 1
            else:
                raise DomainError(f"move {x} beyond table range {self.x_max()}")
        seg = self.segs[idx]
        if self.increase:
            return seg.w / (x - seg.d)
        return -seg.w / (seg.d - x)

    def limit_at_zero(self) -> float:
        """One-sided limit of tau as the move shrinks to zero."""
        if not self.segs:
            return 0.0
        seg = self.segs[0]
        if self.increase:
            if seg.d == 0.0:
                return math.inf
            return seg.w / (0.0 - seg.d)
        return -seg.w / seg.d if seg.d > 0 else math.inf

    def breakpoints(self, x_cap: float) -> list[float]:
        return [x for x in self.x_his if 0.0 < x < x_cap]


# ---------------------------------------------------------------------------
# Threshold functions as piecewise objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IncreaseFunctions:
    """Total-increase function ``delta_plus(y)`` and its inverse threshold
    function ``tau_lo(x)``, both decreasing piecewise hyperbolas with at most
    2n breakpoints.  ``empty`` flags instances with nothing to raise."""

    delta_plus: PiecewiseFunction
    tau_lo: PiecewiseFunction
    empty: bool = False

    def restricted(self, x_max: float) -> "IncreaseFunctions":
        """Clip to increases ``x <= x_max`` (the feasible tradeoff range)."""
        if self.empty:
            return self
        tau_at_cap = eval_or_none(self.tau_lo, x_max)
        delta = self.delta_plus
        if tau_at_cap is not None:
            delta = delta.restrict(lo=tau_at_cap)
        return IncreaseFunctions(delta, self.tau_lo.restrict(hi=x_max), self.empty)


@dataclass(frozen=True)
class DecreaseFunctions:
    """Total-decrease function ``delta_minus(y)`` and threshold ``tau_hi(x)``
    (zero on the slack region ``x <= zero_mass`` where only zero-weight
    entries are reduced), with at most n breakpoints."""

    delta_minus: PiecewiseFunction
    tau_hi: PiecewiseFunction
    zero_mass: float

    def restricted(self, x_max: float) -> "DecreaseFunctions":
        tau_at_cap = eval_or_none(self.tau_hi, x_max)
        delta = self.delta_minus
        if tau_at_cap is not None and tau_at_cap > 0 and not delta.empty:
            delta = delta.restrict(hi=tau_at_cap)
        return DecreaseFunctions(delta, self.tau_hi.restrict(hi=x_max), self.zero_mass)


def eval_or_none(f: PiecewiseFunction, x: float) -> float | None:
    try:
        return f(x)
    except DomainError:
        return None


def best_increase(w: WeightVector, p: PpsDistribution) -> IncreaseFunctions:
    """Threshold representation of the most variance-reducing increase.

    For a total increase ``x`` the optimal new probabilities are
    ``q_i = min(1, max(p_i, w_i / tau_lo(x)))``.  Raising is possible for
    entries with positive weight and probability below one; if there are
    none the result is empty and flagged.
    """
    _, warr, parr = align_weights_probs(w, p)
    segs = _increase_segments(warr, parr)
    if not segs:
        empty = PiecewiseFunction((), "decreasing")
        return IncreaseFunctions(empty, empty, empty=True)
    delta_pieces: list[HyperbolaPiece] = []
    tau_pieces: list[HyperbolaPiece] = []
    x_lo = 0.0
    for seg in segs:
        ivl = Interval(seg.y_lo, seg.y_hi, lo_open=False, hi_open=True)
        delta_pieces.append(HyperbolaPiece(ivl, AFFINE_RECIPROCAL, a=seg.d, b=seg.w))
        if seg.w > 0:
            x_hi = seg.d + (seg.w / seg.y_lo if seg.y_lo > 0 else math.inf)
            if x_hi > x_lo:
                x_ivl = Interval(x_lo, x_hi, lo_open=True, hi_open=False)
                tau_pieces.append(
                    HyperbolaPiece(x_ivl, SHIFTED_RECIPROCAL, a=seg.d, b=seg.w)
                )
                x_lo = x_hi
    delta_pieces.reverse()  # ascending y
    delta_plus = PiecewiseFunction(tuple(delta_pieces), "decreasing")
    tau_lo = PiecewiseFunction(tuple(tau_pieces), "decreasing")
    return IncreaseFunctions(delta_plus, tau_lo)


def best_decrease(w: WeightVector, p: PpsDistribution) -> DecreaseFunctions:
    """Threshold representation of the least variance-increasing decrease.

    For a total decrease ``x`` the optimum removes ``max(0, p_i - w_i /
    tau_hi(x))`` from each entry.  Decreases up to ``zero_mass`` (the total
    probability on zero-weight entries) are free: ``tau_hi = 0`` there and
    only zero-weight entries are reduced.
    """
    _, warr, parr = align_weights_probs(w, p)
    d0, segs = _decrease_segments(warr, parr)
    tau_pieces: list[HyperbolaPiece] = []
    jump: frozenset[float] = frozenset()
    if d0 > 0:
        tau_pieces.append(
            HyperbolaPiece(Interval(0.0, d0, True, False), CONSTANT, c=0.0)
        )
        if segs:
            jump = frozenset([d0])
    delta_pieces: list[HyperbolaPiece] = []
    x_lo = d0
    for seg in segs:
        ivl = Interval(seg.y_lo, seg.y_hi, lo_open=False, hi_open=True)
        delta_pieces.append(HyperbolaPiece(ivl, AFFINE_RECIPROCAL, a=seg.d, b=seg.w))
        x_hi = seg.d + (seg.w / seg.y_hi if not math.isinf(seg.y_hi) else 0.0)
        if x_hi > x_lo:
            hi_open = math.isinf(seg.y_hi)  # full wipe-out only in the limit
            x_ivl = Interval(x_lo, x_hi, lo_open=True, hi_open=hi_open)
            tau_pieces.append(
                HyperbolaPiece(x_ivl, SHIFTED_RECIPROCAL, a=seg.d, b=seg.w)
            )
            x_lo = x_hi
    delta_minus = PiecewiseFunction(tuple(delta_pieces), "increasing")
    tau_hi = PiecewiseFunction(tuple(tau_pieces), "increasing", jump_points=jump)
    return DecreaseFunctions(delta_minus, tau_hi, d0)


# ---------------------------------------------------------------------------
# Stable distributions
# ---------------------------------------------------------------------------


def max_changeout(w: WeightVector, p: PpsDistribution) -> float:
    """L1 distance from ``p`` to the best-fit PPS distribution for ``w``."""
    _, warr, parr = align_weights_probs(w, p)
    pps_arr, _ = _pps_arrays(warr, p.target_size)
    return float(np.sum(np.abs(pps_arr - parr)))


def _tables(
    warr: np.ndarray, parr: np.ndarray
) -> tuple[_ThresholdTable, _ThresholdTable, float]:
    inc = _ThresholdTable(_increase_segments(warr, parr), increase=True)
    d0, dec_segs = _decrease_segments(warr, parr)
    dec = _ThresholdTable(dec_segs, increase=False)
    return inc, dec, d0


def _combine(
    warr: np.ndarray,
    parr: np.ndarray,
    t_lo: float,
    t_hi: float,
    x: float,
    d0: float,
) -> np.ndarray:
    """Apply increase threshold ``t_lo`` and decrease threshold ``t_hi``.

    When ``t_hi == 0`` (move within the zero-weight slack) the decrease of
    ``x`` is taken from zero-weight entries in key order.
    """
    q = parr.copy()
    if t_lo > 0 and not math.isinf(t_lo):
        target = np.minimum(1.0, warr / t_lo)
        raise_mask = target > parr
        q[raise_mask] = target[raise_mask]
    if t_hi > 0:
        with np.errstate(divide="ignore"):
            floor = np.where(warr > 0, warr / t_hi, 0.0)
        drop_mask = parr > floor
        q[drop_mask] = floor[drop_mask]
    elif x > 0:
        remaining = min(x, d0)
        for i in np.flatnonzero(warr == 0):
            if remaining <= 0:
                break
            cut = min(q[i], remaining)
            q[i] -= cut
            remaining -= cut
    return q


def thresholds_at(
    w: WeightVector, p: PpsDistribution, D: float
) -> tuple[float, float]:
    """Thresholds ``(tau_lo(D/2), tau_hi(D/2))`` governing the optimal
    changeout-``D`` move from ``p`` toward the PPS optimum for ``w``."""
    _, warr, parr = align_weights_probs(w, p)
    pps_arr, _ = _pps_arrays(warr, p.target_size)
    d_max = float(np.sum(np.abs(pps_arr - parr)))
    if D < -1e-12 or D > d_max + 1e-9:
        raise DomainError(f"changeout {D} outside [0, {d_max}]")
    inc, dec, d0 = _tables(warr, parr)
    if D <= 0 or d_max == 0:
        t_hi0 = dec.limit_at_zero() if d0 == 0 else 0.0
        return inc.limit_at_zero(), t_hi0
    x = min(D, d_max) / 2.0
    t_lo = inc.tau(x)
    t_hi = 0.0 if x <= d0 else dec.tau(x)
    return t_lo, t_hi


def delta_opt(w: WeightVector, p: PpsDistribution, D: float) -> PpsDistribution:
    """Variance-minimal distribution within L1 changeout ``D`` of ``p``.

    The result combines the best increase of ``D/2`` with the best decrease
    of ``D/2``; at ``D = 0`` it is ``p`` and at the maximum changeout it is
    the PPS optimum.
    """
    keys, warr, parr = align_weights_probs(w, p)
    pps_arr, _ = _pps_arrays(warr, p.target_size)
    d_max = float(np.sum(np.abs(pps_arr - parr)))
    if D < -1e-9 or D > d_max + 1e-9:
        raise DomainError(f"changeout {D} outside [0, {d_max}]")
    D = min(max(D, 0.0), d_max)
    if D == 0.0:
        return p
    if D == d_max:
        q = pps_arr
    else:
        inc, dec, d0 = _tables(warr, parr)
        x = D / 2.0
        t_lo = inc.tau(x)
        t_hi = 0.0 if x <= d0 else dec.tau(x)
        q = _combine(warr, parr, t_lo, t_hi, x, d0)
    return PpsDistribution(keys, tuple(float(v) for v in q), p.target_size)


def alpha_of_changeout(w: WeightVector, p: PpsDistribution, D: float) -> float:
    """Stability price ``a = tau_lo(D/2)^2 - tau_hi(D/2)^2`` matching
    changeout ``D``; ``+inf`` at the open ``D -> 0`` end and ``0`` at the
    maximum changeout."""
    d_max = max_changeout(w, p)
    if D >= d_max:
        return 0.0
    _, warr, parr = align_weights_probs(w, p)
    inc, dec, d0 = _tables(warr, parr)
    if D <= 0:
        t_lo = inc.limit_at_zero()
        t_hi = dec.limit_at_zero() if d0 == 0 else 0.0
        if math.isinf(t_lo):
            return math.inf
        return t_lo * t_lo - t_hi * t_hi
    x = D / 2.0
    t_lo = inc.tau(x)
    t_hi = 0.0 if x <= d0 else dec.tau(x)
    if math.isinf(t_lo):
        return math.inf
    return t_lo * t_lo - t_hi * t_hi


def _gap(inc: _ThresholdTable, dec: _ThresholdTable, d0: float, x: float) -> float:
    t_lo = inc.tau(x)
    t_hi = 0.0 if x <= d0 else dec.tau(x)
    if math.isinf(t_lo):
        return math.inf
    return t_lo * t_lo - t_hi * t_hi


def alpha_opt(
    w: WeightVector, p: PpsDistribution, a: float
) -> tuple[PpsDistribution, float]:
    """Distribution maximizing ``fitness - a * changeout`` and its changeout.

    ``a = 0`` returns the PPS optimum; prices at or above the marginal gain
    of the first move return ``p`` unchanged.  In between, solves
    ``tau_lo(x)^2 - tau_hi(x)^2 = a`` by per-piece safeguarded
    bisection/Newton (the equation is a quartic on each piece; the gap is
    monotone there, so root selection is unambiguous).
    """
    if a < 0:
        raise DomainError(f"stability price must be >= 0, got {a}")
    keys, warr, parr = align_weights_probs(w, p)
    pps_arr, _ = _pps_arrays(warr, p.target_size)
    d_max = float(np.sum(np.abs(pps_arr - parr)))
    if d_max == 0.0:
        return p, 0.0
    if a == 0.0:
        q = PpsDistribution(keys, tuple(float(v) for v in pps_arr), p.target_size)
        return q, d_max
    inc, dec, d0 = _tables(warr, parr)
    x_cap = d_max / 2.0
    # at the open x -> 0 end the gap tends to the initial ratio spread
    t_lo0 = inc.limit_at_zero()
    t_hi0 = dec.limit_at_zero() if d0 == 0 else 0.0
    gap0 = math.inf if math.isinf(t_lo0) else t_lo0 * t_lo0 - t_hi0 * t_hi0
    if a >= gap0:
        return p, 0.0
    # piece boundaries of either threshold function partition (0, x_cap]
    cuts = sorted(
        set(inc.breakpoints(x_cap))
        | set(dec.breakpoints(x_cap))
        | ({d0} if 0 < d0 < x_cap else set())
    )
    edges = [0.0] + cuts + [x_cap]
    x_star = x_cap
    for lo, hi in zip(edges, edges[1:]):
        if _gap(inc, dec, d0, hi) <= a:
            x_star = _solve_gap(inc, dec, d0, a, lo, hi)
            break
    t_lo = inc.tau(x_star)
    t_hi = 0.0 if x_star <= d0 else dec.tau(x_star)
    q = _combine(warr, parr, t_lo, t_hi, x_star, d0)
    dist = PpsDistribution(keys, tuple(float(v) for v in q), p.target_size)
    return dist, 2.0 * x_star


def _solve_gap(
    inc: _ThresholdTable,
    dec: _ThresholdTable,
    d0: float,
    a: float,
    lo: float,
    hi: float,
) -> float:
    """Root of gap(x) = a on (lo, hi]; gap is strictly decreasing there."""
    f_hi = _gap(inc, dec, d0, hi) - a
    if f_hi >= 0:
        return hi
    lo_eval = lo + (hi - lo) * 1e-15 if lo == 0.0 else lo
    x0, x1 = lo_eval, hi
    for _ in range(200):
        mid = 0.5 * (x0 + x1)
        if mid == x0 or mid == x1:
            break
        if _gap(inc, dec, d0, mid) - a > 0:
            x0 = mid
        else:
            x1 = mid
    return x1


def pps_tradeoff(w: WeightVector, p: PpsDistribution) -> TradeoffCurve:
    """Full changeout/fitness tradeoff sampled at every threshold breakpoint.

    Points carry ``(D, fitness, alpha(D))``; the curve is concave and the
    endpoints are ``(0, fitness(p))`` and ``(D_max, fitness(pps))``.
    """
    keys, warr, parr = align_weights_probs(w, p)
    pps_arr, _ = _pps_arrays(warr, p.target_size)
    d_max = float(np.sum(np.abs(pps_arr - parr)))
    if d_max == 0.0:
        return TradeoffCurve((TradeoffPoint(0.0, fitness(warr, parr), 0.0),))
    inc, dec, d0 = _tables(warr, parr)
    x_cap = d_max / 2.0
    cuts = sorted(
        set(inc.breakpoints(x_cap))
        | set(dec.breakpoints(x_cap))
        | ({d0} if 0 < d0 < x_cap else set())
    )
    points: list[TradeoffPoint] = []
    t_lo0 = inc.limit_at_zero()
    t_hi0 = dec.limit_at_zero() if d0 == 0 else 0.0
    a0 = math.inf if math.isinf(t_lo0) else t_lo0 * t_lo0 - t_hi0 * t_hi0
    points.append(TradeoffPoint(0.0, fitness(warr, parr), a0))
    for x in cuts:
        t_lo = inc.tau(x)
        t_hi = 0.0 if x <= d0 else dec.tau(x)
        q = _combine(warr, parr, t_lo, t_hi, x, d0)
        points.append(TradeoffPoint(2.0 * x, fitness(warr, q), t_lo**2 - t_hi**2))
    points.append(TradeoffPoint(d_max, fitness(warr, pps_arr), 0.0))
    deduped: list[TradeoffPoint] = []
    for pt in points:
        if deduped and pt.changeout <= deduped[-1].changeout + 1e-12:
            continue
        deduped.append(pt)
    return TradeoffCurve(tuple(deduped))
