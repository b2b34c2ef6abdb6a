"""Incrementally maintained stable PPS distribution under single-entry
weight updates.

Entries are grouped into *stretches*: all non-saturated members of a stretch
share the ratio ``w_i / p_i`` equal to the stretch threshold, saturated
members sit at probability one.  A stretch is therefore a PPS sub-solution
``p_i = min(1, w_i / tau)`` over its members, stored as weight-sorted arrays
with prefix sums so threshold queries cost a binary search.

At rest the distribution is priced at stability ``a``: with ``tau_lo`` the
largest ratio among entries below probability one and ``tau_hi`` the
smallest ratio carrying positive weight (zero while some zero-weight entry
still holds probability), the state satisfies ``tau_lo^2 - tau_hi^2 <= a``.
A weight update re-ratios one entry; if the invariant breaks, the repair
walks stretches in from both ends — raising the deficient end while
lowering the excessive one, transferring equal probability mass — until the
gap closes to exactly ``a``.  The post-update distribution equals the batch
alpha-stable optimum recomputed from scratch; that equivalence is the
module's correctness contract and is what the tests assert.

Samples are maintained with permanent random numbers, so the expected
number of sample changes per update is the L1 distance between consecutive
distributions.  Structural work per update (members touched, events
processed) is logged on the state for empirical complexity reporting, not
asserted.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

from .core import ContractError, DomainError, PpsDistribution, WeightVector
from .pps import pps_probabilities
from .sampler import PrnTable

__all__ = ["Stretch", "StableState", "ChangeReport", "build", "update_weight"]

_GAP_TOL = 1e-9


class Stretch:
    """Weight-sorted member group sharing one threshold.

    ``prob(w) = min(1, w / tau)``; members with ``w >= tau`` are saturated.
    ``tau = inf`` holds entries with positive weight and zero probability.
    An all-saturated stretch is normalized to ``tau = min weight`` so its
    ratio range stays truthful.
    """

    __slots__ = ("tau", "pairs", "cum")

    def __init__(self, tau: float, pairs: list[tuple[float, int]]):
        self.tau = tau
        self.pairs = sorted(pairs)  # (weight, key) ascending
        self._rebuild()

    def _rebuild(self) -> None:
        cum = [0.0]
        for w, _ in self.pairs:
            cum.append(cum[-1] + w)
        self.cum = cum
        if self.pairs and not math.isinf(self.tau) and self.pairs[0][0] >= self.tau:
            self.tau = self.pairs[0][0]

    def __len__(self) -> int:
        return len(self.pairs)

    def sat_index(self) -> int:
        """Count of unsaturated members (= index of the first saturated)."""
        if math.isinf(self.tau):
            return len(self.pairs)
        return bisect_left(self.pairs, (self.tau, -1))

    def has_unsaturated(self) -> bool:
        return self.sat_index() > 0

    def prob_of_weight(self, w: float) -> float:
        if math.isinf(self.tau):
            return 0.0
        return min(1.0, w / self.tau)

    def prob_sum(self) -> float:
        if math.isinf(self.tau):
            return 0.0
        idx = self.sat_index()
        return self.cum[idx] / self.tau + (len(self.pairs) - idx)

    def remove(self, key: int, weight: float) -> None:
        idx = bisect_left(self.pairs, (weight, key))
        if idx >= len(self.pairs) or self.pairs[idx] != (weight, key):
            raise ContractError(f"key {key} not in stretch")
        self.pairs.pop(idx)
        self._rebuild()


@dataclass
class ChangeReport:
    """Effect of one weight update: per-key probability movements and the
    resulting sample insertions/deletions under the permanent-number rule."""

    prob_deltas: dict[int, tuple[float, float]]
    inserted: frozenset[int]
    removed: frozenset[int]
    ops: int

    @property
    def l1(self) -> float:
        return math.fsum(abs(b - a) for a, b in self.prob_deltas.values())


class _EndWalk:
    """Coupled two-end repair: accumulates absorbed members on the raise
    (top) and lower (bottom) sides and solves for the stopping transfer."""

    def __init__(self, state: "StableState"):
        self.state = state
        self.deque = list(state.stretches)
        self.hi = len(self.deque) - 1
        self.lo = 0
        self.skipped_top: list[Stretch] = []
        self.absorbed: list[Stretch] = []
        self.top_members: list[tuple[float, int]] = []
        self.bot_members: list[tuple[float, int]] = []
        self.top_exits: list[float] = []     # pending saturations, ascending
        self.bot_desats: list[float] = []    # pending de-saturations, descending
        self.d_plus = 0.0
        self.w_plus = 0.0
        self.d_minus = 0.0
        self.w_minus = 0.0
        self.pool_total = math.fsum(state.zero_pool.values())
        self.pool_open = self.pool_total > 0.0
        self.before: dict[int, float] = {}
        self.touched = 0

    # -- absorption -------------------------------------------------------

    def _next_top_idx(self) -> int:
        j = self.hi
        while j >= self.lo and not self.deque[j].has_unsaturated():
            j -= 1
        return j

    def absorb_top(self) -> bool:
        j = self._next_top_idx()
        while self.hi > j:
            self.skipped_top.append(self.deque[self.hi])
            self.hi -= 1
        if j < self.lo:
            return False
        s = self.deque[j]
        self.hi = j - 1
        self.absorbed.append(s)
        idx = s.sat_index()
        for w, k in s.pairs:
            self.before.setdefault(k, s.prob_of_weight(w))
        self.top_members.extend(s.pairs)
        self.w_plus += s.cum[idx]
        if not math.isinf(s.tau):
            self.d_plus -= s.cum[idx] / s.tau
        self.top_exits = [w for w, _ in s.pairs[:idx]] + self.top_exits
        self.top_exits.sort()
        self.touched += len(s.pairs)
        return True

    def absorb_bottom(self) -> bool:
        if self.lo > self.hi:
            return False
        s = self.deque[self.lo]
        if math.isinf(s.tau):
            return False
        self.lo += 1
        self.absorbed.append(s)
        idx = s.sat_index()
        for w, k in s.pairs:
            self.before.setdefault(k, s.prob_of_weight(w))
        self.bot_members.extend(s.pairs)
        self.w_minus += s.cum[idx]
        self.d_minus += s.cum[idx] / s.tau
        self.bot_desats.extend(w for w, _ in s.pairs[idx:])
        self.bot_desats.sort(reverse=True)
        self.touched += len(s.pairs)
        return True

    # -- piecewise threshold algebra ---------------------------------------

    def t_lo_at(self, x: float) -> float:
        if self.w_plus <= 0 or x - self.d_plus <= 0:
            return math.inf
        return self.w_plus / (x - self.d_plus)

    def t_hi_at(self, x: float) -> float:
        if self.w_minus <= 0:
            return 0.0 if x <= self.pool_total else math.inf
        denom = self.pool_total + self.d_minus - x
        if denom <= 0:
            return math.inf
        return self.w_minus / denom

    def gap_at(self, x: float) -> float:
        t_lo = self.t_lo_at(x)
        if math.isinf(t_lo):
            return math.inf
        t_hi = self.t_hi_at(x)
        if math.isinf(t_hi):
            return -math.inf
        return t_lo * t_lo - t_hi * t_hi

    def x_of_top(self, y: float) -> float:
        return self.d_plus + self.w_plus / y

    def x_of_bot(self, y: float) -> float:
        return self.pool_total + self.d_minus - self.w_minus / y

    # -- events -------------------------------------------------------------

    def next_event(self) -> tuple[float, str] | None:
        """Earliest pending event as (x, kind)."""
        best: tuple[float, str] | None = None

        def consider(x: float, kind: str) -> None:
            nonlocal best
            if best is None or x < best[0]:
                best = (x, kind)

        if self.pool_open and self.w_minus <= 0:
            consider(self.pool_total, "pool_end")
        if self.top_exits:
            consider(self.x_of_top(self.top_exits[-1]), "top_exit")
        j = self._next_top_idx()
        if self.lo <= j:
            consider(self.x_of_top(self.deque[j].tau), "top_entry")
        if self.w_minus > 0:
            if self.bot_desats:
                consider(self.x_of_bot(self.bot_desats[-1]), "bot_desat")
            if self.lo <= self.hi and not math.isinf(self.deque[self.lo].tau):
                consider(self.x_of_bot(self.deque[self.lo].tau), "bot_entry")
        return best

    def pop_event(self, kind: str) -> bool:
        if kind == "pool_end":
            self.pool_open = False
            return self.absorb_bottom()
        if kind == "top_exit":
            w = self.top_exits.pop()
            self.w_plus -= w
            self.d_plus += 1.0
            return True
        if kind == "top_entry":
            return self.absorb_top()
        if kind == "bot_desat":
            w = self.bot_desats.pop()
            self.w_minus += w
            self.d_minus += 1.0
            return True
        if kind == "bot_entry":
            return self.absorb_bottom()
        raise ContractError(f"unknown event {kind}")

    # -- the walk -----------------------------------------------------------

    def run(self, a: float) -> tuple[float, float, float]:
        """Advance until the ratio gap falls to ``a``; returns
        ``(x_star, t_lo, t_hi)``."""
        if not self.absorb_top():
            return 0.0, math.inf, 0.0
        if not self.pool_open and not self.absorb_bottom():
            return 0.0, math.inf, 0.0
        x_cur = 0.0
        total_members = sum(len(s) for s in self.deque) + 8
        for _ in range(6 * total_members + 64):
            event = self.next_event()
            if event is None:
                x_end = self._final_piece_end(a)
                if x_end <= x_cur:
                    x_star = x_cur
                    break
                x_star = _bisect_gap(self.gap_at, a, x_cur, x_end)
                break
            x_end, kind = event
            if x_end > x_cur and self.gap_at(x_end) <= a:
                x_star = _bisect_gap(self.gap_at, a, x_cur, x_end)
                break
            x_cur = max(x_cur, x_end)
            ok = self.pop_event(kind)
            if kind == "pool_end" and not ok:
                x_star = self.pool_total  # no entries left to lower
                break
        else:
            raise ContractError("repair walk failed to terminate")
        return x_star, self.t_lo_at(x_star), self.t_hi_at(x_star)

    def _final_piece_end(self, a: float) -> float:
        if self.w_plus <= 0:
            return 0.0
        if self.w_minus <= 0:
            # decrease is pure pool slack: close the gap to t_lo^2 = a
            if a > 0:
                return min(self.pool_total, self.d_plus + self.w_plus / math.sqrt(a))
            return self.pool_total
        # run until the two thresholds meet (the full PPS point)
        return (
            self.w_plus * (self.pool_total + self.d_minus)
            + self.w_minus * self.d_plus
        ) / (self.w_plus + self.w_minus)


class StableState:
    """Single-writer incremental state: stretches ordered by threshold, a
    pool of zero-weight entries still holding probability, and the PRN
    table backing the materialized sample."""

    def __init__(self, k: float, a: float, seed: int):
        if a < 0:
            raise DomainError(f"stability price must be >= 0, got {a}")
        self.k = float(k)
        self.a = float(a)
        self.stretches: list[Stretch] = []  # ascending by tau
        self.zero_pool: dict[int, float] = {}
        self.inert: set[int] = set()
        self.prn = PrnTable(seed)
        self.work_log: list[int] = []

    # -- queries --------------------------------------------------------

    def tau_lo(self) -> float:
        for s in reversed(self.stretches):
            if s.has_unsaturated():
                return s.tau
        return 0.0

    def tau_hi(self) -> float:
        if self.zero_pool:
            return 0.0
        if self.stretches:
            return self.stretches[0].tau
        return math.inf

    def gap(self) -> float:
        t_lo, t_hi = self.tau_lo(), self.tau_hi()
        if math.isinf(t_lo):
            return math.inf
        if math.isinf(t_hi):
            return 0.0
        return t_lo * t_lo - t_hi * t_hi

    def items(self) -> list[tuple[int, float, float]]:
        """(key, weight, probability) for all entries carrying state."""
        out = []
        for s in self.stretches:
            for w, key in s.pairs:
                out.append((key, w, s.prob_of_weight(w)))
        for key, prob in self.zero_pool.items():
            out.append((key, 0.0, prob))
        return sorted(out)

    def current_distribution(self) -> PpsDistribution:
        items = self.items()
        return PpsDistribution(
            tuple(k for k, _, _ in items),
            tuple(p for _, _, p in items),
            self.k,
        )

    def current_sample(self) -> frozenset[int]:
        return frozenset(
            k for k, _, p in self.items() if p > 0 and self.prn.u(k) <= p
        )

    def current_weights(self) -> WeightVector:
        items = self.items()
        return WeightVector(
            tuple(k for k, _, _ in items), tuple(w for _, w, _ in items)
        )

    # -- updates ----------------------------------------------------------

    def update_weight(self, key: int, new_weight: float) -> ChangeReport:
        """Re-ratio one entry and restore alpha-stability.

        New keys enter with probability zero; deleting is updating to
        weight zero (the entry lingers in the zero pool until its
        probability drains, then drops out lazily).
        """
        if new_weight < 0 or math.isnan(new_weight) or math.isinf(new_weight):
            raise DomainError(f"weight must be finite and >= 0, got {new_weight}")
        old_weight, old_prob = self._detach(key)
        if new_weight == 0.0:
            if old_prob > 0.0:
                self.zero_pool[key] = old_prob
            else:
                self.inert.add(key)
        else:
            tau = math.inf if old_prob == 0.0 else new_weight / old_prob
            self._insert_stretch(Stretch(tau, [(new_weight, key)]))
        before = {key: old_prob}
        ops = 1 + self._repair(before)
        after = {k: p for k, _, p in self.items()}
        deltas: dict[int, tuple[float, float]] = {}
        inserted, removed = set(), set()
        for k, p_old in before.items():
            p_new = after.get(k, 0.0)
            if p_new != p_old:
                deltas[k] = (p_old, p_new)
                u = self.prn.u(k)
                was_in = p_old > 0 and u <= p_old
                is_in = p_new > 0 and u <= p_new
                if is_in and not was_in:
                    inserted.add(k)
                elif was_in and not is_in:
                    removed.add(k)
        self._drop_drained()
        self.work_log.append(ops)
        return ChangeReport(deltas, frozenset(inserted), frozenset(removed), ops)

    def _detach(self, key: int) -> tuple[float, float]:
        if key in self.zero_pool:
            return 0.0, self.zero_pool.pop(key)
        if key in self.inert:
            self.inert.discard(key)
            return 0.0, 0.0
        for i, s in enumerate(self.stretches):
            for w, kk in s.pairs:
                if kk == key:
                    prob = s.prob_of_weight(w)
                    s.remove(key, w)
                    if not s.pairs:
                        self.stretches.pop(i)
                    return w, prob
        return 0.0, 0.0  # brand-new key

    def _insert_stretch(self, s: Stretch) -> None:
        if not s.pairs:
            return
        taus = [t.tau for t in self.stretches]
        idx = bisect_left(taus, s.tau)
        # merge stretches sharing a threshold so ratios stay grouped
        if idx < len(self.stretches) and self.stretches[idx].tau == s.tau:
            self.stretches[idx] = Stretch(s.tau, self.stretches[idx].pairs + s.pairs)
        else:
            self.stretches.insert(idx, s)

    def _drop_drained(self) -> None:
        for k in [k for k, p in self.zero_pool.items() if p <= 0.0]:
            del self.zero_pool[k]
            self.inert.add(k)

    def _repair(self, before: dict[int, float]) -> int:
        if self.gap() <= self.a * (1 + 1e-12) + _GAP_TOL:
            return 0
        walk = _EndWalk(self)
        walk.before.update(before)
        x_star, t_lo, t_hi = walk.run(self.a)
        before.update(walk.before)
        # drain the zero pool in key order
        drained = walk.pool_total if t_hi > 0 else min(x_star, walk.pool_total)
        if drained > 0:
            remaining = drained
            for k in sorted(self.zero_pool):
                if remaining <= 0:
                    break
                before.setdefault(k, self.zero_pool[k])
                cut = min(self.zero_pool[k], remaining)
                self.zero_pool[k] -= cut
                remaining -= cut
                walk.touched += 1
        # rebuild: untouched middle plus the merged end stretches
        middle = walk.deque[walk.lo : walk.hi + 1]
        self.stretches = sorted(middle + walk.skipped_top, key=lambda s: s.tau)
        if math.isinf(t_lo) and walk.top_members:
            t_lo = min(w for w, _ in walk.top_members)  # fully saturated side
        if math.isinf(t_hi):
            raise ContractError("repair drove the lower threshold to infinity")
        if walk.top_members and walk.bot_members and _close_rel(t_lo, t_hi):
            self._insert_stretch(Stretch(t_lo, walk.top_members + walk.bot_members))
        else:
            if walk.top_members:
                self._insert_stretch(Stretch(t_lo, walk.top_members))
            if walk.bot_members:
                self._insert_stretch(Stretch(t_hi, walk.bot_members))
        return walk.touched


def _close_rel(x: float, y: float) -> bool:
    return abs(x - y) <= 1e-12 * max(abs(x), abs(y), 1.0)


def _bisect_gap(gap_at, a: float, lo: float, hi: float) -> float:
    """Root of gap(x) = a on (lo, hi]; the gap decreases in x."""
    if gap_at(hi) >= a:
        return hi
    x0, x1 = lo, hi
    for _ in range(200):
        mid = 0.5 * (x0 + x1)
        if mid == x0 or mid == x1:
            break
        if gap_at(mid) > a:
            x0 = mid
        else:
            x1 = mid
    return x1


def build(w: WeightVector, k: float, a: float, seed: int = 0) -> StableState:
    """Initial state from a batch PPS solve: one stretch at the PPS
    threshold, zero-weight keys inert."""
    sol = pps_probabilities(w, k)
    state = StableState(k, a, seed)
    pairs = [(float(wi), int(key)) for key, wi in w if wi > 0]
    state.stretches = [Stretch(sol.tau, pairs)]
    state.inert = {key for key, wi in w if wi == 0}
    return state


def update_weight(state: StableState, key: int, new_weight: float) -> ChangeReport:
    return state.update_weight(key, new_weight)
