"""Shared domain types: weight vectors, inclusion-probability vectors,
piecewise hyperbolic functions, and fitness/changeout tradeoff curves.

All types are immutable values once constructed and can be shared freely
between threads.  Reals are double precision throughout; the exact-rational
cross-checks live in :mod:`stableopt.oracle`.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_TOL = 1e-9


class StableOptError(Exception):
    """Base class for errors raised by this package."""


class DomainError(StableOptError):
    """An argument lies outside the domain of the requested operation."""


class InfeasibleError(StableOptError):
    """The instance admits no feasible output (e.g. sample size too large)."""


class ContractError(StableOptError):
    """A structural precondition was violated (e.g. non-monotone input)."""


class ScaleError(StableOptError):
    """Instance exceeds the size bounds of an exact/enumerative solver."""


# ---------------------------------------------------------------------------
# Weight and probability vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative weights indexed by opaque integer keys.

    Keys are unique 64-bit identifiers; dense index views are built
    internally where needed.
    """

    keys: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.keys) != len(self.weights):
            raise ContractError("keys and weights must have equal length")
        if len(set(self.keys)) != len(self.keys):
            raise ContractError("duplicate keys in weight vector")
        for w in self.weights:
            if not (w >= 0.0) or math.isnan(w) or math.isinf(w):
                raise ContractError(f"weights must be finite and >= 0, got {w}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "WeightVector":
        pairs = list(pairs)
        return cls(tuple(int(k) for k, _ in pairs), tuple(float(w) for _, w in pairs))

    @classmethod
    def from_dict(cls, d: dict[int, float]) -> "WeightVector":
        return cls.from_pairs(sorted(d.items()))

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(zip(self.keys, self.weights))

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.keys, self.weights))

    def array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def weight_of(self, key: int, default: float = 0.0) -> float:
        try:
            return self.weights[self.keys.index(key)]
        except ValueError:
            return default

    def positive_count(self) -> int:
        return sum(1 for w in self.weights if w > 0.0)


@dataclass(frozen=True)
class PpsDistribution:
    """Inclusion probabilities ``p in [0,1]^n`` summing to the expected
    sample size ``target_size``."""

    keys: tuple[int, ...]
    probs: tuple[float, ...]
    target_size: float
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if len(self.keys) != len(self.probs):
            raise ContractError("keys and probs must have equal length")
        if len(set(self.keys)) != len(self.keys):
            raise ContractError("duplicate keys in distribution")
        for p in self.probs:
            if not (-self.tol <= p <= 1.0 + self.tol):
                raise ContractError(f"probability {p} outside [0, 1]")
        total = math.fsum(self.probs)
        if abs(total - self.target_size) > self.tol:
            raise ContractError(
                f"probabilities sum to {total}, expected {self.target_size}"
            )

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[tuple[int, float]], target_size: float | None = None,
        tol: float = DEFAULT_TOL,
    ) -> "PpsDistribution":
        pairs = list(pairs)
        keys = tuple(int(k) for k, _ in pairs)
        probs = tuple(float(p) for _, p in pairs)
        if target_size is None:
            target_size = math.fsum(probs)
        return cls(keys, probs, float(target_size), tol)

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(zip(self.keys, self.probs))

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.keys, self.probs))

    def array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def prob_of(self, key: int, default: float = 0.0) -> float:
        try:
            return self.probs[self.keys.index(key)]
        except ValueError:
            return default

    def l1_distance(self, other: "PpsDistribution") -> float:
        """L1 distance over the union of key sets (missing keys count as 0)."""
        mine, theirs = self.as_dict(), other.as_dict()
        return math.fsum(
            abs(mine.get(k, 0.0) - theirs.get(k, 0.0))
            for k in set(mine) | set(theirs)
        )


def align_weights_probs(
    w: WeightVector, p: PpsDistribution
) -> tuple[tuple[int, ...], np.ndarray, np.ndarray]:
    """Align a weight vector and a distribution over the union of their keys.

    Keys missing from ``w`` get weight 0, keys missing from ``p`` get
    probability 0.  Returns keys sorted ascending with matching arrays.
    """
    wd, pd = w.as_dict(), p.as_dict()
    keys = tuple(sorted(set(wd) | set(pd)))
    warr = np.array([wd.get(k, 0.0) for k in keys], dtype=float)
    parr = np.array([pd.get(k, 0.0) for k in keys], dtype=float)
    return keys, warr, parr


# ---------------------------------------------------------------------------
# Piecewise hyperbolic functions
# ---------------------------------------------------------------------------

# Piece kinds.  "affine_reciprocal" is f(x) = a + b/x, "shifted_reciprocal"
# is f(x) = b/(x - a); the two are inverses of each other with the same
# coefficients.  "constant" is f(x) = c.
AFFINE_RECIPROCAL = "affine_reciprocal"
SHIFTED_RECIPROCAL = "shifted_reciprocal"
CONSTANT = "constant"


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_open: bool = True
    hi_open: bool = False

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ContractError(f"empty interval ({self.lo}, {self.hi})")
        if self.lo == self.hi and (self.lo_open or self.hi_open):
            raise ContractError("degenerate open interval")

    def contains(self, x: float) -> bool:
        if x < self.lo or (x == self.lo and self.lo_open):
            return False
        if x > self.hi or (x == self.hi and self.hi_open):
            return False
        return True

    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class HyperbolaPiece:
    """One piece of a piecewise function: a hyperbola or constant restricted
    to an interval.  The restriction is monotone by construction."""

    interval: Interval
    kind: str
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0

    def __call__(self, x: float) -> float:
        if self.kind == CONSTANT:
            return self.c
        if self.kind == AFFINE_RECIPROCAL:
            if x == 0:
                return math.inf if self.b > 0 else -math.inf
            return self.a + self.b / x
        if self.kind == SHIFTED_RECIPROCAL:
            d = x - self.a
            if d == 0:
                return math.inf if self.b > 0 else -math.inf
            return self.b / d
        raise ContractError(f"unknown piece kind {self.kind!r}")

    def value_at_lo(self) -> float:
        return self(self.interval.lo)

    def value_at_hi(self) -> float:
        return self(self.interval.hi)

    def is_strictly_monotone(self) -> bool:
        return self.kind != CONSTANT and self.b != 0.0

    def inverted(self) -> "HyperbolaPiece":
        """Swap the roles of argument and value.

        ``a + b/x`` on (lo, hi) maps to ``b/(x - a)`` on the image interval
        (endpoints swap sides, openness follows the endpoints).  Constant
        pieces are not invertible.
        """
        if not self.is_strictly_monotone():
            raise ContractError("cannot invert a constant piece")
        new_kind = SHIFTED_RECIPROCAL if self.kind == AFFINE_RECIPROCAL else AFFINE_RECIPROCAL
        lo_val, hi_val = self.value_at_lo(), self.value_at_hi()
        # Both kinds are decreasing for b > 0 and increasing for b < 0 on a
        # sign-definite domain, so the image endpoints may arrive reversed.
        if lo_val <= hi_val:
            ivl = Interval(lo_val, hi_val, self.interval.lo_open, self.interval.hi_open)
        else:
            ivl = Interval(hi_val, lo_val, self.interval.hi_open, self.interval.lo_open)
        return HyperbolaPiece(ivl, new_kind, a=self.a, b=self.b)


@dataclass(frozen=True)
class PiecewiseFunction:
    """Sorted, tiling pieces forming one (weakly) monotone function.

    ``jump_points`` lists breakpoints where a discontinuity is expected
    (e.g. where a zero-cost flat segment meets the first real piece); the
    continuity check is skipped there.
    """

    pieces: tuple[HyperbolaPiece, ...]
    direction: str  # "increasing" | "decreasing"
    jump_points: frozenset[float] = frozenset()
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if self.direction not in ("increasing", "decreasing"):
            raise ContractError(f"bad direction {self.direction!r}")
        prev = None
        sign = 1.0 if self.direction == "increasing" else -1.0
        for piece in self.pieces:
            if piece.is_strictly_monotone():
                # a + b/x and b/(x-a) both move opposite to the sign of b on
                # a pole-free interval.
                piece_sign = -1.0 if piece.b > 0 else 1.0
                if piece_sign != sign:
                    raise ContractError("piece monotonicity disagrees with direction")
            if prev is not None:
                if piece.interval.lo != prev.interval.hi:
                    raise ContractError("pieces do not tile the domain")
                if piece.interval.lo_open == prev.interval.hi_open:
                    raise ContractError("overlapping or gapping openness at breakpoint")
                if piece.interval.lo not in self.jump_points:
                    left = prev.value_at_hi()
                    right = piece.value_at_lo()
                    if not _close(left, right, self.tol):
                        raise ContractError(
                            f"discontinuity at {piece.interval.lo}: {left} vs {right}"
                        )
            prev = piece

    @property
    def empty(self) -> bool:
        return not self.pieces

    def domain(self) -> Interval:
        if self.empty:
            raise DomainError("empty function has no domain")
        first, last = self.pieces[0].interval, self.pieces[-1].interval
        return Interval(first.lo, last.hi, first.lo_open, last.hi_open)

    def breakpoints(self) -> list[float]:
        return [p.interval.lo for p in self.pieces[1:]]

    def __call__(self, x: float) -> float:
        return eval_piecewise(self, x)

    def restrict(self, lo: float | None = None, hi: float | None = None) -> "PiecewiseFunction":
        """Clip the domain to ``[lo, hi]``; cut ends become closed.

        Pieces wholly outside the window are dropped, the boundary pieces are
        trimmed in place.
        """
        if self.empty:
            return self
        dom = self.domain()
        if hi is not None and hi <= dom.lo:
            return PiecewiseFunction((), self.direction, self.jump_points, self.tol)
        if lo is not None and lo >= dom.hi:
            return PiecewiseFunction((), self.direction, self.jump_points, self.tol)
        kept: list[HyperbolaPiece] = []
        for piece in self.pieces:
            ivl = piece.interval
            new_lo, new_lo_open = ivl.lo, ivl.lo_open
            new_hi, new_hi_open = ivl.hi, ivl.hi_open
            if lo is not None and lo > new_lo:
                if lo > new_hi or (lo == new_hi and new_hi_open):
                    continue
                new_lo, new_lo_open = lo, False
            if hi is not None and hi < new_hi:
                if hi < new_lo or (hi == new_lo and new_lo_open):
                    continue
                new_hi, new_hi_open = hi, False
            if new_lo == new_hi and (new_lo_open or new_hi_open):
                continue
            kept.append(
                HyperbolaPiece(
                    Interval(new_lo, new_hi, new_lo_open, new_hi_open),
                    piece.kind, piece.a, piece.b, piece.c,
                )
            )
        return PiecewiseFunction(tuple(kept), self.direction, self.jump_points, self.tol)


def _close(x: float, y: float, tol: float) -> bool:
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= tol


def eval_piecewise(f: PiecewiseFunction, x: float) -> float:
    """Value of the unique piece covering ``x``.

    Boundary points resolve to the piece whose closure contains them,
    preferring the closed side.  Points within ``f.tol`` of the outermost
    domain ends are snapped in; anything further out is a domain error.
    """
    if f.empty:
        raise DomainError("empty piecewise function")
    dom = f.domain()
    if not dom.contains(x):
        if x > dom.hi and x - dom.hi <= f.tol:
            x = dom.hi
        elif x < dom.lo and dom.lo - x <= f.tol and not dom.lo_open:
            x = dom.lo
        else:
            raise DomainError(f"{x} outside domain ({dom.lo}, {dom.hi}]")
    los = [p.interval.lo for p in f.pieces]
    idx = bisect_right(los, x) - 1
    for j in (idx, idx + 1, idx - 1):
        if 0 <= j < len(f.pieces) and f.pieces[j].interval.contains(x):
            return f.pieces[j](x)
    raise DomainError(f"{x} not covered by any piece")


def invert_piecewise(f: PiecewiseFunction) -> PiecewiseFunction:
    """Inverse function, produced by inverting each piece.

    Requires ``f`` strictly monotone (no constant pieces).  Inverting twice
    recovers the original coefficients exactly.
    """
    if f.empty:
        return f
    inverted = []
    for piece in f.pieces:
        if not piece.is_strictly_monotone():
            raise ContractError("invert_piecewise requires a strictly monotone function")
        inverted.append(piece.inverted())
    # The inverse of a monotone function is monotone in the same direction;
    # for a decreasing f the image intervals come out in reverse order.
    if f.direction == "decreasing":
        inverted.reverse()
    return PiecewiseFunction(tuple(inverted), f.direction, tol=f.tol)


# ---------------------------------------------------------------------------
# Tradeoff curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TradeoffPoint:
    changeout: float
    fitness: float
    multiplier: float  # marginal fitness gain per unit changeout entering this point


@dataclass(frozen=True)
class TradeoffCurve:
    """Changeout/fitness tradeoff: changeout strictly increasing, fitness
    (maximization orientation) non-decreasing, multiplier non-increasing,
    and concave chord slopes."""

    points: tuple[TradeoffPoint, ...]
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        pts = self.points
        if not pts:
            raise ContractError("tradeoff curve needs at least one point")
        for q in pts:
            if q.changeout < -self.tol:
                raise ContractError("negative changeout")
            if q.multiplier < -self.tol:
                raise ContractError("negative multiplier")
        for a, b in zip(pts, pts[1:]):
            if not b.changeout > a.changeout:
                raise ContractError("changeout must be strictly increasing")
            if b.fitness < a.fitness - self.tol:
                raise ContractError("fitness must be non-decreasing")
            if b.multiplier > a.multiplier + self.tol:
                raise ContractError("multiplier must be non-increasing")
        slopes = self.slopes()
        for s, t in zip(slopes, slopes[1:]):
            if t > s + self.tol:
                raise ContractError(f"tradeoff not concave: slope {s} then {t}")

    def slopes(self) -> list[float]:
        out = []
        for a, b in zip(self.points, self.points[1:]):
            if math.isinf(b.fitness) or math.isinf(a.fitness):
                out.append(math.inf)
            else:
                out.append((b.fitness - a.fitness) / (b.changeout - a.changeout))
        return out

    def changeouts(self) -> list[float]:
        return [q.changeout for q in self.points]

    def fitnesses(self) -> list[float]:
        return [q.fitness for q in self.points]

    @classmethod
    def from_tuples(
        cls, tuples: Sequence[tuple[float, float, float]], tol: float = DEFAULT_TOL
    ) -> "TradeoffCurve":
        return cls(tuple(TradeoffPoint(*t) for t in tuples), tol)
