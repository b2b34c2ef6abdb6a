"""Independent reference solvers used by the test suite.

Nothing here shares code with the production solvers: the convex reference
goes through generic NLP machinery (SLSQP) and projected gradient descent,
the combinatorial references enumerate, and the worked examples are redone
in exact rational arithmetic.  Production results are compared against
these, never derived from them.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize

from .core import ScaleError

__all__ = [
    "convex_pps_oracle",
    "pps_kkt_residual",
    "pg_best_increase",
    "pg_best_decrease",
    "exhaustive_set_oracle",
    "pps_exact",
    "increase_pieces_exact",
    "decrease_pieces_exact",
    "delta_opt_exact",
]


# ---------------------------------------------------------------------------
# Convex reference for the L1-constrained variance minimization
# ---------------------------------------------------------------------------


def convex_pps_oracle(
    w: Sequence[float],
    p: Sequence[float],
    D: float,
    n_max: int = 8,
) -> np.ndarray:
    """Minimize ``sum w_i^2 / q_i`` over ``q`` with ``sum q = sum p``,
    ``0 <= q <= 1`` and ``||q - p||_1 <= D``, via SLSQP on the split
    ``q = p + u - v``.

    Requires ``p_i > 0`` wherever ``w_i > 0`` (otherwise the start point has
    infinite objective).  Small instances only.
    """
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    n = len(w)
    if n > n_max:
        raise ScaleError(f"convex oracle limited to n <= {n_max}, got {n}")
    if np.any((w > 0) & (p <= 0)):
        raise ScaleError("convex oracle needs positive start probabilities on positive weights")
    wsq = w * w
    positive = w > 0

    def split(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return z[:n], z[n:]

    def q_of(z: np.ndarray) -> np.ndarray:
        u, v = split(z)
        return p + u - v

    def objective(z: np.ndarray) -> float:
        q = q_of(z)
        if np.any(q[positive] <= 0):
            return 1e300
        return float(np.sum(wsq[positive] / q[positive]))

    def gradient(z: np.ndarray) -> np.ndarray:
        q = np.maximum(q_of(z), 1e-300)
        g = np.where(positive, -wsq / (q * q), 0.0)
        return np.concatenate([g, -g])

    lower = np.zeros(2 * n)
    upper = np.concatenate([
        1.0 - p,
        np.where(positive, p * (1.0 - 1e-12), p),
    ])
    bounds = list(zip(lower, upper))
    cons = [
        {"type": "eq", "fun": lambda z: np.sum(z[:n]) - np.sum(z[n:]),
         "jac": lambda z: np.concatenate([np.ones(n), -np.ones(n)])},
        {"type": "ineq", "fun": lambda z: D - np.sum(z),
         "jac": lambda z: -np.ones(2 * n)},
    ]
    best = None
    for scale in (0.25, 0.05):
        z0 = np.concatenate([
            np.minimum(upper[:n], D * scale / max(n, 1)),
            np.minimum(upper[n:], D * scale / max(n, 1)),
        ])
        # balance the two halves so the equality constraint holds at start
        s_u, s_v = np.sum(z0[:n]), np.sum(z0[n:])
        if s_u > s_v and s_u > 0:
            z0[:n] *= s_v / s_u
        elif s_v > s_u and s_v > 0:
            z0[n:] *= s_u / s_v
        res = optimize.minimize(
            objective, z0, jac=gradient, bounds=bounds, constraints=cons,
            method="SLSQP", options={"maxiter": 500, "ftol": 1e-14},
        )
        if best is None or objective(res.x) < objective(best.x):
            best = res
    return q_of(best.x)


def pps_kkt_residual(
    w: Sequence[float], p: Sequence[float], q: Sequence[float], D: float
) -> float:
    """First-order optimality residual for the L1-constrained problem.

    Raised non-saturated entries must share a common ratio ``w/q`` and
    lowered entries another (weakly smaller) one; returns the largest
    relative spread plus any feasibility violation.
    """
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    res = max(0.0, abs(float(np.sum(q) - np.sum(p))))
    res = max(res, float(np.sum(np.abs(q - p))) - D)
    raised = (q > p + 1e-9) & (q < 1.0 - 1e-9) & (w > 0)
    lowered = (q < p - 1e-9) & (q > 1e-12) & (w > 0)
    for mask in (raised, lowered):
        if np.count_nonzero(mask) > 1:
            ratios = w[mask] / q[mask]
            res = max(res, float(ratios.max() - ratios.min()) / float(ratios.max()))
    if np.any(raised) and np.any(lowered):
        t_lo = float(np.min(w[raised] / q[raised]))
        t_hi = float(np.max(w[lowered] / q[lowered]))
        res = max(res, (t_hi - t_lo) / max(t_lo, 1e-12))
    return res


# ---------------------------------------------------------------------------
# Projected gradient for the one-sided moves
# ---------------------------------------------------------------------------


def _project_capped_simplex(z: np.ndarray, total: float, caps: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{0 <= x <= caps, sum x = total}``."""
    if total <= 0:
        return np.zeros_like(z)
    if total >= np.sum(caps):
        return caps.copy()
    lo = float(np.min(z - caps)) - 1.0
    hi = float(np.max(z)) + 1.0
    for _ in range(100):
        theta = 0.5 * (lo + hi)
        s = float(np.sum(np.clip(z - theta, 0.0, caps)))
        if s > total:
            lo = theta
        else:
            hi = theta
    return np.clip(z - 0.5 * (lo + hi), 0.0, caps)


def pg_best_increase(
    w: Sequence[float], p: Sequence[float], x: float,
    iters: int = 100_000, tol: float = 1e-13,
) -> np.ndarray:
    """Projected-gradient solution of the fixed-total-increase problem:
    minimize ``sum w^2/(p+u)`` over ``0 <= u <= 1-p`` with ``sum u = x``."""
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    caps = 1.0 - p
    wsq = w * w
    u = _project_capped_simplex(np.full_like(p, x / len(p)), x, caps)
    step = 0.25 / max(float(np.max(wsq / np.maximum(p, 1e-9) ** 3)), 1e-9)
    for it in range(iters):
        q = np.maximum(p + u, 1e-300)
        grad = -wsq / (q * q)
        nxt = _project_capped_simplex(u - step * grad, x, caps)
        move = float(np.max(np.abs(nxt - u)))
        u = nxt
        if move < tol and it > 50:
            break
    return p + u


def pg_best_decrease(
    w: Sequence[float], p: Sequence[float], x: float,
    iters: int = 100_000, tol: float = 1e-13,
) -> np.ndarray:
    """Projected-gradient solution of the fixed-total-decrease problem:
    minimize ``sum_{w>0} w^2/(p-d)`` over ``0 <= d <= p`` with ``sum d = x``.

    Entries with zero weight are free to shed probability, so their caps are
    used first by the projection; positive-weight entries keep a sliver of
    probability to keep the objective finite.
    """
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    caps = np.where(w > 0, p * (1.0 - 1e-12), p)
    wsq = w * w
    d = _project_capped_simplex(np.full_like(p, x / len(p)), x, caps)
    step = 0.25 / max(float(np.max(wsq / np.maximum(p, 1e-9) ** 3)), 1e-9)
    for it in range(iters):
        q = np.maximum(p - d, 1e-300)
        grad = np.where(w > 0, wsq / (q * q), 0.0)
        nxt = _project_capped_simplex(d - step * grad, x, caps)
        move = float(np.max(np.abs(nxt - d)))
        d = nxt
        if move < tol and it > 50:
            break
    return p - d


# ---------------------------------------------------------------------------
# Exhaustive search over discrete outputs
# ---------------------------------------------------------------------------


def exhaustive_set_oracle(
    candidates: Iterable[frozenset[int]],
    fitness: Callable[[frozenset[int]], float],
    prev: frozenset[int],
    a: float,
    changeout: Callable[[frozenset[int]], float] | None = None,
    limit: int = 1_000_000,
) -> frozenset[int]:
    """Exact maximizer of ``fitness(S) - a * changeout(S)`` by enumeration.

    Ties resolve toward larger overlap with ``prev``, then lexicographically
    smallest sorted membership.  Refuses more than ``limit`` candidates.
    """
    if changeout is None:
        changeout = lambda s: len(s - prev)
    best = None
    best_key = None
    count = 0
    for cand in candidates:
        count += 1
        if count > limit:
            raise ScaleError(f"more than {limit} candidates")
        objective = fitness(cand) - a * changeout(cand)
        key = (objective, len(cand & prev), tuple(sorted(cand)))
        if best_key is None or _oracle_key_better(key, best_key):
            best, best_key = cand, key
    if best is None:
        raise ScaleError("no candidates supplied")
    return best


def _oracle_key_better(key, best) -> bool:
    if key[0] != best[0]:
        return key[0] > best[0]
    if key[1] != best[1]:
        return key[1] > best[1]
    return key[2] < best[2]


# ---------------------------------------------------------------------------
# Exact rational reference for the worked examples
# ---------------------------------------------------------------------------

Frac = Fraction


def pps_exact(weights: Sequence[Fraction], k: Fraction) -> tuple[list[Fraction], Fraction]:
    """Exact PPS probabilities and threshold over rationals."""
    n_pos = sum(1 for w in weights if w > 0)
    if not 0 < k <= n_pos:
        raise ScaleError(f"infeasible size {k} with {n_pos} positive weights")
    order = sorted(range(len(weights)), key=lambda i: (-weights[i], i))
    pos = [weights[i] for i in order if weights[i] > 0]
    if k == n_pos:
        tau = pos[-1]
    else:
        tau = None
        for j in range(n_pos):
            rest = sum(pos[j:], Frac(0))
            cand = rest / (k - j)
            if pos[j] < cand and (j == 0 or pos[j - 1] >= cand):
                tau = cand
                break
        assert tau is not None
    probs = [min(Frac(1), w / tau) if w > 0 else Frac(0) for w in weights]
    return probs, tau


def increase_pieces_exact(
    weights: Sequence[Fraction], probs: Sequence[Fraction]
) -> list[tuple[Fraction, Fraction, Fraction, Fraction]]:
    """Exact pieces of the increase threshold function.

    Each tuple is ``(x_lo, x_hi, d, s)`` meaning ``tau(x) = s / (x - d)`` on
    ``(x_lo, x_hi]``; pieces are in increasing-x order.
    """
    events: dict[Fraction, list[tuple[str, Fraction, Fraction]]] = {}
    head = Frac(0)
    for w, p in zip(weights, probs):
        if w <= 0 or p >= 1:
            continue
        if p == 0:
            head += w
        else:
            events.setdefault(w / p, []).append(("entry", w, p))
        events.setdefault(Frac(w), []).append(("exit", w, p))
    values = sorted(events, reverse=True)
    pieces = []
    W, D = head, Frac(0)
    x_lo = Frac(0)
    if W > 0 and values:
        x_hi = W / values[0]
        pieces.append((x_lo, x_hi, Frac(0), W))
        x_lo = x_hi
    for j, v in enumerate(values):
        for kind, w, p in events[v]:
            if kind == "entry":
                W += w
                D -= p
            else:
                W -= w
                D += 1
        if j + 1 < len(values) and W > 0:
            x_hi = D + W / values[j + 1]
            if x_hi > x_lo:
                pieces.append((x_lo, x_hi, D, W))
                x_lo = x_hi
    return pieces


def decrease_pieces_exact(
    weights: Sequence[Fraction], probs: Sequence[Fraction]
) -> tuple[Fraction, list[tuple[Fraction, Fraction, Fraction, Fraction]]]:
    """Exact pieces of the decrease threshold function.

    Returns the free slack ``d0`` and tuples ``(x_lo, x_hi, d, s)`` meaning
    ``tau(x) = s / (d - x)`` on ``(x_lo, x_hi]``; the flat zero piece on
    ``(0, d0]`` is implicit.
    """
    d0 = sum((p for w, p in zip(weights, probs) if w == 0), Frac(0))
    events: dict[Fraction, list[tuple[Fraction, Fraction]]] = {}
    for w, p in zip(weights, probs):
        if w <= 0 or p <= 0:
            continue
        events.setdefault(w / p, []).append((w, p))
    values = sorted(events)
    pieces = []
    W, D = Frac(0), d0
    x_lo = d0
    for j, v in enumerate(values):
        for w, p in events[v]:
            W += w
            D += p
        if j + 1 < len(values):
            x_hi = D - W / values[j + 1]
            if x_hi > x_lo:
                pieces.append((x_lo, x_hi, D, W))
                x_lo = x_hi
        else:
            pieces.append((x_lo, D, D, W))
    return d0, pieces


def _eval_increase_exact(pieces, x: Fraction) -> Fraction:
    for x_lo, x_hi, d, s in pieces:
        if x_lo < x <= x_hi:
            return s / (x - d)
    raise ScaleError(f"{x} outside exact increase pieces")


def _eval_decrease_exact(d0: Fraction, pieces, x: Fraction) -> Fraction:
    if x <= d0:
        return Frac(0)
    for x_lo, x_hi, d, s in pieces:
        if x_lo < x <= x_hi:
            return s / (d - x)
    raise ScaleError(f"{x} outside exact decrease pieces")


def delta_opt_exact(
    weights: Sequence[Fraction], probs: Sequence[Fraction], D: Fraction
) -> tuple[list[Fraction], Fraction, Fraction]:
    """Exact optimal distribution within L1 changeout ``D`` plus the two
    thresholds applied.  ``D`` must not exceed the distance to the PPS
    optimum."""
    x = D / 2
    inc = increase_pieces_exact(weights, probs)
    d0, dec = decrease_pieces_exact(weights, probs)
    t_lo = _eval_increase_exact(inc, x)
    t_hi = _eval_decrease_exact(d0, dec, x)
    q = list(probs)
    for i, (w, p) in enumerate(zip(weights, probs)):
        if w > 0 and w / t_lo > p:
            q[i] = min(Frac(1), w / t_lo)
        elif t_hi > 0 and (w == 0 or w / t_hi < p):
            q[i] = w / t_hi if w > 0 else Frac(0)
    if t_hi == 0:
        remaining = x
        for i, (w, p) in enumerate(zip(weights, probs)):
            if w == 0 and remaining > 0:
                cut = min(p, remaining)
                q[i] = p - cut
                remaining -= cut
    return q, t_lo, t_hi
