"""Materialize sample sets from inclusion-probability distributions with
minimal expected churn.

Two couplings are provided.  ``subsample`` transforms a sample drawn from
``p`` into one distributed per ``q`` touching as few entries as possible:
the expected symmetric difference equals ``||p - q||_1``, which is the
minimum any coupling can achieve.  ``prn_sample`` assigns each key a
permanent uniform ``u_i`` and includes the key iff ``u_i <= p_i``, so
samples stay coordinated across arbitrarily many steps.

Permanent numbers are derived from ``(seed, key)`` with SplitMix64, making
them independent of draw order and reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ContractError, PpsDistribution

__all__ = ["SampleSet", "PrnTable", "subsample", "prn_sample", "expected_flips_independent"]

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = (z + np.uint64(0x9E3779B97F4A7C15)) & _MASK
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
    return z ^ (z >> np.uint64(31))


def _key_uniform(seed: int, keys: np.ndarray) -> np.ndarray:
    """Deterministic uniforms in (0, 1) for 64-bit keys under a seed."""
    base = _splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    mixed = _splitmix64(keys.astype(np.uint64) ^ base)
    # 53 mantissa bits, shifted into (0, 1); zero is impossible after +1
    return ((mixed >> np.uint64(11)).astype(np.float64) + 1.0) * (2.0**-53)


@dataclass(frozen=True)
class SampleSet:
    """A realized sample: keys drawn from ``source`` (every member must have
    positive inclusion probability there)."""

    members: frozenset[int]
    source: PpsDistribution | None = None

    def __post_init__(self) -> None:
        if self.source is not None:
            probs = self.source.as_dict()
            for k in self.members:
                if probs.get(k, 0.0) <= 0.0:
                    raise ContractError(f"sample member {k} has zero probability")

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, key: int) -> bool:
        return key in self.members

    def symmetric_difference(self, other: "SampleSet") -> int:
        return len(self.members ^ other.members)


@dataclass
class PrnTable:
    """Permanent random number per key.

    ``u_i`` is fixed for the lifetime of a key; a key is in the sample for
    distribution ``p`` iff ``u_i <= p_i``.  Keys are never evicted.
    """

    seed: int
    _table: dict[int, float] = field(default_factory=dict, repr=False)

    def u(self, key: int) -> float:
        got = self._table.get(key)
        if got is None:
            got = float(_key_uniform(self.seed, np.array([key], dtype=np.uint64))[0])
            self._table[key] = got
        return got

    def bulk(self, keys: np.ndarray) -> np.ndarray:
        """Uniforms for many keys at once (all cached afterwards)."""
        us = _key_uniform(self.seed, np.asarray(keys, dtype=np.uint64))
        for k, v in zip(keys, us):
            self._table.setdefault(int(k), float(v))
        return us

    def __len__(self) -> int:
        return len(self._table)


def prn_sample(p: PpsDistribution, table: PrnTable) -> SampleSet:
    """Sample under the permanent-number rule: ``{i : u_i <= p_i}``.

    Deterministic given the table; consecutive samples from different
    distributions are automatically coordinated.
    """
    members = frozenset(k for k, prob in p if prob > 0.0 and table.u(k) <= prob)
    return SampleSet(members, p)


def subsample(
    s: SampleSet,
    p: PpsDistribution,
    q: PpsDistribution,
    rng: np.random.Generator,
) -> SampleSet:
    """Transform a sample drawn from ``p`` into one distributed per ``q``.

    An absent entry whose probability rose is sampled in with probability
    ``(q_i - p_i) / (1 - p_i)``; a present entry whose probability fell is
    sampled out with probability ``1 - q_i / p_i``.  Entries with unchanged
    probability never consume randomness.  Keys are visited in sorted order
    so a seeded generator yields reproducible results.
    """
    pd, qd = p.as_dict(), q.as_dict()
    members = set(s.members)
    for key in sorted(set(pd) | set(qd)):
        pi, qi = pd.get(key, 0.0), qd.get(key, 0.0)
        if key not in members and qi > pi:
            if rng.random() < (qi - pi) / (1.0 - pi):
                members.add(key)
        elif key in members and qi < pi:
            if qi == 0.0 or rng.random() > qi / pi:
                members.discard(key)
    return SampleSet(frozenset(members), q)


def expected_flips_independent(p: PpsDistribution, q: PpsDistribution) -> float:
    """Expected symmetric difference between *independent* draws from ``p``
    and ``q``: ``sum_i p_i (1 - q_i) + q_i (1 - p_i)``."""
    pd, qd = p.as_dict(), q.as_dict()
    total = 0.0
    for key in set(pd) | set(qd):
        pi, qi = pd.get(key, 0.0), qd.get(key, 0.0)
        total += pi * (1.0 - qi) + qi * (1.0 - pi)
    return total
