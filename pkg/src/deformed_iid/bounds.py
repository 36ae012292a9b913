"""Closed-form theorem-level quantities for the query lower bound.

All logarithms are natural.  The vanishing additive correction that
accompanies the failure probability in the asymptotic statement is not
included in :func:`failure_probability_bound`; its form is unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SubcriticalSpike

__all__ = [
    "LowerBoundParams",
    "SeriesCapCheck",
    "spike_from_gap",
    "failure_probability_bound",
    "theorem_query_budget",
    "alignment_limit",
    "lemma_d2_check",
    "two_side_target",
]

# Guards floor() against results like 19.999999999999996 for exact integers.
_FLOOR_SLACK = 1e-9


def spike_from_gap(gap: float) -> float:
    """The spike strength whose planted matrix has the given limiting eigen-gap."""
    if not 0 < gap < 1:
        raise ValueError(f"gap must lie in (0, 1), got {gap}")
    return 1.0 / (1.0 - gap)


@dataclass(frozen=True)
class LowerBoundParams:
    gap: float
    d: int
    T: int = 0

    def __post_init__(self):
        if not 0 < self.gap <= 0.5:
            raise ValueError(f"gap must lie in (0, 1/2], got {self.gap}")
        if self.d < 2:
            raise ValueError(f"d must be at least 2, got {self.d}")
        if self.T < 0:
            raise ValueError(f"T must be non-negative, got {self.T}")

    @property
    def lam(self) -> float:
        return spike_from_gap(self.gap)


def failure_probability_bound(p: LowerBoundParams) -> float:
    """exp(-1/gap - lam^{-4T} d gap^3 / 256)."""
    decay = math.exp(-4.0 * p.T * math.log(p.lam))
    return math.exp(-1.0 / p.gap - decay * p.d * p.gap**3 / 256.0)


def _floor(x: float) -> int:
    return int(math.floor(x + _FLOOR_SLACK * max(1.0, abs(x))))


def theorem_query_budget(d: int, gap: float | None = None, *, two_side: bool = False,
                         lam: float | None = None) -> int:
    """Query budget below which the lower bound applies.

    One-side: floor(ln d / (5 gap)).  Two-side: floor(ln d / (5 (lam - 1)));
    ``lam`` defaults to ``1/(1-gap)`` when only the gap is given.
    """
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}")
    if two_side:
        if lam is None:
            if gap is None:
                raise ValueError("two-side budget needs lam or gap")
            lam = spike_from_gap(gap)
        if lam <= 1:
            raise SubcriticalSpike(f"spike strength must exceed 1, got {lam}")
        return _floor(math.log(d) / (5.0 * (lam - 1.0)))
    if gap is None or gap <= 0:
        raise ValueError(f"gap must be positive, got {gap}")
    return _floor(math.log(d) / (5.0 * gap))


def alignment_limit(lam: float) -> float:
    """Limiting overlap modulus between the planted vector and the top eigenvector."""
    if lam <= 1:
        raise SubcriticalSpike(f"no alignment below the threshold: lambda={lam}")
    return math.sqrt(lam * lam - 1.0) / lam


@dataclass(frozen=True)
class SeriesCapCheck:
    lhs: float
    rhs: float
    lhs2: float
    rhs2: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs and self.lhs2 <= self.rhs2


def lemma_d2_check(lam: float, k_max: int = 1000) -> SeriesCapCheck:
    """Brute-force maxima of lam^{-4k}(k+1) over 0<=k<=k_max and of
    lam^{-4k} ln(1+k) over 1<=k<=k_max, next to their closed-form caps
    1 + 1/(4e ln lam) and 1/(4e ln lam).  Terms are evaluated in log space.
    """
    if lam <= 1:
        raise SubcriticalSpike(f"lambda must exceed 1, got {lam}")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    log_lam = math.log(lam)
    k = np.arange(0, int(k_max) + 1, dtype=float)
    lhs = float(np.max(np.exp(-4.0 * k * log_lam + np.log1p(k))))
    k1 = k[1:]
    lhs2 = float(np.max(np.exp(-4.0 * k1 * log_lam + np.log(np.log1p(k1)))))
    cap = 1.0 / (4.0 * math.e * log_lam)
    return SeriesCapCheck(lhs=lhs, rhs=1.0 + cap, lhs2=lhs2, rhs2=cap)


def two_side_target(lam: float) -> float:
    """Overlap level (lam-1)/4 that cannot be reached within the two-side budget."""
    if lam <= 1:
        raise SubcriticalSpike(f"lambda must exceed 1, got {lam}")
    return (lam - 1.0) / 4.0
