"""Cohort statistics: two-proportion z-tests for admission-type labeling
and the target-year selection policy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTestError


def normal_cdf(z: float) -> float:
    """Standard normal CDF via erfc; accurate to ~1e-15 in both tails."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class ProportionTest:
    k1: int
    N1: int
    k2: int
    N2: int
    P1: float
    P2: float
    pooled_p: float
    pooled_q: float
    sigma: float
    z: float
    p_value: float


def proportion_ztest(k1: int, N1: int, k2: int, N2: int) -> ProportionTest:
    """One-sided two-proportion z-test of P1 > P2 under a pooled null.

    The p-value is the upper tail 1 - Phi(z): small values support the
    first population having the higher incidence.
    """
    if N1 < 1 or N2 < 1:
        raise ValueError("population sizes must be at least 1")
    if not (0 <= k1 <= N1) or not (0 <= k2 <= N2):
        raise ValueError("counts must satisfy 0 <= k <= N")
    P1 = k1 / N1
    P2 = k2 / N2
    pooled = (N1 * P1 + N2 * P2) / (N1 + N2)
    q = 1.0 - pooled
    if pooled <= 0.0 or pooled >= 1.0:
        raise DegenerateTestError(
            f"pooled proportion {pooled} admits no variance; test is degenerate")
    sigma = math.sqrt(pooled * q * (1.0 / N1 + 1.0 / N2))
    z = (P1 - P2) / sigma
    return ProportionTest(k1=k1, N1=N1, k2=k2, N2=N2, P1=P1, P2=P2,
                          pooled_p=pooled, pooled_q=q, sigma=sigma, z=z,
                          p_value=1.0 - normal_cdf(z))


@dataclass(frozen=True)
class TypeTestResult:
    type_id: str
    k1: int
    k2: int
    z: float
    p_value: float
    flagged: bool


DEFAULT_ALPHA = 0.0001


def flag_admission_types(counts, N1: int, N2: int,
                         alpha: float = DEFAULT_ALPHA) -> list[TypeTestResult]:
    """Test every admission type and flag those with p-value <= alpha.

    `counts` maps type id -> (k1, k2). Results come back in ascending
    p-value order. Types whose pooled proportion is degenerate (all or no
    admissions of that type) cannot be tested and are reported with
    p-value 1 and never flagged.
    """
    if N1 < 1 or N2 < 1:
        raise ValueError("population sizes must be positive")
    items = counts.items() if hasattr(counts, "items") else counts
    results = []
    for type_id, (k1, k2) in items:
        try:
            t = proportion_ztest(k1, N1, k2, N2)
            z, p = t.z, t.p_value
        except DegenerateTestError:
            z, p = 0.0, 1.0
        results.append(TypeTestResult(type_id=str(type_id), k1=int(k1), k2=int(k2),
                                      z=z, p_value=p, flagged=p <= alpha))
    results.sort(key=lambda r: (r.p_value, r.type_id))
    return results


def cumulative_flagged_fraction(results: list[TypeTestResult],
                                N1: int) -> list[tuple[str, float]]:
    """Running fraction of first-population admissions covered as types are
    flagged in ascending p-value order.

    A diagnostic, not an override: callers can check that the flagged set
    would label enough of the cohort before committing to a threshold.
    """
    if N1 < 1:
        raise ValueError("population size must be positive")
    running = 0
    out = []
    for r in sorted(results, key=lambda r: (r.p_value, r.type_id)):
        if not r.flagged:
            continue
        running += r.k1
        out.append((r.type_id, running / N1))
    return out


def select_target_year(hospitalization_years, year_range: tuple[int, int],
                       seed: int) -> int:
    """Pick the year in which to predict, given known hospitalization years.

    No hospitalizations: the last year of the range (maximizing available
    history). Exactly one: that year. Several: uniform over the inclusive
    span between the first and the last, deterministic per seed.
    """
    first, last = year_range
    years = sorted(set(int(y) for y in hospitalization_years))
    if any(y < first or y > last for y in years):
        raise ValueError(f"hospitalization years {years} outside range {year_range}")
    if not years:
        return last
    if len(years) == 1:
        return years[0]
    rng = np.random.default_rng(seed)
    return int(rng.integers(years[0], years[-1] + 1))
