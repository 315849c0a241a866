"""Finite-sample guarantee calculators.

All logarithms are natural: every bound carries the constant e inside the
log, which is only dimensionally consistent in base e.
"""

from __future__ import annotations

import math

_OVERFLOW_CAP = 2 ** 63 - 1


def sample_size_rhs(n: int, Q: int, D: int, epsilon: float, delta: float) -> float:
    """Right-hand side of the sample-complexity inequality at sample size n."""
    return (8.0 / epsilon ** 2) * (
        math.log(2.0 / delta)
        + (Q + 1) * math.log(2.0 * math.e * n / (Q + 1))
        + Q * math.log(math.e * D / Q)
    )


def min_sample_size(Q: int, D: int, epsilon: float, delta: float) -> int:
    """Smallest integer N from which N >= sample_size_rhs(N) holds onward.

    The bound has N on both sides; because the right side grows only
    logarithmically, the deficit N - rhs(N) is decreasing up to
    n0 = 8(Q+1)/eps^2 and increasing afterwards, so the last zero crossing
    is bracketed on the increasing branch and found by bisection. If even
    the deficit's minimum is nonnegative, every N qualifies and 1 is
    returned.
    """
    if not (1 <= Q <= D):
        raise ValueError(f"need 1 <= Q <= D, got Q={Q}, D={D}")
    if not (0 < epsilon) or not (0 < delta < 1):
        raise ValueError("epsilon must be positive and delta in (0,1)")

    def deficit(n):
        return n - sample_size_rhs(n, Q, D, epsilon, delta)

    n_dip = max(1, math.ceil(8.0 * (Q + 1) / epsilon ** 2))
    if deficit(n_dip) >= 0 and deficit(max(1, n_dip - 1)) >= 0:
        return 1
    lo = n_dip
    hi = max(2 * n_dip, 2)
    while deficit(hi) < 0:
        hi *= 2
        if hi > _OVERFLOW_CAP:
            raise OverflowError("no satisfying sample size below 2**63 - 1")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if deficit(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def vc_bound(L: int, D: int) -> float:
    """Capacity bound (L+1) L (D+1) log(e L (L+1) / 2) for the family of
    L-cluster routed linear classifiers."""
    if L < 1 or D < 1:
        raise ValueError(f"need L >= 1 and D >= 1, got L={L}, D={D}")
    return (L + 1) * L * (D + 1) * math.log(math.e * (L + 1) * L / 2.0)


def generalization_gap(N: int, V: float, rho_conf: float) -> float:
    """Additive bound on test-minus-training error rate holding with
    probability at least 1 - rho_conf.

    Vacuous (possibly > 1) when N is not well above V; returned anyway.
    """
    if N < 1 or V <= 0:
        raise ValueError(f"need N >= 1 and V > 0, got N={N}, V={V}")
    if not (0 < rho_conf < 1):
        raise ValueError(f"rho_conf must be in (0,1), got {rho_conf}")
    inner = V * math.log(2.0 * math.e * N / V) + math.log(2.0 / rho_conf)
    if inner < 0:
        # so far below the intended N > V regime that the expression leaves
        # the reals; no finite bound exists
        return math.inf
    return 2.0 * math.sqrt(2.0 * inner / N)
