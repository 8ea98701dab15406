"""Waiting-time statistics of the repeater chain.

A segment succeeds on a geometrically distributed attempt (support k >= 1).
The wait of a finished segment for its neighbour is the absolute difference
of two such variables; sums of these differences and their exponential
average govern memory decay over the whole chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MAX_PMF_LEN = 5_000_000


def _check_p(p: float) -> float:
    if not (0.0 < p <= 1.0):
        raise ValueError(f"success probability must lie in (0, 1], got {p}")
    return 1.0 - p


def geom_abs_diff_pmf(k: int, p: float) -> float:
    """P(|N1 - N2| = k) for two independent geometric variables.

    Equals p^2/(1-q^2) at k = 0 and 2 p^2 q^k/(1-q^2) for k >= 1.
    """
    q = _check_p(p)
    if k < 0:
        raise ValueError("k must be a non-negative integer")
    if p == 1.0:
        return 1.0 if k == 0 else 0.0
    base = p * p / (1.0 - q * q)
    return base if k == 0 else 2.0 * base * q**k


def geom_abs_diff_mean(p: float) -> float:
    """E(|N1 - N2|) = 2q/(1-q^2)."""
    q = _check_p(p)
    return 2.0 * q / (1.0 - q * q)


@dataclass(frozen=True)
class WaitingTimePmf:
    """Tabulated waiting-time distribution, truncated at a tail-mass target."""

    p: float
    steps: np.ndarray       # integer k values, 0..K
    weights: np.ndarray     # P(wait = k)
    tail_mass: float

    def __len__(self) -> int:
        return len(self.steps)


def waiting_pmf_table(p: float, tail: float = 1e-12,
                      max_len: int = _MAX_PMF_LEN) -> WaitingTimePmf:
    """Tabulate geom_abs_diff_pmf until the untabulated tail is below ``tail``.

    The tail after K entries is 2 p^2 q^K / ((1-q^2)(1-q)), which fixes the
    required length directly instead of looping.
    """
    q = _check_p(p)
    if p == 1.0:
        return WaitingTimePmf(p, np.array([0]), np.array([1.0]), 0.0)
    base = p * p / (1.0 - q * q)
    # smallest K with remaining mass <= tail
    need = math.log(tail * (1.0 - q) / (2.0 * base * q)) / math.log(q)
    K = min(max(int(math.ceil(need)) + 1, 2), max_len)
    ks = np.arange(K)
    weights = np.empty(K)
    weights[0] = base
    weights[1:] = 2.0 * base * np.exp(np.log(q) * ks[1:])
    tail_mass = 2.0 * base * q**K / (1.0 - q)
    return WaitingTimePmf(p, ks, weights, float(tail_mass))


def sum_waiting_pmf(j: int, m: int, p: float) -> float:
    """P(S = j) for a sum of ``m`` independent |N1 - N2| variables.

    Binomial counts are computed exactly with integer arithmetic; the
    geometric prefactors are applied in log space, so the result stays
    accurate for large j where a direct product would underflow.
    """
    q = _check_p(p)
    if m < 1:
        raise ValueError("summand count m must be >= 1")
    if j < 0:
        raise ValueError("j must be a non-negative integer")
    if p == 1.0:
        return 1.0 if j == 0 else 0.0
    log_base = math.log(p * p / (1.0 - q * q))
    if j == 0:
        return math.exp(m * log_base)
    count = sum(2**i * math.comb(m, i) * math.comb(j - 1, i - 1)
                for i in range(1, m + 1))
    return math.exp(m * log_base + j * math.log(q) + math.log(count))


def exp_dephasing_mean(n: int, p: float, alpha: float) -> float:
    """E(exp(-alpha * D_n)) with D_n the summed per-station waits of an n-segment chain.

    Treats the n-1 station waits as independent, which is an approximation;
    the chain simulation provides the dependence-aware check.
    """
    q = _check_p(p)
    if n < 1:
        raise ValueError("segment count n must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if n == 1:
        return 1.0
    e = math.exp(-alpha)
    per_edge = (p * p / (1.0 - q * q)) * (1.0 + q * e) / (1.0 - q * e)
    return per_edge ** (n - 1)


def avg_total_steps(n: int, p: float) -> float:
    """Mean number of time steps until all n segments have succeeded.

    This is the expectation of the maximum of n geometric variables.  The
    alternating binomial form loses precision catastrophically for large n,
    so beyond n = 30 the tail sum over P(max > k) is used instead.
    """
    q = _check_p(p)
    if n < 1:
        raise ValueError("segment count n must be >= 1")
    if p == 1.0:
        return 1.0
    if n <= 30:
        return sum((-1) ** (i + 1) * math.comb(n, i) / (1.0 - q**i)
                   for i in range(1, n + 1))
    return _avg_total_steps_tail(n, q)


def _avg_total_steps_tail(n: int, q: float) -> float:
    # sum_{k>=0} (1 - (1-q^k)^n), evaluated blockwise; k = 0 term is exactly 1
    log_q = math.log(q)
    total = 1.0
    k0 = 1
    block = 65536
    while True:
        ks = np.arange(k0, k0 + block)
        terms = -np.expm1(n * np.log1p(-np.exp(log_q * ks)))
        total += float(terms.sum())
        if terms[-1] < 1e-18 * total:
            break
        k0 += block
    return total
