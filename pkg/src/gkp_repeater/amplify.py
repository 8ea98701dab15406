"""Loss-to-shift conversion strategies and their variance budgets.

A mode that waits ``t_wait`` steps in memory accrues loss; amplification
turns that loss into an additive Gaussian shift whose variance depends on
the chosen strategy.  This module evaluates the per-realization variances,
their expectations over the waiting-time distribution, and the segment
length below which classical-computer amplification beats per-step
preamplification.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .model import (
    AmplificationStrategy,
    DEFAULT_CONSTANTS,
    PhysicalConstants,
    mean_wait_steps,
)
from .stats import waiting_pmf_table

Strategy = AmplificationStrategy

THRESHOLD_BRACKET_KM = (0.1, 500.0)
THRESHOLD_RESOLUTION_KM = 0.05


class SeriesDivergenceError(ArithmeticError):
    """The CC variance expectation diverges because q >= exp(-alpha)."""


def added_variance(strategy: Strategy, t_wait: int, T: int, alpha: float) -> float:
    """Shift variance added by one swap whose earlier mode waited ``t_wait`` steps.

    ``T`` is the rounded mean waiting time, used by the mean-adjusted
    strategies; ``alpha`` the dimensionless per-step decay constant.
    """
    if t_wait < 0:
        raise ValueError("t_wait must be a non-negative integer")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if T < 0:
        raise ValueError("T must be a non-negative integer")
    return float(added_variance_batch(strategy, np.asarray([t_wait]), T, alpha)[0])


def added_variance_batch(strategy: Strategy, t_wait: np.ndarray, T: int,
                         alpha: float) -> np.ndarray:
    """Vectorized :func:`added_variance` over an integer array of waits."""
    t = np.asarray(t_wait, dtype=float)
    step_loss = -math.expm1(-alpha)  # 1 - e^-alpha
    if strategy is Strategy.PER_STEP_PREAMP:
        return (t + 2.0) * step_loss
    if strategy is Strategy.MEAN_ADJUSTED:
        hold = 2.0 - math.exp(-(T + 1) * alpha) - np.exp(-(T - t + 1.0) * alpha)
        late = 1.0 - math.exp(-(T + 1) * alpha) + (t - T + 1.0) * step_loss
        return np.where(t <= T, hold, late)
    if strategy is Strategy.MEAN_ADJUSTED_ARTIFICIAL_LOSS:
        hold = 2.0 - math.exp(-(T + 1) * alpha) - math.exp(-alpha)
        late = 1.0 - math.exp(-(T + 1) * alpha) + (t - T + 1.0) * step_loss
        return np.where(t <= T, hold, late)
    if strategy is Strategy.CC_AMPLIFICATION:
        return np.expm1((t + 1.0) * alpha)
    raise ValueError(f"strategy {strategy} must be resolved before variance evaluation")


def expected_added_variance(strategy: Strategy, p: float, alpha: float,
                            mode: str = "closed_form", tail: float = 1e-12) -> float:
    """Expectation of :func:`added_variance` over the waiting-time distribution.

    ``closed_form`` evaluates the analytic expressions (valid for the
    per-step, modified mean-adjusted and CC strategies; the CC series
    requires q < exp(-alpha)).  ``numeric`` sums the tabulated pmf against
    the per-realization variance and works for every strategy.
    """
    if not (0.0 < p <= 1.0):
        raise ValueError(f"success probability must lie in (0, 1], got {p}")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    q = 1.0 - p
    T = int(math.floor(mean_wait_steps(p) + 0.5))
    if mode == "closed_form":
        if strategy is Strategy.PER_STEP_PREAMP:
            # exact mean wait here, not the rounded T: the protocol never
            # quantizes, only the mean-adjusted strategies do
            return (mean_wait_steps(p) + 2.0) * alpha
        if strategy is Strategy.MEAN_ADJUSTED_ARTIFICIAL_LOSS:
            return (T + 2.0) * alpha + 2.0 * alpha * q ** (T + 1) / (1.0 - q * q)
        if strategy is Strategy.CC_AMPLIFICATION:
            if q >= math.exp(-alpha):
                raise SeriesDivergenceError(
                    f"CC expectation diverges: q={q:.6g} >= exp(-alpha)={math.exp(-alpha):.6g}")
            ea = math.exp(alpha)
            return (p * p / (1.0 - q * q)) * (
                math.expm1(alpha) + 2.0 * ea * ea * q / (1.0 - q * ea) - 2.0 * q / (1.0 - q))
        if strategy is Strategy.MEAN_ADJUSTED:
            raise ValueError("no closed form for the unmodified mean-adjusted "
                             "strategy; use mode='numeric'")
        raise ValueError(f"strategy {strategy} must be resolved first")
    if mode != "numeric":
        raise ValueError(f"mode must be 'closed_form' or 'numeric', got {mode!r}")
    if strategy is Strategy.CC_AMPLIFICATION and q >= math.exp(-alpha):
        raise SeriesDivergenceError(
            f"CC expectation diverges: q={q:.6g} >= exp(-alpha)={math.exp(-alpha):.6g}")
    pmf = waiting_pmf_table(p, tail=tail)
    values = added_variance_batch(strategy, pmf.steps, T, alpha)
    return float(np.dot(pmf.weights, values))


def _expected_preamp_exact(p: float, alpha: float) -> float:
    # closed sum of the numeric pmf series: E[(t+2)(1-e^-a)] = (E[t]+2)(1-e^-a)
    return (mean_wait_steps(p) + 2.0) * (-math.expm1(-alpha))


def _expected_cc_or_inf(p: float, alpha: float, tail: float = 1e-12) -> float:
    q = 1.0 - p
    if q >= math.exp(-alpha):
        return math.inf
    pmf = waiting_pmf_table(p, tail=tail)
    return float(np.dot(pmf.weights, np.expm1((pmf.steps + 1.0) * alpha)))


def cc_threshold_L0(p_link: float, t_coh: float,
                    constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float | None:
    """Segment length (km) below which CC amplification adds less variance.

    Bisects the sign change of E_cc - E_preamp (numeric-mode expectations)
    inside (0.1 km, 500 km] down to 0.05 km.  Returns None when the two
    strategies do not cross inside the bracket.
    """
    if not (0.0 < p_link <= 1.0):
        raise ValueError(f"p_link must lie in (0, 1], got {p_link}")
    if not (t_coh > 0):
        raise ValueError(f"t_coh must be > 0, got {t_coh}")

    def diff(L0: float) -> float:
        alpha = (L0 / constants.c_fiber) / t_coh
        p = p_link * math.exp(-L0 / constants.L_att)
        return _expected_cc_or_inf(p, alpha) - _expected_preamp_exact(p, alpha)

    lo, hi = THRESHOLD_BRACKET_KM
    if diff(lo) >= 0 or diff(hi) < 0:
        return None
    while hi - lo > THRESHOLD_RESOLUTION_KM:
        mid = 0.5 * (lo + hi)
        if diff(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=256)
def _cached_threshold(p_link: float, t_coh: float, c_fiber: float,
                      L_att: float) -> float | None:
    return cc_threshold_L0(p_link, t_coh, PhysicalConstants(c_fiber, L_att))


def resolve_strategy(strategy: Strategy, L0: float, p_link: float, t_coh: float,
                     constants: PhysicalConstants = DEFAULT_CONSTANTS) -> Strategy:
    """Resolve AUTO to CC below the crossover segment length, preamp otherwise."""
    if strategy is not Strategy.AUTO:
        return strategy
    threshold = _cached_threshold(p_link, t_coh, constants.c_fiber, constants.L_att)
    if threshold is None:
        # no crossing found: fall back to a direct comparison at this L0
        alpha = (L0 / constants.c_fiber) / t_coh
        p = p_link * math.exp(-L0 / constants.L_att)
        if _expected_cc_or_inf(p, alpha) < _expected_preamp_exact(p, alpha):
            return Strategy.CC_AMPLIFICATION
        return Strategy.PER_STEP_PREAMP
    if L0 < threshold:
        return Strategy.CC_AMPLIFICATION
    return Strategy.PER_STEP_PREAMP
