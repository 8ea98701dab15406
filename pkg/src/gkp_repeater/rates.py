"""Analytic secret-key-rate pipeline, repeaterless benchmark, chain-length optimizer."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

from . import amplify, gkpcode, stats
from .model import (
    AmplificationStrategy,
    DEFAULT_CONSTANTS,
    DerivedParams,
    PhysicalConstants,
    RepeaterConfig,
    derive,
)


@dataclass(frozen=True)
class RateResult:
    """Full breakdown of one rate evaluation.

    ``R`` and ``S`` are per time step; ``S_hz`` converts to bits per second
    through the step duration.  Loss-corrected runs fill ``sigma_tot_sq`` and
    ``p_pauli``; the correctionless baseline reports NaN there because its
    error model never forms a shift variance.
    """

    p: float
    sigma_tot_sq: float
    p_pauli: float
    qber: float
    r: float
    R: float
    S: float
    S_hz: float
    n: int
    L: float
    strategy: AmplificationStrategy | None = None


def binary_entropy(x: float) -> float:
    """Binary entropy in bits, with h(0) = h(1) = 0 by continuity."""
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def secret_fraction(qber: float) -> float:
    """Asymptotic BB84 fraction 1 - 2 h(QBER), clipped at zero."""
    return max(0.0, 1.0 - 2.0 * binary_entropy(qber))


def plob_bound(L: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Repeaterless upper bound -log2(1 - e^(-L/L_att)) in bits per channel use."""
    if L <= 0:
        raise ValueError("L must be > 0 km")
    return -math.log2(-math.expm1(-L / constants.L_att))


def _assemble(config: RepeaterConfig, derived: DerivedParams, qber_value: float,
              sigma_tot_sq: float, p_pauli: float,
              strategy: AmplificationStrategy | None,
              constants: PhysicalConstants) -> RateResult:
    r = secret_fraction(qber_value)
    R = 1.0 / stats.avg_total_steps(config.n, derived.p)
    S = r * R
    return RateResult(
        p=derived.p, sigma_tot_sq=sigma_tot_sq, p_pauli=p_pauli,
        qber=qber_value, r=r, R=R, S=S,
        S_hz=S * constants.c_fiber * config.n / config.L,
        n=config.n, L=config.L, strategy=strategy,
    )


def analytic_rate(config: RepeaterConfig,
                  constants: PhysicalConstants = DEFAULT_CONSTANTS) -> RateResult:
    """Closed-form rate: mean added variance -> flip probability -> chain QBER.

    The per-swap variance budget is 2*delta_sq + gamma_sq plus the expected
    added variance of the resolved amplification strategy.
    """
    derived = derive(config, constants)
    strategy = amplify.resolve_strategy(
        config.strategy, derived.L0, config.p_link, config.t_coh, constants)
    if config.n >= 2:
        e_add = amplify.expected_added_variance(strategy, derived.p, derived.alpha)
        sigma_tot_sq = 2.0 * config.delta_sq + config.gamma_sq + e_add
        # the simplified integral can exceed the true flip ceiling of 1/2
        # deep in the dead zone; cap it there
        p_pauli = min(gkpcode.pauli_error_prob(sigma_tot_sq), 0.5)
        qber_value = gkpcode.qber(config.n, p_pauli)
    else:
        # single segment: no swap, no syndrome decoding errors
        sigma_tot_sq = 2.0 * config.delta_sq
        p_pauli = 0.0
        qber_value = 0.0
    return _assemble(config, derived, qber_value, sigma_tot_sq, p_pauli,
                     strategy, constants)


NoiseMapping = Callable[[int, float, float, float], float]
"""Maps (n, mu, alpha, dephasing_mean) to the baseline QBER."""


def depolarizing_mapping(n: int, mu: float, alpha: float,
                         dephasing_mean: float) -> float:
    """Default correctionless QBER: (1 - mu^n * E(e^(-alpha D_n)) * m(n, alpha))/2.

    The factor m = exp(-2 alpha (n-1)) charges every intermediate memory the
    one mandatory step of photon travel plus heralding.  This mapping is a
    modeling choice: the exact exponent of mu in the reference scheme is not
    fixed here, so it is kept pluggable.
    """
    minimal = math.exp(-2.0 * alpha * (n - 1))
    return 0.5 * (1.0 - mu**n * dephasing_mean * minimal)


def correctionless_rate(config: RepeaterConfig, mu: float = 1.0,
                        mapping: NoiseMapping = depolarizing_mapping,
                        constants: PhysicalConstants = DEFAULT_CONSTANTS) -> RateResult:
    """Baseline rate of a chain whose memories decay without error correction."""
    if not (0.0 < mu <= 1.0):
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    derived = derive(config, constants)
    deph = stats.exp_dephasing_mean(config.n, derived.p, derived.alpha)
    qber_value = min(max(mapping(config.n, mu, derived.alpha, deph), 0.0), 0.5)
    return _assemble(config, derived, qber_value, math.nan, math.nan,
                     None, constants)


@dataclass(frozen=True)
class OptimizeResult:
    n_star: int
    best: RateResult
    all_zero: bool


def optimize_n(L: float, template: RepeaterConfig, n_range,
               metric: str = "per_step",
               constants: PhysicalConstants = DEFAULT_CONSTANTS) -> OptimizeResult:
    """Pick the segment count maximizing the secret key over ``n_range``.

    ``per_step`` maximizes the key per time step, ``per_second`` the key per
    second (these disagree because the step duration shrinks as 1/n).  Ties
    break toward the smallest n; if the rate vanishes everywhere the result
    carries the first n with the ``all_zero`` flag set.
    """
    ns = sorted(int(n) for n in n_range)
    if not ns:
        raise ValueError("n_range must be non-empty")
    if metric not in ("per_step", "per_second"):
        raise ValueError(f"metric must be 'per_step' or 'per_second', got {metric!r}")
    key = (lambda res: res.S) if metric == "per_step" else (lambda res: res.S_hz)
    best_n, best_res = None, None
    for n in ns:
        res = analytic_rate(replace(template, L=L, n=n), constants)
        if best_res is None or key(res) > key(best_res):
            best_n, best_res = n, res
    if key(best_res) == 0.0:
        first = min(ns)
        return OptimizeResult(first, analytic_rate(replace(template, L=L, n=first),
                                                   constants), True)
    return OptimizeResult(best_n, best_res, False)
