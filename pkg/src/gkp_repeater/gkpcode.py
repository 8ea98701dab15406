"""Error model of the grid-encoded qubits under Gaussian shift noise.

A shift is decoded modulo sqrt(pi); a logical flip occurs when the true
shift lands an odd number of sqrt(pi) stripes away from the origin.  This
module maps shift variances to flip probabilities, accumulates them into a
chain error rate, and inverts the relation into noise thresholds.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc

SQRT_PI = math.sqrt(math.pi)
HALF_STRIPE = SQRT_PI / 2.0
QBER_THRESHOLD = 0.11  # largest error rate with a non-zero secret fraction

_GAMMA_BISECT_TOL = 1e-6
_GAMMA_BRACKET_HI = 1.0


def pauli_error_prob(sigma_tot_sq, model: str = "simplified"):
    """Probability that a Gaussian shift of variance ``sigma_tot_sq`` flips the qubit.

    ``simplified`` counts all mass outside the central stripe and is accurate
    whenever the error rate is small; ``striped`` sums only the odd stripes
    and saturates at 1/2 for very large variance.  Accepts scalars or arrays.
    """
    s2 = np.asarray(sigma_tot_sq, dtype=float)
    if np.any(s2 <= 0):
        raise ValueError("sigma_tot_sq must be > 0")
    sigma = np.sqrt(s2)
    if model == "simplified":
        out = erfc(HALF_STRIPE / (sigma * math.sqrt(2.0)))
    elif model == "striped":
        out = _striped_prob(sigma)
    else:
        raise ValueError(f"model must be 'simplified' or 'striped', got {model!r}")
    if np.isscalar(sigma_tot_sq):
        return float(out)
    return out


def _striped_prob(sigma) -> np.ndarray:
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    out = np.empty_like(sig)
    for i, s in enumerate(sig):
        k_max = max(int(math.ceil((9.0 * s / SQRT_PI - 0.5) / 2.0)) + 1, 1)
        centers = (2.0 * np.arange(k_max + 1) + 1.0) * SQRT_PI
        lo = (centers - HALF_STRIPE) / (s * math.sqrt(2.0))
        hi = (centers + HALF_STRIPE) / (s * math.sqrt(2.0))
        # both stripe edges are positive, so the erfc difference keeps precision
        out[i] = float(np.sum(erfc(lo) - erfc(hi)))
    return out.reshape(np.shape(sigma))


def qber(n: int, p_pauli) -> float:
    """Chain error rate after n-1 swaps: odd numbers of flips survive."""
    if n < 1:
        raise ValueError("segment count n must be >= 1")
    pp = np.asarray(p_pauli, dtype=float)
    if np.any((pp < 0) | (pp > 0.5)):
        raise ValueError("p_pauli must lie in [0, 1/2]")
    out = 0.5 * (1.0 - (1.0 - 2.0 * pp) ** (n - 1))
    return float(out) if np.isscalar(p_pauli) else out


def pauli_threshold(n: int, qber_threshold: float = QBER_THRESHOLD) -> float:
    """Largest per-swap flip probability with a non-vanishing secret fraction.

    Inverts the chain error rate at the threshold; with the default 0.11
    this is (1 - 0.78^(1/(n-1)))/2, which tends to zero for long chains.
    """
    if n < 2:
        raise ValueError("threshold needs at least one swap (n >= 2)")
    return 0.5 * (1.0 - (1.0 - 2.0 * qber_threshold) ** (1.0 / (n - 1)))


def gamma_threshold(n: int, delta_sq: float) -> float:
    """Largest per-swap operation noise gamma^2 with a non-zero rate.

    Evaluated in the perfect-memory limit where the total variance is
    2*delta_sq + gamma^2.  Solved by bisection to 1e-6; returns 0 when the
    squeezing alone already exceeds the threshold.
    """
    if delta_sq <= 0:
        raise ValueError("delta_sq must be > 0")
    target = pauli_threshold(n)
    if pauli_error_prob(2.0 * delta_sq) >= target:
        return 0.0
    lo, hi = 0.0, _GAMMA_BRACKET_HI
    while hi - lo > _GAMMA_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if pauli_error_prob(2.0 * delta_sq + mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hp_min_variance(n_atoms: int, theta_max: float) -> float:
    """Smallest single-peak variance supported by an ensemble of ``n_atoms`` spins.

    The bosonic phase space of a collective spin is only valid within a polar
    angle ``theta_max`` of full polarization, bounding the envelope width and
    hence the peak variance from below by 1/(N theta_max^2).
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if theta_max <= 0:
        raise ValueError("theta_max must be > 0")
    return 1.0 / (n_atoms * theta_max * theta_max)


def averaging_error_estimate(delta_sq: float, p: float, alpha: float) -> float:
    """Second-order error of replacing the waiting variance by its mean.

    Half the second derivative of the flip probability at 2*delta_sq times
    the variance of the per-step preamplification shift variance.  Small
    values justify the analytic pipeline; see the numeric-averaging method
    for the direct check.
    """
    if delta_sq <= 0:
        raise ValueError("delta_sq must be > 0")
    if not (0.0 < p <= 1.0):
        raise ValueError(f"success probability must lie in (0, 1], got {p}")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    q = 1.0 - p
    s2 = 2.0 * delta_sq
    sigma = math.sqrt(s2)
    second = (1.0 / math.sqrt(8.0)) * math.exp(-math.pi / (8.0 * s2)) * (
        math.pi / (8.0 * sigma**7) - 1.5 / sigma**5)
    step_loss = -math.expm1(-alpha)
    var_wait = 2.0 * q / (1.0 - q) ** 2 - 4.0 * q * q / (1.0 - q * q) ** 2
    return 0.5 * second * step_loss * step_loss * var_wait
