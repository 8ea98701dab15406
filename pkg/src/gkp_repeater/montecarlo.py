"""Numerical rate evaluation: discrete-time chain simulation and pmf averaging.

The simulation draws one completion time per segment, books the waiting
variance at every swap exactly as the amplification strategy prescribes,
and estimates the chain error rate by sampling error parities.  Every trial
owns a counter-based random stream keyed by (seed, trial index), so results
are bit-identical no matter how trials are scheduled across workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import amplify, gkpcode, rates, stats
from .model import (
    AmplificationStrategy,
    DEFAULT_CONSTANTS,
    PhysicalConstants,
    RepeaterConfig,
    derive,
)


@dataclass(frozen=True)
class SummaryStats:
    count: int
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class SimulationStats:
    trials: int
    inner_iterations: int
    seed: int
    qber_mean: float
    qber_stderr: float
    mean_completion_steps: float
    completion_stderr: float
    per_swap_variance_samples: SummaryStats


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    bg = np.random.Philox(key=np.array([seed & 0xFFFFFFFFFFFFFFFF, trial],
                                       dtype=np.uint64))
    return np.random.Generator(bg)


def trial_qber_estimate(waits: np.ndarray, uniforms: np.ndarray,
                        strategy: AmplificationStrategy, T: int, alpha: float,
                        delta_sq: float, gamma_sq: float) -> tuple[float, np.ndarray]:
    """Estimate one trial's QBER from station waits and presampled uniforms.

    Pure function of its inputs; invariant under any common permutation of
    the stations, which is what makes the swap ordering immaterial.
    """
    sig_add = amplify.added_variance_batch(strategy, waits, T, alpha)
    p_swap = np.minimum(
        gkpcode.pauli_error_prob(2.0 * delta_sq + gamma_sq + sig_add), 0.5)
    if len(waits) == 0:
        return 0.0, sig_add
    parities = (uniforms < p_swap).sum(axis=1) & 1
    return float(parities.mean()), sig_add


def simulate_chain(config: RepeaterConfig, trials: int = 5000,
                   inner_iterations: int = 1000, seed: int = 0,
                   workers: int = 1,
                   constants: PhysicalConstants = DEFAULT_CONSTANTS) -> SimulationStats:
    """Simulate ``trials`` end-to-end distribution rounds of the chain.

    Per trial: each segment succeeds after a geometric number of steps; every
    station swaps as soon as both neighbours are ready, adding the variance
    implied by the realized wait.  The trial QBER is the parity-sampling
    average over ``inner_iterations`` repetitions.
    """
    if trials < 1 or inner_iterations < 1:
        raise ValueError("trials and inner_iterations must be >= 1")
    derived = derive(config, constants)
    strategy = amplify.resolve_strategy(
        config.strategy, derived.L0, config.p_link, config.t_coh, constants)

    qber_by_trial = np.empty(trials)
    completion_by_trial = np.empty(trials)
    # per-trial partials keep the final reduction independent of chunking
    sig_sum = np.empty(trials)
    sig_sq = np.empty(trials)
    sig_min = np.empty(trials)
    sig_max = np.empty(trials)

    chunks = _chunks(trials, max(1, workers))
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                _run_chunk,
                *zip(*[(config, derived, strategy, lo, hi, inner_iterations, seed)
                       for lo, hi in chunks])))
    else:
        results = [_run_chunk(config, derived, strategy, lo, hi, inner_iterations, seed)
                   for lo, hi in chunks]
    for (lo, hi), out in zip(chunks, results):
        qber_by_trial[lo:hi] = out[0]
        completion_by_trial[lo:hi] = out[1]
        sig_sum[lo:hi] = out[2]
        sig_sq[lo:hi] = out[3]
        sig_min[lo:hi] = out[4]
        sig_max[lo:hi] = out[5]

    swaps = config.n - 1
    if swaps:
        count = trials * swaps
        mean = float(sig_sum.sum()) / count
        var = max(float(sig_sq.sum()) / count - mean * mean, 0.0)
        summary = SummaryStats(count, mean, math.sqrt(var),
                               float(sig_min.min()), float(sig_max.max()))
    else:
        summary = SummaryStats(0, math.nan, math.nan, math.nan, math.nan)

    def stderr(a: np.ndarray) -> float:
        if trials < 2:
            return math.nan
        return float(a.std(ddof=1) / math.sqrt(trials))

    return SimulationStats(
        trials=trials, inner_iterations=inner_iterations, seed=seed,
        qber_mean=float(qber_by_trial.mean()), qber_stderr=stderr(qber_by_trial),
        mean_completion_steps=float(completion_by_trial.mean()),
        completion_stderr=stderr(completion_by_trial),
        per_swap_variance_samples=summary,
    )


def _chunks(total: int, parts: int) -> list[tuple[int, int]]:
    size = math.ceil(total / parts)
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def _run_chunk(config, derived, strategy, lo, hi, inner_iterations, seed):
    n = config.n
    size = hi - lo
    qbers = np.empty(size)
    comps = np.empty(size)
    s_sum = np.zeros(size)
    s_sq = np.zeros(size)
    s_min = np.full(size, math.inf)
    s_max = np.full(size, -math.inf)
    for trial in range(lo, hi):
        rng = _trial_rng(seed, trial)
        finish = rng.geometric(derived.p, size=n)
        i = trial - lo
        comps[i] = finish.max()
        waits = np.abs(np.diff(finish))
        uniforms = rng.random((inner_iterations, n - 1)) if n > 1 else np.empty((0, 0))
        q, sig_add = trial_qber_estimate(
            waits, uniforms, strategy, derived.T, derived.alpha,
            config.delta_sq, config.gamma_sq)
        qbers[i] = q
        if sig_add.size:
            s_sum[i] = float(sig_add.sum())
            s_sq[i] = float((sig_add * sig_add).sum())
            s_min[i] = float(sig_add.min())
            s_max[i] = float(sig_add.max())
    return qbers, comps, s_sum, s_sq, s_min, s_max


def numeric_average_qber(config: RepeaterConfig, truncation: int = 50000,
                         constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Chain QBER with the per-swap flip probability averaged over the wait pmf.

    Unlike the analytic pipeline this averages p(sigma^2(k)) term by term
    before the parity accumulation, removing the mean-variance approximation.
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    derived = derive(config, constants)
    if config.n < 2:
        return 0.0
    strategy = amplify.resolve_strategy(
        config.strategy, derived.L0, config.p_link, config.t_coh, constants)
    ks = np.arange(truncation, dtype=float)
    q = derived.q
    if q == 0.0:
        weights = np.zeros(truncation)
        weights[0] = 1.0
    else:
        base = derived.p * derived.p / (1.0 - q * q)
        log_w = math.log(2.0 * base) + ks * math.log(q)
        log_w[0] = math.log(base)
        weights = np.exp(log_w)
    tail = max(1.0 - float(weights.sum()), 0.0)
    if tail > 1e-9:
        warnings.warn(f"waiting-pmf truncation leaves tail mass {tail:.3e}",
                      RuntimeWarning, stacklevel=2)
    sig_add = amplify.added_variance_batch(strategy, ks, derived.T, derived.alpha)
    p_swap = gkpcode.pauli_error_prob(
        2.0 * config.delta_sq + config.gamma_sq + sig_add)
    p_avg = float(np.dot(weights, p_swap))
    return gkpcode.qber(config.n, min(p_avg, 0.5))


def numeric_average_rate(config: RepeaterConfig, truncation: int = 50000,
                         constants: PhysicalConstants = DEFAULT_CONSTANTS) -> rates.RateResult:
    """Rate pipeline with the numerically averaged QBER in place of the analytic one."""
    derived = derive(config, constants)
    qv = numeric_average_qber(config, truncation, constants)
    r = rates.secret_fraction(qv)
    R = 1.0 / stats.avg_total_steps(config.n, derived.p)
    S = r * R
    return rates.RateResult(
        p=derived.p, sigma_tot_sq=math.nan, p_pauli=math.nan, qber=qv,
        r=r, R=R, S=S, S_hz=S * constants.c_fiber * config.n / config.L,
        n=config.n, L=config.L, strategy=None)


@dataclass(frozen=True)
class MethodComparison:
    L: float
    S_analytic: float
    S_numeric: float
    S_simulated: float
    stderr: float


def simulated_rate(config: RepeaterConfig, sim: SimulationStats,
                   constants: PhysicalConstants = DEFAULT_CONSTANTS) -> tuple[float, float]:
    """Secret key per step from simulation output, with a delta-method stderr."""
    r = rates.secret_fraction(sim.qber_mean)
    K = sim.mean_completion_steps
    S = r / K
    # dr/dq = -2 log2((1-q)/q); both error sources are independent
    if 0.0 < sim.qber_mean < 0.5 and r > 0.0:
        drdq = -2.0 * math.log2((1.0 - sim.qber_mean) / sim.qber_mean)
    else:
        drdq = 0.0
    var = (drdq * sim.qber_stderr / K) ** 2 + (r / (K * K) * sim.completion_stderr) ** 2
    return S, math.sqrt(var)


def compare_methods(config: RepeaterConfig, L_grid, trials: int = 5000,
                    inner_iterations: int = 1000, seed: int = 0, workers: int = 1,
                    constants: PhysicalConstants = DEFAULT_CONSTANTS) -> list[MethodComparison]:
    """Evaluate the analytic, pmf-averaged and simulated rates on an L grid."""
    grid = [float(L) for L in L_grid]
    if not grid:
        raise ValueError("L_grid must be non-empty")
    out = []
    for i, L in enumerate(grid):
        cfg = replace(config, L=L)
        ana = rates.analytic_rate(cfg, constants)
        num = numeric_average_rate(cfg, constants=constants)
        sim = simulate_chain(cfg, trials, inner_iterations, seed + i, workers, constants)
        S_sim, err = simulated_rate(cfg, sim, constants)
        out.append(MethodComparison(L, ana.S, num.S, S_sim, err))
    return out
