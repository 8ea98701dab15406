import math

import numpy as np
import pytest

from gkp_repeater.stats import (
    avg_total_steps,
    exp_dephasing_mean,
    geom_abs_diff_mean,
    geom_abs_diff_pmf,
    sum_waiting_pmf,
    waiting_pmf_table,
)


def brute_abs_diff_pmf(k: int, p: float, n_max: int = 4000) -> float:
    """Direct enumeration over pairs of truncated geometric variables."""
    q = 1.0 - p
    ns = np.arange(1, n_max + 1, dtype=float)
    pn = p * q ** (ns - 1)
    if k == 0:
        return float(np.sum(pn * pn))
    return float(2.0 * np.sum(pn[k:] * pn[:-k]))


def brute_sum_pmf(m: int, p: float, j_max: int, n_max: int = 4000) -> np.ndarray:
    """m-fold convolution of the single-wait pmf."""
    single = np.array([brute_abs_diff_pmf(k, p, n_max) for k in range(j_max + n_max)])
    acc = single.copy()
    for _ in range(m - 1):
        acc = np.convolve(acc, single)[: len(single)]
    return acc[: j_max + 1]


def test_pmf_deterministic_success():
    assert geom_abs_diff_pmf(0, 1.0) == 1.0
    assert geom_abs_diff_pmf(3, 1.0) == 0.0


def test_pmf_frozen_values():
    assert geom_abs_diff_pmf(0, 0.5) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert geom_abs_diff_pmf(2, 0.5) == pytest.approx(1.0 / 6.0, abs=1e-15)


@pytest.mark.parametrize("p", [0.05, 0.2, 0.5, 0.8, 0.95])
def test_pmf_matches_enumeration(p):
    for k in (0, 1, 2, 5, 20, 100):
        assert geom_abs_diff_pmf(k, p) == pytest.approx(
            brute_abs_diff_pmf(k, p), abs=1e-10)


def test_pmf_rejects_bad_inputs():
    with pytest.raises(ValueError):
        geom_abs_diff_pmf(0, 0.0)
    with pytest.raises(ValueError):
        geom_abs_diff_pmf(-1, 0.5)


def test_mean_values():
    assert geom_abs_diff_mean(1.0) == 0.0
    assert geom_abs_diff_mean(0.5) == pytest.approx(4.0 / 3.0, rel=1e-12)
    assert geom_abs_diff_mean(0.1) == pytest.approx(2 * 0.9 / (1 - 0.81), rel=1e-12)


def test_mean_against_monte_carlo():
    rng = np.random.default_rng(42)
    for p in (0.5, 0.1):
        draws = np.abs(rng.geometric(p, 10**6) - rng.geometric(p, 10**6))
        assert geom_abs_diff_mean(p) == pytest.approx(draws.mean(), rel=3e-3)


def test_sum_pmf_single_summand_consistency():
    for p in (0.1, 0.5, 0.9):
        for j in (0, 1, 7, 40):
            assert sum_waiting_pmf(j, 1, p) == pytest.approx(
                geom_abs_diff_pmf(j, p), rel=1e-12)


def test_sum_pmf_frozen_value():
    assert sum_waiting_pmf(0, 2, 0.5) == pytest.approx(1.0 / 9.0, rel=1e-12)


@pytest.mark.parametrize("p", [0.05, 0.35, 0.65, 0.95])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_sum_pmf_matches_convolution(p, m):
    oracle = brute_sum_pmf(m, p, 200)
    for j in (0, 1, 2, 5, 17, 60, 200):
        assert sum_waiting_pmf(j, m, p) == pytest.approx(oracle[j], abs=1e-10)


def test_sum_pmf_normalizes():
    assert sum(sum_waiting_pmf(j, 3, 0.5) for j in range(201)) == pytest.approx(
        1.0, abs=1e-10)


@pytest.mark.parametrize("p", [0.01, 0.05, 0.2, 0.5, 0.8, 0.99])
@pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 6])
def test_sum_pmf_nonnegative_unit_mass(p, m):
    j_max = int(40 * m / p)
    vals = [sum_waiting_pmf(j, m, p) for j in range(j_max + 1)]
    assert min(vals) >= 0.0
    total = math.fsum(vals)
    assert total <= 1.0 + 1e-12
    assert total >= 1.0 - 1e-8


def test_waiting_table_mass_accounting():
    for p in (0.02, 0.3, 0.9):
        tab = waiting_pmf_table(p)
        assert tab.weights.min() >= 0.0
        assert float(tab.weights.sum()) + tab.tail_mass == pytest.approx(1.0, abs=1e-12)
        assert tab.tail_mass <= 1e-12


def test_dephasing_trivial_cases():
    for n in (1, 3, 9):
        for p in (0.2, 0.7):
            assert exp_dephasing_mean(n, p, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert exp_dephasing_mean(1, 0.4, 0.3) == 1.0


def test_dephasing_monotone_in_alpha_and_n():
    alphas = [0.0, 1e-4, 1e-3, 1e-2, 1e-1]
    vals = [exp_dephasing_mean(4, 0.3, a) for a in alphas]
    assert all(x >= y for x, y in zip(vals, vals[1:]))
    ns = [1, 2, 4, 8, 16]
    vals = [exp_dephasing_mean(n, 0.3, 1e-2) for n in ns]
    assert all(x >= y for x, y in zip(vals, vals[1:]))


def test_dephasing_against_chain_sampling():
    # dependence between neighbouring waits is ignored by the closed form;
    # in this regime the effect is far below the 1% target
    rng = np.random.default_rng(3)
    n, p, alpha = 4, 0.3, 1e-4
    finish = rng.geometric(p, size=(10**6, n))
    d = np.abs(np.diff(finish, axis=1)).sum(axis=1)
    mc = float(np.exp(-alpha * d).mean())
    assert exp_dephasing_mean(n, p, alpha) == pytest.approx(mc, rel=1e-2)


def direct_max_mean(n: int, p: float) -> float:
    """Tail-sum oracle for the mean of the maximum of n geometric variables."""
    q = 1.0 - p
    total, k, term = 0.0, 0, 1.0
    while term > 1e-18:
        term = -math.expm1(n * math.log1p(-(q**k))) if k else 1.0
        total += term
        k += 1
    return total


def test_avg_total_steps_basics():
    assert avg_total_steps(1, 0.25) == pytest.approx(4.0, rel=1e-12)
    assert avg_total_steps(2, 0.5) == pytest.approx(8.0 / 3.0, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
@pytest.mark.parametrize("p", [0.05, 0.3, 0.7, 0.95])
def test_avg_total_steps_matches_direct_sum(n, p):
    assert avg_total_steps(n, p) == pytest.approx(direct_max_mean(n, p), rel=1e-9)


def test_avg_total_steps_large_n_stable():
    # alternating form would explode here; the tail sum must stay sane
    for n, p in ((50, 0.1), (200, 0.00743), (512, 0.3)):
        val = avg_total_steps(n, p)
        assert val == pytest.approx(direct_max_mean(n, p), rel=1e-10)
        assert val >= 1.0 / p


def test_avg_total_steps_against_monte_carlo():
    rng = np.random.default_rng(11)
    for n, p in ((2, 0.5), (8, 0.1)):
        samples = rng.geometric(p, size=(10**6, n)).max(axis=1)
        assert avg_total_steps(n, p) == pytest.approx(samples.mean(), rel=5e-3)


def test_avg_total_steps_monotonicity():
    for n in (1, 2, 4, 8):
        vals = [avg_total_steps(n, p) for p in (0.1, 0.3, 0.5, 0.9)]
        assert all(x >= y for x, y in zip(vals, vals[1:]))
    for p in (0.1, 0.5):
        vals = [avg_total_steps(n, p) for n in (1, 2, 4, 8, 16)]
        assert all(x <= y for x, y in zip(vals, vals[1:]))
        assert vals[0] == pytest.approx(1.0 / p, rel=1e-12)
