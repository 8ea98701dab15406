import itertools
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from gkp_repeater.protocol import (
    SQRT_PI,
    BellLabel,
    DetectionOutcome,
    classify_detection,
    compose_pauli_frame,
    decode_bell_parities,
    distribution_attempt,
    verify_tmsv_chain,
)

TWO_PHOTON_PATTERNS = [p for p in itertools.product(range(3), repeat=4)
                       if sum(p) == 2]


def test_all_two_photon_patterns_covered():
    outcomes = {p: classify_detection(p) for p in TWO_PHOTON_PATTERNS}
    assert len(outcomes) == 10
    usable = [p for p, o in outcomes.items()
              if o in (DetectionOutcome.PSI_PLUS, DetectionOutcome.PSI_MINUS)]
    bunched = [p for p, o in outcomes.items() if o is DetectionOutcome.BUNCHED]
    forbidden = [p for p, o in outcomes.items() if o is DetectionOutcome.FORBIDDEN]
    assert len(usable) == 4
    assert len(bunched) == 4
    assert len(forbidden) == 2
    assert DetectionOutcome.INVALID not in outcomes.values()


def test_specific_patterns():
    assert classify_detection((1, 1, 0, 0)) is DetectionOutcome.PSI_PLUS
    assert classify_detection((0, 0, 1, 1)) is DetectionOutcome.PSI_PLUS
    assert classify_detection((1, 0, 0, 1)) is DetectionOutcome.PSI_MINUS
    assert classify_detection((0, 1, 1, 0)) is DetectionOutcome.PSI_MINUS
    assert classify_detection((1, 0, 1, 0)) is DetectionOutcome.FORBIDDEN
    assert classify_detection((0, 1, 0, 1)) is DetectionOutcome.FORBIDDEN
    assert classify_detection((2, 0, 0, 0)) is DetectionOutcome.BUNCHED


def test_non_two_photon_patterns_invalid():
    for p in ((0, 0, 0, 0), (1, 0, 0, 0), (1, 1, 1, 0), (3, 0, 0, 0)):
        assert classify_detection(p) is DetectionOutcome.INVALID


def test_usable_fraction_is_half_of_observed():
    # forbidden patterns never fire, so 4 usable out of 8 observed outcomes
    observed = [p for p in TWO_PHOTON_PATTERNS
                if classify_detection(p) is not DetectionOutcome.FORBIDDEN]
    usable = [p for p in observed
              if classify_detection(p) in (DetectionOutcome.PSI_PLUS,
                                           DetectionOutcome.PSI_MINUS)]
    assert len(usable) / len(observed) == 0.5


def test_decode_trivial():
    label, syn = decode_bell_parities(0.0, 0.0)
    assert label is BellLabel.PHI_PLUS
    assert syn.x_shift == 0.0 and syn.p_shift == 0.0


def test_decode_constructed_shift():
    label, syn = decode_bell_parities(SQRT_PI + 0.1, 0.0)
    assert label is BellLabel.PSI_PLUS
    assert syn.x_shift == pytest.approx(0.1, abs=1e-12)
    assert (syn.x_parity, syn.p_parity) == (1, 0)


def test_decode_exact_inside_stripe():
    rng = np.random.default_rng(5)
    for _ in range(500):
        kx, kp = rng.integers(-6, 7, size=2)
        dx, dp = rng.uniform(-SQRT_PI / 2 + 1e-9, SQRT_PI / 2 - 1e-9, size=2)
        label, syn = decode_bell_parities(kx * SQRT_PI + dx, kp * SQRT_PI + dp)
        assert syn.x_shift == pytest.approx(dx, abs=1e-9)
        assert syn.p_shift == pytest.approx(dp, abs=1e-9)
        assert label is BellLabel((kx % 2, kp % 2))


def test_decode_stripe_membership_oracle():
    # residuals beyond the half stripe land in the neighbouring stripe;
    # compare the decoded stripe index against direct stripe membership
    for true_k in (-2, 0, 3):
        for resid in np.linspace(-1.2 * SQRT_PI, 1.2 * SQRT_PI, 97):
            x = true_k * SQRT_PI + resid
            # direct membership: which stripe contains x?
            k_direct = math.ceil(x / SQRT_PI - 0.5)
            label, syn = decode_bell_parities(x, 0.0)
            assert label.x_parity == k_direct % 2
            misdecoded = abs(resid) > SQRT_PI / 2
            if misdecoded and abs(abs(resid) - SQRT_PI / 2) > 1e-9:
                assert k_direct != true_k
            elif abs(abs(resid) - SQRT_PI / 2) > 1e-9:
                assert k_direct == true_k


def test_decode_half_open_boundary():
    label, syn = decode_bell_parities(SQRT_PI / 2, 0.0)
    assert syn.x_shift == pytest.approx(SQRT_PI / 2, rel=1e-12)
    assert label.x_parity == 0


def test_compose_identity_and_involution():
    assert compose_pauli_frame([BellLabel.PSI_PLUS]) is BellLabel.PSI_PLUS
    assert compose_pauli_frame([BellLabel.PSI_PLUS] * 7) is BellLabel.PSI_PLUS
    assert compose_pauli_frame([BellLabel.PSI_MINUS, BellLabel.PSI_MINUS]) is \
        BellLabel.PSI_PLUS
    for label in BellLabel:
        assert compose_pauli_frame([label, label]) is BellLabel.PSI_PLUS


def test_compose_abelian_and_associative():
    rng = np.random.default_rng(9)
    labels = list(BellLabel)
    for _ in range(100):
        seq = [labels[i] for i in rng.integers(0, 4, size=6)]
        ref = compose_pauli_frame(seq)
        perm = [seq[i] for i in rng.permutation(6)]
        assert compose_pauli_frame(perm) is ref
        # associativity: fold left half then right half
        left = compose_pauli_frame(seq[:3])
        right = compose_pauli_frame(seq[3:])
        assert compose_pauli_frame([left, right]) is ref


def test_compose_rejects_empty():
    with pytest.raises(ValueError):
        compose_pauli_frame([])


def test_transfer_chain_exact_at_infinite_squeezing():
    report = verify_tmsv_chain()
    assert report.exact_at_infinite_squeezing
    assert report.x_coefficients == {"x_A": 1.0, "x_B": 1.0, "x_C": 1.0, "x_D": -1.0}
    assert report.p_coefficients == {"p_A": 1.0, "p_B": -1.0, "p_C": -1.0,
                                     "p_D": -1.0}


def test_transfer_chain_symplectic_steps():
    report = verify_tmsv_chain()
    assert report.steps_symplectic
    assert report.max_symplectic_deviation == 0.0


def test_transfer_chain_residual_decreases_with_squeezing():
    rs = [0.0, 0.5, 1.0, 2.0, 4.0]
    reports = [verify_tmsv_chain(r) for r in rs]
    res = [rep.residual_x_variance for rep in reports]
    assert res[0] == pytest.approx(1.0, rel=1e-12)  # two vacuum units
    assert all(a > b for a, b in zip(res, res[1:]))
    for r, rep in zip(rs, reports):
        assert rep.residual_x_variance == pytest.approx(math.exp(-2 * r), rel=1e-12)
        assert rep.residual_p_variance == pytest.approx(math.exp(-2 * r), rel=1e-12)


def test_distribution_attempt_deterministic_success():
    rng = np.random.default_rng(0)
    assert all(distribution_attempt(rng, 1.0) == 1 for _ in range(10))


def test_distribution_attempt_mean():
    rng = np.random.default_rng(123)
    p = 0.3
    draws = np.array([distribution_attempt(rng, p) for _ in range(200_000)])
    assert draws.mean() == pytest.approx(1.0 / p, rel=1e-2)
    assert draws.min() >= 1


def test_distribution_attempt_geometric_fit():
    rng = np.random.default_rng(7)
    p = 0.3
    draws = rng.geometric(p, size=10**6)
    kmax = 30
    observed = np.bincount(np.minimum(draws, kmax + 1))[1:]
    expect = np.array([p * (1 - p) ** (k - 1) for k in range(1, kmax + 1)])
    expect = np.append(expect, 1.0 - expect.sum()) * draws.size
    _, pvalue = chisquare(observed, expect)
    assert pvalue > 0.01


def test_distribution_attempt_rejects_zero():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        distribution_attempt(rng, 0.0)
