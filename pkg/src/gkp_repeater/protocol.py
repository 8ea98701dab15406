"""Discrete protocol semantics: detector patterns, Bell decoding, Pauli frames.

The quadrature arithmetic here is exact; noise enters only through the
shift variances handled elsewhere.  The transfer-chain verifier builds the
explicit 8x8 linear transform of the two-mode-squeezed measurement sequence
and checks it symbolically-by-numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

SQRT_PI = math.sqrt(math.pi)


class DetectionOutcome(Enum):
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"
    BUNCHED = "bunched"
    FORBIDDEN = "forbidden"
    INVALID = "invalid"


class BellLabel(Enum):
    PHI_PLUS = (0, 0)
    PHI_MINUS = (0, 1)
    PSI_PLUS = (1, 0)
    PSI_MINUS = (1, 1)

    @property
    def x_parity(self) -> int:
        return self.value[0]

    @property
    def p_parity(self) -> int:
        return self.value[1]


_PATTERN_MAP = {
    (1, 1, 0, 0): DetectionOutcome.PSI_PLUS,
    (0, 0, 1, 1): DetectionOutcome.PSI_PLUS,
    (1, 0, 0, 1): DetectionOutcome.PSI_MINUS,
    (0, 1, 1, 0): DetectionOutcome.PSI_MINUS,
    (2, 0, 0, 0): DetectionOutcome.BUNCHED,
    (0, 2, 0, 0): DetectionOutcome.BUNCHED,
    (0, 0, 2, 0): DetectionOutcome.BUNCHED,
    (0, 0, 0, 2): DetectionOutcome.BUNCHED,
    (1, 0, 1, 0): DetectionOutcome.FORBIDDEN,
    (0, 1, 0, 1): DetectionOutcome.FORBIDDEN,
}


def classify_detection(counts) -> DetectionOutcome:
    """Classify a 4-tuple of photon counts (a_H, a_V, b_H, b_V).

    Two photons at different detectors herald a Bell state; bunched pairs
    herald failure; equal-polarization coincidences across ports cannot
    occur at a balanced beam splitter and anything else is not a two-photon
    event at all.
    """
    return _PATTERN_MAP.get(tuple(counts), DetectionOutcome.INVALID)


@dataclass(frozen=True)
class Syndrome:
    """Canonical mod-sqrt(pi) residuals and stripe parities of one Bell measurement."""

    x_shift: float
    p_shift: float
    x_parity: int
    p_parity: int


def _nearest_stripe(value: float) -> tuple[int, float]:
    # representative chosen in (-sqrt(pi)/2, sqrt(pi)/2]
    k = math.ceil(value / SQRT_PI - 0.5)
    return k, value - k * SQRT_PI


def decode_bell_parities(xbar_sum: float, pbar_diff: float) -> tuple[BellLabel, Syndrome]:
    """Decode homodyne outcomes (already rescaled to x_A+x_B and p_A-p_B).

    The nearest multiple of sqrt(pi) fixes the stripe: an odd x stripe means
    a Psi state, an odd p stripe a minus state.  Residuals inside the
    central stripe decode exactly; larger true shifts land in a neighbouring
    stripe and flip the label, which is precisely the logical-error channel.
    """
    if not (math.isfinite(xbar_sum) and math.isfinite(pbar_diff)):
        raise ValueError("homodyne outcomes must be finite")
    kx, x_shift = _nearest_stripe(xbar_sum)
    kp, p_shift = _nearest_stripe(pbar_diff)
    label = BellLabel((kx % 2, kp % 2))
    return label, Syndrome(x_shift, p_shift, kx % 2, kp % 2)


def compose_pauli_frame(frames) -> BellLabel:
    """Fold a sequence of per-swap Bell outcomes into the end-to-end label.

    The labels form a Klein four-group under composition; the convention is
    anchored so that a chain of PSI_PLUS outcomes composes to PSI_PLUS.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("frame sequence must be non-empty")
    ref = BellLabel.PSI_PLUS.value
    acc = ref
    for label in frames:
        acc = (acc[0] ^ label.x_parity ^ ref[0], acc[1] ^ label.p_parity ^ ref[1])
    return BellLabel(acc)


# --- two-mode-squeezed measurement chain -----------------------------------

_MODES = ("A", "B", "C", "D")


def _idx(mode: str, quad: str) -> int:
    return 2 * _MODES.index(mode) + (0 if quad == "x" else 1)


def _rotation(mode: str, quarter_turns: int) -> np.ndarray:
    s = np.eye(8)
    theta = quarter_turns * math.pi / 2.0
    c, si = round(math.cos(theta)), round(math.sin(theta))
    ix, ip = _idx(mode, "x"), _idx(mode, "p")
    s[ix, ix], s[ix, ip] = c, si
    s[ip, ix], s[ip, ip] = -si, c
    return s


def _px_interaction(light: str, ensemble: str) -> np.ndarray:
    # p_light * X_ensemble: x_light += x_ens, p_ens -= p_light
    s = np.eye(8)
    s[_idx(light, "x"), _idx(ensemble, "x")] = 1.0
    s[_idx(ensemble, "p"), _idx(light, "p")] = -1.0
    return s


def _pp_interaction(light: str, ensemble: str) -> np.ndarray:
    # p_light * P_ensemble: x_light += p_ens, x_ens += p_light
    s = np.eye(8)
    s[_idx(light, "x"), _idx(ensemble, "p")] = 1.0
    s[_idx(ensemble, "x"), _idx(light, "p")] = 1.0
    return s


@dataclass(frozen=True)
class TransferChainReport:
    """Outcome of verifying the quadrature-transfer measurement chain."""

    x_coefficients: dict
    p_coefficients: dict
    exact_at_infinite_squeezing: bool
    steps_symplectic: bool
    max_symplectic_deviation: float
    residual_x_variance: float | None
    residual_p_variance: float | None


def _omega(n_modes: int) -> np.ndarray:
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for i in range(n_modes):
        out[2 * i:2 * i + 2, 2 * i:2 * i + 2] = block
    return out


def verify_tmsv_chain(squeezing: float | None = None) -> TransferChainReport:
    """Verify that the measurement chain extracts x_A+x_B and p_A-p_B.

    Light modes C and D start as a two-mode squeezed pair and interact with
    the memories A and B in the fixed sequence of rotations and Faraday-type
    couplings.  At infinite squeezing the measured outputs carry exactly the
    sum of positions and the difference of momenta; with a finite squeezing
    parameter the leftover noise variance e^(-2r) per quadrature is reported
    (vacuum variance 1/2 per mode).
    """
    steps = [
        _rotation("D", 1),
        _px_interaction("C", "A"),
        _pp_interaction("D", "B"),
        _px_interaction("C", "B"),
        _rotation("D", 2),
        _pp_interaction("D", "A"),
    ]
    omega = _omega(4)
    max_dev = 0.0
    for s in steps:
        max_dev = max(max_dev, float(np.abs(s.T @ omega @ s - omega).max()))
    total = np.eye(8)
    for s in steps:
        total = s @ total

    x_row = total[_idx("C", "x")]
    p_row = total[_idx("D", "x")]
    labels = [f"{q}_{m}" for m in _MODES for q in ("x", "p")]
    x_coeff = {lab: float(c) for lab, c in zip(labels, x_row) if c != 0.0}
    p_coeff = {lab: float(c) for lab, c in zip(labels, p_row) if c != 0.0}

    # ideal correlations: x_C - x_D = 0 and p_C + p_D = 0
    exact = (
        x_coeff.get("x_A") == 1.0 and x_coeff.get("x_B") == 1.0
        and x_coeff.get("x_C", 0.0) == -x_coeff.get("x_D", 0.0)
        and p_coeff.get("p_A") == 1.0 and p_coeff.get("p_B") == -1.0
        and p_coeff.get("p_C", 0.0) == p_coeff.get("p_D", 0.0)
        and set(x_coeff) <= {"x_A", "x_B", "x_C", "x_D"}
        and set(p_coeff) <= {"p_A", "p_B", "p_C", "p_D"}
    )

    res_x = res_p = None
    if squeezing is not None:
        if squeezing < 0:
            raise ValueError("squeezing parameter must be >= 0")
        # covariance of (x_C, p_C, x_D, p_D) for a two-mode squeezed pair
        ch, sh = math.cosh(2 * squeezing), math.sinh(2 * squeezing)
        cov = 0.5 * np.array([
            [ch, 0, sh, 0],
            [0, ch, 0, -sh],
            [sh, 0, ch, 0],
            [0, -sh, 0, ch],
        ])
        minus = np.array([1.0, 0.0, -1.0, 0.0])   # x_C - x_D
        plus = np.array([0.0, 1.0, 0.0, 1.0])     # p_C + p_D
        res_x = float(minus @ cov @ minus)
        res_p = float(plus @ cov @ plus)

    return TransferChainReport(
        x_coefficients=x_coeff,
        p_coefficients=p_coeff,
        exact_at_infinite_squeezing=exact,
        steps_symplectic=max_dev == 0.0,
        max_symplectic_deviation=max_dev,
        residual_x_variance=res_x,
        residual_p_variance=res_p,
    )


def distribution_attempt(rng: np.random.Generator, p: float) -> int:
    """Draw the number of attempts (>= 1) until one segment distributes a pair."""
    if not (0.0 < p <= 1.0):
        raise ValueError(f"success probability must lie in (0, 1], got {p}")
    return int(rng.geometric(p))
