"""Chain configuration and derived per-run parameters.

Everything downstream (waiting-time statistics, amplification variances,
error rates, simulation) consumes the values computed here, so this module
is deliberately free of any randomness or state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class ConfigError(ValueError):
    """Invalid user-facing configuration; names the offending field."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


class AmplificationStrategy(Enum):
    """How memory loss is converted into a Gaussian shift before a swap.

    PER_STEP_PREAMP amplifies before every single waiting step.
    MEAN_ADJUSTED pre-amplifies once for the rounded mean waiting time and
    holds both modes until that time has elapsed.  MEAN_ADJUSTED_ARTIFICIAL_LOSS
    replaces the hold by an artificial loss channel on the older mode.
    CC_AMPLIFICATION equalizes losses with an artificial channel and rescales
    in classical post-processing.  AUTO picks CC below the segment-length
    threshold where it outperforms per-step preamplification.
    """

    PER_STEP_PREAMP = "preamp"
    MEAN_ADJUSTED = "mean_adjusted"
    MEAN_ADJUSTED_ARTIFICIAL_LOSS = "mean_adjusted_artificial_loss"
    CC_AMPLIFICATION = "cc"
    AUTO = "auto"


@dataclass(frozen=True)
class PhysicalConstants:
    """Fiber constants: speed of light in fiber (km/s) and attenuation length (km)."""

    c_fiber: float = 2.0e5  # two thirds of the vacuum speed of light
    L_att: float = 22.0


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class RepeaterConfig:
    """User-facing chain parameters.

    Lengths in km, times in seconds.  ``delta_sq`` is the single-peak
    variance of the encoded states, ``gamma_sq`` the extra shift variance
    added by each noisy swap operation.
    """

    L: float
    n: int
    p_link: float = 1.0
    delta_sq: float = 0.05
    t_coh: float = 10.0
    gamma_sq: float = 0.0
    strategy: AmplificationStrategy = AmplificationStrategy.AUTO
    n_atoms: int | None = None
    theta_max: float | None = None

    def validate(self) -> None:
        if not (self.L > 0):
            raise ConfigError("L", "total distance must be > 0 km")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ConfigError("n", "segment count must be an integer >= 1")
        if not (0.0 <= self.p_link <= 1.0):
            raise ConfigError("p_link", "link efficiency must lie in [0, 1]")
        if not (self.delta_sq > 0):
            raise ConfigError("delta_sq", "single-peak variance must be > 0")
        if not (self.t_coh > 0):
            raise ConfigError("t_coh", "coherence time must be > 0 s")
        if self.gamma_sq < 0:
            raise ConfigError("gamma_sq", "operation-noise variance must be >= 0")
        if self.n_atoms is not None and self.n_atoms < 1:
            raise ConfigError("n_atoms", "ensemble size must be >= 1")
        if self.theta_max is not None and not (self.theta_max > 0):
            raise ConfigError("theta_max", "small-angle bound must be > 0 rad")


@dataclass(frozen=True)
class DerivedParams:
    """Deterministic quantities derived from a config.

    ``p`` is the per-attempt success probability of distributing one segment,
    ``T`` the mean waiting time of a finished segment rounded half-up to an
    integer number of time steps.
    """

    L0: float
    tau: float
    alpha: float
    p: float
    q: float
    T: int


def mean_wait_steps(p: float) -> float:
    """Mean of |N1 - N2| for two independent geometric variables, 2q/(1-q^2)."""
    q = 1.0 - p
    return 2.0 * q / (1.0 - q * q)


def derive(config: RepeaterConfig,
           constants: PhysicalConstants = DEFAULT_CONSTANTS) -> DerivedParams:
    """Compute segment length, time step, decay constant and success probability.

    Raises :class:`ConfigError` when the configuration is invalid or when the
    per-attempt success probability vanishes (zero success probability).
    """
    config.validate()
    L0 = config.L / config.n
    tau = L0 / constants.c_fiber
    alpha = tau / config.t_coh
    p = config.p_link * math.exp(-L0 / constants.L_att)
    if p <= 0.0:
        raise ConfigError("p_link", "zero success probability: no distribution possible")
    q = 1.0 - p
    T = int(math.floor(mean_wait_steps(p) + 0.5))  # round half-up
    return DerivedParams(L0=L0, tau=tau, alpha=alpha, p=p, q=q, T=T)
