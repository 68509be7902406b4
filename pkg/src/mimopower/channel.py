"""Training overhead bookkeeping for a block-fading link.

A block of ``T`` symbols spends ``t`` of them on orthogonal pilots from the
``M`` transmit antennas (``tau = t / M`` pilots per antenna) and the rest on
data.  Estimation error is folded into an effective SNR, and the target
rate is converted once, here, from bits to the natural-log units used by
every outage formula.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigError",
    "SystemConfig",
    "TrainingMap",
    "make_training_map",
    "effective_snr",
    "transmit_snr",
    "rate_nats_threshold",
    "zeta_factor",
    "LOG2E",
]

LOG2E = math.log2(math.e)


class ConfigError(ValueError):
    """Invalid system configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class SystemConfig:
    """Link parameters consumed by every engine.

    Parameters
    ----------
    m_tx, n_rx : int
        Transmit and receive antenna counts.
    coherence_symbols : int
        Block length ``T`` in symbols.
    training_symbols : int
        Pilot symbols ``t`` per block; needs ``m_tx <= t < T``.
    target_rate_bits : float
        Target rate ``R`` in bits/s/Hz.
    outage_threshold : float
        Acceptable outage probability.
    """

    m_tx: int
    n_rx: int
    coherence_symbols: int
    training_symbols: int
    target_rate_bits: float
    outage_threshold: float = 0.05

    def __post_init__(self):
        for name in ("m_tx", "n_rx", "coherence_symbols", "training_symbols"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(name, f"must be an integer, got {value!r}")
            if value < 1:
                raise ConfigError(name, f"must be positive, got {value}")
        if self.training_symbols < self.m_tx:
            raise ConfigError(
                "training_symbols",
                f"orthogonal pilots need t >= M ({self.training_symbols} < {self.m_tx})",
            )
        if self.training_symbols >= self.coherence_symbols:
            raise ConfigError(
                "training_symbols",
                f"no data time left (t={self.training_symbols} >= T={self.coherence_symbols})",
            )
        if not (math.isfinite(self.target_rate_bits) and self.target_rate_bits >= 0):
            raise ConfigError("target_rate_bits", f"must be nonnegative, got {self.target_rate_bits!r}")
        if not 0.0 <= self.outage_threshold <= 1.0:
            raise ConfigError("outage_threshold", f"must lie in [0, 1], got {self.outage_threshold!r}")

    @property
    def tau(self):
        return self.training_symbols / self.m_tx


@dataclass(frozen=True)
class TrainingMap:
    tau: float
    zeta: float


def zeta_factor(t, T):
    # inverse data fraction, with the bits -> nats factor folded in
    return 1.0 / (LOG2E * (1.0 - t / T))


def make_training_map(cfg):
    return TrainingMap(tau=cfg.training_symbols / cfg.m_tx,
                       zeta=zeta_factor(cfg.training_symbols, cfg.coherence_symbols))


def _check_positive(name, value):
    if np.any(~(np.asarray(value) > 0)):
        raise ValueError(f"{name} must be positive, got {value!r}")


def _check_tau(tau):
    if np.any(~(np.asarray(tau) >= 1)):
        raise ValueError(f"tau must be >= 1, got {tau!r}")


def effective_snr(rho, tau):
    """Post-estimation SNR ``tau rho^2 / (1 + rho + rho tau)``.

    Written as ``tau rho / (1/rho + 1 + tau)`` so huge ``rho`` cannot
    overflow.  Accepts scalars or arrays.
    """
    _check_positive("rho", rho)
    _check_tau(tau)
    return tau * rho / (1.0 / rho + 1.0 + tau)


def transmit_snr(rho_eff, tau):
    """Invert :func:`effective_snr`: the transmit SNR giving ``rho_eff``."""
    _check_positive("rho_eff", rho_eff)
    _check_tau(tau)
    one_tau = 1.0 + tau
    return rho_eff * (one_tau + np.sqrt(one_tau * one_tau + 4.0 * tau / rho_eff)) / (2.0 * tau)


def to_db(x):
    """``10 log10(x)`` for a linear power ratio; zero maps to ``-inf``."""
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def rate_nats_threshold(cfg):
    """``R * zeta``: the value ``ln det(I + ...)`` must exceed to avoid outage."""
    return cfg.target_rate_bits * zeta_factor(cfg.training_symbols, cfg.coherence_symbols)
