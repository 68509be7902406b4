"""Monte-Carlo oracle for the analytic engines.

Channels are drawn directly in the equivalent worst-case-noise model: the
normalized estimate has i.i.d. CN(0, 1) entries and all estimation error
sits in the effective SNR.  Random streams are Philox generators keyed by
``(seed, chunk index)``, so results do not depend on how many workers
draw the chunks.
"""

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import RHO_CEIL, RHO_FLOOR, PowerResult
from .channel import effective_snr, rate_nats_threshold, transmit_snr, zeta_factor

__all__ = [
    "CHUNK_TRIALS",
    "McSettings",
    "ChannelSample",
    "chunk_stream",
    "sample_channel",
    "gram_eigenvalues",
    "achievable_rate",
    "log_det",
    "empirical_outage",
    "empirical_fixed_power",
    "empirical_adaptive_power",
]

CHUNK_TRIALS = 4096
MIN_OUTAGE_EVENTS = 10


@dataclass(frozen=True)
class McSettings:
    trials: int = 100_000
    seed: int = 0
    confidence_z: float = 3.0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be positive, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.confidence_z > 0:
            raise ValueError(f"confidence_z must be positive, got {self.confidence_z}")
        if self.workers < 1:
            raise ValueError(f"workers must be positive, got {self.workers}")


@dataclass(frozen=True)
class ChannelSample:
    """One ``M x N`` normalized channel estimate."""

    entries: np.ndarray

    @property
    def shape(self):
        return self.entries.shape


def chunk_stream(seed, chunk_index):
    """Generator for one chunk of trials; the Philox key packs ``(seed, chunk)``."""
    return np.random.Generator(np.random.Philox(key=int(seed) | (int(chunk_index) << 64)))


def _draw(stream, size):
    z = stream.standard_normal(size + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def sample_channel(m, n, stream):
    if m < 1 or n < 1:
        raise ValueError(f"channel dimensions must be positive, got {m}x{n}")
    return ChannelSample(_draw(stream, (m, n)))


def _gram_eigs(h):
    # eigenvalues of H H^H from the smaller Gram matrix; h has shape (..., m, n)
    m, n = h.shape[-2:]
    if min(m, n) == 1:
        return np.sum(np.abs(h) ** 2, axis=(-2, -1))[..., None]
    if m <= n:
        g = h @ np.conj(np.swapaxes(h, -1, -2))
    else:
        g = np.conj(np.swapaxes(h, -1, -2)) @ h
    return np.clip(np.linalg.eigvalsh(g), 0.0, None)


def _chunk_eigs(m, n, seed, chunk, size):
    return _gram_eigs(_draw(chunk_stream(seed, chunk), (size, m, n)))


@functools.lru_cache(maxsize=32)
def _cached_eigs(m, n, trials, seed, workers):
    sizes = [CHUNK_TRIALS] * (trials // CHUNK_TRIALS)
    if trials % CHUNK_TRIALS:
        sizes.append(trials % CHUNK_TRIALS)
    jobs = [(m, n, seed, i, s) for i, s in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _chunk_eigs(*job), jobs))
    else:
        parts = [_chunk_eigs(*job) for job in jobs]
    eigs = np.concatenate(parts, axis=0)
    eigs.setflags(write=False)
    return eigs


def gram_eigenvalues(m, n, mc):
    """Eigenvalues of ``H H^H`` for ``mc.trials`` channels, shape ``(trials, min(m, n))``."""
    return _cached_eigs(int(m), int(n), int(mc.trials), int(mc.seed), int(mc.workers))


def log_det(eigs, rho_eff, m):
    """``ln det(I + rho_eff/M H H^H)`` per trial from Gram eigenvalues."""
    rho_eff = np.asarray(rho_eff, dtype=float)
    if rho_eff.ndim:
        rho_eff = rho_eff[:, None]
    return np.sum(np.log1p(rho_eff * eigs / m), axis=-1)


def achievable_rate(sample, rho_eff, zeta):
    """Rate lower bound in bits/s/Hz: ``ln det(I + rho_eff/M H H^H) / zeta``."""
    h = np.asarray(sample.entries)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel sample has non-finite entries")
    if not rho_eff > 0:
        raise ValueError(f"rho_eff must be positive, got {rho_eff!r}")
    m = h.shape[0]
    return float(log_det(_gram_eigs(h), rho_eff, m)) / zeta


def _outage_fraction(eigs, rho, cfg, rate_nats):
    if rho <= 0:
        return 1.0 if rate_nats > 0 else 0.0
    rho_eff = effective_snr(rho, cfg.tau)
    return float(np.mean(log_det(eigs, rho_eff, cfg.m_tx) < rate_nats))


def empirical_outage(rho, cfg, mc):
    """Fraction of trials whose rate falls below the target, with its standard error."""
    eigs = gram_eigenvalues(cfg.m_tx, cfg.n_rx, mc)
    p = _outage_fraction(eigs, rho, cfg, rate_nats_threshold(cfg))
    return p, math.sqrt(p * (1.0 - p) / mc.trials)


def empirical_fixed_power(cfg, mc, rel_tol=1e-3):
    """Bisect ``rho`` on one fixed channel set until the bracket is ``rel_tol`` wide."""
    threshold = cfg.outage_threshold
    if threshold * mc.trials < MIN_OUTAGE_EVENTS and threshold < 1:
        raise ValueError(
            f"{mc.trials} trials give fewer than {MIN_OUTAGE_EVENTS} expected outage events "
            f"at threshold {threshold}")
    eigs = gram_eigenvalues(cfg.m_tx, cfg.n_rx, mc)
    rate_nats = rate_nats_threshold(cfg)

    def out(log_rho):
        return _outage_fraction(eigs, math.exp(log_rho), cfg, rate_nats)

    lo, hi = math.log(RHO_FLOOR), math.log(RHO_CEIL)
    if out(lo) <= threshold:
        return PowerResult(rho0=RHO_FLOOR, rho_min=None, achieved_outage=out(lo))
    if out(hi) > threshold:
        raise ArithmeticError("empirical outage never reaches the threshold")
    iterations = 0
    while hi - lo > math.log1p(rel_tol):
        mid = 0.5 * (lo + hi)
        if out(mid) <= threshold:
            hi = mid
        else:
            lo = mid
        iterations += 1
    achieved = out(hi)
    return PowerResult(rho0=math.exp(hi), rho_min=None, achieved_outage=achieved,
                       iterations=iterations, residual=abs(achieved - threshold),
                       diagnostics={"trials": mc.trials, "seed": mc.seed})


def _required_rho_eff(eigs, m, rate_nats, rel_tol):
    # per-trial rho_eff with ln det = rate_nats, by bisection in log space
    trials = eigs.shape[0]
    if rate_nats <= 0:
        return np.zeros(trials)
    lo = np.full(trials, math.log(1e-30))
    hi = np.full(trials, math.log(1e300))
    with np.errstate(over="ignore"):
        while hi[0] - lo[0] > rel_tol:
            mid = 0.5 * (lo + hi)
            ok = log_det(eigs, np.exp(mid), m) >= rate_nats
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
    return np.exp(hi)


def empirical_adaptive_power(cfg, rho0, mc, rel_tol=1e-8):
    """Mean per-block power when each block uses exactly what it needs, capped at ``rho0``."""
    if not rho0 > 0:
        raise ValueError(f"rho0 must be positive, got {rho0!r}")
    eigs = gram_eigenvalues(cfg.m_tx, cfg.n_rx, mc)
    rate_nats = cfg.target_rate_bits * zeta_factor(cfg.training_symbols, cfg.coherence_symbols)
    re = _required_rho_eff(eigs, cfg.m_tx, rate_nats, rel_tol)
    with np.errstate(divide="ignore"):
        rho = np.where(re > 0, transmit_snr(np.where(re > 0, re, 1.0), cfg.tau), 0.0)
    keep = rho <= rho0
    power = np.where(keep, rho, 0.0)
    mean = float(np.mean(power))
    stderr = float(np.std(power) / math.sqrt(mc.trials))
    dropped = 1.0 - float(np.mean(keep))
    return PowerResult(rho0=float(rho0), rho_min=mean, achieved_outage=dropped,
                       residual=stderr,
                       diagnostics={"mode": "exact", "stderr": stderr, "trials": mc.trials,
                                    "seed": mc.seed})
