"""Closed-form outage and minimum-power engines.

Three engines share one interface:

``miso``
    ``N = 1``.  The channel gain ``sum |h_i|^2`` is Gamma(M, 1) and the
    required effective SNR carries a factor ``M`` (power split over M
    antennas).
``simo``
    ``M = 1``.  Gain is Gamma(N, 1), no power split.
``mimo_rmt``
    General ``M x N`` link.  ``ln det`` is approximated by a Gaussian with
    mean ``M mu`` and standard deviation ``sigma`` from the large random
    matrix limit.

Power searches work on ``log(rho)`` with plain bisection, since every
outage map is monotone in ``rho``.  The ``*_batch`` functions evaluate many
training lengths at once and are what :mod:`mimopower.optimizer` uses; the
scalar functions are thin wrappers over them so both paths agree exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .channel import ConfigError, SystemConfig, effective_snr, to_db, transmit_snr, zeta_factor
from .specfun import expint_e1, gamma_lower_reg, gamma_upper_reg, qfunc

__all__ = [
    "ENGINES",
    "GammaTailParams",
    "RmtStats",
    "PowerResult",
    "InfeasibleError",
    "infer_engine",
    "gamma_sum_outage",
    "miso_outage",
    "simo_outage",
    "gamma_adaptive_power",
    "rmt_stats",
    "mimo_outage_rmt",
    "outage",
    "fixed_power",
    "mimo_adaptive_power",
    "adaptive_power",
    "min_power",
    "outage_batch",
    "fixed_power_batch",
    "adaptive_power_batch",
]

ENGINES = ("miso", "simo", "mimo_rmt")
AVERAGING_MODES = ("paper", "exact")

RHO_FLOOR = 1e-30
RHO_CEIL = 1e300
_LOG_FLOOR = math.log(RHO_FLOOR)
_LOG_CEIL = math.log(RHO_CEIL)
# log-domain bracket width at which power bisection stops
_LOG_TOL = 1e-10
_SMALL_SNR = 1e-6
_ADAPTIVE_CHUNK = 2048


class InfeasibleError(ArithmeticError):
    """No transmit power within the numeric range meets the outage target."""


@dataclass(frozen=True)
class GammaTailParams:
    shape: int
    omega0_sq: float

    def __post_init__(self):
        if isinstance(self.shape, bool) or int(self.shape) != self.shape or self.shape < 1:
            raise ValueError(f"shape must be a positive integer, got {self.shape}")
        if not self.omega0_sq >= 0:
            raise ValueError(f"omega0_sq must be nonnegative, got {self.omega0_sq}")


@dataclass(frozen=True)
class RmtStats:
    """Large-system statistics of ``ln det(I + rho_eff/M H H^H)``.

    ``M * mu`` is the mean and ``sigma`` the standard deviation of the
    Gaussian fluctuation around it; ``c = N / M``.
    """

    c: float
    alpha: float
    mu: float
    sigma: float


@dataclass
class PowerResult:
    """Minimum power for one configuration.

    ``rho0`` is the fixed-scheme SNR (linear), ``rho_min`` the adaptive
    scheme's mean SNR, or ``None`` when only the fixed scheme was solved.
    """

    rho0: float
    rho_min: float | None
    achieved_outage: float
    iterations: int = 0
    residual: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def rho0_db(self):
        return to_db(self.rho0)

    @property
    def rho_min_db(self):
        return None if self.rho_min is None else to_db(self.rho_min)


def infer_engine(cfg):
    """``miso`` when N = 1 (SISO included), ``simo`` when M = 1, else ``mimo_rmt``."""
    if cfg.n_rx == 1:
        return "miso"
    if cfg.m_tx == 1:
        return "simo"
    return "mimo_rmt"


def _check_engine(cfg, engine):
    if engine is None:
        return infer_engine(cfg)
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    if engine == "miso" and cfg.n_rx != 1:
        raise ConfigError("n_rx", f"miso engine needs n_rx = 1, got {cfg.n_rx}")
    if engine == "simo" and cfg.m_tx != 1:
        raise ConfigError("m_tx", f"simo engine needs m_tx = 1, got {cfg.m_tx}")
    return engine


def _expm1_or_inf(x):
    return math.expm1(x) if x < 700.0 else math.inf


# ---------------------------------------------------------------------------
# Gamma-distributed gains (MISO / SIMO)
# ---------------------------------------------------------------------------


def gamma_sum_outage(params):
    """``P(sum of shape unit exponentials <= omega0_sq)``."""
    return gamma_lower_reg(params.shape, params.omega0_sq)


def _gamma_terms(engine, m, n):
    # (Gamma shape, factor on the required effective SNR)
    if engine == "miso":
        return m, m
    return n, 1


def _gamma_outage_scalar(rho, shape, k_fac, tau, rate_nats):
    k = k_fac * _expm1_or_inf(rate_nats)
    with np.errstate(over="ignore"):
        omega0_sq = k / effective_snr(rho, tau)
    return gamma_sum_outage(GammaTailParams(shape, float(omega0_sq)))


def miso_outage(rho0, cfg):
    _check_engine(cfg, "miso")
    return float(outage_batch("miso", rho0, cfg.m_tx, 1, cfg.training_symbols,
                              cfg.coherence_symbols, cfg.target_rate_bits))


def simo_outage(rho0, cfg):
    _check_engine(cfg, "simo")
    return float(outage_batch("simo", rho0, 1, cfg.n_rx, cfg.training_symbols,
                              cfg.coherence_symbols, cfg.target_rate_bits))


def _truncated_mean_rho_eff(shape, k, omega0_sq):
    # E[k / w ; w >= omega0_sq] for w ~ Gamma(shape, 1), i.e. k Γ(shape-1, Ω²)/Γ(shape)
    if k == 0 or math.isinf(omega0_sq):
        return 0.0
    if shape == 1:
        if omega0_sq == 0:
            return math.inf
        return k * expint_e1(omega0_sq)
    return k * gamma_upper_reg(shape - 1, omega0_sq) / (shape - 1)


def _exact_gamma_average(shape, k, tau, omega0_sq):
    # E[rho(k / w) ; w >= omega0_sq], integrated over s = log w
    if k == 0 or math.isinf(omega0_sq):
        return 0.0, 0.0
    log_norm = math.lgamma(shape)

    def integrand(s):
        w = math.exp(s)
        dens = math.exp(shape * s - w - log_norm)  # w * gamma pdf(w)
        return float(transmit_snr(k / w, tau)) * dens

    lo = math.log(omega0_sq) if omega0_sq > 0 else math.log(k) - 80.0
    hi = math.log(max(omega0_sq, shape) + 60.0 + 12.0 * math.sqrt(shape))
    if hi <= lo:
        return 0.0, 0.0
    value, err = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=400)
    return value, err


def gamma_adaptive_power(cfg, rho0, kind=None, mode="paper"):
    """Adaptive-scheme mean SNR for MISO/SIMO links.

    Each block uses exactly the power its channel needs, capped at
    ``rho0`` (above the cap the block is dropped and power is zero).

    Parameters
    ----------
    cfg : SystemConfig
    rho0 : float
        Peak power cap, normally the fixed-scheme solution.
    kind : {"miso", "simo"}, optional
        Inferred from ``cfg`` when omitted.
    mode : {"paper", "exact"}
        ``paper`` maps the truncated mean effective SNR through the
        inverse training map once.  ``exact`` averages the transmit SNR
        per channel realization by quadrature.
    """
    kind = _check_engine(cfg, kind)
    if kind == "mimo_rmt":
        raise ValueError("gamma_adaptive_power handles miso/simo; use mimo_adaptive_power")
    if mode not in AVERAGING_MODES:
        raise ValueError(f"unknown averaging mode {mode!r}")
    if not rho0 > 0:
        raise ValueError(f"rho0 must be positive, got {rho0!r}")

    shape, k_fac = _gamma_terms(kind, cfg.m_tx, cfg.n_rx)
    tau = cfg.tau
    rate_nats = cfg.target_rate_bits * zeta_factor(cfg.training_symbols, cfg.coherence_symbols)
    k = k_fac * _expm1_or_inf(rate_nats)
    omega0_sq = float(k / effective_snr(rho0, tau))
    achieved = gamma_lower_reg(shape, omega0_sq)
    mean_rho_eff = _truncated_mean_rho_eff(shape, k, omega0_sq)

    diagnostics = {"mode": mode, "mean_rho_eff": mean_rho_eff, "omega0_sq": omega0_sq}
    residual = 0.0
    if mode == "paper":
        rho_min = float(transmit_snr(mean_rho_eff, tau)) if mean_rho_eff > 0 else 0.0
    else:
        rho_min, residual = _exact_gamma_average(shape, k, tau, omega0_sq)
        if residual > 1e-8 * max(rho_min, 1e-300):
            raise ArithmeticError(
                f"adaptive-power quadrature did not converge (estimate {rho_min}, error {residual})")
    return PowerResult(rho0=float(rho0), rho_min=rho_min, achieved_outage=achieved,
                       residual=residual, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Random-matrix approximation (MIMO)
# ---------------------------------------------------------------------------


def _half_root(y, q):
    # 0.5 * (y + sqrt(y^2 + q)) for q > 0, without cancellation when y < 0
    s = np.sqrt(y * y + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        neg = 0.5 * q / (s - y)
    return np.where(y >= 0, 0.5 * (y + s), neg)


def _rmt_arrays(rho_eff, c):
    rho_eff = np.asarray(rho_eff, dtype=float)
    c = np.asarray(c, dtype=float)
    x = 1.0 / rho_eff
    # (1 + c + x)^2 - 4c, rearranged to stay accurate as x -> 0 with c = 1
    disc = (1.0 - c - x) ** 2 + 4.0 * x
    root = np.sqrt(disc)
    alpha = 2.0 * c / (1.0 + c + x + root)
    one_minus = _half_root(1.0 - c - x, 4.0 * x)
    c_minus = _half_root(c - 1.0 - x, 4.0 * c * x)
    with np.errstate(over="ignore", invalid="ignore"):
        mu_full = c * np.log1p(rho_eff * one_minus) + np.log1p(rho_eff * c_minus) - alpha
        # second-order expansion where the closed form cancels
        mu_small = c * rho_eff - 0.5 * c * (1.0 + c) * rho_eff * rho_eff
    mu = np.where(rho_eff < _SMALL_SNR, mu_small, mu_full)
    ratio = alpha * alpha / c
    with np.errstate(divide="ignore", invalid="ignore"):
        # 1 - alpha^2/c == alpha * root / c exactly
        var = np.where(ratio < 0.5, -np.log1p(-ratio), -np.log(alpha * root / c))
    return alpha, mu, np.sqrt(var)


def rmt_stats(rho_eff, c):
    """Mean and fluctuation parameters of the log-det rate at ``rho_eff``, ``c = N/M``."""
    if not rho_eff > 0:
        raise ValueError(f"rho_eff must be positive, got {rho_eff!r}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c!r}")
    alpha, mu, sigma = (float(v) for v in _rmt_arrays(rho_eff, c))
    if not (sigma > 0 and alpha * alpha / c < 1):
        raise ArithmeticError(f"degenerate fluctuation at rho_eff={rho_eff}, c={c}")
    return RmtStats(c=float(c), alpha=alpha, mu=mu, sigma=sigma)


def _mimo_outage_arrays(rho, m, n, t, T, rate_bits, sigma=None):
    tau = np.asarray(t, dtype=float) / m
    rate_nats = rate_bits * zeta_factor(np.asarray(t, dtype=float), T)
    _, mu, sig = _rmt_arrays(effective_snr(rho, tau), n / m)
    if sigma is not None:
        sig = np.broadcast_to(float(sigma), np.shape(mu))
    return qfunc((m * mu - rate_nats) / sig)


def mimo_outage_rmt(rho0, cfg):
    """``P(ln det < R zeta) ~= Q((M mu0 - R zeta) / sigma)``."""
    return float(outage_batch("mimo_rmt", rho0, cfg.m_tx, cfg.n_rx, cfg.training_symbols,
                              cfg.coherence_symbols, cfg.target_rate_bits))


def _bisect_increasing(fn, target, lo, hi, iterations):
    # vectorized: smallest x in [lo, hi] with fn(x) >= target, fn increasing
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        ok = fn(mid) >= target
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return hi


def _gl_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _mimo_adaptive_arrays(rho0, m, n, t, T, rate_bits, nodes, sigma=None):
    rho0 = np.atleast_1d(np.asarray(rho0, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), rho0.shape)
    tau = t / m
    c = n / m
    rate_nats = rate_bits * zeta_factor(t, T)
    finite = np.isfinite(rho0)
    safe_rho0 = np.where(finite, rho0, 1.0)
    rho_eff0 = effective_snr(safe_rho0, tau)
    _, mu0, sig = _rmt_arrays(rho_eff0, c)
    if sigma is not None:
        sig = np.full_like(mu0, float(sigma))

    # transmit region: psi >= R zeta - M mu0; the required power is zero for psi >= R zeta
    a = np.maximum(rate_nats - m * mu0, -9.0 * sig)
    b = np.minimum(rate_nats, np.maximum(a, 0.0) + 9.0 * sig)
    half = 0.5 * np.maximum(b - a, 0.0)
    x, w = _gl_nodes(nodes)
    psi = (a + half)[:, None] + half[:, None] * x[None, :]
    target = (rate_nats[:, None] - psi) / m  # per-antenna mean rate needed

    log_hi = np.broadcast_to(np.log(rho_eff0)[:, None], psi.shape)
    log_lo = log_hi - 80.0

    def mu_of(log_re):
        return _rmt_arrays(np.exp(log_re), c)[1]

    log_re = _bisect_increasing(mu_of, target, log_lo, log_hi, 64)
    re = np.exp(log_re)
    residual = np.abs(mu_of(log_re) - target) * m
    # where even the lower bracket overshoots, the required power is below ~1e-35 * rho_eff0
    residual = np.where(log_re <= log_lo + 1e-12, 0.0, residual)

    rho_req = transmit_snr(re, np.broadcast_to(tau[:, None], re.shape))
    dens = np.exp(-0.5 * (psi / sig[:, None]) ** 2) / (np.sqrt(2.0 * np.pi) * sig[:, None])
    value = half * np.sum(w[None, :] * rho_req * dens, axis=1)
    value = np.where(finite, value, np.nan)
    return value, residual.max(axis=1)


def mimo_adaptive_power(cfg, rho0, nodes=96, sigma=None):
    """Adaptive-scheme mean SNR for a MIMO link under the Gaussian log-det model.

    Integrates the per-fluctuation required power over the transmit
    region, weighting by the ``N(0, sigma^2)`` density, with ``sigma``
    taken at the peak-power effective SNR (override with ``sigma``).
    Gauss-Legendre with ``nodes`` points; convergence is checked against a
    half-size rule.
    """
    if not rho0 > 0:
        raise ValueError(f"rho0 must be positive, got {rho0!r}")
    args = (cfg.m_tx, cfg.n_rx, cfg.training_symbols, cfg.coherence_symbols,
            cfg.target_rate_bits)
    fine, residual = _mimo_adaptive_arrays(rho0, *args, nodes=nodes, sigma=sigma)
    coarse, _ = _mimo_adaptive_arrays(rho0, *args, nodes=nodes // 2, sigma=sigma)
    value = float(fine[0])
    delta = abs(value - float(coarse[0]))
    if residual[0] > 1e-10 * max(1.0, cfg.target_rate_bits):
        raise ArithmeticError(f"rate inversion residual {residual[0]:.3e} exceeds tolerance")
    if delta > 1e-6 * max(value, 1e-300):
        raise ArithmeticError(f"adaptive-power quadrature unconverged: {value} vs {float(coarse[0])}")
    achieved = float(_mimo_outage_arrays(rho0, *args, sigma=sigma))
    return PowerResult(rho0=float(rho0), rho_min=value, achieved_outage=achieved,
                       residual=float(residual[0]),
                       diagnostics={"mode": "exact", "nodes": nodes, "quadrature_delta": delta})


# ---------------------------------------------------------------------------
# Engine-generic entry points
# ---------------------------------------------------------------------------


def outage_batch(engine, rho, m, n, t, T, rate_bits):
    """Outage for arrays of ``rho`` and/or training lengths ``t``."""
    if engine == "mimo_rmt":
        return _mimo_outage_arrays(rho, m, n, t, T, rate_bits)
    shape, k_fac = _gamma_terms(engine, m, n)
    rho_b, t_b = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(t, dtype=float))
    out = np.empty(rho_b.shape)
    for idx in np.ndindex(rho_b.shape):
        tt = t_b[idx]
        out[idx] = _gamma_outage_scalar(rho_b[idx], shape, k_fac, tt / m,
                                        rate_bits * zeta_factor(tt, T))
    return out if out.ndim else out[()]


def outage(rho0, cfg, engine=None):
    """Outage probability at transmit SNR ``rho0``; zero power is always in outage."""
    engine = _check_engine(cfg, engine)
    if rho0 == 0:
        return 1.0 if cfg.target_rate_bits > 0 else 0.0
    return float(outage_batch(engine, rho0, cfg.m_tx, cfg.n_rx, cfg.training_symbols,
                              cfg.coherence_symbols, cfg.target_rate_bits))


def fixed_power_batch(engine, m, n, t, T, rate_bits, threshold):
    """Smallest ``rho`` with outage <= ``threshold`` for each training length in ``t``.

    Returns ``(rho0, achieved_outage, iterations)``.  Cells that stay in
    outage even at ``RHO_CEIL`` get ``rho0 = inf``; cells feasible at
    ``RHO_FLOOR`` get the floor.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"outage threshold must lie in (0, 1), got {threshold!r}")
    t = np.atleast_1d(np.asarray(t, dtype=float))

    def out(log_rho):
        return outage_batch(engine, np.exp(log_rho), m, n, t, T, rate_bits)

    lo = np.full(t.shape, _LOG_FLOOR)
    hi = np.full(t.shape, _LOG_CEIL)
    feasible = out(hi) <= threshold
    trivial = out(lo) <= threshold
    iterations = 0
    while hi[0] - lo[0] > _LOG_TOL:
        mid = 0.5 * (lo + hi)
        ok = out(mid) <= threshold
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
        iterations += 1
    log_rho0 = np.where(trivial, _LOG_FLOOR, hi)
    achieved = out(log_rho0)
    rho0 = np.where(feasible, np.exp(log_rho0), np.inf)
    achieved = np.where(feasible, achieved, 1.0)
    return rho0, achieved, iterations


def fixed_power(cfg, engine=None):
    """Fixed scheme: the lowest constant SNR meeting the outage target.

    Raises :class:`InfeasibleError` if no SNR up to ``RHO_CEIL`` suffices.
    """
    engine = _check_engine(cfg, engine)
    rho0, achieved, iterations = fixed_power_batch(
        engine, cfg.m_tx, cfg.n_rx, cfg.training_symbols, cfg.coherence_symbols,
        cfg.target_rate_bits, cfg.outage_threshold)
    if not np.isfinite(rho0[0]):
        raise InfeasibleError(f"outage stays above {cfg.outage_threshold} up to rho={RHO_CEIL:g}")
    return PowerResult(
        rho0=float(rho0[0]), rho_min=None, achieved_outage=float(achieved[0]),
        iterations=iterations, residual=abs(float(achieved[0]) - cfg.outage_threshold),
        diagnostics={"engine": engine, "bracket_log_width": _LOG_TOL})


def adaptive_power_batch(engine, rho0, m, n, t, T, rate_bits, mode="paper", nodes=96):
    """Adaptive-scheme mean SNR for arrays of ``(rho0, t)``; infinite ``rho0`` gives nan."""
    rho0 = np.atleast_1d(np.asarray(rho0, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), rho0.shape)
    if engine == "mimo_rmt":
        # chunked so the (cells x nodes) work arrays stay small
        step = _ADAPTIVE_CHUNK
        parts = [_mimo_adaptive_arrays(rho0[i:i + step], m, n, t[i:i + step], T, rate_bits, nodes)[0]
                 for i in range(0, rho0.size, step)]
        return np.concatenate(parts) if parts else np.empty(0)
    out = np.full(rho0.shape, np.nan)
    for i, (r0, tt) in enumerate(zip(rho0, t)):
        if not np.isfinite(r0):
            continue
        cfg = SystemConfig(m, n, int(T), int(tt), rate_bits)
        out[i] = gamma_adaptive_power(cfg, float(r0), engine, mode).rho_min
    return out


def adaptive_power(cfg, rho0, engine=None, mode="paper"):
    engine = _check_engine(cfg, engine)
    if engine == "mimo_rmt":
        return mimo_adaptive_power(cfg, rho0)
    return gamma_adaptive_power(cfg, rho0, engine, mode)


def min_power(cfg, engine=None, mode="paper"):
    """Solve the fixed scheme, then the adaptive scheme capped at its ``rho0``."""
    engine = _check_engine(cfg, engine)
    fixed = fixed_power(cfg, engine)
    adaptive = adaptive_power(cfg, fixed.rho0, engine, mode)
    fixed.rho_min = adaptive.rho_min
    fixed.diagnostics.update({f"adaptive_{k}": v for k, v in adaptive.diagnostics.items()})
    return fixed
