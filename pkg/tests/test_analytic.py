"""Analytic engines against frozen mpmath references (see tests/oracles/goldens.py)."""

import math

import numpy as np
import pytest

from mimopower import analytic
from mimopower.analytic import (
    GammaTailParams,
    fixed_power,
    gamma_adaptive_power,
    gamma_sum_outage,
    mimo_adaptive_power,
    mimo_outage_rmt,
    miso_outage,
    rmt_stats,
    simo_outage,
)
from mimopower.channel import ConfigError, SystemConfig, effective_snr, transmit_snr
from mimopower.specfun import qfunc

SISO = SystemConfig(1, 1, 25, 1, 1.44, 0.05)
MIMO4 = SystemConfig(4, 4, 25, 4, 5.76, 0.05)

# mpmath references, 40 digits
SISO_OUTAGE_AT_10 = 0.31884793163491049
SISO_ADAPTIVE_AT_10 = {"paper": 3.1001321349223578, "exact": 2.9659435434908786}
GAMMA_CASES = {  # (M, N): (rho0, exact rho_min, mean-SNR rho_min) at P = 0.05
    (1, 1): (71.789569228421648, 9.3631756802460688, 9.4107463767408565),
    (2, 1): (22.542421085958202, 5.9202922803169309, 5.9542945898493437),
    (1, 4): (3.1071217137040057, 1.3699161211183126, 1.3938346185124618),
}
RMT_1 = (0.38196601125010515, 0.58045763886910174, 0.39712050299897222)
RMT_10 = (0.72984378812835757, 1.8876660614695360, 0.87219482700010303)
MIMO4_RHO0 = 11.931118670778379
MIMO4_RHO_MIN = 7.0256655064187585
MIMO4_DETERMINISTIC_LIMIT = 7.4294644746621274


def test_gamma_sum_outage_examples():
    assert gamma_sum_outage(GammaTailParams(1, 0.38399)) == pytest.approx(1 - math.exp(-0.38399))
    assert gamma_sum_outage(GammaTailParams(4, 4.0)) == pytest.approx(0.566529879633290, rel=1e-12)
    assert gamma_sum_outage(GammaTailParams(7, 1e-12)) < 1e-80


@pytest.mark.parametrize("bad", [(0, 1.0), (2.5, 1.0), (2, -1.0)])
def test_gamma_params_validation(bad):
    with pytest.raises(ValueError):
        GammaTailParams(*bad)


def test_siso_outage_example():
    assert miso_outage(10.0, SISO) == pytest.approx(SISO_OUTAGE_AT_10, rel=1e-13)
    assert simo_outage(10.0, SISO) == miso_outage(10.0, SISO)


def test_siso_inverse_example():
    cfg = SystemConfig(1, 1, 25, 1, 1.44, SISO_OUTAGE_AT_10)
    assert fixed_power(cfg).rho0 == pytest.approx(10.0, rel=1e-9)


@pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
@pytest.mark.parametrize("t_extra", [0, 3])
@pytest.mark.parametrize("rho", [0.1, 1.0, 10.0, 300.0])
def test_miso_simo_coincide_for_one_antenna(m, t_extra, rho):
    t = 1 + t_extra
    a = miso_outage(rho, SystemConfig(1, 1, 25, t, 1.44))
    b = simo_outage(rho, SystemConfig(1, 1, 25, t, 1.44))
    assert a == b


@pytest.mark.parametrize("engine,cfg", [
    ("miso", SystemConfig(4, 1, 25, 4, 1.44)),
    ("simo", SystemConfig(1, 4, 25, 1, 1.44)),
    ("mimo_rmt", SystemConfig(4, 4, 25, 4, 5.76)),
    ("mimo_rmt", SystemConfig(2, 8, 25, 3, 5.76)),
])
def test_outage_monotone_in_power_and_rate(engine, cfg):
    rhos = np.geomspace(0.5, 200, 60)
    values = [analytic.outage(r, cfg, engine) for r in rhos]
    inner = [v for v in values if 1e-300 < v < 1.0]
    assert len(inner) > 10
    assert all(b < a for a, b in zip(inner, inner[1:]))
    for rho in (2.0, 20.0):
        lo = analytic.outage(rho, cfg, engine)
        hi = analytic.outage(rho, SystemConfig(cfg.m_tx, cfg.n_rx, 25, cfg.training_symbols,
                                               cfg.target_rate_bits * 1.1), engine)
        assert hi > lo


def test_outage_limits():
    assert miso_outage(1e12, SystemConfig(4, 1, 25, 4, 1.44)) < 1e-40
    assert simo_outage(1e8, SystemConfig(1, 64, 25, 1, 1.44)) == pytest.approx(0.0, abs=1e-300)
    assert analytic.outage(0.0, SISO) == 1.0
    assert mimo_outage_rmt(1e9, MIMO4) < 1e-100


def test_simo_outage_vanishes_with_many_receivers():
    values = [simo_outage(1.0, SystemConfig(1, n, 25, 1, 1.44)) for n in (1, 4, 16, 64, 128)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-30


def test_engine_mismatch_raises_config_error():
    with pytest.raises(ConfigError):
        miso_outage(1.0, SystemConfig(1, 2, 25, 1, 1.0))
    with pytest.raises(ConfigError):
        simo_outage(1.0, SystemConfig(2, 1, 25, 2, 1.0))
    with pytest.raises(ValueError):
        analytic.outage(1.0, SISO, "nonsense")


def test_engine_inference():
    assert analytic.infer_engine(SISO) == "miso"
    assert analytic.infer_engine(SystemConfig(1, 3, 25, 1, 1.0)) == "simo"
    assert analytic.infer_engine(SystemConfig(3, 1, 25, 3, 1.0)) == "miso"
    assert analytic.infer_engine(MIMO4) == "mimo_rmt"


@pytest.mark.parametrize("mode", ["paper", "exact"])
def test_siso_adaptive_example(mode):
    result = gamma_adaptive_power(SISO, 10.0, mode=mode)
    assert result.rho_min == pytest.approx(SISO_ADAPTIVE_AT_10[mode], rel=1e-9)
    assert result.achieved_outage == pytest.approx(SISO_OUTAGE_AT_10, rel=1e-13)
    assert result.rho_min <= result.rho0


def test_siso_adaptive_truncated_mean():
    d = gamma_adaptive_power(SISO, 10.0).diagnostics
    assert d["omega0_sq"] == pytest.approx(0.38396969619669992, rel=1e-13)
    # (e^{R zeta} - 1) E1(omega0^2), mpmath
    assert d["mean_rho_eff"] == pytest.approx(1.3347870152807, rel=1e-12)
    assert d["mean_rho_eff"] == pytest.approx(1.336, abs=2e-3)
    assert d["mean_rho_eff"] == pytest.approx(
        float(effective_snr(SISO_ADAPTIVE_AT_10["paper"], 1.0)), rel=1e-12)


@pytest.mark.parametrize("mn", sorted(GAMMA_CASES))
def test_gamma_fixed_and_adaptive_goldens(mn):
    m, n = mn
    cfg = SystemConfig(m, n, 25, m, 1.44, 0.05)
    rho0_ref, exact_ref, mean_ref = GAMMA_CASES[mn]
    fixed = fixed_power(cfg)
    assert fixed.rho0 == pytest.approx(rho0_ref, rel=1e-9)
    assert fixed.achieved_outage <= 0.05
    assert abs(fixed.achieved_outage - 0.05) < 1e-9
    exact = gamma_adaptive_power(cfg, rho0_ref, mode="exact")
    mean_snr = gamma_adaptive_power(cfg, rho0_ref, mode="paper")
    assert exact.rho_min == pytest.approx(exact_ref, rel=1e-10)
    assert mean_snr.rho_min == pytest.approx(mean_ref, rel=1e-10)
    # transmit_snr is concave, so mapping the mean overstates the mean power
    assert exact.rho_min < mean_snr.rho_min < rho0_ref


def test_adaptive_power_vanishes_at_small_cap():
    for mode in ("paper", "exact"):
        assert gamma_adaptive_power(SISO, 1e-6, mode=mode).rho_min < 1e-9
    assert mimo_adaptive_power(MIMO4, 1e-3).rho_min == pytest.approx(0.0, abs=1e-12)


def test_miso2_untruncated_mean_is_finite():
    cfg = SystemConfig(2, 1, 25, 2, 1.44)
    k = 2 * math.expm1(1.44 * math.log(2) / (1 - 2 / 25))
    means = [gamma_adaptive_power(cfg, r).diagnostics["mean_rho_eff"] for r in (1e4, 1e8, 1e12)]
    assert means[-1] == pytest.approx(k, rel=1e-6)
    assert all(b > a for a, b in zip(means, means[1:]))


def test_adaptive_input_validation():
    with pytest.raises(ValueError):
        gamma_adaptive_power(SISO, 0.0)
    with pytest.raises(ValueError):
        gamma_adaptive_power(SISO, 10.0, mode="median")
    with pytest.raises(ValueError):
        gamma_adaptive_power(MIMO4, 10.0)


@pytest.mark.parametrize("rho_eff,ref", [(1.0, RMT_1), (10.0, RMT_10)])
def test_rmt_stats_examples(rho_eff, ref):
    s = rmt_stats(rho_eff, 1.0)
    assert s.alpha == pytest.approx(ref[0], rel=1e-13)
    assert s.mu == pytest.approx(ref[1], rel=1e-13)
    assert s.sigma == pytest.approx(ref[2], rel=1e-12)
    assert s.alpha == pytest.approx((3 - math.sqrt(5)) / 2 if rho_eff == 1 else s.alpha)


@pytest.mark.parametrize("c", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_rmt_stats_small_and_large_snr(c):
    tiny = rmt_stats(1e-9, c)
    assert tiny.mu == pytest.approx(c * 1e-9, rel=1e-6)
    assert tiny.alpha == pytest.approx(c * 1e-9, rel=1e-6)
    assert rmt_stats(1e12, c).alpha == pytest.approx(min(1.0, c), rel=1e-5)
    prev = 0.0
    for r in np.geomspace(1e-8, 1e12, 200):
        s = rmt_stats(float(r), c)
        assert s.mu > prev and math.isfinite(s.sigma) and s.sigma > 0
        assert s.alpha**2 / c < 1
        prev = s.mu


def test_rmt_stats_domain():
    with pytest.raises(ValueError):
        rmt_stats(0.0, 1.0)
    with pytest.raises(ValueError):
        rmt_stats(1.0, -1.0)


def test_mimo_outage_worked_point():
    # 2x2 at rho_eff = 10 with a 2-nat target
    s = rmt_stats(10.0, 1.0)
    assert qfunc((2 * s.mu - 2.0) / s.sigma) == pytest.approx(0.020901472553298260, rel=1e-12)


def test_mimo_outage_median_point():
    cfg = MIMO4
    s = rmt_stats(float(effective_snr(MIMO4_RHO0, 1.0)), 1.0)
    rate_nats = 4 * s.mu
    bits = rate_nats * (1 - 4 / 25) / math.log(2)
    median_cfg = SystemConfig(4, 4, 25, 4, bits)
    assert mimo_outage_rmt(MIMO4_RHO0, median_cfg) == pytest.approx(0.5, abs=1e-12)
    assert mimo_outage_rmt(MIMO4_RHO0, cfg) == pytest.approx(0.05, abs=1e-9)


def test_mimo_fixed_and_adaptive_goldens():
    fixed = fixed_power(MIMO4)
    assert fixed.rho0 == pytest.approx(MIMO4_RHO0, rel=1e-9)
    adaptive = mimo_adaptive_power(MIMO4, MIMO4_RHO0)
    assert adaptive.rho_min == pytest.approx(MIMO4_RHO_MIN, rel=1e-8)
    assert adaptive.rho_min < MIMO4_RHO0
    assert adaptive.residual <= 1e-10


def test_mimo_adaptive_deterministic_limit():
    result = mimo_adaptive_power(MIMO4, MIMO4_RHO0, sigma=1e-6)
    assert result.rho_min == pytest.approx(MIMO4_DETERMINISTIC_LIMIT, rel=1e-5)


@pytest.mark.parametrize("engine,cfg", [
    ("miso", SystemConfig(6, 1, 25, 6, 1.44, 0.05)),
    ("simo", SystemConfig(1, 8, 25, 2, 1.44, 0.01)),
    ("mimo_rmt", SystemConfig(3, 5, 40, 7, 4.0, 0.1)),
    ("mimo_rmt", SystemConfig(8, 4, 25, 8, 5.75, 0.05)),
])
def test_fixed_power_postconditions(engine, cfg):
    r = fixed_power(cfg, engine)
    p = cfg.outage_threshold
    assert r.achieved_outage <= p
    assert analytic.outage(r.rho0, cfg, engine) <= p
    assert analytic.outage(r.rho0 * (1 - 1e-4), cfg, engine) > p
    both = analytic.min_power(cfg, engine)
    assert 0 < both.rho_min <= both.rho0 == r.rho0


def test_fixed_power_loose_threshold_goes_to_zero():
    powers = [fixed_power(SystemConfig(1, 1, 25, 1, 1.44, p)).rho0
              for p in (0.9, 0.999, 1 - 1e-6, 1 - 1e-12)]
    assert powers[1] < 1.0  # below 0 dB
    assert all(b < a for a, b in zip(powers, powers[1:]))
    # the threshold on the gain grows only like -ln(1 - P), so the approach to 0 is slow
    assert powers[-1] < 0.35


def test_fixed_power_threshold_domain():
    with pytest.raises(ValueError):
        fixed_power(SystemConfig(1, 1, 25, 1, 1.44, 0.0))


def test_batch_matches_scalar():
    ts = np.arange(4, 25)
    rho0, achieved, _ = analytic.fixed_power_batch("mimo_rmt", 4, 4, ts, 25, 5.76, 0.05)
    for t, r in zip(ts[::5], rho0[::5]):
        cfg = SystemConfig(4, 4, 25, int(t), 5.76, 0.05)
        assert fixed_power(cfg).rho0 == r
    rmin = analytic.adaptive_power_batch("mimo_rmt", rho0, 4, 4, ts, 25, 5.76)
    assert np.all(rmin < rho0)


def test_infeasible_cells_are_infinite():
    # almost all of the block is training, so the rate target is astronomically high
    rho0, _, _ = analytic.fixed_power_batch("miso", 1, 1, np.array([1, 999]), 1000, 16.0, 0.01)
    assert math.isfinite(rho0[0]) and math.isinf(rho0[1])


def test_power_result_db():
    r = analytic.PowerResult(rho0=100.0, rho_min=10.0, achieved_outage=0.05)
    assert r.rho0_db == pytest.approx(20.0) and r.rho_min_db == pytest.approx(10.0)
    assert analytic.PowerResult(1.0, None, 0.0).rho_min_db is None
    assert transmit_snr(effective_snr(r.rho0, 2.0), 2.0) == pytest.approx(100.0)
