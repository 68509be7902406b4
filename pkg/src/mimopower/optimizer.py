"""Grid search over antenna counts and training length for minimum power.

Every cell ``(M, N, t)`` of the grid is solved by the analytic engines;
training lengths for one ``(M, N)`` pair go through a single vectorized
bisection.  Very long blocks switch the ``t`` search to a geometric grid
refined around its minimum, which assumes power is unimodal in ``t``.  Tables come back in lexicographic ``(m, n, t)`` order and the
argmin tie-break is smallest ``M``, then ``N``, then ``t``.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analytic
from .channel import ConfigError, SystemConfig, to_db

__all__ = [
    "SPEED_OF_LIGHT",
    "InfiniteCoherenceError",
    "MobilityScenario",
    "SearchSpace",
    "SweepRow",
    "OptimizeResult",
    "LteReport",
    "coherence_symbols",
    "evaluate_cells",
    "optimize",
    "best_per",
    "sweep_antennas",
    "sweep_coherence",
    "lte_scenario_report",
]

SPEED_OF_LIGHT = 2.998e8
TABLE_FIELDS = ("m", "n", "t", "T", "rate_bits", "outage_target",
                "rho0_db", "rho_min_db", "achieved_outage")


class InfiniteCoherenceError(ValueError):
    """A stationary terminal has no finite coherence time."""


@dataclass(frozen=True)
class MobilityScenario:
    speed: float  # m/s
    carrier_freq: float  # Hz
    symbol_duration: float  # s

    def __post_init__(self):
        if self.speed < 0 or not math.isfinite(self.speed):
            raise ConfigError("speed", f"must be nonnegative, got {self.speed!r}")
        if not self.carrier_freq > 0:
            raise ConfigError("carrier_freq", f"must be positive, got {self.carrier_freq!r}")
        if not self.symbol_duration > 0:
            raise ConfigError("symbol_duration", f"must be positive, got {self.symbol_duration!r}")

    @classmethod
    def from_kmh(cls, speed_kmh, carrier_freq, symbol_duration):
        return cls(speed_kmh / 3.6, carrier_freq, symbol_duration)


def doppler_coherence_time(doppler_hz):
    # the 1/f_d convention; swap here for 0.423/f_d and similar variants
    return 1.0 / doppler_hz


def coherence_symbols(scn):
    """Coherence time in symbols, ``round(1 / (f_d * symbol_duration))``."""
    if scn.speed == 0:
        raise InfiniteCoherenceError("zero speed: the channel never decorrelates")
    doppler = scn.speed * scn.carrier_freq / SPEED_OF_LIGHT
    return max(1, round(doppler_coherence_time(doppler) / scn.symbol_duration))


@dataclass(frozen=True)
class SearchSpace:
    """Grid to search.

    ``t_policy`` is ``"optimize"`` (every integer ``t`` in ``[M, T-1]``)
    or ``"fixed-tau"`` (``t = ceil(tau * M)``).  ``scheme`` picks the
    objective: ``"fixed"`` minimizes ``rho0``, ``"adaptive"`` minimizes
    ``rho_min``.  ``square`` ties ``N = M``.
    """

    m_range: tuple = (1, 16)
    n_range: tuple | None = None
    t_policy: str = "optimize"
    tau: float = 1.0
    scheme: str = "fixed"
    square: bool = False
    averaging: str = "paper"

    def __post_init__(self):
        lo, hi = self.m_range
        if not 1 <= lo <= hi:
            raise ConfigError("m_range", f"needs 1 <= lo <= hi, got {self.m_range}")
        if self.n_range is not None:
            nlo, nhi = self.n_range
            if not 1 <= nlo <= nhi:
                raise ConfigError("n_range", f"needs 1 <= lo <= hi, got {self.n_range}")
        if self.t_policy not in ("optimize", "fixed-tau"):
            raise ConfigError("t_policy", f"unknown policy {self.t_policy!r}")
        if self.t_policy == "fixed-tau" and not self.tau >= 1:
            raise ConfigError("tau", f"must be >= 1, got {self.tau}")
        if self.scheme not in ("fixed", "adaptive"):
            raise ConfigError("scheme", f"unknown scheme {self.scheme!r}")
        if self.averaging not in analytic.AVERAGING_MODES:
            raise ConfigError("averaging", f"unknown mode {self.averaging!r}")


@dataclass(frozen=True)
class SweepRow:
    m: int
    n: int
    t: int
    T: int
    rate_bits: float
    outage_target: float
    rho0_db: float
    rho_min_db: float
    achieved_outage: float

    def as_dict(self):
        return asdict(self)

    def objective(self, scheme):
        return self.rho0_db if scheme == "fixed" else self.rho_min_db


@dataclass
class OptimizeResult:
    best: SweepRow
    table: list = field(default_factory=list)
    scheme: str = "fixed"


# above this many candidate training lengths the t search goes coarse-to-fine
DENSE_T_LIMIT = 2048
COARSE_T_POINTS = 256


def _training_lengths(m, T, space):
    if space.t_policy == "fixed-tau":
        t = math.ceil(space.tau * m - 1e-9)
        return np.array([t]) if m <= t < T else np.array([], dtype=int)
    return np.arange(m, T)


def _search_training(engine, m, n, template, space, lo, hi):
    # every t in [lo, hi] when small; else a geometric grid, refined around its best point
    if hi - lo + 1 <= DENSE_T_LIMIT:
        return evaluate_cells(engine, m, n, np.arange(lo, hi + 1), template, space.averaging)
    grid = np.unique(np.round(np.geomspace(lo, hi, COARSE_T_POINTS)).astype(int))
    rows = evaluate_cells(engine, m, n, grid, template, space.averaging)
    if not rows:
        return rows
    k = int(np.searchsorted(grid, _argmin(rows, space.scheme).t))
    inner_lo, inner_hi = int(grid[max(k - 1, 0)]), int(grid[min(k + 1, grid.size - 1)])
    refined = _search_training(engine, m, n, template, space, inner_lo, inner_hi)
    merged = {row.t: row for row in rows}
    merged.update({row.t: row for row in refined})
    return [merged[t] for t in sorted(merged)]


def _cells_for_pair(engine, m, n, template, space):
    T = template.coherence_symbols
    if space.t_policy == "fixed-tau":
        return evaluate_cells(engine, m, n, _training_lengths(m, T, space), template,
                              space.averaging)
    return _search_training(engine, m, n, template, space, m, T - 1)


def evaluate_cells(engine, m, n, t_values, template, averaging="paper"):
    """Solve fixed and adaptive power for one ``(m, n)`` over ``t_values``."""
    t_values = np.asarray(t_values)
    if t_values.size == 0:
        return []
    T = template.coherence_symbols
    R = template.target_rate_bits
    P = template.outage_threshold
    rho0, achieved, _ = analytic.fixed_power_batch(engine, m, n, t_values, T, R, P)
    rho_min = analytic.adaptive_power_batch(engine, rho0, m, n, t_values, T, R, mode=averaging)
    rows = []
    for t, r0, rm, ach in zip(t_values, rho0, rho_min, achieved):
        if not np.isfinite(r0):
            continue  # no power in range meets the target
        rows.append(SweepRow(int(m), int(n), int(t), int(T), float(R), float(P),
                             to_db(float(r0)), to_db(float(rm)), float(ach)))
    return rows


def _antenna_pairs(space, template):
    mlo, mhi = space.m_range
    for m in range(mlo, mhi + 1):
        if space.square:
            yield m, m
        elif space.n_range is None:
            yield m, template.n_rx
        else:
            for n in range(space.n_range[0], space.n_range[1] + 1):
                yield m, n


def _engine_for(m, n, engine):
    if engine is not None:
        return engine
    if n == 1:
        return "miso"
    if m == 1:
        return "simo"
    return "mimo_rmt"


def _argmin(rows, scheme):
    # rows arrive in (m, n, t) order, so the first strict minimum wins ties
    best = None
    for row in rows:
        if best is None or row.objective(scheme) < best.objective(scheme):
            best = row
    return best


def optimize(space, template, engine=None):
    """Exhaustive search; returns the argmin row and the full table."""
    rows = []
    T = template.coherence_symbols
    for m, n in _antenna_pairs(space, template):
        if m >= T:
            continue
        rows.extend(_cells_for_pair(_engine_for(m, n, engine), m, n, template, space))
    if not rows:
        raise ConfigError("m_range", f"no feasible (M, t) with M <= t < T={T}")
    return OptimizeResult(best=_argmin(rows, space.scheme), table=rows, scheme=space.scheme)


def best_per(rows, key, scheme="fixed"):
    """Best row for each distinct value of ``key`` (e.g. ``"m"`` or ``"T"``), in order."""
    groups = {}
    for row in rows:
        groups.setdefault(getattr(row, key), []).append(row)
    return [_argmin(groups[k], scheme) for k in sorted(groups)]


def sweep_antennas(space, template, engine=None, key="m"):
    """Best row per antenna count ``key`` (``"m"`` or ``"n"``), ``t`` optimized per count."""
    result = optimize(space, template, engine)
    return best_per(result.table, key, space.scheme)


def sweep_coherence(template, T_values, engine=None, space=None):
    """Minimum power at fixed ``(M, N)`` for each coherence time, ``t`` optimized per ``T``."""
    space = space or SearchSpace(m_range=(template.m_tx, template.m_tx))
    rows = []
    for T in T_values:
        if template.m_tx >= T:
            raise ConfigError("coherence_symbols", f"T={T} leaves no room for t >= M={template.m_tx}")
        cfg = SystemConfig(template.m_tx, template.n_rx, int(T), template.m_tx,
                           template.target_rate_bits, template.outage_threshold)
        eng = _engine_for(template.m_tx, template.n_rx, engine)
        cells = _cells_for_pair(eng, template.m_tx, template.n_rx, cfg, space)
        if not cells:
            raise ConfigError("coherence_symbols", f"no feasible training length at T={T}")
        rows.append(_argmin(cells, space.scheme))
    return rows


@dataclass
class LteReport:
    coherence_symbols: int
    best: SweepRow
    per_m: list
    compare: dict  # M -> best SweepRow at that M
    penalty_db: dict  # M -> dB above the optimum
    power_ratio: dict  # M -> optimum power / power at M (linear)
    adaptive_ratio: float  # rho_min / rho0 at the optimum

    def lines(self):
        b = self.best
        out = [
            f"coherence_symbols={self.coherence_symbols}",
            f"optimum m={b.m} n={b.n} t={b.t} rho0_db={b.rho0_db:.4f} rho_min_db={b.rho_min_db:.4f}",
        ]
        for m in sorted(self.compare):
            row = self.compare[m]
            out.append(f"m={m} t={row.t} rho0_db={row.rho0_db:.4f} "
                       f"penalty_db={self.penalty_db[m]:.4f} "
                       f"optimum_power_ratio={self.power_ratio[m]:.4f}")
        out.append(f"adaptive_to_fixed_ratio={self.adaptive_ratio:.4f}")
        return out


def lte_scenario_report(scn, n_rx, rate_bits, outage, m_max=32, compare_m=(4, 16)):
    """Mobility scenario -> coherence time -> optimal ``(M, t)`` and suboptimal-M penalties."""
    T = coherence_symbols(scn)
    template = SystemConfig(1, n_rx, T, 1, rate_bits, outage)
    space = SearchSpace(m_range=(1, min(m_max, T - 1)))
    result = optimize(space, template)
    per_m = best_per(result.table, "m")
    by_m = {row.m: row for row in per_m}
    b = result.best
    compare = {m: by_m[m] for m in compare_m if m in by_m}
    penalty = {m: row.rho0_db - b.rho0_db for m, row in compare.items()}
    ratio = {m: 10 ** (-p / 10.0) for m, p in penalty.items()}
    adaptive_ratio = 10 ** ((b.rho_min_db - b.rho0_db) / 10.0)
    return LteReport(T, b, per_m, compare, penalty, ratio, adaptive_ratio)
