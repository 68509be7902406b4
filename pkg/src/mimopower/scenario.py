"""Scenario files and table writers.

A scenario is flat ``key = value`` text; ``#`` starts a comment.  Keys::

    # system (coherence_symbols, or the mobility keys, but not both)
    m_tx, n_rx, coherence_symbols, training_symbols, target_rate_bits,
    outage_threshold
    # mobility
    speed_kmh | speed_mps, carrier_freq_hz, symbol_duration_s
    # search
    m_min, m_max, n_min, n_max, square, t_policy, tau, scheme, averaging,
    engine
    # sweeps
    sweep_over (T | M | N), sweep_values (comma separated)
    # monte carlo
    trials, seed, confidence_z, workers
    # output
    format (csv | json), path

``training_symbols`` defaults to ``m_tx``.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .analytic import AVERAGING_MODES, ENGINES
from .channel import ConfigError, SystemConfig
from .montecarlo import McSettings
from .optimizer import TABLE_FIELDS, MobilityScenario, SearchSpace, coherence_symbols

__all__ = ["Scenario", "parse_scenario", "load_scenario", "write_table", "format_table"]

_INT_KEYS = {"m_tx", "n_rx", "coherence_symbols", "training_symbols", "m_min", "m_max",
             "n_min", "n_max", "trials", "seed", "workers"}
_FLOAT_KEYS = {"target_rate_bits", "outage_threshold", "speed_kmh", "speed_mps",
               "carrier_freq_hz", "symbol_duration_s", "tau", "confidence_z"}
_STR_KEYS = {"t_policy", "scheme", "averaging", "engine", "sweep_over", "sweep_values",
             "format", "path"}
_BOOL_KEYS = {"square"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _BOOL_KEYS


@dataclass
class Scenario:
    system: SystemConfig
    mobility: MobilityScenario | None = None
    search: SearchSpace = field(default_factory=SearchSpace)
    mc: McSettings = field(default_factory=McSettings)
    engine: str | None = None
    sweep_over: str = "M"
    sweep_values: tuple | None = None
    output_format: str = "csv"
    output_path: str | None = None


def _convert(key, raw):
    try:
        if key in _INT_KEYS:
            try:
                return int(raw)
            except ValueError:
                value = float(raw)  # allow forms like 1e5
            if not value.is_integer():
                raise ValueError
            return int(value)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _BOOL_KEYS:
            lowered = raw.lower()
            if lowered not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError
            return lowered in ("true", "yes", "1")
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None
    return raw


def _parse_pairs(text):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, "given twice")
        values[key] = _convert(key, raw)
    return values


def _mobility(values):
    keys = {"speed_kmh", "speed_mps", "carrier_freq_hz", "symbol_duration_s"}
    present = keys & values.keys()
    if not present:
        return None
    if "speed_kmh" in values and "speed_mps" in values:
        raise ConfigError("speed_kmh", "give speed_kmh or speed_mps, not both")
    for key in ("carrier_freq_hz", "symbol_duration_s"):
        if key not in values:
            raise ConfigError(key, "required with mobility settings")
    if "speed_kmh" in values:
        speed = values["speed_kmh"] / 3.6
    elif "speed_mps" in values:
        speed = values["speed_mps"]
    else:
        raise ConfigError("speed_kmh", "required with mobility settings")
    return MobilityScenario(speed, values["carrier_freq_hz"], values["symbol_duration_s"])


def parse_scenario(text):
    """Parse scenario text; raises :class:`ConfigError` naming the bad field."""
    values = _parse_pairs(text)
    mobility = _mobility(values)
    if mobility is not None and "coherence_symbols" in values:
        raise ConfigError("coherence_symbols", "give coherence_symbols or mobility, not both")
    if mobility is None and "coherence_symbols" not in values:
        raise ConfigError("coherence_symbols", "required (or give mobility settings)")
    T = coherence_symbols(mobility) if mobility is not None else values["coherence_symbols"]

    for key in ("m_tx", "n_rx", "target_rate_bits"):
        if key not in values:
            raise ConfigError(key, "required")
    m = values["m_tx"]
    system = SystemConfig(
        m_tx=m,
        n_rx=values["n_rx"],
        coherence_symbols=T,
        training_symbols=values.get("training_symbols", m),
        target_rate_bits=values["target_rate_bits"],
        outage_threshold=values.get("outage_threshold", 0.05),
    )

    n_range = None
    if "n_min" in values or "n_max" in values:
        n_range = (values.get("n_min", system.n_rx), values.get("n_max", system.n_rx))
    averaging = values.get("averaging", "paper")
    if averaging not in AVERAGING_MODES:
        raise ConfigError("averaging", f"expected one of {AVERAGING_MODES}, got {averaging!r}")
    search = SearchSpace(
        m_range=(values.get("m_min", m), values.get("m_max", m)),
        n_range=n_range,
        t_policy=values.get("t_policy", "optimize"),
        tau=values.get("tau", 1.0),
        scheme=values.get("scheme", "fixed"),
        square=values.get("square", False),
        averaging=averaging,
    )
    mc = McSettings(
        trials=values.get("trials", 100_000),
        seed=values.get("seed", 0),
        confidence_z=values.get("confidence_z", 3.0),
        workers=values.get("workers", 1),
    )

    engine = values.get("engine", "auto")
    if engine == "auto":
        engine = None
    elif engine not in ENGINES:
        raise ConfigError("engine", f"expected auto or one of {ENGINES}, got {engine!r}")

    sweep_over = values.get("sweep_over", "M")
    if sweep_over not in ("T", "M", "N"):
        raise ConfigError("sweep_over", f"expected T, M or N, got {sweep_over!r}")
    sweep_values = None
    if "sweep_values" in values:
        try:
            sweep_values = tuple(int(v) for v in values["sweep_values"].split(",") if v.strip())
        except ValueError:
            raise ConfigError("sweep_values", "expected comma-separated integers") from None

    fmt = values.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("format", f"expected csv or json, got {fmt!r}")
    return Scenario(system, mobility, search, mc, engine, sweep_over, sweep_values, fmt,
                    values.get("path"))


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def format_table(rows, fmt="csv"):
    """Render rows with the fixed table schema; floats use their shortest repr."""
    records = [row.as_dict() for row in rows]
    if fmt == "json":
        clean = [{k: _json_safe(rec[k]) for k in TABLE_FIELDS} for rec in records]
        return json.dumps(clean, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_FIELDS)
    for rec in records:
        writer.writerow([repr(rec[k]) if isinstance(rec[k], float) else rec[k]
                         for k in TABLE_FIELDS])
    return buf.getvalue()


def write_table(rows, fmt, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_table(rows, fmt))
