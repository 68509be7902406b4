"""Command-line front end.

Every subcommand reads a scenario file (see :mod:`mimopower.scenario`).
Exit codes: 0 on success, 1 when ``validate`` finds a check beyond
tolerance, 2 on a configuration error.
"""

import argparse
import dataclasses
import json
import sys

from . import analytic, montecarlo, optimizer, validation
from .channel import ConfigError
from .scenario import format_table, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _mc_settings(scn, args):
    overrides = {}
    for name in ("seed", "trials", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    try:
        return dataclasses.replace(scn.mc, **overrides)
    except ValueError as exc:
        raise ConfigError("mc", str(exc)) from None


def _db_to_linear(db):
    return 10.0 ** (db / 10.0)


def cmd_outage(scn, args):
    cfg = scn.system
    rho = _db_to_linear(args.rho_db)
    engine = scn.engine or analytic.infer_engine(cfg)
    p = analytic.outage(rho, cfg, engine)
    print(f"engine={engine}")
    print(f"rho_db={args.rho_db!r} rho={rho!r}")
    print(f"outage={p!r}")
    if args.mc:
        mc = _mc_settings(scn, args)
        p_hat, se = montecarlo.empirical_outage(rho, cfg, mc)
        print(f"mc_outage={p_hat!r} mc_stderr={se!r} trials={mc.trials} seed={mc.seed}")
    return EXIT_OK


def _single_row(cfg, result):
    return optimizer.SweepRow(cfg.m_tx, cfg.n_rx, cfg.training_symbols, cfg.coherence_symbols,
                              float(cfg.target_rate_bits), float(cfg.outage_threshold),
                              float(result.rho0_db), float(result.rho_min_db),
                              float(result.achieved_outage))


def cmd_min_power(scn, args):
    cfg = scn.system
    mode = args.averaging or scn.search.averaging
    engine = scn.engine or analytic.infer_engine(cfg)
    result = analytic.min_power(cfg, engine, mode)
    print(f"engine={engine} averaging={mode}")
    print(f"rho0_db={result.rho0_db!r} rho0={result.rho0!r}")
    print(f"rho_min_db={result.rho_min_db!r} rho_min={result.rho_min!r}")
    print(f"achieved_outage={result.achieved_outage!r}")
    if args.output:
        _emit(format_table([_single_row(cfg, result)], scn.output_format), args.output)
    return EXIT_OK


def _search(scn, args):
    space = scn.search
    if getattr(args, "scheme", None):
        space = dataclasses.replace(space, scheme=args.scheme)
    return space


def cmd_optimize(scn, args):
    space = _search(scn, args)
    result = optimizer.optimize(space, scn.system, scn.engine)
    b = result.best
    print(f"# argmin scheme={result.scheme} m={b.m} n={b.n} t={b.t} "
          f"rho0_db={b.rho0_db!r} rho_min_db={b.rho_min_db!r}", file=sys.stderr)
    _emit(format_table(result.table, scn.output_format), args.output or scn.output_path)
    return EXIT_OK


def _parse_values(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError("values", f"expected comma-separated integers, got {text!r}") from None


def cmd_sweep(scn, args):
    over = args.over or scn.sweep_over
    values = _parse_values(args.values) if args.values else scn.sweep_values
    space = _search(scn, args)
    if over == "T":
        if not values:
            raise ConfigError("sweep_values", "a T sweep needs explicit values")
        rows = optimizer.sweep_coherence(scn.system, values, scn.engine, space)
    else:
        key = over.lower()
        if values:
            rng = (min(values), max(values))
            space = dataclasses.replace(space, **({"m_range": rng} if key == "m" else {"n_range": rng}))
        rows = optimizer.sweep_antennas(space, scn.system, scn.engine, key=key)
        if values:
            rows = [row for row in rows if getattr(row, key) in values]
    _emit(format_table(rows, scn.output_format), args.output or scn.output_path)
    return EXIT_OK


def cmd_validate(scn, args):
    mc = _mc_settings(scn, args) if scn is not None else _mc_from_args(args)
    checks = validation.run_all(mc)
    for check in checks:
        print(check.line())
    failures = [c.as_dict() for c in checks if not (c.passed or c.informational)]
    report = {"seed": mc.seed, "trials": mc.trials, "checks": len(checks),
              "failures": failures}
    if args.output:
        _emit(json.dumps({**report, "results": [c.as_dict() for c in checks]}, indent=2,
                         default=str) + "\n", args.output)
    if failures:
        json.dump(report, sys.stderr, indent=2, default=str)
        sys.stderr.write("\n")
        return EXIT_VALIDATION
    print(f"all {len(checks)} checks passed")
    return EXIT_OK


def _mc_from_args(args):
    try:
        return montecarlo.McSettings(
            trials=args.trials if args.trials is not None else 100_000,
            seed=args.seed if args.seed is not None else 0,
            workers=args.workers if args.workers is not None else 1)
    except ValueError as exc:
        raise ConfigError("mc", str(exc)) from None


def cmd_lte(scn, args):
    if scn.mobility is None:
        raise ConfigError("speed_kmh", "lte needs mobility settings in the scenario")
    cfg = scn.system
    report = optimizer.lte_scenario_report(scn.mobility, cfg.n_rx, cfg.target_rate_bits,
                                           cfg.outage_threshold, m_max=args.m_max)
    for line in report.lines():
        print(line)
    if args.output:
        _emit(format_table(report.per_m, scn.output_format), args.output)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mimopower",
        description="Outage and minimum-power analysis for training-based multi-antenna links.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, scenario_required=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", nargs=None if scenario_required else "?",
                       help="scenario file (key = value lines)")
        p.set_defaults(func=func)
        return p

    p = add("outage", cmd_outage, "outage probability at a given SNR")
    p.add_argument("--rho-db", type=float, required=True,
                   help="transmit SNR in dB (-inf means zero power)")
    p.add_argument("--mc", action="store_true", help="also report the Monte-Carlo estimate")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)

    p = add("min-power", cmd_min_power, "minimum fixed and adaptive power")
    p.add_argument("--averaging", choices=analytic.AVERAGING_MODES)
    p.add_argument("--output", help="also write a one-row table here")

    p = add("optimize", cmd_optimize, "search antennas and training length; emit the full grid")
    p.add_argument("--scheme", choices=("fixed", "adaptive"))
    p.add_argument("--output", help="table path (default: scenario 'path' or stdout)")

    p = add("sweep", cmd_sweep, "best row per value of T, M or N")
    p.add_argument("--over", choices=("T", "M", "N"))
    p.add_argument("--values", help="comma-separated integers")
    p.add_argument("--scheme", choices=("fixed", "adaptive"))
    p.add_argument("--output", help="table path (default: scenario 'path' or stdout)")

    p = add("validate", cmd_validate, "analytic-vs-Monte-Carlo agreement suite",
            scenario_required=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", help="write the full JSON report here")

    p = add("lte", cmd_lte, "mobility scenario: optimal antennas and suboptimal-M penalties")
    p.add_argument("--m-max", type=int, default=32)
    p.add_argument("--output", help="write the per-M table here")
    return parser


def _join_negative_values(argv):
    # argparse reads "--rho-db -inf" as two options; glue the value on
    out = []
    it = iter(argv)
    for arg in it:
        if arg == "--rho-db":
            value = next(it, None)
            out.append(arg if value is None else f"{arg}={value}")
        else:
            out.append(arg)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        scn = load_scenario(args.scenario) if args.scenario else None
        return args.func(scn, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
