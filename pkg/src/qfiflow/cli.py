"""Command-line entry point.

    qfiflow run <config> --out DIR [--dt DT] [--t-max T]
    qfiflow sweep <config> --param W --values 0.3,3.0 --out DIR
    qfiflow fig2 --out DIR

Exit codes: 0 clean, 2 invariant or tolerance violation, 3 configuration
error, 4 singularity abort during integration.
"""

import argparse
import logging
import sys
from pathlib import Path

from .config import parse_config
from .errors import ConfigError, QfiFlowError
from .runner import (
    EXIT_CONFIG,
    EXIT_INVARIANT,
    emit_fig2_panels,
    run_scenario,
    run_sweep,
    write_report,
    write_sweep,
)

logger = logging.getLogger("qfiflow")


def _overrides(args):
    out = {}
    if args.dt is not None:
        out["dt"] = args.dt
    if args.t_max is not None:
        out["t_max"] = args.t_max
    return out


def _load(path, overrides):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    return parse_config(text, overrides)


def _cmd_run(args):
    config = _load(args.config, _overrides(args))
    if config.sweep_param is not None:
        results = run_sweep(config)
        return write_sweep(config, results, args.out)
    report = run_scenario(config)
    write_report(report, args.out)
    if report.error:
        logger.error("%s", report.error)
    return report.exit_status


def _cmd_sweep(args):
    overrides = _overrides(args)
    overrides["sweep_param"] = args.param
    try:
        overrides["sweep_values"] = tuple(float(v) for v in args.values.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError([f"--values: {exc}"]) from exc
    config = _load(args.config, overrides)
    results = run_sweep(config)
    for entry, report in results:
        if report.error:
            logger.error("%s=%s: %s", config.sweep_param,
                         getattr(entry, "lam" if config.sweep_param == "lambda" else config.sweep_param),
                         report.error)
    return write_sweep(config, results, args.out)


def _cmd_fig2(args):
    kwargs = {"lam": args.lam}
    if args.dt is not None:
        kwargs["dt"] = args.dt
    if args.t_max is not None:
        kwargs["t_max"] = args.t_max
    try:
        paths = emit_fig2_panels(args.out, **kwargs)
    except QfiFlowError as exc:
        logger.error("%s", exc)
        return EXIT_INVARIANT
    for p in paths:
        print(p)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="qfiflow", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--dt", type=float, help="override the time step")
        p.add_argument("--t-max", dest="t_max", type=float, help="override the final time")

    p = sub.add_parser("run", help="run one scenario (or the sweep it defines)")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run a scenario over several values of one parameter")
    p.add_argument("config")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("fig2", help="write weak/strong coupling flow and rate panels")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="spectral width")
    common(p)
    p.set_defaults(func=_cmd_fig2)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
