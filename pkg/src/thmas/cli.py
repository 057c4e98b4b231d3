"""Command-line front end: ``thmas run|verify|bench``.

Exit codes: 0 success, 1 failed check or benchmark, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from .engine import (
    ConfigError,
    ScenarioConfig,
    builtin_names,
    builtin_scenario,
    check_practical_consensus_rate,
    evaluate_benchmark,
    run_scenario,
    write_trace_csv,
)
from .switching import family_size
from .verify import theorem1_certificate

log = logging.getLogger("thmas")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_VERIFY = {"N": 3, "sigma": 2, "w": 1.0, "k_fb": 0.2, "x_L": 5.0, "seed": 0, "tol": 1e-6, "M": None}


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thmas", description="Leader-follower consensus with switching active-agent sets.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "simulate a scenario and write its CSV trace"),
        ("verify", "certify the consensus conditions and write a JSON report"),
        ("bench", "run a built-in benchmark and report its metrics"),
    ):
        p = sub.add_parser(name, help=help_text)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--builtin", choices=builtin_names(), help="built-in scenario name")
        src.add_argument("--config", help="path to a JSON scenario file")
        p.add_argument("-o", "--output", help="output file path")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field (dotted path), may repeat")
        p.add_argument("--dump-config", action="store_true", help="print the resolved config as JSON and exit")
    return parser


def _config_dict(args) -> Optional[dict]:
    if args.builtin:
        return cfgmod.config_to_dict(builtin_scenario(args.builtin))
    if args.config:
        return cfgmod.load_config_dict(args.config)
    return None


def resolve_config(args, check_gain: bool = True) -> Optional[ScenarioConfig]:
    data = _config_dict(args)
    if data is None:
        return None
    if args.overrides:
        data = cfgmod.apply_overrides(data, args.overrides, allowed=cfgmod.CONFIG_FIELDS)
    cfg = cfgmod.config_from_dict(data, check_gain=check_gain)
    return cfg


def _write_text(path: Optional[str], text: str) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    if cfg is None:
        raise UsageError("run requires --builtin or --config")
    if not args.output:
        raise UsageError("run requires -o/--output")
    trace = run_scenario(cfg)
    with open(args.output, "w", newline="") as fh:
        write_trace_csv(trace, fh)
    report = evaluate_benchmark(cfg, trace)
    print(f"scenario {cfg.name}: {len(trace)} ticks written to {args.output}")
    print(f"final consensus error: {trace[-1].consensus_error:.6g}")
    for s in report.segments:
        if cfg.quantized:
            lc = s.limit_cycle
            print(f"  sigma={s.sigma} ticks [{s.start},{s.stop}): limit cycle detected={lc.detected} "
                  f"amplitude={lc.amplitude:.6g} period={lc.period_ticks}")
        else:
            print(f"  sigma={s.sigma} ticks [{s.start},{s.stop}): final error {s.final_error:.3g}, "
                  f"ticks to {report.tol:g}: {s.ticks_to_tolerance}")
    if not check_practical_consensus_rate(cfg):
        print(f"warning: M={cfg.M} is shorter than {cfg.c} sweeps of some graph family")
    return EXIT_OK


def _certificates(args) -> list:
    cfg = resolve_config(args, check_gain=False)
    if cfg is None:
        params = cfgmod.apply_overrides(DEFAULT_VERIFY, args.overrides)
        try:
            n, sigma, seed = int(params["N"]), int(params["sigma"]), int(params["seed"])
            rng = np.random.default_rng(seed)
            x0 = list(rng.uniform(0.0, 10.0, n)) + [float(params["x_L"])]
            return [theorem1_certificate(n, sigma, float(params["w"]), float(params["k_fb"]), x0,
                                         tol=float(params["tol"]), M=params["M"])]
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad verify parameter: {exc}") from exc
    x0 = list(cfg.x0)
    x0[-1] = cfg.leader_value(cfg.schedule[0].u_L)
    # The certificate's tick budget is 10*M*p; never let a short scenario M starve it.
    return [theorem1_certificate(cfg.N, s, cfg.w, cfg.k_fb, x0, c=cfg.c,
                                 M=max(cfg.M, cfg.c * family_size(cfg.N, s), 100))
            for s in cfg.sigmas]


def cmd_verify(args) -> int:
    certs = _certificates(args)
    passed = all(c.passed for c in certs)
    doc = {"passed": passed, "certificates": [c.to_dict() for c in certs]}
    _write_text(args.output, json.dumps(doc, indent=2) + "\n")
    for c in certs:
        failed = [ch.name for ch in c.checks if not ch.passed]
        status = "PASS" if c.passed else "FAIL " + ",".join(failed)
        print(f"N={c.N} sigma={c.sigma} w={c.w:g} k_fb={c.k_fb:g}: {status}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_bench(args) -> int:
    if not args.builtin:
        raise UsageError("bench requires --builtin")
    cfg = resolve_config(args)
    report = evaluate_benchmark(cfg)
    print(f"benchmark {cfg.name}: {'PASS' if report.passed else 'FAIL'}")
    for s in report.segments:
        if cfg.quantized:
            lc = s.limit_cycle
            print(f"  sigma={s.sigma}: limit cycle amplitude {lc.amplitude:.6g} (|w|={abs(cfg.w):g}), "
                  f"period {lc.period_ticks}")
        else:
            print(f"  sigma={s.sigma}: ticks to {report.tol:g} = {s.ticks_to_tolerance}, final error {s.final_error:.3g}")
    if args.output:
        _write_text(args.output, json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("THMAS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.dump_config:
            cfg = resolve_config(args, check_gain=False)
            if cfg is None:
                raise UsageError("--dump-config requires --builtin or --config")
            print(cfgmod.dump_config(cfg))
            return EXIT_OK
        return COMMANDS[args.command](args)
    except (UsageError, cfgmod.OverrideError, cfgmod.ConfigFileError, ConfigError) as exc:
        print(f"thmas {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("unhandled failure", exc_info=True)
        print(f"thmas {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
