"""``pb`` command-line front end.

    pb run --config configs/ex1.json [--model ex1] [--nmax 8] [--out DIR] [--format json,csv,md] [--jobs N]
    pb run --canonical
    pb sweep --config sweep.json --grid eps=0.1,0.5,0.9 --grid xi=-1,1

Exit status is 0 iff every check at every run point passed, 1 if some
failed and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from .config import ConfigError, RunConfig, parse_config
from .report import emit_report
from .verify import CANONICAL, Report, run_suite


def _run_point(cfg: RunConfig, point: dict) -> Report:
    return run_suite(cfg.model, point, cfg.nmax, cfg.checks, cfg.tolerances, cfg.qb_nmax, cfg.seed, cfg.oracle)


def execute(configs: Sequence[RunConfig], jobs: int = 1) -> list[Report]:
    """Run every point of every config, preserving order."""
    tasks = [(cfg, p) for cfg in configs for p in cfg.points()]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_point(cfg, p) for cfg, p in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_point, *zip(*tasks)))


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, val = text.split("=", 1)
    return key.strip(), val.strip()


def _parse_number(path: str, text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise ConfigError(path, f"malformed value {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pb", description="Verify pseudo-bosonic structure of the example models.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run the check suite"), ("sweep", "run the suite over parameter grids")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", action="append", default=[], help="JSON configuration file (repeatable)")
        if name == "run":
            p.add_argument("--canonical", action="store_true", help="run the three canonical parameter sets")
        p.add_argument("--model", choices=["ex1", "ex2", "ex3"], help="override the model selector")
        p.add_argument("--nmax", type=int, help="highest total excitation n1+n2 for the state families")
        p.add_argument("--set", dest="params", action="append", type=_key_value, default=[], metavar="KEY=VALUE",
                       help="override a model parameter")
        p.add_argument("--grid", action="append", type=_key_value, default=[], metavar="KEY=V1,V2,...",
                       help="sweep a parameter over a list of values")
        p.add_argument("--checks", help="comma-separated subset of checks to run")
        p.add_argument("--out", help="directory for report files")
        p.add_argument("--format", help="comma-separated output formats: json,csv,md")
        p.add_argument("--jobs", type=int, default=1, help="run points in parallel processes")
        p.add_argument("--no-oracle", action="store_true", help="skip the slower independent oracles")
    return parser


def configs_from_args(args) -> list[RunConfig]:
    overrides: dict = {"model": args.model, "nmax": args.nmax}
    if args.params:
        overrides["params"] = {k: _parse_number(f"--set {k}", v) for k, v in args.params}
    if args.grid:
        overrides["sweep"] = {k: [_parse_number(f"--grid {k}", x) for x in v.split(",")] for k, v in args.grid}
    if args.checks is not None:
        overrides["checks"] = [c.strip() for c in args.checks.split(",") if c.strip()]
    if args.format:
        overrides["format"] = args.format
    if args.out:
        overrides["out"] = args.out
    if args.no_oracle:
        overrides["oracle"] = False
    sources: list = list(args.config)
    if getattr(args, "canonical", False):
        sources += [{"model": m, **p} for m, p in CANONICAL.items()]
    if not sources:
        sources = [None]
    configs = []
    for src in sources:
        try:
            configs.append(parse_config(src, **overrides))
        except ConfigError as exc:
            where = src if isinstance(src, str) else "<flags>"
            raise ConfigError(exc.path, f"{exc.reason} (in {where})") from None
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
    return configs


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configs = configs_from_args(args)
    except ConfigError as exc:
        print(f"pb: configuration error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    reports = execute(configs, max(1, args.jobs))
    elapsed = time.perf_counter() - t0
    for r in reports:
        label = ", ".join(f"{k}={v}" for k, v in r.params.items())
        status = "PASS" if r.passed else f"FAIL ({r.failures})"
        print(f"{r.model} [{label}] nmax={r.nmax}: {status}")
        for c in r.results:
            print(f"    {c.name:<18} {'pass' if c.passed else 'FAIL'}  dev={c.max_abs_deviation:.3e}  tol={c.tolerance:.1e}")
        if r.error:
            print(f"    error: {r.error}")
    out = next((c.out for c in configs if c.out), None)
    if out:
        formats = tuple(dict.fromkeys(f for c in configs for f in c.formats))
        try:
            paths = emit_report(reports, out, formats)
        except OSError as exc:
            print(f"pb: {exc}", file=sys.stderr)
            return 2
        print("wrote " + ", ".join(str(p) for p in paths))
    failures = sum(r.failures for r in reports)
    sys.stdout.flush()
    print(f"{len(reports)} run point(s) in {elapsed:.1f} s", file=sys.stderr)
    if failures:
        print(f"pb: {failures} check(s) failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
