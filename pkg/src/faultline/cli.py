"""Command-line entry point: ``faultline --scenario profile_login --out report/``.

Exit codes: 0 when every iteration passed, 1 when any iteration failed or
errored (including a failing baseline), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import importlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import BaselineFailed, FaultlineError
from .explorer import ExplorationConfig, run_exploration
from .fixtures.scenarios import SCENARIOS, Scenario, get_scenario
from .report import emit_html_report, emit_json_report

CONFIG_ENV = "FAULTLINE_CONFIG"

log = logging.getLogger("faultline")


class ConfigError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="faultline",
        description="Re-run a functional test while injecting database-client faults.",
    )
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--scenario", choices=sorted(SCENARIOS), help="shipped scenario to run")
    target.add_argument("--test", metavar="MODULE:ATTR",
                        help="importable Scenario or test(session) callable")
    p.add_argument("--out", default="report", help="output directory (default: report)")
    p.add_argument("--max-combination-size", type=int)
    p.add_argument("--byte-flip-cap", type=int)
    p.add_argument("--enable-cache-miss", action="store_true", default=None)
    p.add_argument("--catalog", action="append", metavar="PATH",
                   help="fault catalog file; repeatable; replaces the scenario's catalogs")
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--format", choices=("json", "html", "both"), default="both")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load_config_file() -> dict:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as e:
        raise ConfigError(f"{CONFIG_ENV}={path}: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{CONFIG_ENV}={path}: expected a JSON object")
    return doc


def _resolve_test(spec: str) -> Scenario:
    module_name, sep, attr = spec.partition(":")
    if not sep:
        raise ConfigError(f"--test expects MODULE:ATTR, got {spec!r}")
    try:
        obj = getattr(importlib.import_module(module_name), attr)
    except (ImportError, AttributeError) as e:
        raise ConfigError(f"cannot load {spec}: {e}") from e
    if isinstance(obj, Scenario):
        return obj
    if callable(obj):
        return Scenario(spec, obj)
    raise ConfigError(f"{spec} is neither a Scenario nor callable")


def _config(args: argparse.Namespace, scenario: Scenario) -> ExplorationConfig:
    doc = _load_config_file()
    doc.setdefault("catalog_paths", [str(p) for p in scenario.catalog_paths])
    flags = {
        "max_combination_size": args.max_combination_size,
        "byte_flip_cap": args.byte_flip_cap,
        "enable_cache_miss": args.enable_cache_miss,
        "max_iterations": args.max_iterations,
        "catalog_paths": args.catalog,
    }
    doc.update({k: v for k, v in flags.items() if v is not None})
    try:
        return ExplorationConfig.from_dict(doc)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def _write(report, out: Path, fmt: str) -> list:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        written.append(emit_json_report(report, out / "report.json"))
    if fmt in ("html", "both"):
        written.append(emit_html_report(report, out / "report.html"))
    return written


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scenario = get_scenario(args.scenario) if args.scenario else _resolve_test(args.test)
        config = _config(args, scenario)
        try:
            report = run_exploration(scenario.test, config, name=scenario.name,
                                     setup=scenario.setup)
        except BaselineFailed as e:
            _write(e.report, Path(args.out), args.format)
            print(f"faultline: {e}", file=sys.stderr)
            return 1
        written = _write(report, Path(args.out), args.format)
    except (ConfigError, FaultlineError, OSError) as e:
        print(f"faultline: error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    s = report.summary
    print(f"{report.test_name}: {s.total} iterations, {s.passed} passed, {s.failed} failed, "
          f"{s.errored} errored{' (truncated)' if s.truncated else ''}")
    for path in written:
        print(f"  wrote {path}")
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
