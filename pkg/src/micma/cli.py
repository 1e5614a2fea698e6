"""Command-line front end: single runs, the benchmark table, and the alpha grid.

Exit codes: 0 clean termination, 1 internal or numerical failure, 2 usage
or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

from . import benchmarks, harness
from .errors import ConfigError, MicmaError

log = logging.getLogger("micma")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
SEED_ENV = "MI_CMAES_SEED_BASE"
TABLE_DIMS = (20, 40, 60)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on its own; raise instead so main() owns the exit path
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: error: {message}")


def _csv_list(text: str) -> List[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return items


def _int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in _csv_list(text)]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in _csv_list(text)]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _alpha(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"alpha must be a number or 'auto', got {text!r}") from exc


def _default_seed_base() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="micma", description="Mixed-integer CMA-ES experiments.")
    p.add_argument("--config", help="JSON file with default values for the flags")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    o = sub.add_parser("optimize", help="run a single trial")
    o.add_argument("--function")
    o.add_argument("--dim", type=int)
    o.add_argument("--method", choices=harness.METHODS)
    o.add_argument("--alpha", type=_alpha)
    o.add_argument("--seed", type=int)
    o.add_argument("--max-evals", type=int)
    o.add_argument("--log", help="write the trajectory CSV here")

    e = sub.add_parser("experiment", help="success rates and evaluation counts over a grid")
    e.add_argument("--functions", type=_csv_list)
    e.add_argument("--dims", type=_int_list)
    e.add_argument("--methods", type=_csv_list)
    e.add_argument("--trials", type=int)
    e.add_argument("--jobs", type=int)
    e.add_argument("--seed-base", type=int)
    e.add_argument("--max-evals", type=int)
    e.add_argument("--out")

    g = sub.add_parser("alpha-grid", help="margin method over alpha = N^-m lambda^-n")
    g.add_argument("--function")
    g.add_argument("--dims", type=_int_list)
    g.add_argument("--m-grid", type=_float_list)
    g.add_argument("--n-grid", type=_float_list)
    g.add_argument("--trials", type=int)
    g.add_argument("--jobs", type=int)
    g.add_argument("--seed-base", type=int)
    g.add_argument("--out")
    return p


DEFAULTS: Dict[str, Dict[str, Any]] = {
    "optimize": {"alpha": "auto", "seed": 0, "max_evals": 1_000_000, "log": None},
    "experiment": {
        "functions": list(benchmarks.FUNCTIONS),
        "dims": list(TABLE_DIMS),
        "methods": list(harness.TABLE_METHODS),
        "trials": 100,
        "jobs": 1,
        "max_evals": 1_000_000,
    },
    "alpha-grid": {
        "dims": list(TABLE_DIMS),
        "m_grid": list(harness.DEFAULT_GRID),
        "n_grid": list(harness.DEFAULT_GRID),
        "trials": 100,
        "jobs": 1,
    },
}

REQUIRED = {
    "optimize": ("function", "dim", "method"),
    "experiment": ("out",),
    "alpha-grid": ("function", "out"),
}


def load_config_file(path: str) -> Dict[str, Any]:
    """Flag values from a JSON object; keys may use dashes or underscores."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(args: argparse.Namespace) -> Dict[str, Any]:
    """Merge defaults, config file, and flags (flags win)."""
    values: Dict[str, Any] = dict(DEFAULTS[args.command])
    if args.command != "optimize":
        values["seed_base"] = _default_seed_base()
    if args.config:
        values.update(load_config_file(args.config))
    for key, val in vars(args).items():
        if key in ("command", "config", "verbose"):
            continue
        if val is not None:
            values[key] = val
    for key in REQUIRED[args.command]:
        if values.get(key) is None:
            raise UsageError(f"micma {args.command}: error: --{key.replace('_', '-')} is required")
    return values


def _check_writable(path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
        raise ConfigError(f"cannot write to {path}")


def cmd_optimize(v: Dict[str, Any]) -> int:
    config = harness.TrialConfig(
        function=v["function"],
        dim=int(v["dim"]),
        method=v["method"],
        alpha=v["alpha"],
        seed=int(v["seed"]),
        max_evals=int(v["max_evals"]),
        log_trajectory=v.get("log") is not None,
    )
    config.validate()
    if v.get("log"):
        _check_writable(v["log"])
    result = harness.run_trial(config)
    out = {"function": config.function, "dim": config.dim, "method": config.method, "seed": config.seed}
    out.update(result.to_json())
    print(json.dumps(out))
    if v.get("log"):
        harness.write_trajectory_csv(v["log"], result)
    return EXIT_FAILURE if result.reason == "numerical" else EXIT_OK


def cmd_experiment(v: Dict[str, Any]) -> int:
    _check_writable(v["out"])
    configs = [
        harness.TrialConfig(fn, int(dim), method, max_evals=int(v["max_evals"]))
        for fn in v["functions"]
        for dim in v["dims"]
        for method in v["methods"]
    ]
    for c in configs:
        c.validate()
    rows = harness.run_batch(configs, int(v["trials"]), int(v["jobs"]), int(v["seed_base"]))
    harness.write_summary_csv(v["out"], rows)
    for r in rows:
        log.info("%s N=%d %s: %d/%d median=%s", r.function, r.dim, r.method, r.successes, r.trials, r.median_evals)
    return EXIT_OK


def cmd_alpha_grid(v: Dict[str, Any]) -> int:
    _check_writable(v["out"])
    for dim in v["dims"]:
        benchmarks.make(v["function"], int(dim))
    cells = harness.alpha_grid(
        v["function"], [int(d) for d in v["dims"]], v["m_grid"], v["n_grid"],
        int(v["trials"]), int(v["jobs"]), int(v["seed_base"]),
    )
    harness.write_grid_csv(v["out"], cells)
    return EXIT_OK


COMMANDS = {"optimize": cmd_optimize, "experiment": cmd_experiment, "alpha-grid": cmd_alpha_grid}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        values = resolve(args)
        return COMMANDS[args.command](values)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"micma: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MicmaError as exc:
        print(f"micma: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
