"""Command-line interface.

Subcommands map one-to-one onto experiment kinds (verify, topk, mht, mean,
trace, sweep). Values come from, in decreasing precedence: explicit flags,
a JSON config file (--config, keys mirror ExperimentConfig field names),
and built-in defaults. Results go to --out or stdout. Exit codes: 0 on
success, 1 on an invariant failure, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import ConfigError, InvariantError
from .harness import SWEEP_AXES, ExperimentConfig, emit, run_experiment, sweep
from .mechanisms import MECHANISM_NAMES
from .verifysuite import render_verify_json, run_verify

_RUN_KINDS = ("topk", "mht", "mean", "trace")
_FLAG_FOR_FIELD = (
    ("d", "d"),
    ("k", "k"),
    ("n", "n"),
    ("beta_sym", "beta"),
    ("mechanism", "mech"),
    ("epsilon", "eps"),
    ("delta", "delta"),
    ("trials", "trials"),
    ("master_seed", "seed"),
    ("accuracy_reference", "ref"),
)


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--d", type=int, default=None, help="number of columns")
    sub.add_argument("--k", type=int, default=None, help="selection size")
    sub.add_argument("--n", type=int, default=None, help="number of rows")
    sub.add_argument("--beta", default=None,
                     help='symmetric prior parameter, or "auto" for the largest admissible value')
    sub.add_argument("--mech", default=None, choices=MECHANISM_NAMES, help="mechanism name")
    sub.add_argument("--eps", type=float, default=None, help="privacy parameter epsilon")
    sub.add_argument("--delta", default=None,
                     help='privacy parameter delta, or "paper" for the kind default')
    sub.add_argument("--trials", type=int, default=None, help="Monte Carlo trial count")
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--ref", default=None, choices=("population", "empirical"),
                     help="means the selection error is measured against")
    sub.add_argument("--out", default=None, help="output path (stdout when omitted)")
    sub.add_argument("--format", default=None, choices=("csv", "json"), help="output format")
    sub.add_argument("--config", default=None, help="JSON config file")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privsel",
        description="Private top-k selection experiments on beta-Bernoulli instances.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="run the full invariant suite")
    verify.add_argument("--seed", type=int, default=None, help="master seed")
    verify.add_argument("--out", default=None, help="output path (stdout when omitted)")

    for kind in _RUN_KINDS:
        sub = commands.add_parser(kind, help=f"run a {kind} experiment")
        _add_common_flags(sub)

    sw = commands.add_parser("sweep", help="run one experiment per value of one axis")
    _add_common_flags(sw)
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES, help="parameter to vary")
    sw.add_argument("--values", required=True, help="comma-separated axis values")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config", f"{path} must hold a JSON object")
    allowed = {field.name for field in dataclasses.fields(ExperimentConfig)}
    for key in payload:
        if key not in allowed:
            raise ConfigError(key, f"unknown config key in {path}")
    return payload


def _parse_beta(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if value == "auto":
        return "auto"
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError("beta_sym", f'must be a positive real or "auto", got {value!r}') from None


def _parse_delta(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if value == "paper":
        return "paper"
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError("delta", f'must be a real in [0, 1) or "paper", got {value!r}') from None


def _experiment_kwargs(args: argparse.Namespace) -> tuple[dict, dict]:
    file_config = _load_config_file(args.config) if args.config else {}
    merged = {}
    for field, flag in _FLAG_FOR_FIELD:
        value = getattr(args, flag, None)
        if value is None and field in file_config:
            value = file_config[field]
        if value is not None:
            merged[field] = value
    if "beta_sym" in merged:
        merged["beta_sym"] = _parse_beta(merged["beta_sym"])
    if "delta" in merged:
        merged["delta"] = _parse_delta(merged["delta"])
    return merged, file_config


def _write_or_print(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _infer_sweep_kind(kwargs: dict, file_config: dict) -> str:
    kind = file_config.get("kind")
    if kind in _RUN_KINDS:
        return kind
    mech = kwargs.get("mechanism")
    if mech == "gauss-mean":
        return "mean"
    if mech == "svt":
        return "mht"
    return "topk"


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "verify":
        report = run_verify(master_seed=args.seed if args.seed is not None else 1)
        _write_or_print(render_verify_json(report), args.out)
        return 0 if report.passed else 1

    kwargs, file_config = _experiment_kwargs(args)
    fmt = args.format or "csv"

    if args.command == "sweep":
        base = ExperimentConfig(kind=_infer_sweep_kind(kwargs, file_config), **kwargs)
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError("values", f"must be comma-separated reals, got {args.values!r}") from None
        if not values:
            raise ConfigError("values", "at least one axis value is required")
        records = sweep(base, args.axis, values)
        text = emit(records, format=fmt)
    else:
        config = ExperimentConfig(kind=args.command, **kwargs)
        record = run_experiment(config)
        text = emit(record, format=fmt)

    _write_or_print(text, args.out)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
