"""Command-line entry point.

Subcommands: ``simulate`` (one protocol run), ``sweep`` (Monte Carlo success
curves to CSV), ``theory`` (closed-form report), ``datagen`` (binary shard
dump).  Experiment definitions live in a JSON config file; flags override
only the seed, output path, and algorithm choice.  Exit codes: 0 success,
1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .datagen import GenConfig, make_shard, make_sparse_theta, write_shard
from .errors import DompError
from .experiments import (
    AlgorithmSpec,
    ExperimentConfig,
    machines_required,
    run_trial,
    sweep,
    write_csv,
    write_manifest,
)
from .theory import TheoryParams, check_theorem


class ConfigError(Exception):
    pass


# Every key the config document may carry, with its expected type(s).
_SCHEMA = {
    # problem family
    "d": int, "n": int, "M": int, "K": int,
    "alpha": (int, float), "sigma": (int, float), "theta_min": (int, float),
    "master_seed": int, "pattern": str, "custom_values": list,
    "support_indices": list, "fixed_design": bool,
    # sweep
    "theta_min_grid": list, "trials": int, "algorithms": list, "on_error": str,
    # theory report
    "mu_max": (int, float), "theta_min_scaled": (int, float),
    "epsilon": (int, float), "M_available": int,
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    for key, value in doc.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key: {key}")
        expected = _SCHEMA[key]
        if isinstance(value, bool) and expected is not bool:
            raise ConfigError(f"config key {key}: expected {expected}, got bool")
        if not isinstance(value, expected):
            raise ConfigError(f"config key {key}: expected {expected}, got {type(value).__name__}")
    return doc


def _require(doc: dict, keys: list[str], purpose: str):
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ConfigError(f"{purpose} needs config keys: {', '.join(missing)}")


def build_gen_config(doc: dict, *, seed_override: int | None = None) -> GenConfig:
    _require(doc, ["d", "n", "M", "K", "alpha", "sigma", "master_seed"], "generation")
    try:
        return GenConfig(
            d=doc["d"], n=doc["n"], M=doc["M"], K=doc["K"],
            alpha=float(doc["alpha"]), sigma=float(doc["sigma"]),
            theta_min=float(doc.get("theta_min", 1.0)),
            master_seed=seed_override if seed_override is not None else doc["master_seed"],
            pattern=doc.get("pattern", "paper"),
            custom_values=tuple(doc["custom_values"]) if "custom_values" in doc else None,
            support_indices=tuple(doc["support_indices"]) if "support_indices" in doc else None,
            fixed_design=doc.get("fixed_design", False),
        )
    except (ValueError, DompError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_algorithm(entry) -> AlgorithmSpec:
    """Accepts "dj" / "ds:6" / "djf:20" strings or {"kind": ...} objects."""
    try:
        if isinstance(entry, str):
            kind, _, arg = entry.partition(":")
            if kind == "ds":
                return AlgorithmSpec(kind, L=int(arg))
            if kind == "djf" and arg:
                return AlgorithmSpec(kind, per_round=int(arg))
            return AlgorithmSpec(kind)
        if isinstance(entry, dict):
            return AlgorithmSpec(entry["kind"], L=entry.get("L"),
                                 per_round=entry.get("per_round"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad algorithm entry {entry!r}: {exc}") from exc
    raise ConfigError(f"bad algorithm entry {entry!r}")


def build_experiment_config(doc: dict, *, out: str | None = None,
                            seed_override: int | None = None) -> ExperimentConfig:
    _require(doc, ["theta_min_grid", "trials", "algorithms"], "sweep")
    gen = build_gen_config(doc, seed_override=seed_override)
    try:
        return ExperimentConfig(
            gen=gen,
            theta_min_grid=tuple(doc["theta_min_grid"]),
            trials=doc["trials"],
            algorithms=tuple(parse_algorithm(a) for a in doc["algorithms"]),
            output_path=out,
            on_error=doc.get("on_error", "abort"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_theory_params(doc: dict) -> tuple[TheoryParams, int]:
    _require(doc, ["d", "K", "n", "sigma", "mu_max", "theta_min_scaled",
                   "epsilon", "M_available"], "theory report")
    try:
        params = TheoryParams(
            d=doc["d"], K=doc["K"], n=doc["n"], sigma=float(doc["sigma"]),
            mu_max=float(doc["mu_max"]),
            theta_min_scaled=float(doc["theta_min_scaled"]),
            epsilon=float(doc["epsilon"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return params, doc["M_available"]


def _cmd_simulate(args) -> int:
    doc = load_config(args.config)
    spec = parse_algorithm(args.algo)
    cfg = build_experiment_config(
        {**doc, "theta_min_grid": [doc.get("theta_min", 1.0)], "trials": 1,
         "algorithms": [args.algo]},
        seed_override=args.seed,
    )
    outcomes = run_trial(cfg, cfg.gen.theta_min, trial_index=0)
    outcome = outcomes[spec.label()]
    print(f"algorithm: {spec.label()}")
    print("estimate: " + " ".join(str(j) for j in outcome.estimate))
    print(f"success: {str(outcome.success).lower()}")
    print(f"bits: {outcome.bits}")
    print(f"rounds: {outcome.rounds}")
    return 0


def _cmd_sweep(args) -> int:
    doc = load_config(args.config)
    cfg = build_experiment_config(doc, out=args.out, seed_override=args.seed)
    report = sweep(cfg)
    write_csv(report.points, args.out)
    write_manifest(cfg, report, str(args.out) + ".manifest.json")
    print(f"wrote {len(report.points)} curve points to {args.out}")
    return 0


_REPORT_REAL_FIELDS = [
    "theta_crit", "r", "F", "M_tilde", "Q0", "Q1", "Q2",
    "nu_a", "nu_b", "eps_lower_bound",
]
_REPORT_VERDICTS = ["max_mip_ok", "eps_ok", "snr_ok", "machines_ok"]


def _cmd_theory(args) -> int:
    doc = load_config(args.config)
    params, m_available = build_theory_params(doc)
    report = check_theorem(params, m_available)
    for name in _REPORT_REAL_FIELDS:
        print(f"{name:>16}: {getattr(report, name):.12g}")
    for name in _REPORT_VERDICTS:
        print(f"{name:>16}: {'pass' if getattr(report, name) else 'FAIL'}")
    print(f"{'machines_needed':>16}: {report.machines_needed}")
    print(f"{'comm_bits':>16}: {report.comm_bits_predicted}")
    if report.notes:
        print(f"{'notes':>16}: {report.notes}")
    record = {name: getattr(report, name) for name in
              _REPORT_REAL_FIELDS + _REPORT_VERDICTS}
    record["machines_needed"] = report.machines_needed
    record["comm_bits_predicted"] = report.comm_bits_predicted
    print("RECORD " + json.dumps(record, sort_keys=True))
    return 0


def _cmd_datagen(args) -> int:
    doc = load_config(args.config)
    gen = build_gen_config(doc, seed_override=args.seed)
    theta = make_sparse_theta(gen)
    shard = make_shard(gen, theta, trial=0, machine=args.machine)
    write_shard(args.out, shard, gen.master_seed)
    print(f"wrote shard (n={gen.n}, d={gen.d}, machine={args.machine}) to {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="domp",
        description="Distributed greedy support recovery: simulations and theory reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one protocol once and print the outcome")
    p.add_argument("--config", required=True)
    p.add_argument("--algo", required=True,
                   help="single | centralized | ds:L | dj | djf:per_round | dc")
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo success curves to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("theory", help="closed-form feasibility report")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_theory)

    p = sub.add_parser("datagen", help="dump one shard to a flat binary file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--machine", type=int, default=0)
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.set_defaults(fn=_cmd_datagen)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DompError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
