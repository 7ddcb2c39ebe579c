"""Command-line frontend: single runs, campaigns, diversity analysis.

Configuration comes from a strict JSON file plus flag overrides, with
flags winning.  The effective configuration is echoed in every output
so results stay auditable.  Exit codes: 0 success, 2 configuration
error, 3 objective or transport failure, 4 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .core import InvariantError, SearchConfig, evolve
from .distributions import distribution_from_spec
from .diversity import metric_from_spec, random_pairing_diversity
from .harness import Campaign, run_campaign
from .objectives import EvaluationError, objective_from_spec
from .protocol import TransportError
from .reports import (
    decode_alpha,
    dump_json_line,
    encode_alpha,
    write_run_report,
    write_trace,
)
from .validation import check_latent, check_seed

__all__ = ["main"]

log = logging.getLogger("latentsearch")

_RUN_KEYS = {
    "dimension",
    "distribution",
    "alpha",
    "budget",
    "seed",
    "objective",
    "trace_out",
    "report_out",
    "reevaluate_incumbent",
    "start_point",
}


def _init_logging() -> None:
    level_name = os.environ.get("LATENTSEARCH_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )


def _parse_alpha(text: str) -> float:
    try:
        return decode_alpha(text)
    except ValueError:
        return float(text)


def _load_json_file(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_run_config(path: str | None) -> dict:
    if path is None:
        return {}
    cfg = _load_json_file(path)
    if not isinstance(cfg, dict):
        raise ValueError(f"config file must hold a JSON object, got {type(cfg).__name__}")
    unknown = set(cfg) - _RUN_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _parse_spec_flag(text: str, default_key: str) -> dict:
    """A spec flag is either inline JSON or a bare name."""
    stripped = text.strip()
    if stripped.startswith("{"):
        spec = json.loads(stripped)
        if not isinstance(spec, dict):
            raise ValueError(f"spec flag must be a JSON object, got {text!r}")
        return spec
    return {default_key: stripped}


def _load_start_point(path: str, dimension: int) -> np.ndarray:
    values = _load_json_file(path)
    return check_latent(values, dimension)


def cmd_evolve(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args.config)
    if args.dim is not None:
        cfg["dimension"] = args.dim
    if args.alpha is not None:
        cfg["alpha"] = args.alpha
    if args.budget is not None:
        cfg["budget"] = args.budget
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.objective is not None:
        cfg["objective"] = _parse_spec_flag(args.objective, "name")
    if args.start_point is not None:
        cfg["start_point"] = args.start_point
    if args.trace_out is not None:
        cfg["trace_out"] = args.trace_out
    if args.report_out is not None:
        cfg["report_out"] = args.report_out
    if args.reevaluate_incumbent is not None:
        cfg["reevaluate_incumbent"] = args.reevaluate_incumbent

    missing = {"dimension", "alpha", "budget", "objective"} - set(cfg)
    if missing:
        raise ValueError(f"missing required settings: {sorted(missing)}")

    dimension = cfg["dimension"]
    alpha = decode_alpha(cfg["alpha"])
    config = SearchConfig(
        budget=cfg["budget"],
        alpha=alpha,
        dimension=dimension,
        seed=cfg.get("seed", 0),
        reevaluate_incumbent=bool(cfg.get("reevaluate_incumbent", False)),
    )
    distribution_spec = cfg.get("distribution", {"kind": "standard-normal"})
    distribution = distribution_from_spec(distribution_spec, config.dimension)
    start = None
    if cfg.get("start_point") is not None:
        start = _load_start_point(cfg["start_point"], config.dimension)

    echo = {
        "dimension": config.dimension,
        "distribution": distribution.spec(),
        "alpha": encode_alpha(config.alpha),
        "budget": config.budget,
        "seed": config.seed,
        "objective": cfg["objective"],
        "reevaluate_incumbent": config.reevaluate_incumbent,
    }
    for key in ("start_point", "trace_out", "report_out"):
        if cfg.get(key) is not None:
            echo[key] = cfg[key]

    objective = objective_from_spec(cfg["objective"], config.dimension)
    try:
        trace = evolve(objective, distribution, config, start=start)
    finally:
        close = getattr(objective, "close", None)
        if close is not None:
            close()

    if cfg.get("trace_out"):
        write_trace(cfg["trace_out"], trace, config_echo=echo)
        log.info("trace written to %s", cfg["trace_out"])
    if cfg.get("report_out"):
        write_run_report(cfg["report_out"], trace, config_echo=echo)
        log.info("report written to %s", cfg["report_out"])
    sys.stdout.write(
        dump_json_line(
            {
                "initial_score": trace.initial_score,
                "final_score": trace.final_score,
                "hamming_drift": trace.hamming_drift,
                "evaluations": trace.evaluations,
                "config": echo,
            }
        )
    )
    return 0


def cmd_campaign(args: argparse.Namespace) -> int:
    if args.config is None:
        raise ValueError("campaign requires --config")
    cfg = _load_json_file(args.config)
    if not isinstance(cfg, dict):
        raise ValueError(f"config file must hold a JSON object, got {type(cfg).__name__}")
    report_base = args.report_out or cfg.pop("report_out", None)
    if report_base is None:
        raise ValueError("campaign requires --report-out (or report_out in the config)")
    if args.seed is not None:
        cfg["base_seed"] = args.seed
    campaign = Campaign.from_spec(cfg)
    parallelism = args.parallel if args.parallel is not None else 1

    report = run_campaign(campaign, parallelism=parallelism)
    json_path = report_base + ".json"
    csv_path = report_base + ".csv"
    parent = os.path.dirname(report_base)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json(include_timing=True))
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report.to_csv())
    log.info("campaign report written to %s and %s", json_path, csv_path)
    sys.stdout.write(
        dump_json_line(
            {
                "name": report.name,
                "cells": len(report.cells),
                "total_evaluations": report.total_evaluations,
                "report_json": json_path,
                "report_csv": csv_path,
            }
        )
    )
    return 0


def _load_points(path: str) -> np.ndarray:
    """Points file: one JSON array of points, or JSON-lines with one
    point (or {"point": [...]} record) per line."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
        rows = doc if isinstance(doc, list) else [doc]
    except json.JSONDecodeError:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    points = []
    for row in rows:
        if isinstance(row, dict):
            if "point" not in row:
                raise ValueError(f"point record missing 'point': {row!r}")
            row = row["point"]
        points.append(check_latent(row))
    if len(points) < 2:
        raise ValueError(f"need at least 2 points, got {len(points)}")
    width = points[0].shape[0]
    for i, p in enumerate(points):
        if p.shape[0] != width:
            raise ValueError(
                f"point {i} has dimension {p.shape[0]}, expected {width}"
            )
    return np.stack(points)


def cmd_diversity(args: argparse.Namespace) -> int:
    points = _load_points(args.points)
    metric_spec = args.metric if args.metric is not None else "euclidean-latent"
    if metric_spec.strip().startswith("{"):
        metric_spec = json.loads(metric_spec)
    metric = metric_from_spec(metric_spec)
    seed = check_seed(args.seed if args.seed is not None else 0)
    try:
        report = random_pairing_diversity(points, metric, seed=seed)
    finally:
        metric.close()
    sys.stdout.write(dump_json_line(report.to_dict()))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="JSON config file")
    shared.add_argument("--alpha", type=_parse_alpha, metavar="A",
                        help="mutation-rate scale; accepts 'inf'")
    shared.add_argument("--budget", type=int, metavar="B",
                        help="candidate evaluations per run")
    shared.add_argument("--dim", type=int, metavar="D", help="latent dimension")
    shared.add_argument("--seed", type=int, metavar="S", help="base seed")
    shared.add_argument("--objective", metavar="SPEC",
                        help="objective name or inline JSON spec")
    shared.add_argument("--start-point", metavar="PATH",
                        help="JSON array file with the start point")
    shared.add_argument("--trace-out", metavar="PATH",
                        help="write the step trace here (JSON lines)")
    shared.add_argument("--report-out", metavar="PATH",
                        help="run report path, or campaign report base path")
    shared.add_argument("--parallel", type=int, metavar="N",
                        help="campaign worker threads")
    shared.add_argument("--reevaluate-incumbent", action="store_true", default=None,
                        help="re-score the incumbent at every comparison")

    parser = argparse.ArgumentParser(
        prog="latentsearch",
        description="Budgeted stochastic refinement of latent points.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_evolve = sub.add_parser("evolve", parents=[shared],
                              help="run one optimization")
    p_evolve.set_defaults(func=cmd_evolve)

    p_campaign = sub.add_parser("campaign", parents=[shared],
                                help="run a (dimension, budget, alpha) grid")
    p_campaign.set_defaults(func=cmd_campaign)

    p_diversity = sub.add_parser("diversity", parents=[shared],
                                 help="random-pairing diversity of a points file")
    p_diversity.add_argument("points", metavar="POINTS",
                             help="JSON array or JSON-lines file of points")
    p_diversity.add_argument("--metric", metavar="SPEC",
                             help="metric name or inline JSON spec "
                                  "(default euclidean-latent)")
    p_diversity.set_defaults(func=cmd_diversity)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    _init_logging()
    try:
        return args.func(args)
    except InvariantError as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return 4
    except (EvaluationError, TransportError) as exc:
        sys.stderr.write(f"objective failure: {exc}\n")
        return 3
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
