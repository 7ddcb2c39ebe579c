"""Seeded experiment campaigns over (dimension, budget, alpha) grids.

A campaign executes ``replicas`` independent runs per grid cell, each
with a seed derived from the base seed by a counter-based mix, so the
aggregated report is bit-identical no matter how many workers ran it.
Objectives and distributions are rebuilt from their config specs for
every run; stateful test objectives therefore never leak state across
runs or workers.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .core import SearchConfig, evolve
from .distributions import LatentDistribution, distribution_from_spec
from .objectives import Objective, objective_from_spec
from .reports import (
    campaign_report_to_csv,
    decode_alpha,
    dump_json_line,
    encode_alpha,
    write_trace,
)
from .validation import check_budget, check_dimension, check_seed

__all__ = [
    "Campaign",
    "Cell",
    "RunOutcome",
    "CampaignReport",
    "derive_seed",
    "run_campaign",
    "best_of_random_search",
    "equivalence_check_random_search",
]

_MASK64 = 2**64 - 1
_GAMMA = 0x9E3779B97F4A7C15


def derive_seed(base_seed: int, counter: int) -> int:
    """Mix (base_seed, counter) into a 64-bit seed with SplitMix64.

    The counter-to-seed map is a bijection for a fixed base seed, so
    derived seeds are pairwise distinct by construction.
    """
    x = (check_seed(base_seed) + (counter + 1) * _GAMMA) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


@dataclass(frozen=True)
class Cell:
    index: int
    dimension: int
    budget: int
    alpha: float


@dataclass(frozen=True)
class Campaign:
    """A named sweep: one objective/distribution, a (d, b, alpha) grid."""

    name: str
    objective: dict
    distribution: dict
    dimensions: tuple[int, ...]
    budgets: tuple[int, ...]
    alphas: tuple[float, ...]
    replicas: int
    base_seed: int
    traces_out: str | None = None
    final_points_out: str | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "dimensions", tuple(check_dimension(d) for d in self.dimensions)
        )
        object.__setattr__(
            self, "budgets", tuple(check_budget(b) for b in self.budgets)
        )
        object.__setattr__(
            self, "alphas", tuple(decode_alpha(a) for a in self.alphas)
        )
        object.__setattr__(self, "replicas", int(self.replicas))
        object.__setattr__(self, "base_seed", check_seed(self.base_seed))
        if not (self.dimensions and self.budgets and self.alphas):
            raise ValueError("campaign grid must be nonempty on every axis")
        if self.replicas < 1:
            raise ValueError(f"replicas must be >= 1, got {self.replicas}")

    _KEYS = {
        "name",
        "objective",
        "distribution",
        "dimensions",
        "budgets",
        "alphas",
        "replicas",
        "base_seed",
        "traces_out",
        "final_points_out",
    }

    @classmethod
    def from_spec(cls, spec: dict) -> "Campaign":
        if not isinstance(spec, dict):
            raise ValueError(f"campaign spec must be an object, got {spec!r}")
        unknown = set(spec) - cls._KEYS
        if unknown:
            raise ValueError(f"unknown campaign keys: {sorted(unknown)}")
        missing = {
            "name",
            "objective",
            "distribution",
            "dimensions",
            "budgets",
            "alphas",
            "replicas",
            "base_seed",
        } - set(spec)
        if missing:
            raise ValueError(f"campaign spec missing keys: {sorted(missing)}")
        return cls(
            name=str(spec["name"]),
            objective=dict(spec["objective"]),
            distribution=dict(spec["distribution"]),
            dimensions=tuple(spec["dimensions"]),
            budgets=tuple(spec["budgets"]),
            alphas=tuple(spec["alphas"]),
            replicas=spec["replicas"],
            base_seed=spec["base_seed"],
            traces_out=spec.get("traces_out"),
            final_points_out=spec.get("final_points_out"),
        )

    def spec(self) -> dict:
        """JSON-safe echo of this campaign's configuration."""
        out = {
            "name": self.name,
            "objective": self.objective,
            "distribution": self.distribution,
            "dimensions": list(self.dimensions),
            "budgets": list(self.budgets),
            "alphas": [encode_alpha(a) for a in self.alphas],
            "replicas": self.replicas,
            "base_seed": self.base_seed,
        }
        if self.traces_out is not None:
            out["traces_out"] = self.traces_out
        if self.final_points_out is not None:
            out["final_points_out"] = self.final_points_out
        return out

    def cells(self) -> list[Cell]:
        grid = itertools.product(self.dimensions, self.budgets, self.alphas)
        return [Cell(i, d, b, a) for i, (d, b, a) in enumerate(grid)]

    def run_seed(self, cell_index: int, replica: int) -> int:
        return derive_seed(self.base_seed, cell_index * self.replicas + replica)


@dataclass(frozen=True)
class RunOutcome:
    cell_index: int
    replica: int
    seed: int
    error: str | None
    initial_score: float | None
    final_score: float | None
    hamming_drift: int | None
    mutated_union: int | None
    evaluations: int
    wall_seconds: float
    final_point: list[float] | None


@dataclass
class CampaignReport:
    """Aggregated campaign results.

    ``cells`` and the totals are deterministic functions of the campaign
    and base seed; wall-clock timing is diagnostic only and lives in a
    separate section that canonical serializations exclude.
    """

    name: str
    version: str
    config: dict
    cells: list[dict]
    total_evaluations: int
    total_seconds: float = 0.0
    cell_seconds: list[float] = field(default_factory=list)

    def canonical_dict(self) -> dict:
        return {
            "name": self.name,
            "version": self.version,
            "config": self.config,
            "cells": [_encode_cell(c) for c in self.cells],
            "total_evaluations": self.total_evaluations,
        }

    def to_json(self, include_timing: bool = True) -> str:
        doc = self.canonical_dict()
        if include_timing:
            doc["timing"] = {
                "total_seconds": self.total_seconds,
                "mean_run_seconds_per_cell": self.cell_seconds,
            }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        return campaign_report_to_csv([_encode_cell(c) for c in self.cells])


def _encode_cell(cell: dict) -> dict:
    out = dict(cell)
    out["alpha"] = encode_alpha(out["alpha"])
    return out


def _execute_run(campaign: Campaign, cell: Cell, replica: int) -> RunOutcome:
    seed = campaign.run_seed(cell.index, replica)
    started = time.perf_counter()
    objective = None
    try:
        distribution = distribution_from_spec(campaign.distribution, cell.dimension)
        objective = objective_from_spec(campaign.objective, cell.dimension)
        config = SearchConfig(
            budget=cell.budget, alpha=cell.alpha, dimension=cell.dimension, seed=seed
        )
        trace = evolve(objective, distribution, config)
    except Exception as exc:
        return RunOutcome(
            cell_index=cell.index,
            replica=replica,
            seed=seed,
            error=f"{type(exc).__name__}: {exc}",
            initial_score=None,
            final_score=None,
            hamming_drift=None,
            mutated_union=None,
            evaluations=0,
            wall_seconds=time.perf_counter() - started,
            final_point=None,
        )
    finally:
        close = getattr(objective, "close", None)
        if close is not None:
            close()
    if campaign.traces_out:
        path = os.path.join(
            campaign.traces_out, f"trace_c{cell.index:03d}_r{replica:04d}.jsonl"
        )
        write_trace(path, trace, config_echo={"seed": seed, **_cell_echo(cell)})
    return RunOutcome(
        cell_index=cell.index,
        replica=replica,
        seed=seed,
        error=None,
        initial_score=trace.initial_score,
        final_score=trace.final_score,
        hamming_drift=trace.hamming_drift,
        mutated_union=len(trace.mutated_union()),
        evaluations=trace.evaluations,
        wall_seconds=time.perf_counter() - started,
        final_point=trace.final_point.tolist(),
    )


def _cell_echo(cell: Cell) -> dict:
    return {
        "cell_index": cell.index,
        "dimension": cell.dimension,
        "budget": cell.budget,
        "alpha": encode_alpha(cell.alpha),
    }


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def run_campaign(campaign: Campaign, parallelism: int = 1) -> CampaignReport:
    """Execute every (cell, replica) and aggregate deterministically.

    Workers may interleave arbitrarily; outcomes are sorted on
    (cell_index, replica) before aggregation so the report does not
    depend on the degree of parallelism.  A run that raises is recorded
    as a failure in its cell without disturbing sibling runs.
    """
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    for directory in (campaign.traces_out, campaign.final_points_out):
        if directory:
            os.makedirs(directory, exist_ok=True)

    cells = campaign.cells()
    jobs = [(cell, replica) for cell in cells for replica in range(campaign.replicas)]
    started = time.perf_counter()
    if parallelism == 1:
        outcomes = [_execute_run(campaign, cell, rep) for cell, rep in jobs]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(
                pool.map(lambda job: _execute_run(campaign, *job), jobs)
            )
    total_seconds = time.perf_counter() - started

    outcomes.sort(key=lambda o: (o.cell_index, o.replica))
    by_cell: dict[int, list[RunOutcome]] = {}
    for outcome in outcomes:
        by_cell.setdefault(outcome.cell_index, []).append(outcome)

    cell_rows: list[dict] = []
    cell_seconds: list[float] = []
    total_evaluations = 0
    for cell in cells:
        runs = by_cell[cell.index]
        successes = [r for r in runs if r.error is None]
        failed = len(runs) - len(successes)
        total_evaluations += sum(r.evaluations for r in runs)
        cell_seconds.append(float(np.mean([r.wall_seconds for r in runs])))
        row = {
            "cell_index": cell.index,
            "dimension": cell.dimension,
            "budget": cell.budget,
            "alpha": cell.alpha,
            "replicas": len(runs),
            "failed_runs": failed,
            "status": "ok" if successes else "failed",
        }
        if successes:
            initial = np.array([r.initial_score for r in successes])
            final = np.array([r.final_score for r in successes])
            drift = np.array([r.hamming_drift for r in successes], dtype=np.float64)
            union = np.array([r.mutated_union for r in successes], dtype=np.float64)
            row["initial_score_mean"], row["initial_score_stderr"] = _mean_stderr(initial)
            row["final_score_mean"], row["final_score_stderr"] = _mean_stderr(final)
            row["improvement_rate"] = float(np.mean(final > initial))
            row["drift_mean"], row["drift_stderr"] = _mean_stderr(drift)
            row["drift_ratio_mean"] = float((drift / cell.dimension).mean())
            row["mutated_union_mean"] = float(union.mean())
        else:
            for key in (
                "initial_score_mean",
                "initial_score_stderr",
                "final_score_mean",
                "final_score_stderr",
                "improvement_rate",
                "drift_mean",
                "drift_stderr",
                "drift_ratio_mean",
                "mutated_union_mean",
            ):
                row[key] = None
        cell_rows.append(row)
        if campaign.final_points_out:
            path = os.path.join(
                campaign.final_points_out, f"final_points_c{cell.index:03d}.jsonl"
            )
            with open(path, "w", encoding="utf-8") as fh:
                for r in successes:
                    fh.write(dump_json_line({"replica": r.replica, "point": r.final_point}))

    return CampaignReport(
        name=campaign.name,
        version=__version__,
        config=campaign.spec(),
        cells=cell_rows,
        total_evaluations=total_evaluations,
        total_seconds=total_seconds,
        cell_seconds=cell_seconds,
    )


def best_of_random_search(
    objective: Objective,
    distribution: LatentDistribution,
    budget: int,
    seed: int,
) -> tuple[np.ndarray, float]:
    """Best of (budget + 1) independent prior samples, first winner on ties.

    Stream-coordinated with the search loop at alpha = inf: that loop
    draws no rate uniform, then consumes d selection uniforms (all true
    at rate 1) and d marginals per iteration, so this oracle discards d
    uniforms before each candidate's marginals.  The argmax logic itself
    is independent of the search implementation.
    """
    rng = np.random.default_rng(check_seed(seed))
    d = distribution.dimension
    all_indices = np.arange(d)
    best = distribution.sample_full(rng)
    best_score = objective.evaluate(best)
    for _ in range(check_budget(budget)):
        rng.random(d)
        candidate = distribution.sample_marginals(all_indices, rng)
        score = objective.evaluate(candidate)
        if score > best_score:
            best, best_score = candidate, score
    return best, best_score


def equivalence_check_random_search(
    distribution: LatentDistribution,
    objective: Objective,
    budget: int,
    seed: int,
    replicas: int,
) -> list[bool]:
    """Compare evolve(alpha=inf) to the best-of oracle, replica by replica.

    The objective must be deterministic (it is evaluated once by each
    side).  Returns one exact-match flag per replica.
    """
    if not objective.deterministic:
        raise ValueError("equivalence check requires a deterministic objective")
    results = []
    for replica in range(int(replicas)):
        run_seed = derive_seed(seed, replica)
        config = SearchConfig(
            budget=budget,
            alpha=math.inf,
            dimension=distribution.dimension,
            seed=run_seed,
        )
        trace = evolve(objective, distribution, config)
        point, score = best_of_random_search(objective, distribution, budget, run_seed)
        results.append(
            bool(np.array_equal(trace.final_point, point))
            and trace.final_score == score
        )
    return results
