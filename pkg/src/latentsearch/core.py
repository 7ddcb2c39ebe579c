"""The (1+1) evolution strategy with randomized mutation rates.

One incumbent latent vector is improved over a fixed evaluation budget.
Each iteration draws a mutation rate r = clip(1/d, 1, alpha * u) with u
uniform on [0, 1], resamples each coordinate independently with
probability r from the prior's marginal, and replaces the incumbent only
on strict score improvement.  Small alpha keeps the result close to the
starting point; alpha = inf degenerates to best-of-(budget+1) random
search.

Determinism contract (replay oracles rely on this exact draw order, all
on one ``numpy.random.Generator`` seeded from ``SearchConfig.seed``):

1. if no start point is given, the full start sample (all d marginals);
2. per iteration: one uniform for the rate (skipped entirely when
   alpha = inf, where r is pinned to 1 without consuming a draw);
3. per iteration: d uniforms for the coordinate-selection mask;
4. per iteration: the marginal draws for the selected coordinates, in
   ascending coordinate order.

Objective evaluations never consume randomness from this stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import LatentDistribution
from .objectives import EvaluationError, Objective
from .validation import (
    check_alpha,
    check_budget,
    check_dimension,
    check_latent,
    check_seed,
)

__all__ = [
    "SearchConfig",
    "StepRecord",
    "RunTrace",
    "InvariantError",
    "clip",
    "sample_mutation_rate",
    "mutate",
    "evolve",
    "hamming_drift",
]


class InvariantError(RuntimeError):
    """An internal run invariant was violated (indicates a bug)."""


@dataclass(frozen=True)
class SearchConfig:
    """Parameters of one search run.

    budget: number of candidate evaluations (the incumbent is scored once
        more at initialization, so a run costs budget + 1 evaluations).
    alpha: mutation strength in [0, inf]; inf selects pure random search.
    dimension: latent-space dimension d.
    seed: unsigned 64-bit seed for the run's private RNG stream.
    reevaluate_incumbent: re-score the incumbent on every iteration
        instead of caching its score; only useful against stochastic
        objectives, and raises the cost to 2 * budget + 1 evaluations.
    """

    budget: int
    alpha: float
    dimension: int
    seed: int = 0
    reevaluate_incumbent: bool = False

    def __post_init__(self):
        object.__setattr__(self, "budget", check_budget(self.budget))
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        object.__setattr__(self, "dimension", check_dimension(self.dimension))
        object.__setattr__(self, "seed", check_seed(self.seed))
        object.__setattr__(
            self, "reevaluate_incumbent", bool(self.reevaluate_incumbent)
        )


@dataclass(frozen=True)
class StepRecord:
    """One iteration of the search loop.

    ``mutated_indices`` lists the coordinates selected for resampling,
    whether or not the fresh draw changed the value.  ``accepted`` is true
    exactly when ``candidate_score > incumbent_score``.
    """

    iteration: int
    sampled_rate_r: float
    mutated_indices: tuple[int, ...]
    candidate_score: float
    incumbent_score: float
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "sampled_rate_r": self.sampled_rate_r,
            "mutated_indices": list(self.mutated_indices),
            "candidate_score": self.candidate_score,
            "incumbent_score": self.incumbent_score,
            "accepted": self.accepted,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StepRecord":
        return cls(
            iteration=int(data["iteration"]),
            sampled_rate_r=float(data["sampled_rate_r"]),
            mutated_indices=tuple(int(i) for i in data["mutated_indices"]),
            candidate_score=float(data["candidate_score"]),
            incumbent_score=float(data["incumbent_score"]),
            accepted=bool(data["accepted"]),
        )


@dataclass(frozen=True, eq=False)
class RunTrace:
    """Complete record of one run: start/final points plus every step."""

    start_point: np.ndarray
    final_point: np.ndarray
    steps: tuple[StepRecord, ...]
    initial_score: float
    final_score: float
    hamming_drift: int
    evaluations: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunTrace):
            return NotImplemented
        return (
            np.array_equal(self.start_point, other.start_point)
            and np.array_equal(self.final_point, other.final_point)
            and self.steps == other.steps
            and self.initial_score == other.initial_score
            and self.final_score == other.final_score
            and self.hamming_drift == other.hamming_drift
            and self.evaluations == other.evaluations
        )

    @property
    def dimension(self) -> int:
        return int(self.start_point.size)

    @property
    def accepted_count(self) -> int:
        return sum(1 for s in self.steps if s.accepted)

    def mutated_union(self, accepted_only: bool = False) -> frozenset[int]:
        """Union of selected coordinate indices over the steps."""
        union: set[int] = set()
        for step in self.steps:
            if accepted_only and not step.accepted:
                continue
            union.update(step.mutated_indices)
        return frozenset(union)

    def incumbent_scores(self) -> list[float]:
        """Score of the incumbent after initialization and each step."""
        scores = [self.initial_score]
        for step in self.steps:
            scores.append(
                step.candidate_score if step.accepted else step.incumbent_score
            )
        return scores


def clip(a: float, b: float, c: float) -> float:
    """Clamp c into [a, b]: max(a, min(b, c))."""
    if a > b:
        raise ValueError(f"invalid clip bounds: lower {a} > upper {b}")
    return max(a, min(b, c))


def sample_mutation_rate(alpha: float, d: int, rng) -> float:
    """Draw one mutation rate r = clip(1/d, 1, alpha * u), u ~ U[0, 1].

    alpha = inf returns exactly 1 without consuming a draw (inf * u is
    ill-defined at u = 0); every other alpha consumes one uniform, even
    alpha = 0 where the clamp forces r = 1/d regardless of u.
    """
    alpha = check_alpha(alpha)
    d = check_dimension(d)
    if math.isinf(alpha):
        return 1.0
    u = rng.random()
    return clip(1.0 / d, 1.0, alpha * u)


def mutate(
    z: np.ndarray,
    r: float,
    distribution: LatentDistribution,
    rng,
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Resample each coordinate of z independently with probability r.

    Returns the mutated copy and the tuple of selected indices (ascending).
    An index counts as selected even when the fresh marginal draw happens
    to equal the old value; unselected coordinates are bit-identical to z.
    """
    z = check_latent(z, distribution.dimension)
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"mutation rate must be in [0, 1], got {r}")
    mask = rng.random(z.size) < r
    indices = np.flatnonzero(mask)
    out = z.copy()
    if indices.size:
        out[indices] = distribution.sample_marginals(indices, rng)
    return out, tuple(int(i) for i in indices)


def hamming_drift(z_star, z0) -> int:
    """Number of coordinates where the two vectors differ exactly."""
    a = np.asarray(z_star, dtype=np.float64)
    b = np.asarray(z0, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(
            f"hamming_drift needs equal-length vectors, got {a.shape} and {b.shape}"
        )
    return int(np.count_nonzero(a != b))


def _evaluate(objective: Objective, z: np.ndarray, iteration: int) -> float:
    try:
        return objective.evaluate(z)
    except EvaluationError as exc:
        raise EvaluationError(f"iteration {iteration}: {exc}") from exc


def evolve(
    objective: Objective,
    distribution: LatentDistribution,
    config: SearchConfig,
    start=None,
) -> RunTrace:
    """Run the full search loop and return its trace.

    The start point is sampled from the prior unless given.  Exactly
    ``config.budget`` candidates are proposed; each is accepted only on
    strict score improvement, so the incumbent-score sequence is
    non-decreasing and plateaus never move the incumbent.
    """
    d = config.dimension
    if objective.dimension != d:
        raise ValueError(
            f"objective dimension {objective.dimension} != config dimension {d}"
        )
    if distribution.dimension != d:
        raise ValueError(
            f"distribution dimension {distribution.dimension} != config dimension {d}"
        )

    rng = np.random.default_rng(config.seed)
    if start is None:
        z0 = distribution.sample_full(rng)
    else:
        z0 = check_latent(start, d).copy()

    initial_score = _evaluate(objective, z0, iteration=0)
    evaluations = 1

    incumbent = z0
    incumbent_score = initial_score
    steps: list[StepRecord] = []
    for iteration in range(1, config.budget + 1):
        r = sample_mutation_rate(config.alpha, d, rng)
        candidate, indices = mutate(incumbent, r, distribution, rng)
        if config.reevaluate_incumbent:
            incumbent_score = _evaluate(objective, incumbent, iteration)
            evaluations += 1
        candidate_score = _evaluate(objective, candidate, iteration)
        evaluations += 1
        accepted = candidate_score > incumbent_score
        steps.append(
            StepRecord(
                iteration=iteration,
                sampled_rate_r=r,
                mutated_indices=indices,
                candidate_score=candidate_score,
                incumbent_score=incumbent_score,
                accepted=accepted,
            )
        )
        if accepted:
            incumbent = candidate
            incumbent_score = candidate_score

    trace = RunTrace(
        start_point=z0,
        final_point=incumbent,
        steps=tuple(steps),
        initial_score=initial_score,
        final_score=incumbent_score,
        hamming_drift=hamming_drift(incumbent, z0),
        evaluations=evaluations,
    )
    if objective.deterministic or not config.reevaluate_incumbent:
        _check_trace_invariants(trace, config)
    return trace


def _check_trace_invariants(trace: RunTrace, config: SearchConfig) -> None:
    """Cheap post-run self-checks; a failure here is a bug, not bad input."""
    if len(trace.steps) != config.budget:
        raise InvariantError(
            f"expected {config.budget} steps, recorded {len(trace.steps)}"
        )
    lo = 1.0 / config.dimension
    for step in trace.steps:
        if not lo <= step.sampled_rate_r <= 1.0:
            raise InvariantError(
                f"sampled rate {step.sampled_rate_r} outside [{lo}, 1]"
            )
        if step.accepted != (step.candidate_score > step.incumbent_score):
            raise InvariantError(f"acceptance flag inconsistent at {step.iteration}")
    scores = trace.incumbent_scores()
    if any(b < a for a, b in zip(scores, scores[1:])):
        raise InvariantError("incumbent score sequence decreased")
    if trace.final_score < trace.initial_score:
        raise InvariantError("final score below initial score")
    if trace.hamming_drift > len(trace.mutated_union(accepted_only=True)):
        raise InvariantError("drift exceeds union of accepted mutations")
