"""Budgeted (1+1) evolutionary refinement of latent points.

The search keeps one incumbent vector and, for a fixed evaluation
budget, proposes mutations that resample a random subset of coordinates
from the latent prior.  The per-step mutation rate is drawn as
clip(1/d, 1, alpha * uniform), so ``alpha`` interpolates between a
single-coordinate hill climber (alpha = 0), uniform rate mixing
(alpha = 1), and pure random search (alpha = inf), while keeping the
result close to the start point in Hamming distance.
"""

__version__ = "0.1.0"

from .core import (
    InvariantError,
    RunTrace,
    SearchConfig,
    StepRecord,
    clip,
    evolve,
    hamming_drift,
    mutate,
    sample_mutation_rate,
)
from .distributions import (
    DiscreteSet,
    LatentDistribution,
    PointMass,
    StandardNormal,
    UniformBox,
    distribution_from_spec,
)
from .diversity import (
    DistanceMetric,
    DiversityReport,
    DriftSummary,
    EuclideanDistance,
    ExternalDistance,
    NormalizedHammingDistance,
    drift_statistics,
    metric_from_spec,
    random_pairing_diversity,
)
from .estimator import LatentRefiner
from .harness import (
    Campaign,
    CampaignReport,
    best_of_random_search,
    derive_seed,
    equivalence_check_random_search,
    run_campaign,
)
from .objectives import (
    AlwaysAcceptObjective,
    CallCountingObjective,
    ConstantObjective,
    EvaluationError,
    FirstCoordinateObjective,
    Objective,
    RastriginObjective,
    SphereObjective,
    StaircaseObjective,
    objective_from_spec,
)
from .protocol import (
    DISTANCE_PROTOCOL,
    OBJECTIVE_PROTOCOL,
    ExternalObjective,
    TransportError,
    build_golden_transcript,
    run_golden_transcript,
)

__all__ = [
    "__version__",
    "AlwaysAcceptObjective",
    "Campaign",
    "CampaignReport",
    "CallCountingObjective",
    "ConstantObjective",
    "DISTANCE_PROTOCOL",
    "DiscreteSet",
    "DistanceMetric",
    "DiversityReport",
    "DriftSummary",
    "EuclideanDistance",
    "EvaluationError",
    "ExternalDistance",
    "ExternalObjective",
    "FirstCoordinateObjective",
    "InvariantError",
    "LatentDistribution",
    "LatentRefiner",
    "NormalizedHammingDistance",
    "OBJECTIVE_PROTOCOL",
    "Objective",
    "PointMass",
    "RastriginObjective",
    "RunTrace",
    "SearchConfig",
    "SphereObjective",
    "StaircaseObjective",
    "StandardNormal",
    "StepRecord",
    "TransportError",
    "UniformBox",
    "best_of_random_search",
    "build_golden_transcript",
    "clip",
    "derive_seed",
    "distribution_from_spec",
    "drift_statistics",
    "equivalence_check_random_search",
    "evolve",
    "hamming_drift",
    "metric_from_spec",
    "mutate",
    "objective_from_spec",
    "random_pairing_diversity",
    "run_campaign",
    "run_golden_transcript",
    "sample_mutation_rate",
]
