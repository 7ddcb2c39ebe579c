"""Diversity-preservation statistics.

Two complementary views: per-run drift summaries (how far final points
moved from their starts, coordinate-wise) and the population-level
random-pairing protocol, where each point is paired with one uniformly
chosen other point and the mean pairwise distance estimates diversity.
Distances are pluggable; latent-space euclidean is the desk-scale
stand-in for perceptual metrics, which attach as external processes.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .validation import check_latent, check_seed

__all__ = [
    "DistanceMetric",
    "EuclideanDistance",
    "NormalizedHammingDistance",
    "ExternalDistance",
    "DiversityReport",
    "DriftSummary",
    "metric_from_spec",
    "random_pairing_diversity",
    "drift_statistics",
]


class DistanceMetric(abc.ABC):
    """Non-negative symmetric distance with d(x, x) = 0."""

    name: str

    @abc.abstractmethod
    def distance(self, a, b) -> float: ...

    def close(self) -> None:
        """Release external resources, if any."""


class EuclideanDistance(DistanceMetric):
    name = "euclidean-latent"

    def distance(self, a, b) -> float:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        return float(np.linalg.norm(a - b))


class NormalizedHammingDistance(DistanceMetric):
    """Fraction of coordinates that differ exactly; in [0, 1]."""

    name = "normalized-hamming-latent"

    def distance(self, a, b) -> float:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
        return float(np.count_nonzero(a != b)) / a.size


class ExternalDistance(DistanceMetric):
    """Perceptual or otherwise out-of-process distance over the wire.

    Speaks the distance flavor of the line protocol ("evolgan-dist/1"):
    requests {"id": n, "a": [...], "b": [...]} are answered by
    {"id": n, "distance": x}.
    """

    name = "external-perceptual"

    def __init__(self, command, handshake_timeout: float = 10.0,
                 request_timeout: float = 60.0):
        from .protocol import DISTANCE_PROTOCOL, TransportError, _ProtocolClient

        self._transport_error = TransportError
        self._client = _ProtocolClient(
            command, DISTANCE_PROTOCOL, handshake_timeout, request_timeout
        )
        self.dimension = self._client.handshake_dimension

    def distance(self, a, b) -> float:
        a = check_latent(a, self.dimension)
        b = check_latent(b, self.dimension)
        response = self._client.round_trip({"a": a.tolist(), "b": b.tolist()})
        if "error" in response:
            raise self._transport_error(f"distance server error: {response['error']}")
        if "distance" not in response:
            raise self._transport_error(f"response missing distance: {response!r}")
        value = float(response["distance"])
        if not math.isfinite(value) or value < 0.0:
            raise self._transport_error(f"invalid distance {value!r}")
        return value

    def close(self) -> None:
        self._client.close()


def metric_from_spec(spec) -> DistanceMetric:
    """Build a metric from a name or a strict config dictionary."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError(f"metric spec must be a name or an object with 'kind': {spec!r}")
    kind = spec["kind"]
    extra = {k: v for k, v in spec.items() if k != "kind"}
    if kind == EuclideanDistance.name:
        if extra:
            raise ValueError(f"unknown metric spec keys: {sorted(extra)}")
        return EuclideanDistance()
    if kind == NormalizedHammingDistance.name:
        if extra:
            raise ValueError(f"unknown metric spec keys: {sorted(extra)}")
        return NormalizedHammingDistance()
    if kind == ExternalDistance.name:
        unknown = set(extra) - {"command", "handshake_timeout", "request_timeout"}
        if unknown:
            raise ValueError(f"unknown metric spec keys: {sorted(unknown)}")
        if "command" not in extra:
            raise ValueError("external-perceptual metric requires 'command'")
        return ExternalDistance(
            extra["command"],
            handshake_timeout=extra.get("handshake_timeout", 10.0),
            request_timeout=extra.get("request_timeout", 60.0),
        )
    raise ValueError(f"unknown metric kind {kind!r}")


@dataclass(frozen=True)
class DiversityReport:
    """Mean random-pairing distance of a population, with its precision."""

    metric: str
    sample_size: int
    mean_distance: float
    standard_error: float
    pairing_seed: int

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "n": self.sample_size,
            "mean": self.mean_distance,
            "stderr": self.standard_error,
            "pairing_seed": self.pairing_seed,
        }


def random_pairing_diversity(points, metric: DistanceMetric, seed: int = 0) -> DiversityReport:
    """Pair every point with one uniformly chosen distinct partner.

    Partners are drawn independently per point (a partner may serve
    several points), self-pairing is excluded.  The report carries the
    pairing seed so the estimate is reproducible.
    """
    seed = check_seed(seed)
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    n = len(pts)
    if n < 2:
        raise ValueError(f"random pairing needs at least 2 points, got {n}")
    rng = np.random.default_rng(seed)
    partners = rng.integers(0, n - 1, size=n)
    partners = partners + (partners >= np.arange(n))  # skip self
    distances = np.array(
        [metric.distance(pts[i], pts[int(j)]) for i, j in enumerate(partners)]
    )
    stderr = float(distances.std(ddof=1) / math.sqrt(n))
    return DiversityReport(
        metric=metric.name,
        sample_size=n,
        mean_distance=float(distances.mean()),
        standard_error=stderr,
        pairing_seed=seed,
    )


@dataclass(frozen=True)
class DriftSummary:
    """Monte Carlo drift statistics over a batch of run traces.

    Half-widths are 3 standard errors of the mean; 0.0 for a single run.
    """

    runs: int
    dimension: int
    mean_drift: float
    drift_halfwidth: float
    mean_mutated_union: float
    mutated_union_halfwidth: float
    mean_drift_ratio: float
    drift_ratio_halfwidth: float

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "dimension": self.dimension,
            "mean_drift": self.mean_drift,
            "drift_halfwidth": self.drift_halfwidth,
            "mean_mutated_union": self.mean_mutated_union,
            "mutated_union_halfwidth": self.mutated_union_halfwidth,
            "mean_drift_ratio": self.mean_drift_ratio,
            "drift_ratio_halfwidth": self.drift_ratio_halfwidth,
        }


def _mean_and_halfwidth(values: np.ndarray) -> tuple[float, float]:
    if values.size == 1:
        return float(values[0]), 0.0
    stderr = values.std(ddof=1) / math.sqrt(values.size)
    return float(values.mean()), float(3.0 * stderr)


def drift_statistics(traces) -> DriftSummary:
    """Summarize drift and mutated-coordinate statistics over traces."""
    traces = list(traces)
    if not traces:
        raise ValueError("drift_statistics needs at least one trace")
    dims = {t.dimension for t in traces}
    if len(dims) > 1:
        raise ValueError(f"traces mix dimensions {sorted(dims)}")
    d = dims.pop()
    drifts = np.array([t.hamming_drift for t in traces], dtype=np.float64)
    unions = np.array([len(t.mutated_union()) for t in traces], dtype=np.float64)
    ratios = drifts / d
    mean_drift, hw_drift = _mean_and_halfwidth(drifts)
    mean_union, hw_union = _mean_and_halfwidth(unions)
    mean_ratio, hw_ratio = _mean_and_halfwidth(ratios)
    return DriftSummary(
        runs=len(traces),
        dimension=d,
        mean_drift=mean_drift,
        drift_halfwidth=hw_drift,
        mean_mutated_union=mean_union,
        mutated_union_halfwidth=hw_union,
        mean_drift_ratio=mean_ratio,
        drift_ratio_halfwidth=hw_ratio,
    )
