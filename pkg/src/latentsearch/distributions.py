"""Latent priors with whole-vector sampling and per-coordinate marginals.

Coordinates are always independent.  ``sample_marginals`` is the single
sampling primitive; ``sample_full`` is defined as the marginals of all d
coordinates, so full samples and marginal resampling agree by
construction.  The per-kind draw formulas below are part of the public
contract (replay oracles reproduce them verbatim):

- standard-normal: one ``rng.standard_normal`` variate per coordinate;
- uniform-box:     ``low[i] + u * (high[i] - low[i])`` with u = rng.random();
- discrete-set:    ``values[i][min(floor(u * m_i), m_i - 1)]``;
- point-mass:      the fixed value, consuming no randomness.
"""

from __future__ import annotations

import abc

import numpy as np

from .validation import check_dimension

__all__ = [
    "LatentDistribution",
    "StandardNormal",
    "UniformBox",
    "DiscreteSet",
    "PointMass",
    "distribution_from_spec",
]


class LatentDistribution(abc.ABC):
    """Immutable prior on R^d; safe to share across concurrent runs."""

    def __init__(self, dimension: int):
        self._dimension = check_dimension(dimension)

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    @abc.abstractmethod
    def kind(self) -> str:
        """Config-file identifier of this distribution family."""

    @abc.abstractmethod
    def sample_marginals(self, indices, rng) -> np.ndarray:
        """Independent draws from the marginals at the given indices."""

    def sample_full(self, rng) -> np.ndarray:
        """One full vector: the marginals of all d coordinates in order."""
        return self.sample_marginals(np.arange(self._dimension), rng)

    def sample_marginal(self, i: int, rng) -> float:
        """One draw from marginal i."""
        return float(self.sample_marginals(self._check_indices([i]), rng)[0])

    def _check_indices(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError(f"indices must be 1-D, got shape {idx.shape}")
        if idx.size and (idx.min() < 0 or idx.max() >= self._dimension):
            raise ValueError(
                f"coordinate index out of range [0, {self._dimension}): {idx}"
            )
        return idx

    def spec(self) -> dict:
        """Round-trippable config dictionary (see distribution_from_spec)."""
        return {"kind": self.kind}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dimension={self._dimension})"


class StandardNormal(LatentDistribution):
    """N(0, I_d), the default prior of most latent-variable generators."""

    @property
    def kind(self) -> str:
        return "standard-normal"

    def sample_marginals(self, indices, rng) -> np.ndarray:
        idx = self._check_indices(indices)
        return rng.standard_normal(idx.size)


class UniformBox(LatentDistribution):
    """Independent uniform marginals on [low_i, high_i]."""

    def __init__(self, low, high, dimension: int | None = None):
        low = np.asarray(low, dtype=np.float64)
        high = np.asarray(high, dtype=np.float64)
        if dimension is None:
            if low.ndim == 0 and high.ndim == 0:
                raise ValueError("scalar bounds require an explicit dimension")
            dimension = max(low.size, high.size)
        super().__init__(dimension)
        self._low = np.broadcast_to(low, (self.dimension,)).astype(np.float64)
        self._high = np.broadcast_to(high, (self.dimension,)).astype(np.float64)
        if not (np.all(np.isfinite(self._low)) and np.all(np.isfinite(self._high))):
            raise ValueError("uniform-box bounds must be finite")
        if not np.all(self._low < self._high):
            raise ValueError("uniform-box requires low < high in every coordinate")

    @property
    def kind(self) -> str:
        return "uniform-box"

    def sample_marginals(self, indices, rng) -> np.ndarray:
        idx = self._check_indices(indices)
        u = rng.random(idx.size)
        return self._low[idx] + u * (self._high[idx] - self._low[idx])

    def spec(self) -> dict:
        return {
            "kind": self.kind,
            "low": self._low.tolist(),
            "high": self._high.tolist(),
        }


class DiscreteSet(LatentDistribution):
    """Uniform draws from a finite, nonempty value set per coordinate.

    ``values`` is either one sequence shared by every coordinate (requires
    an explicit dimension) or one sequence per coordinate.
    """

    def __init__(self, values, dimension: int | None = None):
        values = list(values)
        if not values:
            raise ValueError("discrete-set requires at least one value list")
        nested = isinstance(values[0], (list, tuple, np.ndarray))
        if not nested:
            if dimension is None:
                raise ValueError("a shared value list requires an explicit dimension")
            per_coord = [values] * dimension
        else:
            per_coord = [list(v) for v in values]
            if dimension is None:
                dimension = len(per_coord)
            elif len(per_coord) == 1:
                per_coord = per_coord * dimension
            elif len(per_coord) != dimension:
                raise ValueError(
                    f"got {len(per_coord)} value lists for dimension {dimension}"
                )
        super().__init__(dimension)
        counts = [len(v) for v in per_coord]
        if min(counts) < 1:
            raise ValueError("discrete-set value lists must be nonempty")
        self._counts = np.array(counts, dtype=np.int64)
        self._offsets = np.concatenate(([0], np.cumsum(self._counts[:-1])))
        self._flat = np.concatenate([np.asarray(v, dtype=np.float64) for v in per_coord])
        if not np.all(np.isfinite(self._flat)):
            raise ValueError("discrete-set values must be finite")

    @property
    def kind(self) -> str:
        return "discrete-set"

    def sample_marginals(self, indices, rng) -> np.ndarray:
        idx = self._check_indices(indices)
        u = rng.random(idx.size)
        m = self._counts[idx]
        # floor(u * m) capped at m - 1; exact-uniform for power-of-two set
        # sizes, off by < 2**-53 otherwise.
        j = np.minimum((u * m).astype(np.int64), m - 1)
        return self._flat[self._offsets[idx] + j]

    def values_at(self, i: int) -> np.ndarray:
        off, n = self._offsets[i], self._counts[i]
        return self._flat[off : off + n].copy()

    def spec(self) -> dict:
        return {
            "kind": self.kind,
            "values": [self.values_at(i).tolist() for i in range(self.dimension)],
        }


class PointMass(LatentDistribution):
    """Degenerate prior: every draw returns the fixed vector, no randomness."""

    def __init__(self, values, dimension: int | None = None):
        values = np.asarray(values, dtype=np.float64)
        if dimension is None:
            if values.ndim == 0:
                raise ValueError("a scalar point mass requires an explicit dimension")
            dimension = values.size
        super().__init__(dimension)
        self._values = np.broadcast_to(values, (self.dimension,)).astype(np.float64)
        if not np.all(np.isfinite(self._values)):
            raise ValueError("point-mass values must be finite")

    @property
    def kind(self) -> str:
        return "point-mass"

    @property
    def values(self) -> np.ndarray:
        return self._values.copy()

    def sample_marginals(self, indices, rng) -> np.ndarray:
        idx = self._check_indices(indices)
        return self._values[idx].copy()

    def spec(self) -> dict:
        return {"kind": self.kind, "values": self._values.tolist()}


_KINDS = {
    "standard-normal": StandardNormal,
    "uniform-box": UniformBox,
    "discrete-set": DiscreteSet,
    "point-mass": PointMass,
}


def distribution_from_spec(spec: dict, dimension: int) -> LatentDistribution:
    """Build a distribution from a strict config dictionary.

    Unknown keys are rejected so a misspelled field can never silently
    fall back to a default.
    """
    if not isinstance(spec, dict):
        raise ValueError(f"distribution spec must be an object, got {spec!r}")
    if "kind" not in spec:
        raise ValueError("distribution spec is missing 'kind'")
    kind = spec["kind"]
    if kind not in _KINDS:
        raise ValueError(
            f"unknown distribution kind {kind!r}; expected one of {sorted(_KINDS)}"
        )
    extra = dict(spec)
    extra.pop("kind")
    if kind == "standard-normal":
        _reject_unknown(extra, set())
        return StandardNormal(dimension)
    if kind == "uniform-box":
        _reject_unknown(extra, {"low", "high"})
        if "low" not in extra or "high" not in extra:
            raise ValueError("uniform-box spec requires 'low' and 'high'")
        return UniformBox(extra["low"], extra["high"], dimension=dimension)
    if kind == "discrete-set":
        _reject_unknown(extra, {"values"})
        if "values" not in extra:
            raise ValueError("discrete-set spec requires 'values'")
        return DiscreteSet(extra["values"], dimension=dimension)
    _reject_unknown(extra, {"values"})
    if "values" not in extra:
        raise ValueError("point-mass spec requires 'values'")
    return PointMass(extra["values"], dimension=dimension)


def _reject_unknown(extra: dict, allowed: set) -> None:
    unknown = set(extra) - allowed
    if unknown:
        raise ValueError(f"unknown distribution spec keys: {sorted(unknown)}")
