"""Black-box score functions over latent vectors.

The search loop only ever compares scores, never interprets their
magnitude, so any monotone rescaling of an objective leaves the optimizer
unchanged.  The synthetic objectives here are exact, pure functions used
as test oracles; real generator-plus-scorer pipelines attach through the
subprocess protocol (see the protocol module).
"""

from __future__ import annotations

import abc
import math

import numpy as np

from .validation import check_dimension, check_latent

__all__ = [
    "EvaluationError",
    "Objective",
    "SphereObjective",
    "StaircaseObjective",
    "RastriginObjective",
    "ConstantObjective",
    "FirstCoordinateObjective",
    "AlwaysAcceptObjective",
    "CallCountingObjective",
    "objective_from_spec",
]


class EvaluationError(RuntimeError):
    """The objective failed or produced a non-finite score."""


class Objective(abc.ABC):
    """A score function Q over latent vectors of a fixed dimension.

    ``deterministic`` promises identical scores for identical inputs;
    ``concurrency_safe`` promises evaluate() may be called from several
    runs at once.  Both default to True and must be overridden by
    implementations that cannot keep the promise.
    """

    deterministic: bool = True
    concurrency_safe: bool = True

    def __init__(self, dimension: int):
        self._dimension = check_dimension(dimension)

    @property
    def dimension(self) -> int:
        return self._dimension

    def evaluate(self, z) -> float:
        """Score one latent vector; always finite or EvaluationError."""
        z = check_latent(z, self._dimension)
        value = float(self._score(z))
        if not math.isfinite(value):
            raise EvaluationError(f"non-finite score {value!r} from {self!r}")
        return value

    __call__ = evaluate

    @abc.abstractmethod
    def _score(self, z: np.ndarray) -> float:
        """Raw score; evaluate() handles validation and finiteness."""

    def spec(self) -> dict:
        """Round-trippable config dictionary (see objective_from_spec)."""
        raise NotImplementedError(f"{type(self).__name__} has no config spec")

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dimension={self._dimension})"


class SphereObjective(Objective):
    """score = -(squared distance to a fixed target); unique maximizer."""

    def __init__(self, target):
        target = check_latent(target)
        super().__init__(target.size)
        self._target = target.copy()

    @property
    def target(self) -> np.ndarray:
        return self._target.copy()

    def _score(self, z: np.ndarray) -> float:
        diff = z - self._target
        return -float(diff @ diff)

    def spec(self) -> dict:
        return {"name": "sphere", "target": self._target.tolist()}


class StaircaseObjective(Objective):
    """Separable plateau-rich score: sum_i floor(steps * z_i) / steps."""

    def __init__(self, dimension: int, steps: int = 10):
        super().__init__(dimension)
        if int(steps) < 1:
            raise ValueError(f"steps must be >= 1, got {steps}")
        self._steps = int(steps)

    @property
    def steps(self) -> int:
        return self._steps

    def _score(self, z: np.ndarray) -> float:
        return float(np.floor(self._steps * z).sum() / self._steps)

    def spec(self) -> dict:
        return {"name": "staircase", "steps": self._steps}


class RastriginObjective(Objective):
    """Multimodal score: the negated Rastrigin function (maximum 0 at 0)."""

    def _score(self, z: np.ndarray) -> float:
        return -float(10.0 * z.size + np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z)))

    def spec(self) -> dict:
        return {"name": "rastrigin"}


class ConstantObjective(Objective):
    """Same score everywhere; strict improvement never occurs."""

    def __init__(self, dimension: int, value: float = 0.0):
        super().__init__(dimension)
        self._value = float(value)
        if not math.isfinite(self._value):
            raise ValueError(f"constant objective value must be finite, got {value}")

    @property
    def value(self) -> float:
        return self._value

    def _score(self, z: np.ndarray) -> float:
        return self._value

    def spec(self) -> dict:
        return {"name": "constant", "value": self._value}


class FirstCoordinateObjective(Objective):
    """score = z[0]; mirrors the mock bridge's scorer for protocol tests."""

    def _score(self, z: np.ndarray) -> float:
        return float(z[0])

    def spec(self) -> dict:
        return {"name": "first-coordinate"}


class AlwaysAcceptObjective(Objective):
    """Strictly increasing score on every call, so every proposal wins.

    Turns drift bounds into directly measurable quantities: with every
    candidate accepted, the mutated-coordinate statistics are exactly the
    mutation process's own.  Stateful, hence neither deterministic nor
    safe to share across concurrent runs; build one instance per run.
    """

    deterministic = False
    concurrency_safe = False

    def __init__(self, dimension: int):
        super().__init__(dimension)
        self._calls = 0

    def _score(self, z: np.ndarray) -> float:
        self._calls += 1
        return float(self._calls)

    def spec(self) -> dict:
        return {"name": "always-accept"}


class CallCountingObjective(Objective):
    """Transparent wrapper counting evaluate() calls on the inner objective."""

    def __init__(self, inner: Objective):
        super().__init__(inner.dimension)
        self.inner = inner
        self.deterministic = inner.deterministic
        self.concurrency_safe = False
        self.calls = 0

    def _score(self, z: np.ndarray) -> float:
        self.calls += 1
        return self.inner.evaluate(z)


_SYNTHETIC = {
    "sphere",
    "staircase",
    "rastrigin",
    "constant",
    "first-coordinate",
    "always-accept",
    "external",
}


def objective_from_spec(spec: dict, dimension: int) -> Objective:
    """Build an objective from a strict config dictionary.

    Synthetic specs: {"name": "sphere", "target": [...]} (target defaults
    to the origin), {"name": "staircase", "steps": 10},
    {"name": "rastrigin"}, {"name": "constant", "value": 0.0},
    {"name": "first-coordinate"}, {"name": "always-accept"}.
    External processes: {"name": "external", "command": [...] or "cmd",
    "handshake_timeout": 10.0, "request_timeout": 60.0}.
    """
    if not isinstance(spec, dict):
        raise ValueError(f"objective spec must be an object, got {spec!r}")
    if "name" not in spec:
        raise ValueError("objective spec is missing 'name'")
    name = spec["name"]
    if name not in _SYNTHETIC:
        raise ValueError(
            f"unknown objective {name!r}; expected one of {sorted(_SYNTHETIC)}"
        )
    extra = dict(spec)
    extra.pop("name")
    if name == "sphere":
        _reject_unknown(extra, {"target"})
        target = extra.get("target")
        if target is None:
            target = np.zeros(dimension)
        return SphereObjective(check_latent(target, dimension))
    if name == "staircase":
        _reject_unknown(extra, {"steps"})
        return StaircaseObjective(dimension, steps=extra.get("steps", 10))
    if name == "rastrigin":
        _reject_unknown(extra, set())
        return RastriginObjective(dimension)
    if name == "constant":
        _reject_unknown(extra, {"value"})
        return ConstantObjective(dimension, value=extra.get("value", 0.0))
    if name == "first-coordinate":
        _reject_unknown(extra, set())
        return FirstCoordinateObjective(dimension)
    if name == "always-accept":
        _reject_unknown(extra, set())
        return AlwaysAcceptObjective(dimension)
    _reject_unknown(extra, {"command", "handshake_timeout", "request_timeout"})
    if "command" not in extra:
        raise ValueError("external objective spec requires 'command'")
    from .protocol import ExternalObjective

    obj = ExternalObjective(
        extra["command"],
        handshake_timeout=extra.get("handshake_timeout", 10.0),
        request_timeout=extra.get("request_timeout", 60.0),
    )
    if obj.dimension != dimension:
        announced = obj.dimension
        obj.close()
        raise ValueError(
            f"external objective announced dimension {announced}, expected {dimension}"
        )
    return obj


def _reject_unknown(extra: dict, allowed: set) -> None:
    unknown = set(extra) - allowed
    if unknown:
        raise ValueError(f"unknown objective spec keys: {sorted(unknown)}")
