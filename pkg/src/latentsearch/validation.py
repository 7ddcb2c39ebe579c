"""Input validation helpers shared across the package.

All public entry points funnel their arguments through these checkers so
error messages stay uniform and the numeric contracts (finite coordinates,
positive dimensions, alpha in [0, inf]) are enforced in exactly one place.
"""

from __future__ import annotations

import math
import numbers

import numpy as np

MAX_SEED = 2**64 - 1


def check_dimension(dimension) -> int:
    """Validate a latent-space dimension (positive integer)."""
    if isinstance(dimension, bool) or not isinstance(dimension, numbers.Integral):
        raise ValueError(f"dimension must be an integer, got {dimension!r}")
    dimension = int(dimension)
    if dimension < 1:
        raise ValueError(f"dimension must be >= 1, got {dimension}")
    return dimension


def check_budget(budget) -> int:
    """Validate an evaluation budget (positive integer)."""
    if isinstance(budget, bool) or not isinstance(budget, numbers.Integral):
        raise ValueError(f"budget must be an integer, got {budget!r}")
    budget = int(budget)
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    return budget


def check_alpha(alpha) -> float:
    """Validate a mutation strength: a float in [0, inf], inf allowed."""
    if isinstance(alpha, bool) or not isinstance(alpha, numbers.Real):
        raise ValueError(f"alpha must be a real number, got {alpha!r}")
    alpha = float(alpha)
    if math.isnan(alpha) or alpha < 0.0:
        raise ValueError(f"alpha must be in [0, inf], got {alpha}")
    return alpha


def check_seed(seed) -> int:
    """Validate an RNG seed (unsigned 64-bit integer)."""
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return seed


def check_latent(values, dimension: int | None = None) -> np.ndarray:
    """Validate a latent vector: 1-D, finite, optionally of a given length.

    Returns a float64 array (a copy only when conversion is needed).
    """
    z = np.asarray(values, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError(f"latent vector must be 1-D, got shape {z.shape}")
    if z.size < 1:
        raise ValueError("latent vector must have at least one coordinate")
    if dimension is not None and z.size != dimension:
        raise ValueError(
            f"latent vector has length {z.size}, expected {dimension}"
        )
    if not np.all(np.isfinite(z)):
        raise ValueError("latent vector contains non-finite coordinates")
    return z


def check_finite_score(value, context: str = "objective") -> float:
    """Validate a score value; non-finite scores are never comparable."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{context} produced a non-finite score: {value!r}")
    return value
