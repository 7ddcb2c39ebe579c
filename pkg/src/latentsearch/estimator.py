"""Scikit-learn style adapter around the search loop.

``LatentRefiner`` treats refinement as a transform: each row of X is a
start point, and the corresponding output row is the best point the
budgeted search found from it.  Construction stores parameters
unvalidated (so ``get_params``/``set_params``/``clone`` behave as usual)
and ``fit`` resolves and validates everything.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import RunTrace, SearchConfig, evolve
from .distributions import LatentDistribution, distribution_from_spec
from .harness import derive_seed
from .objectives import Objective, objective_from_spec
from .validation import check_alpha, check_budget, check_latent, check_seed

__all__ = ["LatentRefiner"]


class LatentRefiner(BaseEstimator, TransformerMixin):
    """Budgeted stochastic refinement of latent points.

    Parameters
    ----------
    objective : Objective or dict
        Scorer to maximize, or a config spec for one.
    distribution : LatentDistribution or dict
        Prior the mutation operator resamples coordinates from, or a
        config spec for one.
    alpha : float, default=0.0
        Mutation-rate scale.  0 keeps the rate at 1/d; inf resamples
        every coordinate each step.
    budget : int, default=40
        Number of candidate evaluations per row.
    seed : int, default=0
        Base seed.  Row i of ``transform`` runs with a seed derived from
        (seed, i), so rows are independent and order-stable.
    reevaluate_incumbent : bool, default=False
        Re-score the incumbent at every comparison instead of reusing
        its cached score.

    Attributes
    ----------
    objective_ : Objective
    distribution_ : LatentDistribution
    dimension_ : int
    n_features_in_ : int
    """

    def __init__(
        self,
        objective=None,
        distribution=None,
        alpha: float = 0.0,
        budget: int = 40,
        seed: int = 0,
        reevaluate_incumbent: bool = False,
    ):
        self.objective = objective
        self.distribution = distribution
        self.alpha = alpha
        self.budget = budget
        self.seed = seed
        self.reevaluate_incumbent = reevaluate_incumbent

    def fit(self, X=None, y=None):
        """Resolve objective and distribution; X only pins the dimension.

        X is optional: the dimension can come from a distribution or
        objective instance instead.  Nothing is learned from data.
        """
        check_alpha(self.alpha)
        check_budget(self.budget)
        check_seed(self.seed)

        dimension = None
        if isinstance(self.distribution, LatentDistribution):
            dimension = self.distribution.dimension
        elif isinstance(self.objective, Objective):
            dimension = self.objective.dimension
        elif X is not None:
            X = np.asarray(X, dtype=np.float64)
            if X.ndim != 2:
                raise ValueError(f"X must be 2-D, got shape {X.shape}")
            dimension = X.shape[1]

        if isinstance(self.distribution, LatentDistribution):
            self.distribution_ = self.distribution
        elif isinstance(self.distribution, dict):
            self.distribution_ = distribution_from_spec(self.distribution, dimension)
        else:
            raise ValueError(
                "distribution must be a LatentDistribution or a config dict, "
                f"got {type(self.distribution).__name__}"
            )

        if isinstance(self.objective, Objective):
            self.objective_ = self.objective
        elif isinstance(self.objective, dict):
            self.objective_ = objective_from_spec(
                self.objective, self.distribution_.dimension
            )
        else:
            raise ValueError(
                "objective must be an Objective or a config dict, "
                f"got {type(self.objective).__name__}"
            )

        if self.objective_.dimension != self.distribution_.dimension:
            raise ValueError(
                f"objective dimension {self.objective_.dimension} != "
                f"distribution dimension {self.distribution_.dimension}"
            )
        self.dimension_ = self.distribution_.dimension
        self.n_features_in_ = self.dimension_
        return self

    def _config(self, seed: int) -> SearchConfig:
        return SearchConfig(
            budget=self.budget,
            alpha=self.alpha,
            dimension=self.dimension_,
            seed=seed,
            reevaluate_incumbent=self.reevaluate_incumbent,
        )

    def transform(self, X) -> np.ndarray:
        """Refine each row of X; returns an array of the same shape."""
        check_is_fitted(self, "dimension_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dimension_:
            raise ValueError(
                f"X must have shape (n, {self.dimension_}), got {X.shape}"
            )
        out = np.empty_like(X)
        for i, row in enumerate(X):
            trace = evolve(
                self.objective_,
                self.distribution_,
                self._config(derive_seed(self.seed, i)),
                start=row,
            )
            out[i] = trace.final_point
        return out

    def optimize(self, start=None) -> RunTrace:
        """Run one full search and return its trace.

        Uses the base seed directly (not a derived one) so a single run
        matches the functional ``evolve`` call with the same arguments.
        """
        check_is_fitted(self, "dimension_")
        if start is not None:
            start = check_latent(start, self.dimension_)
        return evolve(
            self.objective_, self.distribution_, self._config(self.seed), start=start
        )
