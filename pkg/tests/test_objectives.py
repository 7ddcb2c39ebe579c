import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latentsearch.objectives import (
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


class TestSphere:
    def test_maximum_at_target(self):
        target = np.array([1.0, -2.0, 0.5])
        obj = SphereObjective(target)
        assert obj.evaluate(target) == 0.0

    def test_known_value(self):
        obj = SphereObjective(np.zeros(2))
        assert obj.evaluate(np.array([3.0, 4.0])) == -25.0

    def test_strictly_below_zero_away_from_target(self):
        obj = SphereObjective(np.zeros(3))
        assert obj.evaluate(np.array([0.0, 0.0, 1e-8])) < 0.0

    @given(st.integers(0, 2**32))
    def test_monotone_in_distance(self, seed):
        rng = np.random.default_rng(seed)
        target = rng.standard_normal(4)
        obj = SphereObjective(target)
        direction = rng.standard_normal(4)
        direction /= np.linalg.norm(direction)
        near = obj.evaluate(target + 0.5 * direction)
        far = obj.evaluate(target + 1.5 * direction)
        assert near > far


class TestStaircase:
    def test_known_values(self):
        obj = StaircaseObjective(2, steps=10)
        assert obj.evaluate(np.array([0.05, 0.0])) == 0.0
        assert obj.evaluate(np.array([0.25, 0.0])) == 0.2
        assert obj.evaluate(np.array([-0.05, 0.0])) == -0.1

    def test_plateaus_are_flat(self):
        obj = StaircaseObjective(1, steps=10)
        assert obj.evaluate(np.array([0.11])) == obj.evaluate(np.array([0.19]))

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError, match="steps"):
            StaircaseObjective(2, steps=0)


class TestRastrigin:
    def test_global_maximum_at_origin(self):
        obj = RastriginObjective(3)
        assert obj.evaluate(np.zeros(3)) == 0.0
        assert obj.evaluate(np.full(3, 0.5)) < 0.0

    def test_local_maxima_at_integers_are_suboptimal(self):
        obj = RastriginObjective(1)
        assert obj.evaluate(np.array([1.0])) < obj.evaluate(np.array([0.0]))


class TestConstant:
    def test_same_everywhere(self):
        obj = ConstantObjective(4, value=2.5)
        rng = np.random.default_rng(0)
        assert {obj.evaluate(rng.standard_normal(4)) for _ in range(10)} == {2.5}

    def test_rejects_non_finite_value(self):
        with pytest.raises(ValueError, match="finite"):
            ConstantObjective(4, value=math.inf)


class TestFirstCoordinate:
    def test_reads_only_the_first_coordinate(self):
        obj = FirstCoordinateObjective(3)
        assert obj.evaluate(np.array([0.25, 9.0, -9.0])) == 0.25


class TestAlwaysAccept:
    def test_scores_strictly_increase(self):
        obj = AlwaysAcceptObjective(2)
        z = np.zeros(2)
        scores = [obj.evaluate(z) for _ in range(5)]
        assert scores == [1.0, 2.0, 3.0, 4.0, 5.0]

    def test_flagged_nondeterministic_and_unshared(self):
        obj = AlwaysAcceptObjective(2)
        assert not obj.deterministic
        assert not obj.concurrency_safe


class TestCallCounting:
    def test_counts_and_forwards(self):
        inner = SphereObjective(np.zeros(2))
        obj = CallCountingObjective(inner)
        assert obj.evaluate(np.array([1.0, 0.0])) == -1.0
        assert obj.evaluate(np.array([0.0, 2.0])) == -4.0
        assert obj.calls == 2


class _NaNObjective(Objective):
    def _score(self, z):
        return float("nan")


class TestEvaluateContract:
    def test_non_finite_score_is_a_hard_error(self):
        with pytest.raises(EvaluationError, match="non-finite"):
            _NaNObjective(2).evaluate(np.zeros(2))

    def test_wrong_dimension_rejected(self):
        with pytest.raises(ValueError, match="length"):
            SphereObjective(np.zeros(3)).evaluate(np.zeros(4))

    def test_non_finite_input_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            SphereObjective(np.zeros(2)).evaluate(np.array([1.0, math.nan]))

    def test_call_alias(self):
        obj = SphereObjective(np.zeros(2))
        z = np.array([1.0, 1.0])
        assert obj(z) == obj.evaluate(z)

    def test_accepts_plain_lists(self):
        assert SphereObjective(np.zeros(2)).evaluate([1.0, 0.0]) == -1.0


class TestSpecParsing:
    def test_sphere_round_trip(self):
        obj = objective_from_spec({"name": "sphere", "target": [1.0, 2.0]}, 2)
        assert isinstance(obj, SphereObjective)
        assert objective_from_spec(obj.spec(), 2).evaluate([1.0, 2.0]) == 0.0

    def test_sphere_target_defaults_to_origin(self):
        obj = objective_from_spec({"name": "sphere"}, 3)
        assert obj.evaluate(np.zeros(3)) == 0.0

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="unknown objective"):
            objective_from_spec({"name": "ackley"}, 2)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown objective spec keys"):
            objective_from_spec({"name": "sphere", "radius": 1.0}, 2)

    def test_missing_name_rejected(self):
        with pytest.raises(ValueError, match="name"):
            objective_from_spec({}, 2)

    def test_external_requires_command(self):
        with pytest.raises(ValueError, match="command"):
            objective_from_spec({"name": "external"}, 2)

    @pytest.mark.parametrize(
        "spec",
        [
            {"name": "staircase", "steps": 4},
            {"name": "rastrigin"},
            {"name": "constant", "value": 1.0},
            {"name": "first-coordinate"},
            {"name": "always-accept"},
        ],
        ids=lambda s: s["name"],
    )
    def test_synthetic_specs_build_and_round_trip(self, spec):
        obj = objective_from_spec(spec, 4)
        assert obj.dimension == 4
        rebuilt = objective_from_spec(obj.spec(), 4)
        assert type(rebuilt) is type(obj)
