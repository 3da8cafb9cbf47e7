import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from htlab.boundary import (Ball, StepFunction, dense_target, dense_target_count, monte_carlo_distance,
                            perturb_nonisolated, prob_distance, refine, slice_at)
from htlab.errors import ValidationError
from htlab.fields import FieldSpec
from htlab.generators import random_harmonic, random_tree, random_values
from htlab.harmonic import TreeFunction
from htlab.space import ValueSpace
from htlab.tree import uniform_tree

GF2 = FieldSpec.gf2()
BITS = ValueSpace(GF2)
Q = FieldSpec.rational()
RAT = ValueSpace(Q, 1, "sup_abs")


def step(level, bits):
    return StepFunction(level, tuple((b,) for b in bits))


def test_refine_examples():
    t = uniform_tree(3)
    h = step(1, [0, 1])
    assert refine(h, 1, t) == h
    assert refine(StepFunction.constant(t, (1,)), 2, t).values == ((1,),) * 4
    assert refine(h, 3, t).values == ((0,),) * 4 + ((1,),) * 4
    assert prob_distance(h, refine(h, 3, t), t, BITS) == 0
    with pytest.raises(ValueError):
        refine(refine(h, 2, t), 1, t)


def test_distance_examples():
    t = uniform_tree(3)
    h = step(2, [0, 0, 0, 0])
    g = step(2, [0, 1, 0, 0])
    # one sector of measure 1/4, bounded discrete distance 1/2
    assert prob_distance(h, g, t, BITS) == Fraction(1, 8)
    assert prob_distance(h, step(2, [1, 1, 1, 1]), t, BITS) == Fraction(1, 2)
    assert prob_distance(h, h, t, BITS) == 0


def test_slice_examples():
    t = uniform_tree(2, 2, Q, w="q")
    f = TreeFunction.from_levels(RAT, [[(Fraction(1),)], [(Fraction(3),), (Fraction(-1),)]])
    assert slice_at(f, 0).values == ((1,),)
    lv = slice_at(f, 1).values
    assert f.levels[0][0][0] == (lv[0][0] + lv[1][0]) / 2
    z = TreeFunction.zero(RAT, t, 2)
    assert all(all(v == (0,) for v in slice_at(z, n).values) for n in range(3))
    with pytest.raises(ValueError):
        slice_at(z, 3)


def test_ball_requires_positive_radius():
    t = uniform_tree(2)
    with pytest.raises(ValidationError):
        Ball(StepFunction.constant(t, (0,)), Fraction(0))
    b = Ball(StepFunction.constant(t, (0,)), Fraction(1, 4))
    assert b.contains(step(2, [1, 0, 0, 0]), t, BITS)
    assert not b.contains(step(1, [1, 0]), t, BITS)


def test_dense_target_finite_order():
    t = uniform_tree(3)
    assert dense_target(t, BITS, 0) == step(0, [0])
    assert dense_target(t, BITS, 1) == step(0, [1])
    # levels 0 and 1 contribute 2 + 4 functions; index 6 opens level 2
    assert [dense_target(t, BITS, j).level for j in range(7)] == [0, 0, 1, 1, 1, 1, 2]
    level1 = {dense_target(t, BITS, j).values for j in range(7) if dense_target(t, BITS, j).level == 1}
    assert len(level1) == 4
    assert dense_target_count(t, BITS) == 2 + 4 + 16 + 256
    with pytest.raises(ValidationError) as exc:
        dense_target(t, BITS, 278)
    assert "277" in str(exc.value)


def test_dense_target_rational_diagonal():
    t = uniform_tree(4, 2, Q, w="q")
    seen = [dense_target(t, RAT, j) for j in range(60)]
    assert seen[0] == StepFunction(0, ((Fraction(0),),))
    assert len({(h.level, h.values) for h in seen}) == len(seen)
    assert {h.level for h in seen} >= {0, 1, 2}


def test_dense_target_reaches_given_function():
    t = uniform_tree(3, 2, Q, w="q")
    want = StepFunction(1, ((Fraction(-1),), (Fraction(1, 2),)))
    assert any(dense_target(t, RAT, j) == want for j in range(200))


def test_perturb_examples():
    t = uniform_tree(4)
    h = step(0, [0])
    g = perturb_nonisolated(h, Fraction(1, 4), t, BITS)
    d = prob_distance(h, g, t, BITS)
    assert 0 < d < Fraction(1, 4) and d <= Fraction(1, 16)
    g2 = perturb_nonisolated(h, 2, t, BITS)
    assert 0 < prob_distance(h, g2, t, BITS) < 2
    with pytest.raises(ValidationError):
        perturb_nonisolated(h, Fraction(1, 4), t, ValueSpace(GF2, 0))
    with pytest.raises(ValidationError):
        perturb_nonisolated(h, Fraction(1, 1000), t, BITS)


def _random_step(rng, t, space):
    n = rng.randint(0, t.depth)
    return StepFunction(n, tuple(random_values(rng, space, t.size(n))))


@given(st.integers(0, 2 ** 32))
def test_refinement_invariance(seed):
    rng = random.Random(seed)
    t = random_tree(rng, 4, Q, w="q")
    h, g = _random_step(rng, t, RAT), _random_step(rng, t, RAT)
    m = rng.randint(max(h.level, g.level), t.depth)
    assert prob_distance(h, g, t, RAT) == prob_distance(refine(h, m, t), refine(g, m, t), t, RAT)


@given(st.integers(0, 2 ** 32))
def test_distance_metric_axioms(seed):
    rng = random.Random(seed)
    t = random_tree(rng, 4, Q, w="q")
    a, b, c = (_random_step(rng, t, RAT) for _ in range(3))
    ab = prob_distance(a, b, t, RAT)
    assert ab == prob_distance(b, a, t, RAT)
    assert prob_distance(a, c, t, RAT) <= ab + prob_distance(b, c, t, RAT)
    assert 0 <= ab < 1


def test_monte_carlo_agrees():
    rng = np.random.default_rng(7)
    pyrng = random.Random(7)
    t = random_tree(pyrng, 6, Q, w="q")
    h = StepFunction(6, tuple(random_values(pyrng, RAT, t.size(6))))
    g = StepFunction(3, tuple(random_values(pyrng, RAT, t.size(3))))
    exact = prob_distance(h, g, t, RAT)
    est = monte_carlo_distance(h, g, t, RAT, 10_000, rng)
    assert abs(est - float(exact)) <= 4 / 100


def test_step_json_round_trip():
    h = StepFunction(1, ((Fraction(1, 3),), (Fraction(-2),)))
    assert StepFunction.from_json(h.to_json(RAT), RAT) == h


def test_random_harmonic_slices_are_steps():
    rng = random.Random(3)
    t = random_tree(rng, 3, Q, w="q")
    f = random_harmonic(rng, t, RAT, 3)
    for n in range(4):
        assert len(slice_at(f, n).values) == t.size(n)
