from fractions import Fraction

import pytest

from htlab.boundary import Ball, StepFunction, dense_target, prob_distance, refine, slice_at
from htlab.errors import AssumptionViolated, DepthExhausted, ValidationError
from htlab.fields import FieldSpec
from htlab.frequency import (build_frequent, build_frequent_on_levels, build_upper_dense, extend_into_ball,
                             first_scheduled_k, membership, verify_frequent, verify_holds)
from htlab.harmonic import TreeFunction, extend_constant, is_harmonic
from htlab.schedule import stage_level, stage_target
from htlab.space import ValueSpace
from htlab.tree import uniform_tree

GF2 = FieldSpec.gf2()
BITS = ValueSpace(GF2)
Q = FieldSpec.rational()
RAT = ValueSpace(Q, 1, "sup_abs")


def test_ball_extension_gap_one():
    t = uniform_tree(3)
    seed = TreeFunction.zero(BITS, t, 0)
    h = StepFunction(1, ((1,), (1,)))
    F = extend_into_ball(seed, 1, h, t)
    d = prob_distance(slice_at(F, 1), h, t, BITS)
    assert d < Fraction(1, 2) and d <= Fraction(1, 4)


def test_ball_extension_discrete_halves_bound():
    t = uniform_tree(8)
    seed = TreeFunction.zero(BITS, t, 1)
    for n in range(1, 6):
        for j in (3, 5, 12):
            h = dense_target(t, BITS, j)
            if h.level > 1 + n:
                continue
            F = extend_into_ball(seed, n, h, t)
            assert prob_distance(slice_at(F, 1 + n), h, t, BITS) <= Fraction(1, 2 ** n) / 2


def test_ball_extension_exact_when_constant():
    t = uniform_tree(5, 2, Q, w="q")
    seed = extend_constant(TreeFunction.from_levels(RAT, [[(Fraction(2),)]]), 2, t)
    h = refine(slice_at(seed, 2), 4, t)
    F = extend_into_ball(seed, 2, h, t)
    assert prob_distance(slice_at(F, 4), h, t, RAT) == 0


def test_ball_extension_errors():
    t = uniform_tree(3)
    seed = TreeFunction.zero(BITS, t, 2)
    with pytest.raises(DepthExhausted):
        extend_into_ball(seed, 2, StepFunction.constant(t, (0,)), t)
    with pytest.raises(ValidationError):
        extend_into_ball(seed, 0, StepFunction.constant(t, (0,)), t)


def test_first_scheduled_stage():
    assert first_scheduled_k(0) == 1
    assert first_scheduled_k(1) == 2
    assert first_scheduled_k(3) == 3
    assert first_scheduled_k(4) == 4


def test_frequent_hits_follow_schedule():
    t = uniform_tree(11)
    f, log = build_frequent(t, TreeFunction.zero(BITS, t, 0), horizon=6)
    assert verify_frequent(f, log, t) == []
    assert is_harmonic(f, t)[0]
    assert [h.level for h in log.hits] == [stage_level(k) for k in range(1, 7)]
    for m in range(1, 4):
        assert log.hit_levels(m) == [stage_level(k) for k in range(1, 7) if stage_target(k) == m]
        assert log.hit_levels(m) == log.expected_levels(m)
    assert all(h.achieved < h.bound for h in log.hits)


def test_frequent_exhaustion_keeps_partial_log():
    t = uniform_tree(8)
    with pytest.raises(DepthExhausted) as exc:
        build_frequent(t, TreeFunction.zero(BITS, t, 0), horizon=8)
    f, log = exc.value.partial
    assert exc.value.max_achievable == 5
    assert [h.k for h in log.hits] == [1, 2, 3, 4, 5]
    assert verify_frequent(f, log, t) == []


def test_frequent_skips_missing_targets():
    t = uniform_tree(11)
    f, log = build_frequent(t, TreeFunction.zero(BITS, t, 0), max_target=1, horizon=6)
    assert log.skipped == [2, 4, 6]
    assert log.hit_levels(1) == log.expected_levels(1)


def test_all_levels_matches_plain_builder():
    t = uniform_tree(10)
    seed = TreeFunction.zero(BITS, t, 0)
    f1, log1 = build_frequent(t, seed, horizon=5)
    f2, log2 = build_frequent_on_levels(t, range(11), seed, horizon=5)
    assert f1.levels[: f2.depth + 1] == f2.levels
    assert [h.level for h in log1.hits] == [h.level for h in log2.hits]


def test_even_levels_collapsed_builder():
    t = uniform_tree(12)
    evens = list(range(0, 13, 2))
    f, log = build_frequent_on_levels(t, evens, TreeFunction.zero(BITS, t, 0), horizon=3)
    assert all(h.level % 2 == 0 for h in log.hits)
    assert [h.level for h in log.hits] == [evens[stage_level(k)] for k in range(1, 4)]
    assert is_harmonic(f, t)[0]
    assert verify_frequent(f, log, t) == []
    for m in (1, 2):
        assert log.hit_levels(m) == log.expected_levels(m, lambda n: evens[n])


def _balls(t, space):
    return [Ball(dense_target(t, space, 0), Fraction(1, 2)), Ball(dense_target(t, space, 1), Fraction(1, 2))]


def test_x_builder_rational_depth32():
    t = uniform_tree(32, 2, Q, w="q")
    balls = _balls(t, RAT)
    held, log = build_upper_dense(t, TreeFunction.zero(RAT, t, 0), balls)
    assert verify_holds(held, log, balls, t) == []
    assert is_harmonic(held.explicit, t)[0]
    for v in log.visits:
        assert v.achieved < balls[v.ball].radius / 2 or v.hit_level is None
        assert v.end > v.start
    assert log.visits[-1].end == 32
    # a ball whose holds end before level 2 has no usable window
    last = log.reports[log.visits[-1].ball]
    assert last is not None and 0 <= last.lower <= last.upper <= 1


def test_x_single_ball_upper_density():
    t = uniform_tree(40, 2, Q, w="q")
    ball = Ball(dense_target(t, RAT, 0), Fraction(1, 2))
    held, log = build_upper_dense(t, TreeFunction.zero(RAT, t, 0), [ball], rounds=3)
    v = log.visits[-1]
    rep = log.reports[0]
    assert rep.upper >= (v.end - v.start + 1) / (v.end + 1) - 1e-12
    assert membership(held, ball, t)[-1] == 40


def test_x_rejects_gf2_ones():
    t = uniform_tree(6)
    with pytest.raises(AssumptionViolated):
        build_upper_dense(t, TreeFunction.zero(BITS, t, 0), _balls(t, BITS))
