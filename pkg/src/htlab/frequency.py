"""Frequent universality driven by the revisit schedule, optionally run through
a collapsed tree.

The hold-based builder at the end copies values down long runs of levels so
that its slices stay in every basis ball on sets of large upper density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .boundary import Ball, StepFunction, prob_distance, dense_target, slice_at, refine
from .constructors import hit
from .errors import AssumptionViolated, DepthExhausted, ResourceLimit, ValidationError
from .harmonic import (TreeFunction, extend_constant, solve_extension, free_slots, harmonic_fill,
                       is_harmonic, slot_measure)
from .schedule import density, stage_level, stage_target
from .space import ValueSpace
from .tree import WeightedTree, collapse


def extend_into_ball(seed: TreeFunction, n: int, h: StepFunction, t: WeightedTree) -> TreeFunction:
    """Extend seed by n levels so that the slice at the new depth lies within 2^-n of h."""
    s = seed.depth
    if n < 1:
        raise ValidationError("gap must be at least 1")
    if s + n > t.depth:
        raise DepthExhausted(f"level {s + n} is beyond depth {t.depth}")
    if h.level > s + n:
        raise ValidationError(f"target lives on level {h.level}, below the hit level {s + n}")
    if not t.can_materialize(s + n):
        raise ResourceLimit(f"level {s + n} exceeds the vertex cap")
    return hit(seed, free_slots(t, s, s + n), h, t)


# ---------------------------------------------------------------------------
# frequent universality
# ---------------------------------------------------------------------------


@dataclass
class FrequentHit:
    k: int
    schedule_level: int
    level: int  # level in the tree the function lives on (differs after collapsing)
    target: int
    achieved: Fraction
    bound: Fraction

    def to_json(self) -> dict:
        return {"k": self.k, "schedule_level": self.schedule_level, "level": self.level, "target": self.target,
                "achieved": str(self.achieved), "bound": str(self.bound)}


@dataclass
class FrequentLog:
    start_k: int
    horizon: int
    targets: list[StepFunction]
    hits: list[FrequentHit] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)  # stages whose target index exceeds the target count

    def hit_levels(self, m: int) -> list[int]:
        return [h.level for h in self.hits if h.target == m]

    def expected_levels(self, m: int, level_of=lambda n: n) -> list[int]:
        """Schedule levels of the completed stages visiting target m, as tree levels."""
        last = self.hits[-1].k if self.hits else self.start_k - 1
        return [level_of(stage_level(k)) for k in range(self.start_k, last + 1)
                if stage_target(k) == m and k not in self.skipped]

    def to_json(self) -> dict:
        return {"start_k": self.start_k, "horizon": self.horizon, "skipped": self.skipped,
                "hits": [h.to_json() for h in self.hits]}


def first_scheduled_k(N: int) -> int:
    """Smallest stage k >= 1 whose predecessor stage ends at level >= N (stage 0 ends at 0)."""
    k = 1
    while (stage_level(k - 1) if k > 1 else 0) < N:
        k += 1
    return k


def build_frequent(t: WeightedTree, seed: TreeFunction, max_target: int | None = None, horizon: int = 1,
                   targets: Sequence[StepFunction] | None = None) -> tuple[TreeFunction, FrequentLog]:
    """Stage k hits target m = stage_target(k) within 2^-m at level stage_level(k).

    Stages run for k <= horizon, starting with the first stage whose
    predecessor ends at or below the seed depth; the seed is bridged down to
    that level with zero targets.  Target m defaults to dense_target(m).
    Stages whose target index exceeds max_target are bridged the same way and listed
    as skipped.
    """
    space = seed.space
    k0 = first_scheduled_k(seed.depth)
    if max_target is None:
        max_target = max((stage_target(k) for k in range(k0, horizon + 1)), default=1)
    if targets is None:
        targets = [dense_target(t, space, m) for m in range(1, max_target + 1)]
    targets = list(targets)[:max_target]
    log = FrequentLog(k0, horizon, targets)
    f = seed
    start = stage_level(k0 - 1) if k0 > 1 else 0
    if start > t.depth:
        raise DepthExhausted(f"first scheduled level {start} is beyond depth {t.depth}",
                             partial=(f, log), max_achievable=0)
    f = harmonic_fill(f, start, t)
    for k in range(k0, horizon + 1):
        m, rk = stage_target(k), stage_level(k)
        if rk > t.depth or not t.can_materialize(rk):
            raise DepthExhausted(f"stage {k} needs level {rk}, beyond depth {t.depth}; last completed k = {k - 1}",
                                 partial=(f, log), max_achievable=k - 1)
        if m > len(targets):
            f = harmonic_fill(f, rk, t)
            log.skipped.append(k)
            continue
        h = targets[m - 1]
        f = extend_into_ball(f, m, h, t)
        achieved = prob_distance(slice_at(f, rk), h, t, space)
        log.hits.append(FrequentHit(k, rk, rk, m, achieved, Fraction(1, 2 ** m)))
    return f, log


def verify_frequent(f: TreeFunction, log: FrequentLog, t: WeightedTree) -> list[str]:
    """Recompute each hit on the tree f lives on; empty list when all hold."""
    fails = []
    for h in log.hits:
        d = prob_distance(slice_at(f, h.level), _on_level(log.targets[h.target - 1], log), t, f.space)
        if d != h.achieved:
            fails.append(f"k={h.k}: recomputed prob_distance {d} != recorded {h.achieved}")
        if not d < h.bound:
            fails.append(f"k={h.k}: prob_distance {d} not below {h.bound}")
    return fails


def _on_level(target: StepFunction, log: FrequentLog) -> StepFunction:
    level_map = getattr(log, "level_map", None)
    if not level_map:
        return target
    return StepFunction(level_map[target.level], target.values)


@dataclass
class CollapsedFrequentLog(FrequentLog):
    level_map: list[int] = field(default_factory=list)  # collapsed level -> tree level


def build_frequent_on_levels(t: WeightedTree, levels: Iterable[int], seed: TreeFunction,
                             max_target: int | None = None, horizon: int = 1) -> tuple[TreeFunction, CollapsedFrequentLog]:
    """Frequent universality along the levels of levels.

    Runs :func:`build_frequent` on the tree collapsed onto levels and pulls the
    result back: between consecutive levels levels the full tree is solved with
    the collapsed values as targets off the free slots.  The slot values come
    out equal to the collapsed ones because every harmonic extension obeys the
    collapsed equation.
    """
    levels = sorted(set(levels) | {0})
    levels = [n for n in levels if n <= t.depth]
    space = seed.space
    # bridge the seed down to the first allowed level at or below it
    above = [n for n in levels if n >= seed.depth]
    if not above:
        raise DepthExhausted(f"no allowed level at or below depth {seed.depth}")
    base = harmonic_fill(seed, above[0], t)
    kappa = levels.index(above[0])
    tc = collapse(t, levels)
    collapsed_seed = TreeFunction(space, tuple(base.levels[n] for n in levels[: kappa + 1]))
    partial_error = None
    try:
        fc, clog = build_frequent(tc, collapsed_seed, max_target, horizon)
    except DepthExhausted as e:
        partial_error = e
        fc, clog = e.partial
    F = base
    for c in range(kappa + 1, fc.depth + 1):
        a, b = levels[c - 1], levels[c]
        slots = free_slots(t, a, b)
        g = list(fc.levels[c])
        for s in slots.picks:
            g[s] = None
        F = solve_extension(F, slots, g, t)
        for s in slots.picks:
            if not space.eq(F.levels[b][s], fc.levels[c][s]):
                raise ValidationError(f"pullback mismatch at vertex ({b},{s})")
    log = CollapsedFrequentLog(clog.start_k, clog.horizon, clog.targets, level_map=levels)
    log.skipped = list(clog.skipped)
    for h in clog.hits:
        target = StepFunction(levels[clog.targets[h.target - 1].level], clog.targets[h.target - 1].values)
        achieved = prob_distance(slice_at(F, levels[h.schedule_level]), target, t, space)
        log.hits.append(FrequentHit(h.k, h.schedule_level, levels[h.schedule_level], h.target, achieved, h.bound))
    if partial_error is not None:
        raise DepthExhausted(str(partial_error), partial=(F, log), max_achievable=partial_error.max_achievable)
    return F, log


# ---------------------------------------------------------------------------
# X builder: long constant holds inside each ball
# ---------------------------------------------------------------------------


@dataclass
class HeldFunction:
    """Harmonic function explicit to some level, then copied to children down to ``held_to``."""

    explicit: TreeFunction
    held_to: int

    @property
    def space(self) -> ValueSpace:
        return self.explicit.space

    def slice_at(self, n: int) -> StepFunction:
        """Level-n slice; below the explicit part the level-``explicit.depth`` sectors
        already describe the boundary function exactly."""
        if not 0 <= n <= self.held_to:
            raise ValueError(f"level {n} outside 0..{self.held_to}")
        return slice_at(self.explicit, min(n, self.explicit.depth))

    def materialize(self, depth: int, t: WeightedTree) -> TreeFunction:
        return extend_constant(self.explicit, min(depth, self.held_to), t)


@dataclass
class Visit:
    round: int
    ball: int
    hit_level: int | None
    start: int
    end: int
    theta: Fraction
    achieved: Fraction

    def to_json(self) -> dict:
        return {"round": self.round, "ball": self.ball, "hit_level": self.hit_level,
                "hold": [self.start, self.end], "theta": str(self.theta), "achieved": str(self.achieved)}


@dataclass
class HoldLog:
    visits: list[Visit]
    memberships: list[list[int]]
    reports: list
    stop_reason: str
    depth: int

    def to_json(self) -> dict:
        return {"depth": self.depth, "stop_reason": self.stop_reason,
                "visits": [v.to_json() for v in self.visits],
                "memberships": self.memberships,
                "density": [rep.to_json() if rep is not None else None for rep in self.reports]}


def _gap_for(t: WeightedTree, front: int, slack: Fraction) -> int | None:
    """Smallest gap whose free sectors weigh at most ``slack``."""
    n = front + 1
    while n <= t.depth and t.can_materialize(n):
        if slot_measure(t, free_slots(t, front, n)) <= slack:
            return n - front
        n += 1
    return None


def _round_robin(count: int, rounds: int | None):
    rnd = 1
    while rounds is None or rnd <= rounds:
        for b in range(min(rnd, count)):
            yield rnd, b
        rnd += 1


def build_upper_dense(t: WeightedTree, seed: TreeFunction, balls: Sequence[Ball], theta_min=Fraction(4, 5),
            rounds: int | None = None) -> tuple[HeldFunction, HoldLog]:
    """Visit the balls round robin (B1; B1,B2; B1,B2,B3; ...) and hold each one.

    A visit hits the ball center within radius/2 unless slice_at at the current
    front is already that close, then copies values to children until the run
    inside the ball covers a fraction theta_t = max(theta_min, 1 - 1/t) of all
    levels so far.  A visit whose hold would pass the depth is not started;
    the previous hold is stretched to the depth instead.
    """
    space = seed.space
    bad = t.weight_sum_violations()
    if bad:
        v, total = bad[0]
        raise AssumptionViolated(v, t.field.format(total))
    ok, where = is_harmonic(seed, t)
    if not ok:
        raise ValidationError(f"seed is not harmonic at {where[0]}")
    D = t.depth
    f = seed
    front = seed.depth
    visits: list[Visit] = []
    run_ball, run_start = None, None
    stop_reason = "rounds"
    round_front = (0, front)
    for rnd, b in _round_robin(len(balls), rounds):
        if rnd != round_front[0]:
            if rnd > 1 and round_front[1] == front:
                # nothing moved for a whole round: the running hold already covers its share
                stop_reason = f"round {rnd - 1} left the front at level {front}"
                break
            round_front = (rnd, front)
        ball = balls[b]
        slack = ball.radius / 2
        theta = max(Fraction(theta_min), 1 - Fraction(1, rnd))
        current = slice_at(f, f.depth)
        d_now = prob_distance(current, ball.center, t, space)
        if d_now < slack and front >= ball.center.level:
            start, hit_level, achieved = (run_start if run_ball == b else front), None, d_now
            new_f = f
        else:
            try:
                gap = _gap_for(t, front, slack)
            except ResourceLimit:
                gap = None
            if gap is None:
                stop_reason = f"no level within depth {D} and the vertex cap can hit ball {b + 1} from level {front}"
                break
            level = max(front + gap, ball.center.level)
            if not t.can_materialize(level):
                stop_reason = f"level {level} exceeds the vertex cap"
                break
            base = extend_constant(f, front, t) if front > f.depth else f
            new_f = extend_into_ball(base, level - front, ball.center, t)
            start = hit_level = level
            achieved = prob_distance(slice_at(new_f, level), ball.center, t, space)
        end = max(start + 1, hit_level or front, math.ceil(start / (1 - theta)) if theta < 1 else start + 1)
        end = max(end, front)
        if end > D:
            stop_reason = f"hold for ball {b + 1} in round {rnd} needs level {end} > depth {D}"
            break
        f = new_f
        visits.append(Visit(rnd, b, hit_level, start, end, theta, achieved))
        run_ball, run_start, front = b, start, end
    if visits:
        visits[-1].end = D
    held = HeldFunction(f, D)
    memberships = [membership(held, ball, t) for ball in balls]
    reports = []
    for b in range(len(balls)):
        ends = [v.end for v in visits if v.ball == b]
        W = max(ends) if ends else None
        reports.append(density(memberships[b], W, "upper", f"ball {b + 1}") if W and W >= 2 else None)
    return held, HoldLog(visits, memberships, reports, stop_reason, D)


def membership(held: HeldFunction, ball: Ball, t: WeightedTree) -> list[int]:
    """Levels n in 0..held_to whose slice lies inside the ball."""
    space = held.space
    out = []
    tail = None
    for n in range(held.held_to + 1):
        if n > held.explicit.depth and tail is not None:
            inside = tail
        else:
            inside = prob_distance(held.slice_at(n), ball.center, t, space) < ball.radius
            if n >= held.explicit.depth:
                tail = inside
        if inside:
            out.append(n)
    return out


def verify_holds(held: HeldFunction, log: HoldLog, balls: Sequence[Ball], t: WeightedTree,
                 materialize_extra: int = 3) -> list[str]:
    """Each hold interval: prob_distance to the center is the same at every level and inside the ball.

    Beyond the explicit part, a few levels are also checked on genuinely
    materialized constant extensions.
    """
    space = held.space
    fails = []
    deep = None
    limit = held.explicit.depth + materialize_extra
    if limit <= held.held_to and t.can_materialize(limit):
        deep = held.materialize(limit, t)
    for v in log.visits:
        c = balls[v.ball]
        values = set()
        for n in range(v.start, v.end + 1):
            d = prob_distance(held.slice_at(n), c.center, t, space)
            if deep is not None and held.explicit.depth < n <= deep.depth:
                d2 = prob_distance(slice_at(deep, n), c.center, t, space)
                if d2 != d:
                    fails.append(f"ball {v.ball + 1} level {n}: materialized prob_distance {d2} != {d}")
            values.add(d)
            if not d < c.radius:
                fails.append(f"ball {v.ball + 1} level {n}: prob_distance {d} not below radius {c.radius}")
        if len(values) > 1:
            fails.append(f"ball {v.ball + 1} hold {v.start}..{v.end}: prob_distance not constant ({sorted(values)})")
    return fails
