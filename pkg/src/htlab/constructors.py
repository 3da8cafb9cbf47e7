"""Builders for universal harmonic functions and for spanning families whose
nonzero linear combinations stay universal.

Every builder is a loop of *stages*.  A stage starts from a harmonic function
known down to its current front level and picks the next admissible level.
Each front vertex gets one free slot there (its greedy minimal-probability
descendant); the solver hits the stage target everywhere else.  All the error
mass sits on the free sectors, so the recorded exact distance is below their
total measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .boundary import StepFunction, prob_distance, dense_target, slice_at, refine
from .errors import DepthExhausted, ResourceLimit, ValidationError
from .harmonic import (FreeSlotAssignment, TreeFunction, extend_constant, solve_extension,
                       free_slots, harmonic_fill, linear_combination, propagate_up, tree_distance, slot_measure)
from .space import ValueSpace
from .tree import WeightedTree


@dataclass
class StageRecord:
    index: int
    kind: str  # "target" or "zero"
    target_level: int
    level: int
    achieved: Fraction
    bound: Fraction
    slot_measure: Fraction

    def to_json(self) -> dict:
        return {"stage": self.index, "kind": self.kind, "target_level": self.target_level,
                "level": self.level, "achieved": str(self.achieved), "bound": str(self.bound),
                "slot_measure": str(self.slot_measure)}


@dataclass
class UniversalCertificate:
    seed_depth: int
    entries: list[StageRecord] = field(default_factory=list)

    def to_json(self) -> list:
        return [e.to_json() for e in self.entries]


def pick_level(t: WeightedTree, front: int, admissible: Iterable[int], min_level: int,
               tol: Fraction, strict: bool = True) -> tuple[int, FreeSlotAssignment, Fraction] | None:
    """Smallest admissible level n > front, n >= min_level, whose free slots
    from ``front`` carry measure < tol (<= tol when ``strict`` is False)."""
    for n in sorted(admissible):
        if n <= front or n < min_level:
            continue
        if not t.can_materialize(n):
            return None
        slots = free_slots(t, front, n)
        meas = slot_measure(t, slots)
        if meas < tol or (not strict and meas == tol):
            return n, slots, meas
    return None


def hit(f: TreeFunction, slots: FreeSlotAssignment, target: StepFunction, t: WeightedTree) -> TreeFunction:
    """Extend f to the slot level, equal to ``target`` off the free slots."""
    g = list(refine(target, slots.target, t).values)
    for b in slots.picks:
        g[b] = None
    return solve_extension(f, slots, g, t)


def near_target(f: TreeFunction, n: int, j, s: int, t: WeightedTree) -> bool:
    """Whether the level-n slice of f is closer than 1/s to the j-th dense target (or to a given step function)."""
    h = j if isinstance(j, StepFunction) else dense_target(t, f.space, j)
    return prob_distance(slice_at(f, n), h, t, f.space) < Fraction(1, s)


def _levels(t: WeightedTree, levels) -> list[int]:
    return sorted(set(range(t.depth + 1) if levels is None else levels))


def build_universal(t: WeightedTree, seed: TreeFunction, levels: Iterable[int] | None = None,
                    n_targets: int = 1, targets: Sequence[StepFunction] | None = None) -> tuple[TreeFunction, UniversalCertificate]:
    """Extend seed through n_targets stages; stage j lands on an allowed level within 1/j of h_j.

    h_j defaults to ``dense_target(j)``, j = 1..n_targets.  Stage j uses the first
    admissible level whose free sectors weigh less than 1/j in total.
    """
    space = seed.space
    levels = _levels(t, levels)
    if targets is None:
        targets = [dense_target(t, space, j) for j in range(1, n_targets + 1)]
    F = seed
    cert = UniversalCertificate(seed_depth=seed.depth)
    for j, h in enumerate(targets, start=1):
        bound = Fraction(1, j)
        try:
            choice = pick_level(t, F.depth, levels, h.level, bound)
        except ResourceLimit:
            choice = None
        if choice is None:
            raise DepthExhausted(
                f"depth {t.depth} exhausted after {j - 1} of {len(targets)} targets; "
                f"max achievable n_targets is {j - 1}", partial=(F, cert), max_achievable=j - 1)
        n, slots, meas = choice
        F = hit(F, slots, h, t)
        achieved = prob_distance(slice_at(F, n), h, t, space)
        cert.entries.append(StageRecord(j, "target", h.level, n, achieved, bound, meas))
    return F, cert


def verify_certificate(F: TreeFunction, cert: UniversalCertificate, t: WeightedTree,
                       targets: Sequence[StepFunction], levels: Iterable[int] | None = None) -> list[str]:
    """Recompute every entry from scratch; returns a list of failures (empty = valid)."""
    space = F.space
    levels = set(_levels(t, levels))
    fails = []
    prev = cert.seed_depth
    for e, h in zip(cert.entries, targets):
        if e.level <= prev:
            fails.append(f"j={e.index}: level {e.level} does not increase past {prev}")
        prev = e.level
        if e.level not in levels:
            fails.append(f"j={e.index}: level {e.level} not in levels")
        d = prob_distance(slice_at(F, e.level), h, t, space)
        if d != e.achieved:
            fails.append(f"j={e.index}: recomputed prob_distance {d} != recorded {e.achieved}")
        if not d < e.bound:
            fails.append(f"j={e.index}: prob_distance {d} not below {e.bound}")
    return fails


# ---------------------------------------------------------------------------
# dense harmonic functions
# ---------------------------------------------------------------------------


def harmonic_stub(t: WeightedTree, space: ValueSpace, k: int) -> TreeFunction:
    """Harmonic function on levels 0..L whose bottom values are dense_target(k)."""
    h = dense_target(t, space, k)
    return propagate_up(t, space, h.level, h.values)


def dense_harmonic(t: WeightedTree, space: ValueSpace, k: int, depth: int) -> TreeFunction:
    """k-th member of a dense sequence in H(T, E), extended down to ``depth``.

    The stub is copied to children when the weights allow it; otherwise it is
    extended by the free-slot solver with zero targets.
    """
    stub = harmonic_stub(t, space, k)
    if stub.depth >= depth:
        return stub.restrict(depth)
    if not t.weight_sum_violations(range(stub.depth, depth)):
        return extend_constant(stub, depth, t)
    return harmonic_fill(stub, depth, t)


def seed_depth_for(t: WeightedTree, k: int, min_depth: int) -> int:
    """Smallest N >= min_depth such that agreeing on levels 0..N forces tree_distance < 1/k."""
    N = min_depth
    while 2 ** (t.num_vertices(N) - 1) < k:
        N += 1
    return N


# ---------------------------------------------------------------------------
# spanning family
# ---------------------------------------------------------------------------


@dataclass
class FamilyMember:
    function: TreeFunction
    approximates: TreeFunction
    tree_distance: Fraction
    seed_depth: int
    stages: list[StageRecord]
    zero_levels: list[int]

    @property
    def target_levels(self) -> list[int]:
        return [s.level for s in self.stages if s.kind == "target"]


@dataclass
class SpanningFamily:
    members: list[FamilyMember]
    level_sets: list[list[int]]  # level_sets[0] = admissible levels, level_sets[k] = zero-hit levels of f_k
    tol: Fraction
    targets: list[list[StepFunction]]

    @property
    def functions(self) -> list[TreeFunction]:
        return [m.function for m in self.members]

    def to_json(self, space: ValueSpace) -> dict:
        return {
            "tol": str(self.tol),
            "level_sets": self.level_sets,
            "members": [{"seed_depth": m.seed_depth, "tree_distance": f"{float(m.tree_distance):.12g}",
                         "tree_distance_bound": f"1/{k}", "below_bound": m.tree_distance < Fraction(1, k),
                         "zero_levels": m.zero_levels,
                         "stages": [s.to_json() for s in m.stages]}
                        for k, m in enumerate(self.members, start=1)],
        }


def _interleave(own: Sequence[StepFunction], zero: StepFunction, zeros_per_target: int):
    for h in own:
        yield "target", h
        for _ in range(zeros_per_target):
            yield "zero", zero
    while True:
        yield "zero", zero


def build_spanning_family(t: WeightedTree, space: ValueSpace, m: int,
                          targets: Sequence[Sequence[StepFunction]] | None = None,
                          tol: Fraction = Fraction(1, 8), levels: Iterable[int] | None = None,
                          zeros_per_target: int = 1, depth: int | None = None) -> SpanningFamily:
    """Build f_1..f_m with nested zero-hit level sets level_sets[1] ⊇ level_sets[2] ⊇ ...

    f_k starts from the k-th dense harmonic function h_k (agreeing with it far
    enough down that tree_distance(f_k, h_k) < 1/k), then alternates its own targets with
    the zero target on levels of level_sets[k-1], and keeps hitting zero until the
    depth runs out.  The levels where it hit zero form level_sets[k], the only levels
    f_{k+1} may use.  Every stage error is below ``tol``.
    """
    if m < 1:
        raise ValidationError("family size must be at least 1")
    D = t.depth if depth is None else depth
    if targets is None:
        targets = [[dense_target(t, space, k)] for k in range(1, m + 1)]
    if len(targets) != m:
        raise ValidationError(f"need one target list per function, got {len(targets)} for m={m}")
    zero = StepFunction.constant(t, space.zero())
    level_sets = [[n for n in _levels(t, levels) if 0 < n <= D]]
    members: list[FamilyMember] = []
    for k in range(1, m + 1):
        h_k = dense_harmonic(t, space, k, D)
        stub_depth = harmonic_stub(t, space, k).depth
        N = seed_depth_for(t, k, stub_depth)
        if N > D:
            raise DepthExhausted(f"f_{k}: seed depth {N} exceeds {D}", partial=members, max_achievable=k - 1)
        F = h_k.restrict(N)
        stages: list[StageRecord] = []
        zero_levels: list[int] = []
        own = list(targets[k - 1])
        done_own = 0
        admissible = [n for n in level_sets[-1] if n <= D]
        for j, (kind, h) in enumerate(_interleave(own, zero, zeros_per_target), start=1):
            if kind == "zero" and done_own == len(own) and F.depth >= D:
                break
            choice = pick_level(t, F.depth, admissible, h.level, tol)
            if choice is None:
                if done_own < len(own):
                    raise DepthExhausted(
                        f"f_{k}: only {done_own} of {len(own)} targets fit within depth {D}",
                        partial=members, max_achievable=done_own)
                break
            n, slots, meas = choice
            F = hit(F, slots, h, t)
            achieved = prob_distance(slice_at(F, n), h, t, space)
            stages.append(StageRecord(j, kind, h.level, n, achieved, tol, meas))
            if kind == "zero":
                zero_levels.append(n)
            else:
                done_own += 1
        if not zero_levels:
            raise DepthExhausted(f"f_{k}: no zero-hit level fits within depth {D}",
                                 partial=members, max_achievable=k - 1)
        if F.depth < D:
            F = harmonic_fill(F, D, t)
        members.append(FamilyMember(F, h_k, tree_distance(F, h_k), N, stages, zero_levels))
        level_sets.append(zero_levels)
    return SpanningFamily(members, level_sets, tol, [list(x) for x in targets])


def verify_span(family: SpanningFamily, coeffs: Sequence, h: StepFunction, eps,
                t: WeightedTree) -> tuple[bool, int | None]:
    """Search level_sets[m-1] for a level where L = sum a_k f_k is eps-close to h."""
    m = len(coeffs)
    if not 1 <= m <= len(family.members):
        raise ValidationError(f"need between 1 and {len(family.members)} coefficients")
    space = family.members[0].function.space
    coeffs = [space.field.coerce(a) for a in coeffs]
    if space.field.is_zero(coeffs[-1]):
        raise ValidationError("the last coefficient a_m must be nonzero")
    L = linear_combination(coeffs, family.functions[:m])
    eps = Fraction(eps) if space.metric_kind != "euclidean" else eps
    for n in family.level_sets[m - 1]:
        if prob_distance(slice_at(L, n), h, t, space) < eps:
            return True, n
    return False, None
