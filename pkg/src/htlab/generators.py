"""Seeded random instances for property tests and experiments."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .fields import FieldSpec
from .harmonic import FreeSlotAssignment, TreeFunction, propagate_up
from .space import ValueSpace
from .tree import WeightedTree


def random_q_row(rng: random.Random, b: int, spread: int = 6) -> tuple:
    parts = [rng.randint(1, spread) for _ in range(b)]
    s = sum(parts)
    return tuple(Fraction(x, s) for x in parts)


def random_weight(rng: random.Random, field: FieldSpec):
    if field.is_finite:
        return rng.randint(1, field.p - 1)
    if field.is_exact:
        num = rng.choice([x for x in range(-4, 5) if x])
        return Fraction(num, rng.randint(1, 3))
    return field.coerce(rng.choice([-2.0, -0.5, 0.25, 1.0, 1.5]))


def random_tree(rng: random.Random, depth: int, field: FieldSpec | None = None,
                branching=(2, 3), w: str = "random") -> WeightedTree:
    """Explicit tree with per-vertex branching drawn from ``branching``.

    ``w="q"`` copies the transition probabilities into the weights (exact
    fields only); ``w="random"`` draws nonzero field elements.
    """
    field = field or FieldSpec.rational()
    rows = []
    size = 1
    for _ in range(depth):
        level_rows = []
        for _ in range(size):
            b = rng.choice(branching)
            q = random_q_row(rng, b)
            wr = tuple(field.coerce(x) for x in q) if w == "q" else tuple(random_weight(rng, field) for _ in q)
            level_rows.append((q, wr))
        rows.append(level_rows)
        size = sum(len(qr) for qr, _ in level_rows)
    return WeightedTree(field, rows)


def random_values(rng: random.Random, space: ValueSpace, count: int) -> list:
    if space.cardinality is not None:
        card = space.cardinality
        return [space.enumerate_dense(rng.randrange(card)) for _ in range(count)]
    return [space.enumerate_dense(rng.randrange(12)) for _ in range(count)]


def random_harmonic(rng: random.Random, t: WeightedTree, space: ValueSpace, depth: int) -> TreeFunction:
    """Random bottom values on level ``depth`` pushed up by the mean-value equation."""
    return propagate_up(t, space, depth, random_values(rng, space, t.size(depth)))


def random_slots(rng: random.Random, t: WeightedTree, base: int, target: int) -> FreeSlotAssignment:
    picks = []
    for x in range(t.size(base)):
        r = t.descendant_range(base, x, target)
        picks.append(rng.choice(r))
    return FreeSlotAssignment(base, target, tuple(picks))


@dataclass
class ExtensionInstance:
    tree: WeightedTree
    f: TreeFunction
    slots: FreeSlotAssignment
    g: list

    @property
    def unknowns(self) -> int:
        N, K = self.slots.base, self.slots.target
        inner = sum(self.tree.size(j) for j in range(N + 1, K))
        return inner + (len(self.slots.picks) if K > N else 0)


def random_extension_instance(rng: random.Random, space: ValueSpace, max_gap: int = 4,
                              max_unknowns: int = 24, max_base: int = 2,
                              branching=(2, 3)) -> ExtensionInstance:
    """Harmonic f on levels 0..N, slots on level K = N + gap, targets off the slots.

    Redraws until the number of unknowns fits ``max_unknowns``.
    """
    while True:
        N = rng.randint(0, max_base)
        K = N + rng.randint(1, max_gap)
        t = random_tree(rng, K, space.field, branching)
        slots = random_slots(rng, t, N, K)
        inst_g = random_values(rng, space, t.size(K))
        for b in slots.picks:
            inst_g[b] = None
        f = random_harmonic(rng, t, space, N)
        inst = ExtensionInstance(t, f, slots, inst_g)
        if inst.unknowns <= max_unknowns:
            return inst


def random_level_set(rng: random.Random, depth: int, keep: float = 0.5) -> list[int]:
    """0 plus a random nonempty subset of 1..depth."""
    levels = [n for n in range(1, depth + 1) if rng.random() < keep]
    if not levels:
        levels = [rng.randint(1, depth)]
    return [0] + levels
