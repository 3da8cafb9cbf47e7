"""Boundary step functions and the convergence-in-probability metric.

At truncation depth D a measurable boundary function is a step function on
the sectors B_x, x in T_n, for some n <= D.  Step functions are kept at the
level they were made at and refined only when two of them are compared.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import ValidationError
from .harmonic import TreeFunction
from .space import ValueSpace, Vector, shell_size, unrank_shell
from .tree import Vertex, WeightedTree, min_prob_descendant


@dataclass(frozen=True)
class StepFunction:
    level: int
    values: tuple

    def to_json(self, space: ValueSpace) -> dict:
        return {"level": self.level, "values": [space.format(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj: dict, space: ValueSpace) -> "StepFunction":
        return cls(int(obj["level"]), tuple(space.parse(v) for v in obj["values"]))

    @classmethod
    def constant(cls, t: WeightedTree, v: Vector, level: int = 0) -> "StepFunction":
        return cls(level, (v,) * t.size(level))


@dataclass(frozen=True)
class Ball:
    center: StepFunction
    radius: Fraction

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError(f"ball radius must be positive, got {self.radius}")

    def contains(self, h: StepFunction, t: WeightedTree, space: ValueSpace) -> bool:
        return prob_distance(h, self.center, t, space) < self.radius


def refine(h: StepFunction, m: int, t: WeightedTree) -> StepFunction:
    """The same boundary function written on the sectors of level m."""
    if not h.level <= m <= t.depth:
        raise ValueError(f"cannot refine a level-{h.level} function to level {m}")
    if m == h.level:
        return h
    anc = t.ancestor_map(h.level, m)
    return StepFunction(m, tuple(h.values[a] for a in anc))


def slice_at(f: TreeFunction, n: int) -> StepFunction:
    """Send each boundary ray to f's value at its level-n vertex."""
    if not 0 <= n <= f.depth:
        raise ValueError(f"level {n} outside 0..{f.depth}")
    return StepFunction(n, f.levels[n])


def scale_step(space: ValueSpace, a, h: StepFunction) -> StepFunction:
    a = space.field.coerce(a)
    return StepFunction(h.level, tuple(space.scale(a, v) for v in h.values))


def add_steps(space: ValueSpace, h: StepFunction, g: StepFunction, t: WeightedTree) -> StepFunction:
    L = max(h.level, g.level)
    h, g = refine(h, L, t), refine(g, L, t)
    return StepFunction(L, tuple(space.add(a, b) for a, b in zip(h.values, g.values)))


def prob_distance(h: StepFunction, g: StepFunction, t: WeightedTree, space: ValueSpace):
    """Integral of d/(1+d) against P; exact unless the metric is euclidean."""
    if len(h.values) != t.size(h.level) or len(g.values) != t.size(g.level):
        raise ValidationError("step function does not match the tree")
    L = max(h.level, g.level)
    probs = t.sector_probs(L)
    ah = t.ancestor_map(h.level, L) if h.level < L else range(len(probs))
    ag = t.ancestor_map(g.level, L) if g.level < L else range(len(probs))
    mass: dict = defaultdict(Fraction)
    hv, gv = h.values, g.values
    for p, i, j in zip(probs, ah, ag):
        mass[(i, j)] += p
    exact = space.metric_kind != "euclidean"
    total = Fraction(0) if exact else 0.0
    for (i, j), p in mass.items():
        bm = space.bounded_metric(hv[i], gv[j])
        if bm:
            total += p * bm if exact else float(p) * bm
    return total


def step_equal(h: StepFunction, g: StepFunction, t: WeightedTree, space: ValueSpace) -> bool:
    L = max(h.level, g.level)
    a, b = refine(h, L, t), refine(g, L, t)
    return all(space.eq(x, y) for x, y in zip(a.values, b.values))


# ---------------------------------------------------------------------------
# dense enumeration of step functions
# ---------------------------------------------------------------------------


def _finite_block_sizes(t: WeightedTree, space: ValueSpace) -> list[int]:
    card = space.cardinality
    return [card ** t.size(n) for n in range(t.depth + 1)]


def dense_target_count(t: WeightedTree, space: ValueSpace) -> int | None:
    """Number of distinct indices for finite E (None when the enumeration is infinite)."""
    if space.cardinality is None:
        return None
    return sum(_finite_block_sizes(t, space))


def dense_target(t: WeightedTree, space: ValueSpace, j: int) -> StepFunction:
    """j-th element of the fixed enumeration of step functions with values in D_E.

    Finite E: every level-0 function, then every level-1 function, and so on;
    within level n the block index is read as base-|E| digits over the
    vertices, vertex 0 least significant.

    Infinite E: stage s = 0, 1, 2, ... visits levels n = 0..min(s, D) and emits
    the level-n functions whose largest dense-subset index is exactly s - n, in
    lexicographic order of the index tuple.  Every function gets a finite index.
    """
    if j < 0:
        raise ValueError("index must be >= 0")
    card = space.cardinality
    if card is not None:
        for n, size in enumerate(_finite_block_sizes(t, space)):
            if j < size:
                vals = []
                for _ in range(t.size(n)):
                    j, r = divmod(j, card)
                    vals.append(space.enumerate_dense(r))
                return StepFunction(n, tuple(vals))
            j -= size
        total = dense_target_count(t, space)
        raise ValidationError(f"dense target index beyond depth {t.depth}; max usable index is {total - 1}")
    s = 0
    while True:
        for n in range(min(s, t.depth) + 1):
            width = t.size(n)
            size = shell_size(width, s - n)
            if j < size:
                idx = unrank_shell(j, width, s - n)
                return StepFunction(n, tuple(space.enumerate_dense(k) for k in idx))
            j -= size
        s += 1


# ---------------------------------------------------------------------------
# no isolated points
# ---------------------------------------------------------------------------


def perturb_nonisolated(h: StepFunction, eps, t: WeightedTree, space: ValueSpace) -> StepFunction:
    """A g != h with 0 < prob_distance(h, g) < eps, changed on one small sector only.

    On the chosen sector B_x a zero value becomes a fixed nonzero vector and a
    nonzero value becomes zero; elsewhere g = h.
    """
    eps = Fraction(eps)
    if space.is_trivial:
        raise ValidationError("E = {0}: the boundary function space is a single point")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    x = None
    for n in range(t.depth + 1):
        cand = min_prob_descendant(t, Vertex(0, 0), n)
        if t.sector_prob(cand) < eps:
            x = cand
            break
    if x is None:
        raise ValidationError(f"no sector of measure < {eps} within depth {t.depth}")
    L = max(h.level, x.level)
    base = refine(h, L, t)
    vals = list(base.values)
    v = space.basis(0)
    for y in t.descendant_range(x.level, x.index, L):
        vals[y] = v if space.is_zero(vals[y]) else space.zero()
    return StepFunction(L, tuple(vals))


# ---------------------------------------------------------------------------
# Monte Carlo cross-check
# ---------------------------------------------------------------------------


def sample_sectors(t: WeightedTree, level: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Indices in T_level of n independent q-walks from the root."""
    idx = np.zeros(n, dtype=np.int64)
    for k in range(1, level + 1):
        lev = t.level(k)
        q = np.array([float(x) for x in lev.q])
        parent = np.asarray(lev.parent, dtype=np.int64)
        cum = np.cumsum(q)
        # within-row cumulative sum, offset by the parent index so the keys
        # increase across the whole level
        first = np.asarray(t.level(k - 1).first_child[:-1], dtype=np.int64)
        row_start = np.concatenate(([0.0], cum))[first]
        within = cum - row_start[parent]
        last = np.asarray(t.level(k - 1).first_child[1:], dtype=np.int64) - 1
        within[last] = 1.0
        keys = parent + within
        u = rng.random(n)
        idx = np.searchsorted(keys, idx + u, side="right")
    return idx


def monte_carlo_distance(h: StepFunction, g: StepFunction, t: WeightedTree, space: ValueSpace,
                   n: int, rng: np.random.Generator) -> float:
    L = max(h.level, g.level)
    hr, gr = refine(h, L, t), refine(g, L, t)
    idx = sample_sectors(t, L, n, rng)
    cache: dict[int, float] = {}
    total = 0.0
    for i in idx.tolist():
        if i not in cache:
            cache[i] = float(space.bounded_metric(hr.values[i], gr.values[i]))
        total += cache[i]
    return total / n


def describe(h: StepFunction, space: ValueSpace) -> str:
    vals = [space.format(v) for v in h.values[:8]]
    more = "..." if len(h.values) > 8 else ""
    return f"L{h.level}[{', '.join(map(str, vals))}{more}]"


def to_json_value(x: Any) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    return x
