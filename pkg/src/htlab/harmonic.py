"""Generalized harmonic functions on a truncated tree.

A function is harmonic when f(x) = sum_{y in S(x)} w(x, y) f(y) at every
vertex above its last defined level.  Partial harmonic
functions are extended downward either by the free-slot solver or, when every
row of weights sums to 1, by copying values to children.  ``tree_distance`` is
the product-topology distance between two functions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Sequence

from .errors import AssumptionViolated, ValidationError
from .space import ValueSpace, Vector
from .tree import Vertex, WeightedTree, min_prob_descendant


@dataclass(frozen=True)
class TreeFunction:
    """Values on levels 0..depth; ``levels[n][i]`` is f((n, i))."""

    space: ValueSpace
    levels: tuple

    @classmethod
    def from_levels(cls, space: ValueSpace, levels) -> "TreeFunction":
        return cls(space, tuple(tuple(lv) for lv in levels))

    @classmethod
    def zero(cls, space: ValueSpace, t: WeightedTree, depth: int = 0) -> "TreeFunction":
        z = space.zero()
        return cls(space, tuple((z,) * t.size(n) for n in range(depth + 1)))

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def __call__(self, v) -> Vector:
        n, i = v
        return self.levels[n][i]

    def restrict(self, depth: int) -> "TreeFunction":
        if not 0 <= depth <= self.depth:
            raise ValueError(f"cannot restrict a depth-{self.depth} function to depth {depth}")
        return TreeFunction(self.space, self.levels[: depth + 1])

    def same_values(self, other: "TreeFunction", upto: int | None = None) -> bool:
        upto = self.depth if upto is None else upto
        eq = self.space.eq
        for n in range(upto + 1):
            for a, b in zip(self.levels[n], other.levels[n]):
                if not eq(a, b):
                    return False
        return True

    def to_json(self) -> dict:
        fmt = self.space.format
        return {"depth": self.depth, "levels": [[fmt(v) for v in lv] for lv in self.levels]}

    @classmethod
    def from_json(cls, obj: dict, space: ValueSpace) -> "TreeFunction":
        levels = [[space.parse(v) for v in lv] for lv in obj["levels"]]
        if len(levels) != obj["depth"] + 1:
            raise ValidationError("levels list does not match the stated depth")
        return cls.from_levels(space, levels)


@dataclass(frozen=True)
class FreeSlotAssignment:
    """For each x in T_base, the index picks[x] of a descendant in T_target."""

    base: int
    target: int
    picks: tuple

    def check(self, t: WeightedTree):
        if self.target < self.base:
            raise ValidationError("slot target level is above the base level")
        if len(self.picks) != t.size(self.base):
            raise ValidationError(f"need one slot per vertex of T_{self.base}")
        for x, b in enumerate(self.picks):
            if not 0 <= b < t.size(self.target) or t.ancestor(self.target, b, self.base) != x:
                raise ValidationError(
                    f"slot ({self.target},{b}) is not a descendant of ({self.base},{x})")


def free_slots(t: WeightedTree, base: int, target: int) -> FreeSlotAssignment:
    """Greedy minimal-probability descendant of every base vertex."""
    picks = tuple(min_prob_descendant(t, Vertex(base, x), target).index for x in range(t.size(base)))
    return FreeSlotAssignment(base, target, picks)


def slot_measure(t: WeightedTree, slots: FreeSlotAssignment) -> Fraction:
    probs = t.sector_probs(slots.target)
    return sum((probs[b] for b in slots.picks), Fraction(0))


# ---------------------------------------------------------------------------
# harmonicity
# ---------------------------------------------------------------------------


def _children_sums(t: WeightedTree, space: ValueSpace, n: int, child_vals, skip=None) -> list:
    """sum_{y in S(x)} w(x,y) v(y) for every x in T_n.  Parents in ``skip`` get None."""
    f = space.field
    lev = t.level(n + 1)
    acc: list[Any] = [None] * t.size(n)
    dim = space.dim
    for j, (p, w) in enumerate(zip(lev.parent, lev.w)):
        if skip is not None and p in skip:
            continue
        v = child_vals[j]
        cur = acc[p]
        if cur is None:
            acc[p] = tuple(f.mul(w, a) for a in v)
        else:
            acc[p] = tuple(f.add(cur[k], f.mul(w, v[k])) for k in range(dim))
    return acc


def is_harmonic(f: TreeFunction, t: WeightedTree, upto: int | None = None) -> tuple[bool, list[Vertex]]:
    """Check the mean-value identity at every vertex of levels < upto (default f.depth)."""
    upto = f.depth if upto is None else upto
    space = f.space
    bad = []
    for n in range(upto):
        sums = _children_sums(t, space, n, f.levels[n + 1])
        for i, (v, s) in enumerate(zip(f.levels[n], sums)):
            if not space.eq(v, s):
                bad.append(Vertex(n, i))
    return not bad, bad


def _require_harmonic(f: TreeFunction, t: WeightedTree):
    ok, bad = is_harmonic(f, t)
    if not ok:
        raise ValidationError(f"function is not harmonic at {[tuple(v) for v in bad[:5]]}"
                              + (" ..." if len(bad) > 5 else ""))


def propagate_up(t: WeightedTree, space: ValueSpace, level: int, values: Sequence[Vector]) -> TreeFunction:
    """The unique harmonic function on levels 0..level with the given bottom values."""
    levels = [tuple(values)]
    for n in range(level - 1, -1, -1):
        levels.append(tuple(_children_sums(t, space, n, levels[-1])))
    return TreeFunction.from_levels(space, levels[::-1])


def linear_combination(coeffs: Sequence, fns: Sequence[TreeFunction]) -> TreeFunction:
    """Vertexwise sum a_k f_k; all functions must share space and depth."""
    if not fns:
        raise ValueError("need at least one function")
    space = fns[0].space
    depth = fns[0].depth
    if any(g.depth != depth or g.space != space for g in fns):
        raise ValidationError("functions differ in depth or value space")
    coeffs = [space.field.coerce(a) for a in coeffs]
    levels = []
    for n in range(depth + 1):
        levels.append(tuple(space.lincomb(coeffs, [g.levels[n][i] for g in fns])
                            for i in range(len(fns[0].levels[n]))))
    return TreeFunction.from_levels(space, levels)


def tree_distance(f: TreeFunction, g: TreeFunction, t: WeightedTree | None = None):
    """sum_m 2^-m d/(1+d) over the breadth-first enumeration, truncated at the common depth."""
    if f.depth != g.depth:
        raise ValidationError(f"tree_distance needs equal depths, got {f.depth} and {g.depth}")
    if f.space != g.space:
        raise ValidationError("tree_distance needs a common value space")
    space = f.space
    if space.metric_kind == "euclidean":
        total, m = 0.0, 0
        for lf, lg in zip(f.levels, g.levels):
            for a, b in zip(lf, lg):
                total += 2.0 ** -m * space.bounded_metric(a, b)
                m += 1
        return total
    # group indices by bounded distance; each group's dyadic sum is one big
    # integer over 2^last, which keeps deep trees tractable
    groups: dict = {}
    m = 0
    for lf, lg in zip(f.levels, g.levels):
        for a, b in zip(lf, lg):
            if not space.eq(a, b):
                groups.setdefault(space.bounded_metric(a, b), []).append(m)
            m += 1
    last = m - 1
    total = Fraction(0)
    for bm, idx in groups.items():
        bits = bytearray((last >> 3) + 1)
        for i in idx:
            e = last - i
            bits[e >> 3] |= 1 << (e & 7)
        total += bm * Fraction(int.from_bytes(bits, "little"), 1 << last)
    return total


# ---------------------------------------------------------------------------
# extensions
# ---------------------------------------------------------------------------


def _targets_list(t: WeightedTree, slots: FreeSlotAssignment, g) -> list:
    size = t.size(slots.target)
    vals: list = [None] * size
    if isinstance(g, Mapping):
        for k, v in g.items():
            vals[k] = v
    else:
        if len(g) != size:
            raise ValidationError(f"targets must cover T_{slots.target} ({size} entries), got {len(g)}")
        vals = list(g)
    slot_set = set(slots.picks)
    for i, v in enumerate(vals):
        if i in slot_set and v is not None:
            raise ValidationError(f"a target was supplied at free slot ({slots.target},{i})")
        if i not in slot_set and v is None:
            raise ValidationError(f"no target supplied at ({slots.target},{i})")
    return vals


def _paths(t: WeightedTree, slots: FreeSlotAssignment) -> list[list[int]]:
    """paths[x][j - base] = index of the level-j vertex on the x -> picks[x] path."""
    out = []
    for b in slots.picks:
        path = [b]
        for k in range(slots.target, slots.base, -1):
            path.append(t.parent(k, path[-1]))
        out.append(path[::-1])
    return out


def solve_extension(f: TreeFunction, slots: FreeSlotAssignment, g, t: WeightedTree) -> TreeFunction:
    """Extend a harmonic f (levels 0..N) to levels 0..K hitting g off the slots.

    Bottom-up, every vertex off the x -> picks[x] paths has all its children
    valued and is set by the mean-value identity.  Top-down along each path,
    the next path vertex is the only unknown in its parent's equation and is
    solved for (w != 0 makes this possible).
    """
    N, K = slots.base, slots.target
    if N != f.depth:
        raise ValidationError(f"slots start at level {N} but f is defined to level {f.depth}")
    slots.check(t)
    _require_harmonic(f, t)
    if K == N:
        if g and any(v is not None for v in (g.values() if isinstance(g, Mapping) else g)):
            raise ValidationError("targets given for an empty extension")
        return f
    space = f.space
    fld = space.field
    bottom = _targets_list(t, slots, g)
    paths = _paths(t, slots)
    on_path = [set() for _ in range(K - N + 1)]
    for path in paths:
        for j, idx in enumerate(path):
            on_path[j].add(idx)

    new = {K: bottom}
    for j in range(K - 1, N, -1):
        new[j] = _children_sums(t, space, j, new[j + 1], skip=on_path[j - N])
    new[N] = list(f.levels[N])

    for path in paths:
        for j in range(N, K):
            p, nxt = path[j - N], path[j + 1 - N]
            lev = t.level(j + 1)
            rest = space.zero()
            for y in t.children(j, p):
                if y != nxt:
                    rest = space.add(rest, space.scale(lev.w[y], new[j + 1][y]))
            new[j + 1][nxt] = space.scale(fld.inv(lev.w[nxt]), space.sub(new[j][p], rest))

    levels = list(f.levels) + [tuple(new[j]) for j in range(N + 1, K + 1)]
    return TreeFunction(space, tuple(levels))


def solve_extension_inductive(f: TreeFunction, slots: FreeSlotAssignment, g, t: WeightedTree) -> TreeFunction:
    """The same extension computed by induction on K - N: targets on the level
    above the slots are derived from g, the shorter problem is solved, and the
    slot values are then read off their parents' equations.  Quadratic in the
    gap; used as a cross-check of :func:`solve_extension`."""
    N, K = slots.base, slots.target
    slots.check(t)
    _require_harmonic(f, t)
    if K == N:
        return f
    space = f.space
    fld = space.field
    bottom = _targets_list(t, slots, g)
    if K - N == 1:
        upper = f
    else:
        z = tuple(t.parent(K, b) for b in slots.picks)
        zset = set(z)
        g_up = _children_sums(t, space, K - 1, bottom, skip=zset)
        upper = solve_extension_inductive(f, FreeSlotAssignment(N, K - 1, z), g_up, t)
    lev = t.level(K)
    for b in slots.picks:
        zb = lev.parent[b]
        rest = space.zero()
        for y in t.children(K - 1, zb):
            if y != b:
                rest = space.add(rest, space.scale(lev.w[y], bottom[y]))
        bottom[b] = space.scale(fld.inv(lev.w[b]), space.sub(upper.levels[K - 1][zb], rest))
    return TreeFunction(space, upper.levels + (tuple(bottom),))


def extend_constant(f: TreeFunction, depth: int, t: WeightedTree) -> TreeFunction:
    """Copy each value to the children, level by level, down to ``depth``.

    Harmonic only when every row of weights sums to 1; any row that does not
    raises :class:`AssumptionViolated` naming the vertex.
    """
    N = f.depth
    if depth < N:
        raise ValueError(f"target depth {depth} is above the function's depth {N}")
    bad = t.weight_sum_violations(range(N, depth))
    if bad:
        v, total = bad[0]
        raise AssumptionViolated(v, t.field.format(total))
    _require_harmonic(f, t)
    levels = list(f.levels)
    for n in range(N + 1, depth + 1):
        par = t.level(n).parent
        prev = levels[-1]
        levels.append(tuple(prev[p] for p in par))
    return TreeFunction(f.space, tuple(levels))


def harmonic_fill(f: TreeFunction, depth: int, t: WeightedTree, fill: Vector | None = None) -> TreeFunction:
    """Extend f to ``depth`` with ``fill`` (default zero) everywhere off the free slots."""
    if depth == f.depth:
        return f
    slots = free_slots(t, f.depth, depth)
    v = f.space.zero() if fill is None else fill
    sset = set(slots.picks)
    g = [None if i in sset else v for i in range(t.size(depth))]
    return solve_extension(f, slots, g, t)


def brute_force_extensions(f: TreeFunction, slots: FreeSlotAssignment, g, t: WeightedTree,
                           cap: int = 2 ** 24, naive: bool = False) -> list[TreeFunction]:
    """Every harmonic extension of f to level K agreeing with g where g is given.

    Unknowns are all vertices of levels N+1..K-1 plus the level-K vertices g
    leaves open.  The default search assigns the deepest unknowns first and
    rejects a partial assignment as soon as one mean-value equation is fully
    determined and fails; ``naive=True`` walks the full product instead.  No
    equation is ever solved, only checked.
    """
    space = f.space
    card = space.cardinality
    if card is None:
        raise ValidationError("brute force needs a finite value space")
    N, K = slots.base, slots.target
    if K == N:
        return [f]
    size_K = t.size(K)
    if isinstance(g, Mapping):
        fixed = dict(g)
    else:
        fixed = {i: v for i, v in enumerate(g) if v is not None}
    unknowns = [(K, i) for i in range(size_K) if i not in fixed]
    for j in range(K - 1, N, -1):
        unknowns.extend((j, i) for i in range(t.size(j)))
    if card ** len(unknowns) > cap:
        raise ValidationError(f"search space {card}^{len(unknowns)} exceeds cap {cap}")
    elements = [space.enumerate_dense(i) for i in range(card)]

    vals = {j: [None] * t.size(j) for j in range(N + 1, K + 1)}
    vals[N] = list(f.levels[N])
    for i, v in fixed.items():
        vals[K][i] = v

    def eq_ok(j: int, i: int) -> bool:
        lev = t.level(j + 1)
        s = space.zero()
        for y in t.children(j, i):
            s = space.add(s, space.scale(lev.w[y], vals[j + 1][y]))
        return space.eq(vals[j][i], s)

    # after assigning unknowns[k], which equations become checkable
    checks: list[list[tuple[int, int]]] = [[] for _ in unknowns]
    for k, (j, i) in enumerate(unknowns):
        if j < K:
            checks[k].append((j, i))
        last_of_level = k + 1 == len(unknowns) or unknowns[k + 1][0] != j
        if j == N + 1 and last_of_level:
            checks[k].extend((N, x) for x in range(t.size(N)))
    if not unknowns:
        checks_fixed = [(j, i) for j in range(N, K) for i in range(t.size(j))]
    else:
        checks_fixed = []

    def snapshot() -> TreeFunction:
        return TreeFunction(space, f.levels + tuple(tuple(vals[j]) for j in range(N + 1, K + 1)))

    out = []
    if not unknowns:
        if all(eq_ok(j, i) for j, i in checks_fixed):
            out.append(snapshot())
        return out

    if naive:
        all_eqs = [(j, i) for j in range(N, K) for i in range(t.size(j))]
        for combo in itertools.product(elements, repeat=len(unknowns)):
            for (j, i), v in zip(unknowns, combo):
                vals[j][i] = v
            if all(eq_ok(j, i) for j, i in all_eqs):
                out.append(snapshot())
        return out

    def search(k: int):
        j, i = unknowns[k]
        for v in elements:
            vals[j][i] = v
            if all(eq_ok(a, b) for a, b in checks[k]):
                if k + 1 == len(unknowns):
                    out.append(snapshot())
                else:
                    search(k + 1)
        vals[j][i] = None

    search(0)
    return out
