"""Truncated rooted trees with edge weights and transition probabilities.

Vertices are addressed by ``Vertex(level, index)``.  Within a level the order
is breadth first: parents in order, then each parent's children in order.  So
the descendants of a vertex at any deeper level form a contiguous index range,
which the rest of the package leans on heavily.

Levels are materialized lazily.  A tree described by per-level rules (all
vertices of a level share one branching number and one pair of q and w rows) can be declared much
deeper than it can be stored; only the levels a computation touches are built,
subject to the ``HTLAB_MAX_VERTICES`` cap.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator, NamedTuple, Sequence

from .errors import ResourceLimit, ValidationError
from .fields import FieldSpec

DEFAULT_MAX_VERTICES = 2 ** 21


def max_vertices() -> int:
    raw = os.environ.get("HTLAB_MAX_VERTICES")
    return int(raw) if raw else DEFAULT_MAX_VERTICES


class Vertex(NamedTuple):
    level: int
    index: int


@dataclass(frozen=True)
class _Rule:
    """Homogeneous level: every vertex has the same children rows."""

    q: tuple
    w: tuple

    @property
    def branching(self) -> int:
        return len(self.q)


@dataclass
class _Level:
    size: int
    parent: list | None = None
    q: list | None = None
    w: list | None = None
    first_child: list | None = None


class WeightedTree:
    """Immutable (from the caller's view) weighted tree of depth ``depth``.

    ``rows[n]`` describes the children of level-n vertices: either a ``_Rule``
    or a list with one ``(q_row, w_row)`` pair per vertex of level n.
    """

    def __init__(self, field: FieldSpec, rows: Sequence, source_levels: Sequence[int] | None = None):
        self.field = field
        self.depth = len(rows)
        self._rows = list(rows)
        self._levels: list[_Level] = [_Level(size=1)]
        self._probs: dict[int, list] = {0: [Fraction(1)]}
        self._sizes = [1]
        for n, row in enumerate(self._rows):
            if isinstance(row, _Rule):
                self._sizes.append(self._sizes[n] * row.branching)
            else:
                if len(row) != self._sizes[n]:
                    raise ValidationError(
                        f"level {n} lists {len(row)} rows but has {self._sizes[n]} vertices")
                self._sizes.append(sum(len(qr) for qr, _ in row))
        self.source_levels = tuple(source_levels) if source_levels is not None else tuple(range(self.depth + 1))

    # sizes ------------------------------------------------------------------

    def size(self, n: int) -> int:
        return self._sizes[n]

    def num_vertices(self, upto: int | None = None) -> int:
        upto = self.depth if upto is None else upto
        return sum(self._sizes[: upto + 1])

    def bfs_index(self, v: Vertex) -> int:
        return sum(self._sizes[: v.level]) + v.index

    def vertices(self, n: int) -> Iterator[Vertex]:
        return (Vertex(n, i) for i in range(self._sizes[n]))

    def is_rule_level(self, n: int) -> bool:
        return isinstance(self._rows[n], _Rule)

    def rule(self, n: int) -> _Rule | None:
        row = self._rows[n]
        return row if isinstance(row, _Rule) else None

    # materialization --------------------------------------------------------

    def level(self, n: int) -> _Level:
        if not 0 <= n <= self.depth:
            raise IndexError(f"level {n} outside 0..{self.depth}")
        while len(self._levels) <= n:
            self._grow()
        return self._levels[n]

    def materialized_depth(self) -> int:
        return len(self._levels) - 1

    def can_materialize(self, n: int) -> bool:
        return n <= self.depth and self.num_vertices(n) <= max_vertices()

    def _grow(self):
        n = len(self._levels) - 1
        cap = max_vertices()
        if self.num_vertices(n + 1) > cap:
            raise ResourceLimit(
                f"materializing level {n + 1} needs {self.num_vertices(n + 1)} vertices, "
                f"cap is {cap} (HTLAB_MAX_VERTICES)")
        prev = self._levels[n]
        row = self._rows[n]
        parent, q, w, first = [], [], [], [0]
        if isinstance(row, _Rule):
            b = row.branching
            for i in range(prev.size):
                parent.extend([i] * b)
                q.extend(row.q)
                w.extend(row.w)
                first.append(first[-1] + b)
        else:
            for i, (qr, wr) in enumerate(row):
                parent.extend([i] * len(qr))
                q.extend(qr)
                w.extend(wr)
                first.append(first[-1] + len(qr))
        prev.first_child = first
        self._levels.append(_Level(size=len(parent), parent=parent, q=q, w=w))

    # structure --------------------------------------------------------------

    def children(self, n: int, i: int) -> range:
        self.level(n + 1)
        fc = self._levels[n].first_child
        return range(fc[i], fc[i + 1])

    def parent(self, n: int, i: int) -> int:
        return self.level(n).parent[i]

    def q_edge(self, n: int, i: int) -> Fraction:
        """q(parent(x), x) for x = (n, i), n >= 1."""
        return self.level(n).q[i]

    def w_edge(self, n: int, i: int):
        return self.level(n).w[i]

    def ancestor(self, n: int, i: int, m: int) -> int:
        """Index of the level-m ancestor of (n, i), m <= n."""
        if m > n:
            raise ValueError("ancestor level must not exceed the vertex level")
        for k in range(n, m, -1):
            i = self.level(k).parent[i]
        return i

    def descendant_range(self, n: int, i: int, m: int) -> range:
        """Contiguous index range of the level-m descendants of (n, i), m >= n."""
        if m < n:
            raise ValueError("descendant level must not be above the vertex level")
        lo, hi = i, i + 1
        for k in range(n, m):
            self.level(k + 1)
            fc = self._levels[k].first_child
            lo, hi = fc[lo], fc[hi]
        return range(lo, hi)

    def ancestor_map(self, n: int, m: int) -> list[int]:
        """For every vertex of level m >= n, the index of its level-n ancestor."""
        idx = list(range(self.size(n)))
        for k in range(n + 1, m + 1):
            par = self.level(k).parent
            idx = [idx[p] for p in par]
        return idx

    # measure ----------------------------------------------------------------

    def sector_probs(self, n: int) -> list[Fraction]:
        """P(B_x) for every x in T_n, exact."""
        if n in self._probs:
            return self._probs[n]
        prev = self.sector_probs(n - 1)
        lev = self.level(n)
        probs = [prev[p] * q for p, q in zip(lev.parent, lev.q)]
        self._probs[n] = probs
        return probs

    def sector_prob(self, v: Vertex) -> Fraction:
        return self.sector_probs(v.level)[v.index]

    def weight_sum_violations(self, levels: range | None = None) -> list[tuple[Vertex, Any]]:
        """Vertices x where sum_{y in S(x)} w(x,y) != 1 (assumption (2))."""
        f = self.field
        levels = range(self.depth) if levels is None else levels
        bad = []
        for n in levels:
            row = self._rows[n]
            if isinstance(row, _Rule):
                total = _field_sum(f, row.w)
                if not f.eq(total, f.one):
                    bad.append((Vertex(n, 0), total))
            else:
                for i, (_, wr) in enumerate(row):
                    total = _field_sum(f, wr)
                    if not f.eq(total, f.one):
                        bad.append((Vertex(n, i), total))
        return bad

    def __repr__(self):
        return f"WeightedTree(depth={self.depth}, field={self.field}, sizes={self._sizes[:6]}...)"


def _field_sum(f: FieldSpec, xs):
    total = f.zero
    for x in xs:
        total = f.add(total, x)
    return total


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class TreeConfig:
    depth: int
    branching: Any = 2
    q: Any = "uniform"
    w: Any = "ones"
    field: FieldSpec = field(default_factory=FieldSpec.gf2)

    @classmethod
    def from_json(cls, obj: dict) -> "TreeConfig":
        if not isinstance(obj, dict):
            raise ValidationError("tree config must be a JSON object")
        if "depth" not in obj:
            raise ValidationError("tree config needs a depth")
        fld = FieldSpec.from_json(obj.get("field", "gf2"))
        return cls(depth=obj["depth"], branching=obj.get("branching", 2),
                   q=obj.get("q", "uniform"), w=obj.get("w", "ones"), field=fld)

    def to_json(self) -> dict:
        return {"depth": self.depth, "branching": self.branching, "q": self.q,
                "w": self.w, "field": self.field.to_json()}


def _as_fraction(x) -> Fraction:
    if isinstance(x, bool):
        raise ValueError(x)
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def _pattern_for(spec, n: int, b: int, what: str):
    """Resolve a q/w setting to the row pattern used at level n, or None."""
    if isinstance(spec, list) and spec and all(isinstance(r, list) for r in spec):
        if n >= len(spec):
            raise ValidationError(f"{what}: no pattern given for level {n}")
        return spec[n]
    if isinstance(spec, list):
        return spec
    return None


def _resolve_row(cfg: TreeConfig, n: int, b: int, qspec, wspec, where: str, problems: list):
    """Build one (q_row, w_row) pair of length b, recording problems."""
    f = cfg.field
    if b < 2:
        problems.append(f"{where}: has {b} child(ren); every vertex needs at least two")
    if qspec == "uniform":
        q = [Fraction(1, b)] * b if b else []
    else:
        try:
            q = [_as_fraction(x) for x in qspec]
        except (ValueError, ZeroDivisionError, TypeError):
            problems.append(f"{where}: q entries {qspec!r} are not fractions")
            q = [Fraction(1, max(b, 1))] * b
    if len(q) != b:
        problems.append(f"{where}: q row has {len(q)} entries for {b} children")
    if any(not 0 < x <= 1 for x in q):
        problems.append(f"{where}: q entries must lie in (0, 1], got {[str(x) for x in q]}")
    if q and sum(q) != 1:
        problems.append(f"{where}: q row sums to {sum(q)}, not 1")
    if wspec == "ones":
        w = [f.one] * b
    elif wspec == "q":
        try:
            w = [f.coerce(x) for x in q]
        except ValidationError as exc:
            problems.append(f"{where}: {exc}")
            w = [f.one] * b
    else:
        try:
            w = [f.coerce(x) for x in wspec]
        except (ValidationError, ValueError, ZeroDivisionError, TypeError) as exc:
            problems.append(f"{where}: bad weight entries {wspec!r} ({exc})")
            w = [f.one] * b
    if len(w) != b:
        problems.append(f"{where}: w row has {len(w)} entries for {b} children")
    if any(f.is_zero(x) for x in w):
        problems.append(f"{where}: zero edge weight in {[f.format(x) for x in w]}")
    return tuple(q), tuple(w)


def tree_problems(cfg: TreeConfig) -> tuple[list[str], list]:
    """Validate a config; returns (problems, rows)."""
    problems: list[str] = []
    rows: list = []
    D = cfg.depth
    if not isinstance(D, int) or isinstance(D, bool) or D < 0:
        return [f"depth must be a non-negative integer, got {D!r}"], rows
    br = cfg.branching
    if isinstance(br, dict):
        adj = br.get("adjacency")
        if not isinstance(adj, list) or len(adj) != D:
            return [f"adjacency must list child counts for each of the {D} internal levels"], rows
        qrows = cfg.q.get("rows") if isinstance(cfg.q, dict) else None
        wrows = cfg.w.get("rows") if isinstance(cfg.w, dict) else None
        size = 1
        for n, counts in enumerate(adj):
            if not isinstance(counts, list) or len(counts) != size:
                problems.append(f"level {n}: adjacency lists {len(counts) if isinstance(counts, list) else '?'}"
                                f" counts but the level has {size} vertices")
                return problems, rows
            level_rows = []
            for i, b in enumerate(counts):
                qs = qrows[n][i] if qrows is not None else (
                    cfg.q if cfg.q == "uniform" else _pattern_for(cfg.q, n, b, "q"))
                ws = wrows[n][i] if wrows is not None else (
                    cfg.w if cfg.w in ("ones", "q") else _pattern_for(cfg.w, n, b, "w"))
                level_rows.append(_resolve_row(cfg, n, b, qs, ws, f"vertex ({n},{i})", problems))
            rows.append(level_rows)
            size = sum(counts)
        return problems, rows
    if isinstance(br, int) and not isinstance(br, bool):
        per_level = [br] * D
    elif isinstance(br, list) and len(br) == D and all(isinstance(b, int) for b in br):
        per_level = br
    else:
        return [f"branching must be an int, a list of {D} ints, or {{'adjacency': ...}}"], rows
    for n, b in enumerate(per_level):
        try:
            qs = cfg.q if cfg.q == "uniform" else _pattern_for(cfg.q, n, b, "q")
            ws = cfg.w if cfg.w in ("ones", "q") else _pattern_for(cfg.w, n, b, "w")
        except ValidationError as exc:
            problems.extend(exc.problems)
            continue
        if qs is None or ws is None:
            problems.append(f"level {n}: unrecognised q/w setting")
            continue
        q, w = _resolve_row(cfg, n, b, qs, ws, f"vertex ({n},0) (every vertex of level {n})", problems)
        rows.append(_Rule(q, w))
    return problems, rows


def build_tree(config: TreeConfig | dict) -> WeightedTree:
    if isinstance(config, dict):
        config = TreeConfig.from_json(config)
    problems, rows = tree_problems(config)
    if problems:
        raise ValidationError(problems)
    return WeightedTree(config.field, rows)


def uniform_tree(depth: int, branching: int = 2, field: FieldSpec | None = None, w: Any = "ones") -> WeightedTree:
    return build_tree(TreeConfig(depth, branching, "uniform", w, field or FieldSpec.gf2()))


def sector_prob(t: WeightedTree, x: Vertex) -> Fraction:
    return t.sector_prob(Vertex(*x))


def min_prob_descendant(t: WeightedTree, x: Vertex, target_level: int) -> Vertex:
    """Walk down from x, always to a child of minimal q (lowest index on ties)."""
    n, i = x
    if not n <= target_level <= t.depth:
        raise ValueError(f"target level {target_level} outside {n}..{t.depth}")
    for k in range(n, target_level):
        lev = t.level(k + 1)
        kids = t.children(k, i)
        i = min(kids, key=lambda j: (lev.q[j], j))
    return Vertex(target_level, i)


def collapse(t: WeightedTree, levels: Sequence[int]) -> WeightedTree:
    """Tree on the levels listed in levels; edges join a vertex to its descendants
    on the next listed level with q and w multiplied along the path."""
    levels = list(levels)
    if not levels or levels[0] != 0:
        raise ValidationError("levels must be non-empty and start at level 0")
    if any(b <= a for a, b in zip(levels, levels[1:])) or levels[-1] > t.depth:
        raise ValidationError(f"levels must be strictly increasing within 0..{t.depth}")
    f = t.field
    rows = []
    for a, b in zip(levels, levels[1:]):
        # relative q and w products from the level-a ancestor down to level b
        rel_q = [Fraction(1)] * t.size(a)
        rel_w = [f.one] * t.size(a)
        for k in range(a + 1, b + 1):
            lev = t.level(k)
            rel_q = [rel_q[p] * q for p, q in zip(lev.parent, lev.q)]
            rel_w = [f.mul(rel_w[p], w) for p, w in zip(lev.parent, lev.w)]
        level_rows = []
        for i in range(t.size(a)):
            r = t.descendant_range(a, i, b)
            level_rows.append((tuple(rel_q[r.start:r.stop]), tuple(rel_w[r.start:r.stop])))
        rows.append(level_rows)
    return WeightedTree(f, rows, source_levels=[t.source_levels[n] for n in levels])
