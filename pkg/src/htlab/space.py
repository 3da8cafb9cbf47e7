"""Concrete value spaces E = F^k with a translation invariant metric.

Vectors are plain tuples of canonical field values (see :mod:`htlab.fields`);
the :class:`ValueSpace` object owns the arithmetic and the metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .errors import ValidationError
from .fields import APPROX_REAL, RATIONAL, FieldSpec

Vector = tuple

METRICS = ("discrete", "hamming", "sup_abs", "euclidean")


def _rational_height_block(h: int) -> list[Fraction]:
    """All reduced p/q with max(|p|, q) == h, smallest magnitude first, + before -."""
    out = []
    for q in range(1, h + 1):
        for p in range(1, h + 1):
            if max(p, q) != h or math.gcd(p, q) != 1:
                continue
            out.append(Fraction(p, q))
    out.sort()
    signed = []
    for x in out:
        signed.append(x)
        if x:
            signed.append(-x)
    return signed


class _RationalSequence:
    """0, 1, -1, 1/2, -1/2, 2, -2, 1/3, -1/3, 2/3, ... (grouped by height)."""

    def __init__(self):
        self._items = [Fraction(0)]
        self._height = 0

    def __getitem__(self, i: int) -> Fraction:
        while i >= len(self._items):
            self._height += 1
            self._items.extend(_rational_height_block(self._height))
        return self._items[i]


_RATIONALS = _RationalSequence()


def unrank_shell(i: int, width: int, m: int) -> list[int]:
    """i-th tuple (lexicographic, first entry most significant) in {0..m}^width
    whose maximum is exactly m."""
    if width == 0:
        if m == 0 and i == 0:
            return []
        raise IndexError(i)
    out = []
    has_max = False
    for pos in range(width):
        rest = width - pos - 1
        for d in range(m + 1):
            if has_max or d == m:
                count = (m + 1) ** rest
            else:
                count = (m + 1) ** rest - m ** rest
            if i < count:
                out.append(d)
                has_max = has_max or d == m
                break
            i -= count
        else:
            raise IndexError("shell index out of range")
    return out


def shell_size(width: int, m: int) -> int:
    if width == 0:
        return 1 if m == 0 else 0
    return (m + 1) ** width - m ** width


@dataclass(frozen=True)
class ValueSpace:
    field: FieldSpec
    dim: int = 1
    metric_kind: str = "discrete"

    def __post_init__(self):
        if self.dim < 0:
            raise ValidationError(f"dimension must be >= 0, got {self.dim}")
        if self.metric_kind not in METRICS:
            raise ValidationError(f"unknown metric {self.metric_kind!r}")
        if self.metric_kind == "sup_abs" and self.field.kind != RATIONAL:
            raise ValidationError("sup_abs metric requires the rational field")
        if self.metric_kind == "euclidean" and self.field.kind != APPROX_REAL:
            raise ValidationError("euclidean metric requires approx_real")

    @classmethod
    def from_json(cls, obj: dict, field: FieldSpec) -> "ValueSpace":
        if "field" in obj and FieldSpec.from_json(obj["field"]) != field:
            raise ValidationError("value space field differs from the tree weight field")
        return cls(field, int(obj.get("dim", 1)), obj.get("metric", "discrete"))

    def to_json(self) -> dict:
        return {"dim": self.dim, "metric": self.metric_kind}

    # sizes ------------------------------------------------------------------

    @property
    def is_trivial(self) -> bool:
        return self.dim == 0

    @property
    def cardinality(self) -> int | None:
        if self.dim == 0:
            return 1
        if self.field.is_finite:
            return self.field.p ** self.dim
        return None

    # arithmetic -------------------------------------------------------------

    def zero(self) -> Vector:
        z = self.field.zero
        return (z,) * self.dim

    def basis(self, i: int = 0) -> Vector:
        f = self.field
        return tuple(f.one if j == i else f.zero for j in range(self.dim))

    def vector(self, coords: Iterable) -> Vector:
        v = tuple(self.field.coerce(c) for c in coords)
        if len(v) != self.dim:
            raise ValidationError(f"expected {self.dim} coordinates, got {len(v)}")
        return v

    def add(self, u: Vector, v: Vector) -> Vector:
        add = self.field.add
        return tuple(add(a, b) for a, b in zip(u, v))

    def sub(self, u: Vector, v: Vector) -> Vector:
        sub = self.field.sub
        return tuple(sub(a, b) for a, b in zip(u, v))

    def neg(self, u: Vector) -> Vector:
        neg = self.field.neg
        return tuple(neg(a) for a in u)

    def scale(self, c, u: Vector) -> Vector:
        mul = self.field.mul
        return tuple(mul(c, a) for a in u)

    def lincomb(self, coeffs: Sequence, vectors: Sequence[Vector]) -> Vector:
        """sum_i coeffs[i] * vectors[i]"""
        f = self.field
        acc = [f.zero] * self.dim
        for c, v in zip(coeffs, vectors):
            for k in range(self.dim):
                acc[k] = f.add(acc[k], f.mul(c, v[k]))
        return tuple(acc)

    def eq(self, u: Vector, v: Vector) -> bool:
        eq = self.field.eq
        return all(eq(a, b) for a, b in zip(u, v))

    def is_zero(self, u: Vector) -> bool:
        return all(self.field.is_zero(a) for a in u)

    # metric -----------------------------------------------------------------

    def metric(self, u: Vector, v: Vector):
        """Exact Fraction for discrete/hamming/sup_abs, float for euclidean."""
        if len(u) != self.dim or len(v) != self.dim:
            raise ValidationError("vector dimension does not match the space")
        kind = self.metric_kind
        if kind == "discrete":
            return Fraction(0) if self.eq(u, v) else Fraction(1)
        if kind == "hamming":
            if self.dim == 0:
                return Fraction(0)
            eq = self.field.eq
            return Fraction(sum(1 for a, b in zip(u, v) if not eq(a, b)), self.dim)
        if kind == "sup_abs":
            return max((abs(a - b) for a, b in zip(u, v)), default=Fraction(0))
        return math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))

    def bounded_metric(self, u: Vector, v: Vector):
        d = self.metric(u, v)
        return d / (1 + d)

    @property
    def max_bounded(self):
        """Supremum of bounded_metric over E (attained only for finite metrics)."""
        if self.dim == 0:
            return Fraction(0)
        if self.metric_kind in ("discrete", "hamming"):
            return Fraction(1, 2)
        return Fraction(1)

    # enumeration ------------------------------------------------------------

    def enumerate_dense(self, i: int) -> Vector:
        """i-th element of the fixed countable dense subset D_E.

        Finite fields: base-p digits of ``i mod p^k``, coordinate 0 least
        significant, so every vector appears once per p^k consecutive indices.
        Rationals / approx reals: coordinates are indices into the height
        ordered rationals 0, 1, -1, 1/2, -1/2, 2, -2, 1/3, ...; tuples of
        indices are visited shell by shell (max index 0, then 1, ...).
        """
        if i < 0:
            raise ValueError("index must be >= 0")
        if self.dim == 0:
            return ()
        f = self.field
        if f.is_finite:
            i %= f.p ** self.dim
            coords = []
            for _ in range(self.dim):
                i, r = divmod(i, f.p)
                coords.append(r)
            return tuple(coords)
        m = 0
        while True:
            size = shell_size(self.dim, m)
            if i < size:
                break
            i -= size
            m += 1
        idx = unrank_shell(i, self.dim, m)
        return tuple(f.coerce(_RATIONALS[j]) for j in idx)

    # text -------------------------------------------------------------------

    def format(self, u: Vector) -> Any:
        parts = [self.field.format(a) for a in u]
        return parts[0] if self.dim == 1 else parts

    def parse(self, obj: Any) -> Vector:
        if self.dim == 1 and not isinstance(obj, list):
            obj = [obj]
        return self.vector(self.field.parse(str(x)) for x in obj)
