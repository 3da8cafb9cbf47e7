"""Pluggable scalar fields.

A :class:`FieldSpec` describes the field and carries the arithmetic on raw
canonical values: ``int`` residues for GF(p) and :class:`fractions.Fraction`
for the rationals, with ``float`` reserved for the approximate reals.  Hot loops elsewhere in
the package work on raw values through a FieldSpec; :class:`FieldElement` is the
checked, operator-overloaded wrapper for user-facing code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterator

from .errors import FieldMismatch, ValidationError, ZeroInverse

GFP = "gfp"
RATIONAL = "rational"
APPROX_REAL = "approx_real"


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


@dataclass(frozen=True)
class FieldSpec:
    kind: str
    p: int = 0
    eps: float = 0.0

    def __post_init__(self):
        if self.kind == GFP:
            if not is_prime(self.p):
                raise ValidationError(f"GF(p) needs a prime p, got {self.p}")
        elif self.kind == APPROX_REAL:
            if not self.eps >= 0:
                raise ValidationError(f"approx_real tolerance must be >= 0, got {self.eps}")
        elif self.kind != RATIONAL:
            raise ValidationError(f"unknown field kind {self.kind!r}")

    # constructors -----------------------------------------------------------

    @classmethod
    def gf2(cls) -> "FieldSpec":
        return cls(GFP, p=2)

    @classmethod
    def gfp(cls, p: int) -> "FieldSpec":
        return cls(GFP, p=p)

    @classmethod
    def rational(cls) -> "FieldSpec":
        return cls(RATIONAL)

    @classmethod
    def approx_real(cls, eps: float = 1e-9) -> "FieldSpec":
        return cls(APPROX_REAL, eps=float(eps))

    @classmethod
    def from_json(cls, obj: Any) -> "FieldSpec":
        if obj == "gf2":
            return cls.gf2()
        if obj == "rational":
            return cls.rational()
        if isinstance(obj, dict) and len(obj) == 1:
            (key, val), = obj.items()
            if key == "gfp":
                if not isinstance(val, int) or isinstance(val, bool):
                    raise ValidationError(f"gfp modulus must be an integer, got {val!r}")
                return cls.gfp(val)
            if key == "approx_real":
                return cls.approx_real(float(val))
        raise ValidationError(f"unrecognised field spec {obj!r}")

    def to_json(self) -> Any:
        if self.kind == GFP:
            return "gf2" if self.p == 2 else {"gfp": self.p}
        if self.kind == RATIONAL:
            return "rational"
        return {"approx_real": self.eps}

    def __str__(self):
        if self.kind == GFP:
            return f"GF({self.p})"
        if self.kind == RATIONAL:
            return "Q"
        return f"R~{self.eps:g}"

    # properties -------------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.kind != APPROX_REAL

    @property
    def is_finite(self) -> bool:
        return self.kind == GFP

    @property
    def order(self) -> int | None:
        return self.p if self.kind == GFP else None

    @property
    def zero(self):
        return 0 if self.kind == GFP else (Fraction(0) if self.kind == RATIONAL else 0.0)

    @property
    def one(self):
        return 1 if self.kind == GFP else (Fraction(1) if self.kind == RATIONAL else 1.0)

    def elements(self) -> Iterator:
        if self.kind != GFP:
            raise ValueError(f"{self} is infinite")
        return iter(range(self.p))

    # raw arithmetic ---------------------------------------------------------

    def coerce(self, x):
        """Map an int, Fraction, float or string to this field's canonical value."""
        if isinstance(x, str):
            return self.parse(x)
        if self.kind == GFP:
            if isinstance(x, float):
                if not x.is_integer():
                    raise ValidationError(f"cannot map {x} into {self}")
                x = int(x)
            x = Fraction(x)
            if x.denominator % self.p == 0:
                raise ValidationError(f"cannot map {x} into {self}")
            return (x.numerator * pow(x.denominator, -1, self.p)) % self.p
        if self.kind == RATIONAL:
            if isinstance(x, float):
                return Fraction(x).limit_denominator()
            return Fraction(x)
        return float(x)

    def add(self, a, b):
        if self.kind == GFP:
            return (a + b) % self.p
        return a + b

    def sub(self, a, b):
        if self.kind == GFP:
            return (a - b) % self.p
        return a - b

    def neg(self, a):
        if self.kind == GFP:
            return (-a) % self.p
        return -a

    def mul(self, a, b):
        if self.kind == GFP:
            return (a * b) % self.p
        return a * b

    def inv(self, a):
        if self.is_zero(a):
            raise ZeroInverse(f"{self.format(a)} has no inverse in {self}")
        if self.kind == GFP:
            return pow(a, -1, self.p)
        if self.kind == RATIONAL:
            return 1 / Fraction(a)
        return 1.0 / a

    def is_zero(self, a) -> bool:
        if self.kind == APPROX_REAL:
            return abs(a) <= self.eps
        return a == 0

    def eq(self, a, b) -> bool:
        if self.kind == APPROX_REAL:
            return abs(a - b) <= self.eps
        return a == b

    def abs(self, a):
        """Absolute value, only meaningful for the ordered fields."""
        if self.kind == GFP:
            raise ValueError(f"{self} is not ordered")
        return abs(a)

    # text -------------------------------------------------------------------

    def parse(self, s: str):
        s = s.strip()
        if self.kind == GFP:
            return self.coerce(Fraction(s))
        if self.kind == RATIONAL:
            return Fraction(s)
        return float(Fraction(s)) if "/" in s else float(s)

    def format(self, a) -> str:
        if self.kind == APPROX_REAL:
            return repr(float(a))
        return str(a)


@dataclass(frozen=True)
class FieldElement:
    spec: FieldSpec
    value: Any

    @classmethod
    def of(cls, spec: FieldSpec, x) -> "FieldElement":
        return cls(spec, spec.coerce(x))

    def _check(self, other) -> "FieldElement":
        if not isinstance(other, FieldElement):
            return FieldElement.of(self.spec, other)
        if other.spec != self.spec:
            raise FieldMismatch(f"{self.spec} vs {other.spec}")
        return other

    def __add__(self, other):
        other = self._check(other)
        return FieldElement(self.spec, self.spec.add(self.value, other.value))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        return FieldElement(self.spec, self.spec.sub(self.value, other.value))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        return FieldElement(self.spec, self.spec.mul(self.value, other.value))

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(self.spec, self.spec.neg(self.value))

    def __truediv__(self, other):
        return self * self._check(other).inverse()

    def inverse(self) -> "FieldElement":
        return FieldElement(self.spec, self.spec.inv(self.value))

    def is_zero(self) -> bool:
        return self.spec.is_zero(self.value)

    def __eq__(self, other):
        if not isinstance(other, FieldElement):
            try:
                other = FieldElement.of(self.spec, other)
            except (ValidationError, TypeError, ValueError):
                return NotImplemented
        return self.spec == other.spec and self.spec.eq(self.value, other.value)

    def __hash__(self):
        if not self.spec.is_exact:
            raise TypeError("approx_real elements are unhashable")
        return hash((self.spec, self.value))

    def __str__(self):
        return self.spec.format(self.value)

    def __repr__(self):
        return f"{self.spec}({self})"


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    if a.spec != b.spec:
        raise FieldMismatch(f"{a.spec} vs {b.spec}")
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    if a.spec != b.spec:
        raise FieldMismatch(f"{a.spec} vs {b.spec}")
    return a * b


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()
