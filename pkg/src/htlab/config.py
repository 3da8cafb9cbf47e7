"""Run configuration: one JSON document per run, parsed into dataclasses."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .boundary import Ball, StepFunction, dense_target
from .errors import ValidationError
from .harmonic import TreeFunction
from .space import ValueSpace
from .tree import TreeConfig, WeightedTree

SEED_LIMIT = 2 ** 64


def _frac(x, what: str) -> Fraction:
    try:
        return Fraction(str(x))
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"{what}: cannot read {x!r} as a rational number") from None


@dataclass
class SeedSpec:
    """Harmonic seed: the ``stub``-th dense harmonic function cut at ``depth``
    (zero function when ``stub`` is None)."""

    depth: int = 0
    stub: int | None = None

    @classmethod
    def from_json(cls, obj) -> "SeedSpec":
        obj = obj or {}
        return cls(int(obj.get("depth", 0)), obj.get("stub"))

    def build(self, t: WeightedTree, space: ValueSpace) -> TreeFunction:
        from .constructors import dense_harmonic

        if self.depth > t.depth:
            raise ValidationError(f"seed depth {self.depth} exceeds tree depth {t.depth}")
        if self.stub is None:
            return TreeFunction.zero(space, t, self.depth)
        return dense_harmonic(t, space, int(self.stub), self.depth)


def parse_target(obj, t: WeightedTree, space: ValueSpace) -> StepFunction:
    """An int picks from the dense enumeration; an object gives level and values."""
    if isinstance(obj, int) and not isinstance(obj, bool):
        return dense_target(t, space, obj)
    if isinstance(obj, dict) and "dense" in obj:
        return dense_target(t, space, int(obj["dense"]))
    if isinstance(obj, dict) and "level" in obj:
        h = StepFunction.from_json(obj, space)
        if len(h.values) != t.size(h.level):
            raise ValidationError(f"target on level {h.level} needs {t.size(h.level)} values")
        return h
    raise ValidationError(f"cannot read target {obj!r}")


@dataclass
class UniversalParams:
    n_targets: int = 4
    seed_function: SeedSpec = field(default_factory=SeedSpec)
    levels: list[int] | None = None
    mc_samples: int = 10_000


@dataclass
class FrequentParams:
    horizon: int = 4
    max_target: int | None = None
    seed_function: SeedSpec = field(default_factory=SeedSpec)
    levels: list[int] | None = None


@dataclass
class GenericityParams:
    m: int = 2
    tol: Fraction = Fraction(1, 8)
    eps: Fraction = Fraction(1, 4)
    coeffs: list[list[Any]] = field(default_factory=lambda: [[1, 1]])
    span_targets: list[Any] = field(default_factory=lambda: [1])
    levels: list[int] | None = None


@dataclass
class XParams:
    balls: list[dict] = field(default_factory=list)
    theta_min: Fraction = Fraction(4, 5)
    seed_function: SeedSpec = field(default_factory=SeedSpec)
    rounds: int | None = None

    def build_balls(self, t: WeightedTree, space: ValueSpace) -> list[Ball]:
        return [Ball(parse_target(b["target"], t, space), _frac(b["radius"], "ball radius"))
                for b in self.balls]


@dataclass
class ScheduleParams:
    horizon: int = 2 ** 20
    m_max: int = 5
    points: int = 1024


@dataclass
class RunConfig:
    tree: TreeConfig
    space: dict
    seed: int = 0
    universal: UniversalParams = field(default_factory=UniversalParams)
    frequent: FrequentParams = field(default_factory=FrequentParams)
    genericity: GenericityParams = field(default_factory=GenericityParams)
    x: XParams = field(default_factory=XParams)
    schedule: ScheduleParams = field(default_factory=ScheduleParams)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def value_space(self) -> ValueSpace:
        return ValueSpace.from_json(self.space, self.tree.field)

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ValidationError("config must be a JSON object")
        if "tree" not in obj:
            raise ValidationError("config needs a 'tree' block")
        seed = obj.get("seed", 0)
        if not isinstance(seed, int) or not 0 <= seed < SEED_LIMIT:
            raise ValidationError(f"seed must be an integer in [0, 2^64), got {seed!r}")
        u = obj.get("universal", {})
        fq = obj.get("frequent", {})
        g = obj.get("genericity", {})
        x = obj.get("x", {})
        s = obj.get("schedule", {})
        return cls(
            tree=TreeConfig.from_json(obj["tree"]),
            space=obj.get("space", {}),
            seed=seed,
            universal=UniversalParams(int(u.get("n_targets", 4)), SeedSpec.from_json(u.get("seed_function")),
                                      u.get("levels"), int(u.get("mc_samples", 10_000))),
            frequent=FrequentParams(int(fq.get("horizon", 4)), fq.get("max_target"),
                                    SeedSpec.from_json(fq.get("seed_function")), fq.get("levels")),
            genericity=GenericityParams(int(g.get("m", 2)), _frac(g.get("tol", "1/8"), "tol"),
                                        _frac(g.get("eps", "1/4"), "eps"), g.get("coeffs", [[1, 1]]),
                                        g.get("span_targets", [1]), g.get("levels")),
            x=XParams(x.get("balls", []), _frac(x.get("theta_min", "4/5"), "theta_min"),
                      SeedSpec.from_json(x.get("seed_function")), x.get("rounds")),
            schedule=ScheduleParams(int(s.get("horizon", 2 ** 20)), int(s.get("m_max", 5)),
                                    int(s.get("points", 1024))),
            raw=obj,
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))
