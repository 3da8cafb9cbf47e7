import json
from fractions import Fraction

import pytest

from htlab.boundary import StepFunction
from htlab.config import RunConfig, SeedSpec, parse_target
from htlab.errors import ValidationError
from htlab.harmonic import is_harmonic
from htlab.space import ValueSpace
from htlab.tree import build_tree

RAW = {"tree": {"depth": 4, "branching": 2, "w": "q", "field": "rational"},
       "space": {"dim": 1, "metric": "sup_abs"},
       "x": {"balls": [{"target": {"level": 1, "values": ["1/2", "-1"]}, "radius": "1/3"}]}}


def test_defaults_and_hash():
    cfg = RunConfig.from_json(RAW)
    assert cfg.seed == 0 and cfg.universal.n_targets == 4
    assert cfg.genericity.tol == Fraction(1, 8)
    assert cfg.config_hash == RunConfig.from_json(json.loads(json.dumps(RAW))).config_hash
    assert cfg.config_hash != RunConfig.from_json(dict(RAW, seed=1)).config_hash


def test_targets_and_balls():
    cfg = RunConfig.from_json(RAW)
    t, space = build_tree(cfg.tree), cfg.value_space()
    ball = cfg.x.build_balls(t, space)[0]
    assert ball.center == StepFunction(1, ((Fraction(1, 2),), (Fraction(-1),)))
    assert ball.radius == Fraction(1, 3)
    assert parse_target(3, t, space) == parse_target({"dense": 3}, t, space)
    with pytest.raises(ValidationError):
        parse_target({"level": 2, "values": ["1"]}, t, space)
    with pytest.raises(ValidationError):
        parse_target("three", t, space)


def test_seed_spec():
    cfg = RunConfig.from_json(RAW)
    t, space = build_tree(cfg.tree), cfg.value_space()
    f = SeedSpec(3, 5).build(t, space)
    assert f.depth == 3 and is_harmonic(f, t)[0]
    assert all(v == (0,) for v in SeedSpec(2).build(t, space).levels[2])
    with pytest.raises(ValidationError):
        SeedSpec(9).build(t, space)


@pytest.mark.parametrize("bad", [{"space": {}}, [], dict(RAW, seed=2 ** 64), dict(RAW, seed="1"),
                                 dict(RAW, genericity={"tol": "one"})])
def test_rejects_bad_documents(bad):
    with pytest.raises(ValidationError):
        RunConfig.from_json(bad)
