from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from htlab.fields import FieldSpec
from htlab.space import ValueSpace
from htlab.tree import uniform_tree

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def gf2():
    return FieldSpec.gf2()


@pytest.fixture
def bits(gf2):
    return ValueSpace(gf2)


@pytest.fixture
def rationals():
    return ValueSpace(FieldSpec.rational(), 1, "sup_abs")


@pytest.fixture
def binary3(gf2):
    return uniform_tree(3, 2, gf2)


@pytest.fixture
def binary_q():
    return uniform_tree(6, 2, FieldSpec.rational(), w="q")


def frac(s) -> Fraction:
    return Fraction(s)
