import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from htlab.errors import ResourceLimit, ValidationError
from htlab.fields import FieldSpec
from htlab.generators import random_tree
from htlab.tree import (TreeConfig, Vertex, build_tree, collapse, min_prob_descendant, sector_prob,
                        tree_problems, uniform_tree)

Q = FieldSpec.rational()


def test_uniform_binary_depth3():
    t = uniform_tree(3)
    assert t.num_vertices() == 15
    assert all(q == Fraction(1, 2) for n in range(1, 4) for q in t.level(n).q)
    assert sector_prob(t, Vertex(3, 5)) == Fraction(1, 8)
    assert sector_prob(t, Vertex(0, 0)) == 1


def test_per_level_branching():
    t = build_tree(TreeConfig(3, [2, 3, 2]))
    assert [t.size(n) for n in range(4)] == [1, 2, 6, 12]


def test_explicit_adjacency():
    cfg = TreeConfig(2, {"adjacency": [[2], [3, 2]]}, field=Q, w="q")
    t = build_tree(cfg)
    assert t.size(2) == 5
    assert list(t.children(1, 1)) == [3, 4]
    assert t.parent(2, 3) == 1
    assert sector_prob(t, Vertex(2, 0)) == Fraction(1, 6)


def test_one_child_rejected():
    with pytest.raises(ValidationError) as exc:
        build_tree(TreeConfig(2, 1))
    assert "at least two" in str(exc.value)


def test_problems_name_vertices():
    cfg = TreeConfig(2, {"adjacency": [[2], [2, 2]]}, q={"rows": [[["1/2", "1/2"]], [["1/2", "1/2"], ["1/2", "2/5"]]]},
                     w="q", field=Q)
    problems, _ = tree_problems(cfg)
    assert len(problems) == 1 and "vertex (1,1)" in problems[0] and "9/10" in problems[0]


@pytest.mark.parametrize("w", [["1", "0"], ["0", "1"]])
def test_zero_weight_rejected(w):
    problems, _ = tree_problems(TreeConfig(1, 2, "uniform", w, Q))
    assert any("zero edge weight" in p for p in problems)


def test_q_range_checked():
    problems, _ = tree_problems(TreeConfig(1, 2, ["3/2", "-1/2"], "ones", Q))
    assert any("(0, 1]" in p for p in problems)


def test_config_json_round_trip():
    cfg = TreeConfig(3, [2, 3, 2], "uniform", "ones", FieldSpec.gfp(5))
    assert TreeConfig.from_json(cfg.to_json()) == cfg


def test_third_two_thirds_path_product():
    t = build_tree(TreeConfig(2, 2, ["1/3", "2/3"], "q", Q))
    assert sector_prob(t, Vertex(2, 0)) == Fraction(1, 9)


def test_min_prob_descendant():
    t = uniform_tree(3)
    b = min_prob_descendant(t, Vertex(1, 1), 3)
    assert t.ancestor(3, b.index, 1) == 1
    assert sector_prob(t, b) == Fraction(1, 8)
    assert min_prob_descendant(t, Vertex(2, 3), 2) == Vertex(2, 3)
    skew = build_tree(TreeConfig(4, 2, ["3/4", "1/4"], "q", Q))
    x = Vertex(1, 0)
    b = min_prob_descendant(skew, x, 4)
    assert sector_prob(skew, b) == sector_prob(skew, x) * Fraction(1, 4) ** 3
    with pytest.raises(ValueError):
        min_prob_descendant(t, Vertex(2, 0), 1)


def test_ties_break_to_lowest_index():
    t = uniform_tree(2, 3)
    assert min_prob_descendant(t, Vertex(0, 0), 2) == Vertex(2, 0)


@given(st.integers(0, 2 ** 32))
def test_min_prob_bound_on_random_trees(seed):
    rng = random.Random(seed)
    t = random_tree(rng, 5, Q)
    for n in range(4):
        for i in range(t.size(n)):
            K = rng.randint(n, 5)
            b = min_prob_descendant(t, Vertex(n, i), K)
            assert t.sector_prob(b) <= t.sector_prob(Vertex(n, i)) * Fraction(1, 2 ** (K - n))


@given(st.integers(0, 2 ** 32))
def test_measure_consistency(seed):
    t = random_tree(random.Random(seed), 5, Q)
    for n in range(t.depth + 1):
        assert sum(t.sector_probs(n)) == 1
    for n in range(t.depth):
        probs, below = t.sector_probs(n), t.sector_probs(n + 1)
        for i in range(t.size(n)):
            assert probs[i] == sum(below[y] for y in t.children(n, i))


def test_descendant_ranges_and_ancestors():
    t = build_tree(TreeConfig(3, [2, 3, 2]))
    for n in range(4):
        for m in range(n, 4):
            anc = t.ancestor_map(n, m)
            for i in range(t.size(n)):
                r = t.descendant_range(n, i, m)
                assert all(anc[y] == i for y in r)
                assert sum(1 for a in anc if a == i) == len(r)


def test_bfs_enumeration():
    t = uniform_tree(3)
    order = [t.bfs_index(v) for n in range(4) for v in t.vertices(n)]
    assert order == list(range(15))


def test_lazy_deep_tree_and_cap(monkeypatch):
    t = uniform_tree(64, 2, Q, w="q")
    assert t.size(64) == 2 ** 64
    assert t.materialized_depth() == 0
    monkeypatch.setenv("HTLAB_MAX_VERTICES", "100")
    assert t.can_materialize(5) and not t.can_materialize(6)
    t.level(5)
    with pytest.raises(ResourceLimit):
        t.level(6)


def test_weight_sum_violations():
    assert uniform_tree(3, 2, FieldSpec.gf2()).weight_sum_violations()
    assert not uniform_tree(3, 2, Q, w="q").weight_sum_violations()
    gf3 = build_tree(TreeConfig(2, 2, "uniform", [2, 2], FieldSpec.gfp(3)))
    assert not gf3.weight_sum_violations()


def test_collapse_examples():
    t = uniform_tree(4)
    same = collapse(t, range(5))
    assert [same.size(n) for n in range(5)] == [t.size(n) for n in range(5)]
    assert all(same.level(n).q == t.level(n).q for n in range(1, 5))
    c = collapse(t, [0, 2])
    assert c.size(1) == 4 and set(c.level(1).q) == {Fraction(1, 4)}
    assert set(c.level(1).w) == {1}
    assert c.source_levels == (0, 2)


@pytest.mark.parametrize("bad", [[], [1, 2], [0, 2, 2], [0, 9]])
def test_collapse_rejects_bad_levels(bad):
    with pytest.raises(ValidationError):
        collapse(uniform_tree(4), bad)
