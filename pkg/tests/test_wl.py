from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import digraphs, dynamic_digraphs
from ssx.complex import DirectedGraph, build_flag_complex
from ssx.dac import lift_dac
from ssx.errors import ValidationError
from ssx.fixtures import fixtures
from ssx.wl import (
    compare,
    constant_coloring,
    dir_wl_compare,
    feature_coloring,
    refine,
    refines,
    sswl_coloring,
    sswl_compare,
)


def naive_partition(n, relations, init, rounds):
    """Textbook refinement for a fixed number of rounds, returned as a partition."""
    colors = list(init)
    for _ in range(rounds):
        sig = [
            (colors[v], *(tuple(sorted(colors[b] for a, b in rel if a == v)) for rel in relations))
            for v in range(n)
        ]
        colors = [repr(s) for s in sig]
    return partition(colors)


def partition(colors):
    groups = {}
    for v, c in enumerate(list(colors)):
        groups.setdefault(c, []).append(v)
    return sorted(map(tuple, groups.values()))


@st.composite
def relational_structures(draw):
    n = draw(st.integers(1, 9))
    pair = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
    rels = draw(st.lists(st.lists(pair, max_size=15, unique=True), min_size=1, max_size=3))
    init = draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
    return n, rels, init


@given(relational_structures())
@settings(max_examples=200, deadline=None)
def test_refine_matches_naive_stable_partition(args):
    n, rels, init = args
    col = refine(n, [np.array(r, np.int64).reshape(-1, 2) for r in rels], np.array(init))
    assert partition(col.colors.tolist()) == naive_partition(n, rels, init, n)
    assert refines(col, feature_coloring(np.array(init)))


@given(relational_structures(), st.randoms(use_true_random=False))
@settings(max_examples=100, deadline=None)
def test_isomorphic_copies_are_never_separated(args, rnd):
    n, rels, init = args
    perm = list(range(n))
    rnd.shuffle(perm)
    moved = [np.array([(perm[a], perm[b]) for a, b in r], np.int64).reshape(-1, 2) for r in rels]
    permuted_init = np.empty(n, np.int64)
    permuted_init[perm] = init
    res = compare([n, n], [[np.array(r, np.int64).reshape(-1, 2) for r in rels], moved], [np.array(init), permuted_init])
    assert not res.separated


@given(digraphs(max_vertices=6))
@settings(max_examples=100, deadline=None)
def test_directed_family_refines_undirected(g):
    cx = build_flag_complex(g)
    assert refines(sswl_coloring(cx, "D"), sswl_coloring(cx, "U"))


def test_set_unions_can_break_refinement():
    # edge 0->1 reaches 1->0 through two face indices; a set union counts it once
    g = DirectedGraph(4, [(0, 1), (0, 2), (1, 0), (2, 3), (3, 1), (3, 2)])
    cx = build_flag_complex(g)
    assert not refines(sswl_coloring(cx, "D", union="set"), sswl_coloring(cx, "U", union="set"))
    assert refines(sswl_coloring(cx, "D"), sswl_coloring(cx, "U"))
    with pytest.raises(ValidationError):
        sswl_coloring(cx, "U", union="max")


@given(dynamic_digraphs(max_vertices=6))
@settings(max_examples=50, deadline=None)
def test_feature_initialisation_is_respected(g):
    dac = lift_dac(g)
    init = feature_coloring(dac.matrix)
    col = sswl_coloring(dac.complex, "D", init)
    assert refines(col, init)


@pytest.mark.parametrize(
    "name, directed, undirected, indexed",
    [
        ("fig9", True, True, True),
        ("fig11", True, True, True),
        ("fig8", False, True, True),
        ("fig6", True, False, True),
    ],
)
def test_fixture_verdicts(name, directed, undirected, indexed):
    pair = fixtures()[name]
    a, b = build_flag_complex(pair.a), build_flag_complex(pair.b)
    assert dir_wl_compare(pair.a, pair.b).separated is directed
    assert sswl_compare(a, b, "U").separated is undirected
    assert sswl_compare(a, b, "D").separated is indexed


def test_missing_relation_treated_as_empty():
    pair = fixtures()["fig9"]
    # the cycle has no triangle, so its dimension-2 relations are empty
    res = sswl_compare(build_flag_complex(pair.a), build_flag_complex(pair.b), "D")
    assert res.separated and len(res.histograms) == 2


def test_no_relations_keeps_initial_colours():
    col = refine(4, [], np.array([3, 1, 3, 0]))
    assert partition(col.colors.tolist()) == [(0, 2), (1,), (3,)]
    assert constant_coloring(3).num_colors == 1


def test_refine_validation():
    with pytest.raises(ValidationError):
        refine(2, [np.array([[0, 5]])])
    with pytest.raises(ValidationError):
        refine(2, [], np.zeros(3))
    with pytest.raises(ValidationError):
        compare([1, 1], [[np.zeros((0, 2))], []])
