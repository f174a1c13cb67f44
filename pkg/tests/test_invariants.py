from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dynamic_digraphs, euler_oracle, invariant_oracle, random_digraph
from ssx.complex import DirectedGraph
from ssx.dac import DynamicBinaryDigraph, lift_dac
from ssx.errors import ValidationError
from ssx.fixtures import circulant, fixtures
from ssx.invariants import (
    InvariantSpec,
    dir_,
    euler_series,
    global_invariant,
    hodir,
    invariant_matrix,
    rc,
    restricted_khop,
    size,
    td,
    topofeat,
)
from ssx.relations import derive
from ssx.rng import make_rng

VERTEX_KINDS = ("size", "dir", "rc", "indeg", "outdeg")
HODIR = [(1, 0, 1), (1, 1, 0), (2, 0, 1), (2, 1, 2), (2, 0, 2), (2, 2, 0)]


def all_active(graph, T=1):
    return lift_dac(DynamicBinaryDigraph(graph, np.ones((graph.num_vertices, T), np.uint8)))


def test_invariants_match_definition_on_random_instances():
    rng = make_rng(11)
    for _ in range(120):
        n = int(rng.integers(0, 8))
        g = random_digraph(rng, n, float(rng.uniform(0.1, 0.7)))
        acts = (rng.random((n, int(rng.integers(1, 4)))) < 0.7).astype(np.uint8)
        dac = lift_dac(DynamicBinaryDigraph(g, acts))
        for k in (1, 2, 3):
            for kind in VERTEX_KINDS:
                assert np.array_equal(invariant_matrix(dac, InvariantSpec(kind, k)), invariant_oracle(g, acts, kind, k)), (kind, k)
            for nij in HODIR:
                got = invariant_matrix(dac, InvariantSpec("hodir", k, *nij))
                assert np.array_equal(got, invariant_oracle(g, acts, "hodir", k, nij)), (nij, k)
        assert np.array_equal(invariant_matrix(dac, InvariantSpec("td")), invariant_oracle(g, acts, "td"))
        assert np.array_equal(euler_series(dac), euler_oracle(g, acts))


@given(dynamic_digraphs(), st.randoms(use_true_random=False), st.integers(1, 2))
@settings(max_examples=80, deadline=None)
def test_vertex_invariants_are_relabel_equivariant(g, rnd, k):
    perm = list(range(g.graph.num_vertices))
    rnd.shuffle(perm)
    a, b = lift_dac(g), lift_dac(g.relabel(perm))
    for kind in (*VERTEX_KINDS, "td"):
        ma, mb = invariant_matrix(a, InvariantSpec(kind, k)), invariant_matrix(b, InvariantSpec(kind, k))
        assert np.array_equal(ma, mb[perm])
        for phi in ("sum", "mean", "sorted-multiset"):
            assert np.array_equal(np.asarray(global_invariant(a, InvariantSpec(kind, k), phi)), np.asarray(global_invariant(b, InvariantSpec(kind, k), phi)))
    for nij in HODIR:
        spec = InvariantSpec("hodir", k, *nij)
        assert global_invariant(a, spec, "sorted-multiset") == global_invariant(b, spec, "sorted-multiset")
    assert np.array_equal(euler_series(a), euler_series(b))


@given(dynamic_digraphs(), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_restricted_khop_counts(g, k):
    dac = lift_dac(g)
    if dac.complex.dim < 1:
        return
    r = derive(dac.complex, "r_sym")
    m = invariant_matrix(dac, InvariantSpec("size", k))
    for t in range(1, g.T + 1):
        counts = restricted_khop(r, dac, t, k).out_counts()[: g.graph.num_vertices]
        assert np.array_equal(counts, m[:, t - 1])


def test_circulant_euler_and_triangle_degree():
    a, b = all_active(circulant(7, (1, 2))), all_active(circulant(7, (1, 3)))
    assert euler_series(a).tolist() == [0]
    assert euler_series(b).tolist() == [-7]
    assert invariant_matrix(a, InvariantSpec("td"))[:, 0].tolist() == [3] * 7
    assert invariant_matrix(b, InvariantSpec("td"))[:, 0].tolist() == [0] * 7


def test_fixture_values():
    fx = fixtures()
    trans, cyc = all_active(fx["fig9"].a), all_active(fx["fig9"].b)
    assert [dir_(trans, v)[0] for v in range(3)] == [-2, 0, 2]
    assert [dir_(cyc, v)[0] for v in range(3)] == [0, 0, 0]
    recip, plain = all_active(fx["fig11"].a), all_active(fx["fig11"].b)
    assert [rc(recip, v)[0] for v in range(3)] == [0, 1, 1]
    assert [rc(plain, v)[0] for v in range(3)] == [0, 0, 0]
    assert size(trans, 0, 1)[0] == 2 and td(trans, 0)[0] == 1
    glued = all_active(DirectedGraph(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]))
    assert [hodir(glued, s, 2, 0, 2)[0] for s in range(2)] == [1, -1]


def test_inactive_bins_zero_out():
    g = DynamicBinaryDigraph(circulant(5, (1, 2)), np.zeros((5, 2), np.uint8))
    dac = lift_dac(g)
    assert euler_series(dac).tolist() == [0, 0]
    for kind in VERTEX_KINDS:
        assert not invariant_matrix(dac, InvariantSpec(kind, 2)).any()


def test_topofeat_layout():
    g = DynamicBinaryDigraph(circulant(7, (1, 2)), np.array([[1, 0]] * 7, np.uint8))
    dac = lift_dac(g)
    K = 2
    v = topofeat(dac, K)
    assert v.shape == (2 * (6 * K + 1),)
    first, second = v[: 6 * K + 1], v[6 * K + 1 :]
    assert first[0] == 0 and not second.any()
    assert first[1] == global_invariant(dac, InvariantSpec("size", 1)).tolist()[0]
    assert first[1 + 2 * K] == global_invariant(dac, InvariantSpec("hodir", 1, 1, 0, 1))[0]


def test_bad_requests():
    with pytest.raises(ValidationError):
        InvariantSpec("nope")
    with pytest.raises(ValidationError):
        InvariantSpec("size", 0)
    with pytest.raises(ValidationError):
        InvariantSpec("hodir", 1, 2, 1, 1)
    dac = all_active(DirectedGraph(3, [(0, 1)]))
    with pytest.raises(ValidationError):
        topofeat(dac, 1)
    with pytest.raises(ValidationError):
        global_invariant(dac, InvariantSpec("size"), "max")
    with pytest.raises(ValidationError):
        size(dac, 5)
