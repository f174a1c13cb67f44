"""Definition-level reference implementations used only by the tests.

Nothing here touches the relation algebra or the packed activations: every
quantity is recomputed from vertex tuples and edge sets by plain enumeration.
"""

from __future__ import annotations

from itertools import combinations, permutations

import numpy as np
from hypothesis import strategies as st

from ssx.complex import DirectedGraph


@st.composite
def digraphs(draw, min_vertices=0, max_vertices=7, reciprocal=True):
    n = draw(st.integers(min_vertices, max_vertices))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    if not reciprocal:
        pairs = [(u, v) for u, v in pairs if u < v]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    if not reciprocal:
        flips = draw(st.lists(st.booleans(), min_size=len(chosen), max_size=len(chosen)))
        chosen = [(v, u) if f else (u, v) for (u, v), f in zip(chosen, flips)]
    return DirectedGraph(n, chosen)


@st.composite
def dynamic_digraphs(draw, max_vertices=7, max_T=4):
    from ssx.dac import DynamicBinaryDigraph

    g = draw(digraphs(max_vertices=max_vertices))
    T = draw(st.integers(1, max_T))
    bits = draw(st.lists(st.integers(0, 1), min_size=g.num_vertices * T, max_size=g.num_vertices * T))
    return DynamicBinaryDigraph(g, np.array(bits, dtype=np.uint8).reshape(g.num_vertices, T))


def random_digraph(rng: np.random.Generator, n: int, p: float) -> DirectedGraph:
    return DirectedGraph(n, [(u, v) for u in range(n) for v in range(n) if u != v and rng.random() < p])


def flag_tuples(graph: DirectedGraph, max_dim: int) -> list[set[tuple[int, ...]]]:
    """All ordered vertex tuples whose every forward pair is an edge."""
    edges = graph.edge_set
    out = []
    for n in range(max_dim + 1):
        found = set()
        for tup in permutations(range(graph.num_vertices), n + 1):
            if all((tup[a], tup[b]) in edges for a, b in combinations(range(n + 1), 2)):
                found.add(tup)
        out.append(found)
    return out


def drop(tup: tuple[int, ...], i: int) -> tuple[int, ...]:
    return tup[:i] + tup[i + 1 :]


def catalogue_oracle(tables: list[set[tuple]], spec: str) -> set[tuple[tuple, tuple]]:
    """Relation as a set of vertex-tuple pairs, by scanning faces directly."""
    name, _, rest = spec.partition("(")
    args = tuple(int(x) for x in rest.rstrip(")").split(",")) if rest else ()
    top = len(tables) - 1
    edges = tables[1] if top >= 1 else set()
    if name == "r_in":
        return {((v,), (u,)) for u, v in edges}
    if name == "r_out":
        return {((u,), (v,)) for u, v in edges}
    if name == "r_sym":
        return catalogue_oracle(tables, "r_in") | catalogue_oracle(tables, "r_out")
    if name == "rc":
        return {((u,), (v,)) for u, v in edges if (v, u) in edges}
    if name == "lower":
        n, i, j = args
        return {(s, t) for s in tables[n] for t in tables[n] if drop(s, i) == drop(t, j)}
    if name == "upper":
        n, i, j = args
        return {(drop(r, i), drop(r, j)) for r in tables[n + 1]}
    if name == "boundary":
        (n,) = args
        return {(s, drop(s, i)) for s in tables[n] for i in range(n + 1)}
    if name == "coboundary" and len(args) == 1:
        (n,) = args
        return {(drop(s, i), s) for s in tables[n + 1] for i in range(n + 2)}
    if name == "coboundary":
        m, n = args
        return {(f, s) for s in tables[n] for f in combinations_of(s, m)}
    if name == "lower_all":
        (n,) = args
        return {(s, t) for s in tables[n] for t in tables[n] if any(drop(s, i) == drop(t, j) for i in range(n + 1) for j in range(n + 1))}
    if name == "upper_all":
        (n,) = args
        return {(drop(r, i), drop(r, j)) for r in tables[n + 1] for i in range(n + 2) for j in range(n + 2) if i != j}
    if name == "id":
        (n,) = args
        return {(s, s) for s in tables[n]}
    raise KeyError(spec)


def combinations_of(simplex: tuple[int, ...], m: int) -> set[tuple[int, ...]]:
    """Order-preserving sub-tuples with ``m + 1`` vertices (the ``m``-faces)."""
    return {tuple(simplex[k] for k in idx) for idx in combinations(range(len(simplex)), m + 1)}


# -- invariants --------------------------------------------------------------------------


def _walk(start, step, k):
    frontier = {start}
    for _ in range(k):
        frontier = {y for x in frontier for y in step(x)}
    return frontier


def invariant_oracle(graph: DirectedGraph, acts: np.ndarray, kind: str, k: int = 1, nij=(2, 0, 2)) -> np.ndarray:
    """Carrier-by-bin matrix of one local invariant, from edge sets and tuples only."""
    n, T = acts.shape
    edges = graph.edge_set
    ins = {v: {u for u, w in edges if w == v} for v in range(n)}
    outs = {v: {w for u, w in edges if u == v} for v in range(n)}
    tables = flag_tuples(graph, 2)

    def active(tup, t):
        return all(acts[v, t] for v in tup)

    if kind == "td":
        return np.array([[sum(1 for s in tables[2] if v in s and active(s, t)) for t in range(T)] for v in range(n)], dtype=np.int64).reshape(n, T)
    if kind == "hodir":
        dim, i, j = nij
        simplices = sorted(tables[dim])

        def step(a, b):
            return lambda s: {x for x in tables[dim] if drop(s, a) == drop(x, b)}

        rows = []
        for s in simplices:
            fwd, bwd = _walk(s, step(i, j), k), _walk(s, step(j, i), k)
            rows.append([sum(active(x, t) for x in fwd) - sum(active(x, t) for x in bwd) for t in range(T)])
        return np.array(rows, dtype=np.int64).reshape(len(simplices), T)
    steps = {
        "indeg": lambda v: ins[v],
        "outdeg": lambda v: outs[v],
        "size": lambda v: ins[v] | outs[v],
        "rc": lambda v: ins[v] & outs[v],
    }
    if kind == "dir":
        return invariant_oracle(graph, acts, "indeg", k) - invariant_oracle(graph, acts, "outdeg", k)
    rows = []
    for v in range(n):
        reach = _walk(v, steps[kind], k)
        rows.append([sum(acts[x, t] for x in reach) for t in range(T)])
    return np.array(rows, dtype=np.int64).reshape(n, T)


def euler_oracle(graph: DirectedGraph, acts: np.ndarray, max_dim: int = 2) -> np.ndarray:
    """Per bin, Euler characteristic of the flag complex of the active induced subgraph."""
    out = []
    for t in range(acts.shape[1]):
        keep = [v for v in range(graph.num_vertices) if acts[v, t]]
        sub = DirectedGraph(graph.num_vertices, [(u, v) for u, v in graph.edges.tolist() if u in keep and v in keep])
        tables = flag_tuples(sub, max_dim)
        tables[0] = {(v,) for v in keep}
        out.append(sum((-1) ** n * len(tab) for n, tab in enumerate(tables)))
    return np.array(out, dtype=np.int64)
