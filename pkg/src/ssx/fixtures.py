"""Small digraph pairs that separate (or fail to separate) the various tests."""

from __future__ import annotations

from dataclasses import dataclass

from ssx.complex import DirectedGraph

__all__ = ["FixturePair", "circulant", "fixtures"]


@dataclass(frozen=True)
class FixturePair:
    name: str
    a: DirectedGraph
    b: DirectedGraph
    note: str


def circulant(n: int, steps) -> DirectedGraph:
    return DirectedGraph(n, [(v, (v + s) % n) for v in range(n) for s in steps])


def fixtures() -> dict[str, FixturePair]:
    pairs = [
        FixturePair(
            "fig9",
            DirectedGraph(3, [(0, 1), (0, 2), (1, 2)]),
            DirectedGraph(3, [(0, 1), (1, 2), (2, 0)]),
            "transitive triangle vs directed 3-cycle; same undirected triangle, separated by dir",
        ),
        FixturePair(
            "fig11",
            DirectedGraph(3, [(0, 1), (0, 2), (1, 2), (2, 1)]),
            DirectedGraph(3, [(0, 1), (0, 2), (1, 2)]),
            "one reciprocal edge vs none; same undirected graph, separated by rc",
        ),
        FixturePair(
            "fig8",
            circulant(7, (1, 2)),
            circulant(7, (1, 3)),
            "2-in/2-out regular on 7 vertices; 7 vs 0 transitive triangles, invisible to in/out WL",
        ),
        FixturePair(
            "fig6",
            DirectedGraph(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]),
            DirectedGraph(4, [(0, 1), (0, 2), (1, 2), (3, 1), (3, 2)]),
            "two triangles on a shared edge, chained vs fan; same undirected complex",
        ),
    ]
    return {p.name: p for p in pairs}
