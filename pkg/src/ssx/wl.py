"""Relational Weisfeiler-Leman colour refinement.

One round maps every element to the signature
``(own colour, (sorted colours of R(sigma)) for R in relations)`` and interns
the sorted set of distinct signatures to dense ids. The relation order is
part of the signature. ``R(sigma) = {tau : (sigma, tau) in R}``.

Colour ids are only comparable inside one run, so structures are compared by
refining their disjoint union jointly.

The family-level runs read an aggregated relation (``boundary``,
``coboundary``, ``lower_all``, ``upper_all``) as the bag sum of its indexed
parts by default: a neighbour reached through two face indices is counted
twice. With ``union="set"`` the plain set union is used instead, under which
the indexed family need not refine the aggregated one.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ssx.complex import DirectedGraph, SemiSimplicialSet, build_flag_complex
from ssx.errors import ValidationError
from ssx.relations import Relation, converse, derive, family_specs, generator, parse_spec

__all__ = [
    "UNIONS",
    "Coloring",
    "ColorHistogram",
    "WLComparison",
    "compare",
    "constant_coloring",
    "dir_wl_compare",
    "feature_coloring",
    "refine",
    "refines",
    "sswl_compare",
    "sswl_coloring",
    "sswl_histogram",
]


@dataclass(frozen=True)
class Coloring:
    colors: np.ndarray  # dense ids 0..C-1, indexed by element id
    rounds: int = 0

    @property
    def num_colors(self) -> int:
        return int(self.colors.max()) + 1 if len(self.colors) else 0

    def histogram(self, elements: slice | np.ndarray | None = None) -> ColorHistogram:
        c = self.colors if elements is None else self.colors[elements]
        return ColorHistogram(tuple(sorted(Counter(c.tolist()).items())))


@dataclass(frozen=True)
class ColorHistogram:
    counts: tuple[tuple[int, int], ...]  # sorted (colour, count)

    @property
    def total(self) -> int:
        return sum(c for _, c in self.counts)


def _dense(values) -> np.ndarray:
    _, inv = np.unique(np.asarray(values), return_inverse=True, axis=0 if np.ndim(values) > 1 else None)
    return inv.reshape(-1).astype(np.int64)


def constant_coloring(n: int) -> Coloring:
    return Coloring(np.zeros(n, dtype=np.int64))


def feature_coloring(rows: np.ndarray) -> Coloring:
    """Intern feature rows (e.g. activation time series) into dense colours."""
    rows = np.asarray(rows)
    if rows.ndim == 1:
        rows = rows[:, None]
    if not len(rows):
        return Coloring(np.zeros(0, dtype=np.int64))
    return Coloring(_dense(rows))


def _pairs(rel) -> np.ndarray:
    if isinstance(rel, Relation):
        return rel.pairs
    if isinstance(rel, tuple) and len(rel) == 2 and isinstance(rel[1], Relation):
        return rel[1].pairs
    return np.asarray(rel, dtype=np.int64).reshape(-1, 2)


def _neighbour_multisets(n: int, pairs: np.ndarray, colors: np.ndarray) -> list[tuple[int, ...]]:
    if not len(pairs):
        return [()] * n
    nb = colors[pairs[:, 1]]
    order = np.lexsort((nb, pairs[:, 0]))
    src, nb = pairs[order, 0], nb[order]
    cuts = np.searchsorted(src, np.arange(n + 1))
    nb_list = nb.tolist()
    return [tuple(nb_list[cuts[v] : cuts[v + 1]]) for v in range(n)]


def refine(structure, relations: Sequence, init: Coloring | np.ndarray | None = None, *, max_rounds: int | None = None) -> Coloring:
    """Refine ``init`` until the number of colour classes stops growing.

    ``structure`` is an element count or a semi-simplicial set (all simplices,
    global ids). ``relations`` is an ordered sequence of :class:`Relation`,
    ``(name, Relation)`` pairs or ``(m, 2)`` id arrays.
    """
    n = structure.num_simplices if isinstance(structure, SemiSimplicialSet) else int(structure)
    colors = constant_coloring(n).colors if init is None else np.asarray(getattr(init, "colors", init), dtype=np.int64)
    if len(colors) != n:
        raise ValidationError("initial colouring does not cover the structure")
    colors = _dense(colors) if n else colors
    pair_list = [_pairs(r) for r in relations]
    if any(len(p) and (p.min() < 0 or p.max() >= n) for p in pair_list):
        raise ValidationError("relation refers to an element outside the structure")
    count = len(np.unique(colors))
    rounds = 0
    limit = n if max_rounds is None else max_rounds
    while pair_list and rounds < limit:
        multisets = [_neighbour_multisets(n, p, colors) for p in pair_list]
        sigs = [(int(colors[v]), *(m[v] for m in multisets)) for v in range(n)]
        table = {s: k for k, s in enumerate(sorted(set(sigs)))}
        new = np.fromiter((table[s] for s in sigs), dtype=np.int64, count=n)
        rounds += 1
        if len(table) == count:
            break
        colors, count = new, len(table)
    return Coloring(colors, rounds)


def refines(a: Coloring, b: Coloring) -> bool:
    """True iff ``a(u) = a(v)`` implies ``b(u) = b(v)``."""
    if len(a.colors) != len(b.colors):
        raise ValidationError("colourings cover different element sets")
    joint = np.unique(np.stack([a.colors, b.colors], axis=1), axis=0)
    return len(joint) == len(np.unique(a.colors))


# -- joint comparison -----------------------------------------------------------


@dataclass(frozen=True)
class WLComparison:
    separated: bool
    rounds: int
    histograms: tuple[ColorHistogram, ...]
    coloring: Coloring


def compare(sizes: Sequence[int], relations: Sequence[Sequence[np.ndarray]], inits: Sequence[np.ndarray] | None = None) -> WLComparison:
    """Jointly refine several structures on their disjoint union.

    ``relations[p]`` is the ordered relation list of structure ``p`` (global
    id pairs); lists are aligned by position.
    """
    if len({len(r) for r in relations}) > 1:
        raise ValidationError("structures must supply the same number of relations")
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    union = []
    for r in range(len(relations[0]) if relations else 0):
        union.append(np.concatenate([np.asarray(rels[r], np.int64).reshape(-1, 2) + starts[p] for p, rels in enumerate(relations)]))
    init = None if inits is None else np.concatenate([np.asarray(c, np.int64) for c in inits])
    col = refine(int(starts[-1]), union, init)
    hists = tuple(col.histogram(slice(starts[p], starts[p + 1])) for p in range(len(sizes)))
    return WLComparison(len(set(hists)) > 1, col.rounds, hists, col)


UNIONS = ("bag", "set")


def _parts(sset: SemiSimplicialSet, spec: str) -> list[Relation]:
    """Indexed components of an aggregated catalogue relation (``[]`` if not aggregated)."""
    name, args = parse_spec(spec)
    if name == "boundary":
        (n,) = args
        return [converse(generator(sset, n, i)) for i in range(n + 1)]
    if name == "coboundary" and len(args) == 1:
        (n,) = args
        return [generator(sset, n + 1, i) for i in range(n + 2)]
    if name == "lower_all":
        (n,) = args
        return [derive(sset, f"lower({n},{i},{j})") for i in range(n + 1) for j in range(n + 1)]
    if name == "upper_all":
        (n,) = args
        return [derive(sset, f"upper({n},{i},{j})") for i in range(n + 2) for j in range(n + 2) if i != j]
    return []


def _family_pairs(sset: SemiSimplicialSet, specs: Sequence[str], union: str = "bag") -> list[np.ndarray]:
    if union not in UNIONS:
        raise ValidationError(f"union must be one of {UNIONS}")
    out = []
    for s in specs:
        try:
            parts = _parts(sset, s) if union == "bag" else []
            out.append(np.concatenate([p.pairs for p in parts]) if parts else derive(sset, s).pairs)
        except ValidationError:
            out.append(np.zeros((0, 2), np.int64))
    return out


def sswl_coloring(sset: SemiSimplicialSet, family: str, init=None, *, union: str = "bag") -> Coloring:
    return refine(sset, _family_pairs(sset, family_specs(sset.top_dim, family), union), init)


def sswl_histogram(sset: SemiSimplicialSet, family: str, init=None, *, union: str = "bag") -> ColorHistogram:
    """Stable-colour histogram; ids are canonical for this structure only."""
    return sswl_coloring(sset, family, init, union=union).histogram()


def sswl_compare(a: SemiSimplicialSet, b: SemiSimplicialSet, family: str, inits=None, *, union: str = "bag") -> WLComparison:
    """Joint ``family``-SSWL on two structures; relations are aligned by name."""
    specs = family_specs(max(a.top_dim, b.top_dim), family)
    return compare([a.num_simplices, b.num_simplices], [_family_pairs(a, specs, union), _family_pairs(b, specs, union)], inits)


def dir_wl_compare(a: DirectedGraph, b: DirectedGraph, inits=None) -> WLComparison:
    """Vertex-level refinement with in- and out-adjacency (directed 1-WL)."""
    rels = []
    for g in (a, b):
        cx = build_flag_complex(g, 1)
        rels.append(_family_pairs(cx, ["r_in", "r_out"]))
    return compare([a.num_vertices, b.num_vertices], rels, inits)
