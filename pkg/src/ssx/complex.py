"""Directed graphs, semi-simplicial sets and directed (flag) simplicial complexes.

Simplices are stored per dimension in dense tables. A simplex is addressed
either by a :class:`SimplexId` ``(dim, index)`` or by a *global* integer id,
which concatenates the dimension tables in increasing dimension order.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from itertools import combinations
from typing import NamedTuple

import numpy as np

from ssx.errors import ResourceError, ValidationError

__all__ = [
    "DirectedGraph",
    "DirectedSimplicialComplex",
    "InducedSubgraph",
    "SemiSimplicialSet",
    "SimplexId",
    "UndirectedComplex",
    "brute_force_isomorphic",
    "build_flag_complex",
    "dumps_complex",
    "face",
    "induced_subgraph",
    "loads_complex",
    "symmetrize",
    "transitivize",
    "verify_closure",
    "verify_simplicial_identity",
]

DEFAULT_MAX_DIM = 2
ISO_VERTEX_CAP = 10


class SimplexId(NamedTuple):
    dim: int
    index: int


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.flags.writeable = False
    return a


class DirectedGraph:
    """Simple digraph on vertices ``0..num_vertices-1``.

    Edges are kept as a lexicographically sorted ``(m, 2)`` array. Self-loops
    and duplicate edges are rejected; ``(u, v)`` and ``(v, u)`` may coexist.
    """

    __slots__ = ("num_vertices", "edges", "_out", "_edge_set")

    def __init__(self, num_vertices: int, edges: Iterable[Sequence[int]] | np.ndarray = ()):
        num_vertices = int(num_vertices)
        if num_vertices < 0:
            raise ValidationError("num_vertices must be non-negative")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if e.size == 0:
            e = np.zeros((0, 2), dtype=np.int64)
        if e.ndim != 2 or e.shape[1] != 2:
            raise ValidationError("edges must be pairs (source, target)")
        if len(e) and (e.min() < 0 or e.max() >= num_vertices):
            raise ValidationError("edge endpoint outside 0..num_vertices-1")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValidationError("self-loops are not allowed")
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise ValidationError("duplicate edges are not allowed")
        self.num_vertices = num_vertices
        self.edges = _frozen(e)
        self._out: list[int] | None = None
        self._edge_set: frozenset[tuple[int, int]] | None = None

    def __repr__(self) -> str:
        return f"DirectedGraph(num_vertices={self.num_vertices}, num_edges={len(self.edges)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.num_vertices == other.num_vertices and np.array_equal(self.edges, other.edges)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        if self._edge_set is None:
            self._edge_set = frozenset(map(tuple, self.edges.tolist()))
        return self._edge_set

    def out_masks(self) -> list[int]:
        """Out-neighbourhoods as Python-int bitsets, one per vertex."""
        if self._out is None:
            masks = [0] * self.num_vertices
            for u, v in self.edges.tolist():
                masks[u] |= 1 << v
            self._out = masks
        return self._out

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.edges[:, 1], minlength=self.num_vertices)

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.num_vertices)

    def relabel(self, perm: Sequence[int]) -> DirectedGraph:
        """Return the graph with vertex ``v`` renamed ``perm[v]``."""
        p = np.asarray(perm, dtype=np.int64)
        return DirectedGraph(self.num_vertices, p[self.edges] if len(self.edges) else ())


class SemiSimplicialSet:
    """Per-dimension simplex counts plus total face-map index arrays.

    ``faces[n]`` has shape ``(sizes[n], n + 1)``; entry ``[s, i]`` is the index
    of the ``i``-th face of simplex ``s`` in the dimension ``n - 1`` table.
    Several simplices may share a vertex set, so no vertex data is required.
    """

    def __init__(self, sizes: Sequence[int], faces: Sequence[np.ndarray]):
        sizes = tuple(int(s) for s in sizes)
        if not sizes:
            raise ValidationError("a semi-simplicial set needs at least dimension 0")
        if len(faces) != len(sizes):
            raise ValidationError("need one face table per dimension")
        fixed = []
        for n, (size, f) in enumerate(zip(sizes, faces)):
            f = np.asarray(f, dtype=np.int64).reshape(size, n + 1) if n else np.zeros((size, 0), np.int64)
            if n and f.size and (f.min() < 0 or f.max() >= sizes[n - 1]):
                raise ValidationError(f"face map of dimension {n} is not total on S_{n - 1}")
            fixed.append(_frozen(f))
        self.sizes = sizes
        self.faces = tuple(fixed)
        self.offsets = tuple(int(x) for x in np.concatenate([[0], np.cumsum(sizes)]))

    @property
    def dim(self) -> int:
        """Number of stored dimension tables minus one (tables may be empty)."""
        return len(self.sizes) - 1

    @property
    def top_dim(self) -> int:
        """Highest dimension with at least one simplex (0 for an empty set)."""
        nonempty = [n for n, s in enumerate(self.sizes) if s]
        return nonempty[-1] if nonempty else 0

    @property
    def num_simplices(self) -> int:
        return self.offsets[-1]

    def global_id(self, sid: SimplexId | tuple[int, int]) -> int:
        dim, index = sid
        if not (0 <= dim <= self.dim and 0 <= index < self.sizes[dim]):
            raise ValidationError(f"simplex id {tuple(sid)} out of range")
        return self.offsets[dim] + index

    def simplex_id(self, gid: int) -> SimplexId:
        if not 0 <= gid < self.num_simplices:
            raise ValidationError(f"global id {gid} out of range")
        dim = int(np.searchsorted(self.offsets, gid, side="right") - 1)
        return SimplexId(dim, gid - self.offsets[dim])

    def dims_of(self) -> np.ndarray:
        """Dimension of every simplex, indexed by global id."""
        return np.repeat(np.arange(len(self.sizes)), self.sizes)

    def face(self, sid: SimplexId | tuple[int, int], i: int) -> SimplexId:
        dim, index = sid
        if dim < 1 or dim > self.dim:
            raise ValidationError("face maps are defined for dimensions >= 1 only")
        if not 0 <= i <= dim:
            raise ValidationError(f"face index {i} out of range for a {dim}-simplex")
        if not 0 <= index < self.sizes[dim]:
            raise ValidationError(f"simplex index {index} out of range")
        return SimplexId(dim - 1, int(self.faces[dim][index, i]))


class DirectedSimplicialComplex(SemiSimplicialSet):
    """Semi-simplicial set whose simplices carry explicit ordered vertex tuples.

    The face maps are derived from the tuples (delete the ``i``-th vertex), so
    every face of every simplex must be present and tuples are unique per
    dimension.
    """

    def __init__(self, num_vertices: int, simplices: Sequence[np.ndarray]):
        tables = []
        for n, t in enumerate(simplices):
            t = np.asarray(t, dtype=np.int64)
            if t.size == 0:
                t = np.zeros((0, n + 1), dtype=np.int64)
            t = t.reshape(-1, n + 1)
            if len(t) and (t.min() < 0 or t.max() >= num_vertices):
                raise ValidationError(f"dimension {n} simplex uses an unknown vertex")
            if n and len(t):
                srt = np.sort(t, axis=1)
                if np.any(srt[:, 1:] == srt[:, :-1]):
                    raise ValidationError(f"dimension {n} simplex repeats a vertex")
            tables.append(t)
        if not tables:
            tables = [np.arange(num_vertices, dtype=np.int64).reshape(-1, 1)]
        if not np.array_equal(tables[0].ravel(), np.arange(num_vertices)):
            raise ValidationError("dimension 0 table must list vertices 0..num_vertices-1 in order")

        lookups = []
        faces = [np.zeros((num_vertices, 0), dtype=np.int64)]
        for n, t in enumerate(tables):
            lookup = {tup: k for k, tup in enumerate(map(tuple, t.tolist()))}
            if len(lookup) != len(t):
                raise ValidationError(f"duplicate vertex tuple in dimension {n}")
            lookups.append(lookup)
            if n == 0:
                continue
            f = np.empty((len(t), n + 1), dtype=np.int64)
            prev = lookups[n - 1]
            for k, tup in enumerate(map(tuple, t.tolist())):
                for i in range(n + 1):
                    key = tup[:i] + tup[i + 1:]
                    idx = prev.get(key)
                    if idx is None:
                        raise ValidationError(f"face {key} of simplex {tup} is missing")
                    f[k, i] = idx
            faces.append(f)
        super().__init__([len(t) for t in tables], faces)
        self.num_vertices = int(num_vertices)
        self.simplices = tuple(_frozen(t) for t in tables)
        self._lookups = lookups

    def __repr__(self) -> str:
        return f"DirectedSimplicialComplex(sizes={self.sizes})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DirectedSimplicialComplex):
            return NotImplemented
        return self.num_vertices == other.num_vertices and len(self.simplices) == len(other.simplices) and all(
            np.array_equal(a, b) for a, b in zip(self.simplices, other.simplices)
        )

    def index_of(self, vertices: Sequence[int]) -> SimplexId:
        tup = tuple(int(v) for v in vertices)
        n = len(tup) - 1
        if n < 0 or n > self.dim or tup not in self._lookups[n]:
            raise ValidationError(f"{tup} is not a simplex")
        return SimplexId(n, self._lookups[n][tup])

    def vertices_of(self, sid: SimplexId | tuple[int, int]) -> tuple[int, ...]:
        dim, index = sid
        return tuple(self.simplices[dim][index].tolist())

    def tuple_sets(self) -> list[set[tuple[int, ...]]]:
        return [set(map(tuple, t.tolist())) for t in self.simplices]

    def one_skeleton(self) -> DirectedGraph:
        return DirectedGraph(self.num_vertices, self.simplices[1] if self.dim >= 1 else ())

    def relabel(self, perm: Sequence[int]) -> DirectedSimplicialComplex:
        """Vertex relabelling ``v -> perm[v]``; tables are re-sorted canonically."""
        p = np.asarray(perm, dtype=np.int64)
        tables = [np.arange(self.num_vertices).reshape(-1, 1)]
        for t in self.simplices[1:]:
            m = p[t]
            tables.append(m[np.lexsort(m.T[::-1])] if len(m) else m)
        return DirectedSimplicialComplex(self.num_vertices, tables)


def build_flag_complex(graph: DirectedGraph, max_dim: int = DEFAULT_MAX_DIM) -> DirectedSimplicialComplex:
    """Directed flag complex: ``n``-simplices are the transitive ``(n+1)``-cliques.

    Enumeration is a depth-first walk over intersected out-neighbourhoods from
    every root vertex; children are visited in increasing vertex order, so each
    dimension table comes out lexicographically sorted.
    """
    if max_dim < 0:
        raise ValidationError("max_dim must be >= 0")
    out = graph.out_masks()
    tables: list[list[tuple[int, ...]]] = [[] for _ in range(max_dim + 1)]

    def extend(prefix: tuple[int, ...], cand: int) -> None:
        tables[len(prefix) - 1].append(prefix)
        if len(prefix) > max_dim:
            return
        rest = cand
        while rest:
            low = rest & -rest
            w = low.bit_length() - 1
            extend(prefix + (w,), cand & out[w])
            rest ^= low

    for v in range(graph.num_vertices):
        extend((v,), out[v])
    arrays = [np.array(t, dtype=np.int64).reshape(-1, n + 1) for n, t in enumerate(tables)]
    return DirectedSimplicialComplex(graph.num_vertices, arrays)


def face(complex_: SemiSimplicialSet, sid: SimplexId | tuple[int, int], i: int) -> SimplexId:
    return complex_.face(sid, i)


def verify_simplicial_identity(sset: SemiSimplicialSet) -> list[tuple[SimplexId, int, int]]:
    """All ``(sigma, i, j)`` with ``i < j`` where ``d_i d_j != d_{j-1} d_i``."""
    bad = []
    for n in range(2, sset.dim + 1):
        f, g = sset.faces[n], sset.faces[n - 1]
        if not len(f):
            continue
        for j in range(1, n + 1):
            for i in range(j):
                lhs = g[f[:, j], i]
                rhs = g[f[:, i], j - 1]
                for s in np.nonzero(lhs != rhs)[0].tolist():
                    bad.append((SimplexId(n, s), i, j))
    return sorted(bad)


def verify_closure(complex_: DirectedSimplicialComplex) -> list[tuple[SimplexId, int]]:
    """All ``(sigma, i)`` whose stored ``i``-th face is not ``sigma`` minus vertex ``i``."""
    bad = []
    for n in range(1, complex_.dim + 1):
        t, f, prev = complex_.simplices[n], complex_.faces[n], complex_.simplices[n - 1]
        for i in range(n + 1):
            expected = np.delete(t, i, axis=1)
            ok = np.all(prev[f[:, i]] == expected, axis=1) if len(t) else np.ones(0, bool)
            for s in np.nonzero(~ok)[0].tolist():
                bad.append((SimplexId(n, s), i))
    return bad


class UndirectedComplex:
    """Abstract simplicial complex: per-dimension sets of sorted vertex tuples."""

    def __init__(self, num_vertices: int, simplices: Iterable[Iterable[int]], *, close: bool = True):
        self.num_vertices = int(num_vertices)
        found: dict[int, set[tuple[int, ...]]] = {0: {(v,) for v in range(self.num_vertices)}}
        for s in simplices:
            key = tuple(sorted(set(int(v) for v in s)))
            if not key:
                continue
            if key[0] < 0 or key[-1] >= self.num_vertices:
                raise ValidationError(f"simplex {key} uses an unknown vertex")
            if close:
                for r in range(1, len(key) + 1):
                    for sub in combinations(key, r):
                        found.setdefault(r - 1, set()).add(sub)
            else:
                found.setdefault(len(key) - 1, set()).add(key)
        top = max(found)
        self.tables = tuple(frozenset(found.get(n, ())) for n in range(top + 1))
        if not close and not self.is_closed():
            raise ValidationError("simplex set is not downward closed")

    def is_closed(self) -> bool:
        for n in range(1, len(self.tables)):
            for s in self.tables[n]:
                if any(s[:i] + s[i + 1:] not in self.tables[n - 1] for i in range(n + 1)):
                    return False
        return True

    @property
    def dim(self) -> int:
        return len(self.tables) - 1

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.tables)

    def skeleton(self, n: int) -> UndirectedComplex:
        return UndirectedComplex(self.num_vertices, [s for t in self.tables[: n + 1] for s in t])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UndirectedComplex):
            return NotImplemented
        return self.num_vertices == other.num_vertices and self.tables == other.tables

    def __repr__(self) -> str:
        return f"UndirectedComplex(sizes={self.sizes})"


def symmetrize(complex_: DirectedSimplicialComplex) -> UndirectedComplex:
    """Forget vertex order; simplices on the same vertex set collapse."""
    return UndirectedComplex(
        complex_.num_vertices,
        [tuple(s) for t in complex_.simplices for s in t.tolist()],
        close=False,
    )


def transitivize(complex_: UndirectedComplex, order: Sequence[int]) -> DirectedSimplicialComplex:
    """Direct every simplex along the total vertex order ``order`` (lowest first)."""
    order = [int(v) for v in order]
    if sorted(order) != list(range(complex_.num_vertices)):
        raise ValidationError("order must be a permutation of all vertices")
    rank = {v: r for r, v in enumerate(order)}
    tables = [np.arange(complex_.num_vertices).reshape(-1, 1)]
    for n in range(1, complex_.dim + 1):
        tups = sorted(tuple(sorted(s, key=rank.__getitem__)) for s in complex_.tables[n])
        tables.append(np.array(tups, dtype=np.int64).reshape(-1, n + 1))
    return DirectedSimplicialComplex(complex_.num_vertices, tables)


class InducedSubgraph(NamedTuple):
    graph: DirectedGraph
    vertices: tuple[int, ...]  # new id -> original id


def induced_subgraph(graph: DirectedGraph, vertices: Iterable[int]) -> InducedSubgraph:
    keep = sorted(set(int(v) for v in vertices))
    if keep and (keep[0] < 0 or keep[-1] >= graph.num_vertices):
        raise ValidationError("unknown vertex in subset")
    new_id = np.full(graph.num_vertices, -1, dtype=np.int64)
    new_id[keep] = np.arange(len(keep))
    e = graph.edges
    mask = (new_id[e[:, 0]] >= 0) & (new_id[e[:, 1]] >= 0) if len(e) else np.zeros(0, bool)
    return InducedSubgraph(DirectedGraph(len(keep), new_id[e[mask]]), tuple(keep))


# -- brute-force isomorphism --------------------------------------------------


class _Shape:
    """Normalised view used by the isomorphism search."""

    def __init__(self, obj: DirectedGraph | DirectedSimplicialComplex | UndirectedComplex):
        if isinstance(obj, DirectedGraph):
            self.n = obj.num_vertices
            self.ordered = True
            self.tables = [set(obj.edge_set)]
        elif isinstance(obj, DirectedSimplicialComplex):
            self.n = obj.num_vertices
            self.ordered = True
            self.tables = obj.tuple_sets()[1:]
        elif isinstance(obj, UndirectedComplex):
            self.n = obj.num_vertices
            self.ordered = False
            self.tables = [set(frozenset(s) for s in t) for t in obj.tables[1:]]
        else:
            raise ValidationError(f"cannot compare objects of type {type(obj).__name__}")
        # drop trailing empty tables so max_dim differences do not matter
        while self.tables and not self.tables[-1]:
            self.tables.pop()
        self.out = [set() for _ in range(self.n)]
        self.inn = [set() for _ in range(self.n)]
        for e in self.tables[0] if self.tables else ():
            u, v = tuple(e)
            self.out[u].add(v)
            self.inn[v].add(u)
            if not self.ordered:
                self.out[v].add(u)
                self.inn[u].add(v)
        tri = [0] * self.n
        if len(self.tables) > 1:
            for s in self.tables[1]:
                for v in s:
                    tri[v] += 1
        self.sig = [(len(self.inn[v]), len(self.out[v]), tri[v]) for v in range(self.n)]

    def image(self, psi: Sequence[int]) -> list[set]:
        if self.ordered:
            return [{tuple(psi[v] for v in s) for s in t} for t in self.tables]
        return [{frozenset(psi[v] for v in s) for s in t} for t in self.tables]


def brute_force_isomorphic(a, b, attrs: tuple[np.ndarray, np.ndarray] | None = None, *, cap: int = ISO_VERTEX_CAP):
    """Exhaustive isomorphism search with vertex-signature pruning.

    ``a`` and ``b`` are digraphs or (un)directed complexes of the same kind.
    With ``attrs = (B_a, B_b)`` the bijection must also carry each vertex's
    attribute row onto its image's row. Returns ``psi`` with ``psi[v]`` the
    image of ``v`` or ``None`` when no isomorphism exists.
    """
    sa, sb = _Shape(a), _Shape(b)
    if max(sa.n, sb.n) > cap:
        raise ResourceError(f"brute-force isomorphism capped at {cap} vertices (got {max(sa.n, sb.n)})")
    if sa.n != sb.n or sa.ordered != sb.ordered or [len(t) for t in sa.tables] != [len(t) for t in sb.tables]:
        return None
    n = sa.n
    ka = [s for s in sa.sig]
    kb = [s for s in sb.sig]
    if attrs is not None:
        ba, bb = (np.asarray(x) for x in attrs)
        ka = [s + (ba[v].tobytes(),) for v, s in enumerate(ka)]
        kb = [s + (bb[v].tobytes(),) for v, s in enumerate(kb)]
    if sorted(ka) != sorted(kb):
        return None
    target = sb.tables
    psi = [-1] * n
    used = [False] * n

    def consistent(v: int, w: int) -> bool:
        for u in range(v):
            pu = psi[u]
            if (u in sa.out[v]) != (pu in sb.out[w]) or (u in sa.inn[v]) != (pu in sb.inn[w]):
                return False
        return True

    def search(v: int) -> bool:
        if v == n:
            return sa.image(psi) == target
        for w in range(n):
            if not used[w] and ka[v] == kb[w] and consistent(v, w):
                psi[v], used[w] = w, True
                if search(v + 1):
                    return True
                psi[v], used[w] = -1, False
        return False

    return tuple(psi) if search(0) else None


# -- text serialisation -------------------------------------------------------

_HEADER = "# ssx-complex v1"


def dumps_complex(complex_: DirectedSimplicialComplex) -> str:
    lines = [_HEADER, f"vertices {complex_.num_vertices}"]
    for n, t in enumerate(complex_.simplices):
        lines.append(f"dim {n} {len(t)}")
        lines.extend(" ".join(map(str, row)) for row in t.tolist())
    return "\n".join(lines) + "\n"


def loads_complex(text: str) -> DirectedSimplicialComplex:
    """Parse :func:`dumps_complex` output; faces are recomputed and validated."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [(k + 1, ln) for k, ln in enumerate(lines) if ln and not (ln.startswith("#") and k > 0)]
    if not lines or lines[0][1] != _HEADER:
        raise ValidationError("line 1: missing '# ssx-complex v1' header")
    it = iter(lines[1:])
    try:
        lineno, ln = next(it)
    except StopIteration:
        raise ValidationError("missing 'vertices <n>' line") from None
    parts = ln.split()
    if len(parts) != 2 or parts[0] != "vertices" or not parts[1].isdigit():
        raise ValidationError(f"line {lineno}: expected 'vertices <n>'")
    nv = int(parts[1])
    tables: list[list[list[int]]] = []
    remaining = 0
    for lineno, ln in it:
        parts = ln.split()
        if remaining == 0:
            if len(parts) != 3 or parts[0] != "dim" or parts[1] != str(len(tables)) or not parts[2].isdigit():
                raise ValidationError(f"line {lineno}: expected 'dim {len(tables)} <count>'")
            remaining = int(parts[2])
            tables.append([])
            continue
        try:
            row = [int(p) for p in parts]
        except ValueError:
            raise ValidationError(f"line {lineno}: non-integer vertex id") from None
        if len(row) != len(tables):
            raise ValidationError(f"line {lineno}: expected {len(tables)} vertices")
        tables[-1].append(row)
        remaining -= 1
    if remaining:
        raise ValidationError("truncated dimension section")
    n_tables = [np.array(t, dtype=np.int64).reshape(-1, n + 1) for n, t in enumerate(tables)]
    try:
        return DirectedSimplicialComplex(nv, n_tables)
    except ValidationError as exc:
        raise ValidationError(f"invalid complex: {exc}") from None
