"""Face-map relation algebra over the simplices of a semi-simplicial set.

A :class:`Relation` is a sorted, duplicate-free array of ``(sigma, tau)``
pairs of *global* simplex ids, tied to its host by the host's per-dimension
size tuple. Every derived relation in :func:`derive` is assembled from the
face-map generators with union, intersection, composition and converse only.

Conventions
-----------
* ``generator(n, i)`` relates the face to the simplex:
  ``{(d_i(sigma), sigma) : sigma in S_n}``.
* ``compose(R, Q) = {(a, c) : (a, b) in R and (b, c) in Q}`` (left to right).
* ``boundary(n)`` relates an ``n``-simplex to its facets, ``coboundary(n)``
  relates an ``n``-simplex to the ``(n+1)``-simplices having it as a facet.
"""

from __future__ import annotations

import re
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from ssx.complex import SemiSimplicialSet, SimplexId
from ssx.errors import ValidationError

__all__ = [
    "Relation",
    "SparseAdjacency",
    "TernaryRelation",
    "compose",
    "converse",
    "derive",
    "dumps_relation",
    "generator",
    "intersect",
    "join",
    "k_hop",
    "loads_relation",
    "lower_ternary",
    "parse_spec",
    "relation_dims",
    "relation_family",
    "to_adjacency",
    "union",
]


def _canonical(pairs: np.ndarray, total: int) -> np.ndarray:
    if not len(pairs):
        return np.zeros((0, pairs.shape[1] if pairs.ndim == 2 else 2), dtype=np.int64)
    if pairs.shape[1] == 2:
        key = np.unique(pairs[:, 0] * max(total, 1) + pairs[:, 1])
        return np.stack([key // max(total, 1), key % max(total, 1)], axis=1)
    return np.unique(pairs, axis=0)


class Relation:
    """Binary relation on the simplices of one host structure."""

    __slots__ = ("host", "pairs", "_dims")

    def __init__(self, host: Sequence[int], pairs=(), *, dims: tuple[int | None, int | None] = (None, None), canonical: bool = False):
        self.host = tuple(int(s) for s in host)
        total = sum(self.host)
        p = np.asarray(pairs, dtype=np.int64)
        if p.size == 0:
            p = np.zeros((0, 2), dtype=np.int64)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValidationError("relation pairs must have shape (m, 2)")
        if len(p) and (p.min() < 0 or p.max() >= total):
            raise ValidationError("relation refers to a simplex outside its host")
        if not canonical:
            p = _canonical(p, total)
        p.flags.writeable = False
        self.pairs = p
        self._dims = dims

    # -- construction helpers --------------------------------------------
    @classmethod
    def empty(cls, host: Sequence[int]) -> Relation:
        return cls(host)

    @classmethod
    def identity(cls, host: Sequence[int], dim: int | None = None) -> Relation:
        offsets = np.concatenate([[0], np.cumsum(host)])
        ids = np.arange(offsets[-1]) if dim is None else np.arange(offsets[dim], offsets[dim + 1])
        return cls(host, np.stack([ids, ids], axis=1), dims=(dim, dim), canonical=True)

    @classmethod
    def universal(cls, host: Sequence[int]) -> Relation:
        total = int(sum(host))
        a, b = np.meshgrid(np.arange(total), np.arange(total), indexing="ij")
        return cls(host, np.stack([a.ravel(), b.ravel()], axis=1), canonical=True)

    # -- basic protocol ---------------------------------------------------
    def __len__(self) -> int:
        return len(self.pairs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.host == other.host and np.array_equal(self.pairs, other.pairs)

    def __hash__(self) -> int:
        return hash((self.host, self.pairs.tobytes()))

    def __repr__(self) -> str:
        return f"Relation(host={self.host}, pairs={len(self.pairs)})"

    def __iter__(self) -> Iterator[tuple[SimplexId, SimplexId]]:
        sids = self._sid
        for a, b in self.pairs.tolist():
            yield sids(a), sids(b)

    def __contains__(self, pair) -> bool:
        a, b = (self._gid(x) for x in pair)
        i = np.searchsorted(self.pairs[:, 0], a, side="left")
        j = np.searchsorted(self.pairs[:, 0], a, side="right")
        return bool(np.any(self.pairs[i:j, 1] == b))

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.host)]).astype(np.int64)

    def _sid(self, gid: int) -> SimplexId:
        off = self.offsets
        d = int(np.searchsorted(off, gid, side="right") - 1)
        return SimplexId(d, int(gid - off[d]))

    def _gid(self, x) -> int:
        if isinstance(x, tuple):
            return int(self.offsets[x[0]] + x[1])
        return int(x)

    def _dim_of_column(self, col: int) -> int | None:
        if not len(self.pairs):
            return self._dims[col]
        d = np.searchsorted(self.offsets, self.pairs[:, col], side="right") - 1
        return int(d[0]) if np.all(d == d[0]) else None

    @property
    def domain_dim(self) -> int | None:
        """Dimension of every first component; ``None`` for mixed dimensions."""
        return self._dim_of_column(0)

    @property
    def codomain_dim(self) -> int | None:
        return self._dim_of_column(1)

    def image(self, x) -> np.ndarray:
        """Global ids ``tau`` with ``(x, tau)`` in the relation."""
        g = self._gid(x)
        i, j = np.searchsorted(self.pairs[:, 0], [g, g + 1])
        return self.pairs[i:j, 1]

    def out_counts(self) -> np.ndarray:
        """``|R(sigma)|`` for every simplex, indexed by global id."""
        return np.bincount(self.pairs[:, 0], minlength=sum(self.host))

    def sid_pairs(self) -> list[tuple[SimplexId, SimplexId]]:
        return list(self)

    # -- algebra ------------------------------------------------------------
    def __or__(self, other: Relation) -> Relation:
        return union(self, other)

    def __and__(self, other: Relation) -> Relation:
        return intersect(self, other)

    def __matmul__(self, other: Relation) -> Relation:
        return compose(self, other)

    @property
    def T(self) -> Relation:
        return converse(self)


@dataclass(frozen=True)
class TernaryRelation:
    host: tuple[int, ...]
    triples: np.ndarray

    def __len__(self) -> int:
        return len(self.triples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TernaryRelation):
            return NotImplemented
        return self.host == other.host and np.array_equal(self.triples, other.triples)

    def sid_triples(self) -> list[tuple[SimplexId, ...]]:
        off = np.concatenate([[0], np.cumsum(self.host)])
        out = []
        for row in self.triples.tolist():
            ids = []
            for g in row:
                d = int(np.searchsorted(off, g, side="right") - 1)
                ids.append(SimplexId(d, int(g - off[d])))
            out.append(tuple(ids))
        return out


def _same_host(*rels: Relation) -> tuple[int, ...]:
    host = rels[0].host
    if any(r.host != host for r in rels[1:]):
        raise ValidationError("relations live on different host structures")
    return host


def union(*rels: Relation) -> Relation:
    if not rels:
        raise ValidationError("union of no relations has no host")
    host = _same_host(*rels)
    dims = rels[0]._dims if all(r._dims == rels[0]._dims for r in rels) else (None, None)
    return Relation(host, np.concatenate([r.pairs for r in rels]), dims=dims)


def intersect(*rels: Relation) -> Relation:
    if not rels:
        raise ValidationError("intersection of no relations has no host")
    host = _same_host(*rels)
    total = max(sum(host), 1)

    def keys(r: Relation) -> np.ndarray:
        return r.pairs[:, 0] * total + r.pairs[:, 1]

    key = reduce(np.intersect1d, [keys(r) for r in rels])
    return Relation(host, np.stack([key // total, key % total], axis=1), dims=rels[0]._dims, canonical=True)


def converse(rel: Relation) -> Relation:
    return Relation(rel.host, rel.pairs[:, ::-1], dims=rel._dims[::-1])


def _merge(left: Relation, right: Relation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sort-merge join on ``left.second == right.first``."""
    a, b = left.pairs, right.pairs
    starts = np.searchsorted(b[:, 0], a[:, 1], side="left")
    ends = np.searchsorted(b[:, 0], a[:, 1], side="right")
    counts = ends - starts
    total = int(counts.sum())
    first = np.repeat(a[:, 0], counts)
    middle = np.repeat(a[:, 1], counts)
    idx = np.repeat(starts - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts) + np.arange(total)
    return first, middle, b[idx, 1] if total else np.zeros(0, np.int64)


def compose(left: Relation, right: Relation) -> Relation:
    host = _same_host(left, right)
    first, _, last = _merge(left, right)
    return Relation(host, np.stack([first, last], axis=1), dims=(left._dims[0], right._dims[1]))


def join(left: Relation, right: Relation) -> TernaryRelation:
    """Natural join on the shared middle element: ``(sigma, kappa, tau)``."""
    host = _same_host(left, right)
    first, middle, last = _merge(left, right)
    triples = np.stack([first, middle, last], axis=1)
    triples = np.unique(triples, axis=0) if len(triples) else np.zeros((0, 3), np.int64)
    return TernaryRelation(host, triples)


def lower_ternary(sset: SemiSimplicialSet, n: int, i: int, j: int) -> TernaryRelation:
    """``{(sigma, tau, kappa) : d_i(sigma) = kappa = d_j(tau)}``, the lower adjacency with its shared face."""
    joined = join(converse(generator(sset, n, i)), generator(sset, n, j))
    return TernaryRelation(joined.host, np.unique(joined.triples[:, [0, 2, 1]], axis=0).reshape(-1, 3))


def k_hop(rel: Relation, k: int) -> Relation:
    """``k``-fold composition; ``k = 0`` gives the identity on the domain dimension."""
    if k < 0:
        raise ValidationError("k must be non-negative")
    if k == 0:
        return Relation.identity(rel.host, rel.domain_dim)
    out = rel
    for _ in range(k - 1):
        out = compose(out, rel)
    return out


# -- generators and the derived catalogue -------------------------------------


def generator(sset: SemiSimplicialSet, n: int, i: int) -> Relation:
    """``R_{d_i^n} = {(d_i(sigma), sigma) : sigma in S_n}``."""
    if not 1 <= n <= sset.dim or not 0 <= i <= n:
        raise ValidationError(f"no face map d_{i}^{n} on a {sset.dim}-dimensional structure")
    simplices = np.arange(sset.sizes[n]) + sset.offsets[n]
    faces = sset.faces[n][:, i] + sset.offsets[n - 1]
    return Relation(sset.sizes, np.stack([faces, simplices], axis=1), dims=(n - 1, n))


_SPEC = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([-\d\s,]*)\))?\s*$")
_ARITY = {
    "r_in": (0,), "r_out": (0,), "r_sym": (0,), "rc": (0,),
    "lower": (3,), "upper": (3,), "boundary": (1,), "coboundary": (1, 2),
    "lower_all": (1,), "upper_all": (1,), "id": (1,),
}


def parse_spec(spec: str) -> tuple[str, tuple[int, ...]]:
    m = _SPEC.match(spec)
    if not m or m.group(1) not in _ARITY:
        raise ValidationError(f"unknown relation spec {spec!r}")
    name = m.group(1)
    args = tuple(int(x) for x in m.group(2).split(",") if x.strip()) if m.group(2) else ()
    if len(args) not in _ARITY[name]:
        raise ValidationError(f"relation spec {spec!r} has wrong number of arguments")
    return name, args


_WRAP = re.compile(r"^\s*(converse|power)\((.*?)(?:,\s*(\d+))?\)\s*$")


def _unwrap(spec: str) -> tuple[str, str, int] | None:
    m = _WRAP.match(spec)
    if not m:
        return None
    op, inner, k = m.group(1), m.group(2), m.group(3)
    if (op == "power") != (k is not None):
        raise ValidationError(f"malformed relation spec {spec!r}")
    return op, inner, int(k) if k is not None else 0


def relation_dims(spec: str) -> tuple[int, int]:
    """Source and target dimensions of a catalogue relation."""
    wrapped = _unwrap(spec)
    if wrapped:
        op, inner, _ = wrapped
        src, dst = relation_dims(inner)
        if op == "converse":
            return dst, src
        if src != dst:
            raise ValidationError(f"power of {inner!r} needs equal source and target dimensions")
        return src, dst
    name, args = parse_spec(spec)
    if name in ("r_in", "r_out", "r_sym", "rc"):
        return 0, 0
    if name in ("lower", "upper", "lower_all", "upper_all", "id"):
        return args[0], args[0]
    if name == "boundary":
        return args[0], args[0] - 1
    if name == "coboundary":
        return (args[0], args[0] + 1) if len(args) == 1 else (args[0], args[1])
    raise AssertionError(name)


def derive(sset: SemiSimplicialSet, spec: str) -> Relation:
    """Build a catalogue relation from the face-map generators.

    ``spec`` is one of ``r_in``, ``r_out``, ``r_sym``, ``rc``,
    ``lower(n,i,j)``, ``upper(n,i,j)``, ``boundary(n)``, ``coboundary(n)``,
    ``coboundary(m,n)``, ``lower_all(n)``, ``upper_all(n)`` or ``id(n)``,
    optionally wrapped as ``converse(spec)`` or ``power(spec,k)`` (``k``-fold
    composition).
    """
    wrapped = _unwrap(spec)
    if wrapped:
        op, inner, k = wrapped
        rel = derive(sset, inner)
        return converse(rel) if op == "converse" else k_hop(rel, k)
    name, args = parse_spec(spec)
    top = sset.dim

    def need(ok: bool) -> None:
        if not ok:
            raise ValidationError(f"{spec} is out of range for a {top}-dimensional structure")

    g = lambda n, i: generator(sset, n, i)  # noqa: E731
    if name in ("r_in", "r_out", "r_sym", "rc"):
        need(top >= 1)
        r_in = compose(g(1, 0), converse(g(1, 1)))
        r_out = compose(g(1, 1), converse(g(1, 0)))
        return {"r_in": r_in, "r_out": r_out, "r_sym": union(r_in, r_out), "rc": intersect(r_in, r_out)}[name]
    if name == "lower":
        n, i, j = args
        need(1 <= n <= top and 0 <= i <= n and 0 <= j <= n)
        return compose(converse(g(n, i)), g(n, j))
    if name == "upper":
        n, i, j = args
        need(0 <= n < top and 0 <= i <= n + 1 and 0 <= j <= n + 1)
        return compose(g(n + 1, i), converse(g(n + 1, j)))
    if name == "boundary":
        (n,) = args
        need(1 <= n <= top)
        return union(*(converse(g(n, i)) for i in range(n + 1)))
    if name == "coboundary":
        if len(args) == 1:
            (n,) = args
            need(0 <= n < top)
            return union(*(g(n + 1, i) for i in range(n + 2)))
        m, n = args
        need(0 <= m < n <= top)
        return reduce(compose, (derive(sset, f"coboundary({d})") for d in range(m, n)))
    if name == "lower_all":
        (n,) = args
        need(1 <= n <= top)
        return union(*(derive(sset, f"lower({n},{i},{j})") for i in range(n + 1) for j in range(n + 1)))
    if name == "upper_all":
        (n,) = args
        need(0 <= n < top)
        return union(*(derive(sset, f"upper({n},{i},{j})") for i in range(n + 2) for j in range(n + 2) if i != j))
    if name == "id":
        (n,) = args
        need(0 <= n <= top)
        return Relation.identity(sset.sizes, n)
    raise AssertionError(name)


def family_specs(top_dim: int, family: str) -> list[str]:
    """Ordered relation names of the undirected (``U``) or directed (``D``) family."""
    if family not in ("U", "D"):
        raise ValidationError("family must be 'U' or 'D'")
    if top_dim < 1:
        return []
    specs = []
    for n in range(top_dim + 1):
        if n >= 1:
            specs.append(f"boundary({n})")
        if n < top_dim:
            specs.append(f"coboundary({n})")
        if family == "U":
            if n >= 1:
                specs.append(f"lower_all({n})")
            if n < top_dim:
                specs.append(f"upper_all({n})")
        else:
            if n >= 1:
                specs.extend(f"lower({n},{i},{j})" for i in range(n + 1) for j in range(n + 1))
            if n < top_dim:
                specs.extend(f"upper({n},{i},{j})" for i in range(n + 2) for j in range(n + 2) if i != j)
    return specs


def relation_family(sset: SemiSimplicialSet, family: str, *, top_dim: int | None = None) -> list[tuple[str, Relation]]:
    """Named relations of family ``U`` or ``D`` up to the highest non-empty dimension."""
    top = sset.top_dim if top_dim is None else top_dim
    return [(s, derive(sset, s)) for s in family_specs(top, family)]


# -- matrices and text dumps ----------------------------------------------------


@dataclass(frozen=True)
class SparseAdjacency:
    """Coordinate-list 0/1 matrix of a relation under a given indexing."""

    rows: int
    cols: int
    row_idx: np.ndarray
    col_idx: np.ndarray

    def to_csr(self) -> sp.csr_matrix:
        data = np.ones(len(self.row_idx), dtype=np.float64)
        return sp.csr_matrix((data, (self.row_idx, self.col_idx)), shape=(self.rows, self.cols))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.int64)
        out[self.row_idx, self.col_idx] = 1
        return out

    @property
    def T(self) -> SparseAdjacency:
        return SparseAdjacency(self.cols, self.rows, self.col_idx, self.row_idx)


def to_adjacency(rel: Relation, indexing: str = "global") -> SparseAdjacency:
    """``A[i, j] = 1`` iff ``(sigma_i, sigma_j)`` is in the relation.

    ``indexing="global"`` uses global ids on both axes; ``"dim"`` uses the
    per-dimension tables of the (single) domain and codomain dimensions.
    """
    if indexing == "global":
        total = sum(rel.host)
        return SparseAdjacency(total, total, rel.pairs[:, 0].copy(), rel.pairs[:, 1].copy())
    if indexing != "dim":
        raise ValidationError("indexing must be 'global' or 'dim'")
    src, dst = rel.domain_dim, rel.codomain_dim
    if src is None or dst is None:
        raise ValidationError("per-dimension indexing needs a relation with a single domain and codomain dimension")
    off = rel.offsets
    return SparseAdjacency(rel.host[src], rel.host[dst], rel.pairs[:, 0] - off[src], rel.pairs[:, 1] - off[dst])


def dumps_relation(rel: Relation) -> str:
    return "".join(f"{a.dim}:{a.index} {b.dim}:{b.index}\n" for a, b in rel)


def loads_relation(text: str, host: Sequence[int]) -> Relation:
    off = np.concatenate([[0], np.cumsum(host)])
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            ids = [tuple(int(x) for x in tok.split(":")) for tok in line.split()]
            if len(ids) != 2 or any(len(t) != 2 or not 0 <= t[1] < host[t[0]] for t in ids):
                raise ValueError
        except (ValueError, IndexError):
            raise ValidationError(f"line {lineno}: expected 'dim:idx dim:idx'") from None
        pairs.append([off[d] + i for d, i in ids])
    return Relation(host, pairs)
