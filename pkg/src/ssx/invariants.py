"""Time-series invariants of activity complexes.

Every local invariant counts, per time bin, the *active* targets of a k-hop
relation: ``R^{t,k}(sigma) = {tau : (sigma, tau) in R^k, tau active at t}``.
Composition happens first and the activity filter is applied to the second
component afterwards. With the adjacency ``A`` of ``R^k`` and the activation
matrix ``X`` this is simply the row count ``(A X)[sigma, t]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ssx.dac import DynamicActivityComplex
from ssx.errors import ValidationError
from ssx.relations import Relation, derive, k_hop, to_adjacency

__all__ = [
    "KINDS",
    "InvariantSpec",
    "dir_",
    "euler_series",
    "global_invariant",
    "hodir",
    "indeg",
    "invariant_matrix",
    "outdeg",
    "rc",
    "restricted_khop",
    "size",
    "td",
    "topofeat",
]

KINDS = ("size", "ec", "td", "dir", "hodir", "rc", "indeg", "outdeg")
PHI = ("sum", "mean", "sorted-multiset")


@dataclass(frozen=True)
class InvariantSpec:
    kind: str
    k: int = 1
    n: int = 2
    i: int = 0
    j: int = 2

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown invariant kind {self.kind!r}")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.kind == "hodir" and not (self.n >= 1 and 0 <= self.i <= self.n and 0 <= self.j <= self.n and self.i != self.j):
            raise ValidationError("hodir needs n >= 1, 0 <= i, j <= n and i != j")

    @property
    def carrier_dim(self) -> int | None:
        """Dimension of the simplices the invariant is attached to (``None`` for ec)."""
        if self.kind == "ec":
            return None
        return self.n if self.kind == "hodir" else 0

    def label(self) -> str:
        if self.kind == "hodir":
            return f"hodir({self.n},{self.i},{self.j};k={self.k})"
        if self.kind in ("ec", "td"):
            return self.kind
        return f"{self.kind}(k={self.k})"


def restricted_khop(rel: Relation, dac: DynamicActivityComplex, t: int, k: int) -> Relation:
    """``{(sigma, tau) in R^k : tau active at t}`` (``t`` is 1-indexed)."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    active = dac.active_mask(t)
    rk = k_hop(rel, k)
    return Relation(rel.host, rk.pairs[active[rk.pairs[:, 1]]], canonical=True)


def _counts(dac: DynamicActivityComplex, rel: Relation, k: int, dim: int) -> np.ndarray:
    """``|R^{t,k}(sigma)|`` for every ``dim``-simplex and every bin, shape ``(|S_dim|, T)``."""
    a = to_adjacency(k_hop(rel, k)).to_csr()
    counts = np.rint(a @ dac.matrix.astype(np.float64)).astype(np.int64)
    off = dac.complex.offsets
    return counts[off[dim] : off[dim + 1]]


def invariant_matrix(dac: DynamicActivityComplex, spec: InvariantSpec) -> np.ndarray:
    """Local invariant for every carrier simplex, shape ``(carriers, T)``; ec gives ``(1, T)``."""
    cx = dac.complex
    if spec.kind == "ec":
        return euler_series(dac)[None, :]
    if spec.kind == "td":
        if cx.dim < 2:
            return np.zeros((cx.sizes[0], dac.T), dtype=np.int64)
        return _counts(dac, derive(cx, "coboundary(0,2)"), 1, 0)
    if spec.kind == "hodir":
        if spec.n > cx.dim:
            raise ValidationError(f"hodir needs dimension {spec.n}")
        fwd = derive(cx, f"lower({spec.n},{spec.i},{spec.j})")
        bwd = derive(cx, f"lower({spec.n},{spec.j},{spec.i})")
        return _counts(dac, fwd, spec.k, spec.n) - _counts(dac, bwd, spec.k, spec.n)
    if cx.dim < 1:
        return np.zeros((cx.sizes[0], dac.T), dtype=np.int64)
    if spec.kind == "dir":
        return _counts(dac, derive(cx, "r_in"), spec.k, 0) - _counts(dac, derive(cx, "r_out"), spec.k, 0)
    name = {"size": "r_sym", "rc": "rc", "indeg": "r_in", "outdeg": "r_out"}[spec.kind]
    return _counts(dac, derive(cx, name), spec.k, 0)


def _row(dac: DynamicActivityComplex, spec: InvariantSpec, index: int) -> np.ndarray:
    m = invariant_matrix(dac, spec)
    if not 0 <= index < len(m):
        raise ValidationError(f"{spec.kind} carrier index {index} out of range")
    return m[index]


def size(dac: DynamicActivityComplex, u: int, k: int = 1) -> np.ndarray:
    """Active vertices reachable from ``u`` by exactly ``k`` symmetric steps."""
    return _row(dac, InvariantSpec("size", k), u)


def indeg(dac: DynamicActivityComplex, u: int, k: int = 1) -> np.ndarray:
    return _row(dac, InvariantSpec("indeg", k), u)


def outdeg(dac: DynamicActivityComplex, u: int, k: int = 1) -> np.ndarray:
    return _row(dac, InvariantSpec("outdeg", k), u)


def dir_(dac: DynamicActivityComplex, u: int, k: int = 1) -> np.ndarray:
    """``indeg - outdeg`` over active k-hop in/out neighbours."""
    return _row(dac, InvariantSpec("dir", k), u)


def rc(dac: DynamicActivityComplex, u: int, k: int = 1) -> np.ndarray:
    """Active vertices that are both in- and out-neighbours of ``u`` (k-hop)."""
    return _row(dac, InvariantSpec("rc", k), u)


def td(dac: DynamicActivityComplex, v: int) -> np.ndarray:
    """Active 2-simplices having ``v`` as a vertex."""
    return _row(dac, InvariantSpec("td"), v)


def hodir(dac: DynamicActivityComplex, sigma: int, n: int, i: int, j: int, k: int = 1) -> np.ndarray:
    """``deg_{n,i,j} - deg_{n,j,i}`` of the ``n``-simplex with table index ``sigma``."""
    return _row(dac, InvariantSpec("hodir", k, n, i, j), sigma)


def euler_series(dac: DynamicActivityComplex) -> np.ndarray:
    """Alternating sum of active simplex counts per bin."""
    m = dac.matrix.astype(np.int64)
    signs = np.where(dac.complex.dims_of() % 2 == 0, 1, -1)
    return signs @ m if len(m) else np.zeros(dac.T, dtype=np.int64)


def global_invariant(dac: DynamicActivityComplex, spec: InvariantSpec, phi: str = "sum"):
    """Permutation-invariant aggregate of a local invariant over its carriers.

    ``sum`` and ``mean`` give a length-``T`` series (mean of no carriers is 0);
    ``sorted-multiset`` gives the carrier time series sorted lexicographically.
    """
    if phi not in PHI:
        raise ValidationError(f"phi must be one of {PHI}")
    if spec.kind == "ec":
        return euler_series(dac)
    m = invariant_matrix(dac, spec)
    if phi == "sum":
        return m.sum(axis=0)
    if phi == "mean":
        return m.mean(axis=0) if len(m) else np.zeros(dac.T)
    return sorted(tuple(r) for r in m.tolist())


TOPOFEAT_HODIR = ((1, 0, 1), (2, 0, 1), (2, 1, 2), (2, 0, 2))


def topofeat(dac: DynamicActivityComplex, K: int) -> np.ndarray:
    """Two-bin feature vector of length ``2 (6K + 1)``.

    Per bin: ec, then for each ``k = 1..K`` the vertex sums of size and dir,
    then the carrier sums of hodir on edges ``(1,0,1)`` and on triangles
    ``(2,0,1)``, ``(2,1,2)``, ``(2,0,2)``.
    """
    if K < 1:
        raise ValidationError("K must be >= 1")
    if dac.T != 2:
        raise ValidationError("topofeat is defined for exactly two time bins")
    if dac.complex.dim < 2:
        raise ValidationError("topofeat needs a complex with dimension-2 tables")
    blocks = [euler_series(dac)[None, :]]
    for kind in ("size", "dir"):
        blocks.append(np.stack([global_invariant(dac, InvariantSpec(kind, k)) for k in range(1, K + 1)]))
    for n, i, j in TOPOFEAT_HODIR:
        blocks.append(np.stack([global_invariant(dac, InvariantSpec("hodir", k, n, i, j)) for k in range(1, K + 1)]))
    per_bin = np.concatenate(blocks, axis=0)  # (6K + 1, 2)
    return np.concatenate([per_bin[:, 0], per_bin[:, 1]]).astype(np.int64)
