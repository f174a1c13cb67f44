"""Dynamic binary digraphs and their lift to activity complexes.

Time bins are 0-indexed in storage (matrix columns) and 1-indexed in every
function argument named ``t``, matching the text of the CLI and docs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ssx.complex import (
    DEFAULT_MAX_DIM,
    DirectedGraph,
    DirectedSimplicialComplex,
    build_flag_complex,
    induced_subgraph,
)
from ssx.errors import ValidationError

__all__ = [
    "DynamicActivityComplex",
    "DynamicBinaryDigraph",
    "active_simplices",
    "check_functional_subcomplex",
    "check_monotone",
    "functional_complex",
    "functional_subgraph",
    "lift_dac",
]


def _binary(matrix, rows: int) -> np.ndarray:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != rows:
        raise ValidationError(f"activation matrix must have shape ({rows}, T)")
    if m.size and not np.isin(m, (0, 1)).all():
        raise ValidationError("activations must be 0 or 1")
    out = m.astype(np.uint8)
    out.flags.writeable = False
    return out


def _check_bin(t: int, T: int) -> int:
    if not 1 <= t <= T:
        raise ValidationError(f"time bin {t} outside 1..{T}")
    return t - 1


@dataclass(frozen=True)
class DynamicBinaryDigraph:
    graph: DirectedGraph
    activations: np.ndarray  # (|V|, T) in {0, 1}

    def __post_init__(self) -> None:
        object.__setattr__(self, "activations", _binary(self.activations, self.graph.num_vertices))

    @property
    def T(self) -> int:
        return self.activations.shape[1]

    def relabel(self, perm) -> DynamicBinaryDigraph:
        """Vertex ``v`` becomes ``perm[v]``; activation rows move with it."""
        perm = np.asarray(perm, dtype=np.int64)
        acts = np.empty_like(self.activations)
        acts[perm] = self.activations
        return DynamicBinaryDigraph(self.graph.relabel(perm), acts)


@dataclass(frozen=True, eq=False)
class DynamicActivityComplex:
    """Flag complex with one packed activation bit-row per simplex.

    Rows follow the global simplex indexing of ``complex`` (dimension-major,
    then table order).
    """

    complex: DirectedSimplicialComplex
    packed: np.ndarray  # (|S|, ceil(T/8)) uint8, big-endian bit order
    T: int
    source: DynamicBinaryDigraph | None = field(default=None, repr=False)

    @classmethod
    def from_matrix(cls, complex_: DirectedSimplicialComplex, matrix, source=None) -> DynamicActivityComplex:
        m = _binary(matrix, complex_.num_simplices)
        return cls(complex_, np.packbits(m, axis=1), m.shape[1], source)

    @property
    def matrix(self) -> np.ndarray:
        """Unpacked ``(|S|, T)`` 0/1 matrix."""
        return np.unpackbits(self.packed, axis=1, count=self.T)

    def dim_matrix(self, n: int) -> np.ndarray:
        off = self.complex.offsets
        return self.matrix[off[n] : off[n + 1]]

    def active_mask(self, t: int) -> np.ndarray:
        """Boolean mask over global ids of simplices active at (1-indexed) ``t``."""
        col = _check_bin(t, self.T)
        byte, bit = divmod(col, 8)
        return (self.packed[:, byte] >> (7 - bit)) & 1 == 1

    def with_matrix(self, matrix) -> DynamicActivityComplex:
        """Same complex, replaced activations (no monotonicity check)."""
        return DynamicActivityComplex.from_matrix(self.complex, matrix, self.source)


def lift_dac(g: DynamicBinaryDigraph, max_dim: int = DEFAULT_MAX_DIM) -> DynamicActivityComplex:
    """A simplex is active at ``t`` iff all of its vertices are (elementwise min)."""
    complex_ = build_flag_complex(g.graph, max_dim)
    vert = np.packbits(g.activations, axis=1)
    blocks = [vert]
    for table in complex_.simplices[1:]:
        if len(table):
            blocks.append(np.bitwise_and.reduce(vert[table], axis=1))
        else:
            blocks.append(np.zeros((0, vert.shape[1]), dtype=np.uint8))
    packed = np.concatenate(blocks, axis=0)
    packed.flags.writeable = False
    return DynamicActivityComplex(complex_, packed, g.T, g)


def functional_subgraph(g: DynamicBinaryDigraph, t: int):
    """Subgraph induced by the vertices active at ``t``; see :func:`induced_subgraph`."""
    col = _check_bin(t, g.T)
    return induced_subgraph(g.graph, np.flatnonzero(g.activations[:, col]))


def functional_complex(g: DynamicBinaryDigraph, t: int, max_dim: int = DEFAULT_MAX_DIM) -> list[set[tuple[int, ...]]]:
    """Vertex tuples (original ids) of the flag complex of the functional subgraph at ``t``."""
    sub = functional_subgraph(g, t)
    flag = build_flag_complex(sub.graph, max_dim)
    back = np.asarray(sub.vertices, dtype=np.int64)
    return [{tuple(back[row].tolist()) for row in table} for table in flag.simplices]


def active_simplices(dac: DynamicActivityComplex, t: int) -> np.ndarray:
    """Sorted global ids of the simplices active at ``t``."""
    return np.flatnonzero(dac.active_mask(t))


def check_monotone(dac: DynamicActivityComplex) -> list[tuple[int, int, int]]:
    """``(global id, face index, 0-indexed bin)`` where a simplex is active but a face is not."""
    bad = []
    m = dac.matrix
    cx = dac.complex
    for n in range(1, cx.dim + 1):
        ids = np.arange(cx.sizes[n]) + cx.offsets[n]
        for i in range(n + 1):
            faces = cx.faces[n][:, i] + cx.offsets[n - 1]
            rows, cols = np.nonzero(m[ids] > m[faces])
            bad.extend((int(ids[r]), i, int(c)) for r, c in zip(rows, cols))
    return sorted(bad)


def check_functional_subcomplex(dac: DynamicActivityComplex, t: int, g: DynamicBinaryDigraph | None = None) -> bool:
    """Does the flag complex of the functional subgraph equal the active part of ``dac``?"""
    g = dac.source if g is None else g
    if g is None:
        raise ValidationError("the source dynamic digraph is required")
    expected = functional_complex(g, t, dac.complex.dim)
    mask = dac.active_mask(t)
    cx = dac.complex
    for n, table in enumerate(cx.simplices):
        rows = table[mask[cx.offsets[n] : cx.offsets[n + 1]]]
        if {tuple(r) for r in rows.tolist()} != expected[n]:
            return False
    return True
