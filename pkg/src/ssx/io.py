"""Text formats for edge lists and activation matrices."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ssx.complex import DirectedGraph
from ssx.dac import DynamicBinaryDigraph
from ssx.errors import ValidationError

__all__ = ["dumps_activations", "dumps_edge_list", "parse_activations", "parse_edge_list", "read_text"]


def read_text(source: str | Path) -> str:
    try:
        return Path(source).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {source}: {exc.strerror}") from None


def _tokens(line: str) -> list[str]:
    return line.replace(",", " ").split()


def parse_edge_list(text: str, *, name: str = "<edges>") -> DirectedGraph:
    """``src dst`` per line (whitespace or comma separated), 0-based ids.

    ``#`` starts a comment; ``# vertices <n>`` declares the vertex count so
    isolated vertices can exist. A first data line that is not numeric is
    taken as a header.
    """
    edges = []
    declared = None
    seen_data = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "vertices":
                try:
                    declared = int(parts[1])
                except ValueError:
                    raise ValidationError(f"{name}:{lineno}: bad vertex count {parts[1]!r}") from None
            continue
        if not line:
            continue
        toks = _tokens(line)
        if not seen_data and not all(t.lstrip("-").isdigit() for t in toks):
            seen_data = True
            continue
        seen_data = True
        if len(toks) != 2:
            raise ValidationError(f"{name}:{lineno}: expected 'src dst', got {line!r}")
        try:
            u, v = int(toks[0]), int(toks[1])
        except ValueError:
            bad = next(i for i, t in enumerate(toks) if not t.lstrip("-").isdigit())
            raise ValidationError(f"{name}:{lineno}:{bad + 1}: non-integer vertex id {toks[bad]!r}") from None
        if u < 0 or v < 0:
            raise ValidationError(f"{name}:{lineno}: negative vertex id")
        edges.append((u, v))
    n = max((max(e) for e in edges), default=-1) + 1
    if declared is not None:
        if declared < n:
            raise ValidationError(f"{name}: edge uses vertex {n - 1} but only {declared} vertices declared")
        n = declared
    try:
        return DirectedGraph(n, edges)
    except ValidationError as exc:
        raise ValidationError(f"{name}: {exc}") from None


def parse_activations(text: str, graph: DirectedGraph, *, name: str = "<activations>") -> DynamicBinaryDigraph:
    """Header ``T=<n>`` then one ``vertex_id b1 .. bT`` row per vertex."""
    T = None
    rows: dict[int, list[int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if T is None:
            if not line.startswith("T="):
                raise ValidationError(f"{name}:{lineno}: expected header 'T=<n>'")
            try:
                T = int(line[2:])
            except ValueError:
                raise ValidationError(f"{name}:{lineno}: bad bin count {line[2:]!r}") from None
            if T < 1:
                raise ValidationError(f"{name}:{lineno}: T must be >= 1")
            continue
        toks = _tokens(line)
        if len(toks) != T + 1:
            raise ValidationError(f"{name}:{lineno}: expected vertex id and {T} bits, got {len(toks) - 1} values")
        try:
            v = int(toks[0])
        except ValueError:
            raise ValidationError(f"{name}:{lineno}:1: non-integer vertex id {toks[0]!r}") from None
        if not 0 <= v < graph.num_vertices:
            raise ValidationError(f"{name}:{lineno}:1: dangling vertex id {v}")
        if v in rows:
            raise ValidationError(f"{name}:{lineno}: duplicate row for vertex {v}")
        bits = []
        for col, tok in enumerate(toks[1:], 2):
            if tok not in ("0", "1"):
                raise ValidationError(f"{name}:{lineno}:{col}: activation must be 0 or 1, got {tok!r}")
            bits.append(int(tok))
        rows[v] = bits
    if T is None:
        raise ValidationError(f"{name}: missing header 'T=<n>'")
    missing = [v for v in range(graph.num_vertices) if v not in rows]
    if missing:
        raise ValidationError(f"{name}: no activation row for vertex {missing[0]}")
    acts = np.array([rows[v] for v in range(graph.num_vertices)], dtype=np.uint8).reshape(graph.num_vertices, T)
    return DynamicBinaryDigraph(graph, acts)


def dumps_edge_list(graph: DirectedGraph) -> str:
    lines = [f"# vertices {graph.num_vertices}"]
    lines += [f"{u} {v}" for u, v in graph.edges.tolist()]
    return "\n".join(lines) + "\n"


def dumps_activations(g: DynamicBinaryDigraph) -> str:
    lines = [f"T={g.T}"]
    lines += [" ".join([str(v), *map(str, row)]) for v, row in enumerate(g.activations.tolist())]
    return "\n".join(lines) + "\n"
