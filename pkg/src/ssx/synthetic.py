"""Synthetic directional classification task.

All samples share one undirected skeleton: a set of edge-disjoint
"motif" triangles plus random extra edges. A sample of class ``c`` orients
each motif triangle transitively with probability ``motif_bias[c]`` and
cyclically otherwise; extra edges get a random direction and activations are
independent coin flips. The symmetrised graph, and hence every undirected
statistic, is identical across classes, so the label is carried only by how
triangles are directed.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ssx.complex import DirectedGraph
from ssx.dac import DynamicBinaryDigraph
from ssx.errors import ValidationError
from ssx.rng import make_rng

__all__ = ["LabeledSample", "SyntheticTaskSpec", "generate_skeleton", "generate_synthetic"]


@dataclass(frozen=True)
class SyntheticTaskSpec:
    seed: int
    num_classes: int = 2
    vertices: int = 16
    triangles: int = 6
    density: float = 0.08  # probability of each extra undirected edge
    reciprocity: float = 0.0  # probability that a directed edge also gets its reverse
    T: int = 2
    activity: float = 0.7  # probability that a vertex is active in a bin
    motif_bias: tuple[float, ...] = (0.9, 0.1)
    samples_per_class: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "motif_bias", tuple(float(b) for b in self.motif_bias))
        probs = (self.density, self.reciprocity, self.activity, *self.motif_bias)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValidationError("probabilities must lie in [0, 1]")
        if len(self.motif_bias) != self.num_classes:
            raise ValidationError("need one motif bias per class")
        if self.vertices < 0 or self.triangles < 0 or self.T < 1 or self.samples_per_class < 0:
            raise ValidationError("counts must be non-negative and T >= 1")


@dataclass(frozen=True)
class LabeledSample:
    graph: DynamicBinaryDigraph
    label: int


def generate_skeleton(spec: SyntheticTaskSpec) -> tuple[list[tuple[int, int, int]], list[tuple[int, int]]]:
    """Edge-disjoint motif triangles and extra undirected edges (``u < v``)."""
    rng = make_rng(spec.seed, 0)
    used: set[tuple[int, int]] = set()
    tris: list[tuple[int, int, int]] = []
    attempts = 0
    while len(tris) < spec.triangles:
        attempts += 1
        if spec.vertices < 3 or attempts > 1000 * (spec.triangles + 1):
            raise ValidationError("cannot place the requested number of edge-disjoint triangles")
        tri = tuple(sorted(rng.choice(spec.vertices, size=3, replace=False).tolist()))
        edges = list(combinations(tri, 2))
        if any(e in used for e in edges):
            continue
        used.update(edges)
        tris.append(tri)
    extra = [e for e in combinations(range(spec.vertices), 2) if e not in used and rng.random() < spec.density]
    return tris, extra


def generate_synthetic(spec: SyntheticTaskSpec) -> list[LabeledSample]:
    """``samples_per_class`` samples per class, classes in order; deterministic under ``seed``."""
    tris, extra = generate_skeleton(spec)
    out = []
    index = 0
    for label, bias in enumerate(spec.motif_bias):
        for _ in range(spec.samples_per_class):
            rng = make_rng(spec.seed, 1, index)
            index += 1
            edges: list[tuple[int, int]] = []
            for tri in tris:
                a, b, c = (tri[i] for i in rng.permutation(3))
                if rng.random() < bias:
                    edges += [(a, b), (a, c), (b, c)]
                else:
                    edges += [(a, b), (b, c), (c, a)]
            for u, v in extra:
                edges.append((u, v) if rng.random() < 0.5 else (v, u))
            recip = [(v, u) for u, v in edges if rng.random() < spec.reciprocity]
            acts = (rng.random((spec.vertices, spec.T)) < spec.activity).astype(np.uint8)
            graph = DirectedGraph(spec.vertices, edges + recip)
            out.append(LabeledSample(DynamicBinaryDigraph(graph, acts), label))
    return out
