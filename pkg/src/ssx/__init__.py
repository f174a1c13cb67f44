"""Directed flag complexes, face-map relations, activity invariants, relational
WL refinement and semi-simplicial networks."""

__version__ = "0.1.0"
