"""Self-consistency analysis of pairwise relation answers (time, space, kinship)."""

from __future__ import annotations

from .relmodel import (
    Axis,
    AxisGraph,
    Context,
    ContextMode,
    Domain,
    NodeOrdering,
    RelationAssertion,
    RelationLabel,
    Source,
    build_axis_graph,
    make_assertion,
)

__version__ = "0.1.0"

__all__ = [
    "Axis", "AxisGraph", "Context", "ContextMode", "Domain", "NodeOrdering", "RelationAssertion",
    "RelationLabel", "Source", "build_axis_graph", "make_assertion", "__version__",
]
