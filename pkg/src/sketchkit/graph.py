"""Geometric constraint multi-hypergraphs.

Primitives and their referenceable sub-parts (endpoints, centers) become
nodes; constraints become edges. Single-member edges are loops, edges with
three or more members are hyperedges, and parallel edges over the same
member set are preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import EmptyGraph
from .model import SELECTORS, Sketch, validate_sketch

CONSTRAINT = "constraint"
SUB_LINK = "sublink"


@dataclass(frozen=True)
class Node:
    id: int
    primitive_index: int
    selector: Optional[str] = None  # None for the primitive node itself


@dataclass(frozen=True)
class Edge:
    id: int
    kind: str  # CONSTRAINT | SUB_LINK
    members: tuple  # node ids, ordered; a single member makes a loop
    constraint_index: Optional[int] = None


@dataclass(frozen=True)
class ConstraintGraph:
    nodes: tuple
    edges: tuple
    incidence: tuple  # node id -> tuple of edge ids
    node_ids: dict = field(compare=False, repr=False)  # (prim index, selector) -> node id

    def node_for(self, primitive_index: int, selector: Optional[str] = None) -> int:
        return self.node_ids[(primitive_index, selector)]

    def parent_primitive(self, node_id: int) -> int:
        return self.nodes[node_id].primitive_index

    def constraint_edges(self) -> list:
        return [e for e in self.edges if e.kind == CONSTRAINT]

    def primitive_count(self) -> int:
        return 1 + max((n.primitive_index for n in self.nodes), default=-1)


def build_graph(sketch: Sketch) -> ConstraintGraph:
    """Build the constraint graph; node ids follow insertion order with each
    primitive's sub-nodes placed immediately after it."""
    validate_sketch(sketch)
    nodes = []
    edges = []
    node_ids = {}
    for i, p in enumerate(sketch.primitives):
        parent = Node(len(nodes), i)
        nodes.append(parent)
        node_ids[(i, None)] = parent.id
        for selector in SELECTORS[p.type]:
            sub = Node(len(nodes), i, selector)
            nodes.append(sub)
            node_ids[(i, selector)] = sub.id
            edges.append(Edge(len(edges), SUB_LINK, (parent.id, sub.id)))
    for ci, c in enumerate(sketch.constraints):
        members = tuple(node_ids[(ref.index, ref.selector)] for ref in c.locals)
        edges.append(Edge(len(edges), CONSTRAINT, members, ci))
    incidence = [[] for _ in nodes]
    for e in edges:
        for m in set(e.members):
            incidence[m].append(e.id)
    return ConstraintGraph(
        tuple(nodes), tuple(edges), tuple(tuple(ids) for ids in incidence), node_ids
    )


def _edge_primitive_set(g: ConstraintGraph, edge: Edge, collapse_subnodes: bool) -> frozenset:
    if collapse_subnodes:
        return frozenset(g.parent_primitive(m) for m in edge.members)
    return frozenset(
        g.parent_primitive(m) for m in edge.members if g.nodes[m].selector is None
    )


def adjacent_primitive_pairs(g: ConstraintGraph, collapse_subnodes: bool = True) -> set:
    """Unordered primitive pairs connected by at least one constraint edge."""
    pairs = set()
    for e in g.constraint_edges():
        prims = sorted(_edge_primitive_set(g, e, collapse_subnodes))
        for i, a in enumerate(prims):
            for b in prims[i + 1 :]:
                pairs.add((a, b))
    return pairs


def order_adjacency_rate(
    g: ConstraintGraph, order: Iterable[int], collapse_subnodes: bool = True
) -> tuple:
    """Fraction of consecutive primitives in `order` sharing a constraint
    edge, and the same fraction over all unordered primitive pairs."""
    order = list(order)
    n = g.primitive_count()
    if n < 2:
        raise EmptyGraph("adjacency rate needs at least two primitives")
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the primitive indices")
    pairs = adjacent_primitive_pairs(g, collapse_subnodes)
    hits = sum(
        1 for a, b in zip(order, order[1:]) if (min(a, b), max(a, b)) in pairs
    )
    return hits / (n - 1), 2 * len(pairs) / (n * (n - 1))


def primitive_degrees(g: ConstraintGraph) -> list:
    """Constraint-edge degree per primitive; sub-nodes count toward their
    parent and sub-primitive links are ignored."""
    degrees = [0] * g.primitive_count()
    for e in g.constraint_edges():
        for prim in _edge_primitive_set(g, e, collapse_subnodes=True):
            degrees[prim] += 1
    return degrees


def degree_by_position(corpus: Iterable[tuple]) -> list:
    """Mean primitive degree at each insertion position across a corpus of
    (graph, primitive order) pairs. Returns (position, mean, count) rows."""
    sums: list = []
    counts: list = []
    for g, order in corpus:
        degrees = primitive_degrees(g)
        for pos, prim in enumerate(order):
            if pos == len(sums):
                sums.append(0.0)
                counts.append(0)
            sums[pos] += degrees[prim]
            counts[pos] += 1
    return [(pos, sums[pos] / counts[pos], counts[pos]) for pos in range(len(sums))]
