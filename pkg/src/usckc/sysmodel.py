"""Directed module-level graph of a four-segment space infrastructure.

Nodes are infrastructure modules grouped into components; an arc
(v1, v2) means v1 can initiate communication with v2 (bidirectional
links are stored as two arcs). Link-segment nodes sit on inter-component
data paths so that link-targeting attacks have addressable entry and
objective nodes; they are transparent to pivot counting except as path
endpoints.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from ._jsonio import read_json
from .errors import GraphError, UnknownIdError, UnreachableNodeError


class Segment(str, Enum):
    SPACE = "space"
    GROUND = "ground"
    USER = "user"
    LINK = "link"


@dataclass(frozen=True)
class InfraNode:
    id: str
    segment: Segment
    component: str
    module: str


@dataclass(frozen=True)
class SegmentGraph:
    """Immutable after load; safe for concurrent reads."""

    nodes: dict[str, InfraNode]
    arcs: frozenset[tuple[str, str]]
    _out: dict[str, tuple[str, ...]] = field(default_factory=dict, compare=False, repr=False)

    def neighbors(self, node_id: str) -> tuple[str, ...]:
        return self._out.get(node_id, ())

    def module_nodes(self) -> list[InfraNode]:
        """Nodes that model computing modules, i.e. everything but link nodes."""
        return [n for n in self.nodes.values() if n.segment is not Segment.LINK]


def component_key(node: InfraNode) -> tuple[str, str]:
    return (node.segment.value, node.component)


def graph_from_dict(data: Mapping, *, origin: str = "<graph>") -> SegmentGraph:
    nodes: dict[str, InfraNode] = {}
    triples: set[tuple[str, str, str]] = set()
    for entry in data.get("nodes", []):
        nid = entry.get("id")
        if not nid or not isinstance(nid, str):
            raise GraphError(f"{origin}: node entry {entry!r} has no id")
        if nid in nodes:
            raise GraphError(f"{origin}: duplicate node id {nid!r}")
        try:
            segment = Segment(entry.get("segment", ""))
        except ValueError:
            raise GraphError(
                f"{origin}: node {nid} has unknown segment {entry.get('segment')!r}"
            ) from None
        triple = (entry.get("segment", ""), entry.get("component", ""), entry.get("module", ""))
        if triple in triples:
            raise GraphError(f"{origin}: duplicate (segment, component, module) triple {triple}")
        triples.add(triple)
        nodes[nid] = InfraNode(
            id=nid,
            segment=segment,
            component=entry.get("component", ""),
            module=entry.get("module", ""),
        )

    arcs: set[tuple[str, str]] = set()
    for pair in data.get("arcs", []):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise GraphError(f"{origin}: arc entry {pair!r} is not a [from, to] pair")
        src, dst = pair
        for endpoint in (src, dst):
            if endpoint not in nodes:
                raise GraphError(f"{origin}: arc {pair!r} references unknown node {endpoint!r}")
        arcs.add((src, dst))

    out: dict[str, list[str]] = {}
    for src, dst in sorted(arcs):
        out.setdefault(src, []).append(dst)
    return SegmentGraph(
        nodes=nodes,
        arcs=frozenset(arcs),
        _out={src: tuple(dsts) for src, dsts in out.items()},
    )


def load_graph(path: str | Path) -> SegmentGraph:
    return graph_from_dict(read_json(path, kind="graph"), origin=str(path))


def through_phase_count(graph: SegmentGraph, entry: str, objective: str) -> int:
    """Fewest component-boundary crossings on any path from entry to objective.

    Consecutive nodes in the same component contribute nothing, and link
    nodes along the interior of a path are transparent: a pivot
    module -> link -> module across two components counts once. Ties among
    minimal-crossing paths are broken by hop count, which cannot change
    the returned number.
    """
    for key in (entry, objective):
        if key not in graph.nodes:
            raise UnknownIdError(f"unknown node {key!r}")
    if entry == objective:
        return 0

    start_comp = component_key(graph.nodes[entry])
    # State is (node, component of the most recent counted node); only link
    # nodes can be visited with a carried component differing from their own.
    best: dict[tuple[str, tuple[str, str]], tuple[int, int]] = {}
    heap: list[tuple[int, int, str, tuple[str, str]]] = [(0, 0, entry, start_comp)]
    best[(entry, start_comp)] = (0, 0)
    while heap:
        crossings, hops, node, last = heapq.heappop(heap)
        if best.get((node, last), (crossings, hops)) < (crossings, hops):
            continue
        if node == objective:
            return crossings
        for nxt in graph.neighbors(node):
            ref = graph.nodes[nxt]
            if ref.segment is Segment.LINK and nxt != objective:
                cand = (crossings, hops + 1, nxt, last)
            else:
                comp = component_key(ref)
                cand = (crossings + (comp != last), hops + 1, nxt, comp)
            key = (cand[2], cand[3])
            if key not in best or (cand[0], cand[1]) < best[key]:
                best[key] = (cand[0], cand[1])
                heapq.heappush(heap, cand)
    raise UnreachableNodeError(f"objective {objective!r} is unreachable from {entry!r}")


def crossing_count_along(graph: SegmentGraph, path: Iterable[str]) -> int:
    """Component crossings along an explicit node path, projecting out
    interior link nodes. Used as the reference counting rule."""
    ids = list(path)
    kept = [
        graph.nodes[nid]
        for i, nid in enumerate(ids)
        if graph.nodes[nid].segment is not Segment.LINK or i in (0, len(ids) - 1)
    ]
    return sum(
        1
        for a, b in zip(kept, kept[1:])
        if component_key(a) != component_key(b)
    )
