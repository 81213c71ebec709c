"""Access hierarchies: validated DAGs with a root, versions and a parent tree.

An :class:`AccessHierarchy` is an immutable value. Validation rejects cycles and
dangling edges, optionally adds an explicit root above several minimal nodes, and
fixes the parent of every non-root node as the node that discovers it in a
depth-first search from the root visiting out-neighbours in ascending id order.
"""

from __future__ import annotations

import heapq
import json
import logging
from collections import deque
from collections.abc import Iterable, Mapping
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from .exceptions import (
    CycleDetected,
    DanglingEdge,
    DuplicateEdge,
    DuplicateNode,
    EmptyHierarchy,
    HierarchyError,
    InvalidLabel,
    MultipleComponents,
    UnknownNode,
)

logger = logging.getLogger(__name__)

Edge = tuple[int, int]

_U32 = 2**32


class Label(BaseModel):
    """Public node label: ``index`` alone (4 octets) or ``index || version`` (8 octets)."""

    model_config = ConfigDict(frozen=True)

    node_index: int = Field(ge=0, lt=_U32)
    version: int = Field(default=0, ge=0, lt=_U32)

    def encode(self, compact: bool | None = None) -> bytes:
        """Big-endian encoding; compact by default while the version is 0."""
        if compact is None:
            compact = self.version == 0
        if compact:
            if self.version:
                raise InvalidLabel(
                    f"Label of node {self.node_index} has version {self.version} "
                    "and cannot use the 4-octet form"
                )
            return self.node_index.to_bytes(4, "big")
        return self.node_index.to_bytes(4, "big") + self.version.to_bytes(4, "big")

    @classmethod
    def decode(cls, data: bytes) -> Label:
        if len(data) == 4:
            return cls(node_index=int.from_bytes(data, "big"))
        if len(data) == 8:
            version = int.from_bytes(data[4:], "big")
            if version == 0:
                raise InvalidLabel("8-octet labels carry a version of at least 1")
            return cls(node_index=int.from_bytes(data[:4], "big"), version=version)
        raise InvalidLabel(f"Labels are 4 or 8 octets, got {len(data)}")


class AccessHierarchy(BaseModel):
    """A validated access DAG.

    Attributes:
        nodes: Node ids in ascending order.
        edges: Edges ``(i, j)`` in lexicographic order.
        root: The unique minimal node.
        versions: Version counter of every node.
        parents: Parent-tree assignment of every non-root node.
        reconnected: Nodes whose edge from the root was added because they lost
            their last predecessor.
    """

    model_config = ConfigDict(frozen=True)

    nodes: tuple[int, ...]
    edges: tuple[Edge, ...]
    root: int
    versions: dict[int, int]
    parents: dict[int, int]
    reconnected: tuple[int, ...] = ()

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {node: [] for node in self.nodes}
        for i, j in self.edges:
            out[i].append(j)
        return {node: tuple(sorted(kids)) for node, kids in out.items()}

    @cached_property
    def predecessors(self) -> dict[int, tuple[int, ...]]:
        into: dict[int, list[int]] = {node: [] for node in self.nodes}
        for i, j in self.edges:
            into[j].append(i)
        return {node: tuple(sorted(preds)) for node, preds in into.items()}

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        return _topological_order(self.nodes, self.edges)

    @cached_property
    def descendant_sets(self) -> dict[int, frozenset[int]]:
        desc: dict[int, frozenset[int]] = {}
        for node in reversed(self.topological_order):
            acc: set[int] = set()
            for child in self.children[node]:
                acc.add(child)
                acc |= desc[child]
            desc[node] = frozenset(acc)
        return desc

    @cached_property
    def ancestor_sets(self) -> dict[int, frozenset[int]]:
        anc: dict[int, set[int]] = {node: set() for node in self.nodes}
        for node, below in self.descendant_sets.items():
            for d in below:
                anc[d].add(node)
        return {node: frozenset(up) for node, up in anc.items()}

    @cached_property
    def parent_tree_children(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {node: [] for node in self.nodes}
        for child, parent in self.parents.items():
            out[parent].append(child)
        return {node: tuple(sorted(kids)) for node, kids in out.items()}

    @cached_property
    def non_parent_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if self.parents.get(e[1]) != e[0])

    def require(self, node: int) -> None:
        if node not in self.versions:
            raise UnknownNode(node)

    def label(self, node: int) -> Label:
        self.require(node)
        return Label(node_index=node, version=self.versions[node])

    def label_bytes(self, node: int) -> bytes:
        return self.label(node).encode()

    def subtree(self, node: int) -> list[int]:
        """``node`` and its parent-tree descendants, in topological order."""
        self.require(node)
        members = {node}
        frontier = [node]
        while frontier:
            cur = frontier.pop()
            for kid in self.parent_tree_children[cur]:
                members.add(kid)
                frontier.append(kid)
        return [n for n in self.topological_order if n in members]


def _topological_order(nodes: Iterable[int], edges: Iterable[Edge]) -> tuple[int, ...]:
    """Kahn's algorithm, always releasing the smallest ready id first."""
    sorter: TopologicalSorter[int] = TopologicalSorter()
    for node in nodes:
        sorter.add(node)
    for i, j in edges:
        sorter.add(j, i)
    try:
        sorter.prepare()
    except CycleError as exc:
        raise CycleDetected(list(exc.args[1])) from exc
    ready = list(sorter.get_ready())
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        sorter.done(node)
        for nxt in sorter.get_ready():
            heapq.heappush(ready, nxt)
    return tuple(order)


def _minimal_nodes(nodes: Iterable[int], edges: Iterable[Edge]) -> list[int]:
    targets = {j for _, j in edges}
    return sorted(n for n in nodes if n not in targets)


def canonical_parents(nodes: Iterable[int], edges: Iterable[Edge], root: int) -> dict[int, int]:
    """Parent of each node reached by an ascending-id depth-first search from ``root``."""
    kids: dict[int, list[int]] = {n: [] for n in nodes}
    for i, j in edges:
        kids[i].append(j)
    for n in kids:
        kids[n].sort()
    parents: dict[int, int] = {}
    seen = {root}
    stack = [(root, iter(kids[root]))]
    while stack:
        node, it = stack[-1]
        for child in it:
            if child not in seen:
                seen.add(child)
                parents[child] = node
                stack.append((child, iter(kids[child])))
                break
        else:
            stack.pop()
    return parents


def augment_root(
    nodes: Iterable[int], edges: Iterable[Edge]
) -> tuple[list[int], list[Edge]]:
    """Add an explicit root above several minimal nodes.

    A graph with a single minimal node is returned unchanged, so the operation is
    idempotent. The new root takes the id ``max(nodes) + 1``.
    """
    node_list = sorted(nodes)
    edge_list = sorted(edges)
    minimal = _minimal_nodes(node_list, edge_list)
    if len(minimal) <= 1:
        return node_list, edge_list
    root = node_list[-1] + 1
    logger.debug("adding explicit root %d above %d minimal nodes", root, len(minimal))
    return node_list + [root], sorted(edge_list + [(root, m) for m in minimal])


def validate(
    raw_nodes: Iterable[int],
    raw_edges: Iterable[Iterable[int]],
    *,
    versions: Mapping[int, int] | None = None,
    parents: Mapping[int, int] | None = None,
    reconnected: Iterable[int] = (),
    augment: bool = True,
) -> AccessHierarchy:
    """Check a raw graph and return the corresponding :class:`AccessHierarchy`.

    Args:
        raw_nodes: Node ids.
        raw_edges: Pairs ``(i, j)``.
        versions: Optional per-node versions; missing nodes default to 0.
        parents: Optional explicit parent assignment (used when reloading a
            mutated hierarchy). Every entry must be an in-neighbour.
        reconnected: Nodes carrying a root reconnection edge.
        augment: Add an explicit root when the graph has several minimal nodes.

    Raises:
        EmptyHierarchy, DuplicateNode, DuplicateEdge, DanglingEdge, CycleDetected,
        MultipleComponents, UnknownNode, HierarchyError
    """
    node_list = [int(n) for n in raw_nodes]
    if not node_list:
        raise EmptyHierarchy()
    node_set: set[int] = set()
    for n in node_list:
        if n < 0 or n >= _U32:
            raise HierarchyError(f"Node id {n} is outside 0..2**32-1")
        if n in node_set:
            raise DuplicateNode(n)
        node_set.add(n)

    edge_set: set[Edge] = set()
    for raw in raw_edges:
        i, j = (int(v) for v in raw)
        edge = (i, j)
        if i not in node_set or j not in node_set:
            raise DanglingEdge(edge)
        if i == j:
            raise CycleDetected([i, i])
        if edge in edge_set:
            raise DuplicateEdge(edge)
        edge_set.add(edge)

    _topological_order(node_set, edge_set)

    if augment:
        node_list, edge_list = augment_root(node_set, edge_set)
    else:
        node_list, edge_list = sorted(node_set), sorted(edge_set)
    minimal = _minimal_nodes(node_list, edge_list)
    if len(minimal) > 1:
        raise MultipleComponents(minimal)
    root = minimal[0]

    version_map = {n: 0 for n in node_list}
    for node, version in (versions or {}).items():
        node = int(node)
        if node not in version_map:
            raise UnknownNode(node)
        if version < 0:
            raise HierarchyError(f"Version of node {node} is negative")
        version_map[node] = int(version)

    if parents is None:
        parent_map = canonical_parents(node_list, edge_list, root)
    else:
        parent_map = {int(c): int(p) for c, p in parents.items()}
        edges_lookup = set(edge_list)
        for node in node_list:
            if node == root:
                if node in parent_map:
                    raise HierarchyError(f"Root {root} cannot have a parent")
                continue
            if node not in parent_map:
                raise HierarchyError(f"Node {node} has no parent")
            if (parent_map[node], node) not in edges_lookup:
                raise HierarchyError(
                    f"Parent {parent_map[node]} of node {node} is not an in-neighbour"
                )

    recon = tuple(sorted(int(n) for n in reconnected))
    for node in recon:
        if parent_map.get(node) != root:
            raise HierarchyError(f"Reconnected node {node} is not parented by the root")

    return AccessHierarchy(
        nodes=tuple(node_list),
        edges=tuple(edge_list),
        root=root,
        versions=version_map,
        parents=parent_map,
        reconnected=recon,
    )


def descendants(h: AccessHierarchy, i: int) -> frozenset[int]:
    """Nodes reachable from ``i``, excluding ``i``."""
    h.require(i)
    return h.descendant_sets[i]


def ancestors(h: AccessHierarchy, i: int) -> frozenset[int]:
    """Proper ancestors of ``i``."""
    h.require(i)
    return h.ancestor_sets[i]


def children(h: AccessHierarchy, i: int) -> tuple[int, ...]:
    h.require(i)
    return h.children[i]


def topological_order(h: AccessHierarchy) -> tuple[int, ...]:
    return h.topological_order


def label_of(h: AccessHierarchy, i: int) -> Label:
    return h.label(i)


def _distances_to(h: AccessHierarchy, target: int) -> dict[int, int]:
    dist = {target: 0}
    queue = deque([target])
    while queue:
        cur = queue.popleft()
        for pred in h.predecessors[cur]:
            if pred not in dist:
                dist[pred] = dist[cur] + 1
                queue.append(pred)
    return dist


def derivation_path(h: AccessHierarchy, i: int, j: int) -> list[int] | None:
    """Walk from ``i`` to ``j``, or ``None`` if ``j`` is not reachable.

    Each step takes a parent-edge child that still reaches ``j`` when there is
    one, otherwise any child that does; among the candidates the one closest to
    ``j`` wins and ties go to the smaller id.
    """
    h.require(i)
    h.require(j)
    if i == j:
        return [i]
    dist = _distances_to(h, j)
    if i not in dist:
        return None
    path = [i]
    cur = i
    while cur != j:
        candidates = [c for c in h.children[cur] if c in dist]
        tree_edges = [c for c in candidates if h.parents.get(c) == cur]
        cur = min(tree_edges or candidates, key=lambda c: (dist[c], c))
        path.append(cur)
    return path


# -- JSON document -----------------------------------------------------------


class HierarchyDocument(BaseModel):
    """On-disk form of a hierarchy.

    ``nodes``/``edges``/``versions`` describe a fresh hierarchy; ``root``,
    ``parents`` and ``reconnected`` are present once the hierarchy was mutated.
    """

    nodes: list[int]
    edges: list[tuple[int, int]] = []
    versions: dict[int, int] = {}
    root: int | None = None
    parents: dict[int, int] | None = None
    reconnected: list[int] = []


def load_hierarchy(source: str | Path | Mapping[str, Any]) -> AccessHierarchy:
    """Validate a hierarchy document given as a path or as a parsed mapping."""
    if isinstance(source, Mapping):
        doc = HierarchyDocument.model_validate(source)
    else:
        doc = HierarchyDocument.model_validate_json(Path(source).read_text())
    if doc.parents is None and sorted(doc.nodes) != list(range(len(doc.nodes))):
        raise HierarchyError("Node ids must be dense from 0")
    h = validate(
        doc.nodes,
        doc.edges,
        versions=doc.versions,
        parents=doc.parents,
        reconnected=doc.reconnected,
    )
    if doc.root is not None and doc.root != h.root:
        raise HierarchyError(f"Document root {doc.root} is not the minimal node {h.root}")
    return h


def hierarchy_document(h: AccessHierarchy) -> dict[str, Any]:
    """Inverse of :func:`load_hierarchy`; the full mutated-state form."""
    return {
        "nodes": list(h.nodes),
        "edges": [list(e) for e in h.edges],
        "versions": {str(n): v for n, v in h.versions.items() if v},
        "root": h.root,
        "parents": {str(c): p for c, p in sorted(h.parents.items())},
        "reconnected": list(h.reconnected),
    }


def dump_hierarchy(h: AccessHierarchy, path: str | Path) -> None:
    Path(path).write_text(json.dumps(hierarchy_document(h), indent=2, sort_keys=True) + "\n")
