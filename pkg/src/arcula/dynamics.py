"""Mutating a live wallet: rekeying, edge and node insertion or deletion.

Every operation takes a :class:`~arcula.wallet.WalletState` and returns a new one
equal, field for field, to ``build_state`` run from scratch on the mutated
hierarchy. Only the parent-tree subtrees of the touched nodes are recomputed.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable

from .config import ArculaConfig
from .dhka import PublicMapping, node_secrets, root_secret, seal_token, tokened_edges
from .exceptions import (
    CannotDeleteRoot,
    DuplicateEdge,
    DuplicateNode,
    HierarchyError,
    UnknownEdge,
    WouldCreateCycle,
)
from .hierarchy import AccessHierarchy, Edge, canonical_parents, validate
from .wallet import WalletState, issue_certificate, node_keypair

logger = logging.getLogger(__name__)


def _rebuild_hierarchy(
    h: AccessHierarchy,
    *,
    nodes: Iterable[int] | None = None,
    edges: Iterable[Edge] | None = None,
    versions: dict[int, int] | None = None,
    parents: dict[int, int] | None = None,
    reconnected: Iterable[int] | None = None,
) -> AccessHierarchy:
    return validate(
        h.nodes if nodes is None else nodes,
        h.edges if edges is None else edges,
        versions=h.versions if versions is None else versions,
        parents=h.parents if parents is None else parents,
        reconnected=h.reconnected if reconnected is None else reconnected,
        augment=False,
    )


def _refresh(
    state: WalletState,
    h: AccessHierarchy,
    dirty: Iterable[int],
    *,
    config: ArculaConfig | None = None,
) -> WalletState:
    """Recompute what depends on ``dirty`` nodes in the new hierarchy ``h``."""
    affected: set[int] = set()
    for node in dirty:
        affected.update(h.subtree(node))
    order = [n for n in h.topological_order if n in affected]

    kept = {n: s for n, s in state.secrets.items() if n in h.versions and n not in affected}
    secrets = node_secrets(
        h,
        root_secret(h, state.seed) if h.root in affected else b"",
        nodes=order,
        known=kept,
    )

    old_tokens = state.pub.edge_tokens
    tokens: dict[Edge, bytes] = {}
    for edge in tokened_edges(h, tokens_on_all_edges=state.tokens_on_all_edges):
        i, j = edge
        if edge in old_tokens and i not in affected and j not in affected:
            tokens[edge] = old_tokens[edge]
        else:
            tokens[edge] = seal_token(h, secrets, edge)

    public_keys = {n: pk for n, pk in state.public_keys.items() if n in kept}
    master = None
    for node in order:
        kp = node_keypair(secrets[node], config=config)
        public_keys[node] = kp.public_point
        if node == h.root:
            master = kp
    if master is None:
        master = node_keypair(secrets[h.root], config=config)

    expiries = {n: e for n, e in state.expiries.items() if n in h.versions}
    resign = h.nodes if h.root in affected else order
    certs = {n: c for n, c in state.certs.items() if n in h.versions}
    for node in resign:
        certs[node] = issue_certificate(
            master, public_keys[node], h.label_bytes(node), expiries.get(node)
        )

    logger.debug(
        "refresh: %d nodes recomputed, %d certificates issued", len(order), len(resign)
    )
    return WalletState(
        hierarchy=h,
        seed=state.seed,
        pub=PublicMapping(labels={n: h.label(n) for n in h.nodes}, edge_tokens=tokens),
        secrets={n: secrets[n] for n in h.nodes},
        public_keys={n: public_keys[n] for n in h.nodes},
        certs={n: certs[n] for n in h.nodes},
        expiries=expiries,
        tokens_on_all_edges=state.tokens_on_all_edges,
    )


def _bumped(h: AccessHierarchy, nodes: Iterable[int]) -> dict[int, int]:
    versions = dict(h.versions)
    for node in nodes:
        versions[node] += 1
    return versions


def rekey(state: WalletState, node: int, *, config: ArculaConfig | None = None) -> WalletState:
    """Bump the version of ``node`` and recompute everything derived from it."""
    h = state.hierarchy
    h.require(node)
    new_h = _rebuild_hierarchy(h, versions=_bumped(h, [node]))
    logger.info("rekeyed node %d to version %d", node, new_h.versions[node])
    return _refresh(state, new_h, [node], config=config)


def replace_key(
    state: WalletState, node: int, *, config: ArculaConfig | None = None
) -> WalletState:
    """Rekey ``node`` and all of its descendants."""
    h = state.hierarchy
    h.require(node)
    touched = [node, *h.descendant_sets[node]]
    new_h = _rebuild_hierarchy(h, versions=_bumped(h, touched))
    logger.info("replaced keys of node %d and %d descendants", node, len(touched) - 1)
    return _refresh(state, new_h, touched, config=config)


def delete_edge(
    state: WalletState, i: int, j: int, *, config: ArculaConfig | None = None
) -> WalletState:
    """Remove edge ``(i, j)`` and rekey ``j`` with its descendants.

    When ``i`` was the parent of ``j`` the parent is re-chosen by the depth-first
    rule among the remaining predecessors; a node left without predecessors is
    reconnected to the root.

    Raises:
        UnknownEdge: If ``(i, j)`` is not an edge.
    """
    h = state.hierarchy
    if (i, j) not in set(h.edges):
        raise UnknownEdge((i, j))
    edges = [e for e in h.edges if e != (i, j)]
    parents = dict(h.parents)
    reconnected = set(h.reconnected) - {j}
    if h.parents[j] == i:
        if any(b == j for _, b in edges):
            parents[j] = canonical_parents(h.nodes, edges, h.root)[j]
        else:
            edges.append((h.root, j))
            parents[j] = h.root
            reconnected.add(j)
            logger.debug("node %d reconnected to root %d", j, h.root)
    staged = _rebuild_hierarchy(h, edges=edges, parents=parents, reconnected=reconnected)
    touched = [j, *staged.descendant_sets[j]]
    new_h = _rebuild_hierarchy(staged, versions=_bumped(staged, touched))
    logger.info("deleted edge (%d, %d); %d nodes rekeyed", i, j, len(touched))
    return _refresh(state, new_h, touched, config=config)


def delete_node(
    state: WalletState, node: int, *, config: ArculaConfig | None = None
) -> WalletState:
    """Delete ``node``: its out-edges as in :func:`delete_edge`, then the node itself.

    Raises:
        CannotDeleteRoot, UnknownNode
    """
    h = state.hierarchy
    h.require(node)
    if node == h.root:
        raise CannotDeleteRoot(node)
    for child in h.children[node]:
        state = delete_edge(state, node, child, config=config)
    h = state.hierarchy
    new_h = _rebuild_hierarchy(
        h,
        nodes=[n for n in h.nodes if n != node],
        edges=[e for e in h.edges if node not in e],
        versions={n: v for n, v in h.versions.items() if n != node},
        parents={c: p for c, p in h.parents.items() if c != node},
        reconnected=[n for n in h.reconnected if n != node],
    )
    logger.info("deleted node %d", node)
    return _refresh(state, new_h, [], config=config)


def insert_edge(
    state: WalletState, i: int, j: int, *, config: ArculaConfig | None = None
) -> WalletState:
    """Add edge ``(i, j)``.

    The edge becomes ``j``'s parent edge only when ``j`` hangs off the root through
    a reconnection edge; that edge is then dropped and ``j`` with its descendants
    is rekeyed. Otherwise the edge just gets a token.

    Raises:
        DuplicateEdge, WouldCreateCycle, UnknownNode
    """
    h = state.hierarchy
    h.require(i)
    h.require(j)
    if (i, j) in set(h.edges):
        raise DuplicateEdge((i, j))
    if i == j or i in h.descendant_sets[j]:
        raise WouldCreateCycle((i, j))
    if j in h.reconnected:
        edges = [e for e in h.edges if e != (h.root, j)] + [(i, j)]
        parents = {**h.parents, j: i}
        staged = _rebuild_hierarchy(
            h,
            edges=edges,
            parents=parents,
            reconnected=[n for n in h.reconnected if n != j],
        )
        touched = [j, *staged.descendant_sets[j]]
        new_h = _rebuild_hierarchy(staged, versions=_bumped(staged, touched))
        logger.info("edge (%d, %d) replaces the root reconnection of %d", i, j, j)
        return _refresh(state, new_h, touched, config=config)
    new_h = _rebuild_hierarchy(h, edges=[*h.edges, (i, j)])
    logger.info("inserted edge (%d, %d)", i, j)
    return _refresh(state, new_h, [], config=config)


def insert_node(
    state: WalletState,
    node: int,
    parent: int,
    extra_edges: Iterable[Edge] = (),
    *,
    config: ArculaConfig | None = None,
) -> WalletState:
    """Add ``node`` below ``parent``, then each of ``extra_edges`` via :func:`insert_edge`.

    Raises:
        DuplicateNode, UnknownNode
    """
    h = state.hierarchy
    if node in h.versions:
        raise DuplicateNode(node)
    if node < 0:
        raise HierarchyError(f"Node id {node} is negative")
    h.require(parent)
    new_h = _rebuild_hierarchy(
        h,
        nodes=[*h.nodes, node],
        edges=[*h.edges, (parent, node)],
        versions={**h.versions, node: 0},
        parents={**h.parents, node: parent},
    )
    logger.info("inserted node %d under %d", node, parent)
    state = _refresh(state, new_h, [node], config=config)
    for i, j in extra_edges:
        state = insert_edge(state, i, j, config=config)
    return state
