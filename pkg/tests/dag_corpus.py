from __future__ import annotations

import random
from collections import deque

from arcula import dynamics
from arcula.exceptions import NoPath
from arcula.hierarchy import AccessHierarchy, validate
from arcula.timebound import Interval, derive_period_key, timed_wallet_set
from arcula.wallet import WalletState, build_state

CORPUS_SEED = 20190417


def random_dag(
    rng: random.Random, *, max_nodes: int = 50, max_edges: int = 120
) -> tuple[list[int], list[tuple[int, int]]]:
    """Random DAG on dense ids; edges follow a shuffled rank so ids are not sorted."""
    n = rng.randint(1, max_nodes)
    rank = list(range(n))
    rng.shuffle(rank)
    pairs = [(rank[a], rank[b]) for a in range(n) for b in range(a + 1, n)]
    m = rng.randint(0, min(max_edges, len(pairs)))
    return list(range(n)), rng.sample(pairs, m)


def corpus(
    count: int, *, seed: int = CORPUS_SEED, max_nodes: int = 50, max_edges: int = 120
) -> list[AccessHierarchy]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        nodes, edges = random_dag(rng, max_nodes=max_nodes, max_edges=max_edges)
        out.append(validate(nodes, edges))
    return out


def bfs_reachable(h: AccessHierarchy, start: int) -> set[int]:
    """Nodes reachable from ``start`` (itself included), from the raw edge list."""
    adjacency: dict[int, list[int]] = {n: [] for n in h.nodes}
    for i, j in h.edges:
        adjacency[i].append(j)
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt in adjacency[cur]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def reachable_pairs(h: AccessHierarchy) -> list[tuple[int, int]]:
    return [(i, j) for i in h.nodes for j in sorted(bfs_reachable(h, i))]


def random_mutation(
    rng: random.Random, state: WalletState, *, max_nodes: int = 20
) -> tuple[str, WalletState]:
    """Apply one randomly chosen legal mutation."""
    h = state.hierarchy
    edges = set(h.edges)
    non_root = [n for n in h.nodes if n != h.root]
    actions = ["rekey", "replace_key", "insert_edge", "delete_edge"]
    if len(h.nodes) < max_nodes:
        actions.append("insert_node")
    if non_root:
        actions.append("delete_node")
    while True:
        action = rng.choice(actions)
        if action == "rekey":
            return action, dynamics.rekey(state, rng.choice(h.nodes))
        if action == "replace_key":
            return action, dynamics.replace_key(state, rng.choice(h.nodes))
        if action == "insert_node":
            return action, dynamics.insert_node(state, max(h.nodes) + 1, rng.choice(h.nodes))
        if action == "delete_node":
            return action, dynamics.delete_node(state, rng.choice(non_root))
        if action == "delete_edge" and edges:
            i, j = rng.choice(sorted(edges))
            return action, dynamics.delete_edge(state, i, j)
        if action == "insert_edge":
            candidates = [
                (i, j)
                for i in h.nodes
                for j in h.nodes
                if i != j and (i, j) not in edges and i not in h.descendant_sets[j]
            ]
            if candidates:
                i, j = rng.choice(candidates)
                return action, dynamics.insert_edge(state, i, j)


def rebuilt(state: WalletState) -> WalletState:
    """The same hierarchy run through Set from scratch."""
    return build_state(
        state.hierarchy,
        state.seed,
        expiries=state.expiries,
        tokens_on_all_edges=state.tokens_on_all_edges,
    )


def random_assignments(rng: random.Random, h: AccessHierarchy, n: int) -> dict[int, Interval]:
    out = {}
    for node in h.nodes:
        start = rng.randint(1, n)
        out[node] = Interval(start=start, end=rng.randint(start, n))
    return out


def timed_soundness_mismatches(
    h: AccessHierarchy, assignments: dict[int, Interval], n: int, seed: bytes
) -> list[tuple[int, int, int]]:
    """``(user, target, period)`` triples where derivation disagrees with reachability.

    A period key counts as derivable when the target's single-period node is
    reachable from the user's entry node in the expanded graph.
    """
    wallet = timed_wallet_set(h, assignments, n, seed)
    pp, timed = wallet.public_params(), wallet.timed
    mismatches = []
    for user in h.nodes:
        reachable = bfs_reachable(timed.hierarchy, timed.entry(user))
        for target in h.nodes:
            for t in range(1, n + 1):
                leaf = timed.leaf(target, t)
                expected = leaf is not None and leaf in reachable
                try:
                    sk = derive_period_key(pp, timed, wallet.entry_key(user), user, target, t)
                except NoPath:
                    derived = False
                else:
                    derived = sk.public_point == wallet.state.public_keys[leaf]
                if derived != expected:
                    mismatches.append((user, target, t))
    return mismatches
