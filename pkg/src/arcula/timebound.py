"""Time-bound key assignment.

Each node ``v`` with a period range ``T_v`` is expanded into a copy of the interval
hierarchy over ``T_v``. A user of ``v`` receives the secret of the entry node
``(v, T_v)`` and can reach the per-period leaves ``(v, [t, t])``. Access edges are
wired leaf to leaf, ``(u, [t, t]) -> (v, [t, t])`` for every ``t`` in both ranges,
so a user only ever reaches a descendant's keys for periods of its own range.
Certificates expire at the end of their node's interval.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from functools import cached_property

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import ArculaConfig
from .exceptions import EmptyAssignment, NoPath
from .hierarchy import AccessHierarchy, Edge, validate
from .wallet import SigningKey, WalletPublicParams, WalletState, build_state, derive_priv

logger = logging.getLogger(__name__)


class Interval(BaseModel):
    """Contiguous, 1-based, inclusive period range."""

    model_config = ConfigDict(frozen=True)

    start: int = Field(ge=1)
    end: int = Field(ge=1)

    @model_validator(mode="after")
    def check_order(self) -> Interval:
        if self.start > self.end:
            raise ValueError(f"interval start {self.start} is after its end {self.end}")
        return self

    def __len__(self) -> int:
        return self.end - self.start + 1

    def __contains__(self, period: int) -> bool:
        return self.start <= period <= self.end

    def periods(self) -> range:
        return range(self.start, self.end + 1)

    def sub_intervals(self) -> list[Interval]:
        """Every contiguous sub-interval, longest first, then by start."""
        out = []
        for width in range(len(self), 0, -1):
            for start in range(self.start, self.end - width + 2):
                out.append(Interval(start=start, end=start + width - 1))
        return out


class TimedNode(BaseModel):
    model_config = ConfigDict(frozen=True)

    base: int
    interval: Interval


def _interval_edges(span: Interval) -> list[tuple[Interval, Interval]]:
    edges = []
    for iv in span.sub_intervals():
        if iv.start < iv.end:
            edges.append((iv, Interval(start=iv.start, end=iv.end - 1)))
            edges.append((iv, Interval(start=iv.start + 1, end=iv.end)))
    return edges


def interval_dag(n: int) -> tuple[list[Interval], list[tuple[Interval, Interval]]]:
    """Minimal interval hierarchy over ``1..n``: ``n(n+1)/2`` nodes, ``n(n-1)`` edges."""
    if n < 1:
        raise ValueError(f"period count must be at least 1, got {n}")
    span = Interval(start=1, end=n)
    return span.sub_intervals(), _interval_edges(span)


class TimedHierarchy(BaseModel):
    """The expanded graph and the mapping between its ids and timed nodes."""

    model_config = ConfigDict(frozen=True)

    hierarchy: AccessHierarchy
    periods: int
    base: AccessHierarchy
    timed_nodes: dict[int, TimedNode]
    assignments: dict[int, Interval]

    @cached_property
    def ids(self) -> dict[tuple[int, int, int], int]:
        return {
            (timed.base, timed.interval.start, timed.interval.end): node
            for node, timed in self.timed_nodes.items()
        }

    def node_id(self, base: int, interval: Interval) -> int:
        return self.ids[(base, interval.start, interval.end)]

    def entry(self, base: int) -> int:
        """Id of ``(base, T_base)``, whose secret is handed to the user of ``base``."""
        return self.node_id(base, self.assignments[base])

    def leaf(self, base: int, period: int) -> int | None:
        if period not in self.assignments[base]:
            return None
        return self.node_id(base, Interval(start=period, end=period))

    def expiries(self) -> dict[int, int]:
        out = {node: timed.interval.end for node, timed in self.timed_nodes.items()}
        if self.hierarchy.root not in out:
            out[self.hierarchy.root] = self.periods
        return out


def _check_assignments(
    h: AccessHierarchy, assignments: Mapping[int, Interval], n: int
) -> dict[int, Interval]:
    checked: dict[int, Interval] = {}
    for node in h.nodes:
        iv = assignments.get(node)
        if iv is None:
            raise EmptyAssignment(node, "no periods assigned")
        if iv.end > n:
            raise EmptyAssignment(node, f"interval [{iv.start}, {iv.end}] exceeds 1..{n}")
        checked[node] = iv
    for node in assignments:
        if node not in checked:
            raise EmptyAssignment(node, "node is not part of the hierarchy")
    return checked


def augment_timed(
    h: AccessHierarchy, assignments: Mapping[int, Interval], n: int
) -> TimedHierarchy:
    """Expand ``h`` into the time-bound graph.

    Timed ids are dense: base nodes ascending, each copy longest interval first.
    An explicit master root is added when more than one entry node is minimal.

    Raises:
        EmptyAssignment: If a node has no interval or one outside ``1..n``.
    """
    if n < 1:
        raise ValueError(f"period count must be at least 1, got {n}")
    checked = _check_assignments(h, assignments, n)

    index: dict[tuple[int, Interval], int] = {}
    timed_nodes: dict[int, TimedNode] = {}
    edges: list[Edge] = []
    for base in h.nodes:
        span = checked[base]
        for iv in span.sub_intervals():
            index[(base, iv)] = len(index)
            timed_nodes[index[(base, iv)]] = TimedNode(base=base, interval=iv)
        for parent, child in _interval_edges(span):
            edges.append((index[(base, parent)], index[(base, child)]))
    for u, v in h.edges:
        for t in checked[u].periods():
            if t in checked[v]:
                leaf = Interval(start=t, end=t)
                edges.append((index[(u, leaf)], index[(v, leaf)]))

    expanded = validate(sorted(timed_nodes), edges)
    logger.debug(
        "time-bound graph: %d timed nodes, %d edges, root %d",
        len(expanded.nodes),
        len(expanded.edges),
        expanded.root,
    )
    return TimedHierarchy(
        hierarchy=expanded,
        periods=n,
        base=h,
        timed_nodes=timed_nodes,
        assignments=checked,
    )


class TimedWallet(BaseModel):
    model_config = ConfigDict(frozen=True)

    timed: TimedHierarchy
    state: WalletState

    def public_params(self) -> WalletPublicParams:
        return self.state.public_params()

    def entry_key(self, base: int) -> bytes:
        """Derivation key handed to the user of ``base``."""
        return self.state.secrets[self.timed.entry(base)].secret


def timed_wallet_set(
    h: AccessHierarchy,
    assignments: Mapping[int, Interval],
    n: int,
    seed: bytes,
    *,
    config: ArculaConfig | None = None,
) -> TimedWallet:
    """Wallet over the time-bound graph with expiring certificates."""
    timed = augment_timed(h, assignments, n)
    state = build_state(timed.hierarchy, seed, expiries=timed.expiries(), config=config)
    logger.info(
        "time-bound wallet created over %d periods (%d keys)", n, len(timed.hierarchy.nodes)
    )
    return TimedWallet(timed=timed, state=state)


def derive_period_key(
    pp: WalletPublicParams,
    timed: TimedHierarchy,
    entry_key: bytes,
    user: int,
    target: int,
    period: int,
    *,
    config: ArculaConfig | None = None,
) -> SigningKey:
    """Signing key of ``target`` for ``period`` from the entry key of ``user``.

    Raises:
        NoPath: If ``period`` is outside ``target``'s range or not reachable.
    """
    source = timed.entry(user)
    leaf = timed.leaf(target, period)
    if leaf is None:
        raise NoPath(user, target)
    return derive_priv(pp, entry_key, source, leaf, config=config)
