"""Deterministic hierarchical key assignment.

Every node ``i`` gets a secret ``S_i``, a derivation tag ``t_i`` and a key ``x_i``.
Secrets flow down the parent tree (``S_i = prf(S_parent, 0x03, l_i)``); every other
edge ``(i, j)`` carries a token sealing ``S_j || x_j`` under
``r_ij = prf(t_i, 0x02, l_j)``. A holder of ``S_i`` walks any path to recover the
key of a descendant, deriving along parent edges and opening tokens elsewhere.
"""

from __future__ import annotations

import logging
import struct

from pydantic import BaseModel, ConfigDict, Field

from .crypto_prims import PrfTag, aead_open, aead_seal, prf
from .exceptions import InvalidSeed, MalformedCiphertext, MissingToken, NoPath
from .hierarchy import AccessHierarchy, Edge, Label, derivation_path

logger = logging.getLogger(__name__)

SEED_SIZE = 64
SECRET_SIZE = 32
_UNLINK_DOMAIN = b"unlink"


class NodeSecrets(BaseModel):
    """Secret side of one node."""

    model_config = ConfigDict(frozen=True)

    secret: bytes = Field(min_length=SECRET_SIZE, max_length=SECRET_SIZE, repr=False)
    tag: bytes = Field(min_length=SECRET_SIZE, max_length=SECRET_SIZE, repr=False)
    key: bytes = Field(min_length=SECRET_SIZE, max_length=SECRET_SIZE, repr=False)

    @classmethod
    def from_secret(cls, secret: bytes, label: bytes) -> NodeSecrets:
        return cls(
            secret=secret,
            tag=prf(secret, PrfTag.TAG, label),
            key=prf(secret, PrfTag.KEY, label),
        )


class PublicMapping(BaseModel):
    """Node labels plus the tokens on non-parent edges."""

    model_config = ConfigDict(frozen=True)

    labels: dict[int, Label]
    edge_tokens: dict[Edge, bytes]

    def serialize(self) -> bytes:
        """Canonical encoding: labels by ascending node, then tokens by edge.

        ``u32 count || (u32 node || u8 len || label)*`` followed by
        ``u32 count || (u32 i || u32 j || u16 len || token)*``.
        """
        out = bytearray(struct.pack(">I", len(self.labels)))
        for node in sorted(self.labels):
            encoded = self.labels[node].encode()
            out += struct.pack(">IB", node, len(encoded)) + encoded
        out += struct.pack(">I", len(self.edge_tokens))
        for i, j in sorted(self.edge_tokens):
            token = self.edge_tokens[(i, j)]
            out += struct.pack(">IIH", i, j, len(token)) + token
        return bytes(out)


def _check_seed(seed: bytes) -> None:
    if len(seed) != SEED_SIZE:
        raise InvalidSeed(len(seed))


def seal_token(
    h: AccessHierarchy, secrets: dict[int, NodeSecrets], edge: Edge
) -> bytes:
    """Token on ``edge``: ``S_j || x_j`` sealed under ``prf(t_i, 0x02, l_j)``."""
    i, j = edge
    r_ij = prf(secrets[i].tag, PrfTag.EDGE, h.label_bytes(j))
    return aead_seal(r_ij, secrets[j].secret + secrets[j].key)


def node_secrets(
    h: AccessHierarchy,
    root_secret: bytes,
    nodes: list[int] | None = None,
    known: dict[int, NodeSecrets] | None = None,
) -> dict[int, NodeSecrets]:
    """Secrets of ``nodes`` (default: all) along the parent tree.

    ``known`` supplies already-computed secrets for parents outside ``nodes``.
    """
    out = dict(known or {})
    todo = h.topological_order if nodes is None else nodes
    for node in todo:
        label = h.label_bytes(node)
        if node == h.root:
            secret = root_secret
        else:
            secret = prf(out[h.parents[node]].secret, PrfTag.SECRET, label)
        out[node] = NodeSecrets.from_secret(secret, label)
    return out


def tokened_edges(h: AccessHierarchy, *, tokens_on_all_edges: bool = False) -> tuple[Edge, ...]:
    return h.edges if tokens_on_all_edges else h.non_parent_edges


def root_secret(h: AccessHierarchy, root_key: bytes) -> bytes:
    """``S_root = prf(root_key, 0x03, l_root)``; ``root_key`` is normally the seed."""
    return prf(root_key, PrfTag.SECRET, h.label_bytes(h.root))


def _assign(
    h: AccessHierarchy, root_key: bytes, *, tokens_on_all_edges: bool = False
) -> tuple[PublicMapping, dict[int, NodeSecrets]]:
    secrets = node_secrets(h, root_secret(h, root_key))
    tokens = {
        edge: seal_token(h, secrets, edge)
        for edge in tokened_edges(h, tokens_on_all_edges=tokens_on_all_edges)
    }
    labels = {node: h.label(node) for node in h.nodes}
    return PublicMapping(labels=labels, edge_tokens=tokens), secrets


def dhka_set(
    h: AccessHierarchy, seed: bytes, *, tokens_on_all_edges: bool = False
) -> tuple[PublicMapping, dict[int, NodeSecrets]]:
    """Assign secrets and publish tokens for every node of ``h``.

    Args:
        h: A validated, root-augmented hierarchy.
        seed: The 64-octet wallet seed.
        tokens_on_all_edges: Also publish tokens on parent edges, for checks
            against the unoptimized derivation.

    Raises:
        InvalidSeed: If ``seed`` is not 64 octets.
    """
    _check_seed(seed)
    pub, secrets = _assign(h, seed, tokens_on_all_edges=tokens_on_all_edges)
    logger.debug(
        "dhka set: %d nodes, %d edges, %d tokens",
        len(h.nodes),
        len(h.edges),
        len(pub.edge_tokens),
    )
    return pub, secrets


def chain_code_table(h: AccessHierarchy, seed: bytes) -> dict[int, bytes]:
    """Per-node chain codes from a second, domain-separated assignment over ``h``."""
    _check_seed(seed)
    _, secrets = _assign(h, prf(seed, PrfTag.SECRET, _UNLINK_DOMAIN))
    return {node: s.key for node, s in secrets.items()}


def open_token(
    h: AccessHierarchy, pub: PublicMapping, i: int, j: int, tag_i: bytes
) -> tuple[bytes, bytes]:
    """Open the token on edge ``(i, j)`` with ``t_i``; returns ``(S_j, x_j)``.

    Raises:
        MissingToken: If ``pub`` has no token on the edge.
        AuthFailure: If ``tag_i`` is wrong or the token was altered.
    """
    token = pub.edge_tokens.get((i, j))
    if token is None:
        raise MissingToken((i, j))
    r_ij = prf(tag_i, PrfTag.EDGE, h.label_bytes(j))
    plaintext = aead_open(r_ij, token)
    if len(plaintext) != 2 * SECRET_SIZE:
        raise MalformedCiphertext(len(token))
    return plaintext[:SECRET_SIZE], plaintext[SECRET_SIZE:]


def _check_path(h: AccessHierarchy, path: list[int], i: int, j: int) -> None:
    edges = set(h.edges)
    if not path or path[0] != i or path[-1] != j:
        raise NoPath(i, j)
    for step in zip(path, path[1:]):
        if step not in edges:
            raise NoPath(i, j)


def derive_secret(
    h: AccessHierarchy,
    pub: PublicMapping,
    i: int,
    j: int,
    secret: bytes,
    *,
    path: list[int] | None = None,
    tokens_only: bool = False,
) -> bytes:
    """Walk from ``i`` to ``j`` holding ``S_i`` and return ``S_j``."""
    if path is None:
        path = derivation_path(h, i, j)
        if path is None:
            raise NoPath(i, j)
    else:
        h.require(i)
        h.require(j)
        _check_path(h, path, i, j)
    cur, current_secret = i, secret
    for nxt in path[1:]:
        if not tokens_only and h.parents.get(nxt) == cur:
            current_secret = prf(current_secret, PrfTag.SECRET, h.label_bytes(nxt))
        else:
            tag = prf(current_secret, PrfTag.TAG, h.label_bytes(cur))
            current_secret, _ = open_token(h, pub, cur, nxt, tag)
        cur = nxt
    logger.debug("derived %d -> %d over %d edges", i, j, len(path) - 1)
    return current_secret


def dhka_derive(
    h: AccessHierarchy,
    pub: PublicMapping,
    i: int,
    j: int,
    secret: bytes,
    *,
    path: list[int] | None = None,
    tokens_only: bool = False,
) -> bytes:
    """Recover ``x_j`` from ``S_i``.

    Args:
        path: Walk this path instead of the canonical one.
        tokens_only: Open a token on every edge, parent edges included; needs a
            mapping built with ``tokens_on_all_edges=True``.

    Raises:
        NoPath: If ``j`` is neither ``i`` nor a descendant of ``i``.
        MissingToken: If ``pub`` lacks a token the walk needs.
        AuthFailure: If ``secret`` is not the secret of ``i`` or a token was altered.
    """
    s_j = derive_secret(h, pub, i, j, secret, path=path, tokens_only=tokens_only)
    return prf(s_j, PrfTag.KEY, h.label_bytes(j))
