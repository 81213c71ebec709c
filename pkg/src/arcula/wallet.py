"""The hierarchical deterministic wallet: Set, DPub, DPriv, Sign and Vrfy.

Each node's signing key pair is generated from its DHKA key ``x_i``; the master key
pair (the root's) certifies every node's public key together with its label. A
node's public identity is just ``(mpk, label)``, so addresses need no secrets.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping

from pydantic import BaseModel, ConfigDict, Field

from .config import ArculaConfig
from .crypto_prims import (
    KeyPair,
    keygen_from_bytes,
    perturb_public,
    perturb_secret,
    point_from_secret,
    sign_msg,
    verify_msg,
)
from .dhka import NodeSecrets, PublicMapping, dhka_derive, dhka_set
from .exceptions import AuthFailure
from .hierarchy import AccessHierarchy, Label

logger = logging.getLogger(__name__)


class Certificate(BaseModel):
    """Master signature over ``pk || label`` (``|| expiry`` for expiring certificates)."""

    model_config = ConfigDict(frozen=True)

    sig: bytes
    expiry: int | None = Field(default=None, ge=0, lt=2**32)


class SigningKey(BaseModel):
    """A node's private signing material as returned by :func:`derive_priv`."""

    model_config = ConfigDict(frozen=True)

    node: int
    secret_scalar: int = Field(repr=False)
    public_point: bytes
    cert: Certificate

    @property
    def keypair(self) -> KeyPair:
        return KeyPair(secret_scalar=self.secret_scalar, public_point=self.public_point)


class WalletSignature(BaseModel):
    model_config = ConfigDict(frozen=True)

    public_point: bytes
    sig: bytes
    cert: Certificate


class IdentityPublicKey(BaseModel):
    """``(mpk, label)``: the public identity of a node."""

    model_config = ConfigDict(frozen=True)

    mpk: bytes
    label: Label


class WalletPublicParams(BaseModel):
    """Everything a wallet publishes: hierarchy, public mapping, certificates, mpk."""

    model_config = ConfigDict(frozen=True)

    hierarchy: AccessHierarchy
    pub: PublicMapping
    certs: dict[int, Certificate]
    mpk: bytes


class WalletState(BaseModel):
    """Complete wallet state, secret side included. Never published."""

    model_config = ConfigDict(frozen=True)

    hierarchy: AccessHierarchy
    seed: bytes = Field(repr=False)
    pub: PublicMapping
    secrets: dict[int, NodeSecrets] = Field(repr=False)
    public_keys: dict[int, bytes]
    certs: dict[int, Certificate]
    expiries: dict[int, int] = {}
    tokens_on_all_edges: bool = False

    @property
    def mpk(self) -> bytes:
        return self.public_keys[self.hierarchy.root]

    @property
    def msk(self) -> bytes:
        return self.secrets[self.hierarchy.root].secret

    def public_params(self) -> WalletPublicParams:
        return WalletPublicParams(
            hierarchy=self.hierarchy, pub=self.pub, certs=self.certs, mpk=self.mpk
        )

    def derivation_keys(self) -> dict[int, bytes]:
        return {node: s.secret for node, s in self.secrets.items()}


def certificate_message(public_point: bytes, label: bytes, expiry: int | None = None) -> bytes:
    """``pk || label``, with a 4-octet big-endian expiry appended when set."""
    if expiry is None:
        return public_point + label
    return public_point + label + expiry.to_bytes(4, "big")


def issue_certificate(
    master: KeyPair, public_point: bytes, label: bytes, expiry: int | None = None
) -> Certificate:
    return Certificate(
        sig=sign_msg(master, certificate_message(public_point, label, expiry)), expiry=expiry
    )


def node_keypair(secrets: NodeSecrets, *, config: ArculaConfig | None = None) -> KeyPair:
    return keygen_from_bytes(secrets.key, config=config)


def build_state(
    h: AccessHierarchy,
    seed: bytes,
    *,
    expiries: Mapping[int, int] | None = None,
    tokens_on_all_edges: bool = False,
    config: ArculaConfig | None = None,
) -> WalletState:
    """Run Set and keep every intermediate value."""
    pub, secrets = dhka_set(h, seed, tokens_on_all_edges=tokens_on_all_edges)
    keypairs = {node: node_keypair(secrets[node], config=config) for node in h.nodes}
    master = keypairs[h.root]
    expiry_map = {int(n): int(e) for n, e in (expiries or {}).items()}
    certs = {
        node: issue_certificate(
            master, keypairs[node].public_point, h.label_bytes(node), expiry_map.get(node)
        )
        for node in h.nodes
    }
    logger.debug("wallet set: %d certificates issued", len(certs))
    return WalletState(
        hierarchy=h,
        seed=seed,
        pub=pub,
        secrets=secrets,
        public_keys={node: kp.public_point for node, kp in keypairs.items()},
        certs=certs,
        expiries=expiry_map,
        tokens_on_all_edges=tokens_on_all_edges,
    )


def wallet_set(
    h: AccessHierarchy,
    seed: bytes,
    *,
    expiries: Mapping[int, int] | None = None,
    tokens_on_all_edges: bool = False,
    config: ArculaConfig | None = None,
) -> tuple[WalletPublicParams, dict[int, bytes]]:
    """Create a wallet over ``h`` from ``seed``.

    Returns:
        The public parameters and the derivation key ``d_i = S_i`` of every node;
        ``d_root`` is the master secret key.
    """
    state = build_state(
        h, seed, expiries=expiries, tokens_on_all_edges=tokens_on_all_edges, config=config
    )
    return state.public_params(), state.derivation_keys()


def master_keypair(
    pp: WalletPublicParams, msk: bytes, *, config: ArculaConfig | None = None
) -> KeyPair:
    """Regenerate the master signing key from the master secret key.

    Raises:
        AuthFailure: If ``msk`` does not produce ``pp.mpk``.
    """
    h = pp.hierarchy
    kp = node_keypair(NodeSecrets.from_secret(msk, h.label_bytes(h.root)), config=config)
    if kp.public_point != pp.mpk:
        raise AuthFailure("master secret key does not match the master public key")
    return kp


def derive_pub(pp: WalletPublicParams, j: int) -> IdentityPublicKey:
    """Public identity of node ``j``. Uses public data only."""
    return IdentityPublicKey(mpk=pp.mpk, label=pp.hierarchy.label(j))


def derive_priv(
    pp: WalletPublicParams,
    d_i: bytes,
    i: int,
    j: int,
    *,
    config: ArculaConfig | None = None,
) -> SigningKey:
    """Signing key of ``j`` from the derivation key of ``i``.

    Raises:
        NoPath: If ``j`` is neither ``i`` nor one of its descendants.
    """
    x_j = dhka_derive(pp.hierarchy, pp.pub, i, j, d_i)
    kp = keygen_from_bytes(x_j, config=config)
    return SigningKey(
        node=j, secret_scalar=kp.secret_scalar, public_point=kp.public_point, cert=pp.certs[j]
    )


def wallet_sign(sk: SigningKey, m: bytes) -> WalletSignature:
    return WalletSignature(
        public_point=sk.public_point, sig=sign_msg(sk.keypair, m), cert=sk.cert
    )


def wallet_verify(
    pk: IdentityPublicKey,
    m: bytes,
    ws: WalletSignature,
    *,
    current_period: int | None = None,
) -> bool:
    """Accept iff the certificate binds ``ws.public_point`` to ``pk.label`` under
    ``pk.mpk`` and ``ws.sig`` signs ``m`` under ``ws.public_point``.

    An expiring certificate additionally requires ``current_period`` to be given
    and not later than its expiry.
    """
    expiry = ws.cert.expiry
    if expiry is not None and (current_period is None or expiry < current_period):
        logger.debug("certificate expired or period missing (expiry %s)", expiry)
        return False
    message = certificate_message(ws.public_point, pk.label.encode(), expiry)
    if not verify_msg(pk.mpk, message, ws.cert.sig):
        return False
    return verify_msg(ws.public_point, m, ws.sig)


# -- unlinkable addresses ----------------------------------------------------


class PerturbedIdentity(BaseModel):
    """Per-node master key pair ``(msk_j, mpk_j)`` and its certificate over ``pk_j``."""

    model_config = ConfigDict(frozen=True)

    node: int
    secret_scalar: int = Field(repr=False)
    mpk: bytes
    signing_key: SigningKey
    cert: Certificate

    @property
    def keypair(self) -> KeyPair:
        return KeyPair(secret_scalar=self.secret_scalar, public_point=self.mpk)


def perturbed_mpk(pp: WalletPublicParams, chain_code: bytes, j: int) -> bytes:
    """``mpk_j`` from public data and the chain code of ``j``."""
    return perturb_public(pp.mpk, chain_code, pp.hierarchy.label_bytes(j))


def perturbed_identity(
    pp: WalletPublicParams,
    msk: bytes,
    chain_code: bytes,
    j: int,
    *,
    config: ArculaConfig | None = None,
) -> PerturbedIdentity:
    """Perturbed master key of node ``j``; its certificate signs ``pk_j`` alone."""
    h = pp.hierarchy
    master = master_keypair(pp, msk, config=config)
    secret_scalar = perturb_secret(master.secret_scalar, chain_code, h.label_bytes(j))
    perturbed = KeyPair(secret_scalar=secret_scalar, public_point=point_from_secret(secret_scalar))
    sk = derive_priv(pp, msk, h.root, j, config=config)
    cert = Certificate(sig=sign_msg(perturbed, sk.public_point))
    return PerturbedIdentity(
        node=j,
        secret_scalar=secret_scalar,
        mpk=perturbed.public_point,
        signing_key=sk.model_copy(update={"cert": cert}),
        cert=cert,
    )
