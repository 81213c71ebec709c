"""Deterministic cryptographic primitives shared by every other module.

The PRF is ``SHA3-256(key || tag || data)`` with a one-octet domain tag, the AEAD is
AES-256-GCM under a fixed zero nonce (each edge key seals exactly one message), and
signatures are RFC-6979 deterministic, low-S, DER-encoded ECDSA over secp256k1 with
SHA-256 message hashing. Nothing in this module draws randomness.
"""

from __future__ import annotations

import hashlib
import logging
from enum import IntEnum
from functools import cached_property

from Crypto.Hash import RIPEMD160
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from ecdsa import SECP256k1, BadDigestError, BadSignatureError, SigningKey, VerifyingKey
from ecdsa.der import UnexpectedDER
from ecdsa.ellipticcurve import INFINITY, PointJacobi
from ecdsa.keys import MalformedPointError
from ecdsa.util import sigdecode_der, sigencode_der_canonize
from pydantic import BaseModel, ConfigDict, Field

from .config import ArculaConfig, resolve
from .exceptions import (
    AuthFailure,
    DegenerateKey,
    InternalError,
    InvalidPoint,
    MalformedCiphertext,
)

logger = logging.getLogger(__name__)

CURVE = SECP256k1
ORDER: int = int(SECP256k1.order)
GENERATOR: PointJacobi = SECP256k1.generator

NONCE_SIZE = 12
TAG_SIZE = 16
SYMMETRIC_KEY_SIZE = 32
POINT_SIZE = 33
_ZERO_NONCE = bytes(NONCE_SIZE)
_PERTURB_MAX_ATTEMPTS = 256


class PrfTag(IntEnum):
    """Domain-separation octet prepended to every PRF input."""

    TAG = 0x00
    KEY = 0x01
    EDGE = 0x02
    SECRET = 0x03


def prf(key: bytes, tag: int, data: bytes) -> bytes:
    """Return ``SHA3-256(key || tag || data)``.

    ``key`` is a 64-octet root seed or a 32-octet node secret.
    """
    if len(key) not in (32, 64):
        raise ValueError(f"PRF keys are 32 or 64 octets, got {len(key)}")
    return hashlib.sha3_256(key + bytes((PrfTag(tag),)) + data).digest()


def aead_seal(key: bytes, plaintext: bytes) -> bytes:
    """Encrypt and authenticate ``plaintext``; the output is ``nonce || ct || tag``."""
    if len(key) != SYMMETRIC_KEY_SIZE:
        raise ValueError(f"AEAD keys are {SYMMETRIC_KEY_SIZE} octets, got {len(key)}")
    return _ZERO_NONCE + AESGCM(key).encrypt(_ZERO_NONCE, plaintext, None)


def aead_open(key: bytes, ciphertext: bytes) -> bytes:
    """Inverse of :func:`aead_seal`.

    Raises:
        MalformedCiphertext: If the input cannot hold a nonce and a tag.
        AuthFailure: If the authentication tag does not verify.
    """
    if len(key) != SYMMETRIC_KEY_SIZE:
        raise ValueError(f"AEAD keys are {SYMMETRIC_KEY_SIZE} octets, got {len(key)}")
    if len(ciphertext) < NONCE_SIZE + TAG_SIZE:
        raise MalformedCiphertext(len(ciphertext))
    nonce, body = ciphertext[:NONCE_SIZE], ciphertext[NONCE_SIZE:]
    try:
        return AESGCM(key).decrypt(nonce, body, None)
    except InvalidTag as exc:
        raise AuthFailure("AEAD authentication tag mismatch") from exc


def hash160(data: bytes) -> bytes:
    """``RIPEMD160(SHA256(data))``, the Bitcoin address hash."""
    return RIPEMD160.new(hashlib.sha256(data).digest()).digest()


def scalar_from_bytes(data: bytes) -> int:
    """Big-endian integer reduced modulo the group order."""
    return int.from_bytes(data, "big") % ORDER


def encode_point(point: PointJacobi) -> bytes:
    """SEC1 compressed encoding (33 octets)."""
    if point == INFINITY:
        raise InvalidPoint("The point at infinity has no SEC1 compressed encoding")
    return VerifyingKey.from_public_point(point, curve=CURVE).to_string("compressed")


def decode_point(data: bytes) -> PointJacobi:
    """Parse a compressed point; raise :class:`InvalidPoint` when it is not on the curve."""
    if len(data) != POINT_SIZE or data[0] not in (0x02, 0x03):
        raise InvalidPoint(f"Expected a 33-octet compressed point, got {len(data)} octets")
    try:
        return VerifyingKey.from_string(data, curve=CURVE).pubkey.point
    except (MalformedPointError, ValueError) as exc:
        raise InvalidPoint(str(exc)) from exc


def point_from_secret(secret_scalar: int) -> bytes:
    """Compressed encoding of ``g^secret_scalar``."""
    return encode_point(GENERATOR * secret_scalar)


class KeyPair(BaseModel):
    """An ECDSA secp256k1 key pair."""

    model_config = ConfigDict(frozen=True)

    secret_scalar: int = Field(gt=0, lt=ORDER, repr=False)
    public_point: bytes = Field(min_length=POINT_SIZE, max_length=POINT_SIZE)

    @cached_property
    def signing_key(self) -> SigningKey:
        return SigningKey.from_secret_exponent(
            self.secret_scalar, curve=CURVE, hashfunc=hashlib.sha256
        )

    @classmethod
    def from_secret(cls, secret_scalar: int) -> KeyPair:
        return cls(secret_scalar=secret_scalar, public_point=point_from_secret(secret_scalar))


def keygen_from_bytes(x: bytes, *, config: ArculaConfig | None = None) -> KeyPair:
    """Deterministic key generation with ``x`` as the only randomness.

    The candidate scalar is ``x`` read big-endian. Candidates equal to zero or not
    below the group order are rejected and ``x`` is replaced by ``SHA3-256(x)``;
    nothing is ever reduced modulo the order, so the result is unbiased.
    """
    if len(x) != 32:
        raise ValueError(f"Key material is 32 octets, got {len(x)}")
    attempts = resolve(config).keygen_max_attempts
    candidate = x
    for _ in range(attempts):
        scalar = int.from_bytes(candidate, "big")
        if 0 < scalar < ORDER:
            return KeyPair.from_secret(scalar)
        candidate = hashlib.sha3_256(candidate).digest()
    raise InternalError(f"keygen rejected {attempts} consecutive candidates")


def sign_msg(kp: KeyPair, msg: bytes) -> bytes:
    """Sign ``SHA256(msg)``; DER-encoded, low-S, RFC-6979 nonce."""
    return kp.signing_key.sign_deterministic(
        msg, hashfunc=hashlib.sha256, sigencode=sigencode_der_canonize
    )


def verify_msg(pub: bytes, msg: bytes, sig: bytes) -> bool:
    """Check a DER signature over ``SHA256(msg)``. Never raises on malformed input."""
    try:
        vk = VerifyingKey.from_string(pub, curve=CURVE, hashfunc=hashlib.sha256)
        return vk.verify(sig, msg, hashfunc=hashlib.sha256, sigdecode=sigdecode_der)
    except (
        BadSignatureError,
        BadDigestError,
        UnexpectedDER,
        MalformedPointError,
        ValueError,
    ) as exc:
        logger.debug("signature rejected: %s", type(exc).__name__)
        return False


def _perturbation(chain_code: bytes, label: bytes, degenerate) -> int:
    candidate = label
    for _ in range(_PERTURB_MAX_ATTEMPTS):
        offset = scalar_from_bytes(prf(chain_code, PrfTag.SECRET, candidate))
        if offset != 0 and not degenerate(offset):
            return offset
        candidate = candidate + b"\x00"
    raise DegenerateKey(f"perturbation degenerate after {_PERTURB_MAX_ATTEMPTS} attempts")


def perturb_secret(base_scalar: int, chain_code: bytes, label: bytes) -> int:
    """``(base + scalar(prf(c, 0x03, label))) mod n``.

    A zero offset or a zero result re-hashes the label with one more ``0x00``.
    """
    offset = _perturbation(chain_code, label, lambda f: (base_scalar + f) % ORDER == 0)
    return (base_scalar + offset) % ORDER


def perturb_public(base_point: bytes, chain_code: bytes, label: bytes) -> bytes:
    """``base · g^scalar(prf(c, 0x03, label))``; agrees with :func:`perturb_secret`."""
    base = decode_point(base_point)
    offset = _perturbation(chain_code, label, lambda f: base + GENERATOR * f == INFINITY)
    return encode_point(base + GENERATOR * offset)
