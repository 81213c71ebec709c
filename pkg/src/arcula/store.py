"""Binary files for public parameters and passphrase-sealed secrets.

Both formats start with an 8-octet magic and a big-endian ``u16`` format version,
store integers big-endian and octet strings behind a ``u32`` length. A public
parameters file ends with the SHA-256 of everything before it. A secrets file
carries its KDF parameters in the clear and seals the derivation keys and chain
codes with AES-256-GCM, authenticating the header as associated data. Encoding the
same value twice yields the same file.
"""

from __future__ import annotations

import hashlib
import logging
import struct
from pathlib import Path

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.pbkdf2 import PBKDF2HMAC
from pydantic import BaseModel, ConfigDict

from .config import ArculaConfig, resolve
from .dhka import PublicMapping
from .exceptions import CorruptFile, HierarchyError, InvalidLabel, WrongPassphrase
from .hierarchy import AccessHierarchy, Label, validate
from .wallet import Certificate, WalletPublicParams

logger = logging.getLogger(__name__)

PP_MAGIC = b"ARCULAPP"
SECRETS_MAGIC = b"ARCULASK"
FORMAT_VERSION = 1

_NO_PARENT = 0xFFFFFFFF
_NO_EXPIRY = 0xFFFFFFFF
_CHECKSUM_SIZE = 32
_SALT_SIZE = 16
_NONCE_SIZE = 12


class SecretBundle(BaseModel):
    """What the hot wallet keeps: derivation keys and, optionally, chain codes."""

    model_config = ConfigDict(frozen=True)

    derivation_keys: dict[int, bytes]
    chain_codes: dict[int, bytes] = {}


class _Writer:
    def __init__(self) -> None:
        self.buf = bytearray()

    def u8(self, value: int) -> None:
        self.buf += struct.pack(">B", value)

    def u16(self, value: int) -> None:
        self.buf += struct.pack(">H", value)

    def u32(self, value: int) -> None:
        self.buf += struct.pack(">I", value)

    def blob(self, value: bytes) -> None:
        self.u32(len(value))
        self.buf += value


class _Reader:
    def __init__(self, data: bytes, path: Path) -> None:
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise CorruptFile(self.path, "unexpected end of file")
        out = self.data[self.pos : self.pos + size]
        self.pos += size
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def blob(self) -> bytes:
        return self.take(self.u32())

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise CorruptFile(self.path, f"{len(self.data) - self.pos} trailing octets")


def _header(w: _Writer, magic: bytes) -> None:
    w.buf += magic
    w.u16(FORMAT_VERSION)


def _check_header(r: _Reader, magic: bytes) -> None:
    if r.take(len(magic)) != magic:
        raise CorruptFile(r.path, "bad magic")
    version = r.u16()
    if version != FORMAT_VERSION:
        raise CorruptFile(r.path, f"unsupported format version {version}")


# -- public parameters -------------------------------------------------------


def encode_pp(pp: WalletPublicParams) -> bytes:
    h = pp.hierarchy
    w = _Writer()
    _header(w, PP_MAGIC)
    w.u32(h.root)
    w.u32(len(h.nodes))
    for node in h.nodes:
        w.u32(node)
        w.u32(h.versions[node])
        w.u32(h.parents.get(node, _NO_PARENT))
    w.u32(len(h.edges))
    for i, j in h.edges:
        w.u32(i)
        w.u32(j)
    w.u32(len(h.reconnected))
    for node in h.reconnected:
        w.u32(node)
    w.blob(pp.mpk)
    w.u32(len(pp.certs))
    for node in sorted(pp.certs):
        cert = pp.certs[node]
        w.u32(node)
        w.blob(cert.sig)
        w.u32(_NO_EXPIRY if cert.expiry is None else cert.expiry)
    w.blob(pp.pub.serialize())
    w.buf += hashlib.sha256(w.buf).digest()
    return bytes(w.buf)


def _decode_mapping(data: bytes, path: Path) -> PublicMapping:
    r = _Reader(data, path)
    labels = {}
    for _ in range(r.u32()):
        node = r.u32()
        labels[node] = Label.decode(r.take(r.u8()))
    tokens = {}
    for _ in range(r.u32()):
        i, j = r.u32(), r.u32()
        tokens[(i, j)] = r.take(r.u16())
    r.finish()
    return PublicMapping(labels=labels, edge_tokens=tokens)


def decode_pp(data: bytes, path: str | Path = "<memory>") -> WalletPublicParams:
    """Inverse of :func:`encode_pp`.

    Raises:
        CorruptFile: On any format, checksum or consistency error.
    """
    path = Path(path)
    if len(data) < _CHECKSUM_SIZE:
        raise CorruptFile(path, "file too short")
    body, checksum = data[:-_CHECKSUM_SIZE], data[-_CHECKSUM_SIZE:]
    r = _Reader(body, path)
    _check_header(r, PP_MAGIC)
    if hashlib.sha256(body).digest() != checksum:
        raise CorruptFile(path, "checksum mismatch")
    root = r.u32()
    nodes, versions, parents = [], {}, {}
    for _ in range(r.u32()):
        node, version, parent = r.u32(), r.u32(), r.u32()
        nodes.append(node)
        versions[node] = version
        if parent != _NO_PARENT:
            parents[node] = parent
    edges = [(r.u32(), r.u32()) for _ in range(r.u32())]
    reconnected = [r.u32() for _ in range(r.u32())]
    mpk = r.blob()
    certs = {}
    for _ in range(r.u32()):
        node, sig, expiry = r.u32(), r.blob(), r.u32()
        certs[node] = Certificate(sig=sig, expiry=None if expiry == _NO_EXPIRY else expiry)
    try:
        pub = _decode_mapping(r.blob(), path)
        r.finish()
        h: AccessHierarchy = validate(
            nodes,
            edges,
            versions=versions,
            parents=parents,
            reconnected=reconnected,
            augment=False,
        )
    except (HierarchyError, InvalidLabel) as exc:
        raise CorruptFile(path, str(exc)) from exc
    if h.root != root or pub.labels != {n: h.label(n) for n in h.nodes}:
        raise CorruptFile(path, "public mapping does not match the hierarchy")
    if set(certs) != set(h.nodes):
        raise CorruptFile(path, "certificate set does not match the hierarchy")
    return WalletPublicParams(hierarchy=h, pub=pub, certs=certs, mpk=mpk)


def save_pp(pp: WalletPublicParams, path: str | Path) -> None:
    Path(path).write_bytes(encode_pp(pp))
    logger.info("public parameters written to %s", path)


def load_pp(path: str | Path) -> WalletPublicParams:
    path = Path(path)
    return decode_pp(path.read_bytes(), path)


# -- secrets -----------------------------------------------------------------


def _encode_bundle(bundle: SecretBundle) -> bytes:
    w = _Writer()
    for table in (bundle.derivation_keys, bundle.chain_codes):
        w.u32(len(table))
        for node in sorted(table):
            w.u32(node)
            w.blob(table[node])
    return bytes(w.buf)


def _decode_bundle(data: bytes, path: Path) -> SecretBundle:
    r = _Reader(data, path)
    tables = []
    for _ in range(2):
        tables.append({r.u32(): r.blob() for _ in range(r.u32())})
    r.finish()
    return SecretBundle(derivation_keys=tables[0], chain_codes=tables[1])


def _stretch(passphrase: str, salt: bytes, iterations: int) -> bytes:
    kdf = PBKDF2HMAC(algorithm=hashes.SHA256(), length=32, salt=salt, iterations=iterations)
    return kdf.derive(passphrase.encode("utf-8"))


def _check_value(key: bytes) -> bytes:
    return hashlib.sha3_256(b"arcula-key-check" + key).digest()


def encode_secrets(
    bundle: SecretBundle, passphrase: str, *, config: ArculaConfig | None = None
) -> bytes:
    plaintext = _encode_bundle(bundle)
    iterations = resolve(config).pbkdf2_iterations
    salt = hashlib.sha3_256(b"arcula-salt" + plaintext).digest()[:_SALT_SIZE]
    key = _stretch(passphrase, salt, iterations)
    nonce = hashlib.sha3_256(key + plaintext).digest()[:_NONCE_SIZE]
    w = _Writer()
    _header(w, SECRETS_MAGIC)
    w.u32(iterations)
    w.buf += salt + _check_value(key) + nonce
    header = bytes(w.buf)
    return header + AESGCM(key).encrypt(nonce, plaintext, header)


def decode_secrets(
    data: bytes, passphrase: str, path: str | Path = "<memory>"
) -> SecretBundle:
    """Inverse of :func:`encode_secrets`.

    Raises:
        WrongPassphrase: If the passphrase does not match the key check value.
        CorruptFile: If the header or the sealed body is damaged.
    """
    path = Path(path)
    r = _Reader(data, path)
    _check_header(r, SECRETS_MAGIC)
    iterations = r.u32()
    if iterations == 0:
        raise CorruptFile(path, "zero KDF iterations")
    salt, check, nonce = r.take(_SALT_SIZE), r.take(32), r.take(_NONCE_SIZE)
    header = data[: r.pos]
    key = _stretch(passphrase, salt, iterations)
    if _check_value(key) != check:
        raise WrongPassphrase(path)
    try:
        plaintext = AESGCM(key).decrypt(nonce, data[r.pos :], header)
    except InvalidTag as exc:
        raise CorruptFile(path, "sealed body failed authentication") from exc
    return _decode_bundle(plaintext, path)


def save_secrets(
    bundle: SecretBundle,
    path: str | Path,
    passphrase: str,
    *,
    config: ArculaConfig | None = None,
) -> None:
    Path(path).write_bytes(encode_secrets(bundle, passphrase, config=config))
    logger.info("secrets written to %s", path)


def load_secrets(path: str | Path, passphrase: str) -> SecretBundle:
    path = Path(path)
    return decode_secrets(path.read_bytes(), passphrase, path)


def fingerprint(path: str | Path) -> str:
    """SHA-256 hex digest of a file."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
