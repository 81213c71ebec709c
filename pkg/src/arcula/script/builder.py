"""Locking and unlocking script emitters, P2SH wrapping, size accounting and audit.

Sizes follow the on-paper convention: every opcode counts one octet, pushed data
counts its nominal size (signatures and certificates 73, public keys 33, hashes 20,
labels 4) and push-length prefixes are not counted. ``Script.serialize`` still
emits real prefixes.
"""

from __future__ import annotations

from collections.abc import Iterable

from pydantic import BaseModel, ConfigDict

from ..crypto_prims import POINT_SIZE, hash160
from ..exceptions import InvalidLabel, MalformedScript
from ..hierarchy import Label
from .nodes import Op, PushKind, Script, ScriptOp, parse_script

SIGNATURE_SIZE = 73
HASH_SIZE = 20

_NOMINAL = {PushKind.SIG: SIGNATURE_SIZE, PushKind.CERT: SIGNATURE_SIZE}


def _label_bytes(label: Label | bytes) -> bytes:
    return label.encode() if isinstance(label, Label) else bytes(label)


def lock_standard(pk: bytes) -> Script:
    """``OP_DUP OP_HASH160 <hash160(pk)> OP_EQUALVERIFY OP_CHECKSIG``"""
    return Script.of(
        Op.OP_DUP,
        Op.OP_HASH160,
        ScriptOp.push(hash160(pk), PushKind.HASH),
        Op.OP_EQUALVERIFY,
        Op.OP_CHECKSIG,
    )


def unlock_standard(sig: bytes, pk: bytes) -> Script:
    return Script.of(ScriptOp.push(sig, PushKind.SIG), ScriptOp.push(pk, PushKind.PUBKEY))


def lock_arcula(mpk: bytes, label: Label | bytes) -> Script:
    """Lock funds to the identity ``(mpk, label)``.

    ``OP_DUP OP_TOALTSTACK <label> OP_CAT <mpk> OP_CHECKDATASIGVERIFY
    OP_FROMALTSTACK OP_CHECKSIG``
    """
    return Script.of(
        Op.OP_DUP,
        Op.OP_TOALTSTACK,
        ScriptOp.push(_label_bytes(label), PushKind.LABEL),
        Op.OP_CAT,
        ScriptOp.push(mpk, PushKind.PUBKEY),
        Op.OP_CHECKDATASIGVERIFY,
        Op.OP_FROMALTSTACK,
        Op.OP_CHECKSIG,
    )


def unlock_arcula(sig: bytes, cert: bytes, pk: bytes) -> Script:
    return Script.of(
        ScriptOp.push(sig, PushKind.SIG),
        ScriptOp.push(cert, PushKind.CERT),
        ScriptOp.push(pk, PushKind.PUBKEY),
    )


def unlinkable_lock(pk: bytes) -> Script:
    """Plain P2PKH on a node's signing key: no master key appears on chain."""
    return lock_standard(pk)


def lock_perturbed(mpk_i: bytes) -> Script:
    """Arcula lock without the label, under a per-node master key."""
    return Script.of(
        Op.OP_DUP,
        Op.OP_TOALTSTACK,
        ScriptOp.push(mpk_i, PushKind.PUBKEY),
        Op.OP_CHECKDATASIGVERIFY,
        Op.OP_FROMALTSTACK,
        Op.OP_CHECKSIG,
    )


def p2sh_wrap(inner: Script) -> tuple[Script, Script]:
    """Return ``(lock, unlock_suffix)``; append the suffix to the inner unlock."""
    serialized = inner.serialize()
    lock = Script.of(
        Op.OP_HASH160, ScriptOp.push(hash160(serialized), PushKind.HASH), Op.OP_EQUAL
    )
    return lock, Script.of(ScriptOp.push(serialized, PushKind.SCRIPT))


def is_p2sh(lock: Script) -> bool:
    ops = lock.ops
    return (
        len(ops) == 3
        and ops[0].op == Op.OP_HASH160
        and ops[1].is_push
        and len(ops[1].data) == HASH_SIZE
        and ops[2].op == Op.OP_EQUAL
    )


# -- size accounting ---------------------------------------------------------


def nominal_size(script: Script) -> int:
    total = 0
    for op in script.ops:
        if not op.is_push:
            total += 1
        elif op.kind in _NOMINAL:
            total += _NOMINAL[op.kind]
        elif op.kind == PushKind.SCRIPT:
            total += nominal_size(parse_script(op.data))
        else:
            total += len(op.data)
    return total


class SizeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    lock: int
    unlock: int
    total: int


def size_report(lock: Script, unlock: Script) -> SizeReport:
    lock_size, unlock_size = nominal_size(lock), nominal_size(unlock)
    return SizeReport(lock=lock_size, unlock=unlock_size, total=lock_size + unlock_size)


_PLACEHOLDER_POINT = bytes((0x02,)) + bytes(POINT_SIZE - 1)
_PLACEHOLDER_SIG = bytes(SIGNATURE_SIZE)


def size_table(*, extended: bool = False) -> dict[str, SizeReport]:
    """Per-transaction script sizes: standard P2PKH against Arcula.

    ``extended`` adds the P2SH-wrapped and perturbed Arcula variants.
    """
    pk, sig = _PLACEHOLDER_POINT, _PLACEHOLDER_SIG
    arcula_lock = lock_arcula(pk, Label(node_index=0))
    arcula_unlock = unlock_arcula(sig, sig, pk)
    rows = {
        "standard": size_report(lock_standard(pk), unlock_standard(sig, pk)),
        "arcula": size_report(arcula_lock, arcula_unlock),
    }
    if extended:
        p2sh_lock, suffix = p2sh_wrap(arcula_lock)
        rows["arcula-p2sh"] = size_report(p2sh_lock, arcula_unlock + suffix)
        rows["arcula-perturbed"] = size_report(lock_perturbed(pk), arcula_unlock)
    return rows


# -- audit -------------------------------------------------------------------


class AuditHit(BaseModel):
    """An Arcula lock paying to the audited master key."""

    model_config = ConfigDict(frozen=True)

    index: int
    label: Label


def arcula_identity(lock: Script) -> tuple[bytes, Label] | None:
    """``(mpk, label)`` when ``lock`` has the Arcula lock shape."""
    shape = lock_arcula(_PLACEHOLDER_POINT, bytes(4)).ops
    if len(lock.ops) != len(shape):
        return None
    for got, want in zip(lock.ops, shape):
        if got.is_push != want.is_push or got.op != want.op:
            return None
    label_op, mpk_op = lock.ops[2], lock.ops[4]
    if len(label_op.data) not in (4, 8) or len(mpk_op.data) != POINT_SIZE:
        return None
    try:
        label = Label.decode(label_op.data)
    except InvalidLabel:
        return None
    return mpk_op.data, label


def audit_scripts(mpk: bytes, scripts: Iterable[Script | bytes]) -> list[AuditHit]:
    """Which of ``scripts`` are Arcula locks under ``mpk``; undecodable ones are skipped."""
    hits = []
    for index, item in enumerate(scripts):
        try:
            lock = item if isinstance(item, Script) else parse_script(item)
        except MalformedScript:
            continue
        identity = arcula_identity(lock)
        if identity is not None and identity[0] == mpk:
            hits.append(AuditHit(index=index, label=identity[1]))
    return hits
