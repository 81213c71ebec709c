"""Script values: opcodes, push operations and the byte codec."""

from __future__ import annotations

from collections.abc import Iterable
from enum import Enum, IntEnum

from pydantic import BaseModel, ConfigDict, model_validator

from ..exceptions import MalformedScript

MAX_PUSH_SIZE = 520
_MAX_DIRECT_PUSH = 75


class Op(IntEnum):
    """Bitcoin Cash opcodes used by the wallet's scripts."""

    OP_0 = 0x00
    OP_PUSHDATA1 = 0x4C
    OP_PUSHDATA2 = 0x4D
    OP_TOALTSTACK = 0x6B
    OP_FROMALTSTACK = 0x6C
    OP_DUP = 0x76
    OP_CAT = 0x7E
    OP_EQUAL = 0x87
    OP_EQUALVERIFY = 0x88
    OP_HASH160 = 0xA9
    OP_CHECKSIG = 0xAC
    OP_CHECKDATASIG = 0xBA
    OP_CHECKDATASIGVERIFY = 0xBB


class PushKind(str, Enum):
    """What a pushed item is; size accounting depends on it."""

    SIG = "sig"
    CERT = "cert"
    PUBKEY = "pubkey"
    HASH = "hash"
    LABEL = "label"
    SCRIPT = "script"
    DATA = "data"


class ScriptOp(BaseModel):
    """Either a bare opcode or a data push."""

    model_config = ConfigDict(frozen=True)

    op: Op | None = None
    data: bytes | None = None
    kind: PushKind | None = None

    @model_validator(mode="after")
    def check_shape(self) -> ScriptOp:
        if (self.op is None) == (self.data is None):
            raise ValueError("a script op is either an opcode or a push")
        if self.data is not None and len(self.data) > MAX_PUSH_SIZE:
            raise ValueError(f"pushes are at most {MAX_PUSH_SIZE} octets, got {len(self.data)}")
        return self

    @classmethod
    def push(cls, data: bytes, kind: PushKind = PushKind.DATA) -> ScriptOp:
        return cls(data=bytes(data), kind=kind)

    @property
    def is_push(self) -> bool:
        return self.data is not None

    @property
    def name(self) -> str:
        if self.op is not None:
            return self.op.name
        return f"PUSH({len(self.data)})"

    def serialize(self) -> bytes:
        if self.op is not None:
            return bytes((self.op,))
        size = len(self.data)
        if size == 0:
            return bytes((Op.OP_0,))
        if size <= _MAX_DIRECT_PUSH:
            return bytes((size,)) + self.data
        if size <= 0xFF:
            return bytes((Op.OP_PUSHDATA1, size)) + self.data
        return bytes((Op.OP_PUSHDATA2,)) + size.to_bytes(2, "little") + self.data


class Script(BaseModel):
    """An ordered list of :class:`ScriptOp`."""

    model_config = ConfigDict(frozen=True)

    ops: tuple[ScriptOp, ...] = ()

    @classmethod
    def of(cls, *items: Op | ScriptOp) -> Script:
        return cls(ops=tuple(i if isinstance(i, ScriptOp) else ScriptOp(op=i) for i in items))

    def __add__(self, other: Script) -> Script:
        if not isinstance(other, Script):
            return NotImplemented
        return Script(ops=self.ops + other.ops)

    def serialize(self) -> bytes:
        return b"".join(op.serialize() for op in self.ops)

    def hex(self) -> str:
        return self.serialize().hex()

    def is_push_only(self) -> bool:
        return all(op.is_push for op in self.ops)

    def pushes(self) -> list[bytes]:
        return [op.data for op in self.ops if op.data is not None]

    def __str__(self) -> str:
        return " ".join(
            op.op.name if op.op is not None else f"<{op.data.hex()}>" for op in self.ops
        )


def _read(data: bytes, pos: int, size: int) -> bytes:
    if pos + size > len(data):
        raise MalformedScript(f"push of {size} octets runs past the end of the script")
    return data[pos : pos + size]


def parse_script(data: bytes | Iterable[int]) -> Script:
    """Decode serialized script bytes. Pushes come back with kind ``data``.

    Raises:
        MalformedScript: On truncated pushes or opcodes outside the dialect.
    """
    data = bytes(data)
    ops: list[ScriptOp] = []
    pos = 0
    while pos < len(data):
        byte = data[pos]
        pos += 1
        if byte == Op.OP_0:
            ops.append(ScriptOp.push(b""))
        elif byte <= _MAX_DIRECT_PUSH:
            ops.append(ScriptOp.push(_read(data, pos, byte)))
            pos += byte
        elif byte == Op.OP_PUSHDATA1:
            size = _read(data, pos, 1)[0]
            ops.append(ScriptOp.push(_read(data, pos + 1, size)))
            pos += 1 + size
        elif byte == Op.OP_PUSHDATA2:
            size = int.from_bytes(_read(data, pos, 2), "little")
            if size > MAX_PUSH_SIZE:
                raise MalformedScript(f"push of {size} octets exceeds {MAX_PUSH_SIZE}")
            ops.append(ScriptOp.push(_read(data, pos + 2, size)))
            pos += 2 + size
        else:
            try:
                ops.append(ScriptOp(op=Op(byte)))
            except ValueError:
                raise MalformedScript(f"opcode 0x{byte:02x} is not part of the dialect") from None
    return Script(ops=tuple(ops))
