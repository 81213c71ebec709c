"""A small stack machine for the wallet's script dialect.

The unlocking script may only push data. The locking script then runs on the
resulting stack; a P2SH lock (``OP_HASH160 <20 octets> OP_EQUAL``) additionally
runs the last pushed item as a script on the rest of the unlocking stack. The
spend is valid when nothing fails and the top item is true.
"""

from __future__ import annotations

import logging
from collections.abc import Callable

from pydantic import BaseModel, ConfigDict, Field

from ..crypto_prims import hash160, verify_msg
from ..exceptions import InvalidOpcode, MalformedScript, ScriptError, StackUnderflow, VerifyFailed
from .builder import is_p2sh
from .nodes import Op, Script, parse_script

logger = logging.getLogger(__name__)

TRUE = b"\x01"
FALSE = b""


def cast_to_bool(item: bytes) -> bool:
    """Empty and all-zero items are false."""
    return any(item)


class VmContext(BaseModel):
    """Evaluation context; ``tx_digest`` stands in for the transaction sighash."""

    model_config = ConfigDict(frozen=True)

    tx_digest: bytes = Field(min_length=32, max_length=32)


class TraceStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    op: str
    main: tuple[bytes, ...]
    alt: tuple[bytes, ...]


class VmResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    success: bool
    error: str | None = None
    trace: tuple[TraceStep, ...] = ()


class InterpreterState:
    """Main and alt stacks plus the opcode handlers that act on them."""

    _handlers: dict[Op, Callable[[InterpreterState], None]] = {}

    def __init__(self, ctx: VmContext, *, trace: bool = False):
        self.ctx = ctx
        self.stack: list[bytes] = []
        self.alt_stack: list[bytes] = []
        self.failed = False
        self._trace: list[TraceStep] | None = [] if trace else None

    @property
    def trace(self) -> tuple[TraceStep, ...]:
        return tuple(self._trace or ())

    def require_stack_depth(self, depth: int) -> None:
        if len(self.stack) < depth:
            raise StackUnderflow(f"stack depth {len(self.stack)} less than required depth {depth}")

    def require_alt_stack(self) -> None:
        if not self.alt_stack:
            raise StackUnderflow("alt stack is empty")

    def evaluate_script(self, script: Script) -> None:
        for op in script.ops:
            if op.is_push:
                self.stack.append(op.data)
            else:
                handler = self._handlers.get(op.op)
                if handler is None:
                    raise InvalidOpcode(f"{op.op.name} cannot be executed")
                handler(self)
            if self._trace is not None:
                self._trace.append(
                    TraceStep(op=op.name, main=tuple(self.stack), alt=tuple(self.alt_stack))
                )

    def on_DUP(self) -> None:
        # (x -- x x)
        self.require_stack_depth(1)
        self.stack.append(self.stack[-1])

    def on_TOALTSTACK(self) -> None:
        self.require_stack_depth(1)
        self.alt_stack.append(self.stack.pop())

    def on_FROMALTSTACK(self) -> None:
        self.require_alt_stack()
        self.stack.append(self.alt_stack.pop())

    def on_CAT(self) -> None:
        # (x1 x2 -- x1||x2)
        self.require_stack_depth(2)
        right = self.stack.pop()
        self.stack[-1] += right

    def on_HASH160(self) -> None:
        self.require_stack_depth(1)
        self.stack[-1] = hash160(self.stack[-1])

    def on_EQUAL(self) -> None:
        # (x1 x2 -- bool)
        self.require_stack_depth(2)
        self.stack.append(TRUE if self.stack.pop() == self.stack.pop() else FALSE)

    def on_EQUALVERIFY(self) -> None:
        self.on_EQUAL()
        if not cast_to_bool(self.stack.pop()):
            raise VerifyFailed("OP_EQUALVERIFY failed")

    def on_CHECKSIG(self) -> None:
        # (sig pubkey -- bool), signature over the context digest
        self.require_stack_depth(2)
        pubkey = self.stack.pop()
        sig = self.stack.pop()
        self.stack.append(TRUE if verify_msg(pubkey, self.ctx.tx_digest, sig) else FALSE)

    def on_CHECKDATASIG(self) -> None:
        # (sig msg pubkey -- bool)
        self.require_stack_depth(3)
        pubkey = self.stack.pop()
        msg = self.stack.pop()
        sig = self.stack.pop()
        self.stack.append(TRUE if verify_msg(pubkey, msg, sig) else FALSE)

    def on_CHECKDATASIGVERIFY(self) -> None:
        self.on_CHECKDATASIG()
        if not cast_to_bool(self.stack.pop()):
            raise VerifyFailed("OP_CHECKDATASIGVERIFY failed")

    @classmethod
    def bind_handlers(cls) -> None:
        cls._handlers = {
            Op.OP_DUP: cls.on_DUP,
            Op.OP_TOALTSTACK: cls.on_TOALTSTACK,
            Op.OP_FROMALTSTACK: cls.on_FROMALTSTACK,
            Op.OP_CAT: cls.on_CAT,
            Op.OP_HASH160: cls.on_HASH160,
            Op.OP_EQUAL: cls.on_EQUAL,
            Op.OP_EQUALVERIFY: cls.on_EQUALVERIFY,
            Op.OP_CHECKSIG: cls.on_CHECKSIG,
            Op.OP_CHECKDATASIG: cls.on_CHECKDATASIG,
            Op.OP_CHECKDATASIGVERIFY: cls.on_CHECKDATASIGVERIFY,
        }


InterpreterState.bind_handlers()


def _require_true(state: InterpreterState) -> None:
    if not state.stack or not cast_to_bool(state.stack[-1]):
        raise VerifyFailed("script finished without a true top item")


def _as_script(script: Script | bytes) -> Script:
    return script if isinstance(script, Script) else parse_script(script)


def evaluate(
    unlock: Script | bytes, lock: Script | bytes, ctx: VmContext, *, trace: bool = False
) -> VmResult:
    """Run ``unlock`` then ``lock`` and report the outcome with an optional trace."""
    state = InterpreterState(ctx, trace=trace)
    try:
        unlock, lock = _as_script(unlock), _as_script(lock)
        if not unlock.is_push_only():
            raise MalformedScript("unlocking script is not push-only")
        state.evaluate_script(unlock)
        saved = list(state.stack)
        state.evaluate_script(lock)
        _require_true(state)
        if is_p2sh(lock):
            if not saved:
                raise StackUnderflow("P2SH spend has no redeem script")
            inner = parse_script(saved.pop())
            state.stack, state.alt_stack = saved, []
            state.evaluate_script(inner)
            _require_true(state)
    except ScriptError as exc:
        state.failed = True
        logger.debug("script evaluation failed: %s", exc)
        return VmResult(success=False, error=exc.code, trace=state.trace)
    return VmResult(success=True, trace=state.trace)


def eval_script(unlock: Script | bytes, lock: Script | bytes, ctx: VmContext) -> bool:
    """``True`` iff ``unlock`` satisfies ``lock``. Never raises on bad scripts."""
    return evaluate(unlock, lock, ctx).success
