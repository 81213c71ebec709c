"""Wallet-specific exceptions.

Every error raised by the public API derives from :class:`ArculaError`. Each class
carries a machine-readable ``code`` and the ``exit_code`` the CLI returns for it:
2 for bad input, 3 for cryptographic failures, 4 for corrupted state.
"""

from typing import Any


class ArculaError(Exception):
    """Base class for all errors raised by arcula."""

    code: str = "arcula_error"
    exit_code: int = 1


class UsageError(ArculaError, ValueError):
    """Command-line input is missing or inconsistent."""

    code = "usage_error"
    exit_code = 2


# -- hierarchy ---------------------------------------------------------------


class HierarchyError(ArculaError, ValueError):
    """The access hierarchy is malformed or the requested change is illegal."""

    code = "hierarchy_error"
    exit_code = 2


class EmptyHierarchy(HierarchyError):
    code = "empty_hierarchy"

    def __init__(self) -> None:
        super().__init__("An access hierarchy needs at least one node")


class CycleDetected(HierarchyError):
    code = "cycle_detected"

    def __init__(self, cycle: list[int]) -> None:
        self.cycle = cycle
        super().__init__(f"Edges form a cycle through nodes {cycle!r}")


class DanglingEdge(HierarchyError):
    code = "dangling_edge"

    def __init__(self, edge: tuple[int, int]) -> None:
        self.edge = edge
        super().__init__(f"Edge {edge!r} references a node that is not declared")


class MultipleComponents(HierarchyError):
    code = "multiple_components"

    def __init__(self, minimal: list[int]) -> None:
        self.minimal = minimal
        super().__init__(
            f"Hierarchy has several minimal nodes {minimal!r} and root augmentation is disabled"
        )


class UnknownNode(HierarchyError, LookupError):
    code = "unknown_node"

    def __init__(self, node: Any) -> None:
        self.node = node
        super().__init__(f"Node {node!r} is not part of the hierarchy")


class UnknownEdge(HierarchyError, LookupError):
    code = "unknown_edge"

    def __init__(self, edge: tuple[int, int]) -> None:
        self.edge = edge
        super().__init__(f"Edge {edge!r} is not part of the hierarchy")


class DuplicateNode(HierarchyError):
    code = "duplicate_node"

    def __init__(self, node: int) -> None:
        self.node = node
        super().__init__(f"Node {node!r} already exists")


class DuplicateEdge(HierarchyError):
    code = "duplicate_edge"

    def __init__(self, edge: tuple[int, int]) -> None:
        self.edge = edge
        super().__init__(f"Edge {edge!r} already exists")


class WouldCreateCycle(HierarchyError):
    code = "would_create_cycle"

    def __init__(self, edge: tuple[int, int]) -> None:
        self.edge = edge
        super().__init__(f"Inserting edge {edge!r} would create a cycle")


class CannotDeleteRoot(HierarchyError):
    code = "cannot_delete_root"

    def __init__(self, node: int) -> None:
        self.node = node
        super().__init__(f"Node {node!r} is the root and cannot be deleted")


class InvalidLabel(HierarchyError):
    code = "invalid_label"


class EmptyAssignment(HierarchyError):
    """A node was assigned no time periods, or periods outside ``1..n``."""

    code = "empty_assignment"

    def __init__(self, node: Any, detail: str) -> None:
        self.node = node
        super().__init__(f"Invalid time assignment for node {node!r}: {detail}")


# -- seeds -------------------------------------------------------------------


class SeedError(ArculaError, ValueError):
    code = "seed_error"
    exit_code = 2


class InvalidWord(SeedError):
    code = "invalid_word"

    def __init__(self, word: str) -> None:
        self.word = word
        super().__init__(f"{word!r} is not in the BIP39 English wordlist")


class BadChecksum(SeedError):
    code = "bad_checksum"

    def __init__(self) -> None:
        super().__init__("Mnemonic checksum does not match its entropy")


class InvalidSeed(SeedError):
    code = "invalid_seed"

    def __init__(self, length: int) -> None:
        self.length = length
        super().__init__(f"Wallet seeds are 64 octets, got {length}")


# -- cryptography ------------------------------------------------------------


class CryptoError(ArculaError):
    code = "crypto_error"
    exit_code = 3


class AuthFailure(CryptoError):
    """An AEAD tag did not verify (wrong key or tampered ciphertext)."""

    code = "auth_failure"


class MalformedCiphertext(CryptoError):
    code = "malformed_ciphertext"

    def __init__(self, length: int) -> None:
        self.length = length
        super().__init__(f"Ciphertext of {length} octets is shorter than nonce plus tag")


class DegenerateKey(CryptoError):
    code = "degenerate_key"


class InvalidPoint(CryptoError, ValueError):
    code = "invalid_point"


class InternalError(CryptoError, RuntimeError):
    code = "internal_error"


class DeriveFailure(CryptoError, LookupError):
    """Key derivation between two nodes is impossible."""

    code = "derive_failure"


class NoPath(DeriveFailure):
    code = "no_path"

    def __init__(self, source: int, target: int) -> None:
        self.source = source
        self.target = target
        super().__init__(f"Node {target!r} is not reachable from node {source!r}")


class MissingToken(DeriveFailure):
    code = "missing_token"

    def __init__(self, edge: tuple[int, int]) -> None:
        self.edge = edge
        super().__init__(f"Public mapping has no token for non-parent edge {edge!r}")


# -- scripts -----------------------------------------------------------------


class ScriptError(ArculaError, ValueError):
    """A script cannot be decoded or failed during evaluation.

    The interpreter reports these as a ``False`` result; only script decoding
    surfaces them to callers.
    """

    code = "script_error"
    exit_code = 2


class MalformedScript(ScriptError):
    code = "malformed_script"


class InvalidOpcode(ScriptError):
    code = "invalid_opcode"


class StackUnderflow(ScriptError):
    code = "stack_underflow"


class VerifyFailed(ScriptError):
    code = "verify_failed"


# -- persistence -------------------------------------------------------------


class StoreError(ArculaError):
    code = "store_error"
    exit_code = 4


class CorruptFile(StoreError):
    code = "corrupt_file"

    def __init__(self, path: Any, detail: str) -> None:
        self.path = path
        super().__init__(f"{path}: {detail}")


class WrongPassphrase(StoreError):
    code = "wrong_passphrase"

    def __init__(self, path: Any) -> None:
        self.path = path
        super().__init__(f"{path}: passphrase does not open this secrets file")
