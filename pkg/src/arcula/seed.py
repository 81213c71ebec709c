"""Wallet seeds from BIP39 mnemonics, the reproducible test fixture and the BIP44 tree."""

from __future__ import annotations

import hashlib
import logging
from collections.abc import Sequence
from functools import cache
from typing import Any

from mnemonic import Mnemonic

from .exceptions import BadChecksum, InvalidWord, SeedError

logger = logging.getLogger(__name__)

_FIXTURE_PHRASE = b"correct horse battery staple"
_WORD_COUNTS = frozenset({12, 15, 18, 21, 24})


@cache
def _english() -> Mnemonic:
    return Mnemonic("english")


def _normalize(words: str | Sequence[str]) -> list[str]:
    if isinstance(words, str):
        words = words.split()
    return [w.strip().lower() for w in words]


def mnemonic_to_seed(words: str | Sequence[str], passphrase: str = "") -> bytes:
    """BIP39: PBKDF2-HMAC-SHA512 over the checked mnemonic, 2048 rounds, 64 octets.

    Raises:
        InvalidWord: If a word is not in the English wordlist.
        BadChecksum: If the checksum bits do not match.
    """
    wordlist = _normalize(words)
    known = set(_english().wordlist)
    for word in wordlist:
        if word not in known:
            raise InvalidWord(word)
    if len(wordlist) not in _WORD_COUNTS:
        raise SeedError(f"Mnemonics have 12, 15, 18, 21 or 24 words, got {len(wordlist)}")
    phrase = " ".join(wordlist)
    if not _english().check(phrase):
        raise BadChecksum()
    return Mnemonic.to_seed(phrase, passphrase=passphrase)


def entropy_to_mnemonic(entropy: bytes) -> str:
    """Standard BIP39 encoding of 16 to 32 octets of entropy."""
    if len(entropy) not in (16, 20, 24, 28, 32):
        raise SeedError(f"BIP39 entropy is 16, 20, 24, 28 or 32 octets, got {len(entropy)}")
    return _english().to_mnemonic(entropy)


def paper_test_entropy() -> bytes:
    """``SHA3-256("correct horse battery staple")``: the fixed test-wallet entropy."""
    return hashlib.sha3_256(_FIXTURE_PHRASE).digest()


def paper_test_mnemonic() -> str:
    return entropy_to_mnemonic(paper_test_entropy())


def paper_test_seed(passphrase: str = "") -> bytes:
    return mnemonic_to_seed(paper_test_mnemonic(), passphrase)


def bip44_template(coins: int, accounts: int, addresses: int) -> dict[str, Any]:
    """Hierarchy document for ``root -> purpose -> coin -> account -> address``.

    Ids are assigned breadth first. The tree has
    ``2 + coins * (1 + accounts * (1 + addresses))`` nodes.
    """
    if min(coins, accounts, addresses) < 1:
        raise ValueError("coins, accounts and addresses must all be at least 1")
    edges: list[list[int]] = [[0, 1]]
    level = [1]
    next_id = 2
    for fanout in (coins, accounts, addresses):
        below = []
        for parent in level:
            for _ in range(fanout):
                edges.append([parent, next_id])
                below.append(next_id)
                next_id += 1
        level = below
    logger.debug("bip44 template with %d nodes", next_id)
    return {"nodes": list(range(next_id)), "edges": edges}
