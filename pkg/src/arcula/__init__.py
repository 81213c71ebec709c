"""
Arcula: hierarchical deterministic wallets over arbitrary access hierarchies.

Keys are assigned to the nodes of a DAG so that a node's derivation key yields the
keys of exactly its descendants, and every node is addressed by the master public
key together with its label, so addresses can be generated without any secret.
"""

import logging

from .config import DEFAULT_CONFIG, ArculaConfig
from .dhka import PublicMapping, dhka_derive, dhka_set
from .dynamics import (
    delete_edge,
    delete_node,
    insert_edge,
    insert_node,
    rekey,
    replace_key,
)
from .exceptions import ArculaError
from .hierarchy import (
    AccessHierarchy,
    Label,
    ancestors,
    children,
    descendants,
    label_of,
    load_hierarchy,
    topological_order,
    validate,
)
from .seed import bip44_template, mnemonic_to_seed, paper_test_seed
from .store import SecretBundle, load_pp, load_secrets, save_pp, save_secrets
from .timebound import Interval, derive_period_key, timed_wallet_set
from .wallet import (
    IdentityPublicKey,
    SigningKey,
    WalletPublicParams,
    WalletSignature,
    WalletState,
    build_state,
    derive_priv,
    derive_pub,
    perturbed_identity,
    perturbed_mpk,
    wallet_set,
    wallet_sign,
    wallet_verify,
)

# Set up the Arcula logger
_logger = logging.getLogger("arcula")
# Only add a handler if none exists
if not _logger.handlers:
    _handler = logging.StreamHandler()
    _handler.setFormatter(logging.Formatter("%(name)s: %(levelname)s: %(message)s"))
    _logger.addHandler(_handler)
    _logger.setLevel(logging.INFO)
    _logger.propagate = False

__all__ = [
    "AccessHierarchy",
    "ArculaConfig",
    "ArculaError",
    "DEFAULT_CONFIG",
    "IdentityPublicKey",
    "Interval",
    "Label",
    "PublicMapping",
    "SecretBundle",
    "SigningKey",
    "WalletPublicParams",
    "WalletSignature",
    "WalletState",
    "ancestors",
    "bip44_template",
    "build_state",
    "children",
    "delete_edge",
    "delete_node",
    "derive_period_key",
    "derive_priv",
    "derive_pub",
    "descendants",
    "dhka_derive",
    "dhka_set",
    "insert_edge",
    "insert_node",
    "label_of",
    "load_hierarchy",
    "load_pp",
    "load_secrets",
    "mnemonic_to_seed",
    "paper_test_seed",
    "perturbed_identity",
    "perturbed_mpk",
    "rekey",
    "replace_key",
    "save_pp",
    "save_secrets",
    "timed_wallet_set",
    "topological_order",
    "validate",
    "wallet_set",
    "wallet_sign",
    "wallet_verify",
]
