"""The ``arcula`` command.

A wallet directory holds ``hierarchy.json``, ``wallet.pp`` (public parameters) and
``wallet.secrets`` (derivation keys and chain codes sealed under a passphrase). The
seed itself is never written; commands that rebuild state take it again.

Exit codes: 0 success, 1 a verification returned false, 2 bad input, 3 a
cryptographic failure, 4 a damaged file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from . import dynamics
from .config import ArculaConfig
from .dhka import chain_code_table
from .exceptions import ArculaError, AuthFailure, UsageError
from .hierarchy import dump_hierarchy, load_hierarchy
from .script import (
    VmContext,
    audit_scripts,
    evaluate,
    lock_arcula,
    lock_perturbed,
    p2sh_wrap,
    size_table,
    unlinkable_lock,
    unlock_arcula,
    unlock_standard,
)
from .seed import bip44_template, mnemonic_to_seed, paper_test_seed
from .store import SecretBundle, fingerprint, load_pp, load_secrets, save_pp, save_secrets
from .timebound import Interval, timed_wallet_set
from .wallet import (
    Certificate,
    IdentityPublicKey,
    SigningKey,
    WalletSignature,
    WalletState,
    build_state,
    derive_priv,
    derive_pub,
    perturbed_identity,
    wallet_sign,
    wallet_verify,
)

logger = logging.getLogger(__name__)

HIERARCHY_FILE = "hierarchy.json"
PP_FILE = "wallet.pp"
SECRETS_FILE = "wallet.secrets"
TIMED_FILE = "timed.json"
PASSPHRASE_ENV = "ARCULA_PASSPHRASE"


def _hex(value: str, what: str) -> bytes:
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise UsageError(f"{what} is not valid hex") from None


def _emit(args: argparse.Namespace, payload: dict[str, Any]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
        return
    for key, value in payload.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        print(f"{key}: {value}")


def _seed(args: argparse.Namespace) -> bytes:
    if args.seed_hex:
        return _hex(args.seed_hex, "--seed-hex")
    if args.mnemonic:
        return mnemonic_to_seed(args.mnemonic, args.mnemonic_passphrase)
    if args.paper_fixture:
        return paper_test_seed(args.mnemonic_passphrase)
    raise UsageError("one of --seed-hex, --mnemonic or --paper-fixture is required")


def _passphrase(args: argparse.Namespace) -> str:
    value = args.passphrase if args.passphrase is not None else os.environ.get(PASSPHRASE_ENV)
    if value is None:
        raise UsageError(f"a passphrase is required (--passphrase or {PASSPHRASE_ENV})")
    return value


def _write_wallet(state: WalletState, out: Path, passphrase: str, config: ArculaConfig) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    bundle = SecretBundle(
        derivation_keys=state.derivation_keys(),
        chain_codes=chain_code_table(state.hierarchy, state.seed),
    )
    dump_hierarchy(state.hierarchy, out / HIERARCHY_FILE)
    save_pp(state.public_params(), out / PP_FILE)
    save_secrets(bundle, out / SECRETS_FILE, passphrase, config=config)
    return {name: fingerprint(out / name) for name in (HIERARCHY_FILE, PP_FILE, SECRETS_FILE)}


def _load_state(args: argparse.Namespace, config: ArculaConfig) -> WalletState:
    """Rebuild the full state from the stored hierarchy and the seed."""
    pp = load_pp(Path(args.dir) / PP_FILE)
    h = pp.hierarchy
    state = build_state(
        h,
        _seed(args),
        expiries={n: c.expiry for n, c in pp.certs.items() if c.expiry is not None},
        tokens_on_all_edges=len(pp.pub.edge_tokens) == len(h.edges),
        config=config,
    )
    if state.mpk != pp.mpk:
        raise AuthFailure("seed does not belong to this wallet")
    return state


def _signature_payload(ws: WalletSignature) -> dict[str, Any]:
    return {
        "public_point": ws.public_point.hex(),
        "sig": ws.sig.hex(),
        "cert": ws.cert.sig.hex(),
        "expiry": ws.cert.expiry,
    }


# -- commands ----------------------------------------------------------------


def cmd_init(args: argparse.Namespace, config: ArculaConfig) -> int:
    if args.bip44:
        try:
            coins, accounts, addresses = (int(v) for v in args.bip44.split(","))
        except ValueError:
            raise UsageError("--bip44 takes COINS,ACCOUNTS,ADDRESSES") from None
        h = load_hierarchy(bip44_template(coins, accounts, addresses))
    elif args.hierarchy:
        h = load_hierarchy(args.hierarchy)
    else:
        raise UsageError("one of --hierarchy or --bip44 is required")
    state = build_state(h, _seed(args), config=config)
    digests = _write_wallet(state, Path(args.out), _passphrase(args), config)
    logger.info("wallet with %d nodes written to %s", len(h.nodes), args.out)
    _emit(args, {"mpk": state.mpk.hex(), "nodes": len(h.nodes), "fingerprints": digests})
    return 0


def cmd_derive_pub(args: argparse.Namespace, config: ArculaConfig) -> int:
    pp = load_pp(Path(args.dir) / PP_FILE)
    pk = derive_pub(pp, args.node)
    _emit(
        args,
        {
            "node": args.node,
            "mpk": pk.mpk.hex(),
            "label": pk.label.encode().hex(),
            "lock": lock_arcula(pk.mpk, pk.label).hex(),
        },
    )
    return 0


def _signing_key(args: argparse.Namespace, config: ArculaConfig, target: int) -> SigningKey:
    wallet_dir = Path(args.dir)
    pp = load_pp(wallet_dir / PP_FILE)
    bundle = load_secrets(wallet_dir / SECRETS_FILE, _passphrase(args))
    source = pp.hierarchy.root if args.source is None else args.source
    if source not in bundle.derivation_keys:
        raise UsageError(f"no derivation key stored for node {source}")
    return derive_priv(pp, bundle.derivation_keys[source], source, target, config=config)


def cmd_derive_priv(args: argparse.Namespace, config: ArculaConfig) -> int:
    sk = _signing_key(args, config, args.target)
    payload = {"node": sk.node, "public_point": sk.public_point.hex(), "cert": sk.cert.sig.hex()}
    if args.show_secret:
        payload["secret_scalar"] = f"{sk.secret_scalar:064x}"
    _emit(args, payload)
    return 0


def cmd_sign(args: argparse.Namespace, config: ArculaConfig) -> int:
    sk = _signing_key(args, config, args.node)
    payload = _signature_payload(wallet_sign(sk, _hex(args.msg_hex, "--msg-hex")))
    if args.out:
        Path(args.out).write_text(json.dumps(payload, sort_keys=True) + "\n")
    _emit(args, payload)
    return 0


def cmd_verify(args: argparse.Namespace, config: ArculaConfig) -> int:
    pp = load_pp(Path(args.dir) / PP_FILE)
    raw = json.loads(Path(args.sig).read_text())
    ws = WalletSignature(
        public_point=_hex(raw["public_point"], "public_point"),
        sig=_hex(raw["sig"], "sig"),
        cert=Certificate(sig=_hex(raw["cert"], "cert"), expiry=raw.get("expiry")),
    )
    pk: IdentityPublicKey = derive_pub(pp, args.node)
    valid = wallet_verify(pk, _hex(args.msg_hex, "--msg-hex"), ws, current_period=args.period)
    _emit(args, {"valid": valid})
    return 0 if valid else 1


def cmd_emit_script(args: argparse.Namespace, config: ArculaConfig) -> int:
    wallet_dir = Path(args.dir)
    pp = load_pp(wallet_dir / PP_FILE)
    pk = derive_pub(pp, args.node)
    needs_secrets = args.perturbed or args.standard or args.digest
    bundle = load_secrets(wallet_dir / SECRETS_FILE, _passphrase(args)) if needs_secrets else None
    msk = bundle.derivation_keys[pp.hierarchy.root] if bundle else None

    sk = derive_priv(pp, msk, pp.hierarchy.root, args.node, config=config) if msk else None
    if args.standard:
        lock = unlinkable_lock(sk.public_point)
    elif args.perturbed:
        identity = perturbed_identity(
            pp, msk, bundle.chain_codes[args.node], args.node, config=config
        )
        sk = identity.signing_key
        lock = lock_perturbed(identity.mpk)
    else:
        lock = lock_arcula(pk.mpk, pk.label)

    unlock = None
    if args.digest:
        sig = wallet_sign(sk, _hex(args.digest, "--digest")).sig
        if args.standard:
            unlock = unlock_standard(sig, sk.public_point)
        else:
            unlock = unlock_arcula(sig, sk.cert.sig, sk.public_point)
    if args.p2sh:
        inner = lock
        lock, suffix = p2sh_wrap(inner)
        if unlock is not None:
            unlock = unlock + suffix
        payload = {"lock": lock.hex(), "redeem_script": inner.hex()}
    else:
        payload = {"lock": lock.hex()}
    if unlock is not None:
        payload["unlock"] = unlock.hex()
    _emit(args, payload)
    return 0


def cmd_vm_eval(args: argparse.Namespace, config: ArculaConfig) -> int:
    ctx = VmContext(tx_digest=_hex(args.digest, "--digest"))
    result = evaluate(_hex(args.unlock, "--unlock"), _hex(args.lock, "--lock"), ctx)
    _emit(args, {"valid": result.success, "error": result.error})
    return 0 if result.success else 1


def cmd_size_table(args: argparse.Namespace, config: ArculaConfig) -> int:
    rows = size_table(extended=args.all)
    if args.json:
        _emit(args, {name: row.model_dump() for name, row in rows.items()})
        return 0
    print(f"{'script':<18}{'lock':>6}{'unlock':>8}{'total':>7}")
    for name, row in rows.items():
        print(f"{name:<18}{row.lock:>6}{row.unlock:>8}{row.total:>7}")
    return 0


def cmd_mutate(args: argparse.Namespace, config: ArculaConfig) -> int:
    state = _load_state(args, config)
    action = args.action
    if action == "rekey":
        state = dynamics.rekey(state, args.node, config=config)
    elif action == "replace-key":
        state = dynamics.replace_key(state, args.node, config=config)
    elif action == "add-node":
        extra = [tuple(e) for e in args.edge or []]
        state = dynamics.insert_node(state, args.node, args.parent, extra, config=config)
    elif action == "del-node":
        state = dynamics.delete_node(state, args.node, config=config)
    elif action == "add-edge":
        state = dynamics.insert_edge(state, args.source, args.target, config=config)
    elif action == "del-edge":
        state = dynamics.delete_edge(state, args.source, args.target, config=config)
    digests = _write_wallet(state, Path(args.dir), _passphrase(args), config)
    _emit(
        args,
        {
            "action": action,
            "mpk": state.mpk.hex(),
            "nodes": len(state.hierarchy.nodes),
            "tokens": len(state.pub.edge_tokens),
            "fingerprints": digests,
        },
    )
    return 0


def cmd_timed_init(args: argparse.Namespace, config: ArculaConfig) -> int:
    h = load_hierarchy(args.hierarchy)
    raw = json.loads(Path(args.assignments).read_text())
    assignments = {int(node): Interval(start=s, end=e) for node, (s, e) in raw.items()}
    wallet = timed_wallet_set(h, assignments, args.periods, _seed(args), config=config)
    out = Path(args.out)
    digests = _write_wallet(wallet.state, out, _passphrase(args), config)
    timed_doc = {
        "periods": args.periods,
        "root": wallet.timed.hierarchy.root,
        "entries": {str(v): wallet.timed.entry(v) for v in h.nodes},
        "nodes": {
            str(node): [t.base, t.interval.start, t.interval.end]
            for node, t in sorted(wallet.timed.timed_nodes.items())
        },
    }
    (out / TIMED_FILE).write_text(json.dumps(timed_doc, indent=2, sort_keys=True) + "\n")
    _emit(
        args,
        {
            "mpk": wallet.state.mpk.hex(),
            "timed_nodes": len(wallet.timed.hierarchy.nodes),
            "fingerprints": digests,
        },
    )
    return 0


def cmd_audit(args: argparse.Namespace, config: ArculaConfig) -> int:
    mpk = _hex(args.mpk, "--mpk")
    lines = [line.strip() for line in Path(args.scripts).read_text().splitlines()]
    scripts = [_hex(line, f"script {n}") for n, line in enumerate(lines) if line]
    hits = audit_scripts(mpk, scripts)
    _emit(
        args,
        {
            "scripts": len(scripts),
            "matches": [
                {"index": hit.index, "node": hit.label.node_index, "version": hit.label.version}
                for hit in hits
            ],
        },
    )
    return 0


COMMANDS = {
    "init": cmd_init,
    "derive-pub": cmd_derive_pub,
    "derive-priv": cmd_derive_priv,
    "sign": cmd_sign,
    "verify": cmd_verify,
    "emit-script": cmd_emit_script,
    "vm-eval": cmd_vm_eval,
    "size-table": cmd_size_table,
    "mutate": cmd_mutate,
    "timed-init": cmd_timed_init,
    "audit": cmd_audit,
}


# -- parser ------------------------------------------------------------------


def _add_seed_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--seed-hex", help="64-octet wallet seed as hex")
    group.add_argument("--mnemonic", help="BIP39 mnemonic (English)")
    group.add_argument(
        "--paper-fixture",
        action="store_true",
        help="use the 'correct horse battery staple' test mnemonic",
    )
    parser.add_argument("--mnemonic-passphrase", default="", help="BIP39 passphrase")


def _add_passphrase(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--passphrase", help=f"secrets-file passphrase (default: ${PASSPHRASE_ENV})"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arcula",
        description="Hierarchical deterministic wallet over arbitrary access hierarchies.",
    )
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a wallet directory")
    _add_seed_options(p)
    _add_passphrase(p)
    p.add_argument("--hierarchy", help="hierarchy JSON file")
    p.add_argument("--bip44", metavar="C,A,K", help="use the BIP44 template tree")
    p.add_argument("--out", required=True, help="wallet directory to write")

    p = sub.add_parser("derive-pub", help="public identity and lock of a node")
    p.add_argument("--dir", required=True)
    p.add_argument("--node", type=int, required=True)

    p = sub.add_parser("derive-priv", help="derive a node's signing key")
    p.add_argument("--dir", required=True)
    p.add_argument("--from", dest="source", type=int, help="derivation key to use (default: root)")
    p.add_argument("--to", dest="target", type=int, required=True)
    p.add_argument("--show-secret", action="store_true")
    _add_passphrase(p)

    p = sub.add_parser("sign", help="sign a message with a node's key")
    p.add_argument("--dir", required=True)
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--from", dest="source", type=int)
    p.add_argument("--msg-hex", required=True)
    p.add_argument("--out", help="write the signature JSON here")
    _add_passphrase(p)

    p = sub.add_parser("verify", help="verify a wallet signature")
    p.add_argument("--dir", required=True)
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--msg-hex", required=True)
    p.add_argument("--sig", required=True, help="signature JSON file")
    p.add_argument("--period", type=int, help="current period for expiring certificates")

    p = sub.add_parser("emit-script", help="locking script of a node")
    p.add_argument("--dir", required=True)
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--p2sh", action="store_true")
    variant = p.add_mutually_exclusive_group()
    variant.add_argument("--perturbed", action="store_true", help="unlinkable per-node master key")
    variant.add_argument("--standard", action="store_true", help="plain P2PKH on the node key")
    p.add_argument("--digest", help="also emit an honest unlocking script for this digest")
    _add_passphrase(p)

    p = sub.add_parser("vm-eval", help="evaluate an unlock/lock pair")
    p.add_argument("--lock", required=True)
    p.add_argument("--unlock", required=True)
    p.add_argument("--digest", required=True)

    p = sub.add_parser("size-table", help="script sizes per transaction")
    p.add_argument("--all", action="store_true", help="include P2SH and perturbed variants")

    p = sub.add_parser("mutate", help="change the hierarchy of a wallet")
    p.add_argument("--dir", required=True)
    _add_seed_options(p)
    _add_passphrase(p)
    actions = p.add_subparsers(dest="action", required=True)
    for name in ("rekey", "replace-key", "del-node"):
        a = actions.add_parser(name)
        a.add_argument("--node", type=int, required=True)
    a = actions.add_parser("add-node")
    a.add_argument("--node", type=int, required=True)
    a.add_argument("--parent", type=int, required=True)
    a.add_argument("--edge", type=int, nargs=2, action="append", metavar=("I", "J"))
    for name in ("add-edge", "del-edge"):
        a = actions.add_parser(name)
        a.add_argument("--from", dest="source", type=int, required=True)
        a.add_argument("--to", dest="target", type=int, required=True)

    p = sub.add_parser("timed-init", help="create a time-bound wallet")
    _add_seed_options(p)
    _add_passphrase(p)
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--assignments", required=True, help="JSON map node -> [start, end]")
    p.add_argument("--periods", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("audit", help="find the locks that pay to a master key")
    p.add_argument("--mpk", required=True)
    p.add_argument("--scripts", required=True, help="file with one hex script per line")
    return parser


def _fail(code: str, message: str, exit_code: int) -> int:
    print(json.dumps({"error": code, "message": message}, sort_keys=True), file=sys.stderr)
    return exit_code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ArculaConfig.from_env()
    except ValidationError as exc:
        return _fail("invalid_config", str(exc), 2)
    package_logger = logging.getLogger("arcula")
    package_logger.setLevel(logging.DEBUG if args.verbose else config.log_level)
    try:
        return COMMANDS[args.command](args, config)
    except ArculaError as exc:
        return _fail(exc.code, str(exc), exc.exit_code)
    except ValidationError as exc:
        return _fail("invalid_input", str(exc), 2)
    except (KeyError, json.JSONDecodeError) as exc:
        return _fail("invalid_input", f"malformed input: {exc}", 2)
    except OSError as exc:
        return _fail("io_error", str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
