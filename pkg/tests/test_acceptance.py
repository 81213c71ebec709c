"""Corpus-level checks. The full-size variants are marked slow; the default run
covers the same properties on smaller corpora."""

import hashlib
import random

import pytest

from arcula.crypto_prims import (
    ORDER,
    KeyPair,
    PrfTag,
    perturb_public,
    perturb_secret,
    point_from_secret,
    prf,
    scalar_from_bytes,
    sign_msg,
)
from arcula.dhka import chain_code_table, dhka_derive, dhka_set
from arcula.exceptions import NoPath
from arcula.hierarchy import load_hierarchy, validate
from arcula.script import (
    VmContext,
    eval_script,
    lock_arcula,
    lock_perturbed,
    p2sh_wrap,
    unlock_arcula,
)
from arcula.seed import bip44_template, paper_test_seed
from arcula.store import SecretBundle, encode_pp, encode_secrets
from arcula.wallet import (
    Certificate,
    WalletSignature,
    build_state,
    certificate_message,
    derive_priv,
    derive_pub,
    master_keypair,
    perturbed_identity,
    wallet_set,
    wallet_sign,
    wallet_verify,
)
from tests.dag_corpus import (
    bfs_reachable,
    corpus,
    random_assignments,
    random_dag,
    random_mutation,
    reachable_pairs,
    rebuilt,
    timed_soundness_mismatches,
)

DIGEST = hashlib.sha256(b"acceptance spend").digest()
CTX = VmContext(tx_digest=DIGEST)
MESSAGE = b"acceptance message"

CORPORA = [
    pytest.param(25, 20, 40, id="quick"),
    pytest.param(200, 50, 120, id="full", marks=pytest.mark.slow),
]


@pytest.mark.parametrize(("count", "max_nodes", "max_edges"), CORPORA)
def test_derive_agrees_with_set(seed, count, max_nodes, max_edges):
    mismatches = []
    for k, h in enumerate(corpus(count, max_nodes=max_nodes, max_edges=max_edges)):
        pub, secrets = dhka_set(h, seed)
        assert len(pub.edge_tokens) == len(h.edges) - (len(h.nodes) - 1)
        for i, j in reachable_pairs(h):
            if dhka_derive(h, pub, i, j, secrets[i].secret) != secrets[j].key:
                mismatches.append((k, i, j))
    assert mismatches == []


@pytest.mark.parametrize(
    ("count", "max_nodes", "max_edges"),
    [
        pytest.param(6, 10, 20, id="quick"),
        pytest.param(200, 50, 120, id="full", marks=pytest.mark.slow),
    ],
)
def test_sign_verify_for_every_reachable_pair(seed, count, max_nodes, max_edges):
    failures = []
    for k, h in enumerate(corpus(count, max_nodes=max_nodes, max_edges=max_edges)):
        pp, keys = wallet_set(h, seed)
        for i, j in reachable_pairs(h):
            ws = wallet_sign(derive_priv(pp, keys[i], i, j), MESSAGE)
            if not wallet_verify(derive_pub(pp, j), MESSAGE, ws):
                failures.append((k, i, j))
    assert failures == []


def test_fixture_wallet_is_bitwise_reproducible(fast_config):
    h = load_hierarchy(bip44_template(1, 2, 3))

    def files():
        seed = paper_test_seed()
        state = build_state(h, seed)
        bundle = SecretBundle(
            derivation_keys=state.derivation_keys(), chain_codes=chain_code_table(h, seed)
        )
        return encode_pp(state.public_params()), encode_secrets(
            bundle, "staple", config=fast_config
        )

    assert files() == files()


@pytest.mark.parametrize(
    "steps",
    [pytest.param(40, id="quick"), pytest.param(500, id="full", marks=pytest.mark.slow)],
)
def test_mutation_fuzz_keeps_token_law_and_rebuild_equivalence(seed, steps):
    rng = random.Random(2019)
    state = build_state(corpus(1, seed=5, max_nodes=10, max_edges=20)[0], seed)
    for step in range(steps):
        action, state = random_mutation(rng, state)
        h = state.hierarchy
        assert len(state.pub.edge_tokens) == len(h.edges) - (len(h.nodes) - 1), (step, action)
        assert rebuilt(state).model_dump() == state.model_dump(), (step, action)


# -- scripts -----------------------------------------------------------------


@pytest.fixture(scope="module")
def template_wallet(seed):
    state = build_state(load_hierarchy(bip44_template(1, 2, 3)), seed)
    return state.public_params(), state.msk, chain_code_table(state.hierarchy, seed)


def _witness(sk):
    return wallet_sign(sk, DIGEST).sig, sk.cert.sig, sk.public_point


def _substituted(honest, other):
    """One unlock per pushed field, with that field taken from ``other``."""
    out = []
    for k in range(3):
        fields = list(honest)
        fields[k] = other[k]
        out.append(unlock_arcula(*fields))
    return out


def test_every_node_spends_plain_and_p2sh_locks(template_wallet):
    pp, msk, _ = template_wallet
    h = pp.hierarchy
    foreign = point_from_secret(3)
    for pos, j in enumerate(h.nodes):
        k = h.nodes[(pos + 1) % len(h.nodes)]
        honest = _witness(derive_priv(pp, msk, h.root, j))
        other = _witness(derive_priv(pp, msk, h.root, k))
        lock = lock_arcula(pp.mpk, h.label(j))
        bad_locks = [lock_arcula(pp.mpk, h.label(k)), lock_arcula(foreign, h.label(j))]

        assert eval_script(unlock_arcula(*honest), lock, CTX), j
        for unlock in _substituted(honest, other):
            assert not eval_script(unlock, lock, CTX), j
        for bad in bad_locks:
            assert not eval_script(unlock_arcula(*honest), bad, CTX), j

        outer, suffix = p2sh_wrap(lock)
        assert eval_script(unlock_arcula(*honest) + suffix, outer, CTX), j
        for unlock in _substituted(honest, other):
            assert not eval_script(unlock + suffix, outer, CTX), j
        for bad in bad_locks:
            assert not eval_script(unlock_arcula(*honest) + p2sh_wrap(bad)[1], outer, CTX), j


def test_every_node_spends_perturbed_locks(template_wallet):
    pp, msk, codes = template_wallet
    h = pp.hierarchy

    def identity(node):
        ident = perturbed_identity(pp, msk, codes[node], node)
        return ident, _witness(ident.signing_key)

    for pos, j in enumerate(h.nodes):
        k = h.nodes[(pos + 1) % len(h.nodes)]
        ident, honest = identity(j)
        other_ident, other = identity(k)
        lock = lock_perturbed(ident.mpk)

        assert eval_script(unlock_arcula(*honest), lock, CTX), j
        for unlock in _substituted(honest, other):
            assert not eval_script(unlock, lock, CTX), j
        for bad in (lock_perturbed(other_ident.mpk), lock_perturbed(pp.mpk)):
            assert not eval_script(unlock_arcula(*honest), bad, CTX), j


@pytest.mark.parametrize(
    "count",
    [pytest.param(100, id="quick"), pytest.param(1000, id="full", marks=pytest.mark.slow)],
)
def test_perturbation_algebra_over_random_labels(template_wallet, count):
    pp, msk, _ = template_wallet
    master = master_keypair(pp, msk)
    rng = random.Random(65)
    for _ in range(count):
        chain_code = rng.randbytes(32)
        label = rng.randbytes(rng.choice((4, 8)))
        secret = perturb_secret(master.secret_scalar, chain_code, label)
        assert point_from_secret(secret) == perturb_public(pp.mpk, chain_code, label)
        offset = scalar_from_bytes(prf(chain_code, PrfTag.SECRET, label))
        assert (secret - offset) % ORDER == master.secret_scalar


# -- time-bound wallets ------------------------------------------------------


@pytest.mark.parametrize(
    ("instances", "max_nodes", "max_periods"),
    [
        pytest.param(4, 3, 4, id="quick"),
        pytest.param(30, 6, 6, id="full", marks=pytest.mark.slow),
    ],
)
def test_period_derivation_matches_reachability(seed, instances, max_nodes, max_periods):
    rng = random.Random(6)
    for _ in range(instances):
        h = validate(*random_dag(rng, max_nodes=max_nodes, max_edges=2 * max_nodes))
        n = rng.randint(1, max_periods)
        assert timed_soundness_mismatches(h, random_assignments(rng, h, n), n, seed) == []


# -- security properties -----------------------------------------------------


def test_derive_priv_fails_outside_every_cone(seed):
    for h in corpus(8, max_nodes=12, max_edges=24):
        pp, keys = wallet_set(h, seed)
        for i in h.nodes:
            below = bfs_reachable(h, i)
            for j in h.nodes:
                if j in below:
                    continue
                with pytest.raises(NoPath):
                    derive_priv(pp, keys[i], i, j)


def test_forged_certificates_never_verify(seed):
    rng = random.Random(51)
    for h in corpus(4, max_nodes=8, max_edges=14):
        pp, keys = wallet_set(h, seed)
        for j in h.nodes:
            label = h.label_bytes(j)
            rogue = KeyPair.from_secret(rng.randrange(1, ORDER))
            self_signed = Certificate(
                sig=sign_msg(rogue, certificate_message(rogue.public_point, label))
            )
            forged = WalletSignature(
                public_point=rogue.public_point, sig=sign_msg(rogue, MESSAGE), cert=self_signed
            )
            assert not wallet_verify(derive_pub(pp, j), MESSAGE, forged)

            sk = derive_priv(pp, keys[h.root], h.root, j)
            node_signed = Certificate(
                sig=sign_msg(sk.keypair, certificate_message(sk.public_point, label))
            )
            honest = wallet_sign(sk, MESSAGE)
            assert wallet_verify(derive_pub(pp, j), MESSAGE, honest) is True
            relabelled = honest.model_copy(update={"cert": node_signed})
            if sk.public_point != pp.mpk:
                assert not wallet_verify(derive_pub(pp, j), MESSAGE, relabelled)


def test_node_keys_are_distinct_and_avalanche(seed):
    h = corpus(1, seed=9, max_nodes=25, max_edges=50)[0]
    base = build_state(h, seed).public_keys
    assert len(set(base.values())) == len(base)
    rng = random.Random(1)
    for bit in rng.sample(range(len(seed) * 8), 6):
        flipped = bytearray(seed)
        flipped[bit // 8] ^= 1 << (bit % 8)
        keys = build_state(h, bytes(flipped)).public_keys
        assert all(keys[n] != base[n] for n in h.nodes), bit
