import pytest

from arcula.crypto_prims import hash160, point_from_secret
from arcula.exceptions import MalformedScript
from arcula.hierarchy import Label
from arcula.script import (
    Op,
    PushKind,
    Script,
    ScriptOp,
    arcula_identity,
    audit_scripts,
    is_p2sh,
    lock_arcula,
    lock_perturbed,
    lock_standard,
    nominal_size,
    p2sh_wrap,
    parse_script,
    size_report,
    size_table,
    unlinkable_lock,
    unlock_arcula,
    unlock_standard,
)

PK = point_from_secret(5)
MPK = point_from_secret(7)
SIG = bytes(71)


def test_push_encodings():
    assert ScriptOp.push(b"").serialize() == b"\x00"
    assert ScriptOp.push(b"\xaa" * 75).serialize() == b"\x4b" + b"\xaa" * 75
    assert ScriptOp.push(b"\xaa" * 76).serialize() == b"\x4c\x4c" + b"\xaa" * 76
    assert ScriptOp.push(b"\xaa" * 300).serialize() == b"\x4d\x2c\x01" + b"\xaa" * 300


def test_script_op_shape_is_validated():
    with pytest.raises(ValueError):
        ScriptOp()
    with pytest.raises(ValueError):
        ScriptOp(op=Op.OP_DUP, data=b"x")
    with pytest.raises(ValueError):
        ScriptOp.push(bytes(521))


def test_standard_lock_layout():
    lock = lock_standard(PK)
    assert lock.serialize() == b"\x76\xa9\x14" + hash160(PK) + b"\x88\xac"
    assert str(lock).startswith("OP_DUP OP_HASH160 <")


def test_arcula_lock_layout():
    lock = lock_arcula(MPK, Label(node_index=3))
    expected = b"\x76\x6b\x04\x00\x00\x00\x03\x7e\x21" + MPK + b"\xbb\x6c\xac"
    assert lock.serialize() == expected
    assert lock.hex() == expected.hex()


def test_arcula_lock_with_versioned_label():
    lock = lock_arcula(MPK, Label(node_index=3, version=1))
    assert lock.ops[2].data == b"\x00\x00\x00\x03\x00\x00\x00\x01"


def test_perturbed_lock_drops_the_label():
    lock = lock_perturbed(MPK)
    assert [op.name for op in lock.ops] == [
        "OP_DUP",
        "OP_TOALTSTACK",
        "PUSH(33)",
        "OP_CHECKDATASIGVERIFY",
        "OP_FROMALTSTACK",
        "OP_CHECKSIG",
    ]


def test_unlinkable_lock_is_p2pkh():
    assert unlinkable_lock(PK) == lock_standard(PK)


def test_parse_round_trip_of_emitted_scripts():
    for script in (
        lock_standard(PK),
        lock_arcula(MPK, Label(node_index=9)),
        unlock_arcula(SIG, SIG, PK),
        p2sh_wrap(lock_arcula(MPK, b"\x00\x00\x00\x01"))[0],
    ):
        parsed = parse_script(script.serialize())
        assert parsed.serialize() == script.serialize()
        assert parsed.pushes() == script.pushes()


def test_parse_rejects_malformed_bytes():
    with pytest.raises(MalformedScript):
        parse_script(b"\x05\x00\x00")
    with pytest.raises(MalformedScript):
        parse_script(b"\x4c")
    with pytest.raises(MalformedScript):
        parse_script(b"\xff")


def test_p2sh_wrap():
    inner = lock_arcula(MPK, Label(node_index=1))
    lock, suffix = p2sh_wrap(inner)
    assert is_p2sh(lock)
    assert not is_p2sh(inner)
    assert lock.ops[1].data == hash160(inner.serialize())
    assert suffix.pushes() == [inner.serialize()]
    assert suffix.ops[0].kind == PushKind.SCRIPT


def test_size_table_reproduces_published_figures():
    rows = size_table()
    assert rows["standard"].model_dump() == {"lock": 24, "unlock": 106, "total": 130}
    assert rows["arcula"].model_dump() == {"lock": 43, "unlock": 179, "total": 222}


def test_extended_size_table():
    rows = size_table(extended=True)
    assert rows["arcula-p2sh"].lock == 22
    assert rows["arcula-p2sh"].unlock == 179 + 43
    assert rows["arcula-perturbed"].lock == 38
    assert rows["arcula-perturbed"].unlock == 179


def test_nominal_size_counts_signatures_at_73():
    short_sig = Script.of(ScriptOp.push(bytes(70), PushKind.SIG))
    assert nominal_size(short_sig) == 73
    assert nominal_size(Script.of(ScriptOp.push(bytes(70)))) == 70
    report = size_report(lock_standard(PK), unlock_standard(SIG, PK))
    assert report.total == 130


def test_arcula_identity_extraction():
    label = Label(node_index=12, version=2)
    assert arcula_identity(lock_arcula(MPK, label)) == (MPK, label)
    assert arcula_identity(lock_standard(PK)) is None
    assert arcula_identity(lock_perturbed(MPK)) is None


def test_audit_finds_locks_of_one_master_key():
    other = point_from_secret(11)
    scripts = [
        lock_arcula(MPK, Label(node_index=1)).serialize(),
        lock_standard(PK).serialize(),
        lock_arcula(other, Label(node_index=2)).serialize(),
        b"\xff\xff",
        lock_arcula(MPK, Label(node_index=5, version=1)),
        lock_arcula(MPK, b"\x00\x00\x00\x06" + bytes(4)),
    ]
    hits = audit_scripts(MPK, scripts)
    assert [(h.index, h.label) for h in hits] == [
        (0, Label(node_index=1)),
        (4, Label(node_index=5, version=1)),
    ]
