import dataclasses
import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from zkaudit import primitives as prim
from zkaudit.ledger import Ledger
from zkaudit.merkle import TreeKind
from zkaudit.primitives import AddressKeyPair, field
from zkaudit.protocol import (
    RECORD_TYPES,
    TOKEN_TYPES,
    AccessToken,
    MemoryBlobSink,
    OwnRecord,
    PublicParams,
    RecordError,
    RecordType,
    ShareToken,
    StoreRecord,
    TokenError,
    UnknownCommitment,
    access,
    assign_owner,
    decode_record,
    init,
    open_token,
    recompute_commitment,
    register,
    share,
    store,
    token_matches,
)
from zkaudit.zk.r1cs import UnsatisfiedError

fast = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


def test_chain_accepted_everywhere(chain):
    assert [v.label for v in chain.verdicts] == ["accepted"] * 4
    assert len({node.export() for node in chain.ledger.nodes}) == 1


def test_record_types_and_trees():
    assert [t.tree for t in RecordType] == list(TreeKind)
    assert RecordType.STORE.source_tree is None
    assert RecordType.ACCESS.source_tree is TreeKind.SHARE
    assert RecordType.OWN.relation.name == "ASSIGN"


def test_record_lengths_match_params(chain, params):
    for rec in chain.records:
        assert len(rec.to_bytes()) == params.record_len(rec.TYPE)
        assert len(rec.proof) == params.proof_len(rec.TYPE)


def test_record_roundtrip(chain):
    for rec in chain.records:
        assert decode_record(rec.to_bytes()) == rec
        assert type(rec).from_bytes(rec.to_bytes()) == rec
    with pytest.raises(RecordError):
        OwnRecord.from_bytes(chain.rec_str.to_bytes())


def test_statement_shapes(chain):
    assert chain.rec_str.cited_root is None and chain.rec_str.spent_serial is None
    assert chain.rec_own.spent_serial is not None
    assert len(chain.rec_own.statement()) == 4
    assert chain.rec_acc.instance().public_inputs()[-1] == prim.hash(chain.rec_acc.sig_key)


def test_message_covers_type_and_every_field(chain):
    rec = chain.rec_shr
    # same field values under another type tag must sign differently
    as_access = RECORD_TYPES[RecordType.ACCESS](**{f.name: getattr(rec, f.name) for f in dataclasses.fields(rec)})
    assert as_access.message() != rec.message()
    for name in ("root", "commitment", "mac", "sig_key"):
        value = getattr(rec, name)
        other = bytes(32) if isinstance(value, bytes) else (value + 1) % field.MODULUS
        assert dataclasses.replace(rec, **{name: other}).message() != rec.message()
    assert dataclasses.replace(rec, proof=rec.proof + b"x").message() != rec.message()
    assert dataclasses.replace(rec, token=rec.token[:-1]).message() != rec.message()
    # the signature itself is not signed
    assert dataclasses.replace(rec, signature=bytes(64)).message() == rec.message()


@pytest.mark.parametrize("cut", [0, 1, 20, 100, -1])
def test_decode_rejects_truncation(chain, cut):
    data = chain.rec_own.to_bytes()
    with pytest.raises(RecordError):
        decode_record(data[:cut])


def test_decode_rejects_trailing_and_unknown_type(chain):
    data = chain.rec_str.to_bytes()
    with pytest.raises(RecordError):
        decode_record(data + b"\0")
    with pytest.raises(RecordError):
        decode_record(b"\x09" + data[1:])
    with pytest.raises(RecordError):
        decode_record(b"")


def test_decode_rejects_noncanonical_field(chain):
    data = bytearray(chain.rec_str.to_bytes())
    start = 1 + 32 + 64  # commitment follows sig_key and signature
    data[start : start + 32] = (field.MODULUS + 1).to_bytes(32, "little")
    with pytest.raises(RecordError):
        decode_record(bytes(data))


@fast
@given(st.binary(max_size=1700))
def test_decode_is_strict_on_arbitrary_bytes(chain, data):
    try:
        rec = decode_record(data)
    except RecordError:
        return
    assert rec.to_bytes() == data


@fast
@given(st.integers(min_value=0), st.integers(min_value=0, max_value=255))
def test_decode_after_byte_edit_is_canonical_or_rejected(chain, pos, mask):
    data = bytearray(chain.rec_acc.to_bytes())
    data[pos % len(data)] ^= mask
    try:
        rec = decode_record(bytes(data))
    except RecordError:
        return
    assert rec.to_bytes() == bytes(data)


def test_tokens_open_for_their_recipient_only(chain):
    cases = [
        (chain.rec_str, chain.provider, chain.owner),
        (chain.rec_own, chain.owner, chain.user),
        (chain.rec_shr, chain.user, chain.owner),
        (chain.rec_acc, chain.provider, chain.user),
    ]
    for rec, recipient, other in cases:
        tok = open_token(rec.TYPE, rec.token, recipient)
        assert isinstance(tok, TOKEN_TYPES[rec.TYPE])
        assert tok.commitment == rec.commitment
        assert token_matches(tok, recipient.pk_adr)
        assert recompute_commitment(tok, recipient.pk_adr) == rec.commitment
        assert not token_matches(tok, other.pk_adr)
        with pytest.raises(TokenError):
            open_token(rec.TYPE, rec.token, other)
        assert f"{tok.trapdoor}" not in repr(tok)


def test_token_contents(chain):
    shr = open_token(RecordType.SHARE, chain.rec_shr.token, chain.user)
    assert isinstance(shr, ShareToken) and shr.expiry == 9 and shr.data_hash == prim.hash(chain.data)
    acc = open_token(RecordType.ACCESS, chain.rec_acc.token, chain.provider)
    assert isinstance(acc, AccessToken) and (acc.now, acc.remaining) == (3, 6)


def test_token_of_wrong_type_is_refused(chain, params):
    tok = open_token(RecordType.SHARE, chain.rec_shr.token, chain.user)
    with pytest.raises(TokenError):
        share(tok, chain.owner, chain.user.public, 5, chain.ledger, params)
    with pytest.raises(TokenError):
        open_token(RecordType.OWN, chain.rec_shr.token, chain.user)
    with pytest.raises(ValueError):
        TOKEN_TYPES[RecordType.OWN].from_bytes(b"\0" * 10)


def test_token_for_unlogged_commitment(chain, params, rng):
    tok = open_token(RecordType.OWN, chain.rec_own.token, chain.owner)
    fake = dataclasses.replace(tok, commitment=field.random_element(rng))
    with pytest.raises(UnknownCommitment):
        share(fake, chain.owner, chain.user.public, 5, chain.ledger, params, rng)


def test_tampered_opening_cannot_be_proven(chain, params, rng):
    tok = open_token(RecordType.OWN, chain.rec_own.token, chain.owner)
    bad = dataclasses.replace(tok, data_hash=tok.data_hash + 1)
    with pytest.raises(UnsatisfiedError):
        share(bad, chain.owner, chain.user.public, 5, chain.ledger, params, rng)


def test_only_the_recipient_key_can_use_a_token(chain, params, rng):
    # the stranger cannot decrypt the share token addressed to the user
    with pytest.raises(TokenError):
        access(chain.rec_shr.token, chain.stranger, chain.provider.public, 2, chain.ledger, params, rng)
    # given the plaintext anyway, the stranger's key does not open the commitment
    tok = open_token(RecordType.SHARE, chain.rec_shr.token, chain.user)
    with pytest.raises(UnsatisfiedError):
        access(tok, chain.stranger, chain.provider.public, 2, chain.ledger, params, rng)


@pytest.mark.parametrize("now", [0, 9, 10])
def test_access_outside_window_is_unprovable(chain, params, rng, now):
    with pytest.raises(UnsatisfiedError):
        access(chain.tk_shr, chain.user, chain.provider.public, now, chain.ledger, params, rng)


def test_blob_sink_gets_the_data(params, rng):
    sink = MemoryBlobSink()
    owner, provider = register(rng), register(rng)
    _, rec = store(b"payload", owner, provider.public, params, rng, sink)
    assert sink.blobs == {prim.hash(b"payload"): b"payload"}
    assert isinstance(rec, StoreRecord)


def test_init_validates_and_builds_empty_state():
    ledger, params = init(16, depth=4, replicas=2)
    assert params == PublicParams(4)
    assert len(ledger.nodes) == 2 and ledger.height == 0
    assert all(len(ledger.view()[k]) == 0 for k in TreeKind)
    for bad in (0, 3, 32):
        with pytest.raises(ValueError):
            init(bad, depth=4)


def test_public_params_serialisation(params):
    data = params.to_bytes()
    n = 8192  # padded size of the largest relation at depth 4
    assert data[0] == 4
    assert len(data) == 1 + 4 + len(params.label) + 32 + 64 * n


def test_assign_uses_store_token_bytes_or_object(params, rng):
    owner, provider = AddressKeyPair.generate(rng), AddressKeyPair.generate(rng)
    ledger = Ledger(params)
    ct, rec = store(b"x", owner, provider.public, params, rng)
    assert ledger.submit_and_seal(rec)
    tok = open_token(RecordType.STORE, ct, provider)
    _, a = assign_owner(ct, provider, owner.public, ledger, params, random.Random(1))
    _, b = assign_owner(tok, provider, owner.public, ledger, params, random.Random(1))
    assert a == b
    assert a.serial == b.serial
