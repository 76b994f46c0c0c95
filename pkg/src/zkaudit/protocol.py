"""Participant-side operations: records, encrypted tokens and the data flows.

Data moves through four hands.  An owner stores data at a provider, the
provider assigns ownership back to the owner, the owner shares with a user
until an expiry time, and the user accesses it, which notifies the
provider.  Every step yields a publicly verifiable record plus an encrypted
token carrying the commitment opening to the next participant.
"""

from __future__ import annotations

import dataclasses
import enum
import struct
from dataclasses import dataclass
from typing import Callable, ClassVar

from . import primitives as prim
from .merkle import DEFAULT_DEPTH, CommitmentForest, MerkleTree, TreeKind
from .primitives import AddressKeyPair, AddressPublic, DecryptionError, SigKeyPair, field, mimc
from .primitives.ecies import OVERHEAD as CIPHERTEXT_OVERHEAD
from .primitives.schnorr import PUBLIC_KEY_LEN, SIGNATURE_LEN
from .zk import relations as rel
from .zk.bulletproofs import Generators, proof_size

DEFAULT_LABEL = b"zkaudit/bulletproofs/v1"
_LEN = struct.Struct(">I")


class RecordType(enum.IntEnum):
    STORE = 1
    OWN = 2
    SHARE = 3
    ACCESS = 4

    @property
    def tree(self) -> TreeKind:
        return _TREE[self]

    @property
    def relation(self) -> rel.RelationId:
        return _RELATION[self]

    @property
    def source_tree(self) -> TreeKind | None:
        """Tree whose root the record cites, if any."""
        return _SOURCE[self]


_TREE = {
    RecordType.STORE: TreeKind.STORE,
    RecordType.OWN: TreeKind.OWN,
    RecordType.SHARE: TreeKind.SHARE,
    RecordType.ACCESS: TreeKind.ACCESS,
}
_RELATION = {
    RecordType.STORE: rel.RelationId.STORE,
    RecordType.OWN: rel.RelationId.ASSIGN,
    RecordType.SHARE: rel.RelationId.SHARE,
    RecordType.ACCESS: rel.RelationId.ACCESS,
}
_SOURCE = {
    RecordType.STORE: None,
    RecordType.OWN: TreeKind.STORE,
    RecordType.SHARE: TreeKind.OWN,
    RecordType.ACCESS: TreeKind.SHARE,
}


class RecordError(ValueError):
    """Bytes that do not parse as a record."""


class ProtocolError(Exception):
    """A participant cannot carry out the requested operation."""


class TokenError(ProtocolError):
    """The token does not decrypt or parse under the caller's key."""


class UnknownCommitment(ProtocolError):
    """The token's commitment is not in the tree it should have been appended to."""


# --- wire encoding -----------------------------------------------------------

_FIXED = {"sig_key": PUBLIC_KEY_LEN, "signature": SIGNATURE_LEN}
_VARIABLE = frozenset({"proof", "token"})


def _frame(data: bytes) -> bytes:
    return _LEN.pack(len(data)) + data


def _encode_field(name: str, value) -> bytes:
    if name in _VARIABLE:
        return _frame(value)
    if name in _FIXED:
        if len(value) != _FIXED[name]:
            raise ValueError(f"{name} must be {_FIXED[name]} bytes")
        return value
    return field.to_bytes(value)


class Record:
    """Common behaviour of the four record variants."""

    TYPE: ClassVar[RecordType]

    @property
    def cited_root(self) -> int | None:
        return getattr(self, "root", None)

    @property
    def spent_serial(self) -> int | None:
        return getattr(self, "serial", None)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    @property
    def key_hash(self) -> int:
        return prim.hash(self.sig_key)

    def instance(self) -> rel.Instance:
        inst_cls = rel.INSTANCE_TYPES[self.TYPE.relation]
        return inst_cls(*self.statement(), self.key_hash)

    def statement(self) -> list[int]:
        """Public values the proof is about, in relation order, without the key hash."""
        out = [] if self.cited_root is None else [self.cited_root]
        if self.spent_serial is not None:
            out.append(self.spent_serial)
        return out + [self.commitment, self.mac]

    def message(self) -> bytes:
        """The signed bytes: type, statement, key hash, proof, token."""
        parts = [bytes([self.TYPE])]
        parts += [field.to_bytes(x) for x in self.statement()]
        parts.append(field.to_bytes(self.key_hash))
        parts += [_frame(self.proof), _frame(self.token)]
        return b"".join(parts)

    def to_bytes(self) -> bytes:
        return bytes([self.TYPE]) + b"".join(
            _encode_field(name, getattr(self, name)) for name in self.field_names()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Record":
        record = decode_record(data)
        if not isinstance(record, cls):
            raise RecordError(f"expected {cls.__name__}, got {type(record).__name__}")
        return record

    def with_signature(self, signature: bytes) -> "Record":
        return dataclasses.replace(self, signature=signature)


@dataclass(frozen=True)
class StoreRecord(Record):
    TYPE: ClassVar[RecordType] = RecordType.STORE
    sig_key: bytes
    signature: bytes
    commitment: int
    mac: int
    proof: bytes
    token: bytes


@dataclass(frozen=True)
class OwnRecord(Record):
    TYPE: ClassVar[RecordType] = RecordType.OWN
    root: int
    sig_key: bytes
    signature: bytes
    serial: int
    commitment: int
    mac: int
    proof: bytes
    token: bytes


@dataclass(frozen=True)
class ShareRecord(Record):
    TYPE: ClassVar[RecordType] = RecordType.SHARE
    root: int
    sig_key: bytes
    signature: bytes
    commitment: int
    mac: int
    proof: bytes
    token: bytes


@dataclass(frozen=True)
class AccessRecord(Record):
    TYPE: ClassVar[RecordType] = RecordType.ACCESS
    root: int
    sig_key: bytes
    signature: bytes
    commitment: int
    mac: int
    proof: bytes
    token: bytes


RECORD_TYPES: dict[RecordType, type[Record]] = {
    RecordType.STORE: StoreRecord,
    RecordType.OWN: OwnRecord,
    RecordType.SHARE: ShareRecord,
    RecordType.ACCESS: AccessRecord,
}


def decode_record(data: bytes) -> Record:
    data = bytes(data)
    if not data:
        raise RecordError("empty record")
    try:
        cls = RECORD_TYPES[RecordType(data[0])]
    except ValueError:
        raise RecordError(f"unknown record type {data[0]}") from None
    pos = 1
    values = {}
    for name in cls.field_names():
        if name in _VARIABLE:
            if pos + 4 > len(data):
                raise RecordError(f"truncated length of {name}")
            (n,) = _LEN.unpack_from(data, pos)
            pos += 4
            size = n
        else:
            size = _FIXED.get(name, field.FIELD_BYTES)
        chunk = data[pos : pos + size]
        if len(chunk) != size:
            raise RecordError(f"truncated {name}")
        pos += size
        if name in _VARIABLE or name in _FIXED:
            values[name] = chunk
        else:
            try:
                values[name] = field.from_bytes(chunk)
            except ValueError as exc:
                raise RecordError(f"{name}: {exc}") from None
    if pos != len(data):
        raise RecordError("trailing bytes after record")
    return cls(**values)


def canonical_message(record: Record) -> bytes:
    return record.message()


# --- tokens -----------------------------------------------------------------


class Token:
    """Fixed-width tuple of field elements, encrypted to the next participant."""

    TYPE: ClassVar[RecordType]

    def to_bytes(self) -> bytes:
        return b"".join(field.to_bytes(getattr(self, f.name)) for f in dataclasses.fields(self))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Token":
        names = [f.name for f in dataclasses.fields(cls)]
        if len(data) != field.FIELD_BYTES * len(names):
            raise ValueError(f"{cls.__name__} must be {field.FIELD_BYTES * len(names)} bytes")
        chunks = [data[i : i + field.FIELD_BYTES] for i in range(0, len(data), field.FIELD_BYTES)]
        return cls(*(field.from_bytes(c) for c in chunks))

    @classmethod
    def size(cls) -> int:
        return field.FIELD_BYTES * len(dataclasses.fields(cls))


@dataclass(frozen=True, repr=False)
class StoreToken(Token):
    TYPE: ClassVar[RecordType] = RecordType.STORE
    trapdoor: int
    nonce: int
    data_hash: int
    commitment: int

    def fields_for(self, recipient: int) -> list[int]:
        return [recipient, self.nonce, self.data_hash]


@dataclass(frozen=True, repr=False)
class OwnToken(Token):
    TYPE: ClassVar[RecordType] = RecordType.OWN
    trapdoor: int
    data_hash: int
    commitment: int

    def fields_for(self, recipient: int) -> list[int]:
        return [recipient, self.data_hash]


@dataclass(frozen=True, repr=False)
class ShareToken(Token):
    TYPE: ClassVar[RecordType] = RecordType.SHARE
    trapdoor: int
    data_hash: int
    expiry: int
    commitment: int

    def fields_for(self, recipient: int) -> list[int]:
        return [recipient, self.expiry, self.data_hash]


@dataclass(frozen=True, repr=False)
class AccessToken(Token):
    TYPE: ClassVar[RecordType] = RecordType.ACCESS
    trapdoor: int
    data_hash: int
    now: int
    remaining: int
    commitment: int

    def fields_for(self, recipient: int) -> list[int]:
        return [recipient, self.remaining, self.data_hash]


TOKEN_TYPES: dict[RecordType, type[Token]] = {
    RecordType.STORE: StoreToken,
    RecordType.OWN: OwnToken,
    RecordType.SHARE: ShareToken,
    RecordType.ACCESS: AccessToken,
}


def open_token(record_type: RecordType, ciphertext: bytes, keys: AddressKeyPair) -> Token:
    try:
        plain = prim.dec(keys, ciphertext)
    except DecryptionError as exc:
        raise TokenError(str(exc)) from None
    try:
        return TOKEN_TYPES[record_type].from_bytes(plain)
    except ValueError as exc:
        raise TokenError(str(exc)) from None


def recompute_commitment(token: Token, recipient: int) -> int:
    """Commitment the token opens, given the recipient address bound inside it."""
    return prim.commit(token.fields_for(recipient), token.trapdoor).value


def token_matches(token: Token, recipient: int) -> bool:
    return recompute_commitment(token, recipient) == token.commitment


# --- public parameters and init ---------------------------------------------


@dataclass(frozen=True)
class PublicParams:
    """Tree depth and the label the generator vectors are derived from."""

    depth: int = DEFAULT_DEPTH
    label: bytes = DEFAULT_LABEL

    @property
    def generators(self) -> Generators:
        return Generators.shared(self.label)

    def max_gates(self) -> int:
        return max(rel.compile_relation(r, self.depth).num_gates for r in rel.RelationId)

    def proof_len(self, record_type: RecordType) -> int:
        return proof_size(rel.compile_relation(record_type.relation, self.depth).num_gates)

    def record_len(self, record_type: RecordType) -> int:
        cls = RECORD_TYPES[record_type]
        n = 1
        for name in cls.field_names():
            if name == "proof":
                n += 4 + self.proof_len(record_type)
            elif name == "token":
                n += 4 + CIPHERTEXT_OVERHEAD + TOKEN_TYPES[record_type].size()
            else:
                n += _FIXED.get(name, field.FIELD_BYTES)
        return n

    def to_bytes(self) -> bytes:
        """Depth, label and every generator the largest circuit uses."""
        n = 1 << max(0, (self.max_gates() - 1).bit_length())
        gens = self.generators
        return (
            struct.pack(">B", self.depth)
            + _frame(self.label)
            + gens.blinding_base.encode()
            + gens.g(n).encode()
            + gens.h(n).encode()
        )


def init(max_ops: int, depth: int = DEFAULT_DEPTH, replicas: int = 1, label: bytes = DEFAULT_LABEL):
    """Four empty trees, an empty serial set and the public parameters."""
    from .ledger import Ledger

    if max_ops < 1 or max_ops & (max_ops - 1):
        raise ValueError("max_ops must be a power of two")
    if max_ops > 1 << depth:
        raise ValueError(f"max_ops {max_ops} exceeds tree capacity 2**{depth}")
    params = PublicParams(depth, label)
    return Ledger(params, replicas=replicas, max_ops=max_ops), params


def register(rng=None) -> AddressKeyPair:
    return AddressKeyPair.generate(rng)


# --- operations --------------------------------------------------------------

BlobSink = Callable[[int, bytes], None]


class MemoryBlobSink:
    """Stand-in for the off-ledger data channel: keeps blobs keyed by their hash."""

    def __init__(self):
        self.blobs: dict[int, bytes] = {}

    def __call__(self, data_hash: int, data: bytes) -> None:
        self.blobs[data_hash] = data


def _as_forest(view) -> CommitmentForest:
    return view if isinstance(view, CommitmentForest) else view.view()


def _locate(tree: MerkleTree, commitment: int, what: str):
    try:
        index = tree.index_of(commitment)
    except KeyError:
        raise UnknownCommitment(f"{what} commitment is not on the ledger") from None
    return tree.prove_membership(index), tree.root


def _token(record_type: RecordType, token, keys: AddressKeyPair) -> Token:
    if isinstance(token, Token):
        if token.TYPE is not record_type:
            raise TokenError(f"expected a {record_type.name.lower()} token")
        return token
    return open_token(record_type, token, keys)


def _finish(record_cls, params: PublicParams, actor_key: int, witness, plain: Token, recipient: AddressPublic, rng, **public):
    sig = SigKeyPair.generate(rng)
    key_hash = prim.hash(sig.public)
    mac = mimc.prf(mimc.Role.MAC, actor_key, key_hash)
    draft = record_cls(sig_key=sig.public, signature=bytes(SIGNATURE_LEN), mac=mac, proof=b"", token=b"", **public)
    proof = rel.prove(
        record_cls.TYPE.relation, draft.instance(), witness, params.depth, rng=rng, gens=params.generators
    )
    ct = prim.enc(recipient, plain.to_bytes(), rng)
    draft = dataclasses.replace(draft, proof=proof.to_bytes(), token=ct)
    return ct, draft.with_signature(prim.sign(sig, draft.message()))


def store(
    data: bytes,
    owner: AddressKeyPair,
    provider: AddressPublic,
    params: PublicParams,
    rng=None,
    sink: BlobSink | None = None,
) -> tuple[bytes, StoreRecord]:
    """Owner logs that ``data`` now sits with ``provider``; only its hash enters the record."""
    data_hash = prim.hash(data)
    if sink is not None:
        sink(data_hash, data)
    nonce = field.random_element(rng)
    trapdoor = field.random_element(rng)
    cm = prim.commit([provider.pk_adr, nonce, data_hash], trapdoor).value
    witness = rel.StoreWitness(provider.pk_adr, trapdoor, nonce, data_hash, owner.secret)
    plain = StoreToken(trapdoor, nonce, data_hash, cm)
    return _finish(StoreRecord, params, owner.secret, witness, plain, provider, rng, commitment=cm)


def assign_owner(
    store_token: bytes | StoreToken,
    provider: AddressKeyPair,
    owner: AddressPublic,
    view,
    params: PublicParams,
    rng=None,
) -> tuple[bytes, OwnRecord]:
    """Provider acknowledges ``owner`` as the owner of the stored data, exactly once."""
    tok = _token(RecordType.STORE, store_token, provider)
    forest = _as_forest(view)
    path, root = _locate(forest[TreeKind.STORE], tok.commitment, "store")
    serial = mimc.prf(mimc.Role.SERIAL, provider.secret, tok.nonce)
    new_trapdoor = field.random_element(rng)
    cm = prim.commit([owner.pk_adr, tok.data_hash], new_trapdoor).value
    witness = rel.AssignWitness(
        path, tok.trapdoor, tok.nonce, tok.data_hash, provider.secret, owner.pk_adr, new_trapdoor
    )
    plain = OwnToken(new_trapdoor, tok.data_hash, cm)
    return _finish(OwnRecord, params, provider.secret, witness, plain, owner, rng, root=root, serial=serial, commitment=cm)


def share(
    own_token: bytes | OwnToken,
    owner: AddressKeyPair,
    user: AddressPublic,
    expiry: int,
    view,
    params: PublicParams,
    rng=None,
) -> tuple[bytes, ShareRecord]:
    """Owner grants ``user`` access until ``expiry``; the own token can be reused."""
    tok = _token(RecordType.OWN, own_token, owner)
    forest = _as_forest(view)
    path, root = _locate(forest[TreeKind.OWN], tok.commitment, "ownership")
    new_trapdoor = field.random_element(rng)
    cm = prim.commit([user.pk_adr, expiry, tok.data_hash], new_trapdoor).value
    witness = rel.ShareWitness(path, tok.trapdoor, tok.data_hash, owner.secret, user.pk_adr, expiry, new_trapdoor)
    plain = ShareToken(new_trapdoor, tok.data_hash, expiry % field.MODULUS, cm)
    return _finish(ShareRecord, params, owner.secret, witness, plain, user, rng, root=root, commitment=cm)


def access(
    share_token: bytes | ShareToken,
    user: AddressKeyPair,
    provider: AddressPublic,
    now: int,
    view,
    params: PublicParams,
    rng=None,
) -> tuple[bytes, AccessRecord]:
    """User requests the data at time ``now``; proving fails unless ``0 < now < expiry``."""
    tok = _token(RecordType.SHARE, share_token, user)
    forest = _as_forest(view)
    path, root = _locate(forest[TreeKind.SHARE], tok.commitment, "share")
    new_trapdoor = field.random_element(rng)
    remaining = (tok.expiry - now) % field.MODULUS
    cm = prim.commit([provider.pk_adr, remaining, tok.data_hash], new_trapdoor).value
    witness = rel.AccessWitness(
        path, tok.expiry, tok.trapdoor, tok.data_hash, user.secret, provider.pk_adr, now, new_trapdoor
    )
    plain = AccessToken(new_trapdoor, tok.data_hash, now % field.MODULUS, remaining, cm)
    return _finish(AccessRecord, params, user.secret, witness, plain, provider, rng, root=root, commitment=cm)


__all__ = [
    "AccessRecord",
    "AccessToken",
    "BlobSink",
    "MemoryBlobSink",
    "OwnRecord",
    "OwnToken",
    "ProtocolError",
    "PublicParams",
    "RECORD_TYPES",
    "Record",
    "RecordError",
    "RecordType",
    "ShareRecord",
    "ShareToken",
    "StoreRecord",
    "StoreToken",
    "TOKEN_TYPES",
    "Token",
    "TokenError",
    "UnknownCommitment",
    "access",
    "assign_owner",
    "canonical_message",
    "decode_record",
    "init",
    "open_token",
    "recompute_commitment",
    "register",
    "share",
    "store",
    "token_matches",
]
