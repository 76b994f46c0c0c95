"""Replicated audit-log simulator.

A single sequencer orders submissions FIFO into blocks; every node verifies
each record independently against its own replica and applies accepted ones
in order, so honest replicas stay byte-identical.
"""

from __future__ import annotations

import enum
import io
import json
import struct
import threading
from collections import deque
from dataclasses import dataclass, field as dc_field, fields as dc_fields
from typing import IO, Iterable

from .merkle import CommitmentForest, SnapshotError, TreeKind
from .primitives import AddressKeyPair, verify_sig
from .protocol import (
    PublicParams,
    Record,
    RecordError,
    RecordType,
    TokenError,
    decode_record,
    open_token,
    recompute_commitment,
)
from .zk import relations as rel

DEFAULT_BLOCK_SIZE = 10
DEFAULT_QUEUE_LIMIT = 10_000
LEDGER_MAGIC = b"ZKAL"
LEDGER_VERSION = 1


class Reason(enum.Enum):
    MALFORMED = "malformed"
    DUPLICATE_SERIAL = "duplicate-serial"
    UNKNOWN_ROOT = "unknown-root"
    BAD_SIGNATURE = "bad-signature"
    BAD_PROOF = "bad-proof"
    # ledger-level, not part of record validity
    QUEUE_FULL = "queue-full"
    TREE_FULL = "tree-full"


class RootPolicy(enum.Enum):
    ANY = "any"
    LATEST = "latest"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: Reason | None = None

    def __bool__(self) -> bool:
        return self.accepted

    @property
    def label(self) -> str:
        return "accepted" if self.accepted else f"rejected({self.reason.value})"


ACCEPT = Verdict(True)


def verify_record(
    tx: Record | bytes,
    forest: CommitmentForest,
    params: PublicParams,
    policy: RootPolicy = RootPolicy.ANY,
) -> Verdict:
    """Pure check of one record against a replica state; never raises on bad input."""
    if not isinstance(tx, Record):
        try:
            tx = decode_record(tx)
        except RecordError:
            return Verdict(False, Reason.MALFORMED)
    if tx.spent_serial is not None and tx.spent_serial in forest.serials:
        return Verdict(False, Reason.DUPLICATE_SERIAL)
    source = tx.TYPE.source_tree
    if source is not None:
        tree = forest[source]
        ok = tree.is_known_root(tx.cited_root) if policy is RootPolicy.ANY else tx.cited_root == tree.root
        if not ok:
            return Verdict(False, Reason.UNKNOWN_ROOT)
    if not verify_sig(tx.sig_key, tx.message(), tx.signature):
        return Verdict(False, Reason.BAD_SIGNATURE)
    if not rel.verify(tx.TYPE.relation, tx.instance(), tx.proof, params.depth, gens=params.generators):
        return Verdict(False, Reason.BAD_PROOF)
    return ACCEPT


def _apply(forest: CommitmentForest, tx: Record) -> int:
    index, _ = forest[tx.TYPE.tree].append(tx.commitment)
    if tx.spent_serial is not None:
        forest.serials.record(tx.spent_serial)
    return index


@dataclass(frozen=True)
class LoggedRecord:
    seq: int
    block: int
    leaf_index: int
    record: Record


@dataclass(frozen=True)
class Block:
    height: int
    records: tuple[Record, ...]
    verdicts: tuple[Verdict, ...]
    roots: tuple[int, int, int, int]

    @property
    def accepted(self) -> tuple[Record, ...]:
        return tuple(r for r, v in zip(self.records, self.verdicts) if v)


class ReplicaDivergence(RuntimeError):
    """Two replicas reached different verdicts or states for the same block."""


class Node:
    """One verifier with its own forest replica and accepted-record log."""

    def __init__(self, node_id: int, params: PublicParams, policy: RootPolicy, max_ops: int):
        self.node_id = node_id
        self.params = params
        self.policy = policy
        self.max_ops = max_ops
        self.forest = CommitmentForest(params.depth)
        self.log: list[LoggedRecord] = []

    def process(self, height: int, batch: Iterable[Record]) -> list[Verdict]:
        verdicts = []
        for tx in batch:
            if len(self.forest[tx.TYPE.tree]) >= self.max_ops:
                verdict = Verdict(False, Reason.TREE_FULL)
            else:
                verdict = verify_record(tx, self.forest, self.params, self.policy)
            if verdict:
                index = _apply(self.forest, tx)
                self.log.append(LoggedRecord(len(self.log), height, index, tx))
            verdicts.append(verdict)
        return verdicts

    def export(self) -> bytes:
        return _export(self.params, self.forest, self.log)


@dataclass(frozen=True)
class Submission:
    queued: bool
    ticket: int | None = None
    reason: Reason | None = None


@dataclass
class AuditReport:
    seq: int
    record_type: str
    verdict: str
    token: dict = dc_field(default_factory=dict)
    recomputed: str | None = None
    on_ledger: str | None = None
    in_tree: str | None = None

    @property
    def match(self) -> bool:
        return self.verdict == "match"

    def as_dict(self) -> dict:
        return {
            "seq": self.seq,
            "record_type": self.record_type,
            "verdict": self.verdict,
            "token": self.token,
            "recomputed": self.recomputed,
            "on_ledger": self.on_ledger,
            "in_tree": self.in_tree,
        }


class Ledger:
    def __init__(
        self,
        params: PublicParams,
        replicas: int = 1,
        block_size: int = DEFAULT_BLOCK_SIZE,
        queue_limit: int = DEFAULT_QUEUE_LIMIT,
        policy: RootPolicy = RootPolicy.ANY,
        max_ops: int | None = None,
    ):
        if replicas < 1:
            raise ValueError("need at least one replica")
        self.params = params
        self.block_size = block_size
        self.queue_limit = queue_limit
        self.policy = policy
        self.max_ops = max_ops if max_ops is not None else 1 << params.depth
        self.nodes = [Node(i, params, policy, self.max_ops) for i in range(replicas)]
        self.blocks: list[Block] = []
        self.events: list[dict] = []
        self.outcomes: dict[int, Verdict] = {}
        self._base_height = 0
        self._pending: deque[tuple[int, Record | bytes]] = deque()
        self._tickets = 0
        self._lock = threading.Lock()

    # -- submission and ordering

    @property
    def pending(self) -> int:
        return len(self._pending)

    def submit(self, tx: Record | bytes) -> Submission:
        with self._lock:
            if len(self._pending) >= self.queue_limit:
                return Submission(False, reason=Reason.QUEUE_FULL)
            ticket = self._tickets
            self._tickets += 1
            self._pending.append((ticket, tx))
            return Submission(True, ticket)

    def seal_block(self) -> Block:
        """Take up to ``block_size`` pending records in arrival order and apply them everywhere."""
        with self._lock:
            take = min(self.block_size, len(self._pending))
            batch = [self._pending.popleft() for _ in range(take)]
        height = self.height
        parsed: list[Record | None] = []
        for _, tx in batch:
            if isinstance(tx, Record):
                parsed.append(tx)
            else:
                try:
                    parsed.append(decode_record(tx))
                except RecordError:
                    parsed.append(None)
        valid = [tx for tx in parsed if tx is not None]
        outcomes = [node.process(height, valid) for node in self.nodes]
        if any(o != outcomes[0] for o in outcomes[1:]):
            raise ReplicaDivergence(f"verdicts differ in block {height}")
        it = iter(outcomes[0])
        verdicts = tuple(Verdict(False, Reason.MALFORMED) if tx is None else next(it) for tx in parsed)
        roots = self.roots()
        for node in self.nodes[1:]:
            if tuple(node.forest.roots()[k] for k in TreeKind) != roots:
                raise ReplicaDivergence(f"roots differ after block {height}")
        records = tuple(tx for tx in parsed if tx is not None)
        block = Block(height, records, tuple(v for tx, v in zip(parsed, verdicts) if tx is not None), roots)
        self.blocks.append(block)
        for (ticket, _), tx, verdict in zip(batch, parsed, verdicts):
            self.outcomes[ticket] = verdict
            self.events.append(
                {
                    "block": height,
                    "ticket": ticket,
                    "record_type": tx.TYPE.name.lower() if tx is not None else None,
                    "verdict": "accepted" if verdict else "rejected",
                    "reason": None if verdict else verdict.reason.value,
                }
            )
        return block

    def flush(self) -> list[Block]:
        """Seal blocks until nothing is pending."""
        out = []
        while self._pending:
            out.append(self.seal_block())
        return out

    def submit_and_seal(self, tx: Record | bytes) -> Verdict:
        """Convenience for scripts: one record, one block, its verdict."""
        sub = self.submit(tx)
        if not sub.queued:
            return Verdict(False, sub.reason)
        while sub.ticket not in self.outcomes:
            self.seal_block()
        return self.outcomes[sub.ticket]

    # -- queries

    @property
    def height(self) -> int:
        """Height the next sealed block will get."""
        return self._base_height + len(self.blocks)

    @property
    def primary(self) -> Node:
        return self.nodes[0]

    def view(self) -> CommitmentForest:
        """The sequencer replica's state; callers must treat it as read-only."""
        return self.primary.forest

    def roots(self) -> tuple[int, int, int, int]:
        r = self.primary.forest.roots()
        return tuple(r[k] for k in TreeKind)

    def state_set(self) -> dict[str, int]:
        return {k.name.lower(): v for k, v in zip(TreeKind, self.roots())}

    @property
    def log(self) -> list[LoggedRecord]:
        return self.primary.log

    def record(self, seq: int) -> LoggedRecord:
        return self.primary.log[seq]

    def verify(self, tx: Record | bytes) -> Verdict:
        return verify_record(tx, self.view(), self.params, self.policy)

    def audit(self, seq: int, keys: AddressKeyPair) -> AuditReport:
        return audit(self.primary.forest, self.primary.log, seq, keys)

    def events_ndjson(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)

    def write_events(self, fp: IO[str]) -> None:
        fp.write(self.events_ndjson())

    # -- persistence

    def export(self) -> bytes:
        return self.primary.export()

    @classmethod
    def load(cls, data: bytes, replicas: int = 1, policy: RootPolicy = RootPolicy.ANY) -> "Ledger":
        params, forest, log = _import(data)
        ledger = cls(params, replicas=replicas, policy=policy)
        for node in ledger.nodes:
            node.forest = CommitmentForest.from_bytes(forest.to_bytes())
            node.log = list(log)
        ledger._base_height = log[-1].block + 1 if log else 0
        return ledger


def audit(forest: CommitmentForest, log: list[LoggedRecord], seq: int, keys: AddressKeyPair) -> AuditReport:
    """Decrypt a logged record's token and compare the opening with the ledger."""
    entry = log[seq]
    tx = entry.record
    kind = tx.TYPE.name.lower()
    try:
        token = open_token(tx.TYPE, tx.token, keys)
    except TokenError:
        return AuditReport(seq, kind, "decryption-failed")
    recomputed = recompute_commitment(token, keys.pk_adr)
    tree = forest[tx.TYPE.tree]
    in_tree = tree.leaves[entry.leaf_index] if entry.leaf_index < len(tree) else None
    values = {f.name: getattr(token, f.name) for f in dc_fields(token)}
    match = recomputed == token.commitment == tx.commitment == in_tree
    return AuditReport(
        seq,
        kind,
        "match" if match else "mismatch",
        {k: f"{v:#x}" for k, v in values.items()},
        f"{recomputed:#x}",
        f"{tx.commitment:#x}",
        None if in_tree is None else f"{in_tree:#x}",
    )


# --- snapshot format ----------------------------------------------------------
# magic | u16 version | u32 label length | label | u64 forest length | forest
# | u64 record count | per record: u64 block, u64 leaf index, u32 length, bytes


def _export(params: PublicParams, forest: CommitmentForest, log: list[LoggedRecord]) -> bytes:
    out = io.BytesIO()
    out.write(LEDGER_MAGIC)
    out.write(struct.pack(">HI", LEDGER_VERSION, len(params.label)))
    out.write(params.label)
    body = forest.to_bytes()
    out.write(struct.pack(">Q", len(body)))
    out.write(body)
    out.write(export_log(log))
    return out.getvalue()


def export_log(log: list[LoggedRecord]) -> bytes:
    out = io.BytesIO()
    out.write(struct.pack(">Q", len(log)))
    for entry in log:
        raw = entry.record.to_bytes()
        out.write(struct.pack(">QQI", entry.block, entry.leaf_index, len(raw)))
        out.write(raw)
    return out.getvalue()


def _import(data: bytes) -> tuple[PublicParams, CommitmentForest, list[LoggedRecord]]:
    view = memoryview(data)
    if bytes(view[:4]) != LEDGER_MAGIC:
        raise SnapshotError("bad ledger snapshot magic")
    try:
        version, label_len = struct.unpack_from(">HI", view, 4)
        if version != LEDGER_VERSION:
            raise SnapshotError(f"unsupported ledger snapshot version {version}")
        pos = 10
        label = bytes(view[pos : pos + label_len])
        pos += label_len
        (forest_len,) = struct.unpack_from(">Q", view, pos)
        pos += 8
        forest = CommitmentForest.from_bytes(bytes(view[pos : pos + forest_len]))
        pos += forest_len
        (count,) = struct.unpack_from(">Q", view, pos)
        pos += 8
        log = []
        for seq in range(count):
            block, leaf_index, n = struct.unpack_from(">QQI", view, pos)
            pos += 20
            raw = bytes(view[pos : pos + n])
            if len(raw) != n:
                raise SnapshotError("truncated record log")
            pos += n
            log.append(LoggedRecord(seq, block, leaf_index, decode_record(raw)))
    except (struct.error, RecordError) as exc:
        raise SnapshotError(f"corrupt ledger snapshot: {exc}") from exc
    if pos != len(view):
        raise SnapshotError("trailing bytes after ledger snapshot")
    return PublicParams(forest.depth, label), forest, log


__all__ = [
    "AuditReport",
    "Block",
    "Ledger",
    "LoggedRecord",
    "Node",
    "Reason",
    "ReplicaDivergence",
    "RootPolicy",
    "Submission",
    "Verdict",
    "audit",
    "export_log",
    "verify_record",
]
