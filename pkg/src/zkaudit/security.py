"""Adversarial test harness: record tampering and ledger indistinguishability.

``run_nm_suite`` mutates honest records in every way a network adversary
can (byte flips, field and proof transplants, re-signing under a fresh key,
serial reuse) and counts how many mutants the verifier accepts.

``run_ind_suite`` plays the two-ledger game: in each trial a hidden bit
picks which of two queries the challenger answers with a real record, and a
family of field-equality distinguishers tries to recover the bit from the
serialized record.  A simulated record is produced alongside every answer
to check that it parses and has the same length.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

from . import primitives as prim
from .ledger import Ledger, Reason, Verdict, verify_record
from .merkle import CommitmentForest, TreeKind
from .primitives import AddressKeyPair, SigKeyPair, field
from .protocol import (
    RECORD_TYPES,
    TOKEN_TYPES,
    _encode_field,
    PublicParams,
    Record,
    RecordError,
    RecordType,
    access,
    assign_owner,
    decode_record,
    share,
    store,
)
from .zk import relations as rel
from .zk.bulletproofs import simulate

SIGMA_BOUND = 5.0
SIMULATOR_VERIFIES = False
_NM_MASKS = (0x01, 0x80)


# --- honest trace ------------------------------------------------------------


@dataclass
class Trace:
    """Honest records with the replica state each one was verified against."""

    params: PublicParams
    records: dict[RecordType, list[Record]]
    pre_states: dict[int, bytes]
    post_state: bytes
    reassign: Record
    seed: int

    def pre_state(self, record: Record) -> CommitmentForest:
        return CommitmentForest.from_bytes(self.pre_states[id(record)])

    def final_state(self) -> CommitmentForest:
        return CommitmentForest.from_bytes(self.post_state)


def honest_trace(params: PublicParams, seed: int = 0) -> Trace:
    """Two records of each variant plus a second assignment of an already assigned store."""
    rng = random.Random(seed)
    ledger = Ledger(params)
    owner, provider, user_a, user_b = (AddressKeyPair.generate(rng) for _ in range(4))
    records: dict[RecordType, list[Record]] = {t: [] for t in RecordType}
    pre: dict[int, bytes] = {}

    def submit(rec: Record) -> None:
        pre[id(rec)] = ledger.view().to_bytes()
        verdict = ledger.submit_and_seal(rec)
        if not verdict:
            raise RuntimeError(f"honest {rec.TYPE.name.lower()} record rejected: {verdict.label}")
        records[rec.TYPE].append(rec)

    tk_str_1, rec = store(b"trace/data/1", owner, provider.public, params, rng)
    submit(rec)
    tk_str_2, rec = store(b"trace/data/2", owner, provider.public, params, rng)
    submit(rec)
    tk_own, rec = assign_owner(tk_str_1, provider, owner.public, ledger, params, rng)
    submit(rec)
    _, rec = assign_owner(tk_str_2, provider, owner.public, ledger, params, rng)
    submit(rec)
    tk_shr, rec = share(tk_own, owner, user_a.public, 1000, ledger, params, rng)
    submit(rec)
    _, rec = share(tk_own, owner, user_b.public, 2000, ledger, params, rng)
    submit(rec)
    _, rec = access(tk_shr, user_a, provider.public, 10, ledger, params, rng)
    submit(rec)
    _, rec = access(tk_shr, user_a, provider.public, 20, ledger, params, rng)
    submit(rec)
    _, reassign = assign_owner(tk_str_1, provider, owner.public, ledger, params, rng)
    return Trace(params, records, pre, ledger.view().to_bytes(), reassign, seed)


# --- non-malleability ----------------------------------------------------------


@dataclass(frozen=True)
class TamperCase:
    variant: RecordType
    target: str
    kind: str
    event: str
    data: bytes
    expect: Reason | None = None
    detail: str = ""


def _spans(record: Record) -> list[tuple[str, int, int]]:
    """Byte range of every serialized field, the type tag included."""
    spans = [("type", 0, 1)]
    pos = 1
    for name in record.field_names():
        n = len(_encode_one(record, name))
        spans.append((name, pos, pos + n))
        pos += n
    return spans


def _encode_one(record: Record, name: str) -> bytes:
    return _encode_field(name, getattr(record, name))


def _event_for(name: str) -> str:
    return {"signature": "E1", "sig_key": "E2", "mac": "E3", "serial": "E4"}.get(name, "basic")


def _resign(record: Record, rng, **changes) -> bytes:
    """What an adversary without the original signing key can do: sign under a fresh key."""
    sig = SigKeyPair.generate(rng)
    draft = dataclasses.replace(record, sig_key=sig.public, **changes)
    return draft.with_signature(prim.sign(sig, draft.message())).to_bytes()


def generate_cases(trace: Trace, rng=None) -> Iterable[tuple[TamperCase, Record]]:
    """Yield ``(case, honest_original)`` for the full mutation matrix."""
    rng = rng or random.Random(trace.seed + 1)
    for variant in RecordType:
        first, second = trace.records[variant][:2]
        raw = first.to_bytes()
        for name, start, stop in _spans(first):
            for pos in range(start, stop):
                for mask in _NM_MASKS:
                    data = bytearray(raw)
                    data[pos] ^= mask
                    yield TamperCase(variant, name, "byte-flip", _event_for(name), bytes(data), detail=f"{pos}^{mask:#04x}"), first

        for name in first.field_names():
            if name in ("sig_key", "signature"):
                continue
            swapped = dataclasses.replace(first, **{name: getattr(second, name)})
            if swapped != first:
                yield TamperCase(variant, name, "field-swap", _event_for(name), swapped.to_bytes(), Reason.BAD_SIGNATURE), first
                yield TamperCase(variant, name, "field-swap-resigned", "E2", _resign(first, rng, **{name: getattr(second, name)})), first

        yield TamperCase(variant, "sig_key", "key-substitution", "E2", _resign(first, rng), Reason.BAD_PROOF), first
        forged_mac = field.random_element(rng)
        yield TamperCase(variant, "mac", "mac-forgery", "E3", _resign(first, rng, mac=forged_mac), Reason.BAD_PROOF), first
        yield TamperCase(
            variant, "proof", "proof-transplant", "basic", dataclasses.replace(first, proof=second.proof).to_bytes(), Reason.BAD_SIGNATURE
        ), first
        yield TamperCase(
            variant, "proof", "proof-transplant-resigned", "E2", _resign(first, rng, proof=second.proof), Reason.BAD_PROOF
        ), first
        yield TamperCase(
            variant,
            "signature",
            "signature-transplant",
            "E1",
            dataclasses.replace(first, sig_key=second.sig_key, signature=second.signature).to_bytes(),
            Reason.BAD_SIGNATURE,
        ), first
        yield TamperCase(
            variant,
            "signature",
            "signature-forgery",
            "E1",
            dataclasses.replace(first, signature=rng.randbytes(32) + rng.randbytes(31) + b"\x00").to_bytes(),
            Reason.BAD_SIGNATURE,
        ), first
        # the second record's proof and statement under the first record's key: cross-pairing
        yield TamperCase(
            variant,
            "instance",
            "instance-cross-pairing",
            "basic",
            _resign(second, rng, **{n: getattr(first, n) for n in ("commitment",)}),
            Reason.BAD_PROOF,
        ), second


def _sn_reuse_cases(trace: Trace) -> list[tuple[TamperCase, bytes]]:
    own = trace.records[RecordType.OWN][0]
    return [
        (TamperCase(RecordType.OWN, "serial", "sn-replay", "E4", own.to_bytes(), Reason.DUPLICATE_SERIAL), trace.post_state),
        (
            TamperCase(RecordType.OWN, "serial", "sn-reassign", "E4", trace.reassign.to_bytes(), Reason.DUPLICATE_SERIAL),
            trace.post_state,
        ),
    ]


@dataclass
class NMReport:
    seed: int
    total: int = 0
    wins: list[dict] = dc_field(default_factory=list)
    reason_mismatches: list[dict] = dc_field(default_factory=list)
    groups: dict[str, dict] = dc_field(default_factory=dict)
    notes: list[str] = dc_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.wins

    def add(self, case: TamperCase, verdict: Verdict) -> None:
        self.total += 1
        key = f"{case.variant.name.lower()}/{case.target}/{case.kind}"
        g = self.groups.setdefault(key, {"event": case.event, "cases": 0, "wins": 0, "reasons": Counter()})
        g["cases"] += 1
        g["reasons"][verdict.reason.value if verdict.reason else "accepted"] += 1
        if verdict:
            g["wins"] += 1
            self.wins.append({"case": key, "detail": case.detail, "event": case.event})
        elif case.expect is not None and verdict.reason is not case.expect:
            self.reason_mismatches.append(
                {"case": key, "expected": case.expect.value, "got": verdict.reason.value, "detail": case.detail}
            )

    def as_dict(self) -> dict:
        return {
            "suite": "non-malleability",
            "seed": self.seed,
            "total_cases": self.total,
            "wins": len(self.wins),
            "passed": self.passed,
            "offending": self.wins,
            "reason_mismatches": self.reason_mismatches,
            "groups": {k: {**v, "reasons": dict(v["reasons"])} for k, v in sorted(self.groups.items())},
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def run_nm_suite(trace: Trace, rng=None) -> NMReport:
    report = NMReport(trace.seed)
    params = trace.params
    states: dict[int, CommitmentForest] = {}
    for case, original in generate_cases(trace, rng):
        state = states.get(id(original))
        if state is None:
            state = states[id(original)] = trace.pre_state(original)
        report.add(case, verify_record(case.data, state, params))
    final = trace.final_state()
    for case, _ in _sn_reuse_cases(trace):
        report.add(case, verify_record(case.data, final, params))
    report.notes.append("serial-number reuse (E4) applies to ownership records only; other variants carry no serial")
    report.notes.append("exact byte-for-byte replays of store/share/access records are not mutations and are not counted")
    return report


# --- simulation ------------------------------------------------------------------


@dataclass(frozen=True)
class SimulatedRecord:
    record: Record
    verifiable: bool = SIMULATOR_VERIFIES

    def to_bytes(self) -> bytes:
        return self.record.to_bytes()


def simulate_record(variant: RecordType, params: PublicParams, rng=None, root: int | None = None) -> SimulatedRecord:
    """A structurally valid record built only from randomness and the public parameters."""
    rng = rng or random.SystemRandom()
    sig = SigKeyPair.generate(rng)
    gates = rel.compile_relation(variant.relation, params.depth).num_gates
    stranger = AddressKeyPair.generate(rng)
    token_len = TOKEN_TYPES[variant].size()
    values = {
        "sig_key": sig.public,
        "signature": bytes(64),
        "commitment": field.random_element(rng),
        "mac": field.random_element(rng),
        "proof": simulate(gates, rng).to_bytes(),
        "token": prim.enc(stranger.public, rng.randbytes(token_len), rng),
    }
    cls = RECORD_TYPES[variant]
    names = cls.field_names()
    if "root" in names:
        values["root"] = root if root is not None else field.random_element(rng)
    if "serial" in names:
        values["serial"] = field.random_element(rng)
    draft = cls(**values)
    return SimulatedRecord(draft.with_signature(prim.sign(sig, draft.message())))


# --- indistinguishability ------------------------------------------------------


@dataclass(frozen=True)
class Query:
    """One operation request; parties are indices into the challenger's population.

    ``actor`` creates the record and ``counterparty`` receives its token.
    ``via`` is the extra participant needed to set up earlier steps.
    """

    op: RecordType
    data: bytes
    actor: int
    counterparty: int
    via: int = 0
    expiry: int = 0
    now: int = 0


def default_query_pairs() -> list[tuple[Query, Query]]:
    return [
        (Query(RecordType.STORE, b"dataset/alpha", 0, 1), Query(RecordType.STORE, b"dataset/beta", 2, 3)),
        (Query(RecordType.OWN, b"dataset/alpha", 1, 0), Query(RecordType.OWN, b"dataset/beta", 3, 2)),
        (
            Query(RecordType.SHARE, b"dataset/alpha", 0, 2, via=1, expiry=100),
            Query(RecordType.SHARE, b"dataset/beta", 1, 3, via=0, expiry=250),
        ),
        (
            Query(RecordType.ACCESS, b"dataset/alpha", 2, 1, via=0, expiry=100, now=10),
            Query(RecordType.ACCESS, b"dataset/beta", 3, 0, via=2, expiry=250, now=200),
        ),
    ]


def derivable_values(query: Query, population: Sequence[AddressKeyPair]) -> dict[str, bytes]:
    """Everything an observer who knows the query and all public keys can compute."""
    out = {"data": query.data, "data_hash": field.to_bytes(prim.hash(query.data))}
    for role, idx in (("actor", query.actor), ("counterparty", query.counterparty), ("via", query.via)):
        pub = population[idx].public
        out[f"{role}.pk_adr"] = field.to_bytes(pub.pk_adr)
        out[f"{role}.pk_enc"] = pub.pk_enc
    if query.op in (RecordType.SHARE, RecordType.ACCESS):
        out["expiry"] = field.to_bytes(query.expiry)
    if query.op is RecordType.ACCESS:
        out["now"] = field.to_bytes(query.now)
        out["remaining"] = field.to_bytes(query.expiry - query.now)
    return out


def record_fields(data: bytes) -> dict[str, bytes]:
    """Serialized fields of a record, with token and proof also split into their parts."""
    record = decode_record(data)
    out = {name: _encode_one(record, name) for name in record.field_names()}
    out["token.ephemeral"] = record.token[:32]
    out["token.nonce"] = record.token[32:44]
    out["token.body"] = record.token[44:]
    for i in range(0, len(record.proof), 32):
        out[f"proof[{i // 32}]"] = record.proof[i : i + 32]
    return out


class _Challenger:
    """Real ledger answering one fixed query, rebuilt whenever a tree fills up."""

    def __init__(self, query: Query, population, params: PublicParams, rng):
        self.query = query
        self.population = population
        self.params = params
        self.rng = rng
        self.ledgers_built = 0
        self._reset()

    def _reset(self) -> None:
        self.ledger = Ledger(self.params)
        self.ledgers_built += 1
        self._token = None

    def _submit(self, rec: Record) -> None:
        verdict = self.ledger.submit_and_seal(rec)
        if not verdict:
            raise RuntimeError(f"challenger's honest {rec.TYPE.name.lower()} record rejected: {verdict.label}")

    def _room(self, *kinds: TreeKind) -> bool:
        cap = 1 << self.params.depth
        return all(len(self.ledger.view()[k]) < cap for k in kinds)

    def _stored(self, owner: AddressKeyPair, provider: AddressKeyPair) -> bytes:
        tk, rec = store(self.query.data, owner, provider.public, self.params, self.rng)
        self._submit(rec)
        return tk

    def answer(self) -> Record:
        q, pop, pp, rng = self.query, self.population, self.params, self.rng
        actor, other, via = pop[q.actor], pop[q.counterparty], pop[q.via]
        if q.op is RecordType.STORE:
            if not self._room(TreeKind.STORE):
                self._reset()
            _, rec = store(q.data, actor, other.public, pp, rng)
        elif q.op is RecordType.OWN:
            if not self._room(TreeKind.STORE, TreeKind.OWN):
                self._reset()
            tk = self._stored(other, actor)
            _, rec = assign_owner(tk, actor, other.public, self.ledger, pp, rng)
        elif q.op is RecordType.SHARE:
            if not self._room(TreeKind.SHARE):
                self._reset()
            if self._token is None:
                tk = self._stored(actor, via)
                self._token, own = assign_owner(tk, via, actor.public, self.ledger, pp, rng)
                self._submit(own)
            _, rec = share(self._token, actor, other.public, q.expiry, self.ledger, pp, rng)
        else:
            if not self._room(TreeKind.ACCESS):
                self._reset()
            if self._token is None:
                tk = self._stored(via, other)
                tk_own, own = assign_owner(tk, other, via.public, self.ledger, pp, rng)
                self._submit(own)
                self._token, shr = share(tk_own, via, actor.public, q.expiry, self.ledger, pp, rng)
                self._submit(shr)
            _, rec = access(self._token, actor, other.public, q.now, self.ledger, pp, rng)
        self._submit(rec)
        return rec


@dataclass
class DistinguisherResult:
    name: str
    successes: int = 0
    trials: int = 0

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.5

    @property
    def advantage(self) -> float:
        return abs(self.rate - 0.5)


@dataclass
class IndReport:
    op: str
    trials: int
    seed: int
    bound: float
    distinguishers: list[DistinguisherResult]
    lengths: dict[str, list[int]]
    simulated_parse_failures: int
    simulated_length_mismatches: int
    simulated_distinguishers: list[DistinguisherResult]
    ledgers_built: int

    @property
    def leaking(self) -> list[str]:
        return [d.name for d in self.distinguishers if d.advantage > self.bound]

    @property
    def length_independent(self) -> bool:
        seen = {n for lens in self.lengths.values() for n in lens}
        return len(seen) == 1

    @property
    def passed(self) -> bool:
        return (
            not self.leaking
            and self.length_independent
            and self.simulated_parse_failures == 0
            and self.simulated_length_mismatches == 0
        )

    def as_dict(self) -> dict:
        worst = max(self.distinguishers, key=lambda d: d.advantage)
        return {
            "op": self.op,
            "trials": self.trials,
            "seed": self.seed,
            "bound": self.bound,
            "passed": self.passed,
            "leaking": self.leaking,
            "worst": {"name": worst.name, "advantage": worst.advantage, "rate": worst.rate},
            "distinguishers": len(self.distinguishers),
            "lengths": {k: sorted(set(v)) for k, v in self.lengths.items()},
            "simulated_parse_failures": self.simulated_parse_failures,
            "simulated_length_mismatches": self.simulated_length_mismatches,
            "simulated_worst_advantage": max(d.advantage for d in self.simulated_distinguishers),
            "simulator_verifies": SIMULATOR_VERIFIES,
            "ledgers_built": self.ledgers_built,
        }


def _guess(target: bytes, zero: bytes, one: bytes, contain: bool, coin: int) -> int:
    if contain:
        hit0, hit1 = zero in target, one in target
    else:
        hit0, hit1 = target == zero, target == one
    if hit0 != hit1:
        return 0 if hit0 else 1
    return coin


class _Scoreboard:
    """Every (field, derivable value, equality|containment) distinguisher, scored per trial."""

    def __init__(self, d0: dict[str, bytes], d1: dict[str, bytes]):
        self.d0, self.d1 = d0, d1
        self.results: dict[str, DistinguisherResult] = {}

    def score(self, data: bytes, b: int, coins: random.Random) -> None:
        fields_ = record_fields(data)
        for fname, fbytes in fields_.items():
            for label in self.d0:
                for contain in (False, True):
                    name = f"{fname}{'~' if contain else '=='}{label}"
                    res = self.results.setdefault(name, DistinguisherResult(name))
                    guess = _guess(fbytes, self.d0[label], self.d1[label], contain, coins.getrandbits(1))
                    res.trials += 1
                    res.successes += guess == b


def run_ind_suite(
    query_pairs: Sequence[tuple[Query, Query]] | None = None,
    params: PublicParams | None = None,
    trials: int = 1000,
    seed: int = 0,
    population_size: int = 4,
    progress=None,
) -> list[IndReport]:
    """Play ``trials`` rounds of the two-ledger game for every query pair."""
    params = params or PublicParams(4)
    query_pairs = query_pairs if query_pairs is not None else default_query_pairs()
    reports = []
    for pair_index, (q0, q1) in enumerate(query_pairs):
        if q0.op is not q1.op:
            raise ValueError("paired queries must be of the same operation type")
        pair_seed = seed * 1000 + pair_index
        rng = random.Random(pair_seed)
        population = [AddressKeyPair.generate(rng) for _ in range(population_size)]
        challengers = [_Challenger(q, population, params, rng) for q in (q0, q1)]
        board = _Scoreboard(derivable_values(q0, population), derivable_values(q1, population))
        sim_board = _Scoreboard(board.d0, board.d1)
        coins = random.Random(pair_seed ^ 0x5EED)
        lengths: dict[str, list[int]] = {"q0": [], "q1": [], "simulated": []}
        parse_failures = length_mismatches = 0
        for t in range(trials):
            b = rng.getrandbits(1)
            real = challengers[b].answer().to_bytes()
            lengths[f"q{b}"].append(len(real))
            board.score(real, b, coins)
            sim = simulate_record(q0.op, params, rng).to_bytes()
            lengths["simulated"].append(len(sim))
            try:
                decode_record(sim)
            except RecordError:
                parse_failures += 1
            else:
                sim_board.score(sim, b, coins)
            length_mismatches += len(sim) != len(real)
            if progress is not None:
                progress(q0.op, t + 1, trials)
        bound = SIGMA_BOUND * 0.5 / math.sqrt(trials)
        reports.append(
            IndReport(
                q0.op.name.lower(),
                trials,
                pair_seed,
                bound,
                sorted(board.results.values(), key=lambda d: d.name),
                lengths,
                parse_failures,
                length_mismatches,
                sorted(sim_board.results.values(), key=lambda d: d.name),
                sum(c.ledgers_built for c in challengers),
            )
        )
    return reports


__all__ = [
    "IndReport",
    "NMReport",
    "Query",
    "SIMULATOR_VERIFIES",
    "SimulatedRecord",
    "TamperCase",
    "Trace",
    "default_query_pairs",
    "derivable_values",
    "generate_cases",
    "honest_trace",
    "record_fields",
    "run_ind_suite",
    "run_nm_suite",
    "simulate_record",
]
