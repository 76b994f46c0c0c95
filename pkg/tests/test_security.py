import random
from collections import Counter

import pytest

from zkaudit import security as sec
from zkaudit.primitives import AddressKeyPair, field
from zkaudit.ledger import Reason, verify_record
from zkaudit.protocol import RECORD_TYPES, RecordType, decode_record
from zkaudit.security import Query


@pytest.fixture(scope="module")
def trace(params):
    return sec.honest_trace(params, seed=5)


def test_trace_shape(trace):
    assert all(len(trace.records[t]) == 2 for t in RecordType)
    for recs in trace.records.values():
        for rec in recs:
            assert verify_record(rec, trace.pre_state(rec), trace.params)
    # the unsubmitted second assignment is itself honest, only its serial is spent
    assert verify_record(trace.reassign, trace.final_state(), trace.params).reason is Reason.DUPLICATE_SERIAL


def test_spans_tile_the_record(trace):
    for t in RecordType:
        rec = trace.records[t][0]
        spans = sec._spans(rec)
        assert spans[0] == ("type", 0, 1)
        assert all(a[2] == b[1] for a, b in zip(spans, spans[1:]))
        assert spans[-1][2] == len(rec.to_bytes())
        assert [s[0] for s in spans[1:]] == list(rec.field_names())


def test_case_matrix_covers_every_byte_and_event(trace):
    cases = list(sec.generate_cases(trace, random.Random(0)))
    flips = Counter(c.variant for c, _ in cases if c.kind == "byte-flip")
    for t in RecordType:
        assert flips[t] == 2 * len(trace.records[t][0].to_bytes())
    kinds = {c.kind for c, _ in cases}
    assert {"field-swap", "field-swap-resigned", "key-substitution", "mac-forgery", "signature-forgery"} <= kinds
    assert {c.event for c, _ in cases} == {"basic", "E1", "E2", "E3", "E4"}
    assert all(c.data != orig.to_bytes() for c, orig in cases)


def test_targeted_cases_are_rejected_for_the_expected_reason(trace):
    picked = [
        (c, o)
        for c, o in sec.generate_cases(trace, random.Random(1))
        if c.kind != "byte-flip" and c.variant in (RecordType.OWN, RecordType.ACCESS)
    ]
    report = sec.NMReport(trace.seed)
    for case, orig in picked:
        report.add(case, verify_record(case.data, trace.pre_state(orig), trace.params))
    for case, _ in sec._sn_reuse_cases(trace):
        report.add(case, verify_record(case.data, trace.final_state(), trace.params))
    assert report.passed, report.wins
    assert report.reason_mismatches == []
    d = report.as_dict()
    assert d["wins"] == 0 and d["total_cases"] == len(picked) + 2
    assert d["groups"]["own/serial/sn-reassign"]["reasons"] == {"duplicate-serial": 1}


def test_report_counts_an_accepted_mutation_as_a_win(trace):
    report = sec.NMReport(0)
    rec = trace.records[RecordType.STORE][0]
    case = sec.TamperCase(RecordType.STORE, "proof", "identity", "basic", rec.to_bytes())
    report.add(case, verify_record(rec, trace.pre_state(rec), trace.params))
    assert not report.passed and report.wins[0]["case"] == "store/proof/identity"


@pytest.mark.parametrize("variant", list(RecordType))
def test_simulated_records_match_real_layout(trace, variant, rng):
    real = trace.records[variant][0]
    sim = sec.simulate_record(variant, trace.params, rng, root=getattr(real, "root", None))
    data = sim.to_bytes()
    assert len(data) == len(real.to_bytes())
    assert isinstance(decode_record(data), RECORD_TYPES[variant])
    assert set(sec.record_fields(data)) == set(sec.record_fields(real.to_bytes()))
    verdict = verify_record(data, trace.pre_state(real), trace.params)
    assert bool(verdict) is sec.SIMULATOR_VERIFIES
    if not sec.SIMULATOR_VERIFIES:
        assert verdict.reason is Reason.BAD_PROOF


def test_derivable_values():
    pop = [AddressKeyPair.generate(random.Random(i)) for i in range(3)]
    q = Query(RecordType.ACCESS, b"x", 0, 1, via=2, expiry=30, now=12)
    vals = sec.derivable_values(q, pop)
    assert vals["data"] == b"x"
    assert vals["remaining"] == field.to_bytes(18)
    assert {"actor.pk_adr", "counterparty.pk_enc", "via.pk_adr", "expiry", "now"} <= set(vals)
    assert "expiry" not in sec.derivable_values(Query(RecordType.STORE, b"x", 0, 1), pop)


def test_scoreboard_catches_a_leaky_field(trace):
    """A record that copies a derivable value into a field is flagged."""
    rec = trace.records[RecordType.STORE][0]
    d0, d1 = {"tag": b"\x11" * 32}, {"tag": b"\x22" * 32}
    board = sec._Scoreboard(d0, d1)
    game = random.Random(4)
    coins = random.Random(5)
    for _ in range(200):
        b = game.getrandbits(1)
        leaky = rec.__class__(**{**{n: getattr(rec, n) for n in rec.field_names()}, "proof": (d0, d1)[b]["tag"] + rec.proof[32:]})
        board.score(leaky.to_bytes(), b, coins)
    res = board.results
    assert res["proof[0]==tag"].rate == 1.0
    assert res["proof[0]~tag"].rate == 1.0
    assert res["mac==tag"].advantage < sec.SIGMA_BOUND * 0.5 / 200**0.5


def test_guess():
    assert sec._guess(b"abc", b"abc", b"xyz", False, 1) == 0
    assert sec._guess(b"--xyz--", b"abc", b"xyz", True, 0) == 1
    assert sec._guess(b"nope", b"abc", b"xyz", False, 1) == 1
    assert sec._guess(b"abc", b"abc", b"abc", False, 0) == 0


def test_small_ind_run(params):
    pairs = sec.default_query_pairs()
    reports = sec.run_ind_suite(pairs, params, trials=6, seed=3)
    assert [r.op for r in reports] == ["store", "own", "share", "access"]
    for r in reports:
        assert r.length_independent
        assert r.simulated_parse_failures == r.simulated_length_mismatches == 0
        assert sum(len(v) for k, v in r.lengths.items() if k != "simulated") == 6
        assert r.as_dict()["distinguishers"] == len(r.distinguishers)


def test_ind_tree_refill(params):
    """More answers than the tree holds forces the challenger onto a fresh ledger."""
    q = Query(RecordType.STORE, b"a", 0, 1)
    (report,) = sec.run_ind_suite([(q, q)], params, trials=(1 << params.depth) * 2 + 3, seed=1)
    assert report.ledgers_built >= 3
    assert report.passed


def test_ind_rejects_mixed_pairs(params):
    with pytest.raises(ValueError):
        sec.run_ind_suite([(Query(RecordType.STORE, b"a", 0, 1), Query(RecordType.OWN, b"a", 1, 0))], params, trials=1)
