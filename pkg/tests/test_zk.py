"""Constraint systems, gadgets and the proof backend on small circuits."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive
from zkaudit import primitives as prim
from zkaudit.merkle import MerkleTree
from zkaudit.primitives import field, mimc, poseidon
from zkaudit.zk import bulletproofs as bp
from zkaudit.zk import gadgets
from zkaudit.zk.r1cs import LC, ConstraintSystem, UnsatisfiedError, Val, WitnessSystem

felts = st.integers(min_value=0, max_value=field.MODULUS - 1)
P = field.MODULUS


def both_routes(fn, publics=(), value=True):
    """Run ``fn`` on a symbolic and on a value-only system; return both."""
    cs = ConstraintSystem(len(publics), list(publics), proving=True)
    ws = WitnessSystem(len(publics), list(publics))
    out_cs, out_ws = fn(cs), fn(ws)
    if value:
        assert cs.value(out_cs) == ws.value(out_ws)
    assert cs.a_l == ws.a_l and cs.a_r == ws.a_r and cs.a_o == ws.a_o
    assert cs.num_constraints == ws.num_constraints
    return cs, ws, cs.value(out_cs) if value else None


# --- linear combinations ------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("+-*"), felts), max_size=12), felts)
def test_lc_and_val_arithmetic_agree(ops, start):
    cs = ConstraintSystem(0, [], proving=True)
    lc = cs.allocate(start)
    val = Val(start)
    for op, k in ops:
        if op == "+":
            lc, val = lc + k, val + k
        elif op == "-":
            lc, val = k - lc, k - val
        else:
            lc, val = lc * k, val * k
    assert cs.value(lc) == val.v


def test_lc_drops_zero_terms():
    x = LC.var(0)
    assert (x - x).terms == {}
    assert (x * 0).terms == {}


def test_symbolic_system_refuses_values_when_compiling():
    cs = ConstraintSystem(0)
    with pytest.raises(RuntimeError):
        cs.value(LC.of(1))
    with pytest.raises(RuntimeError):
        cs.check()


def test_wrong_public_count():
    with pytest.raises(ValueError):
        ConstraintSystem(2, [1])
    with pytest.raises(ValueError):
        WitnessSystem(1, [])


def test_allocate_pairs_two_values_per_gate():
    for cs in (ConstraintSystem(0, [], proving=True), WitnessSystem(0, [])):
        a, b, c = cs.allocate(3), cs.allocate(4), cs.allocate(5)
        assert cs.num_gates == 2
        assert (cs.value(a), cs.value(b), cs.value(c)) == (3, 4, 5)
        assert cs.a_o[0] == 12


# --- gadgets match native code on both routes -----------------------------------------


@settings(max_examples=5, deadline=None)
@given(st.lists(felts, min_size=6, max_size=6))
def test_poseidon_gadget(state):
    cs, ws, out = both_routes(lambda s: gadgets.poseidon_permutation(s, [s.allocate(x) for x in state])[1])
    assert out == poseidon.permute(state)[1]
    cs.check()
    ws.check()
    assert cs.num_gates == 3 + poseidon.GATES_PER_PERMUTATION  # three allocation gates


@settings(max_examples=5, deadline=None)
@given(st.sampled_from(list(mimc.Role)), felts, felts)
def test_prf_gadget(role, key, x):
    def fn(cs):
        k, v = cs.allocate(key), cs.allocate(x)
        return gadgets.prf(cs, role, k, v)

    cs, ws, out = both_routes(fn)
    assert out == naive.mimc_prf(role.value, key, x)
    assert cs.num_gates == 1 + mimc.GATES_PER_CALL == 328
    cs.check()
    ws.check()


@settings(max_examples=5, deadline=None)
@given(st.lists(felts, min_size=0, max_size=4), felts)
def test_commitment_gadget(fields_, r):
    def fn(cs):
        return gadgets.commitment(cs, [cs.allocate(f) for f in fields_], cs.allocate(r))

    _, _, out = both_routes(fn)
    assert out == prim.commit(fields_, r).value


def test_commitment_gadget_rejects_arity():
    with pytest.raises(ValueError):
        gadgets.commitment(WitnessSystem(0, []), [1] * 5, Val(0))


@pytest.mark.parametrize("index", range(8))
def test_membership_gadget(index):
    rng = random.Random(index)
    tree = MerkleTree(3)
    leaves = [field.random_element(rng) for _ in range(8)]
    tree.extend(leaves)
    path = tree.prove_membership(index)

    def fn(cs):
        leaf = cs.allocate(leaves[index])
        cs.allocate(0)  # fill the half gate so the path gates start aligned
        return gadgets.membership(cs, leaf, path.siblings, index, 3)

    cs, ws, out = both_routes(fn)
    assert out == tree.root
    assert cs.num_gates == 1 + 3 * (poseidon.GATES_PER_PERMUTATION + 2)
    cs.check()
    ws.check()


def _range(value, bits=64):
    def fn(cs):
        gadgets.range_check(cs, cs.allocate(value), bits)

    return both_routes(fn, value=False)


@pytest.mark.parametrize("value", [0, 1, 2**63, 2**64 - 1])
def test_range_gadget_accepts(value):
    cs, ws, _ = _range(value)
    cs.check()
    ws.check()
    assert cs.num_gates == 1 + 64


@pytest.mark.parametrize("value", [2**64, P - 1, 2**100])
def test_range_gadget_rejects(value):
    cs, ws, _ = _range(value)
    with pytest.raises(UnsatisfiedError) as sym:
        cs.check()
    with pytest.raises(UnsatisfiedError) as val:
        ws.check()
    # both routes point at the same first violated constraint
    assert str(sym.value) == str(val.value)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**12 - 1) | st.integers(min_value=2**12, max_value=P - 1))
def test_range_gadget_boundary_property(value):
    _, ws, _ = _range(value, 12)
    ok = value < 2**12
    if ok:
        ws.check()
    else:
        with pytest.raises(UnsatisfiedError):
            ws.check()


# --- the proof backend on a toy circuit --------------------------------------------------

LABEL = b"zkaudit/test/toy"


def toy(cs, x=None, y=None):
    """Public z = x*y + x, with x and y private."""
    a, b = cs.allocate(x), cs.allocate(y)
    _, _, prod = cs.multiply(a, b)
    cs.constrain(prod + a - cs.public(0))


def toy_shape():
    cs = ConstraintSystem(1)
    toy(cs)
    return cs.shape()


def toy_witness(x, y, z=None):
    ws = WitnessSystem(1, [x * y + x if z is None else z])
    toy(ws, x, y)
    return ws


def test_proof_size_law():
    for gates, elements in [(1, 13), (2, 15), (3, 17), (4, 17), (5, 19), (864, 33), (36356, 45)]:
        assert bp.element_count(gates) == elements
        assert bp.proof_size(gates) == 32 * elements
    assert bp.proof_size(864) == 1056
    assert bp.proof_size(36356) == 1440


@settings(max_examples=6, deadline=None)
@given(felts, felts)
def test_toy_completeness(x, y):
    shape = toy_shape()
    ws = toy_witness(x, y)
    proof = bp.prove(ws, shape, LABEL)
    assert proof.element_count == bp.element_count(shape.num_gates)
    assert len(proof.to_bytes()) == bp.proof_size(shape.num_gates)
    assert bp.verify(shape, ws.public_inputs, bp.Proof.from_bytes(proof.to_bytes()), LABEL)


def test_symbolic_route_proves_too():
    shape = toy_shape()
    cs = ConstraintSystem(1, [12], proving=True)
    toy(cs, 3, 3)
    assert bp.verify(shape, [12], bp.prove(cs, shape, LABEL), LABEL)


def test_toy_soundness_checks():
    shape = toy_shape()
    ws = toy_witness(5, 7)
    proof = bp.prove(ws, shape, LABEL, rng=random.Random(1))
    assert not bp.verify(shape, [41], proof, LABEL)
    assert not bp.verify(shape, ws.public_inputs, proof, LABEL + b"x")
    assert not bp.verify(shape, [], proof, LABEL)
    raw = proof.to_bytes()
    for i in range(0, len(raw), 32):
        bad = bytearray(raw)
        bad[i] ^= 2
        try:
            parsed = bp.Proof.from_bytes(bytes(bad))
        except ValueError:
            continue
        assert not bp.verify(shape, ws.public_inputs, parsed, LABEL), f"element {i // 32}"


def test_prover_refuses_unsatisfied_witness():
    with pytest.raises(UnsatisfiedError):
        bp.prove(toy_witness(5, 7, z=1), toy_shape(), LABEL)


def test_prover_refuses_mismatched_shape():
    ws = WitnessSystem(1, [0])
    ws.allocate(0)
    with pytest.raises(ValueError):
        bp.prove(ws, toy_shape(), LABEL)


def test_forced_proof_of_false_statement_fails():
    ws = toy_witness(5, 7, z=1)
    ws.check = lambda: None  # a cheating prover skips the local check
    proof = bp.prove(ws, toy_shape(), LABEL)
    assert not bp.verify(toy_shape(), [1], proof, LABEL)


@pytest.mark.parametrize("size", [0, 31, 32 * 12, 32 * 14])
def test_proof_parser_rejects_bad_lengths(size):
    with pytest.raises(ValueError):
        bp.Proof.from_bytes(bytes(size))


def test_proof_parser_rejects_noncanonical_scalar():
    raw = bytearray(bp.simulate(2).to_bytes())
    raw[32 * 8 : 32 * 9] = (2**256 - 1).to_bytes(32, "little")
    with pytest.raises(ValueError):
        bp.Proof.from_bytes(bytes(raw))


def test_simulated_proof_is_shaped_but_does_not_verify():
    shape = toy_shape()
    sim = bp.simulate(shape.num_gates, random.Random(3))
    assert len(sim.to_bytes()) == bp.proof_size(shape.num_gates)
    assert bp.Proof.from_bytes(sim.to_bytes()) == sim
    assert not bp.verify(shape, [0], sim, LABEL)


def test_invalid_points_fail_verification():
    shape = toy_shape()
    proof = bp.prove(toy_witness(2, 2), shape, LABEL)
    raw = bytearray(proof.to_bytes())
    raw[0:32] = b"\xff" * 31 + b"\x7f"
    assert not bp.verify(shape, [6], bp.Proof.from_bytes(bytes(raw)), LABEL)


def test_generator_disk_cache(tmp_path, monkeypatch):
    monkeypatch.setenv(bp.CACHE_ENV, str(tmp_path))
    fresh = bp.Generators(b"zkaudit/test/cache")
    g = fresh.g(8).encode()
    files = list(tmp_path.iterdir())
    assert len(files) == 1 and files[0].stat().st_size == 64 * 8
    again = bp.Generators(b"zkaudit/test/cache")
    assert again.g(8).encode() == g
    monkeypatch.delenv(bp.CACHE_ENV)
    assert bp.Generators(b"zkaudit/test/cache").g(8).encode() == g


def test_generators_are_label_separated():
    assert bp.Generators(b"a").g(2).encode() != bp.Generators(b"b").g(2).encode()
    assert bp.Generators.shared() is bp.Generators.shared()
