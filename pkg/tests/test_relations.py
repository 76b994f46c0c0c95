import dataclasses
import random

import pytest

from zkaudit import primitives as prim
from zkaudit.merkle import MerkleTree
from zkaudit.primitives import field, mimc, poseidon
from zkaudit.zk import relations as rel
from zkaudit.zk.r1cs import UnsatisfiedError
from zkaudit.zk.relations import RelationId

DEPTH = 4
HASH = poseidon.GATES_PER_PERMUTATION
PRF = mimc.GATES_PER_CALL
LEVEL = HASH + 2
RANGE = 64


def addr(sk):
    return mimc.prf(mimc.Role.ADDRESS, sk, 0)


def _tree_with(leaf, rng, position=5):
    tree = MerkleTree(DEPTH)
    for i in range(position):
        tree.append(field.random_element(rng))
    tree.append(leaf)
    tree.append(field.random_element(rng))
    return tree, tree.prove_membership(position)


def honest(relation: RelationId, seed=0):
    """A satisfying (instance, witness) pair built from the native primitives only."""
    rng = random.Random(seed)
    f = lambda: field.random_element(rng)  # noqa: E731
    key_hash = f()
    v = f()
    if relation is RelationId.STORE:
        provider, r, rho, owner_key = f(), f(), f(), f()
        cm = prim.commit([provider, rho, v], r).value
        return (
            rel.StoreInstance(cm, mimc.prf(mimc.Role.MAC, owner_key, key_hash), key_hash),
            rel.StoreWitness(provider, r, rho, v, owner_key),
        )
    if relation is RelationId.ASSIGN:
        sk, r, rho, owner, r2 = f(), f(), f(), f(), f()
        tree, path = _tree_with(prim.commit([addr(sk), rho, v], r).value, rng)
        inst = rel.AssignInstance(
            tree.root,
            mimc.prf(mimc.Role.SERIAL, sk, rho),
            prim.commit([owner, v], r2).value,
            mimc.prf(mimc.Role.MAC, sk, key_hash),
            key_hash,
        )
        return inst, rel.AssignWitness(path, r, rho, v, sk, owner, r2)
    if relation is RelationId.SHARE:
        sk, r, user, r2 = f(), f(), f(), f()
        expiry = 1000
        tree, path = _tree_with(prim.commit([addr(sk), v], r).value, rng)
        inst = rel.ShareInstance(
            tree.root, prim.commit([user, expiry, v], r2).value, mimc.prf(mimc.Role.MAC, sk, key_hash), key_hash
        )
        return inst, rel.ShareWitness(path, r, v, sk, user, expiry, r2)
    sk, r, provider, r2 = f(), f(), f(), f()
    expiry, now = 1000, 400
    tree, path = _tree_with(prim.commit([addr(sk), expiry, v], r).value, rng)
    inst = rel.AccessInstance(
        tree.root,
        prim.commit([provider, expiry - now, v], r2).value,
        mimc.prf(mimc.Role.MAC, sk, key_hash),
        key_hash,
    )
    return inst, rel.AccessWitness(path, expiry, r, v, sk, provider, now, r2)


# Gate and constraint counts recomputed from the gadget composition of each relation:
# (allocated private values, hash gadgets, prf gadgets, tree levels, range gadgets, explicit checks)
COMPOSITION = {
    RelationId.STORE: (5, 1, 1, 0, 0, 2),
    RelationId.ASSIGN: (6, 2, 3, DEPTH, 0, 4),
    RelationId.SHARE: (6, 2, 2, DEPTH, 1, 3),
    RelationId.ACCESS: (7, 2, 2, DEPTH, 2, 3),
}


def expected_counts(relation):
    allocs, hashes, prfs, levels, ranges, explicit = COMPOSITION[relation]
    gates = (allocs + 1) // 2 + hashes * HASH + prfs * PRF + levels * LEVEL + ranges * RANGE
    # multiply() adds two linear constraints, each tree level three, each range 2 per bit + 1
    constraints = 2 * (hashes * HASH + prfs * PRF) + levels * (2 * HASH + 3) + ranges * (2 * RANGE + 1) + explicit
    return gates, constraints


@pytest.mark.parametrize("relation", list(RelationId), ids=lambda r: r.name.lower())
def test_counts_match_gadget_composition(relation):
    shape = rel.compile_relation(relation, DEPTH)
    assert (shape.num_gates, shape.num_constraints) == expected_counts(relation)


def test_frozen_counts_at_test_depth():
    got = {r.name.lower(): rel.constraint_report(r, DEPTH).as_dict() for r in RelationId}
    assert {k: (v["constraints"], v["multiplications"], v["proof_bytes"]) for k, v in got.items()} == {
        "store": (1724, 864, 1056),
        "assign": (8386, 4196, 1248),
        "share": (7860, 3933, 1184),
        "access": (7989, 3998, 1184),
    }


def test_assign_has_one_more_hash_gadget_than_share():
    assert COMPOSITION[RelationId.ASSIGN][2] == COMPOSITION[RelationId.SHARE][2] + 1


def test_membership_cost_per_level():
    assert rel.membership_cost_per_level() == {"hash": 534, "selection": 2, "total": 536}


@pytest.mark.parametrize("relation", list(RelationId), ids=lambda r: r.name.lower())
def test_dual_route_wire_equality(relation):
    """Value-only synthesis yields exactly the wires of the full symbolic synthesis."""
    inst, wit = honest(relation)
    sym = rel.synthesize(relation, inst, wit, DEPTH)
    val = rel.assign_wires(relation, inst, wit, DEPTH)
    assert sym.a_l == val.a_l and sym.a_r == val.a_r and sym.a_o == val.a_o
    assert sym.num_constraints == val.num_constraints
    assert sym.shape() == rel.compile_relation(relation, DEPTH)
    sym.check()
    val.check()


@pytest.mark.parametrize("relation", list(RelationId), ids=lambda r: r.name.lower())
def test_prove_verify_and_public_input_binding(relation):
    inst, wit = honest(relation, seed=1)
    assert rel.is_satisfied(relation, inst, wit, DEPTH)
    proof = rel.prove(relation, inst, wit, DEPTH, rng=random.Random(2))
    assert len(proof.to_bytes()) == rel.constraint_report(relation, DEPTH).proof_bytes
    assert rel.verify(relation, inst, proof, DEPTH)
    assert rel.verify(relation, inst, proof.to_bytes(), DEPTH)
    for name in (f.name for f in dataclasses.fields(inst)):
        bumped = dataclasses.replace(inst, **{name: (getattr(inst, name) + 1) % field.MODULUS})
        assert not rel.verify(relation, bumped, proof, DEPTH), name
    assert not rel.verify(relation, inst, proof.to_bytes()[:-32], DEPTH)
    other = next(r for r in RelationId if r is not relation)
    assert not rel.verify(other, inst, proof, DEPTH)


@pytest.mark.parametrize("relation", list(RelationId), ids=lambda r: r.name.lower())
def test_every_witness_field_matters(relation):
    inst, wit = honest(relation, seed=3)
    for f in dataclasses.fields(wit):
        if f.name == "path":
            p = wit.path
            bad = dataclasses.replace(p, siblings=(p.siblings[0] + 1,) + p.siblings[1:])
        else:
            bad = (getattr(wit, f.name) + 1) % field.MODULUS
        broken = dataclasses.replace(wit, **{f.name: bad})
        assert not rel.is_satisfied(relation, inst, broken, DEPTH), f.name
        with pytest.raises(UnsatisfiedError):
            rel.prove(relation, inst, broken, DEPTH)


def test_unprovided_path_direction_is_checked():
    inst, wit = honest(RelationId.SHARE)
    moved = dataclasses.replace(wit, path=dataclasses.replace(wit.path, leaf_index=wit.path.leaf_index ^ 1))
    assert not rel.is_satisfied(RelationId.SHARE, inst, moved, DEPTH)


@pytest.mark.parametrize(
    "expiry,now,ok",
    [(10, 1, True), (10, 9, True), (10, 10, False), (10, 0, False), (10, 11, False), (2**64, 5, True), (2**65, 5, False)],
)
def test_access_time_window(expiry, now, ok):
    inst, wit = honest(RelationId.ACCESS)
    rng = random.Random(7)
    sk, v = wit.user_key, wit.data_hash
    tree, path = _tree_with(prim.commit([addr(sk), expiry, v], wit.trapdoor).value, rng)
    cm = prim.commit([wit.provider, (expiry - now) % field.MODULUS, v], wit.new_trapdoor).value
    inst = dataclasses.replace(inst, share_root=tree.root, commitment=cm)
    wit = dataclasses.replace(wit, path=path, expiry=expiry, now=now)
    assert rel.is_satisfied(RelationId.ACCESS, inst, wit, DEPTH) is ok


@pytest.mark.parametrize("expiry,ok", [(0, True), (2**64 - 1, True), (2**64, False)])
def test_share_expiry_range(expiry, ok):
    inst, wit = honest(RelationId.SHARE)
    cm = prim.commit([wit.user, expiry, wit.data_hash], wit.new_trapdoor).value
    assert rel.is_satisfied(
        RelationId.SHARE, dataclasses.replace(inst, commitment=cm), dataclasses.replace(wit, expiry=expiry), DEPTH
    ) is ok


def test_depth_and_type_mismatches():
    inst, wit = honest(RelationId.ASSIGN)
    with pytest.raises(ValueError):
        rel.assign_wires(RelationId.ASSIGN, inst, wit, DEPTH + 1)
    with pytest.raises(TypeError):
        rel.prove(RelationId.SHARE, inst, wit, DEPTH)
    assert not rel.is_satisfied(RelationId.ASSIGN, inst, wit, DEPTH + 1)


def test_witness_repr_hides_secrets():
    _, wit = honest(RelationId.STORE)
    assert str(wit.owner_key) not in repr(wit)
    assert "hidden" in repr(wit)


def test_instance_serialisation():
    inst, _ = honest(RelationId.ASSIGN)
    assert len(inst.to_bytes()) == 32 * rel.num_public(RelationId.ASSIGN) == 160
    assert inst.public_inputs()[-1] == inst.key_hash
