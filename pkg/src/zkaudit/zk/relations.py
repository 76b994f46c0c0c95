"""The four operation relations and their prove/verify entry points.

Each relation takes the hash of the record's one-time verification key as
its last public input (``key_hash``), which ties the proof to the record
that carries it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from functools import lru_cache
from typing import ClassVar

from ..merkle import NODE_DOMAIN, MerklePath
from ..primitives import field, mimc
from . import bulletproofs as bp
from . import gadgets
from .r1cs import CircuitShape, ConstraintSystem, UnsatisfiedError, WitnessSystem


class RelationId(enum.IntEnum):
    STORE = 1
    ASSIGN = 2
    SHARE = 3
    ACCESS = 4


class Instance:
    """Public inputs of one relation, in order; ``key_hash`` is always last."""

    relation: ClassVar[RelationId]

    def public_inputs(self) -> list[int]:
        return [getattr(self, f.name) for f in fields(self)]

    def to_bytes(self) -> bytes:
        return b"".join(field.to_bytes(x) for x in self.public_inputs())


@dataclass(frozen=True)
class StoreInstance(Instance):
    relation: ClassVar[RelationId] = RelationId.STORE
    commitment: int
    mac: int
    key_hash: int


@dataclass(frozen=True)
class AssignInstance(Instance):
    relation: ClassVar[RelationId] = RelationId.ASSIGN
    store_root: int
    serial: int
    commitment: int
    mac: int
    key_hash: int


@dataclass(frozen=True)
class ShareInstance(Instance):
    relation: ClassVar[RelationId] = RelationId.SHARE
    owner_root: int
    commitment: int
    mac: int
    key_hash: int


@dataclass(frozen=True)
class AccessInstance(Instance):
    relation: ClassVar[RelationId] = RelationId.ACCESS
    share_root: int
    commitment: int
    mac: int
    key_hash: int


class _Hidden:
    def __repr__(self) -> str:
        return f"{type(self).__name__}(<hidden>)"


@dataclass(frozen=True, repr=False)
class StoreWitness(_Hidden):
    provider: int
    trapdoor: int
    nonce: int
    data_hash: int
    owner_key: int


@dataclass(frozen=True, repr=False)
class AssignWitness(_Hidden):
    path: MerklePath
    trapdoor: int
    nonce: int
    data_hash: int
    provider_key: int
    owner: int
    new_trapdoor: int


@dataclass(frozen=True, repr=False)
class ShareWitness(_Hidden):
    path: MerklePath
    trapdoor: int
    data_hash: int
    owner_key: int
    user: int
    expiry: int
    new_trapdoor: int


@dataclass(frozen=True, repr=False)
class AccessWitness(_Hidden):
    path: MerklePath
    expiry: int
    trapdoor: int
    data_hash: int
    user_key: int
    provider: int
    now: int
    new_trapdoor: int


INSTANCE_TYPES = {
    RelationId.STORE: StoreInstance,
    RelationId.ASSIGN: AssignInstance,
    RelationId.SHARE: ShareInstance,
    RelationId.ACCESS: AccessInstance,
}


def num_public(relation: RelationId) -> int:
    return len(fields(INSTANCE_TYPES[relation]))


def _alloc(cs, w, *names: str):
    return [cs.allocate(getattr(w, n) if w is not None else None) for n in names]


def _path_parts(w, depth: int):
    if w is None:
        return None, None
    if w.path.depth != depth:
        raise ValueError(f"path depth {w.path.depth} does not match circuit depth {depth}")
    return w.path.siblings, w.path.leaf_index


def _publics(cs, relation: RelationId):
    return [cs.public(i) for i in range(num_public(relation))]


def _store(cs, w: StoreWitness | None, depth: int) -> None:
    commitment, mac, key_hash = _publics(cs, RelationId.STORE)
    provider, trapdoor, nonce, data_hash, owner_key = _alloc(
        cs, w, "provider", "trapdoor", "nonce", "data_hash", "owner_key"
    )
    cs.constrain(gadgets.commitment(cs, [provider, nonce, data_hash], trapdoor) - commitment)
    cs.constrain(gadgets.prf(cs, mimc.Role.MAC, owner_key, key_hash) - mac)


def _assign(cs, w: AssignWitness | None, depth: int) -> None:
    store_root, serial, commitment, mac, key_hash = _publics(cs, RelationId.ASSIGN)
    trapdoor, nonce, data_hash, provider_key, owner, new_trapdoor = _alloc(
        cs, w, "trapdoor", "nonce", "data_hash", "provider_key", "owner", "new_trapdoor"
    )
    provider = gadgets.prf(cs, mimc.Role.ADDRESS, provider_key, 0)
    leaf = gadgets.commitment(cs, [provider, nonce, data_hash], trapdoor)
    siblings, index = _path_parts(w, depth)
    cs.constrain(gadgets.membership(cs, leaf, siblings, index, depth) - store_root)
    cs.constrain(gadgets.prf(cs, mimc.Role.SERIAL, provider_key, nonce) - serial)
    # the same data_hash wire feeds both openings
    cs.constrain(gadgets.commitment(cs, [owner, data_hash], new_trapdoor) - commitment)
    cs.constrain(gadgets.prf(cs, mimc.Role.MAC, provider_key, key_hash) - mac)


def _share(cs, w: ShareWitness | None, depth: int) -> None:
    owner_root, commitment, mac, key_hash = _publics(cs, RelationId.SHARE)
    trapdoor, data_hash, owner_key, user, expiry, new_trapdoor = _alloc(
        cs, w, "trapdoor", "data_hash", "owner_key", "user", "expiry", "new_trapdoor"
    )
    owner = gadgets.prf(cs, mimc.Role.ADDRESS, owner_key, 0)
    leaf = gadgets.commitment(cs, [owner, data_hash], trapdoor)
    siblings, index = _path_parts(w, depth)
    cs.constrain(gadgets.membership(cs, leaf, siblings, index, depth) - owner_root)
    gadgets.range_check(cs, expiry)
    cs.constrain(gadgets.commitment(cs, [user, expiry, data_hash], new_trapdoor) - commitment)
    cs.constrain(gadgets.prf(cs, mimc.Role.MAC, owner_key, key_hash) - mac)


def _access(cs, w: AccessWitness | None, depth: int) -> None:
    share_root, commitment, mac, key_hash = _publics(cs, RelationId.ACCESS)
    expiry, trapdoor, data_hash, user_key, provider, now, new_trapdoor = _alloc(
        cs, w, "expiry", "trapdoor", "data_hash", "user_key", "provider", "now", "new_trapdoor"
    )
    user = gadgets.prf(cs, mimc.Role.ADDRESS, user_key, 0)
    leaf = gadgets.commitment(cs, [user, expiry, data_hash], trapdoor)
    siblings, index = _path_parts(w, depth)
    cs.constrain(gadgets.membership(cs, leaf, siblings, index, depth) - share_root)
    # 0 < now < expiry
    gadgets.range_check(cs, now - 1)
    gadgets.range_check(cs, expiry - now - 1)
    cs.constrain(gadgets.commitment(cs, [provider, expiry - now, data_hash], new_trapdoor) - commitment)
    cs.constrain(gadgets.prf(cs, mimc.Role.MAC, user_key, key_hash) - mac)


_SYNTH = {
    RelationId.STORE: _store,
    RelationId.ASSIGN: _assign,
    RelationId.SHARE: _share,
    RelationId.ACCESS: _access,
}


def _label(relation: RelationId, depth: int) -> bytes:
    return b"zkaudit/relation/%s/depth-%d" % (relation.name.lower().encode(), depth)


@lru_cache(maxsize=None)
def compile_relation(relation: RelationId, depth: int) -> CircuitShape:
    """Witness-free synthesis; cached per (relation, depth)."""
    cs = ConstraintSystem(num_public(relation))
    _SYNTH[relation](cs, None, depth)
    return cs.shape()


def _check_instance(relation: RelationId, instance: Instance) -> None:
    if instance.relation is not relation:
        raise TypeError(f"instance is for {instance.relation.name}, not {relation.name}")


def synthesize(relation: RelationId, instance: Instance, witness, depth: int) -> ConstraintSystem:
    """Full symbolic synthesis with witness values attached."""
    _check_instance(relation, instance)
    cs = ConstraintSystem(num_public(relation), instance.public_inputs(), proving=True)
    _SYNTH[relation](cs, witness, depth)
    return cs


def assign_wires(relation: RelationId, instance: Instance, witness, depth: int) -> WitnessSystem:
    """Wire values only; much faster than ``synthesize`` and all the prover needs."""
    _check_instance(relation, instance)
    ws = WitnessSystem(num_public(relation), instance.public_inputs())
    _SYNTH[relation](ws, witness, depth)
    return ws


def prove(
    relation: RelationId,
    instance: Instance,
    witness,
    depth: int,
    rng=None,
    gens: bp.Generators | None = None,
) -> bp.Proof:
    """Raises ``UnsatisfiedError`` rather than emitting a proof for a bad witness."""
    shape = compile_relation(relation, depth)
    ws = assign_wires(relation, instance, witness, depth)
    return bp.prove(ws, shape, _label(relation, depth), gens=gens, rng=rng)


def verify(
    relation: RelationId,
    instance: Instance,
    proof: bp.Proof | bytes,
    depth: int,
    gens: bp.Generators | None = None,
) -> bool:
    if instance.relation is not relation:
        return False
    if isinstance(proof, (bytes, bytearray)):
        try:
            proof = bp.Proof.from_bytes(bytes(proof))
        except ValueError:
            return False
    shape = compile_relation(relation, depth)
    return bp.verify(shape, instance.public_inputs(), proof, _label(relation, depth), gens=gens)


def is_satisfied(relation: RelationId, instance: Instance, witness, depth: int) -> bool:
    try:
        synthesize(relation, instance, witness, depth).check()
    except (UnsatisfiedError, ValueError):
        return False
    return True


@dataclass(frozen=True)
class ConstraintReport:
    relation: RelationId
    depth: int
    constraints: int
    gates: int
    padded_gates: int
    proof_elements: int
    proof_bytes: int

    def as_dict(self) -> dict:
        return {
            "relation": self.relation.name.lower(),
            "depth": self.depth,
            "constraints": self.constraints,
            "multiplications": self.gates,
            "padded": self.padded_gates,
            "proof_elements": self.proof_elements,
            "proof_bytes": self.proof_bytes,
        }


def constraint_report(relation: RelationId, depth: int) -> ConstraintReport:
    shape = compile_relation(relation, depth)
    return ConstraintReport(
        relation,
        depth,
        shape.num_constraints,
        shape.num_gates,
        bp.padded_size(shape.num_gates),
        bp.element_count(shape.num_gates),
        bp.proof_size(shape.num_gates),
    )


def membership_cost_per_level() -> dict[str, int]:
    """Gate cost of one tree level, split into the node hash and the path selection."""
    per_level = (
        compile_relation(RelationId.ASSIGN, 2).num_gates - compile_relation(RelationId.ASSIGN, 1).num_gates
    )
    cs = ConstraintSystem(0)
    gadgets.poseidon_hash(cs, NODE_DOMAIN, [0, 0])
    return {"hash": cs.num_gates, "selection": per_level - cs.num_gates, "total": per_level}
