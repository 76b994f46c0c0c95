"""Constraint systems, the proof backend and the four operation relations."""

from .bulletproofs import Generators, Proof, UnsatisfiedError, element_count, proof_size, simulate
from .relations import (
    AccessInstance,
    AccessWitness,
    AssignInstance,
    AssignWitness,
    ConstraintReport,
    Instance,
    RelationId,
    ShareInstance,
    ShareWitness,
    StoreInstance,
    StoreWitness,
    compile_relation,
    constraint_report,
    is_satisfied,
    membership_cost_per_level,
    prove,
    verify,
)

__all__ = [
    "AccessInstance",
    "AccessWitness",
    "AssignInstance",
    "AssignWitness",
    "ConstraintReport",
    "Generators",
    "Instance",
    "Proof",
    "RelationId",
    "ShareInstance",
    "ShareWitness",
    "StoreInstance",
    "StoreWitness",
    "UnsatisfiedError",
    "compile_relation",
    "constraint_report",
    "element_count",
    "is_satisfied",
    "membership_cost_per_level",
    "proof_size",
    "prove",
    "simulate",
    "verify",
]
