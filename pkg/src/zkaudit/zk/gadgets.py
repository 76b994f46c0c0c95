"""Circuit gadgets mirroring the native hash, PRF, commitment and tree code."""

from __future__ import annotations

from typing import Sequence

from ..merkle import NODE_DOMAIN
from ..primitives import mimc, poseidon
from ..primitives.commit import MAX_FIELDS
from ..primitives.commit import domain as commit_domain
from .r1cs import LC, ConstraintSystem, Val, WitnessSystem

System = ConstraintSystem | WitnessSystem
Term = LC | Val

RANGE_BITS = 64


def _pow5(cs: System, x: Term) -> Term:
    _, _, x2 = cs.multiply(x, x)
    _, _, x4 = cs.multiply(x2, x2)
    _, _, x5 = cs.multiply(x4, x)
    return x5


def poseidon_permutation(cs: System, state: Sequence[Term | int]) -> list[Term]:
    """Generic permutation gadget: every S-box costs three gates, constants included."""
    s = [cs.lift(x) for x in state]
    rows = poseidon.mds()
    for r, consts in enumerate(poseidon.round_constants()):
        s = [x + c for x, c in zip(s, consts)]
        if poseidon.is_full_round(r):
            s = [_pow5(cs, x) for x in s]
        else:
            s[0] = _pow5(cs, s[0])
        s = [cs.combine(row, s) for row in rows]
    return s


def poseidon_hash(cs: System, domain: int, inputs: Sequence[Term | int]) -> Term:
    if len(inputs) > poseidon.WIDTH - 1:
        raise ValueError("too many inputs for one permutation")
    state = [domain, *inputs] + [0] * (poseidon.WIDTH - 1 - len(inputs))
    return poseidon_permutation(cs, state)[1]


def commitment(cs: System, fields: Sequence[Term | int], r: Term) -> Term:
    """Opening gadget: the returned combination equals ``commit(fields, r)``."""
    if len(fields) > MAX_FIELDS:
        raise ValueError("too many committed fields")
    return poseidon_hash(cs, commit_domain(len(fields)), [r, *fields])


def prf(cs: System, role: mimc.Role, key: Term, x: Term | int) -> Term:
    x = cs.lift(x)
    t = x
    for c in mimc.round_constants(role):
        t = _pow5(cs, t + key + c)
    return t + key + x


def membership(cs: System, leaf: Term, siblings: Sequence[int] | None, index: int | None, depth: int) -> Term:
    """Root of the path from ``leaf``; two gates per level on top of the node hash.

    The first gate forces the direction bit to be boolean; the second carries
    the sibling difference as a free wire and yields ``bit * difference``.
    """
    node = leaf
    for level in range(depth):
        if cs.proving:
            bit = (index >> level) & 1
            cur = cs.value(node)
            diff = siblings[level] - cur
            b_l, b_r, b_o = cs.allocate_multiplier((bit, 1 - bit))
            s_l, s_r, s_o = cs.allocate_multiplier((bit, diff))
        else:
            b_l, b_r, b_o = cs.allocate_multiplier(None)
            s_l, s_r, s_o = cs.allocate_multiplier(None)
        cs.constrain(b_o)
        cs.constrain(b_l + b_r - 1)
        cs.constrain(s_l - b_l)
        # left = node + bit*diff, right = sibling - bit*diff with sibling = node + diff
        left = node + s_o
        right = node + s_r - s_o
        node = poseidon_hash(cs, NODE_DOMAIN, [left, right])
    return node


def range_check(cs: System, value: Term, bits: int = RANGE_BITS) -> None:
    """Constrain ``0 <= value < 2**bits`` by boolean decomposition."""
    v = cs.value(value) if cs.proving else None
    acc = cs.lift(0)
    for i in range(bits):
        if cs.proving:
            bit = (v >> i) & 1
            b_l, b_r, b_o = cs.allocate_multiplier((bit, 1 - bit))
        else:
            b_l, b_r, b_o = cs.allocate_multiplier(None)
        cs.constrain(b_o)
        cs.constrain(b_l + b_r - 1)
        acc = acc + b_l * (1 << i)
    cs.constrain(acc - value)
