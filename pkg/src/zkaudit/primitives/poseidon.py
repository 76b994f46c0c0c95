"""Poseidon permutation over the scalar field (width 6, x^5 S-box)."""

from __future__ import annotations

import hashlib
from functools import lru_cache

from .field import MODULUS

WIDTH = 6
FULL_ROUNDS = 8
PARTIAL_ROUNDS = 130
ALPHA = 5
TOTAL_ROUNDS = FULL_ROUNDS + PARTIAL_ROUNDS

# in-circuit cost of one permutation: three gates per S-box
GATES_PER_PERMUTATION = 3 * WIDTH * FULL_ROUNDS + 3 * PARTIAL_ROUNDS


@lru_cache(maxsize=None)
def round_constants() -> tuple[tuple[int, ...], ...]:
    stream = hashlib.shake_256(b"zkaudit/poseidon/t6/rf8/rp130/constants").digest(
        64 * WIDTH * TOTAL_ROUNDS
    )
    flat = [
        int.from_bytes(stream[64 * i : 64 * (i + 1)], "little") % MODULUS
        for i in range(WIDTH * TOTAL_ROUNDS)
    ]
    return tuple(tuple(flat[WIDTH * r : WIDTH * (r + 1)]) for r in range(TOTAL_ROUNDS))


@lru_cache(maxsize=None)
def mds() -> tuple[tuple[int, ...], ...]:
    # Cauchy matrix with x_i = i, y_j = WIDTH + j: every square submatrix is invertible
    return tuple(
        tuple(pow(i + WIDTH + j, MODULUS - 2, MODULUS) for j in range(WIDTH)) for i in range(WIDTH)
    )


def is_full_round(r: int) -> bool:
    half = FULL_ROUNDS // 2
    return r < half or r >= half + PARTIAL_ROUNDS


def permute(state: list[int] | tuple[int, ...]) -> list[int]:
    if len(state) != WIDTH:
        raise ValueError(f"state must hold {WIDTH} elements")
    p = MODULUS
    s0, s1, s2, s3, s4, s5 = (x % p for x in state)
    rows = mds()
    for r, (c0, c1, c2, c3, c4, c5) in enumerate(round_constants()):
        s0 = s0 + c0
        s1 = s1 + c1
        s2 = s2 + c2
        s3 = s3 + c3
        s4 = s4 + c4
        s5 = s5 + c5
        s0 = pow(s0, ALPHA, p)
        if is_full_round(r):
            s1 = pow(s1, ALPHA, p)
            s2 = pow(s2, ALPHA, p)
            s3 = pow(s3, ALPHA, p)
            s4 = pow(s4, ALPHA, p)
            s5 = pow(s5, ALPHA, p)
        s0, s1, s2, s3, s4, s5 = (
            (m0 * s0 + m1 * s1 + m2 * s2 + m3 * s3 + m4 * s4 + m5 * s5) % p
            for m0, m1, m2, m3, m4, m5 in rows
        )
    return [s0, s1, s2, s3, s4, s5]


def hash_fields(domain: int, inputs: list[int] | tuple[int, ...]) -> int:
    """Fixed-length sponge with one permutation: capacity slot carries the domain tag."""
    if len(inputs) > WIDTH - 1:
        raise ValueError(f"at most {WIDTH - 1} inputs per call")
    state = [domain] + list(inputs) + [0] * (WIDTH - 1 - len(inputs))
    return permute(state)[1]
