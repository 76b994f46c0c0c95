"""MiMC-5 keyed permutation, the PRF built on it and a Miyaguchi-Preneel byte hash."""

from __future__ import annotations

import enum
import hashlib
import math
from functools import lru_cache

from .field import MODULUS

ALPHA = 5
ROUNDS = math.ceil(math.log(MODULUS, ALPHA))
GATES_PER_CALL = 3 * ROUNDS
CHUNK_BYTES = 31


class Role(enum.Enum):
    """Separate constant sets keep the PRF's three uses apart."""

    ADDRESS = "address"
    MAC = "mac"
    SERIAL = "serial"
    HASH = "hash"


@lru_cache(maxsize=None)
def round_constants(role: Role) -> tuple[int, ...]:
    stream = hashlib.shake_256(f"zkaudit/mimc5/{role.value}".encode()).digest(64 * ROUNDS)
    return tuple(
        int.from_bytes(stream[64 * i : 64 * (i + 1)], "little") % MODULUS for i in range(ROUNDS)
    )


def encrypt(role: Role, key: int, x: int) -> int:
    p = MODULUS
    for c in round_constants(role):
        x = pow((x + key + c) % p, ALPHA, p)
    return (x + key) % p


def prf(role: Role, key: int, x: int) -> int:
    # feed-forward turns the permutation into a one-way keyed function
    return (encrypt(role, key, x) + x) % MODULUS


def hash_bytes(data: bytes) -> int:
    p = MODULUS
    chunks = [data[i : i + CHUNK_BYTES] for i in range(0, len(data), CHUNK_BYTES)]
    chunks.append(len(data).to_bytes(CHUNK_BYTES, "little"))
    h = 0
    for chunk in chunks:
        m = int.from_bytes(chunk, "little")
        h = (encrypt(Role.HASH, h, m) + h + m) % p
    return h
