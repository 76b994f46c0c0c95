"""Scalar-field elements as canonical 32-byte little-endian strings."""

from __future__ import annotations

import os

from ..group import ORDER

MODULUS = ORDER
FIELD_BYTES = 32


def to_bytes(x: int) -> bytes:
    if not 0 <= x < MODULUS:
        raise ValueError("field element out of range")
    return x.to_bytes(FIELD_BYTES, "little")


def from_bytes(data: bytes) -> int:
    """Strict decoding: wrong length or a value >= the modulus is rejected."""
    if len(data) != FIELD_BYTES:
        raise ValueError(f"field element must be {FIELD_BYTES} bytes, got {len(data)}")
    x = int.from_bytes(data, "little")
    if x >= MODULUS:
        raise ValueError("non-canonical field element encoding")
    return x


def is_canonical(data: bytes) -> bool:
    return len(data) == FIELD_BYTES and int.from_bytes(data, "little") < MODULUS


def random_element(rng=None) -> int:
    raw = rng.randbytes(64) if rng is not None else os.urandom(64)
    return int.from_bytes(raw, "little") % MODULUS


def inv(x: int) -> int:
    if x % MODULUS == 0:
        raise ZeroDivisionError("inverse of zero")
    return pow(x, MODULUS - 2, MODULUS)
