"""Hiding, binding commitments to up to four field elements."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import field, poseidon

MAX_FIELDS = 4
_DOMAIN_BASE = 1 << 8


def domain(arity: int) -> int:
    return _DOMAIN_BASE + arity


@dataclass(frozen=True)
class Commitment:
    value: int

    def to_bytes(self) -> bytes:
        return field.to_bytes(self.value)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Commitment":
        return cls(field.from_bytes(data))


def commit(fields: Sequence[int], r: int) -> Commitment:
    if len(fields) > MAX_FIELDS:
        raise ValueError(f"at most {MAX_FIELDS} message fields, got {len(fields)}")
    return Commitment(poseidon.hash_fields(domain(len(fields)), [r, *fields]))


def verify_opening(cm: Commitment, fields: Sequence[int], r: int) -> bool:
    if len(fields) > MAX_FIELDS:
        return False
    return commit(fields, r) == cm
