"""Long-lived pseudonymous address keys."""

from __future__ import annotations

from dataclasses import dataclass

from ..group import Point, scalar_from_hash
from . import field, mimc


def address_of(sk: int) -> int:
    return mimc.prf(mimc.Role.ADDRESS, sk, 0)


@dataclass(frozen=True)
class AddressPublic:
    """What a participant publishes: the PRF-derived address and an encryption key."""

    pk_adr: int
    pk_enc: bytes

    def to_bytes(self) -> bytes:
        return field.to_bytes(self.pk_adr) + self.pk_enc

    @classmethod
    def from_bytes(cls, data: bytes) -> "AddressPublic":
        if len(data) != 64:
            raise ValueError("address public key must be 64 bytes")
        Point.decode(data[32:])
        return cls(field.from_bytes(data[:32]), data[32:])


@dataclass(frozen=True, repr=False)
class AddressKeyPair:
    sk_adr: bytes
    pk_adr: int
    enc_secret: int
    pk_enc: bytes

    @classmethod
    def from_secret(cls, sk_adr: bytes) -> "AddressKeyPair":
        sk = field.from_bytes(sk_adr)
        enc_secret = scalar_from_hash(b"zkaudit/address/enc", sk_adr)
        pk_enc = (Point.generator() * enc_secret).encode()
        return cls(bytes(sk_adr), address_of(sk), enc_secret, pk_enc)

    @classmethod
    def generate(cls, rng=None) -> "AddressKeyPair":
        return cls.from_secret(field.to_bytes(field.random_element(rng)))

    @property
    def secret(self) -> int:
        return field.from_bytes(self.sk_adr)

    @property
    def public(self) -> AddressPublic:
        return AddressPublic(self.pk_adr, self.pk_enc)

    def __repr__(self) -> str:
        return f"AddressKeyPair(pk_adr={self.pk_adr:#x})"
