"""Schnorr signatures over ristretto255 with 64-byte signatures."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ..group import ORDER, Point, random_scalar

SIGNATURE_LEN = 64
PUBLIC_KEY_LEN = 32


@dataclass(frozen=True, repr=False)
class SigKeyPair:
    secret: int
    nonce_key: bytes
    public: bytes

    @classmethod
    def generate(cls, rng=None) -> "SigKeyPair":
        sk = random_scalar(rng)
        nonce_key = rng.randbytes(32) if rng is not None else random_scalar().to_bytes(32, "little")
        return cls(sk, nonce_key, (Point.generator() * sk).encode())

    def __repr__(self) -> str:
        return f"SigKeyPair(public={self.public.hex()})"


def _challenge(r_enc: bytes, pk: bytes, message: bytes) -> int:
    digest = hashlib.sha512(b"zkaudit/schnorr" + r_enc + pk + message).digest()
    return int.from_bytes(digest, "little") % ORDER


def sign(keys: SigKeyPair, message: bytes) -> bytes:
    k = int.from_bytes(hashlib.sha512(keys.nonce_key + message).digest(), "little") % ORDER
    r_enc = (Point.generator() * k).encode()
    e = _challenge(r_enc, keys.public, message)
    s = (k + e * keys.secret) % ORDER
    return r_enc + s.to_bytes(32, "little")


def verify_sig(public: bytes, message: bytes, signature: bytes) -> bool:
    if len(public) != PUBLIC_KEY_LEN or len(signature) != SIGNATURE_LEN:
        return False
    s = int.from_bytes(signature[32:], "little")
    if s >= ORDER:
        return False
    try:
        pk = Point.decode(public)
        r = Point.decode(signature[:32])
    except ValueError:
        return False
    e = _challenge(signature[:32], public, message)
    return Point.generator() * s == r + pk * e
