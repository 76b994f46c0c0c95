"""Hybrid public-key encryption: ephemeral DH on ristretto255, HKDF, AES-256-GCM."""

from __future__ import annotations

import os

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ..group import Point, random_scalar

NONCE_LEN = 12
TAG_LEN = 16
OVERHEAD = 32 + NONCE_LEN + TAG_LEN


class DecryptionError(Exception):
    """Raised when a ciphertext fails authentication under the given key."""


def _key(eph: bytes, recipient: bytes, shared: bytes) -> bytes:
    return HKDF(
        algorithm=hashes.SHA256(), length=32, salt=None, info=b"zkaudit/ecies/aes256gcm"
    ).derive(eph + recipient + shared)


def encrypt(recipient_pk: bytes, plaintext: bytes, rng=None) -> bytes:
    """Ciphertext layout: ephemeral key (32) | nonce (12) | body | tag (16)."""
    pk = Point.decode(recipient_pk)
    e = random_scalar(rng)
    eph = (Point.generator() * e).encode()
    shared = (pk * e).encode()
    nonce = rng.randbytes(NONCE_LEN) if rng is not None else os.urandom(NONCE_LEN)
    body = AESGCM(_key(eph, recipient_pk, shared)).encrypt(nonce, plaintext, eph)
    return eph + nonce + body


def decrypt(secret: int, recipient_pk: bytes, ciphertext: bytes) -> bytes:
    if len(ciphertext) < OVERHEAD:
        raise DecryptionError("ciphertext too short")
    eph = ciphertext[:32]
    nonce = ciphertext[32 : 32 + NONCE_LEN]
    try:
        shared = (Point.decode(eph) * secret).encode()
        return AESGCM(_key(eph, recipient_pk, shared)).decrypt(
            nonce, ciphertext[32 + NONCE_LEN :], eph
        )
    except (InvalidTag, ValueError) as exc:
        raise DecryptionError("authenticated decryption failed") from exc
