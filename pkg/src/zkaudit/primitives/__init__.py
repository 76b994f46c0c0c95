"""Hash, PRF, commitment, signature and encryption building blocks."""

from __future__ import annotations

from . import field, mimc, poseidon
from .commit import MAX_FIELDS, Commitment, commit, verify_opening
from .ecies import DecryptionError
from .ecies import decrypt as _ecies_decrypt
from .ecies import encrypt as _ecies_encrypt
from .keys import AddressKeyPair, AddressPublic, address_of
from .mimc import Role
from .schnorr import SIGNATURE_LEN, SigKeyPair, sign, verify_sig


def hash(data: bytes) -> int:  # noqa: A001 - mirrors the scheme's H
    return mimc.hash_bytes(bytes(data))


def prf(key: bytes, x: int, role: Role = Role.MAC) -> int:
    return mimc.prf(role, field.from_bytes(key), x)


def enc(recipient: AddressPublic, plaintext: bytes, rng=None) -> bytes:
    return _ecies_encrypt(recipient.pk_enc, plaintext, rng)


def dec(keys: AddressKeyPair, ciphertext: bytes) -> bytes:
    return _ecies_decrypt(keys.enc_secret, keys.pk_enc, ciphertext)


__all__ = [
    "MAX_FIELDS",
    "SIGNATURE_LEN",
    "AddressKeyPair",
    "AddressPublic",
    "Commitment",
    "DecryptionError",
    "Role",
    "SigKeyPair",
    "address_of",
    "commit",
    "dec",
    "enc",
    "field",
    "hash",
    "mimc",
    "poseidon",
    "prf",
    "sign",
    "verify_opening",
    "verify_sig",
]
