"""ctypes binding to libsodium's ristretto255 API, used as an independent reference."""

from __future__ import annotations

import ctypes
import ctypes.util

_NAMES = ("sodium", "libsodium.so.23")


def _load():
    for name in _NAMES:
        path = ctypes.util.find_library(name) or name
        try:
            lib = ctypes.CDLL(path)
        except OSError:
            continue
        if lib.sodium_init() < 0:
            continue
        return lib
    return None


lib = _load()
available = lib is not None


def _buf(data: bytes = b"", size: int = 32):
    b = ctypes.create_string_buffer(size)
    b.raw = data.ljust(size, b"\0") if data else b"\0" * size
    return b


def is_valid(p: bytes) -> bool:
    return bool(lib.crypto_core_ristretto255_is_valid_point(_buf(p)))


def add(p: bytes, q: bytes) -> bytes:
    out = _buf()
    if lib.crypto_core_ristretto255_add(out, _buf(p), _buf(q)) != 0:
        raise ValueError("invalid point")
    return out.raw


def sub(p: bytes, q: bytes) -> bytes:
    out = _buf()
    if lib.crypto_core_ristretto255_sub(out, _buf(p), _buf(q)) != 0:
        raise ValueError("invalid point")
    return out.raw


def scalarmult(k: int, p: bytes) -> bytes | None:
    """None when the product is the identity (libsodium refuses to return it)."""
    out = _buf()
    if lib.crypto_scalarmult_ristretto255(out, _buf(k.to_bytes(32, "little")), _buf(p)) != 0:
        return None
    return out.raw


def scalarmult_base(k: int) -> bytes | None:
    out = _buf()
    if lib.crypto_scalarmult_ristretto255_base(out, _buf(k.to_bytes(32, "little"))) != 0:
        return None
    return out.raw


def from_hash(h64: bytes) -> bytes:
    out = _buf()
    lib.crypto_core_ristretto255_from_hash(out, _buf(h64, 64))
    return out.raw
