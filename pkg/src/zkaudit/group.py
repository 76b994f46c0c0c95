"""Prime-order group (ristretto255) used by every primitive and the proof system.

The native extension is used when it is importable; setting
``ZKAUDIT_PURE_PYTHON=1`` forces the slower reference backend.
"""

from __future__ import annotations

import hashlib
import os
from typing import Iterable, Sequence

from . import _ref25519 as _ref

ORDER = _ref.L
ENCODED_LEN = 32

try:
    if os.environ.get("ZKAUDIT_PURE_PYTHON") == "1":
        raise ImportError("pure-Python backend requested")
    from . import _ristretto as _native
except ImportError:
    _native = None


def _scalar_bytes(k: int) -> bytes:
    return (k % ORDER).to_bytes(32, "little")


class _NativeBackend:
    name = "native"

    def __init__(self, mod):
        self.m = mod
        self.identity = mod.decode(bytes(32))
        self.basepoint = mod.from_coords(
            b"".join((c % _ref.P).to_bytes(32, "little") for c in _ref.BASEPOINT)
        )

    def decode(self, data):
        return self.m.decode(data)

    def encode(self, p):
        return self.m.encode(p)

    def add(self, p, q):
        return self.m.add(p, q)

    def sub(self, p, q):
        return self.m.sub(p, q)

    def neg(self, p):
        return self.m.neg(p)

    def mul(self, p, k):
        return self.m.mul(p, _scalar_bytes(k))

    def eq(self, p, q):
        return self.m.eq(p, q)

    def from_uniform(self, data):
        return self.m.from_uniform(data)

    # vectors are concatenated raw points
    def vec(self, items):
        return b"".join(items)

    def vec_decode(self, data):
        return self.m.decode_many(data)

    def vec_encode(self, v):
        return self.m.encode(v)

    def vec_len(self, v):
        return len(v) // 160

    def vec_item(self, v, i):
        return v[160 * i : 160 * (i + 1)]

    def vec_slice(self, v, start, stop):
        return v[160 * start : 160 * stop]

    def vec_concat(self, a, b):
        return a + b

    def msm(self, v, scalars):
        return self.m.msm(v, b"".join(_scalar_bytes(k) for k in scalars))

    def fold(self, lo, hi, k):
        return self.m.fold(lo, hi, _scalar_bytes(k))


class _PythonBackend:
    name = "python"
    identity = _ref.IDENTITY
    basepoint = _ref.BASEPOINT

    decode = staticmethod(_ref.decode)
    encode = staticmethod(_ref.encode)
    add = staticmethod(_ref.add)
    sub = staticmethod(_ref.sub)
    neg = staticmethod(_ref.neg)
    mul = staticmethod(_ref.mul)
    eq = staticmethod(_ref.eq)
    from_uniform = staticmethod(_ref.from_uniform)

    def vec(self, items):
        return list(items)

    def vec_decode(self, data):
        out = []
        for i in range(0, len(data), 32):
            p = _ref.decode(data[i : i + 32])
            if p is None:
                raise ValueError(f"invalid point encoding at index {i // 32}")
            out.append(p)
        return out

    def vec_encode(self, v):
        return b"".join(_ref.encode(p) for p in v)

    def vec_len(self, v):
        return len(v)

    def vec_item(self, v, i):
        return v[i]

    def vec_slice(self, v, start, stop):
        return v[start:stop]

    def vec_concat(self, a, b):
        return a + b

    def msm(self, v, scalars):
        return _ref.msm(list(v), [k % ORDER for k in scalars])

    def fold(self, lo, hi, k):
        return _ref.fold(lo, hi, k % ORDER)


backend = _NativeBackend(_native) if _native is not None else _PythonBackend()


class Point:
    """A ristretto255 group element."""

    __slots__ = ("_raw",)

    def __init__(self, raw):
        self._raw = raw

    @classmethod
    def identity(cls) -> "Point":
        return cls(backend.identity)

    @classmethod
    def generator(cls) -> "Point":
        return cls(backend.basepoint)

    @classmethod
    def decode(cls, data: bytes) -> "Point":
        raw = backend.decode(bytes(data))
        if raw is None:
            raise ValueError("invalid ristretto255 encoding")
        return cls(raw)

    @classmethod
    def from_uniform(cls, data: bytes) -> "Point":
        return cls(backend.from_uniform(bytes(data)))

    @classmethod
    def hash_to_point(cls, label: bytes, *parts: bytes) -> "Point":
        h = hashlib.sha512(label)
        for part in parts:
            h.update(len(part).to_bytes(4, "big"))
            h.update(part)
        return cls.from_uniform(h.digest())

    def encode(self) -> bytes:
        return backend.encode(self._raw)

    __bytes__ = encode

    def __add__(self, other: "Point") -> "Point":
        return Point(backend.add(self._raw, other._raw))

    def __sub__(self, other: "Point") -> "Point":
        return Point(backend.sub(self._raw, other._raw))

    def __neg__(self) -> "Point":
        return Point(backend.neg(self._raw))

    def __mul__(self, k: int) -> "Point":
        if not isinstance(k, int):
            return NotImplemented
        return Point(backend.mul(self._raw, k))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Point):
            return NotImplemented
        return backend.eq(self._raw, other._raw)

    def __hash__(self) -> int:
        return hash(self.encode())

    def __repr__(self) -> str:
        return f"Point({self.encode().hex()})"


class PointVector:
    """Immutable sequence of points stored in the backend's bulk format."""

    __slots__ = ("_v",)

    def __init__(self, v):
        self._v = v

    @classmethod
    def of(cls, points: Iterable[Point]) -> "PointVector":
        return cls(backend.vec(p._raw for p in points))

    @classmethod
    def decode(cls, data: bytes) -> "PointVector":
        if len(data) % ENCODED_LEN:
            raise ValueError("encoding length is not a multiple of 32")
        return cls(backend.vec_decode(bytes(data)))

    def encode(self) -> bytes:
        return backend.vec_encode(self._v)

    def __len__(self) -> int:
        return backend.vec_len(self._v)

    def __getitem__(self, index):
        if isinstance(index, slice):
            start, stop, step = index.indices(len(self))
            if step != 1:
                raise ValueError("strided slices are not supported")
            return PointVector(backend.vec_slice(self._v, start, stop))
        n = len(self)
        if index < 0:
            index += n
        if not 0 <= index < n:
            raise IndexError(index)
        return Point(backend.vec_item(self._v, index))

    def __add__(self, other: "PointVector") -> "PointVector":
        return PointVector(backend.vec_concat(self._v, other._v))

    def msm(self, scalars: Sequence[int]) -> Point:
        if len(scalars) != len(self):
            raise ValueError("scalar and point counts differ")
        return Point(backend.msm(self._v, scalars))

    def fold(self, hi: "PointVector", k: int) -> "PointVector":
        """Elementwise ``self[i] + k * hi[i]``."""
        if len(hi) != len(self):
            raise ValueError("fold halves differ in length")
        return PointVector(backend.fold(self._v, hi._v, k))


def msm(points: Sequence[Point], scalars: Sequence[int]) -> Point:
    return PointVector.of(points).msm(scalars)


def random_scalar(rng=None) -> int:
    """Uniform nonzero scalar; ``rng`` may be a ``random.Random`` for reproducible runs."""
    while True:
        raw = rng.randbytes(64) if rng is not None else os.urandom(64)
        k = int.from_bytes(raw, "little") % ORDER
        if k:
            return k


def scalar_from_hash(*parts: bytes) -> int:
    h = hashlib.sha512()
    for part in parts:
        h.update(len(part).to_bytes(4, "big"))
        h.update(part)
    return int.from_bytes(h.digest(), "little") % ORDER
