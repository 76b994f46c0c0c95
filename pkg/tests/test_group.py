import hashlib
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sodium
from zkaudit import _ref25519 as ref
from zkaudit import group
from zkaudit.group import ORDER, Point, PointVector

needs_sodium = pytest.mark.skipif(not sodium.available, reason="libsodium not found")

scalars = st.integers(min_value=0, max_value=ORDER - 1)
nonzero = st.integers(min_value=1, max_value=ORDER - 1)
uniform = st.binary(min_size=64, max_size=64)

# ristretto255 test vectors: multiples 0..4 of the base point
SMALL_MULTIPLES = [
    "0000000000000000000000000000000000000000000000000000000000000000",
    "e2f2ae0a6abc4e71a884a961c500515f58e30b6aa582dd8db6a65945e08d2d76",
    "6a493210f7499cd17fecb510ae0cea23a110e8d5b901f8acadd3095c73a3b919",
    "94741f5d5d52755ece4f23f044ee27d5d1ea1e2bd196b462166b16152a9d0259",
    "da80862773358b466ffadfe0b3293ab3d9fd53c5ea6c955358f568322daf6a57",
]

# encodings that must be rejected: non-canonical field elements and negative values
BAD_ENCODINGS = [
    "00ffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff",
    "ffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff7f",
    "0100000000000000000000000000000000000000000000000000000000000000",
    "ecffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff7f",
]


@settings(max_examples=50, deadline=None)
@given(uniform)
def test_high_bit_encodings_rejected(h):
    enc = bytearray(Point.from_uniform(h).encode())
    enc[31] |= 0x80
    with pytest.raises(ValueError):
        Point.decode(bytes(enc))


def test_backend_reports_name():
    assert group.backend.name in ("native", "python")


@pytest.mark.parametrize("k,hexenc", list(enumerate(SMALL_MULTIPLES)))
def test_small_multiples_of_base(k, hexenc):
    assert (Point.generator() * k).encode().hex() == hexenc


@pytest.mark.parametrize("hexenc", BAD_ENCODINGS)
def test_rejects_bad_encodings(hexenc):
    with pytest.raises(ValueError):
        Point.decode(bytes.fromhex(hexenc))


@needs_sodium
@settings(max_examples=60, deadline=None)
@given(nonzero)
def test_base_mult_matches_libsodium(k):
    assert (Point.generator() * k).encode() == sodium.scalarmult_base(k)


@needs_sodium
@settings(max_examples=60, deadline=None)
@given(uniform, uniform, nonzero)
def test_group_ops_match_libsodium(h1, h2, k):
    p, q = Point.from_uniform(h1), Point.from_uniform(h2)
    assert p.encode() == sodium.from_hash(h1)
    assert (p + q).encode() == sodium.add(p.encode(), q.encode())
    assert (p - q).encode() == sodium.sub(p.encode(), q.encode())
    expected = sodium.scalarmult(k, p.encode())
    assert (p * k).encode() == (expected if expected is not None else bytes(32))


@needs_sodium
@settings(max_examples=200, deadline=None)
@given(st.binary(min_size=32, max_size=32))
def test_decode_validity_matches_libsodium(data):
    # libsodium masks bit 255 before its canonicity check; we reject it outright
    data = data[:31] + bytes([data[31] & 0x7F])
    try:
        Point.decode(data)
        ours = True
    except ValueError:
        ours = False
    assert ours == sodium.is_valid(data)


@settings(max_examples=40, deadline=None)
@given(uniform, scalars, scalars)
def test_scalar_distributivity(h, a, b):
    p = Point.from_uniform(h)
    assert p * a + p * b == p * ((a + b) % ORDER)
    assert p * ORDER == Point.identity()


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(uniform, scalars), min_size=0, max_size=24))
def test_msm_equals_sum_of_products(pairs):
    points = [Point.from_uniform(h) for h, _ in pairs]
    ks = [k for _, k in pairs]
    expected = Point.identity()
    for p, k in zip(points, ks):
        expected = expected + p * k
    assert group.msm(points, ks) == expected


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=8).flatmap(lambda n: st.lists(uniform, min_size=2 * n, max_size=2 * n)), nonzero)
def test_fold_is_pointwise_lo_plus_k_hi(hs, k):
    pts = [Point.from_uniform(h) for h in hs]
    half = len(pts) // 2
    folded = PointVector.of(pts[:half]).fold(PointVector.of(pts[half:]), k)
    assert [folded[i] for i in range(half)] == [pts[i] + pts[half + i] * k for i in range(half)]


def test_vector_roundtrip_and_slicing():
    pts = [Point.hash_to_point(b"vec", bytes([i])) for i in range(7)]
    v = PointVector.of(pts)
    assert PointVector.decode(v.encode()).encode() == v.encode()
    assert [p.encode() for p in v[2:5]] == [p.encode() for p in pts[2:5]]
    assert len(v + v) == 14


@settings(max_examples=30, deadline=None)
@given(uniform, nonzero)
def test_reference_backend_agrees(h, k):
    """The pure-Python formulas and the active backend produce the same bytes."""
    p = Point.from_uniform(h)
    raw = ref.from_uniform(h)
    assert ref.encode(raw) == p.encode()
    assert ref.encode(ref.mul(raw, k)) == (p * k).encode()
    assert ref.encode(ref.add(raw, ref.BASEPOINT)) == (p + Point.generator()).encode()


def test_forced_python_backend_in_subprocess():
    code = (
        "import hashlib; from zkaudit import group; from zkaudit.group import Point;"
        "assert group.backend.name == 'python';"
        "p = Point.from_uniform(hashlib.sha512(b'x').digest()) * 123456789;"
        "print(p.encode().hex())"
    )
    env = dict(os.environ, ZKAUDIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    expected = Point.from_uniform(hashlib.sha512(b"x").digest()) * 123456789
    assert out.stdout.strip() == expected.encode().hex()


def test_random_scalar_is_reproducible_and_nonzero():
    import random

    a = group.random_scalar(random.Random(5))
    assert a == group.random_scalar(random.Random(5))
    assert 0 < a < ORDER
