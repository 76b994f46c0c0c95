"""Bulletproofs arithmetic-circuit argument with a logarithmic inner-product proof.

Public inputs enter only through the right-hand side of linear constraints and
the Fiat-Shamir transcript, so the argument needs no input commitments.  A
proof consists of eight points, three scalars, ``log2(n)`` point pairs and two
final scalars: ``13 + 2*log2(n)`` group elements of 32 bytes each.
"""

from __future__ import annotations

import hashlib
import os
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .. import group
from ..group import ORDER, Point, PointVector
from ..primitives.field import inv
from .r1cs import CircuitShape, ConstraintSystem, UnsatisfiedError, WitnessSystem

ELEMENT_LEN = 32
FIXED_ELEMENTS = 13
CACHE_ENV = "ZKAUDIT_CACHE_DIR"


def padded_size(num_gates: int) -> int:
    return 1 << max(0, (num_gates - 1).bit_length()) if num_gates > 1 else 1


def rounds_for(num_gates: int) -> int:
    return padded_size(num_gates).bit_length() - 1


def element_count(num_gates: int) -> int:
    return FIXED_ELEMENTS + 2 * rounds_for(num_gates)


def proof_size(num_gates: int) -> int:
    return ELEMENT_LEN * element_count(num_gates)


class Transcript:
    """Hash-chained Fiat-Shamir transcript."""

    def __init__(self, label: bytes):
        self._state = hashlib.sha512(b"zkaudit/transcript/v1" + _frame(label)).digest()

    def append(self, label: bytes, message: bytes) -> None:
        self._state = hashlib.sha512(self._state + _frame(label) + _frame(message)).digest()

    def append_point(self, label: bytes, p: Point | bytes) -> None:
        self.append(label, p if isinstance(p, bytes) else p.encode())

    def append_scalar(self, label: bytes, k: int) -> None:
        self.append(label, (k % ORDER).to_bytes(32, "little"))

    def challenge(self, label: bytes) -> int:
        counter = 0
        while True:
            digest = hashlib.sha512(self._state + b"challenge" + _frame(label) + bytes([counter])).digest()
            k = int.from_bytes(digest, "little") % ORDER
            counter += 1
            if k:
                self._state = hashlib.sha512(self._state + digest).digest()
                return k


def _frame(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


class Generators:
    """Transparent generator vectors derived by hashing to the group."""

    _lock = threading.Lock()
    _shared: dict[bytes, "Generators"] = {}

    def __init__(self, label: bytes = b"zkaudit/bulletproofs/v1"):
        self.label = label
        self.value_base = Point.generator()
        self.blinding_base = Point.hash_to_point(label + b"/blinding")
        self._g = PointVector.of([])
        self._h = PointVector.of([])

    @classmethod
    def shared(cls, label: bytes = b"zkaudit/bulletproofs/v1") -> "Generators":
        with cls._lock:
            if label not in cls._shared:
                cls._shared[label] = cls(label)
            return cls._shared[label]

    def _derive(self, which: bytes, start: int, stop: int) -> PointVector:
        return PointVector.of(
            Point.hash_to_point(self.label + b"/" + which, i.to_bytes(4, "big")) for i in range(start, stop)
        )

    def _cache_file(self, n: int) -> Path | None:
        root = os.environ.get(CACHE_ENV)
        if not root:
            return None
        tag = hashlib.sha256(self.label).hexdigest()[:16]
        return Path(root) / f"generators-{tag}-{n}.bin"

    def ensure(self, n: int) -> None:
        with self._lock:
            have = len(self._g)
            if have >= n:
                return
            path = self._cache_file(n)
            if path is not None and path.exists():
                data = path.read_bytes()
                if len(data) == 64 * n:
                    self._g = PointVector.decode(data[: 32 * n])
                    self._h = PointVector.decode(data[32 * n :])
                    return
            self._g = self._g + self._derive(b"G", have, n)
            self._h = self._h + self._derive(b"H", have, n)
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp")
                tmp.write_bytes(self._g[:n].encode() + self._h[:n].encode())
                tmp.replace(path)

    def g(self, n: int) -> PointVector:
        self.ensure(n)
        return self._g[:n]

    def h(self, n: int) -> PointVector:
        self.ensure(n)
        return self._h[:n]


@dataclass(frozen=True)
class Proof:
    a_i: bytes
    a_o: bytes
    s: bytes
    t_1: bytes
    t_3: bytes
    t_4: bytes
    t_5: bytes
    t_6: bytes
    t_x_blinding: int
    e_blinding: int
    t_x: int
    l_vec: tuple[bytes, ...]
    r_vec: tuple[bytes, ...]
    a: int
    b: int

    @property
    def element_count(self) -> int:
        return FIXED_ELEMENTS + 2 * len(self.l_vec)

    def to_bytes(self) -> bytes:
        out = [self.a_i, self.a_o, self.s, self.t_1, self.t_3, self.t_4, self.t_5, self.t_6]
        out += [_scalar(self.t_x_blinding), _scalar(self.e_blinding), _scalar(self.t_x)]
        for l_pt, r_pt in zip(self.l_vec, self.r_vec):
            out += [l_pt, r_pt]
        out += [_scalar(self.a), _scalar(self.b)]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Proof":
        """Structural parse; point validity is checked during verification."""
        if len(data) % ELEMENT_LEN:
            raise ValueError("proof length is not a multiple of 32")
        count = len(data) // ELEMENT_LEN
        if count < FIXED_ELEMENTS or (count - FIXED_ELEMENTS) % 2:
            raise ValueError("proof has an impossible element count")
        chunks = [data[i : i + ELEMENT_LEN] for i in range(0, len(data), ELEMENT_LEN)]
        scalars = [chunks[8], chunks[9], chunks[10], chunks[-2], chunks[-1]]
        values = []
        for s in scalars:
            k = int.from_bytes(s, "little")
            if k >= ORDER:
                raise ValueError("non-canonical scalar in proof")
            values.append(k)
        pairs = chunks[11:-2]
        return cls(
            *chunks[:8],
            values[0],
            values[1],
            values[2],
            tuple(pairs[0::2]),
            tuple(pairs[1::2]),
            values[3],
            values[4],
        )


def _scalar(k: int) -> bytes:
    return (k % ORDER).to_bytes(32, "little")


def _powers(base: int, n: int) -> list[int]:
    out = [1] * n
    for i in range(1, n):
        out[i] = out[i - 1] * base % ORDER
    return out


def _inner(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b)) % ORDER


def _bind_statement(transcript: Transcript, shape: CircuitShape, public_inputs: Sequence[int]) -> None:
    transcript.append(b"shape", struct.pack(">QQQ", shape.num_gates, shape.num_constraints, shape.num_public))
    for x in public_inputs:
        transcript.append_scalar(b"public", x)


def prove(
    cs: ConstraintSystem | WitnessSystem,
    shape: CircuitShape,
    label: bytes,
    gens: Generators | None = None,
    rng=None,
) -> Proof:
    """Prove the wire values held by ``cs`` against the compiled ``shape``."""
    if cs.num_gates != shape.num_gates or cs.num_constraints != shape.num_constraints:
        raise ValueError("witness synthesis does not match the compiled circuit")
    if isinstance(cs, ConstraintSystem) and tuple(cs.constraints) != shape.constraints:
        raise ValueError("witness synthesis does not match the compiled circuit")
    cs.check()
    gens = gens or Generators.shared()
    p = ORDER
    n = shape.num_gates
    n_pad = padded_size(n)
    g_all = gens.g(n_pad)
    h_all = gens.h(n_pad)
    b_val, b_blind = gens.value_base, gens.blinding_base

    def rand() -> int:
        return group.random_scalar(rng)

    transcript = Transcript(label)
    public_inputs = cs.public_inputs
    _bind_statement(transcript, shape, public_inputs)

    a_l, a_r, a_o = cs.a_l, cs.a_r, cs.a_o
    alpha, beta, rho = rand(), rand(), rand()
    s_l = [rand() for _ in range(n)]
    s_r = [rand() for _ in range(n)]
    g_n, h_n = g_all[:n], h_all[:n]
    gh = g_n + h_n
    blind_vec = PointVector.of([b_blind])
    a_i_pt = (gh + blind_vec).msm(a_l + a_r + [alpha])
    a_o_pt = (g_n + blind_vec).msm(a_o + [beta])
    s_pt = (gh + blind_vec).msm(s_l + s_r + [rho])
    for lbl, pt in ((b"A_I", a_i_pt), (b"A_O", a_o_pt), (b"S", s_pt)):
        transcript.append_point(lbl, pt)
    y = transcript.challenge(b"y")
    z = transcript.challenge(b"z")

    w_l, w_r, w_o, _ = shape.weights(z, public_inputs)
    y_pow = _powers(y, n_pad)
    y_inv = inv(y)
    y_inv_pow = _powers(y_inv, n_pad)

    # l(X) = l1 X + l2 X^2 + l3 X^3 ; r(X) = r0 + r1 X + r3 X^3
    l1 = [(a_l[i] + y_inv_pow[i] * w_r[i]) % p for i in range(n)]
    l2 = a_o
    l3 = s_l
    r0 = [(w_o[i] - y_pow[i]) % p for i in range(n)]
    r1 = [(y_pow[i] * a_r[i] + w_l[i]) % p for i in range(n)]
    r3 = [y_pow[i] * s_r[i] % p for i in range(n)]

    t1 = _inner(l1, r0)
    t2 = (_inner(l1, r1) + _inner(l2, r0)) % p
    t3 = (_inner(l2, r1) + _inner(l3, r0)) % p
    t4 = (_inner(l1, r3) + _inner(l3, r1)) % p
    t5 = _inner(l2, r3)
    t6 = _inner(l3, r3)
    del t2  # fixed by the constraints; the verifier recomputes it

    taus = {k: rand() for k in (1, 3, 4, 5, 6)}
    t_coeffs = {1: t1, 3: t3, 4: t4, 5: t5, 6: t6}
    vb = PointVector.of([b_val, b_blind])
    t_pts = {k: vb.msm([t_coeffs[k], taus[k]]) for k in (1, 3, 4, 5, 6)}
    for k in (1, 3, 4, 5, 6):
        transcript.append_point(b"T_%d" % k, t_pts[k])
    x = transcript.challenge(b"x")

    x2 = x * x % p
    x3 = x2 * x % p
    l_vec = [(l1[i] * x + l2[i] * x2 + l3[i] * x3) % p for i in range(n)]
    r_vec = [(r0[i] + r1[i] * x + r3[i] * x3) % p for i in range(n)]
    # padding gates carry zero witnesses, so only r0 = -y^i survives there
    l_vec += [0] * (n_pad - n)
    r_vec += [(-y_pow[i]) % p for i in range(n, n_pad)]

    t_x = _inner(l_vec, r_vec)
    t_x_blinding = sum(taus[k] * pow(x, k, p) for k in taus) % p
    e_blinding = (alpha * x + beta * x2 + rho * x3) % p
    transcript.append_scalar(b"t_x", t_x)
    transcript.append_scalar(b"t_x_blinding", t_x_blinding)
    transcript.append_scalar(b"e_blinding", e_blinding)
    w = transcript.challenge(b"w")
    q_pt = b_val * w

    l_pts, r_pts, a_fin, b_fin = _ipa_prove(transcript, q_pt, g_all, h_all, y_inv, l_vec, r_vec)
    return Proof(
        a_i_pt.encode(),
        a_o_pt.encode(),
        s_pt.encode(),
        *(t_pts[k].encode() for k in (1, 3, 4, 5, 6)),
        t_x_blinding,
        e_blinding,
        t_x,
        tuple(l_pts),
        tuple(r_pts),
        a_fin,
        b_fin,
    )


def _ipa_prove(transcript, q_pt, g_raw, h_raw, y_inv, a, b):
    """Inner-product argument for P = <a,G> + <b,H'> + <a,b>Q with H'_i = y^-i H_i.

    Effective generators are kept as raw points times per-index scalar
    factors; every fold then needs a single shared multiplier per vector.
    """
    p = ORDER
    n = len(a)
    g_fac = [1] * n
    h_fac = _powers(y_inv, n)
    a, b = list(a), list(b)
    l_out, r_out = [], []
    q_vec = PointVector.of([q_pt])
    while n > 1:
        half = n // 2
        a_lo, a_hi = a[:half], a[half:]
        b_lo, b_hi = b[:half], b[half:]
        g_lo, g_hi = g_raw[:half], g_raw[half:]
        h_lo, h_hi = h_raw[:half], h_raw[half:]
        c_l = _inner(a_lo, b_hi)
        c_r = _inner(a_hi, b_lo)
        l_pt = (g_hi + h_lo + q_vec).msm(
            [a_lo[i] * g_fac[half + i] % p for i in range(half)]
            + [b_hi[i] * h_fac[i] % p for i in range(half)]
            + [c_l]
        )
        r_pt = (g_lo + h_hi + q_vec).msm(
            [a_hi[i] * g_fac[i] % p for i in range(half)]
            + [b_lo[i] * h_fac[half + i] % p for i in range(half)]
            + [c_r]
        )
        transcript.append_point(b"L", l_pt)
        transcript.append_point(b"R", r_pt)
        u = transcript.challenge(b"u")
        u_inv = inv(u)
        l_out.append(l_pt.encode())
        r_out.append(r_pt.encode())

        a = [(a_lo[i] * u + a_hi[i] * u_inv) % p for i in range(half)]
        b = [(b_lo[i] * u_inv + b_hi[i] * u) % p for i in range(half)]
        # G'_i = u^-1 G_lo + u G_hi, factor ratios are uniform across i
        g_ratio = g_fac[half] * inv(g_fac[0]) % p
        h_ratio = h_fac[half] * inv(h_fac[0]) % p
        g_raw = g_lo.fold(g_hi, u * u % p * g_ratio % p)
        h_raw = h_lo.fold(h_hi, u_inv * u_inv % p * h_ratio % p)
        g_fac = [g_fac[i] * u_inv % p for i in range(half)]
        h_fac = [h_fac[i] * u % p for i in range(half)]
        n = half
    return l_out, r_out, a[0], b[0]


def verify(
    shape: CircuitShape,
    public_inputs: Sequence[int],
    proof: Proof,
    label: bytes,
    gens: Generators | None = None,
    rng=None,
) -> bool:
    if len(public_inputs) != shape.num_public:
        return False
    n = shape.num_gates
    n_pad = padded_size(n)
    lg = rounds_for(n)
    if len(proof.l_vec) != lg or len(proof.r_vec) != lg:
        return False
    gens = gens or Generators.shared()
    p = ORDER
    try:
        a_i_pt, a_o_pt, s_pt = (Point.decode(x) for x in (proof.a_i, proof.a_o, proof.s))
        t_pts = [Point.decode(x) for x in (proof.t_1, proof.t_3, proof.t_4, proof.t_5, proof.t_6)]
        l_pts = [Point.decode(x) for x in proof.l_vec]
        r_pts = [Point.decode(x) for x in proof.r_vec]
    except ValueError:
        return False

    transcript = Transcript(label)
    _bind_statement(transcript, shape, public_inputs)
    transcript.append_point(b"A_I", proof.a_i)
    transcript.append_point(b"A_O", proof.a_o)
    transcript.append_point(b"S", proof.s)
    y = transcript.challenge(b"y")
    z = transcript.challenge(b"z")
    for k, pt in zip((1, 3, 4, 5, 6), (proof.t_1, proof.t_3, proof.t_4, proof.t_5, proof.t_6)):
        transcript.append_point(b"T_%d" % k, pt)
    x = transcript.challenge(b"x")
    transcript.append_scalar(b"t_x", proof.t_x)
    transcript.append_scalar(b"t_x_blinding", proof.t_x_blinding)
    transcript.append_scalar(b"e_blinding", proof.e_blinding)
    w = transcript.challenge(b"w")
    us = []
    for l_enc, r_enc in zip(proof.l_vec, proof.r_vec):
        transcript.append_point(b"L", l_enc)
        transcript.append_point(b"R", r_enc)
        us.append(transcript.challenge(b"u"))

    w_l, w_r, w_o, w_c = shape.weights(z, public_inputs)
    y_inv = inv(y)
    y_inv_pow = _powers(y_inv, n_pad)
    delta = sum(y_inv_pow[i] * w_r[i] * w_l[i] for i in range(n)) % p

    u_inv = [inv(u) for u in us]
    # s_i = prod_j u_j^(+1 if bit j of i (MSB = first round) is set else -1)
    s = [1]
    for j in reversed(range(lg)):
        s = [v * u_inv[j] % p for v in s] + [v * us[j] % p for v in s]
    s_inv = s[::-1]

    c = group.random_scalar(rng)
    x2 = x * x % p
    a_fin, b_fin = proof.a, proof.b
    g_scalars = []
    h_scalars = []
    for i in range(n_pad):
        wr = w_r[i] if i < n else 0
        wl = w_l[i] if i < n else 0
        wo = w_o[i] if i < n else 0
        g_scalars.append((x * y_inv_pow[i] * wr - a_fin * s[i]) % p)
        h_scalars.append((y_inv_pow[i] * (x * wl + wo - b_fin * s_inv[i]) - 1) % p)

    b_scalar = (w * (proof.t_x - a_fin * b_fin) + c * (x2 * (w_c + delta) - proof.t_x)) % p
    blind_scalar = (-proof.e_blinding - c * proof.t_x_blinding) % p
    points = [a_i_pt, a_o_pt, s_pt, *t_pts, *l_pts, *r_pts, gens.value_base, gens.blinding_base]
    scalars = [x, x2, x2 * x % p]
    scalars += [c * pow(x, k, p) % p for k in (1, 3, 4, 5, 6)]
    scalars += [u * u % p for u in us]
    scalars += [ui * ui % p for ui in u_inv]
    scalars += [b_scalar, blind_scalar]
    total = (gens.g(n_pad) + gens.h(n_pad) + PointVector.of(points)).msm(g_scalars + h_scalars + scalars)
    return total == Point.identity()


def simulate(num_gates: int, rng=None) -> Proof:
    """Correctly shaped proof made of random valid points and random scalars."""
    lg = rounds_for(num_gates)

    def pt() -> bytes:
        raw = rng.randbytes(64) if rng is not None else os.urandom(64)
        return Point.from_uniform(raw).encode()

    def sc() -> int:
        return group.random_scalar(rng)

    return Proof(
        *(pt() for _ in range(8)),
        sc(),
        sc(),
        sc(),
        tuple(pt() for _ in range(lg)),
        tuple(pt() for _ in range(lg)),
        sc(),
        sc(),
    )


__all__ = [
    "Generators",
    "Proof",
    "Transcript",
    "UnsatisfiedError",
    "element_count",
    "padded_size",
    "proof_size",
    "prove",
    "rounds_for",
    "simulate",
    "verify",
]
