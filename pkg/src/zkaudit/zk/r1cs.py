"""Rank-1 constraint system builder in the multiplier-gate style.

Every gate ``i`` owns three wires (left, right, output) with
``left * right = output``.  Linear constraints are linear combinations of
wires, the constant one and symbolic public inputs that must equal zero.
The same synthesis code runs with witness values (proving) or without
(compiling the structure the verifier needs).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..primitives.field import MODULUS

ONE = -1
_LEFT, _RIGHT, _OUT = 0, 1, 2


def public_var(slot: int) -> int:
    return -2 - slot


def is_public(var: int) -> bool:
    return var <= -2


def public_slot(var: int) -> int:
    return -2 - var


class LC:
    """Linear combination over wire indices, ``ONE`` and public-input slots."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, int] | None = None):
        self.terms = terms if terms is not None else {}

    @classmethod
    def of(cls, value: "LC | int") -> "LC":
        if isinstance(value, LC):
            return value
        value %= MODULUS
        return cls({ONE: value} if value else {})

    @classmethod
    def var(cls, index: int) -> "LC":
        return cls({index: 1})

    def __add__(self, other: "LC | int") -> "LC":
        other = LC.of(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            s = (out.get(k, 0) + v) % MODULUS
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return LC(out)

    __radd__ = __add__

    def __neg__(self) -> "LC":
        return LC({k: MODULUS - v for k, v in self.terms.items()})

    def __sub__(self, other: "LC | int") -> "LC":
        return self + (-LC.of(other))

    def __rsub__(self, other: "LC | int") -> "LC":
        return LC.of(other) + (-self)

    def __mul__(self, k: int) -> "LC":
        if not isinstance(k, int):
            return NotImplemented
        k %= MODULUS
        if not k:
            return LC()
        return LC({var: v * k % MODULUS for var, v in self.terms.items()})

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"LC({self.terms})"


def linear_sum(coeffs: Sequence[int], lcs: Sequence[LC]) -> LC:
    """``sum(c * lc)`` with one dictionary pass per input."""
    out: dict[int, int] = {}
    for c, lc in zip(coeffs, lcs, strict=True):
        for var, v in lc.terms.items():
            out[var] = out.get(var, 0) + c * v
    return LC({k: v % MODULUS for k, v in out.items() if v % MODULUS})


class UnsatisfiedError(Exception):
    """The witness does not satisfy the circuit."""


@dataclass(frozen=True)
class CircuitShape:
    """Witness-independent structure of a compiled circuit."""

    num_gates: int
    num_public: int
    constraints: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def weights(self, z: int, public_inputs: Sequence[int]):
        """Collapse constraints with powers of ``z`` into the vectors the argument uses.

        Returns ``(w_L, w_R, w_O, w_c)`` where each linear constraint ``q``
        is weighted by ``z^(q+1)`` and ``w_c`` collects the right-hand side.
        """
        if len(public_inputs) != self.num_public:
            raise ValueError("wrong number of public inputs")
        p = MODULUS
        n = self.num_gates
        flat = [0] * (3 * n)
        wc = 0
        zq = z
        for terms in self.constraints:
            rhs = 0
            for var, coeff in terms:
                if var >= 0:
                    flat[var] += zq * coeff
                elif var == ONE:
                    rhs -= coeff
                else:
                    rhs -= coeff * public_inputs[public_slot(var)]
            wc += zq * rhs
            zq = zq * z % p
        w_l = [x % p for x in flat[_LEFT::3]]
        w_r = [x % p for x in flat[_RIGHT::3]]
        w_o = [x % p for x in flat[_OUT::3]]
        return w_l, w_r, w_o, wc % p


class ConstraintSystem:
    def __init__(self, num_public: int, public_inputs: Sequence[int] | None = None, proving: bool = False):
        if public_inputs is not None and len(public_inputs) != num_public:
            raise ValueError("wrong number of public inputs")
        self.num_public = num_public
        self.public_inputs = [x % MODULUS for x in public_inputs] if public_inputs is not None else None
        self.proving = proving
        self.a_l: list[int] = []
        self.a_r: list[int] = []
        self.a_o: list[int] = []
        self._gates = 0
        self.constraints: list[tuple[tuple[int, int], ...]] = []
        self._half_gate: int | None = None

    @property
    def num_gates(self) -> int:
        return self._gates

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @staticmethod
    def lift(x: LC | int) -> LC:
        return LC.of(x)

    @staticmethod
    def combine(coeffs: Sequence[int], items: Sequence[LC]) -> LC:
        return linear_sum(coeffs, items)

    def public(self, slot: int) -> LC:
        if not 0 <= slot < self.num_public:
            raise IndexError(slot)
        return LC.var(public_var(slot))

    def value(self, lc: LC | int) -> int:
        if not self.proving:
            raise RuntimeError("values are only available while proving")
        lc = LC.of(lc)
        total = 0
        for var, c in lc.terms.items():
            if var >= 0:
                gate, kind = divmod(var, 3)
                wire = (self.a_l, self.a_r, self.a_o)[kind]
                total += c * wire[gate]
            elif var == ONE:
                total += c
            else:
                total += c * self.public_inputs[public_slot(var)]
        return total % MODULUS

    def _new_gate(self, left: int, right: int) -> int:
        i = self._gates
        self._gates += 1
        if self.proving:
            self.a_l.append(left % MODULUS)
            self.a_r.append(right % MODULUS)
            self.a_o.append(left * right % MODULUS)
        return i

    def constrain(self, lc: LC | int) -> None:
        lc = LC.of(lc)
        self.constraints.append(tuple(lc.terms.items()))

    def multiply(self, left: LC | int, right: LC | int) -> tuple[LC, LC, LC]:
        left, right = LC.of(left), LC.of(right)
        lv = self.value(left) if self.proving else 0
        rv = self.value(right) if self.proving else 0
        i = self._new_gate(lv, rv)
        l_lc, r_lc, o_lc = LC.var(3 * i), LC.var(3 * i + 1), LC.var(3 * i + 2)
        self.constrain(l_lc - left)
        self.constrain(r_lc - right)
        return l_lc, r_lc, o_lc

    def allocate_multiplier(self, values: tuple[int, int] | None) -> tuple[LC, LC, LC]:
        """Fresh gate whose inputs are unconstrained witnesses."""
        if self.proving:
            if values is None:
                raise ValueError("witness values required while proving")
            i = self._new_gate(*values)
        else:
            i = self._new_gate(0, 0)
        return LC.var(3 * i), LC.var(3 * i + 1), LC.var(3 * i + 2)

    def allocate(self, value: int | None) -> LC:
        """Unconstrained witness variable; two allocations share one gate."""
        if self._half_gate is not None:
            i = self._half_gate
            self._half_gate = None
            if self.proving:
                if value is None:
                    raise ValueError("witness value required while proving")
                self.a_r[i] = value % MODULUS
                self.a_o[i] = self.a_l[i] * self.a_r[i] % MODULUS
            return LC.var(3 * i + 1)
        if self.proving and value is None:
            raise ValueError("witness value required while proving")
        i = self._new_gate(value or 0, 0)
        self._half_gate = i
        return LC.var(3 * i)

    def shape(self) -> CircuitShape:
        return CircuitShape(self._gates, self.num_public, tuple(self.constraints))

    def check(self) -> None:
        if not self.proving:
            raise RuntimeError("nothing to check without witness values")
        p = MODULUS
        for i, (l, r, o) in enumerate(zip(self.a_l, self.a_r, self.a_o)):
            if l * r % p != o:
                raise UnsatisfiedError(f"gate {i} does not multiply")
        wires = (self.a_l, self.a_r, self.a_o)
        for q, terms in enumerate(self.constraints):
            total = 0
            for var, c in terms:
                if var >= 0:
                    gate, kind = divmod(var, 3)
                    total += c * wires[kind][gate]
                elif var == ONE:
                    total += c
                else:
                    total += c * self.public_inputs[public_slot(var)]
            if total % p:
                raise UnsatisfiedError(f"linear constraint {q} is violated")



class Val:
    """A concrete value in place of a linear combination, for witness-only synthesis."""

    __slots__ = ("v",)

    def __init__(self, v: int):
        self.v = v % MODULUS

    def __add__(self, other: "Val | int") -> "Val":
        return Val(self.v + (other.v if isinstance(other, Val) else other))

    __radd__ = __add__

    def __neg__(self) -> "Val":
        return Val(-self.v)

    def __sub__(self, other: "Val | int") -> "Val":
        return Val(self.v - (other.v if isinstance(other, Val) else other))

    def __rsub__(self, other: int) -> "Val":
        return Val(other - self.v)

    def __mul__(self, k: int) -> "Val":
        if not isinstance(k, int):
            return NotImplemented
        return Val(self.v * k)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Val({self.v})"


class WitnessSystem:
    """Runs the same synthesis code computing only wire values.

    Multiplication constraints hold by construction here, so every explicit
    linear constraint is checked as it is added; the prover then pairs the
    wires with a shape compiled once by ``ConstraintSystem``.
    """

    proving = True

    def __init__(self, num_public: int, public_inputs: Sequence[int]):
        if len(public_inputs) != num_public:
            raise ValueError("wrong number of public inputs")
        self.num_public = num_public
        self.public_inputs = [x % MODULUS for x in public_inputs]
        self.a_l: list[int] = []
        self.a_r: list[int] = []
        self.a_o: list[int] = []
        self.num_constraints = 0
        self._violated: int | None = None
        self._half_gate: int | None = None

    @property
    def num_gates(self) -> int:
        return len(self.a_l)

    @staticmethod
    def lift(x: Val | int) -> Val:
        return x if isinstance(x, Val) else Val(x)

    @staticmethod
    def combine(coeffs: Sequence[int], items: Sequence[Val]) -> Val:
        return Val(sum(c * x.v for c, x in zip(coeffs, items, strict=True)))

    def public(self, slot: int) -> Val:
        return Val(self.public_inputs[slot])

    def value(self, x: Val | int) -> int:
        return x.v if isinstance(x, Val) else x % MODULUS

    def _gate(self, left: int, right: int) -> tuple[Val, Val, Val]:
        left, right = left % MODULUS, right % MODULUS
        out = left * right % MODULUS
        self.a_l.append(left)
        self.a_r.append(right)
        self.a_o.append(out)
        return Val(left), Val(right), Val(out)

    def constrain(self, x: Val | int) -> None:
        if self.value(x) and self._violated is None:
            self._violated = self.num_constraints
        self.num_constraints += 1

    def multiply(self, left: Val | int, right: Val | int) -> tuple[Val, Val, Val]:
        self.num_constraints += 2
        return self._gate(self.value(left), self.value(right))

    def allocate_multiplier(self, values: tuple[int, int] | None) -> tuple[Val, Val, Val]:
        if values is None:
            raise ValueError("witness values required while proving")
        return self._gate(*values)

    def allocate(self, value: int | None) -> Val:
        if value is None:
            raise ValueError("witness value required while proving")
        if self._half_gate is not None:
            i = self._half_gate
            self._half_gate = None
            self.a_r[i] = value % MODULUS
            self.a_o[i] = self.a_l[i] * self.a_r[i] % MODULUS
            return Val(value)
        self._half_gate = len(self.a_l)
        self._gate(value, 0)
        return Val(value)

    def check(self) -> None:
        if self._violated is not None:
            raise UnsatisfiedError(f"linear constraint {self._violated} is violated")
