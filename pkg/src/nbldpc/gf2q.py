"""Arithmetic in GF(2^q) for 1 <= q <= 8.

Field elements are plain integers in [0, 2^q): bit i holds the coefficient
of x^i in the polynomial basis.  Addition is bitwise XOR; multiplication is
polynomial multiplication modulo a primitive polynomial, realized through
log/antilog tables built once at context construction.  A dense 2^q x 2^q
product table is also precomputed so that numpy arrays of elements can be
multiplied with a single fancy-indexing lookup.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "DEFAULT_PRIMITIVE_POLY",
    "FieldContext",
    "NonPrimitivePolynomial",
    "make_context",
]

# Degree-q primitive polynomials used when none is supplied, encoded as
# integers with bit i holding the coefficient of x^i (leading bit included).
DEFAULT_PRIMITIVE_POLY = {
    1: 0b11,         # x + 1
    2: 0b111,        # x^2 + x + 1
    3: 0b1011,       # x^3 + x + 1
    4: 0b10011,      # x^4 + x + 1
    5: 0b100101,     # x^5 + x^2 + 1
    6: 0b1000011,    # x^6 + x + 1
    7: 0b10000011,   # x^7 + x + 1
    8: 0b100011101,  # x^8 + x^4 + x^3 + x^2 + 1
}


class NonPrimitivePolynomial(ValueError):
    """The supplied modulus does not generate the full multiplicative group."""


class FieldContext:
    """Tables and operations for one GF(2^q).

    Immutable after construction and safe to share across threads and
    worker processes; all operations are pure lookups.
    """

    def __init__(self, q: int, prim_poly: int | None = None):
        if not 1 <= q <= 8:
            raise ValueError(f"q must be in [1, 8], got {q}")
        if prim_poly is None:
            prim_poly = DEFAULT_PRIMITIVE_POLY[q]
        if prim_poly.bit_length() != q + 1:
            raise ValueError(
                f"polynomial 0b{prim_poly:b} does not have degree {q}"
            )
        self.q = q
        self.order = 1 << q
        self.prim_poly = prim_poly
        self._build_tables()

    def _build_tables(self) -> None:
        order = self.order
        antilog = np.zeros(order - 1, dtype=np.int64)
        log = np.full(order, -1, dtype=np.int64)
        x = 1
        for i in range(order - 1):
            if log[x] >= 0:
                # x cycled back before exhausting the nonzero elements.
                raise NonPrimitivePolynomial(
                    f"0b{self.prim_poly:b} generates a multiplicative group "
                    f"of order {i}, expected {order - 1}"
                )
            antilog[i] = x
            log[x] = i
            x <<= 1
            if x & order:
                x ^= self.prim_poly
        if x != 1:
            raise NonPrimitivePolynomial(
                f"0b{self.prim_poly:b} does not return x^{order - 1} to 1"
            )
        self.antilog = antilog
        self.log = log

        elems = np.arange(1, order)
        mul = np.zeros((order, order), dtype=np.int64)
        mul[1:, 1:] = antilog[(log[elems][:, None] + log[elems][None, :]) % (order - 1)]
        self.mul_table = mul
        inv = np.zeros(order, dtype=np.int64)
        inv[antilog] = antilog[(order - 1 - log[antilog]) % (order - 1)]
        self.inv_table = inv

    def add(self, a, b):
        """XOR of coefficient bits; works elementwise on arrays."""
        return a ^ b

    def mul(self, a, b):
        """Product modulo the primitive polynomial; works elementwise on arrays."""
        return self.mul_table[a, b]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return int(self.inv_table[a])

    def validate(self, a) -> None:
        """Raise if any value falls outside [0, 2^q)."""
        arr = np.asarray(a)
        if arr.size and (arr.min() < 0 or arr.max() >= self.order):
            raise ValueError(f"element outside [0, {self.order})")

    def __repr__(self) -> str:  # pragma: no cover
        return f"FieldContext(q={self.q}, prim_poly=0b{self.prim_poly:b})"


def make_context(q: int, prim_poly: int | None = None) -> FieldContext:
    """Build a GF(2^q) context, using the default polynomial when none is given."""
    return FieldContext(q, prim_poly)
