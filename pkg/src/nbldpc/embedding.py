"""Bit embedding of GF(2^q) symbols and binary expansion of parity-check matrices.

A symbol maps to its q coefficient bits, most significant first, so a
length-n symbol vector becomes a length-nq bit vector.  Multiplication by a
fixed field element h acts on that bit vector as an invertible binary q x q
matrix whose column s is the embedding of h * 2^(q-1-s); stacking these
blocks expands an m x n check matrix over GF(2^q) into an equivalent
mq x nq binary check matrix with the same solution set under the embedding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .gf2q import FieldContext

__all__ = [
    "NbParityMatrix",
    "BinaryExpandedMatrix",
    "embed",
    "embed_symbols",
    "deembed",
    "deembed_symbols",
    "mult_matrix",
    "expand_matrix",
]


def embed(value: int, ctx: FieldContext) -> np.ndarray:
    """q-bit embedding of one symbol, most significant bit first."""
    ctx.validate(value)
    shifts = np.arange(ctx.q - 1, -1, -1)
    return ((value >> shifts) & 1).astype(np.uint8)


def embed_symbols(symbols, ctx: FieldContext) -> np.ndarray:
    """Flatten a symbol sequence into its length len(symbols)*q bit vector.

    Accepts any array shape; bits are appended along a new trailing axis and
    the result keeps the leading axes, e.g. (B, n) symbols -> (B, n*q) bits.
    """
    arr = np.atleast_1d(np.asarray(symbols, dtype=np.int64))
    ctx.validate(arr)
    shifts = np.arange(ctx.q - 1, -1, -1)
    bits = (arr[..., None] >> shifts) & 1
    return bits.reshape(*arr.shape[:-1], arr.shape[-1] * ctx.q).astype(np.uint8)


def deembed(bits, ctx: FieldContext) -> int:
    """Inverse of embed: a length-q bit vector back to its symbol."""
    b = np.asarray(bits, dtype=np.int64)
    if b.shape != (ctx.q,):
        raise ValueError(f"expected {ctx.q} bits, got shape {b.shape}")
    weights = 1 << np.arange(ctx.q - 1, -1, -1)
    return int(b @ weights)


def deembed_symbols(bits, ctx: FieldContext) -> np.ndarray:
    """Length n*q bit vector(s) back to n symbols; leading axes preserved."""
    b = np.asarray(bits, dtype=np.int64)
    if b.shape[-1] % ctx.q:
        raise ValueError(f"bit length {b.shape[-1]} is not a multiple of q={ctx.q}")
    n = b.shape[-1] // ctx.q
    weights = 1 << np.arange(ctx.q - 1, -1, -1)
    return b.reshape(*b.shape[:-1], n, ctx.q) @ weights


def mult_matrix(h: int, ctx: FieldContext) -> np.ndarray:
    """Binary q x q matrix acting on embeddings like multiplication by h.

    Column s is the embedding of h * 2^(q-1-s).  The matrix is invertible
    over GF(2) whenever h != 0 and is the zero matrix for h = 0.
    """
    ctx.validate(h)
    powers = 1 << np.arange(ctx.q - 1, -1, -1)
    cols = ctx.mul(np.full(ctx.q, h, dtype=np.int64), powers)
    shifts = np.arange(ctx.q - 1, -1, -1)
    return (((cols[None, :] >> shifts[:, None])) & 1).astype(np.uint8)


@dataclass(frozen=True)
class NbParityMatrix:
    """Sparse m x n matrix over GF(2^q): one (column, value) list per row."""

    m: int
    n: int
    rows: tuple  # tuple of tuples of (col, value), each row sorted by col

    @classmethod
    def from_entries(cls, m: int, n: int, entries) -> "NbParityMatrix":
        per_row: list[dict] = [dict() for _ in range(m)]
        for r, c, val in entries:
            if not (0 <= r < m and 0 <= c < n):
                raise ValueError(f"entry ({r}, {c}) outside {m} x {n}")
            if val <= 0:
                raise ValueError(f"stored entries must be nonzero, got {val} at ({r}, {c})")
            if c in per_row[r]:
                raise ValueError(f"duplicate entry at ({r}, {c})")
            per_row[r][c] = int(val)
        rows = tuple(tuple(sorted(d.items())) for d in per_row)
        return cls(m=m, n=n, rows=rows)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.m, self.n), dtype=np.int64)
        for r, row in enumerate(self.rows):
            for c, val in row:
                dense[r, c] = val
        return dense


class BinaryExpandedMatrix:
    """The mq x nq binary expansion, stored as sorted column-index lists per row."""

    def __init__(self, n: int, m: int, q: int, row_support: list[np.ndarray]):
        self.n = n
        self.m = m
        self.q = q
        self.nq = n * q
        self.mq = m * q
        self.row_support = row_support

    @property
    def row_degrees(self) -> np.ndarray:
        return np.array([len(s) for s in self.row_support], dtype=np.int64)

    def to_csr(self) -> sp.csr_matrix:
        indptr = np.zeros(self.mq + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(self.row_degrees)
        indices = np.concatenate(self.row_support) if self.mq else np.zeros(0, np.int64)
        data = np.ones(len(indices), dtype=np.int64)
        return sp.csr_matrix((data, indices, indptr), shape=(self.mq, self.nq))


def expand_matrix(H: NbParityMatrix, ctx: FieldContext) -> BinaryExpandedMatrix:
    """Expand a GF(2^q) check matrix into the equivalent binary one.

    For every codeword c of H the embedded bit vector x satisfies all mq
    binary rows (mod 2), and conversely every binary solution de-embeds to
    a codeword.
    """
    q = ctx.q
    blocks: dict[int, np.ndarray] = {}
    row_support: list[np.ndarray] = []
    for row in H.rows:
        per_entry = []
        for c, val in row:
            ctx.validate(val)
            blk = blocks.get(val)
            if blk is None:
                blk = blocks.setdefault(val, mult_matrix(val, ctx))
            per_entry.append((c, blk))
        for bit_row in range(q):
            cols = [c * q + np.flatnonzero(blk[bit_row]) for c, blk in per_entry]
            support = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
            row_support.append(np.sort(support).astype(np.int64))
    return BinaryExpandedMatrix(n=H.n, m=H.m, q=q, row_support=row_support)
