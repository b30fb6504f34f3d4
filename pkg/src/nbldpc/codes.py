"""Code definitions: file formats, constructions, and GF(2^q) encoding.

Native text format (1-indexed, '#' comments allowed):

    n m q [prim_poly_hex]
    row col value
    ...

Binary alist files are also accepted; their unit entries can be overridden
with a uniform field value or a per-row value pattern applied in column
order, which is how published binary matrices are reused as codes over
larger fields.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .embedding import NbParityMatrix
from .gf2q import FieldContext, make_context

__all__ = [
    "CodeSpec",
    "Encoder",
    "ParseError",
    "RangeError",
    "load_code",
    "load_native",
    "save_native",
    "load_alist",
    "tanner_155_64",
    "random_regular_code",
    "gf_row_reduce",
    "gf_nullspace",
    "syndrome",
    "is_codeword",
]


class ParseError(ValueError):
    """Malformed code file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RangeError(ValueError):
    """Entry value outside the nonzero field range."""


@dataclass
class CodeSpec:
    """A parity-check matrix over GF(2^q) plus its field configuration."""

    name: str
    n: int
    m: int
    q: int
    entries: list = field(default_factory=list)  # (row, col, value), 0-indexed
    prim_poly: int | None = None

    def __post_init__(self):
        order = 1 << self.q
        seen = set()
        for r, c, v in self.entries:
            if not (0 <= r < self.m and 0 <= c < self.n):
                raise ParseError(f"entry ({r}, {c}) outside {self.m} x {self.n} matrix")
            if not 0 < v < order:
                raise RangeError(
                    f"value {v} at ({r}, {c}) outside (0, {order}) for GF(2^{self.q})"
                )
            if (r, c) in seen:
                raise ParseError(f"duplicate entry at ({r}, {c})")
            seen.add((r, c))

    def context(self) -> FieldContext:
        return make_context(self.q, self.prim_poly)

    def parity_matrix(self) -> NbParityMatrix:
        return NbParityMatrix.from_entries(self.m, self.n, self.entries)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.m, self.n), dtype=np.int64)
        for r, c, v in self.entries:
            dense[r, c] = v
        return dense


def load_native(path) -> CodeSpec:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    header = None
    entries = []
    header_line = 0
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if header is None:
            if len(parts) not in (3, 4):
                raise ParseError("header must be 'n m q [prim_poly_hex]'", lineno)
            try:
                n, m, q = (int(p) for p in parts[:3])
                poly = int(parts[3], 16) if len(parts) == 4 else None
            except ValueError:
                raise ParseError(f"bad header {text!r}", lineno)
            header = (n, m, q, poly)
            header_line = lineno
            continue
        if len(parts) != 3:
            raise ParseError(f"expected 'row col value', got {text!r}", lineno)
        try:
            r, c, v = (int(p) for p in parts)
        except ValueError:
            raise ParseError(f"non-integer entry {text!r}", lineno)
        n, m, q, poly = header
        if not (1 <= r <= m and 1 <= c <= n):
            raise ParseError(f"entry ({r}, {c}) outside 1..{m} x 1..{n}", lineno)
        if not 0 < v < (1 << q):
            raise RangeError(f"line {lineno}: value {v} outside (0, {1 << q})")
        entries.append((r - 1, c - 1, v))
    if header is None:
        raise ParseError("empty code file", header_line or 1)
    n, m, q, poly = header
    return CodeSpec(name=os.path.basename(str(path)), n=n, m=m, q=q,
                    entries=entries, prim_poly=poly)


def save_native(spec: CodeSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if spec.prim_poly is not None:
            fh.write(f"{spec.n} {spec.m} {spec.q} {spec.prim_poly:x}\n")
        else:
            fh.write(f"{spec.n} {spec.m} {spec.q}\n")
        for r, c, v in sorted(spec.entries):
            fh.write(f"{r + 1} {c + 1} {v}\n")


def _read_int_rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        rows = []
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                rows.append(([int(p) for p in text.split()], lineno))
            except ValueError:
                raise ParseError(f"non-integer token in {text!r}", lineno)
    return rows


def load_alist(path, q: int, value: int = 1, row_pattern=None,
               prim_poly: int | None = None) -> CodeSpec:
    """Read a binary alist file and lift its unit entries into GF(2^q).

    ``value`` sets every nonzero entry uniformly; ``row_pattern`` instead
    assigns values position-by-position along each row's support in column
    order (cycling if the row is longer than the pattern).
    """
    rows = _read_int_rows(path)
    if len(rows) < 4:
        raise ParseError("alist needs at least 4 header lines")
    (first, l1), (second, l2) = rows[0], rows[1]
    if len(first) != 2 or len(second) != 2:
        raise ParseError("first two alist lines must hold two integers each", l1)
    n, m = first
    max_col_deg, max_row_deg = second
    if len(rows) < 4 + n + m:
        raise ParseError(f"alist truncated: need {4 + n + m} content lines, got {len(rows)}")
    col_degs, l3 = rows[2]
    row_degs, l4 = rows[3]
    if len(col_degs) != n:
        raise ParseError(f"expected {n} column degrees, got {len(col_degs)}", l3)
    if len(row_degs) != m:
        raise ParseError(f"expected {m} row degrees, got {len(row_degs)}", l4)

    row_cols: list[list[int]] = [[] for _ in range(m)]
    # Column blocks: verify indices and cross-check against the row blocks.
    col_rows: list[list[int]] = []
    for c in range(n):
        vals, lineno = rows[4 + c]
        support = [x for x in vals if x != 0]
        if len(support) != col_degs[c]:
            raise ParseError(
                f"column {c + 1} lists {len(support)} entries, degree says {col_degs[c]}",
                lineno,
            )
        for x in support:
            if not 1 <= x <= m:
                raise ParseError(f"row index {x} out of range 1..{m}", lineno)
        col_rows.append(support)
    for r in range(m):
        vals, lineno = rows[4 + n + r]
        support = [x for x in vals if x != 0]
        if len(support) != row_degs[r]:
            raise ParseError(
                f"row {r + 1} lists {len(support)} entries, degree says {row_degs[r]}",
                lineno,
            )
        for x in support:
            if not 1 <= x <= n:
                raise ParseError(f"column index {x} out of range 1..{n}", lineno)
        row_cols[r] = sorted(support)

    # The two blocks must describe the same matrix.
    from_cols = sorted((r, c + 1) for c in range(n) for r in col_rows[c])
    from_rows = sorted((r + 1, c) for r in range(m) for c in row_cols[r])
    if [(r, c) for r, c in from_cols] != [(r, c) for r, c in from_rows]:
        raise ParseError("row and column blocks disagree")

    order = 1 << q
    entries = []
    for r in range(m):
        for pos, c in enumerate(row_cols[r]):
            if row_pattern is not None:
                v = int(row_pattern[pos % len(row_pattern)])
            else:
                v = int(value)
            if not 0 < v < order:
                raise RangeError(f"value {v} outside (0, {order}) for GF(2^{q})")
            entries.append((r, c - 1, v))
    return CodeSpec(name=os.path.basename(str(path)), n=n, m=m, q=q,
                    entries=entries, prim_poly=prim_poly)


def load_code(path, q: int | None = None, value: int = 1, row_pattern=None,
              prim_poly: int | None = None) -> CodeSpec:
    """Load a code file, dispatching on extension (.alist vs native)."""
    if str(path).endswith(".alist"):
        if q is None:
            raise ValueError("alist files need an explicit field size q")
        return load_alist(path, q=q, value=value, row_pattern=row_pattern,
                          prim_poly=prim_poly)
    return load_native(path)


def tanner_155_64() -> CodeSpec:
    """The (155, 64) quasi-cyclic code, entries read as 1 in GF(16).

    Fifteen 31 x 31 circulant permutation blocks; block (i, j) shifts by
    5^i * 2^j mod 31, giving a (3, 5)-regular 93 x 155 matrix.
    """
    entries = []
    for i in range(3):
        for j in range(5):
            shift = (pow(5, i, 31) * pow(2, j, 31)) % 31
            for r in range(31):
                entries.append((i * 31 + r, j * 31 + (r + shift) % 31, 1))
    return CodeSpec(name="tanner_155_64", n=155, m=93, q=4, entries=entries)


def random_regular_code(n: int, m: int, q: int, row_weight: int, seed: int,
                        values: str | int = 1) -> CodeSpec:
    """Random code with uniform row weight and near-uniform column weights.

    ``values`` is either a fixed field value or "random" for uniform nonzero
    entries.  Used for tests and demos; makes no girth guarantees.
    """
    if row_weight > n:
        raise ValueError("row weight exceeds the number of columns")
    rng = np.random.default_rng(seed)
    total = m * row_weight
    base = np.tile(np.arange(n), total // n + 1)[:total]
    for _ in range(10_000):
        rng.shuffle(base)
        rows = base.reshape(m, row_weight)
        ok = all(len(set(row.tolist())) == row_weight for row in rows)
        if ok and len(set(base.tolist())) == n:
            break
    else:
        raise RuntimeError("could not draw a duplicate-free socket assignment")
    order = 1 << q
    entries = []
    for r in range(m):
        for c in sorted(rows[r].tolist()):
            if values == "random":
                v = int(rng.integers(1, order))
            else:
                v = int(values)
            entries.append((r, c, v))
    return CodeSpec(name=f"random_{n}_{m}_q{q}_s{seed}", n=n, m=m, q=q, entries=entries)


# --- linear algebra over GF(2^q) ------------------------------------------


def gf_row_reduce(mat, ctx: FieldContext):
    """Reduced row echelon form over the field; returns (rref, pivot_columns)."""
    R = np.array(mat, dtype=np.int64, copy=True)
    m, n = R.shape
    pivots = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        rows_nz = np.flatnonzero(R[r:, c]) + r
        if rows_nz.size == 0:
            continue
        p = int(rows_nz[0])
        if p != r:
            R[[r, p]] = R[[p, r]]
        inv = ctx.inv(int(R[r, c]))
        R[r] = ctx.mul_table[inv, R[r]]
        col = R[:, c].copy()
        col[r] = 0
        R ^= ctx.mul_table[col[:, None], R[r][None, :]]
        pivots.append(c)
        r += 1
    return R, pivots


def gf_nullspace(mat, ctx: FieldContext) -> np.ndarray:
    """Basis of {x : mat x = 0} over GF(2^q), one row per basis vector."""
    R, pivots = gf_row_reduce(mat, ctx)
    n = R.shape[1]
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for row_idx, p in enumerate(pivots):
            basis[k, p] = R[row_idx, f]  # char 2: negation is identity
    return basis


def syndrome(H, c, ctx: FieldContext) -> np.ndarray:
    """H c over the field, one value per check row."""
    Hd = np.asarray(H, dtype=np.int64)
    prods = ctx.mul_table[Hd, np.asarray(c, dtype=np.int64)[None, :]]
    return np.bitwise_xor.reduce(prods, axis=1)


def is_codeword(H, c, ctx: FieldContext) -> bool:
    return not syndrome(H, c, ctx).any()


class Encoder:
    """Draws codewords from the nullspace basis of a parity-check matrix."""

    def __init__(self, spec: CodeSpec, ctx: FieldContext | None = None):
        self.spec = spec
        self.ctx = ctx if ctx is not None else spec.context()
        self.H = spec.to_dense()
        self.basis = gf_nullspace(self.H, self.ctx)

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    @property
    def rate(self) -> float:
        return self.dimension / self.spec.n

    def codeword(self, coefs) -> np.ndarray:
        """Field linear combination of the basis rows."""
        coefs = np.asarray(coefs, dtype=np.int64)
        if coefs.shape != (self.dimension,):
            raise ValueError(f"need {self.dimension} coefficients")
        out = np.zeros(self.spec.n, dtype=np.int64)
        for j in range(self.dimension):
            out ^= self.ctx.mul_table[coefs[j], self.basis[j]]
        return out

    def random_codeword(self, rng: np.random.Generator) -> np.ndarray:
        coefs = rng.integers(0, self.ctx.order, size=self.dimension)
        return self.codeword(coefs)

    def enumerate_codewords(self, limit: int = 1 << 24):
        """Yield (coefs_index, codeword) over the whole code, smallest index first."""
        k = self.dimension
        order = self.ctx.order
        count = order**k
        if count > limit:
            raise ValueError(f"code has {count} words, above the limit {limit}")
        coefs = np.zeros(k, dtype=np.int64)
        for idx in range(count):
            x = idx
            for j in range(k - 1, -1, -1):
                coefs[j] = x % order
                x //= order
            yield idx, self.codeword(coefs)
