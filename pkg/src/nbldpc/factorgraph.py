"""Decomposition of binary checks into parity triples and decoding-instance assembly.

A binary check over d >= 3 bits is rewritten as a chain of d-2 three-variable
parity checks sharing d-3 fresh auxiliary bits.  Every triple contributes a
fixed block of four +/-1 inequalities (the convex hull of the even-parity
binary triples), so the whole constraint matrix is determined by the triple
index lists plus one 4 x 3 stencil and never materialized densely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .embedding import BinaryExpandedMatrix

__all__ = [
    "DegreeTooLow",
    "DecodingInstance",
    "build_instance",
    "decompose_check",
    "stencil_matrix",
    "stencil_bounds",
]

# Four inequalities T x <= w whose binary solutions are exactly the
# even-parity triples {000, 011, 101, 110}.  Columns are pairwise
# orthogonal with squared norm 4.
_STENCIL = np.array(
    [
        [1, -1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
        [1, 1, 1],
    ],
    dtype=np.int64,
)
_BOUNDS = np.array([0, 0, 0, 2], dtype=np.int64)


def stencil_matrix() -> np.ndarray:
    """The 4 x 3 inequality stencil applied to every parity triple."""
    return _STENCIL.copy()


def stencil_bounds() -> np.ndarray:
    """Right-hand sides [0, 0, 0, 2] paired with the stencil rows."""
    return _BOUNDS.copy()


class DegreeTooLow(ValueError):
    """A binary check involves fewer than three variables."""

    def __init__(self, degree: int, row: int | None = None):
        self.degree = degree
        self.row = row
        where = f"binary row {row}" if row is not None else "check"
        super().__init__(f"{where} has degree {degree}; need at least 3 "
                         f"(enable low_degree='reduce' to eliminate such rows)")


def decompose_check(support, next_aux: int):
    """Chain one degree-d check into d-2 parity triples using d-3 fresh auxiliaries.

    The first triple is (aux, x1, x2), middle triples (aux_k, x_{k+2}, aux_{k+1})
    link consecutive auxiliaries, and the last triple closes the chain on the
    final two bits, so no triple consists of auxiliaries only.

    Returns (triples, aux_used) with auxiliary indices allocated consecutively
    from next_aux.
    """
    sup = [int(c) for c in support]
    d = len(sup)
    if d < 3:
        raise DegreeTooLow(d)
    if d == 3:
        return [(sup[0], sup[1], sup[2])], 0
    triples = [(next_aux, sup[0], sup[1])]
    for k in range(2, d - 2):
        aux = next_aux + k - 2
        triples.append((aux, sup[k], aux + 1))
    last_aux = next_aux + d - 4
    triples.append((last_aux, sup[d - 2], sup[d - 1]))
    return triples, d - 3


@dataclass(eq=False)
class DecodingInstance:
    """Everything the solver needs: triples, objective, norms, and bookkeeping.

    Immutable after construction; the per-frame objective is supplied to the
    decoder separately, so one instance is shared across frames and workers.
    For instances built with low-degree reduction, ``bit_to_col`` maps each
    original bit to its surviving column (-1 when pinned to zero), and
    ``free_groups`` lists merged bit groups that dropped out of every check
    and are decided by the sign of their aggregate LLR.
    """

    n: int
    m: int
    q: int
    nq: int
    ncols: int          # bit columns in v (== nq without reduction)
    num_aux: int
    num_vars: int       # ncols + num_aux
    num_triples: int
    num_constraints: int  # 4 * num_triples
    triples: np.ndarray   # (num_triples, 3) int32
    col_norms: np.ndarray  # (num_vars,) diag of A^T A == 4 * membership count
    cost: np.ndarray      # (num_vars,) objective template: [llr; 0]
    row_supports: list    # original binary rows, for validity checks
    bit_to_col: np.ndarray | None = None
    pinned: np.ndarray | None = None          # (nq,) bool
    free_groups: list = field(default_factory=list)

    _bounds: np.ndarray | None = field(default=None, repr=False)
    _a_csr: sp.csr_matrix | None = field(default=None, repr=False)
    _at_csr: sp.csr_matrix | None = field(default=None, repr=False)
    _check_csr: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def is_reduced(self) -> bool:
        return self.bit_to_col is not None

    @property
    def bounds(self) -> np.ndarray:
        """Stacked right-hand sides, one stencil block per triple."""
        if self._bounds is None:
            self._bounds = np.tile(_BOUNDS.astype(np.float64), self.num_triples)
        return self._bounds

    @property
    def a_csr(self) -> sp.csr_matrix:
        """The (4*num_triples) x num_vars constraint matrix with +/-1 entries."""
        if self._a_csr is None:
            gc = self.num_triples
            rows = np.repeat(np.arange(self.num_constraints, dtype=np.int64), 3)
            cols = np.broadcast_to(
                self.triples[:, None, :], (gc, 4, 3)
            ).reshape(-1).astype(np.int64)
            data = np.broadcast_to(
                _STENCIL.astype(np.float64)[None, :, :], (gc, 4, 3)
            ).reshape(-1)
            self._a_csr = sp.csr_matrix(
                (data, (rows, cols)), shape=(self.num_constraints, self.num_vars)
            )
        return self._a_csr

    @property
    def at_csr(self) -> sp.csr_matrix:
        if self._at_csr is None:
            self._at_csr = self.a_csr.T.tocsr()
        return self._at_csr

    def cost_vector(self, llr) -> np.ndarray:
        """Objective [llr; zeros] for one frame (columns aggregated when reduced)."""
        g = np.asarray(llr, dtype=np.float64)
        if g.shape != (self.nq,):
            raise ValueError(f"llr must have length {self.nq}, got {g.shape}")
        out = np.zeros(self.num_vars, dtype=np.float64)
        out[: self.ncols] = self._fold_llr(g)
        return out

    def cost_matrix(self, llrs) -> np.ndarray:
        """(num_vars, B) objective block for a batch of frames."""
        g = np.asarray(llrs, dtype=np.float64)
        if g.ndim != 2 or g.shape[1] != self.nq:
            raise ValueError(f"llrs must be (B, {self.nq}), got {g.shape}")
        out = np.zeros((self.num_vars, g.shape[0]), dtype=np.float64)
        for b in range(g.shape[0]):
            out[: self.ncols, b] = self._fold_llr(g[b])
        return out

    def _fold_llr(self, g: np.ndarray) -> np.ndarray:
        if not self.is_reduced:
            return g
        mask = self.bit_to_col >= 0
        return np.bincount(
            self.bit_to_col[mask], weights=g[mask], minlength=self.ncols
        )

    def reconstruct_bits(self, col_bits, llr=None) -> np.ndarray:
        """Map decided column bits back to the original nq bit positions.

        ``col_bits`` may carry leading batch axes.  Pinned bits are 0; free
        groups are decided by the sign of their aggregate LLR (ties to 0).
        """
        cb = np.asarray(col_bits, dtype=np.uint8)
        if not self.is_reduced:
            return cb
        out = np.zeros(cb.shape[:-1] + (self.nq,), dtype=np.uint8)
        mapped = self.bit_to_col >= 0
        out[..., mapped] = cb[..., self.bit_to_col[mapped]]
        if self.free_groups:
            if llr is None:
                raise ValueError("llr required to decide unconstrained bit groups")
            g = np.asarray(llr, dtype=np.float64)
            for group in self.free_groups:
                val = (g[..., group].sum(axis=-1) < 0).astype(np.uint8)
                out[..., group] = val[..., None]
        return out

    @property
    def check_csr(self) -> sp.csr_matrix:
        if self._check_csr is None:
            degs = np.array([len(s) for s in self.row_supports], dtype=np.int64)
            indptr = np.zeros(len(degs) + 1, dtype=np.int64)
            indptr[1:] = np.cumsum(degs)
            indices = (
                np.concatenate(self.row_supports)
                if len(self.row_supports)
                else np.zeros(0, np.int64)
            )
            data = np.ones(len(indices), dtype=np.int64)
            self._check_csr = sp.csr_matrix(
                (data, indices, indptr), shape=(len(degs), self.nq)
            )
        return self._check_csr

    def check_bits(self, bits) -> np.ndarray:
        """True where a bit vector satisfies every original binary check.

        Accepts (nq,) or (B, nq); returns a scalar bool or (B,) bool array.
        """
        b = np.asarray(bits, dtype=np.int64)
        single = b.ndim == 1
        parities = (self.check_csr @ np.atleast_2d(b).T) % 2
        ok = ~parities.any(axis=0)
        return bool(ok[0]) if single else np.asarray(ok)

    def with_llr(self, llr) -> "DecodingInstance":
        """Shallow copy sharing all structure, with a new objective template."""
        inst = DecodingInstance(
            n=self.n, m=self.m, q=self.q, nq=self.nq, ncols=self.ncols,
            num_aux=self.num_aux, num_vars=self.num_vars,
            num_triples=self.num_triples, num_constraints=self.num_constraints,
            triples=self.triples, col_norms=self.col_norms,
            cost=self.cost_vector(llr), row_supports=self.row_supports,
            bit_to_col=self.bit_to_col, pinned=self.pinned,
            free_groups=self.free_groups,
        )
        inst._bounds = self._bounds
        inst._a_csr = self._a_csr
        inst._at_csr = self._at_csr
        inst._check_csr = self._check_csr
        return inst


def _reduce_low_degree(row_support, nq: int):
    """Eliminate degree-1 rows (pin the bit to 0) and degree-2 rows (merge).

    Returns (rows, bit_root, pinned) where rows hold the surviving supports
    expressed over root bits, every one of degree >= 3.
    """
    parent = list(range(nq))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    pinned = np.zeros(nq, dtype=bool)

    def canon(sup):
        counts: dict[int, int] = {}
        for c in sup:
            r = find(c)
            counts[r] = counts.get(r, 0) + 1
        return sorted(r for r, k in counts.items() if k % 2 == 1 and not pinned[r])

    rows = [list(map(int, s)) for s in row_support]
    while True:
        changed = False
        kept = []
        for sup in rows:
            c = canon(sup)
            if len(c) == 0:
                changed = changed or len(sup) > 0
                continue
            if len(c) == 1:
                pinned[c[0]] = True
                changed = True
                continue
            if len(c) == 2:
                ra, rb = c
                parent[rb] = ra
                pinned[ra] = pinned[ra] or pinned[rb]
                changed = True
                continue
            kept.append(c)
        rows = kept
        if not changed:
            break
    rows = [canon(sup) for sup in rows]
    bit_root = np.array([find(b) for b in range(nq)], dtype=np.int64)
    pinned_bits = pinned[bit_root]
    return rows, bit_root, pinned_bits


def build_instance(Hhat: BinaryExpandedMatrix, llr=None, low_degree: str = "error") -> DecodingInstance:
    """Assemble the decoding instance for one binary-expanded code.

    ``llr`` seeds the objective template (zeros when omitted; the decoder
    takes the per-frame LLR vector separately).  ``low_degree`` selects how
    binary rows with fewer than three variables are handled: "error" rejects
    them, "reduce" eliminates them before decomposition.
    """
    if low_degree not in ("error", "reduce"):
        raise ValueError(f"unknown low_degree mode {low_degree!r}")
    nq = Hhat.nq

    bit_to_col = None
    pinned = None
    free_groups: list[np.ndarray] = []
    if low_degree == "reduce":
        rows, bit_root, pinned = _reduce_low_degree(Hhat.row_support, nq)
        in_check = np.zeros(nq, dtype=bool)
        for sup in rows:
            in_check[sup] = True
        col_of_root = np.full(nq, -1, dtype=np.int64)
        next_col = 0
        for r in (int(r) for r in np.unique(bit_root)):
            if pinned[r]:
                continue
            if in_check[r]:
                col_of_root[r] = next_col
                next_col += 1
            else:
                free_groups.append(np.flatnonzero(bit_root == r))
        ncols = next_col
        bit_to_col = np.where(pinned, -1, col_of_root[bit_root]).astype(np.int64)
        rows = [np.array([col_of_root[r] for r in sup], dtype=np.int64) for sup in rows]
    else:
        rows = Hhat.row_support
        for t, sup in enumerate(rows):
            if len(sup) < 3:
                raise DegreeTooLow(len(sup), row=t)
        ncols = nq

    triples: list[tuple[int, int, int]] = []
    next_aux = ncols
    for sup in rows:
        ts, used = decompose_check(sup, next_aux)
        triples.extend(ts)
        next_aux += used

    num_aux = next_aux - ncols
    num_vars = ncols + num_aux
    tri = np.array(triples, dtype=np.int32).reshape(len(triples), 3)
    membership = np.bincount(tri.ravel(), minlength=num_vars)
    if num_vars and membership.min() == 0:
        missing = int(np.flatnonzero(membership == 0)[0])
        raise ValueError(
            f"variable {missing} appears in no check; every column must be "
            f"constrained (zero-degree bit columns are not decodable)"
        )

    inst = DecodingInstance(
        n=Hhat.n, m=Hhat.m, q=Hhat.q, nq=nq, ncols=ncols,
        num_aux=num_aux, num_vars=num_vars,
        num_triples=len(triples), num_constraints=4 * len(triples),
        triples=tri, col_norms=4.0 * membership.astype(np.float64),
        cost=np.zeros(num_vars, dtype=np.float64),
        row_supports=list(Hhat.row_support),
        bit_to_col=bit_to_col, pinned=pinned, free_groups=free_groups,
    )
    if llr is not None:
        inst.cost = inst.cost_vector(llr)
    return inst
