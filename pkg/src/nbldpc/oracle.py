"""Ground-truth machinery: exhaustive ML decoding and the codeword-symmetry harness.

The symmetry harness operationalizes the decoder's codeword-independence:
relative to a transmitted binary extension vstar, the trajectory obtained
from the sign-flipped LLRs (as if all-zero had been sent) must equal the
original trajectory pushed through fixed permutation/sign maps, coordinate
by coordinate, at every iteration, and both runs must stop together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import admm
from .admm import AdmmState, DecoderParams
from .channel import remap_llr_to_zero
from .codes import Encoder, CodeSpec
from .embedding import embed_symbols
from .factorgraph import DecodingInstance
from .gf2q import FieldContext

__all__ = [
    "TooLarge",
    "InvalidLocalConfig",
    "MLOracle",
    "ml_decode",
    "relative_vector",
    "local_slack_map",
    "slack_map",
    "sign_map",
    "extend_codeword",
    "Lemma3Report",
    "lemma3_step_check",
    "PairedRunReport",
    "run_paired",
]


class TooLarge(ValueError):
    """The code has more words than the enumeration bound allows."""


class InvalidLocalConfig(ValueError):
    """A triple of transmitted bits with odd parity cannot occur in a codeword."""


class MLOracle:
    """Brute-force maximum-likelihood decoder by full codebook enumeration.

    Stores every codeword's symbols and bit embedding; decoding one LLR
    vector is a single matrix-vector product plus an argmin with
    lexicographic tie-breaking on the symbol sequence.
    """

    def __init__(self, spec: CodeSpec, ctx: FieldContext | None = None,
                 limit: int = 1 << 24, store_limit: int = 1 << 18):
        enc = Encoder(spec, ctx)
        count = enc.ctx.order**enc.dimension
        if count > limit:
            raise TooLarge(f"{count} codewords exceed the bound {limit}")
        if count > store_limit:
            raise TooLarge(
                f"{count} codewords exceed the in-memory table bound {store_limit}"
            )
        self.ctx = enc.ctx
        words = np.zeros((count, spec.n), dtype=np.int64)
        for idx, cw in enc.enumerate_codewords(limit=limit):
            words[idx] = cw
        self.codewords = words
        self.embeddings = embed_symbols(words, self.ctx).astype(np.float64)

    @property
    def codeword_count(self) -> int:
        return self.codewords.shape[0]

    def decode(self, llr) -> np.ndarray:
        g = np.asarray(llr, dtype=np.float64)
        scores = self.embeddings @ g
        best = scores.min()
        cand = np.flatnonzero(scores == best)
        if cand.size > 1:
            order = np.lexsort(self.codewords[cand].T[::-1])
            return self.codewords[cand[order[0]]].copy()
        return self.codewords[cand[0]].copy()

    def decode_batch(self, llrs) -> np.ndarray:
        g = np.asarray(llrs, dtype=np.float64)
        scores = g @ self.embeddings.T            # (B, K)
        # argmin returns the first minimizer; refine ties lexicographically.
        out = np.empty((g.shape[0], self.codewords.shape[1]), dtype=np.int64)
        idx = scores.argmin(axis=1)
        mins = scores[np.arange(g.shape[0]), idx]
        for b in range(g.shape[0]):
            cand = np.flatnonzero(scores[b] == mins[b])
            if cand.size > 1:
                order = np.lexsort(self.codewords[cand].T[::-1])
                out[b] = self.codewords[cand[order[0]]]
            else:
                out[b] = self.codewords[cand[0]]
        return out


def ml_decode(llr, spec: CodeSpec, ctx: FieldContext | None = None,
              limit: int = 1 << 24) -> np.ndarray:
    """One-shot exhaustive ML decode; build an MLOracle for repeated use."""
    return MLOracle(spec, ctx, limit=limit).decode(llr)


def relative_vector(beta, vstar) -> np.ndarray:
    """Coordinates are kept where vstar is 0 and reflected to 1-beta where 1."""
    b = np.asarray(beta, dtype=np.float64)
    v = np.asarray(vstar)
    return np.where(v == 1, 1.0 - b, b)


_LOCAL_PERMS = {
    (1, 1, 0): (1, 0, 3, 2),
    (1, 0, 1): (2, 3, 0, 1),
    (0, 1, 1): (3, 2, 1, 0),
    (0, 0, 0): (0, 1, 2, 3),
}


def local_slack_map(e4, v_triple) -> np.ndarray:
    """Permute one triple's four slack entries per the transmitted local bits."""
    key = tuple(int(x) for x in v_triple)
    if key not in _LOCAL_PERMS:
        raise InvalidLocalConfig(f"triple bits {key} have odd parity")
    e = np.asarray(e4, dtype=np.float64)
    if e.shape != (4,):
        raise ValueError("expected a length-4 vector")
    return e[list(_LOCAL_PERMS[key])]


def slack_map(e, vstar, inst: DecodingInstance) -> np.ndarray:
    """Apply the local permutation triple-by-triple across the whole slack vector."""
    ev = np.asarray(e, dtype=np.float64)
    if ev.shape != (inst.num_constraints,):
        raise ValueError(f"expected length {inst.num_constraints}")
    v = np.asarray(vstar)
    out = np.empty_like(ev)
    for tau, (ia, ib, ic) in enumerate(inst.triples):
        key = (int(v[ia]), int(v[ib]), int(v[ic]))
        if key not in _LOCAL_PERMS:
            raise InvalidLocalConfig(f"triple {tau} bits {key} have odd parity")
        perm = _LOCAL_PERMS[key]
        base = 4 * tau
        out[base:base + 4] = ev[base + np.array(perm)]
    return out


def sign_map(y, vstar) -> np.ndarray:
    """Flip signs where the transmitted bit is 1."""
    yv = np.asarray(y, dtype=np.float64)
    v = np.asarray(vstar)
    return yv * (1.0 - 2.0 * v)


def extend_codeword(bits, inst: DecodingInstance) -> np.ndarray:
    """Extend embedded codeword bits to all variables by replaying the chains.

    Each auxiliary equals the parity of the two already-known members of the
    first triple introducing it; the final triple of every chain must then
    close with even parity, which doubles as a validity check of ``bits``.
    """
    if inst.is_reduced:
        raise ValueError("codeword extension expects an unreduced instance")
    x = np.asarray(bits).astype(np.int64)
    if x.shape != (inst.nq,):
        raise ValueError(f"expected {inst.nq} bits")
    v = np.zeros(inst.num_vars, dtype=np.int64)
    v[: inst.nq] = x
    assigned = np.zeros(inst.num_vars, dtype=bool)
    assigned[: inst.nq] = True
    for tau, members in enumerate(inst.triples):
        unknown = [int(i) for i in members if not assigned[i]]
        known = [int(i) for i in members if assigned[i]]
        if len(unknown) == 0:
            if (v[members[0]] ^ v[members[1]] ^ v[members[2]]) & 1:
                raise ValueError(f"bits violate parity triple {tau}")
        elif len(unknown) == 1:
            v[unknown[0]] = v[known[0]] ^ v[known[1]]
            assigned[unknown[0]] = True
        else:
            raise ValueError(f"triple {tau} introduces two fresh auxiliaries")
    return v


@dataclass
class Lemma3Report:
    """Per-relation max deviations after stepping a related state pair once."""

    dev_v: float
    dev_slack: float
    dev_box: float
    dev_dual_ineq: float
    dev_dual_box: float

    @property
    def max_deviation(self) -> float:
        return max(self.dev_v, self.dev_slack, self.dev_box,
                   self.dev_dual_ineq, self.dev_dual_box)


def _relation_deviations(state: AdmmState, state0: AdmmState, vstar) -> Lemma3Report:
    inst = state.inst
    return Lemma3Report(
        dev_v=float(np.abs(state0.v - relative_vector(state.v, vstar)).max()),
        dev_slack=float(np.abs(state0.slack - slack_map(state.slack, vstar, inst)).max()),
        dev_box=float(np.abs(state0.box - relative_vector(state.box, vstar)).max()),
        dev_dual_ineq=float(
            np.abs(state0.dual_ineq - slack_map(state.dual_ineq, vstar, inst)).max()
        ),
        dev_dual_box=float(np.abs(state0.dual_box - sign_map(state.dual_box, vstar)).max()),
    )


def lemma3_step_check(state: AdmmState, state0: AdmmState, vstar) -> Lemma3Report:
    """Advance a related state pair one iteration and report the map deviations.

    ``state`` decodes the original LLRs, ``state0`` the sign-remapped ones;
    they must already satisfy the five map relations relative to ``vstar``.
    """
    admm.iterate(state)
    admm.iterate(state0)
    return _relation_deviations(state, state0, vstar)


@dataclass
class PairedRunReport:
    max_deviation: float
    iterations: int
    iterations_zero: int
    per_iteration: list = field(default_factory=list)
    result: admm.DecodeResult | None = None
    result_zero: admm.DecodeResult | None = None

    @property
    def stopped_together(self) -> bool:
        return self.iterations == self.iterations_zero


def run_paired(llr, tx_bits, inst: DecodingInstance,
               params: DecoderParams | None = None) -> PairedRunReport:
    """Decode an LLR vector and its all-zero remap side by side.

    Both runs start from the standard initialization and are stepped in
    lockstep, recording the map deviations every iteration; each run applies
    its own stopping rule.
    """
    params = params or DecoderParams()
    vstar = extend_codeword(tx_bits, inst)
    g = np.asarray(llr, dtype=np.float64)
    g0 = remap_llr_to_zero(g, np.asarray(tx_bits))
    state = admm.init_state(inst, params, g)
    state0 = admm.init_state(inst, params, g0)

    devs = []
    stop_at = stop0_at = None
    for k in range(1, params.max_iter + 1):
        r1, r2 = admm.iterate(state)
        s1, s2 = admm.iterate(state0)
        devs.append(_relation_deviations(state, state0, vstar).max_deviation)
        if stop_at is None and admm._stopped(r1, r2, params):
            stop_at = k
        if stop0_at is None and admm._stopped(s1, s2, params):
            stop0_at = k
        if stop_at is not None and stop0_at is not None:
            break
        if (stop_at is None) != (stop0_at is None):
            # One run stopped and the other did not: codeword dependence.
            break

    iters = stop_at if stop_at is not None else params.max_iter
    iters0 = stop0_at if stop0_at is not None else params.max_iter

    def finish(st: AdmmState, gvec, converged) -> admm.DecodeResult:
        bits, symbols, status = admm._finalize(st.v, inst, gvec, converged)
        rr1, rr2 = admm.residuals(st)
        return admm.DecodeResult(symbols=symbols, bits=bits, status=status,
                                 iterations=st.iterations, r1=rr1, r2=rr2,
                                 raw_v=st.v.copy())

    return PairedRunReport(
        max_deviation=float(max(devs)) if devs else 0.0,
        iterations=iters,
        iterations_zero=iters0,
        per_iteration=devs,
        result=finish(state, g, stop_at is not None),
        result_zero=finish(state0, g0, stop0_at is not None),
    )
