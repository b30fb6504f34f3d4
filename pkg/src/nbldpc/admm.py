"""ADMM solver for the penalized box-QP decoding problem.

The relaxed problem minimizes llr^T v - (alpha/2)||v - 0.5||^2 subject to
A v <= b and v in [0, 1]^N, where A stacks one 4 x 3 stencil block per
parity triple.  Splitting introduces a nonnegative slack for the
inequalities and a box-clipped copy of v; because A^T A is diagonal, every
coordinate update is closed form:

  v_i    <- (a_i^T (b - slack - dual_ineq) + box_i - dual_box_i - shift_i) / denom_i
  slack  <- max(0, b - A v - dual_ineq)                (pre-projection value kept)
  box    <- clip(v + dual_box, 0, 1)                   (pre-projection value kept)
  duals  <- piecewise from the kept pre-projection values (scaled form, no products)

with shift_i = (2 llr_i + alpha) / (2 mu) and denom_i = s_i - alpha/mu + 1,
s_i the diagonal of A^T A.  One iteration therefore performs exactly one
division per variable and no other multiplications.

The box copy starts at 0.5 rather than 0 by default: with a symmetric
channel this makes the whole trajectory, and hence the failure event,
independent of the transmitted codeword.  Set e2_init=0.0 for a plain
all-zero start.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .factorgraph import DecodingInstance, stencil_matrix

__all__ = [
    "AdmmState",
    "BatchDecodeResult",
    "DecodeResult",
    "DecodeStatus",
    "DecoderParams",
    "OpCount",
    "ParamsViolateConvexity",
    "check_convexity",
    "decode",
    "decode_batch",
    "decode_instrumented",
    "init_state",
    "iterate",
    "residuals",
    "ineq_residual_by_triples",
]


class ParamsViolateConvexity(ValueError):
    """mu * (s_min + 1) <= alpha: the per-coordinate subproblem is not strongly convex."""


@dataclass(frozen=True)
class DecoderParams:
    """Solver knobs.

    stop_any=False requires both squared residuals below eps (primal
    feasibility needs both); stop_any=True stops on either, matching the
    looser published rule.  early_exit stops as soon as the rounded iterate
    satisfies every parity triple.
    """

    alpha: float = 0.9
    mu: float = 0.9
    eps: float = 1e-5
    max_iter: int = 500
    stop_any: bool = False
    e2_init: float = 0.5
    early_exit: bool = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 <= self.e2_init <= 1.0:
            raise ValueError("e2_init must lie in [0, 1]")


class DecodeStatus(enum.Enum):
    CONVERGED_VALID = "converged-valid"
    CONVERGED_INVALID = "converged-invalid"
    MAX_ITER = "max-iter"


@dataclass
class DecodeResult:
    symbols: np.ndarray      # (n,) decided symbols
    bits: np.ndarray         # (nq,) decided bits
    status: DecodeStatus
    iterations: int
    r1: float                # ||A v + slack - b||^2 at stop
    r2: float                # ||v - box||^2 at stop
    raw_v: np.ndarray        # (num_vars,) fractional iterate


def check_convexity(inst: DecodingInstance, params: DecoderParams) -> None:
    s_min = float(inst.col_norms.min()) if inst.num_vars else 0.0
    if params.mu * (s_min + 1.0) <= params.alpha:
        raise ParamsViolateConvexity(
            f"mu*(s_min+1) = {params.mu * (s_min + 1.0):g} must exceed "
            f"alpha = {params.alpha:g}"
        )


@dataclass(eq=False)
class AdmmState:
    """One frame's iterate vectors plus the precomputed per-column constants."""

    inst: DecodingInstance
    params: DecoderParams
    v: np.ndarray
    slack: np.ndarray        # inequality slack, >= 0 after its update
    box: np.ndarray          # box-clipped copy of v, in [0, 1]
    dual_ineq: np.ndarray    # scaled multiplier for A v + slack = b
    dual_box: np.ndarray     # scaled multiplier for v = box
    cost_shift: np.ndarray   # (2 llr + alpha) / (2 mu), zero-padded on auxiliaries
    denom: np.ndarray        # s - alpha/mu + 1
    inv_denom: np.ndarray
    iterations: int = 0
    _av: np.ndarray | None = field(default=None, repr=False)
    _pre_slack: np.ndarray | None = field(default=None, repr=False)
    _pre_box: np.ndarray | None = field(default=None, repr=False)


def init_state(inst: DecodingInstance, params: DecoderParams, llr=None) -> AdmmState:
    """Fresh state: v and all multipliers zero, box copy at e2_init."""
    check_convexity(inst, params)
    cost = inst.cost_vector(llr) if llr is not None else inst.cost.astype(np.float64, copy=True)
    denom = inst.col_norms - params.alpha / params.mu + 1.0
    return AdmmState(
        inst=inst,
        params=params,
        v=np.zeros(inst.num_vars),
        slack=np.zeros(inst.num_constraints),
        box=np.full(inst.num_vars, float(params.e2_init)),
        dual_ineq=np.zeros(inst.num_constraints),
        dual_box=np.zeros(inst.num_vars),
        cost_shift=(2.0 * cost + params.alpha) / (2.0 * params.mu),
        denom=denom,
        inv_denom=1.0 / denom,
    )


def update_v(state: AdmmState) -> np.ndarray:
    """Diagonal quadratic solve using the previous slack/box/dual values."""
    inst = state.inst
    t = inst.bounds - state.slack - state.dual_ineq
    state.v = (inst.at_csr @ t + state.box - state.dual_box - state.cost_shift) * state.inv_denom
    return state.v


def update_slack(state: AdmmState) -> np.ndarray:
    """Project b - A v - dual onto the nonnegative orthant; keep the raw value."""
    inst = state.inst
    av = inst.a_csr @ state.v
    pre = inst.bounds - av - state.dual_ineq
    state._av = av
    state._pre_slack = pre
    state.slack = np.maximum(pre, 0.0)
    return state.slack


def update_box(state: AdmmState) -> np.ndarray:
    """Clip v + dual onto [0, 1]; keep the raw value."""
    pre = state.v + state.dual_box
    state._pre_box = pre
    state.box = np.clip(pre, 0.0, 1.0)
    return state.box


def update_duals(state: AdmmState):
    """Scaled-form dual steps, reusing the pre-projection values.

    These equal the textbook updates dual + (A v + slack - b) and
    dual + (v - box) after the two projections.
    """
    state.dual_ineq = np.maximum(-state._pre_slack, 0.0)
    state.dual_box = state._pre_box - state.box
    return state.dual_ineq, state.dual_box


def residuals(state: AdmmState) -> tuple[float, float]:
    inst = state.inst
    av = state._av if state._av is not None else inst.a_csr @ state.v
    d1 = av + state.slack - inst.bounds
    d2 = state.v - state.box
    return float(d1 @ d1), float(d2 @ d2)


def ineq_residual_by_triples(state: AdmmState) -> float:
    """||A v + slack - b||^2 summed triple-by-triple (independent route)."""
    inst = state.inst
    T = stencil_matrix().astype(np.float64)
    V = state.v[inst.triples]                       # (num_triples, 3)
    E = state.slack.reshape(inst.num_triples, 4)
    R = V @ T.T + E - inst.bounds.reshape(inst.num_triples, 4)
    return float((R * R).sum())


def iterate(state: AdmmState) -> tuple[float, float]:
    """One full sweep: v, slack, box, duals.  Returns the squared residuals."""
    update_v(state)
    update_slack(state)
    update_box(state)
    update_duals(state)
    state.iterations += 1
    return residuals(state)


def _stopped(r1: float, r2: float, params: DecoderParams) -> bool:
    if params.stop_any:
        return r1 < params.eps or r2 < params.eps
    return r1 < params.eps and r2 < params.eps


def _rounded_valid(v: np.ndarray, inst: DecodingInstance) -> bool:
    xr = v > 0.5
    t = inst.triples
    parity = xr[t[:, 0]] ^ xr[t[:, 1]] ^ xr[t[:, 2]]
    return not parity.any()


def _finalize(v, inst: DecodingInstance, llr, converged: bool):
    col_bits = (v[: inst.ncols] > 0.5).astype(np.uint8)
    bits = inst.reconstruct_bits(col_bits, llr)
    weights = 1 << np.arange(inst.q - 1, -1, -1)
    symbols = bits.reshape(inst.n, inst.q).astype(np.int64) @ weights
    valid = inst.check_bits(bits)
    if not converged:
        status = DecodeStatus.MAX_ITER
    else:
        status = DecodeStatus.CONVERGED_VALID if valid else DecodeStatus.CONVERGED_INVALID
    return bits, symbols, status


def decode(llr, inst: DecodingInstance, params: DecoderParams | None = None) -> DecodeResult:
    """Decode one frame of per-bit LLRs.

    Runs the iteration until both (or either, under stop_any) squared
    residuals fall below eps or max_iter is reached, then thresholds the
    first nq coordinates at 0.5 (ties to 0) and de-embeds to symbols.
    """
    params = params or DecoderParams()
    state = init_state(inst, params, llr)
    converged = False
    r1 = r2 = float("inf")
    for _ in range(params.max_iter):
        r1, r2 = iterate(state)
        if _stopped(r1, r2, params):
            converged = True
            break
        if params.early_exit and _rounded_valid(state.v, inst):
            converged = True
            break
    bits, symbols, status = _finalize(state.v, inst, llr, converged)
    return DecodeResult(
        symbols=symbols, bits=bits, status=status,
        iterations=state.iterations, r1=r1, r2=r2, raw_v=state.v.copy(),
    )


@dataclass
class BatchDecodeResult:
    symbols: np.ndarray      # (B, n)
    bits: np.ndarray         # (B, nq)
    status: list             # B DecodeStatus values
    valid: np.ndarray        # (B,) bool
    iterations: np.ndarray   # (B,)
    r1: np.ndarray
    r2: np.ndarray
    v: np.ndarray            # (B, num_vars)

    def __len__(self) -> int:
        return len(self.status)

    def frame_errors(self, tx_symbols) -> np.ndarray:
        """Error indicator per frame: any symbol mismatch or a non-valid status."""
        tx = np.asarray(tx_symbols)
        mismatch = (self.symbols != tx).any(axis=1)
        conv_valid = np.array(
            [s is DecodeStatus.CONVERGED_VALID for s in self.status], dtype=bool
        )
        return mismatch | ~conv_valid


def decode_batch(llrs, inst: DecodingInstance, params: DecoderParams | None = None) -> BatchDecodeResult:
    """Decode B frames at once; identical math to decode(), vectorized over frames.

    Frames that meet the stopping rule are frozen (their outputs recorded at
    that iteration) and periodically compacted out of the working set.
    """
    params = params or DecoderParams()
    check_convexity(inst, params)
    g = np.asarray(llrs, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError("llrs must be a (B, nq) array")
    B = g.shape[0]
    N, M = inst.num_vars, inst.num_constraints
    A, At = inst.a_csr, inst.at_csr
    bounds = inst.bounds[:, None]
    tri = inst.triples

    cost = inst.cost_matrix(g)
    shift = (2.0 * cost + params.alpha) / (2.0 * params.mu)
    inv_denom = (1.0 / (inst.col_norms - params.alpha / params.mu + 1.0))[:, None]

    v = np.zeros((N, B))
    slack = np.zeros((M, B))
    box = np.full((N, B), float(params.e2_init))
    dual_ineq = np.zeros((M, B))
    dual_box = np.zeros((N, B))

    out_v = np.zeros((N, B))
    out_iter = np.zeros(B, dtype=np.int64)
    out_r1 = np.full(B, np.inf)
    out_r2 = np.full(B, np.inf)
    out_conv = np.zeros(B, dtype=bool)

    active = np.arange(B)
    frozen = np.zeros(B, dtype=bool)

    for k in range(1, params.max_iter + 1):
        t = bounds - slack - dual_ineq
        v = inv_denom * (At @ t + box - dual_box - shift)
        av = A @ v
        pre1 = bounds - av - dual_ineq
        slack = np.maximum(pre1, 0.0)
        pre2 = v + dual_box
        box = np.clip(pre2, 0.0, 1.0)
        dual_ineq = np.maximum(-pre1, 0.0)
        dual_box = pre2 - box

        d1 = av + slack - bounds
        r1 = np.einsum("ij,ij->j", d1, d1)
        d2 = v - box
        r2 = np.einsum("ij,ij->j", d2, d2)
        if params.stop_any:
            stop = (r1 < params.eps) | (r2 < params.eps)
        else:
            stop = (r1 < params.eps) & (r2 < params.eps)
        if params.early_exit:
            xr = v > 0.5
            bad = (xr[tri[:, 0]] ^ xr[tri[:, 1]] ^ xr[tri[:, 2]]).any(axis=0)
            stop |= ~bad

        newly = np.flatnonzero(stop & ~frozen)
        if newly.size:
            idx = active[newly]
            out_v[:, idx] = v[:, newly]
            out_iter[idx] = k
            out_r1[idx] = r1[newly]
            out_r2[idx] = r2[newly]
            out_conv[idx] = True
            frozen[newly] = True

        if frozen.all():
            active = active[:0]
            break
        if frozen.mean() > 0.25:
            keep = ~frozen
            active = active[keep]
            v, slack, box = v[:, keep], slack[:, keep], box[:, keep]
            dual_ineq, dual_box = dual_ineq[:, keep], dual_box[:, keep]
            shift = shift[:, keep]
            r1, r2 = r1[keep], r2[keep]
            frozen = np.zeros(active.size, dtype=bool)

    if active.size:
        left = np.flatnonzero(~frozen)
        idx = active[left]
        out_v[:, idx] = v[:, left]
        out_iter[idx] = params.max_iter
        out_r1[idx] = r1[left]
        out_r2[idx] = r2[left]

    col_bits = (out_v[: inst.ncols].T > 0.5).astype(np.uint8)
    bits = inst.reconstruct_bits(col_bits, g)
    weights = 1 << np.arange(inst.q - 1, -1, -1)
    symbols = bits.reshape(B, inst.n, inst.q).astype(np.int64) @ weights
    valid = inst.check_bits(bits)
    status = [
        (DecodeStatus.CONVERGED_VALID if valid[b] else DecodeStatus.CONVERGED_INVALID)
        if out_conv[b]
        else DecodeStatus.MAX_ITER
        for b in range(B)
    ]
    return BatchDecodeResult(
        symbols=symbols, bits=bits, status=status, valid=np.asarray(valid),
        iterations=out_iter, r1=out_r1, r2=out_r2, v=out_v.T.copy(),
    )


@dataclass
class OpCount:
    muls: int = 0
    divs: int = 0

    @property
    def total(self) -> int:
        return self.muls + self.divs


def decode_instrumented(llr, inst: DecodingInstance, params: DecoderParams | None = None):
    """Pure-Python decode that tallies floating multiplies/divides per phase.

    Returns (result, ops) where ops maps phase name -> OpCount.  The
    update_v phase performs exactly one division per variable per iteration;
    the slack, box, and dual phases use additions and comparisons only.
    Intended for small instances; the arithmetic mirrors decode().
    """
    params = params or DecoderParams()
    check_convexity(inst, params)
    g = np.asarray(llr, dtype=np.float64)
    cost = inst.cost_vector(g)
    N, M, gc = inst.num_vars, inst.num_constraints, inst.num_triples
    triples = [tuple(map(int, t)) for t in inst.triples]
    bounds = [float(x) for x in inst.bounds]
    shift = [(2.0 * c + params.alpha) / (2.0 * params.mu) for c in cost]
    denom = [s - params.alpha / params.mu + 1.0 for s in inst.col_norms]

    ops = {name: OpCount() for name in
           ("update_v", "update_slack", "update_box", "update_duals", "stopping")}

    v = [0.0] * N
    slack = [0.0] * M
    box = [float(params.e2_init)] * N
    dual_ineq = [0.0] * M
    dual_box = [0.0] * N
    av = [0.0] * M
    pre1 = [0.0] * M
    pre2 = [0.0] * N

    converged = False
    iterations = 0
    r1 = r2 = float("inf")
    for _ in range(params.max_iter):
        # v: accumulate the +/-1 stencil columns, then one division each.
        acc = [box[i] - dual_box[i] - shift[i] for i in range(N)]
        for tau, (ia, ib, ic) in enumerate(triples):
            j = 4 * tau
            t0 = bounds[j] - slack[j] - dual_ineq[j]
            t1 = bounds[j + 1] - slack[j + 1] - dual_ineq[j + 1]
            t2 = bounds[j + 2] - slack[j + 2] - dual_ineq[j + 2]
            t3 = bounds[j + 3] - slack[j + 3] - dual_ineq[j + 3]
            acc[ia] += t0 - t1 - t2 + t3
            acc[ib] += -t0 + t1 - t2 + t3
            acc[ic] += -t0 - t1 + t2 + t3
        for i in range(N):
            v[i] = acc[i] / denom[i]
        ops["update_v"].divs += N

        # slack: stencil rows of A v, then clip at 0.
        for tau, (ia, ib, ic) in enumerate(triples):
            va, vb, vc = v[ia], v[ib], v[ic]
            j = 4 * tau
            av[j] = va - vb - vc
            av[j + 1] = -va + vb - vc
            av[j + 2] = -va - vb + vc
            av[j + 3] = va + vb + vc
        for j in range(M):
            pre1[j] = bounds[j] - av[j] - dual_ineq[j]
            slack[j] = pre1[j] if pre1[j] > 0.0 else 0.0

        # box: clip v + dual onto [0, 1].
        for i in range(N):
            w = v[i] + dual_box[i]
            pre2[i] = w
            box[i] = 0.0 if w < 0.0 else (1.0 if w > 1.0 else w)

        # duals: piecewise from the kept pre-projection values.
        for j in range(M):
            dual_ineq[j] = -pre1[j] if pre1[j] < 0.0 else 0.0
        for i in range(N):
            dual_box[i] = pre2[i] - box[i]

        iterations += 1
        r1 = 0.0
        for j in range(M):
            d = av[j] + slack[j] - bounds[j]
            r1 += d * d
        r2 = 0.0
        for i in range(N):
            d = v[i] - box[i]
            r2 += d * d
        ops["stopping"].muls += M + N
        if _stopped(r1, r2, params):
            converged = True
            break
        if params.early_exit and _rounded_valid(np.array(v), inst):
            converged = True
            break

    varr = np.array(v)
    bits, symbols, status = _finalize(varr, inst, g, converged)
    result = DecodeResult(
        symbols=symbols, bits=bits, status=status,
        iterations=iterations, r1=r1, r2=r2, raw_v=varr,
    )
    return result, ops
