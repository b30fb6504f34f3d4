"""Non-binary LDPC decoding over GF(2^q) via a penalized box-QP solved with ADMM.

The pipeline: symbols of GF(2^q) are embedded as q-bit vectors, the
non-binary parity-check matrix is expanded into an equivalent binary one,
every binary check is decomposed into chained three-variable parity
triples, and the resulting integer program is relaxed to a box-constrained
QP with a concave vertex-pushing penalty.  The ADMM solver updates every
coordinate in closed form, so one iteration costs a single division per
variable plus additions.
"""

from .gf2q import FieldContext, NonPrimitivePolynomial, make_context
from .embedding import (
    NbParityMatrix,
    BinaryExpandedMatrix,
    embed,
    deembed,
    embed_symbols,
    deembed_symbols,
    mult_matrix,
    expand_matrix,
)
from .factorgraph import (
    DecodingInstance,
    DegreeTooLow,
    build_instance,
    decompose_check,
    stencil_matrix,
    stencil_bounds,
)
from .admm import (
    AdmmState,
    DecodeResult,
    DecodeStatus,
    DecoderParams,
    ParamsViolateConvexity,
    decode,
    decode_batch,
    decode_instrumented,
    init_state,
    iterate,
)
from .channel import ChannelConfig, SchemeMismatch, compute_llr, modulate, remap_llr_to_zero, transmit
from .codes import CodeSpec, Encoder, ParseError, RangeError, load_code, tanner_155_64

__all__ = [name for name in dir() if not name.startswith("_")]
