"""Gray-labeled modulation, AWGN, and exact per-bit LLRs.

Constellations are unit average energy and indexed by label value, where a
point's label is the bit pattern (MSB first) of the field element it
carries, so modulating a symbol sequence is a single table lookup.

Labelings:
  QPSK   00 -> (+,+), 01 -> (-,+), 11 -> (-,-), 10 -> (+,-); the first bit
         picks the quadrature sign, the second the in-phase sign.
  8PSK   counter-clockwise Gray sequence starting with 000 at angle 0.
  16QAM  first two bits Gray-select the in-phase level, last two the
         quadrature level, with 00/01/11/10 -> -3/-1/+1/+3 (scaled 1/sqrt(10)).

Bit LLRs marginalize over the whole constellation with log-sum-exp and are
clipped to +/-llr_clip; for QPSK this reduces exactly to independent
per-dimension antipodal LLRs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "ChannelConfig",
    "SchemeMismatch",
    "constellation",
    "modulate",
    "transmit",
    "compute_llr",
    "remap_llr_to_zero",
]

SCHEME_BITS = {"qpsk": 2, "8psk": 3, "16qam": 4}


class SchemeMismatch(ValueError):
    """Modulation scheme carries a different number of bits than the field."""


def _qpsk_points() -> np.ndarray:
    a = 1.0 / np.sqrt(2.0)
    pts = np.empty(4, dtype=np.complex128)
    for label in range(4):
        b_quad, b_in = (label >> 1) & 1, label & 1
        pts[label] = (1 - 2 * b_in) * a + 1j * (1 - 2 * b_quad) * a
    return pts


def _psk8_points() -> np.ndarray:
    pts = np.empty(8, dtype=np.complex128)
    for k in range(8):
        label = k ^ (k >> 1)
        pts[label] = np.exp(2j * np.pi * k / 8.0)
    return pts


_GRAY2_LEVEL = {0b00: -3.0, 0b01: -1.0, 0b11: 1.0, 0b10: 3.0}


def _qam16_points() -> np.ndarray:
    scale = 1.0 / np.sqrt(10.0)
    pts = np.empty(16, dtype=np.complex128)
    for label in range(16):
        i_level = _GRAY2_LEVEL[label >> 2]
        q_level = _GRAY2_LEVEL[label & 0b11]
        pts[label] = (i_level + 1j * q_level) * scale
    return pts


_BUILDERS = {"qpsk": _qpsk_points, "8psk": _psk8_points, "16qam": _qam16_points}


def constellation(scheme: str) -> np.ndarray:
    """Unit-energy points indexed by label value."""
    try:
        return _BUILDERS[scheme]()
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(_BUILDERS)}")


@dataclass
class ChannelConfig:
    """Modulation plus AWGN level for one code.

    ebn0_db is SNR per information bit; with unit-energy constellations the
    per-dimension noise variance is 1 / (2 * rate * q * 10^(ebn0_db/10)).
    """

    scheme: str
    ebn0_db: float
    rate: float
    q: int
    seed: int | None = None
    llr_clip: float = 50.0

    def __post_init__(self):
        if self.scheme not in SCHEME_BITS:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if SCHEME_BITS[self.scheme] != self.q:
            raise SchemeMismatch(
                f"{self.scheme} carries {SCHEME_BITS[self.scheme]} bits/symbol "
                f"but the field uses q={self.q}"
            )
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")
        self.points = constellation(self.scheme)

    @property
    def noise_sigma(self) -> float:
        """Per-dimension noise standard deviation."""
        snr = 10.0 ** (self.ebn0_db / 10.0)
        return float(np.sqrt(1.0 / (2.0 * self.rate * self.q * snr)))


def modulate(symbols, cfg: ChannelConfig) -> np.ndarray:
    """One constellation point per field element; any array shape."""
    sym = np.asarray(symbols, dtype=np.int64)
    if sym.size and (sym.min() < 0 or sym.max() >= len(cfg.points)):
        raise ValueError("symbol outside the field")
    return cfg.points[sym]


def transmit(points, cfg: ChannelConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Add circular Gaussian noise with per-dimension variance noise_sigma^2."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    pts = np.asarray(points, dtype=np.complex128)
    sigma = cfg.noise_sigma
    noise = rng.standard_normal(pts.shape) + 1j * rng.standard_normal(pts.shape)
    return pts + sigma * noise


def compute_llr(received, cfg: ChannelConfig) -> np.ndarray:
    """Exact bit LLRs log p(r | bit=0) - log p(r | bit=1) per embedded bit.

    Accepts (n,) or (B, n) received points and returns (n*q,) or (B, n*q)
    LLRs in embedding bit order, clipped to +/-llr_clip.
    """
    r = np.asarray(received, dtype=np.complex128)
    q = cfg.q
    pts = cfg.points
    labels = np.arange(len(pts))
    inv_2var = 1.0 / (2.0 * cfg.noise_sigma**2)
    # (..., n, 2^q) log-likelihood of each candidate point
    ll = -np.abs(r[..., None] - pts) ** 2 * inv_2var
    cols = []
    for bit in range(q):
        is_one = (labels >> (q - 1 - bit)) & 1 == 1
        cols.append(
            logsumexp(ll[..., ~is_one], axis=-1) - logsumexp(ll[..., is_one], axis=-1)
        )
    llr = np.stack(cols, axis=-1).reshape(*r.shape[:-1], r.shape[-1] * q)
    return np.clip(llr, -cfg.llr_clip, cfg.llr_clip)


def remap_llr_to_zero(llr, bits) -> np.ndarray:
    """LLRs as if the all-zero word had been sent, given the transmitted bits.

    Flips the sign wherever the transmitted bit is 1; an involution that
    preserves magnitudes.
    """
    g = np.asarray(llr, dtype=np.float64)
    b = np.asarray(bits)
    if g.shape[-1] != b.shape[-1]:
        raise ValueError("llr and bits lengths differ")
    return g * (1.0 - 2.0 * b)
