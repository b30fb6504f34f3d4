"""Monte Carlo FER/SER sweeps over Eb/N0 with CSV/JSON output.

Each frame draws a random codeword, modulates it, passes it through AWGN,
computes bit LLRs, and decodes; a frame error is any symbol mismatch or a
non-valid decoder status.  Frames own RNG streams keyed by
(seed, point index, frame index), so results are reproducible and
independent of batch size or worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .admm import DecoderParams, decode_batch
from .channel import ChannelConfig, compute_llr, modulate
from .codes import CodeSpec, Encoder, load_code
from .embedding import expand_matrix
from .factorgraph import build_instance

__all__ = [
    "RunConfig",
    "RunRecord",
    "SweepEngine",
    "run_sweep",
    "emit_results",
    "parse_ebn0",
    "build_parser",
    "main",
]

DEFAULT_BATCH = 256
CSV_COLUMNS = ["ebn0_db", "frames", "frame_errors", "fer", "ser", "avg_iters", "avg_decode_ms"]


@dataclass
class RunConfig:
    code_path: str
    scheme: str
    ebn0_db: list
    alpha: float = 0.9
    mu: float = 0.9
    eps: float = 1e-5
    max_iter: int = 500
    frames_min: int = 1000
    error_frames: int = 200
    frames_max: int | None = None
    seed: int = 1
    stop_any: bool = False
    noiseless: bool = False
    low_degree: str = "error"
    workers: int = 1
    batch: int = DEFAULT_BATCH
    out: str | None = None
    format: str = "csv"
    alist_q: int | None = None
    alist_value: int = 1
    alist_pattern: list | None = None

    def __post_init__(self):
        if not self.ebn0_db:
            raise ValueError("ebn0_db must list at least one point")
        if self.error_frames < 1:
            raise ValueError("error_frames must be at least 1")
        if self.frames_min < 1:
            raise ValueError("frames_min must be at least 1")

    def decoder_params(self) -> DecoderParams:
        return DecoderParams(alpha=self.alpha, mu=self.mu, eps=self.eps,
                             max_iter=self.max_iter, stop_any=self.stop_any)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunRecord:
    ebn0_db: float
    frames: int
    frame_errors: int
    symbol_errors: int
    total_symbols: int
    fer: float
    ser: float
    avg_iterations: float
    avg_decode_ms: float
    elapsed_s: float

    def csv_row(self) -> list:
        return [self.ebn0_db, self.frames, self.frame_errors, self.fer,
                self.ser, self.avg_iterations, self.avg_decode_ms]


@dataclass
class _BlockStats:
    frames: int = 0
    frame_errors: int = 0
    symbol_errors: int = 0
    iterations: int = 0
    decode_seconds: float = 0.0

    def add(self, other: "_BlockStats") -> None:
        self.frames += other.frames
        self.frame_errors += other.frame_errors
        self.symbol_errors += other.symbol_errors
        self.iterations += other.iterations
        self.decode_seconds += other.decode_seconds


class SweepEngine:
    """Per-process state reused across frames: code, instance, encoder, params."""

    def __init__(self, spec: CodeSpec, cfg: RunConfig):
        self.spec = spec
        self.cfg = cfg
        self.ctx = spec.context()
        self.encoder = Encoder(spec, self.ctx)
        self.inst = build_instance(
            expand_matrix(spec.parity_matrix(), self.ctx),
            low_degree=cfg.low_degree,
        )
        self.params = cfg.decoder_params()

    def channel(self, ebn0_db: float) -> ChannelConfig:
        return ChannelConfig(scheme=self.cfg.scheme, ebn0_db=ebn0_db,
                             rate=self.encoder.rate, q=self.spec.q)

    def run_frames(self, point_idx: int, ebn0_db: float,
                   start: int, count: int) -> _BlockStats:
        chan = self.channel(ebn0_db)
        n = self.spec.n
        tx = np.zeros((count, n), dtype=np.int64)
        rx = np.zeros((count, n), dtype=np.complex128)
        for b in range(count):
            rng = np.random.default_rng((self.cfg.seed, point_idx, start + b))
            tx[b] = self.encoder.random_codeword(rng)
            pts = modulate(tx[b], chan)
            if self.cfg.noiseless:
                rx[b] = pts
            else:
                noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                rx[b] = pts + chan.noise_sigma * noise
        llrs = compute_llr(rx, chan)
        t0 = time.perf_counter()
        res = decode_batch(llrs, self.inst, self.params)
        dt = time.perf_counter() - t0
        errs = res.frame_errors(tx)
        return _BlockStats(
            frames=count,
            frame_errors=int(errs.sum()),
            symbol_errors=int((res.symbols != tx).sum()),
            iterations=int(res.iterations.sum()),
            decode_seconds=dt,
        )


_WORKER_ENGINE: SweepEngine | None = None


def _worker_init(spec: CodeSpec, cfg: RunConfig) -> None:
    global _WORKER_ENGINE
    _WORKER_ENGINE = SweepEngine(spec, cfg)


def _worker_run(args) -> _BlockStats:
    point_idx, ebn0_db, start, count = args
    return _WORKER_ENGINE.run_frames(point_idx, ebn0_db, start, count)


def _load_spec(cfg: RunConfig) -> CodeSpec:
    return load_code(cfg.code_path, q=cfg.alist_q, value=cfg.alist_value,
                     row_pattern=cfg.alist_pattern)


def _point_done(cfg: RunConfig, frames: int, errors: int) -> bool:
    if cfg.frames_max is not None and frames >= cfg.frames_max:
        return True
    return frames >= cfg.frames_min and errors >= cfg.error_frames


def run_sweep(cfg: RunConfig, spec: CodeSpec | None = None,
              log=None) -> list[RunRecord]:
    """Run every Eb/N0 point to its stopping rule and return one record each.

    A point stops once both frames_min frames and error_frames errored
    frames are reached, or at frames_max when set (needed for noiseless or
    error-free operating points).
    """
    spec = spec if spec is not None else _load_spec(cfg)
    records = []
    if cfg.workers > 1:
        pool = concurrent.futures.ProcessPoolExecutor(
            max_workers=cfg.workers, initializer=_worker_init, initargs=(spec, cfg)
        )
    else:
        pool = None
        engine = SweepEngine(spec, cfg)
    try:
        for point_idx, ebn0 in enumerate(cfg.ebn0_db):
            stats = _BlockStats()
            t_point = time.perf_counter()
            next_frame = 0
            while not _point_done(cfg, stats.frames, stats.frame_errors):
                want = cfg.batch * max(1, cfg.workers)
                if cfg.frames_max is not None:
                    want = min(want, cfg.frames_max - stats.frames)
                blocks = []
                off = 0
                while off < want:
                    size = min(cfg.batch, want - off)
                    blocks.append((point_idx, ebn0, next_frame + off, size))
                    off += size
                if pool is not None:
                    for out in pool.map(_worker_run, blocks):
                        stats.add(out)
                else:
                    for blk in blocks:
                        stats.add(engine.run_frames(*blk))
                next_frame += want
            elapsed = time.perf_counter() - t_point
            total_symbols = stats.frames * spec.n
            rec = RunRecord(
                ebn0_db=float(ebn0),
                frames=stats.frames,
                frame_errors=stats.frame_errors,
                symbol_errors=stats.symbol_errors,
                total_symbols=total_symbols,
                fer=stats.frame_errors / stats.frames,
                ser=stats.symbol_errors / total_symbols,
                avg_iterations=stats.iterations / stats.frames,
                avg_decode_ms=1000.0 * stats.decode_seconds / stats.frames,
                elapsed_s=elapsed,
            )
            records.append(rec)
            if log is not None:
                log(f"ebn0={rec.ebn0_db:g} dB  frames={rec.frames}  "
                    f"fer={rec.fer:.3g}  ser={rec.ser:.3g}  "
                    f"avg_iters={rec.avg_iterations:.1f}")
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def emit_results(records, path, fmt: str = "csv", config: dict | None = None):
    """Write one row per Eb/N0 point; JSON carries the full records plus config."""
    if not records:
        raise ValueError("no records to emit")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    newline = "" if fmt == "csv" else None
    with open(path, "w", newline=newline, encoding="utf-8") as fh:
        _emit_to_stream(records, fh, fmt, config or {})


def parse_ebn0(text: str) -> list:
    """Accept 'a:b:step' sweeps or comma-separated lists of dB values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("sweep must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ValueError("empty sweep")
        return [start + i * step for i in range(count)]
    return [float(p) for p in text.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="decode-sweep",
        description="Monte Carlo FER/SER sweep for non-binary LDPC codes "
                    "decoded by the penalized box-QP ADMM solver.",
    )
    p.add_argument("--code", required=True, help="code file (native format or .alist)")
    p.add_argument("--scheme", required=True, choices=["qpsk", "8psk", "16qam"])
    p.add_argument("--ebn0", required=True,
                   help="Eb/N0 points in dB: 'a:b:step' or comma list")
    p.add_argument("--alpha", type=float, default=0.9, help="vertex penalty weight")
    p.add_argument("--mu", type=float, default=0.9, help="augmented-Lagrangian weight")
    p.add_argument("--eps", type=float, default=1e-5, help="residual threshold")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--frames-min", type=int, default=1000)
    p.add_argument("--error-frames", type=int, default=200,
                   help="errored frames to collect per point")
    p.add_argument("--frames-max", type=int, default=None,
                   help="hard cap on frames per point")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--stop-any", action="store_true",
                   help="stop when either residual is below eps instead of both")
    p.add_argument("--noiseless", action="store_true",
                   help="skip the noise addition (LLRs keep the configured sigma)")
    p.add_argument("--low-degree", choices=["error", "reduce"], default="error",
                   help="how to treat binary checks on fewer than 3 bits")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--batch", type=int, default=DEFAULT_BATCH)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--alist-q", type=int, default=None,
                   help="field size exponent q for .alist files")
    p.add_argument("--alist-value", type=int, default=1,
                   help="uniform field value for .alist unit entries")
    p.add_argument("--alist-pattern", default=None,
                   help="comma list of field values applied along each row "
                        "in column order (overrides --alist-value)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ebn0 = parse_ebn0(args.ebn0)
        pattern = ([int(x) for x in args.alist_pattern.split(",")]
                   if args.alist_pattern else None)
        cfg = RunConfig(
            code_path=args.code, scheme=args.scheme, ebn0_db=ebn0,
            alpha=args.alpha, mu=args.mu, eps=args.eps, max_iter=args.max_iter,
            frames_min=args.frames_min, error_frames=args.error_frames,
            frames_max=args.frames_max, seed=args.seed, stop_any=args.stop_any,
            noiseless=args.noiseless, low_degree=args.low_degree,
            workers=args.workers, batch=args.batch, out=args.out,
            format=args.format, alist_q=args.alist_q,
            alist_value=args.alist_value, alist_pattern=pattern,
        )
        spec = _load_spec(cfg)
        records = run_sweep(cfg, spec=spec,
                            log=lambda msg: print(msg, file=sys.stderr))
        if cfg.out is None:
            _emit_to_stream(records, sys.stdout, cfg.format, cfg.as_dict())
        else:
            emit_results(records, cfg.out, cfg.format, cfg.as_dict())
    except (OSError, ValueError) as exc:
        print(f"decode-sweep: {exc}", file=sys.stderr)
        return 1
    return 0


def _emit_to_stream(records, stream, fmt: str, config: dict) -> None:
    if fmt == "csv":
        writer = csv.writer(stream)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([repr(x) if isinstance(x, float) else x
                             for x in rec.csv_row()])
    else:
        json.dump({"config": config, "results": [dataclasses.asdict(r) for r in records]},
                  stream, indent=2)
        stream.write("\n")


if __name__ == "__main__":
    sys.exit(main())
