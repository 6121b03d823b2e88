"""Monte-Carlo BER sweeps and latency tables."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import reference
from .arch_sim import DESIGNS, ArchitectureConfig, decode_frames, simulate_batch
from .channel import ChannelConfig, channel_llrs, make_rng, uncoded_bpsk_ber
from .codec import PolarCode, encode
from .errors import ConfigError

# frames drawn per generator stream; fixes the noise sequence independently of batching
DRAW_CHUNK = 1000


@dataclass(frozen=True)
class BerPoint:
    decoder: str
    ebno_db: float
    frames_run: int
    bit_errors: int
    frame_errors: int
    K: int

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames_run * self.K) if self.frames_run and self.K else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames_run if self.frames_run else 0.0


def draw_frames(code: PolarCode, ch: ChannelConfig, frames: int, stream: int) -> tuple[np.ndarray, np.ndarray]:
    """Random messages and their channel LLRs for one sweep point.

    Draw order: ``frames x K`` message uniforms (bit = u < 0.5), then the
    channel's uniforms for ``frames x N`` codeword bits.
    """
    rng = make_rng(ch.seed, stream)
    msg = (rng.random((frames, code.K)) < 0.5).astype(np.uint8)
    u = code.info_word(msg)
    x = encode(code, u)
    llr = channel_llrs(x, ch, rate=code.K / code.N if code.K else 1.0, rng=rng)
    return u, llr


def _count(code: PolarCode, u: np.ndarray, u_hat: np.ndarray) -> tuple[int, int]:
    info = list(code.info_set)
    err = u_hat[:, info] != u[:, info]
    return int(err.sum()), int(err.any(axis=1).sum())


def run_ber(
    code: PolarCode,
    architecture: ArchitectureConfig | None,
    ebno_points,
    frames: int,
    seed: int = 0,
    channel: str = "awgn",
    references=("minsum", "llr_exact"),
    batch: int = 5000,
) -> list[BerPoint]:
    """Sweep Eb/N0 in dB (for ``channel="bsc"``, crossover probabilities) and count errors.

    Every point decodes the same frames with the architecture (when given),
    the quantized reference at the architecture's (q, f), and each variant in
    ``references``.  Chunk ``c`` of point ``j`` (``DRAW_CHUNK`` frames) comes
    from stream ``j * 1_000_003 + c``; ``batch`` only groups chunks for
    decoding and does not change the counts.
    """
    if frames < 1:
        raise ConfigError("frames must be >= 1")
    if batch < 1:
        raise ConfigError("batch must be >= 1")
    q, f = (architecture.q, architecture.f) if architecture else (6, 2)
    out: list[BerPoint] = []
    points = list(ebno_points)
    for j, x in enumerate(points):
        if channel == "awgn":
            ch = ChannelConfig("awgn", float(x), None, seed, frames)
        else:
            ch = ChannelConfig("bsc", None, float(x), seed, frames)
        decoders = ([f"arch_{architecture.kind}"] if architecture else []) + [f"minsum_q{q}f{f}"] + list(references)
        tallies = {d: [0, 0] for d in decoders}
        chunks = [(c, min(DRAW_CHUNK, frames - c * DRAW_CHUNK)) for c in range(-(-frames // DRAW_CHUNK))]
        per_batch = max(1, batch // DRAW_CHUNK)
        for b in range(0, len(chunks), per_batch):
            drawn = [draw_frames(code, ch, m, stream=j * 1_000_003 + c) for c, m in chunks[b:b + per_batch]]
            u = np.concatenate([d[0] for d in drawn])
            llr = np.concatenate([d[1] for d in drawn])
            results = {}
            if architecture:
                results[decoders[0]] = decode_frames(architecture, code, llr)
            results[f"minsum_q{q}f{f}"] = reference.decode(code, llr, "minsum_quantized", q, f).u_hat
            for v in references:
                results[v] = reference.decode(code, llr, v).u_hat
            for d, uh in results.items():
                be, fe = _count(code, u, uh)
                tallies[d][0] += be
                tallies[d][1] += fe
        for d in decoders:
            out.append(BerPoint(d, float(x), frames, tallies[d][0], tallies[d][1], code.K))
    return out


def ber_csv(points: list[BerPoint], uncoded: bool = True) -> str:
    """CSV of the sweep; ``uncoded`` appends the closed-form uncoded BPSK BER per Eb/N0."""
    buf = io.StringIO()
    buf.write("decoder,ebno_db,frames,bit_errors,frame_errors,ber,fer\n")
    for p in points:
        buf.write(f"{p.decoder},{p.ebno_db:g},{p.frames_run},{p.bit_errors},{p.frame_errors},{p.ber:.6e},{p.fer:.6e}\n")
    if uncoded:
        for x in dict.fromkeys(p.ebno_db for p in points):
            buf.write(f"uncoded_theory,{x:g},,,,{uncoded_bpsk_ber(x):.6e},\n")
    return buf.getvalue()


@dataclass(frozen=True)
class LatencyRow:
    design: str
    n: int
    cycles: int
    formula: int

    @property
    def N(self) -> int:
        return 1 << self.n


def run_latency_table(n_values, M: int = 3) -> list[LatencyRow]:
    """Simulated worst-codeword latency of every design next to its closed form.

    The concurrent design runs with ``min(M, N - 1)`` codewords in flight.
    """
    rows = []
    for n in n_values:
        N = 1 << n
        code = PolarCode(n, ())
        for d in DESIGNS:
            cfg = ArchitectureConfig(d, n, M=min(M, N - 1) if d == "d2" else 1)
            F = cfg.frames_per_run()
            res = simulate_batch(cfg, code, np.ones((1, F, N)))
            rows.append(LatencyRow(d, n, max(res.latency_cycles), cfg.latency_formula))
    return rows


def latency_csv(rows: list[LatencyRow]) -> str:
    buf = io.StringIO()
    buf.write("design,n,N,cycles,formula,match\n")
    for r in rows:
        buf.write(f"{r.design},{r.n},{r.N},{r.cycles},{r.formula},{int(r.cycles == r.formula)}\n")
    return buf.getvalue()
