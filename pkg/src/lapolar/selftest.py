"""Fast oracle-equivalence checks behind ``lapolar selftest``."""

from __future__ import annotations

import itertools

import numpy as np

from . import gate_pe, reference, scheduler
from .arch_sim import DESIGNS, ArchitectureConfig, decode_frames
from .channel import ChannelConfig
from .codec import PolarCode, encode, generator_matrix, partial_sum_oracle
from .harness import draw_frames, run_latency_table
from .igc import IgcPipeline


def _gate() -> bool:
    q = 4
    lim = gate_pe.sat_limit(q)
    words = range(-(1 << (q - 1)), 1 << (q - 1))
    for x, y in itertools.product(words, repeat=2):
        X, Y = gate_pe.FixedPoint(x, q), gate_pe.FixedPoint(y, q)
        s, d = gate_pe.addsub_word(X, Y)
        if (s.raw, d.raw) != (max(-lim, min(lim, x + y)), max(-lim, min(lim, x - y))):
            return False
        ma, mb = min(abs(x), lim), min(abs(y), lim)
        want = (1 if (x < 0) == (y < 0) else -1) * min(ma, mb)
        if gate_pe.type2_pe(X, Y).raw != want:
            return False
        m = gate_pe.merged_pe(X, Y)
        if (m.out1, (m.out2, m.out3)) != (gate_pe.type2_pe(X, Y), gate_pe.type1_pe(X, Y)):
            return False
    return True


def _codec() -> bool:
    rng = np.random.default_rng(0)
    for n in range(1, 7):
        u = rng.integers(0, 2, (20, 1 << n), dtype=np.uint8)
        if not np.array_equal(encode(PolarCode(n, ()), u), (u.astype(int) @ generator_matrix(n)) % 2):
            return False
    return True


def _reference(seed: int) -> bool:
    code = PolarCode.from_bhattacharyya(5, 16)
    u, llr = draw_frames(code, ChannelConfig("awgn", 8.0, None, seed, 50), 50, stream=7)
    return all(np.array_equal(reference.decode(code, llr, v).u_hat, u) for v in reference.VARIANTS)


def _igc(seed: int) -> bool:
    rng = np.random.default_rng(seed)
    for n in range(2, 7):
        N = 1 << n
        code = PolarCode(n, ())
        u = rng.integers(0, 2, (8, N), dtype=np.uint8)
        pipe = IgcPipeline(n, batch=8)
        for e in range(N // 2):
            for em in pipe.step((u[:, 2 * e], u[:, 2 * e + 1])):
                want = partial_sum_oracle(u[:, : 2 * e + 2], em.stage, code)
                if not np.array_equal(em.bits, want):
                    return False
    return True


def _architectures(seed: int) -> bool:
    for n in range(2, 6):
        code = PolarCode.from_bhattacharyya(n, 1 << (n - 1))
        _, llr = draw_frames(code, ChannelConfig("awgn", 2.0, None, seed, 40), 40, stream=n)
        want = reference.decode(code, llr, "minsum_quantized", 6, 2).u_hat
        for d in DESIGNS:
            cfg = ArchitectureConfig(d, n, M=min(3, (1 << n) - 1) if d == "d2" else 1)
            if not np.array_equal(decode_frames(cfg, code, llr), want):
                return False
    return True


def _latency() -> bool:
    return all(r.cycles == r.formula for r in run_latency_table(range(1, 7)))


def _schedules() -> bool:
    return [scheduler.required_pe_count(8, M) for M in (1, 3, 7)] == [7, 8, 12]


def run_all(seed: int = 0) -> tuple[bool, str]:
    checks = [
        ("gate_level_q4", _gate),
        ("codec_dense_matrix", _codec),
        ("reference_high_snr", lambda: _reference(seed)),
        ("igc_partial_sums", lambda: _igc(seed)),
        ("architectures_vs_reference", lambda: _architectures(seed)),
        ("latency_closed_forms", _latency),
        ("pe_counts", _schedules),
    ]
    lines, ok = [], True
    for name, fn in checks:
        good = bool(fn())
        ok &= good
        lines.append(f"{'PASS' if good else 'FAIL'} {name}")
    return ok, "\n".join(lines) + "\n"
