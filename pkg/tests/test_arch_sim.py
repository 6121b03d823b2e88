from fractions import Fraction

import numpy as np
import pytest

from lapolar import reference
from lapolar.arch_sim import (
    DESIGNS,
    ArchitectureConfig,
    candidate_select_events,
    decode_frames,
    inventory,
    simulate,
    simulate_batch,
    utilization_report,
)
from lapolar.channel import ChannelConfig
from lapolar.codec import PolarCode
from lapolar.errors import ConfigError, SizeError
from lapolar.harness import draw_frames
from oracles import int_minsum, natural_order, quantize_ref, sc_recursive


def _cfg(d, n, M=3, **kw):
    return ArchitectureConfig(d, n, M=min(M, (1 << n) - 1) if d == "d2" else 1, **kw)


def _data(n, count, ebno=2.0, stream=0, K=None):
    code = PolarCode.from_bhattacharyya(n, (1 << (n - 1)) if K is None else K)
    _, llr = draw_frames(code, ChannelConfig("awgn", ebno, None, 5, count), count, stream)
    return code, llr


@pytest.mark.parametrize("design", DESIGNS)
@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_bit_exact_with_integer_oracle(design, n):
    code, llr = _data(n, 12, stream=n)
    cfg = _cfg(design, n)
    got = decode_frames(cfg, code, llr)
    fo, go = int_minsum(cfg.q)
    frozen = dict(zip(code.frozen_set, code.frozen_values))
    for k in range(llr.shape[0]):
        raw = [quantize_ref(float(v), cfg.q, cfg.f) for v in natural_order(llr[k])]
        assert got[k].tolist() == sc_recursive(raw, frozen, fo, go)[0]


@pytest.mark.parametrize("design", DESIGNS)
def test_bit_exact_with_reference_larger(design):
    n = 7
    cfg = _cfg(design, n)
    F = cfg.frames_per_run()
    code, llr = _data(n, 60 * F, stream=77)
    want = reference.decode(code, llr, "minsum_quantized", 6, 2)
    res = simulate_batch(cfg, code, llr.reshape(60, F, 1 << n))
    assert np.array_equal(res.u_hat.reshape(-1, 1 << n), want.u_hat)
    assert np.array_equal(res.decision_llrs.reshape(-1, 1 << n), want.llr_trace)


@pytest.mark.parametrize("q,f", [(4, 1), (8, 3)])
def test_other_word_lengths(q, f):
    code, llr = _data(5, 40)
    want = reference.decode(code, llr, "minsum_quantized", q, f).u_hat
    for d in DESIGNS:
        assert np.array_equal(decode_frames(_cfg(d, 5, q=q, f=f), code, llr), want)


def test_ram_storage_same_output():
    code, llr = _data(6, 30)
    a = decode_frames(_cfg("d1", 6), code, llr)
    b = decode_frames(_cfg("d1", 6, igc_storage="ram"), code, llr)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("n", range(1, 9))
def test_latencies(n):
    N = 1 << n
    code = PolarCode(n, ())
    want = {"tree": 2 * (N - 1), "d1": N - 1, "d2": N - 1, "d3": N - 1, "d4": N}
    for d in DESIGNS:
        cfg = _cfg(d, n)
        res = simulate(cfg, code, np.ones((cfg.frames_per_run(), N)))
        assert max(res.latency_cycles) == want[d] == cfg.latency_formula


def test_concurrent_stream_latency_every_codeword():
    n, M = 4, 5
    code, llr = _data(n, 11)
    res = simulate(ArchitectureConfig("d2", n, M=M), code, llr)
    assert res.latency_cycles == (15,) * 11


def test_select_events_respect_determinism():
    code, llr = _data(4, 3)
    for d in ("d1", "d2", "d3", "d4"):
        cfg = _cfg(d, 4)
        res = simulate(cfg, code, llr[: cfg.frames_per_run()])
        ev = candidate_select_events(res)
        assert len(ev) == cfg.frames_per_run() * ((1 << 4) - 1)
        for e in ev:
            assert e.computed <= e.resolved
            if e.stage < 4:
                assert e.consumed > e.resolved


def test_pe_activity_bounded_by_bank():
    code, llr = _data(5, 4)
    for d in DESIGNS:
        cfg = _cfg(d, 5)
        res = simulate(cfg, code, llr[: cfg.frames_per_run()])
        assert max(res.trace.active_pes()) <= res.pe_bank_size


def test_tree_utilization():
    for n in range(2, 8):
        N = 1 << n
        code = PolarCode(n, ())
        rep = utilization_report(simulate(_cfg("tree", n), code, np.ones((1, N))))
        assert rep.max_bank <= Fraction(1, 2) * Fraction(N, N - 1)
        assert rep.max_active == N // 2
        assert rep.min_graph_stage == Fraction(1, N)


def test_full_concurrency_utilization():
    for n in range(2, 6):
        N = 1 << n
        cfg = ArchitectureConfig("d2", n, M=N - 1)
        res = simulate(cfg, PolarCode(n, ()), np.ones((2 * (N - 1), N)))
        rep = utilization_report(res)
        assert rep.aggregate == 1
        assert set(rep.per_unit.values()) == {Fraction(1)}


def test_inventory_d1_n3():
    inv = inventory(ArchitectureConfig("d1", 3))
    assert (inv["merged_pes"], inv["mux_words"], inv["registers_words"]) == (7, 13, 21)
    assert (inv["igc_xor_pass"], inv["igc_demux"], inv["igc_storage_bits"]) == (3, 2, 2)


def test_frame_count_rules():
    code = PolarCode(3, ())
    with pytest.raises(ConfigError):
        simulate(ArchitectureConfig("d3", 3), code, np.ones((2, 8)))
    with pytest.raises(ConfigError):
        simulate(ArchitectureConfig("d4", 3), code, np.ones((1, 8)))
    with pytest.raises(SizeError):
        simulate(ArchitectureConfig("d1", 3), code, np.ones((1, 4)))


def test_config_validation():
    with pytest.raises(ConfigError):
        ArchitectureConfig("d1", 3, M=2)
    with pytest.raises(ConfigError):
        ArchitectureConfig("d2", 3, M=8)
    with pytest.raises(ConfigError):
        ArchitectureConfig("bogus", 3)
    assert ArchitectureConfig("lookahead_pipelined", 3).kind == "d1"


def test_decode_frames_padding():
    code, llr = _data(4, 5)
    want = reference.decode(code, llr, "minsum_quantized").u_hat
    assert np.array_equal(decode_frames(_cfg("d4", 4), code, llr), want)


def test_trace_csv_and_summary():
    code, llr = _data(3, 1)
    res = simulate(_cfg("d1", 3), code, llr)
    lines = res.trace.to_csv().splitlines()
    assert lines[0] == "cycle,stage,unit,pe_id,codeword,op_kind"
    assert len(lines) - 1 == sum(res.trace.active_pes())
    assert "latency=7" in res.summary()
