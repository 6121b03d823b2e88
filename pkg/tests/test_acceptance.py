"""Acceptance criteria 1-10, one test each; every test reports one PASS/FAIL line."""

import itertools
import re
from fractions import Fraction

import numpy as np

from lapolar import cli, cost_model, gate_pe, reference, scheduler
from lapolar.arch_sim import DESIGNS, ArchitectureConfig, decode_frames, simulate, simulate_batch, utilization_report
from lapolar.channel import ChannelConfig, uncoded_bpsk_ber
from lapolar.codec import PolarCode, partial_sum_oracle
from lapolar.harness import draw_frames, run_ber, run_latency_table
from lapolar.igc import IgcPipeline, build_full_graph, simplify_graph
from oracles import sat

# --- frozen expectations -------------------------------------------------------------------

TABLE_II = """\
stage,1,2,3,4,5,6,7,8
1,C1,C2,C3,-,-,-,-,C4
2,-,C1,C2,C3,C1,C2,C3,-
3,-,-,C1,C2,C3,C1,C2,C3
3',-,-,-,C1,C2,C3,C1,C2
"""
TABLE_II_SINGLE = """\
stage,1,2,3,4,5,6,7,8
1,C1,-,-,-,-,-,-,C2
2,-,C1,-,-,C1,-,-,-
3,-,-,C1,C1,-,C1,C1,-
"""
TABLE_III_M3 = """\
stage,1,2,3,4,5,6,7,8,9,10,11,12,13,14
1,C1,C2,C3,-,-,-,-,C4,C5,C6,-,-,-,-
2,-,C1,C2,C3,C1,C2,C3,-,C4,C5,C6,C4,C5,C6
3,-,-,C1,C2,C3,C1,C2,C3,-,C4,C5,C6,C4,C5
3',-,-,-,C1,C2,C3,C1,C2,C3,-,C4,C5,C6,C4
"""
# trailing cells the published table leaves empty (or elides) are idle
TABLE_III_M7 = """\
stage,1,2,3,4,5,6,7,8,9,10,11,12,13,14
1,C1,C2,C3,C4,C5,C6,C7,-,-,-,-,-,-,-
2,-,C1,C2,C3,C4,C5,C6,C7,-,-,-,-,-,-
3,-,-,C1,C2,C3,C4,C5,C6,C7,-,-,-,-,-
3',-,-,-,C1,C2,C3,C4,C5,C6,C7,-,-,-,-
2',-,-,-,-,C1,C2,C3,C4,C5,C6,C7,-,-,-
3'',-,-,-,-,-,C1,C2,C3,C4,C5,C6,C7,-,-
3''',-,-,-,-,-,-,C1,C2,C3,C4,C5,C6,C7,-
"""
TABLE_IV = """\
input,1,2,3,4,5,6,7,8
C1,4,-,2,1,1,2,1,1
C2,-,4,2,1,1,2,1,1
"""
# S, Cout, D, Bout for X, Y, Z (carry-in = borrow-in = Z)
TABLE_I = {
    (0, 0, 0): (0, 0, 0, 0), (0, 0, 1): (1, 0, 1, 1), (0, 1, 0): (1, 0, 1, 1), (0, 1, 1): (0, 1, 0, 1),
    (1, 0, 0): (1, 0, 1, 0), (1, 0, 1): (0, 1, 0, 0), (1, 1, 0): (0, 1, 0, 0), (1, 1, 1): (1, 1, 1, 1),
}
# min-sum / exact-SC FER bound, calibrated once on 10^5 frames per point (seed 2024) and frozen;
# calibration measured 1.017, 1.018, 1.006 at 2, 3, 4 dB
MINSUM_FER_BOUND = 1.20


def _cli(capsys, *argv):
    assert cli.main(list(argv)) == 0
    return capsys.readouterr().out


# --- criteria --------------------------------------------------------------------------------

def test_criterion_01_latency(report):
    rows = run_latency_table(range(1, 11))
    want = {"tree": lambda N: 2 * (N - 1), "d1": lambda N: N - 1, "d2": lambda N: N - 1,
            "d3": lambda N: N - 1, "d4": lambda N: N}
    bad = [(r.design, r.n, r.cycles) for r in rows if r.cycles != want[r.design](r.N)]
    n10 = tuple(r.cycles for r in rows if r.n == 10)
    report(1, not bad, f"simulated latencies for n=1..10 equal closed forms; n=10 {n10}; mismatches {bad}")
    assert not bad


def test_criterion_02_lookahead_correctness(report):
    mismatches, checked = 0, 0
    for n in range(2, 11):
        N = 1 << n
        code = PolarCode.from_bhattacharyya(n, N // 2)
        _, llr = draw_frames(code, ChannelConfig("awgn", 2.0, None, 2, 1000), 1000, stream=n)
        want = reference.decode(code, llr, "minsum_quantized", 6, 2).u_hat
        for d in DESIGNS:
            cfg = ArchitectureConfig(d, n, 6, 2, M=3 if d == "d2" else 1)
            got = decode_frames(cfg, code, llr)
            mismatches += int((got != want).any(axis=1).sum())
            checked += got.shape[0]
    report(2, mismatches == 0, f"{checked} frames (5 designs, n=2..10, 1000 each, 2 dB), {mismatches} mismatching")
    assert mismatches == 0


def test_criterion_03_schedule_tables(report, capsys):
    got = {
        "II refined": _cli(capsys, "schedule", "--n", "3", "--design", "d2", "--m", "3"),
        "II single": _cli(capsys, "schedule", "--n", "3", "--design", "d1", "--cycles", "8"),
        "III M=3": _cli(capsys, "schedule", "--n", "3", "--design", "d2", "--m", "3", "--cycles", "14"),
        "III M=7": _cli(capsys, "schedule", "--n", "3", "--design", "d2", "--m", "7", "--codewords", "7", "--cycles", "14"),
        "IV": _cli(capsys, "schedule", "--n", "3", "--design", "d4"),
    }
    want = {"II refined": TABLE_II, "II single": TABLE_II_SINGLE, "III M=3": TABLE_III_M3,
            "III M=7": TABLE_III_M7, "IV": TABLE_IV}
    bad = [k for k in want if got[k] != want[k]]
    report(3, not bad, f"tables compared cell-for-cell: {', '.join(want)}; differing {bad}")
    assert not bad


def test_criterion_04_pe_counts(report):
    ex = [scheduler.required_pe_count(8, M) for M in (1, 3, 7)]
    bad = []
    for n in range(1, 9):
        N = 1 << n
        for M in range(1, N):
            i = scheduler.concurrency_bracket(M)
            lo = 1 << (i - 1)
            counted = sum(N >> s for s, _ in scheduler.concurrent_units(n, M))
            if not (scheduler.required_pe_count(N, M) == scheduler.required_pe_count(N, lo) == counted):
                bad.append((N, M))
    ok = ex == [7, 8, 12] and not bad
    report(4, ok, f"N=8 M=1/3/7 -> {ex}; bracket constancy and row count for N<=256, all M; violations {bad[:5]}")
    assert ok


def test_criterion_05_gate_level(report):
    bad = []
    for X, Y, Z in itertools.product((0, 1), repeat=3):
        if gate_pe.full_addsub_bit(X, Y, Z, Z) != TABLE_I[(X, Y, Z)]:
            bad.append(("table", X, Y, Z))
    pairs = 0
    for q in (4, 6, 8):
        lim = (1 << (q - 1)) - 1
        words = range(-(1 << (q - 1)), 1 << (q - 1))
        for x, y in itertools.product(words, repeat=2):
            pairs += 1
            X, Y = gate_pe.FixedPoint(x, q), gate_pe.FixedPoint(y, q)
            s, d = gate_pe.addsub_word(X, Y)
            if (s.raw, d.raw) != (sat(x + y, q), sat(x - y, q)):
                bad.append(("addsub", q, x, y))
            t2 = gate_pe.type2_pe(X, Y)
            want = (-1 if (x < 0) != (y < 0) else 1) * min(abs(x), abs(y), lim)
            if t2.raw != want:
                bad.append(("type2", q, x, y))
            m = gate_pe.merged_pe(X, Y)
            if (m.out1, (m.out2, m.out3)) != (t2, gate_pe.type1_pe(X, Y)):
                bad.append(("merged", q, x, y))
    report(5, not bad, f"8 truth-table rows and {pairs} word pairs (q=4,6,8); failures {bad[:3]}")
    assert not bad


def test_criterion_06_igc(report):
    bad, reads = [], 0
    for n in range(2, 9):
        N = 1 << n
        code = PolarCode.from_bhattacharyya(n, N // 2)
        _, llr = draw_frames(code, ChannelConfig("awgn", 1.0, None, 6, 1000), 1000, stream=n)
        cfg = ArchitectureConfig("d1", n)
        res = simulate_batch(cfg, code, llr[:, None, :], record_selects=True)
        u_hat = res.u_hat[:, 0]
        out_cycles = sorted(a.cycle for a in res.schedule.activations if a.stage == n)
        for t, _, stage, node, bits in res.trace.consumed_selectors:
            m = 2 * sum(1 for c in out_cycles if c < t)  # bits decided before cycle t
            span = N >> (stage - 1)
            want = partial_sum_oracle(u_hat[:, :m], stage, code)
            reads += 1
            if (m - span // 2) // span != node or not np.array_equal(bits, want):
                bad.append((n, t, stage, node))
    structure = {n: (IgcPipeline(n).xor_pass_count, (1 << n) // 2 - 1) for n in range(2, 9)}
    xor3 = simplify_graph(build_full_graph(3)).xor_count
    ok = not bad and xor3 == 5 and all(a == b for a, b in structure.values())
    report(6, ok, f"{reads} selector reads x 1000 lanes (n=2..8) equal the oracle at the consuming cycle; "
                  f"n=3 XOR ops {xor3}; XOR-pass elements = N/2-1 for n=2..8")
    assert ok


def _formula_cells(N, q, M):
    """Independent evaluation of the published closed forms (None = empty cell)."""
    i = scheduler.concurrency_bracket(M)
    P = N + 2 ** (i - 1) * (i - 2)
    lg = Fraction(M.bit_length() - 1) if M & (M - 1) == 0 else None
    Po = None if lg is None else N + M * lg / 2 / 2
    cells = {
        ("merged_pes", "d1"): N - 1, ("merged_pes", "d2"): P, ("merged_pes", "d3"): N // 2,
        ("merged_pes", "d4"): N // 2, ("merged_pes", "tree"): N - 1, ("merged_pes", "line"): N // 2,
        ("igcs", "d1"): N - 1, ("igcs", "d2"): M, ("igcs", "d3"): 1, ("igcs", "d4"): 2,
        ("other_regs", "d1"): q * (3 * N - 4), ("other_regs", "d2"): (2 * M + 1) * q * (P - i) + 2 * i,
        ("other_regs", "d3"): q * (3 * N // 2 + 2), ("other_regs", "d4"): q * (9 * N // 2 + 4),
        ("other_regs", "tree"): q * (N - 1), ("other_regs", "line"): q * (N - 1),
        ("other_muxs", "d1"): q * (2 * N - 3), ("other_muxs", "d2"): 6 * q * P,
        ("other_muxs", "d3"): q * (N - 1), ("other_muxs", "d4"): q * (N + 2),
        ("other_muxs", "tree"): 0, ("other_muxs", "line"): 3 * q * (N // 2 - 1),
        ("total_xor", "d1"): 17 * q * N, ("total_xor", "d2"): 21 * q * P,
        ("total_xor", "d3"): 17 * q * N // 2, ("total_xor", "d4"): 17 * q * N // 2,
        ("total_xor", "tree"): (16 * q - 3) * N,
        ("total_reg", "d1"): 3 * q * N, ("total_reg", "d2"): (2 * M + 1) * q * P,
        ("total_reg", "d3"): 3 * q * N // 2, ("total_reg", "d4"): 9 * q * N // 2, ("total_reg", "tree"): (q + 1) * N,
        ("latency", "d1"): N - 1, ("latency", "d2"): N - 1, ("latency", "d3"): N - 1, ("latency", "d4"): N,
        ("latency", "tree"): 2 * (N - 1), ("latency", "overlapped"): 2 * (N - 1), ("latency", "line"): 2 * (N - 1),
        ("throughput", "d1"): 1, ("throughput", "d2"): M, ("throughput", "d3"): 1, ("throughput", "d4"): 2,
        ("throughput", "tree"): 1, ("throughput", "overlapped"): M, ("throughput", "line"): 1,
    }
    for d in ("d1", "d2", "d3", "d4"):
        cells[("pe_xor", d)], cells[("pe_reg", d)], cells[("pe_mux", d)] = 9 * q, 0, 6 * q
        cells[("igc_xor", d)], cells[("igc_ram", d)], cells[("igc_mux", d)] = N // 2 - 1, N // 2 - 2, N // 2 - 2
    for d in ("tree", "overlapped", "line"):
        cells[("pe_xor", d)], cells[("pe_reg", d)], cells[("pe_mux", d)] = 11 * q - 3, 1, 5 * q
    if Po is not None:
        cells.update({
            ("merged_pes", "overlapped"): Po, ("other_regs", "overlapped"): q * M * Po,
            ("other_muxs", "overlapped"): q * (2 * N + M * lg / 2), ("total_xor", "overlapped"): (18 * q - 3) * Po,
            ("total_reg", "overlapped"): (M + 1) * q * Po,
        })
    return cells


def test_criterion_07_cost_table(report, capsys):
    bad, compared = [], 0
    for N, q, M in itertools.product((8, 256, 4096), (4, 6, 8), (1, 3, 4, 7)):
        out = _cli(capsys, "cost", "--n", str(N.bit_length() - 1), "--q", str(q), "--m", str(M))
        printed = {}
        for line in out.splitlines()[2:]:
            m = re.match(r'^(\w+),(\w+),(?:"[^"]*"|-),(.+)$', line)
            if m:
                printed[(m.group(1), m.group(2))] = m.group(3)
        for key, v in _formula_cells(N, q, M).items():
            compared += 1
            v = Fraction(v)
            text = str(v.numerator) if v.denominator == 1 else f"{float(v):.4f}"
            if printed.get(key) != text:
                bad.append((N, q, M, key, printed.get(key), text))
    audit = {}
    for d in ("d1", "d3", "d4"):
        audit[d] = {it.element: it for it in cost_model.structural_audit(ArchitectureConfig(d, 3))}
    d1 = audit["d1"]
    d1_ok = (d1["merged PEs"].measured, d1["2-to-1 word multiplexers"].measured,
             d1["delay elements (words)"].measured) == (7, 13, 21)
    pes_ok = all(audit[d]["merged PEs"].status == "match" for d in ("d3", "d4"))
    demux_flag = any(it.status == "flagged" and "N/2-2" in it.note for it in d1.values())
    ok = not bad and d1_ok and pes_ok and demux_flag
    mism = sorted({f"{d}:{e}" for d in audit for e, it in audit[d].items() if it.status == "mismatch"})
    report(7, ok, f"{compared} formula cells equal; d1 n=3 PEs/MUXes/delays 7/13/21; "
                  f"N/2-1 vs N/2-2 flagged; reported mismatches {mism}")
    assert ok


def test_criterion_08_percentage_claims(report, capsys):
    out = _cli(capsys, "cost", "--n", "8", "--ratios")
    verdicts = [ln for ln in out.splitlines() if "->" in ln]
    ok = len(verdicts) == 2 * len(cost_model.CLAIMS) and all(ln.endswith("MATCH") for ln in verdicts)
    summary = "; ".join(f"{ln.split(':')[0]} {ln.split('[')[1].split(']')[0]} closest "
                        f"{ln.split('closest=')[1].split(' ')[0]} {ln.split('-> ')[1]}" for ln in verdicts)
    report(8, ok, f"honest report produced: {summary}")
    assert ok


def test_criterion_09_minsum_degradation(report):
    code = PolarCode.from_bhattacharyya(6, 32)
    pts = run_ber(code, None, [2.0, 3.0, 4.0], 100_000, seed=2024, references=("minsum", "llr_exact"))
    get = {(p.decoder, p.ebno_db): p for p in pts}
    ratios = {x: get[("minsum", x)].fer / get[("llr_exact", x)].fer for x in (2.0, 3.0, 4.0)}
    beats = all(get[(d, x)].ber < uncoded_bpsk_ber(x)
                for d in ("minsum", "llr_exact", "minsum_q6f2") for x in (3.0, 4.0))
    ok = all(r < MINSUM_FER_BOUND for r in ratios.values()) and beats
    report(9, ok, "min-sum/exact FER " + ", ".join(f"{x:g} dB {r:.3f}" for x, r in ratios.items())
           + f" (bound {MINSUM_FER_BOUND}); coded BER below uncoded at 3 and 4 dB: {beats}")
    assert ok


def test_criterion_10_utilization(report):
    tree_ok, lines = True, []
    for n in range(2, 9):
        N = 1 << n
        rep = utilization_report(simulate(ArchitectureConfig("tree", n), PolarCode(n, ()), np.ones((1, N))))
        tree_ok &= rep.max_active <= N // 2 and rep.max_graph_stage == Fraction(1, 2)
        tree_ok &= rep.min_graph_stage == Fraction(1, N)
        if n == 3:
            lines.append(f"tree n=3 peak {rep.max_active}/{N - 1} PEs, stage efficiency max {rep.max_graph_stage} "
                         f"min {rep.min_graph_stage}")
    full_ok = True
    for n in range(2, 7):
        N = 1 << n
        res = simulate(ArchitectureConfig("d2", n, M=N - 1), PolarCode(n, ()), np.ones((2 * (N - 1), N)))
        full_ok &= utilization_report(res).aggregate == 1
    util3 = scheduler.stage_utilization(scheduler.concurrent_schedule(3, 3))
    m3_ok = util3 == {"1": Fraction(3, 7), "2": Fraction(6, 7), "3": Fraction(6, 7), "3'": Fraction(6, 7)}
    ok = tree_ok and full_ok and m3_ok
    lines.append(f"M=N-1 steady state 100% for n=2..6: {full_ok}")
    lines.append("M=3 n=3 rows " + ", ".join(f"{k}={v}" for k, v in util3.items()))
    report(10, ok, "; ".join(lines))
    assert ok


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q"]))
