"""Command-line entry point: ``lapolar <command> [flags]``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import cost_model, harness, scheduler
from .arch_sim import KIND_ALIASES, ArchitectureConfig, simulate
from .channel import ChannelConfig
from .codec import PolarCode
from .errors import ConfigError, LapolarError, RangeError, SizeError

USAGE_ERRORS = (ConfigError, RangeError, SizeError)


def _n_range(text: str) -> list[int]:
    try:
        if "-" in text:
            lo, hi = (int(x) for x in text.split("-", 1))
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO-HI, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _code(args) -> PolarCode:
    N = 1 << args.n
    k = N // 2 if args.k is None else args.k
    return PolarCode.from_bhattacharyya(args.n, k)


def _config(args) -> ArchitectureConfig:
    return ArchitectureConfig(args.design, args.n, q=args.q, f=args.f, M=args.m or 1)


def _bits(v) -> str:
    return "".join(str(int(b)) for b in v)


# --- commands -----------------------------------------------------------------------

def cmd_decode(args) -> int:
    cfg = _config(args)
    code = _code(args)
    F = cfg.frames_per_run()
    ch = _channel(args, args.ebno[0] if args.channel == "awgn" else args.p[0])
    u, llr = harness.draw_frames(code, ch, F, stream=0)
    res = simulate(cfg, code, llr)
    lines = [f"code_N={code.N}", f"code_K={code.K}", f"seed={args.seed}"]
    for i in range(F):
        uh = res.u_hat[0, i]
        lines.append(f"frame{i + 1}_u={_bits(u[i])}")
        lines.append(f"frame{i + 1}_u_hat={_bits(uh)}")
        lines.append(f"frame{i + 1}_bit_errors={int(np.sum(uh != u[i]))}")
    sys.stdout.write("\n".join(lines) + "\n" + res.summary())
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(res.trace.to_csv())
    return 0


def cmd_schedule(args) -> int:
    n, d = args.n, KIND_ALIASES.get(args.design)
    if args.l is not None and d != "d4":
        raise ConfigError("--l applies to the parallel (d4) design only")
    if args.m and d != "d2":
        raise ConfigError("--m applies to d2 only")
    if d == "d2":
        M = args.m or 1
        cycles = args.cycles
        if cycles is None and args.codewords is None:
            cycles = 1 << n
        s = scheduler.concurrent_schedule(n, M, codewords=args.codewords, cycles=cycles)
        text = s.to_csv(cycles)
    elif d == "d1":
        s = scheduler.lookahead_schedule(n, args.codewords or 1, cycles=args.cycles)
        text = s.to_csv(args.cycles)
    elif d == "tree":
        s = scheduler.tree_schedule(n, args.codewords or 1)
        text = s.to_csv(args.cycles)
    elif d == "d3":
        text = scheduler.folded_schedule(n).demand_csv(args.cycles)
    else:
        L = 2 if args.l is None else args.l
        text = scheduler.parallel_schedule(n, L).demand_csv(args.cycles)
    _emit(args, text)
    return 0


def _channel(args, x: float) -> ChannelConfig:
    if args.channel == "awgn":
        return ChannelConfig("awgn", x, None, args.seed, args.frames)
    return ChannelConfig("bsc", None, x, args.seed, args.frames)


def cmd_ber(args) -> int:
    cfg = _config(args)
    code = _code(args)
    points = args.ebno if args.channel == "awgn" else args.p
    for x in points:
        _channel(args, x)  # validate before the sweep starts
    rows = harness.run_ber(code, cfg, points, args.frames, seed=args.seed, channel=args.channel)
    text = harness.ber_csv(rows, uncoded=args.channel == "awgn")
    if args.channel == "bsc":
        text = text.replace("ebno_db", "crossover_p", 1)
    _emit(args, text)
    return 0


def cmd_latency(args) -> int:
    for n in args.n:
        if not 1 <= n <= 12:
            raise RangeError("latency table supports n in [1, 12]")
    _emit(args, harness.latency_csv(harness.run_latency_table(args.n, M=args.m or 3)))
    return 0


def cmd_cost(args) -> int:
    N, M = 1 << args.n, args.m or 1
    text = cost_model.table_v_csv(N, args.q, M)
    if args.ratios:
        text += "\n" + cost_model.ratio_report(N, args.q, M)
    _emit(args, text)
    return 0


def cmd_audit(args) -> int:
    _emit(args, cost_model.audit_text(cost_model.structural_audit(_config(args))))
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_all

    ok, report = run_all(seed=args.seed)
    _emit(args, report)
    return 0 if ok else 1


# --- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lapolar", description="Look-ahead SC polar decoder toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    designs = sorted(KIND_ALIASES)

    def common(sp, n_type=int, n_default=3):
        sp.add_argument("--n", type=n_type, default=n_default, help="log2 of the block length")
        sp.add_argument("--out", help="write CSV output to this path")
        sp.add_argument("--seed", type=int, default=0)

    def arch(sp, default="d1"):
        sp.add_argument("--design", choices=designs, default=default)
        sp.add_argument("--m", type=int, help="codewords in flight (d2)")
        sp.add_argument("--q", type=int, default=6, help="total LLR bits")
        sp.add_argument("--f", type=int, default=2, help="fraction bits")

    def chan(sp, frames):
        sp.add_argument("--k", type=int, help="information bits (default N/2)")
        sp.add_argument("--channel", choices=("awgn", "bsc"), default="awgn")
        sp.add_argument("--ebno", type=_floats, default=[2.0], help="Eb/N0 in dB, comma-separated")
        sp.add_argument("--p", type=_floats, default=[0.05], help="BSC crossover, comma-separated")
        sp.add_argument("--frames", type=int, default=frames)

    sp = sub.add_parser("decode", help="decode one random frame and print the trace summary")
    common(sp)
    arch(sp)
    chan(sp, 1)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("schedule", help="dump a schedule as CSV")
    common(sp)
    sp.add_argument("--design", choices=designs, default="d2")
    sp.add_argument("--m", type=int)
    sp.add_argument("--l", type=int, help="interleaved frames on the folded bank (d4)")
    sp.add_argument("--codewords", type=int)
    sp.add_argument("--cycles", type=int)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("ber", help="Monte-Carlo BER/FER sweep")
    common(sp, n_default=6)
    arch(sp)
    chan(sp, 1000)
    sp.set_defaults(func=cmd_ber)

    sp = sub.add_parser("latency", help="simulated latency of every design against its closed form")
    common(sp, n_type=_n_range, n_default=[3])
    sp.add_argument("--m", type=int, help="codewords in flight for d2 (default 3)")
    sp.set_defaults(func=cmd_latency)

    sp = sub.add_parser("cost", help="cost table for N = 2^n")
    common(sp, n_default=8)
    sp.add_argument("--q", type=int, default=6)
    sp.add_argument("--m", type=int)
    sp.add_argument("--ratios", action="store_true", help="append the hardware-ratio report")
    sp.set_defaults(func=cmd_cost)

    sp = sub.add_parser("audit", help="instantiated element counts against published ones")
    common(sp)
    arch(sp)
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("selftest", help="run the oracle-equivalence suites")
    common(sp)
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"lapolar {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except LapolarError as exc:
        print(f"lapolar {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"lapolar {args.command}: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
