"""Closed-form hardware cost of the decoder designs, in XOR-equivalent units.

One 2-input XOR and one 1-bit 2-to-1 multiplexer both count as one unit.
Seven design columns are modelled: the four look-ahead designs ``d1`` ..
``d4`` and the three reference designs ``tree``, ``overlapped`` and
``line``.  Every row is kept as a printable formula plus an evaluator, so
the CSV export can show both side by side.

Two views of the totals are produced:

* ``approx``: the leading-order ``~`` expressions (IGC excluded);
* ``itemized``: ``PEs * (XOR + MUX per PE) + other MUXs``, summed exactly.

The overlapped column contains ``M (log2 M / 2) / 2``; it is exact when
``M`` is a power of two and a float otherwise.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction

from . import gate_pe, scheduler
from .arch_sim import ArchitectureConfig, inventory
from .errors import ConfigError
from .igc import IgcPipeline

DESIGNS = ("d1", "d2", "d3", "d4", "tree", "overlapped", "line")
COUNTERPART = {"d1": "tree", "d2": "overlapped", "d3": "line", "d4": "line"}


def _log2(M: int):
    if M & (M - 1) == 0:
        return Fraction(M.bit_length() - 1)
    return math.log2(M)


def _num(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


@dataclass(frozen=True)
class _Params:
    N: int
    q: int
    M: int

    @property
    def i(self) -> int:
        return scheduler.concurrency_bracket(self.M)

    @property
    def P2(self) -> int:
        i = self.i
        return self.N + (1 << (i - 1)) * (i - 2)

    @property
    def Po(self):
        return self.N + self.M * (_log2(self.M) / 2) / 2


# row -> design -> (printed formula, evaluator); None marks an empty cell
_P2 = "N+2^(i-1)(i-2)"
_PO = "N+M(log2 M/2)/2"
TABLE = {
    "merged_pes": {
        "d1": ("N-1", lambda p: p.N - 1),
        "d2": (_P2, lambda p: p.P2),
        "d3": ("N/2", lambda p: p.N // 2),
        "d4": ("N/2", lambda p: p.N // 2),
        "tree": ("N-1", lambda p: p.N - 1),
        "overlapped": ("~" + _PO, lambda p: p.Po),
        "line": ("N/2", lambda p: p.N // 2),
    },
    "pe_xor": {d: ("9q", lambda p: 9 * p.q) for d in ("d1", "d2", "d3", "d4")}
    | {d: ("11q-3", lambda p: 11 * p.q - 3) for d in ("tree", "overlapped", "line")},
    "pe_reg": {d: ("0", lambda p: 0) for d in ("d1", "d2", "d3", "d4")}
    | {d: ("1", lambda p: 1) for d in ("tree", "overlapped", "line")},
    "pe_mux": {d: ("6q", lambda p: 6 * p.q) for d in ("d1", "d2", "d3", "d4")}
    | {d: ("5q", lambda p: 5 * p.q) for d in ("tree", "overlapped", "line")},
    "igcs": {
        "d1": ("N-1", lambda p: p.N - 1),
        "d2": ("M", lambda p: p.M),
        "d3": ("1", lambda p: 1),
        "d4": ("2", lambda p: 2),
        "tree": None,
        "overlapped": None,
        "line": None,
    },
    "igc_xor": {d: ("N/2-1", lambda p: p.N // 2 - 1) for d in ("d1", "d2", "d3", "d4")}
    | {d: None for d in ("tree", "overlapped", "line")},
    "igc_ram": {d: ("N/2-2", lambda p: p.N // 2 - 2) for d in ("d1", "d2", "d3", "d4")}
    | {d: None for d in ("tree", "overlapped", "line")},
    "igc_mux": {d: ("N/2-2", lambda p: p.N // 2 - 2) for d in ("d1", "d2", "d3", "d4")}
    | {d: None for d in ("tree", "overlapped", "line")},
    "other_regs": {
        "d1": ("q(3N-4)", lambda p: p.q * (3 * p.N - 4)),
        "d2": ("(2M+1)q[" + _P2 + "-i]+2i", lambda p: (2 * p.M + 1) * p.q * (p.P2 - p.i) + 2 * p.i),
        "d3": ("q(3N/2+2)", lambda p: p.q * (3 * p.N // 2 + 2)),
        "d4": ("q(9N/2+4)", lambda p: p.q * (9 * p.N // 2 + 4)),
        "tree": ("q(N-1)", lambda p: p.q * (p.N - 1)),
        "overlapped": ("~qM[" + _PO + "]", lambda p: p.q * p.M * p.Po),
        "line": ("q(N-1)", lambda p: p.q * (p.N - 1)),
    },
    "other_muxs": {
        "d1": ("q(2N-3)", lambda p: p.q * (2 * p.N - 3)),
        "d2": ("6q[" + _P2 + "]", lambda p: 6 * p.q * p.P2),
        "d3": ("q(N-1)", lambda p: p.q * (p.N - 1)),
        "d4": ("q(N+2)", lambda p: p.q * (p.N + 2)),
        "tree": ("0", lambda p: 0),
        "overlapped": ("~q[2N+M(log2 M/2)]", lambda p: p.q * (2 * p.N + p.M * _log2(p.M) / 2)),
        "line": ("3q(N/2-1)", lambda p: 3 * p.q * (p.N // 2 - 1)),
    },
    "total_xor": {
        "d1": ("~17qN", lambda p: 17 * p.q * p.N),
        "d2": ("~21q[" + _P2 + "]", lambda p: 21 * p.q * p.P2),
        "d3": ("~17qN/2", lambda p: Fraction(17 * p.q * p.N, 2)),
        "d4": ("~17qN/2", lambda p: Fraction(17 * p.q * p.N, 2)),
        "tree": ("~(16q-3)N", lambda p: (16 * p.q - 3) * p.N),
        "overlapped": ("~(18q-3)[" + _PO + "]", lambda p: (18 * p.q - 3) * p.Po),
        "line": ("~(19q-3)N/2 (derived)", lambda p: Fraction((19 * p.q - 3) * p.N, 2)),
    },
    "total_reg": {
        "d1": ("~3qN", lambda p: 3 * p.q * p.N),
        "d2": ("~(2M+1)q[" + _P2 + "]", lambda p: (2 * p.M + 1) * p.q * p.P2),
        "d3": ("~3qN/2", lambda p: Fraction(3 * p.q * p.N, 2)),
        "d4": ("~9qN/2", lambda p: Fraction(9 * p.q * p.N, 2)),
        "tree": ("~(q+1)N", lambda p: (p.q + 1) * p.N),
        "overlapped": ("~(M+1)q[" + _PO + "]", lambda p: (p.M + 1) * p.q * p.Po),
        "line": ("~(2q+1)N/2 (derived)", lambda p: Fraction((2 * p.q + 1) * p.N, 2)),
    },
    "latency": {
        "d1": ("N-1", lambda p: p.N - 1),
        "d2": ("N-1", lambda p: p.N - 1),
        "d3": ("N-1", lambda p: p.N - 1),
        "d4": ("N", lambda p: p.N),
        "tree": ("2(N-1)", lambda p: 2 * (p.N - 1)),
        "overlapped": ("2(N-1)", lambda p: 2 * (p.N - 1)),
        "line": ("2(N-1)", lambda p: 2 * (p.N - 1)),
    },
    "throughput": {
        "d1": ("1", lambda p: 1),
        "d2": ("M", lambda p: p.M),
        "d3": ("1", lambda p: 1),
        "d4": ("2", lambda p: 2),
        "tree": ("1", lambda p: 1),
        "overlapped": ("M", lambda p: p.M),
        "line": ("1", lambda p: 1),
    },
}
ROWS = tuple(TABLE)


@dataclass(frozen=True)
class GateCount:
    """Itemized cost of one design (IGC excluded from ``xor_equiv``).

    ``registers`` is ``PEs * REG per PE + other REGs`` in the table's units
    (bits for the "other" rows); ``xor_equiv_with_igc`` adds the IGC XORs
    and MUXs.
    """

    xor_equiv: object
    registers: object
    mux_1bit: object
    ram_bits: object
    merged_pe_count: object
    igc_count: object
    xor_equiv_with_igc: object


@dataclass(frozen=True)
class Estimate:
    design: str
    N: int
    q: int
    M: int
    cells: dict  # row -> value or None
    gate_count: GateCount

    @property
    def approx_xor(self):
        return self.cells["total_xor"]

    @property
    def approx_reg(self):
        return self.cells["total_reg"]


def _check(design: str, N: int, q: int, M: int) -> _Params:
    if design not in DESIGNS:
        raise ConfigError(f"unknown design {design!r}; choose from {DESIGNS}")
    if N < 4 or N & (N - 1):
        raise ConfigError(f"N must be a power of two >= 4, got {N}")
    if q < 4:
        raise ConfigError(f"q must be >= 4, got {q}")
    if design in ("d2", "overlapped") and not 1 <= M <= N - 1:
        raise ConfigError(f"M must be in [1, {N - 1}]")
    return _Params(N, q, M)


def estimate(design: str, N: int, q: int, M: int = 1) -> Estimate:
    p = _check(design, N, q, M)
    cells = {}
    for row, col in TABLE.items():
        cell = col[design]
        cells[row] = None if cell is None else _num(cell[1](p))
    pes = cells["merged_pes"]
    pe_cost = cells["pe_xor"] + cells["pe_mux"]
    xor = _num(pes * pe_cost + cells["other_muxs"])
    regs = _num(pes * cells["pe_reg"] + cells["other_regs"])
    mux = _num(pes * cells["pe_mux"] + cells["other_muxs"])
    igcs = cells["igcs"] or 0
    ram = igcs * (cells["igc_ram"] or 0)
    with_igc = _num(xor + igcs * ((cells["igc_xor"] or 0) + (cells["igc_mux"] or 0)))
    gc = GateCount(xor, regs, mux, ram, pes, igcs, with_igc)
    return Estimate(design, N, q, M, cells, gc)


def table_v_csv(N: int, q: int, M: int = 1) -> str:
    """Long-format CSV: ``row,design,formula,computed`` for every cell."""
    buf = io.StringIO()
    buf.write(f"# N={N} q={q} M={M}\n")
    buf.write("row,design,formula,computed\n")
    ests = {d: estimate(d, N, q, M) for d in DESIGNS}
    for row, col in TABLE.items():
        for d in DESIGNS:
            cell = col[d]
            if cell is None:
                buf.write(f"{row},{d},-,-\n")
                continue
            v = ests[d].cells[row]
            buf.write(f"{row},{d},\"{cell[0]}\",{_fmt(v)}\n")
    for d in DESIGNS:
        buf.write(f"itemized_xor,{d},PEs*(XOR+MUX)+other MUXs,{_fmt(ests[d].gate_count.xor_equiv)}\n")
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{float(v):.4f}"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


# --- ratio claims ------------------------------------------------------------------------

CLAIMS = (
    # (label, design, counterpart, claimed ratio)
    ("1st vs tree: 6.25% more", "d1", "tree", Fraction(10625, 10000)),
    ("2nd vs overlapped: 14.27% more", "d2", "overlapped", Fraction(11427, 10000)),
    ("3rd vs line: 89.47%", "d3", "line", Fraction(8947, 10000)),
    ("4th vs line: 89.47%", "d4", "line", Fraction(8947, 10000)),
)
TOLERANCE_PP = 0.5


def ratio(design: str, N: int, q: int, M: int = 1, view: str = "approx") -> float:
    """Total-XOR ratio of ``design`` to its counterpart."""
    a, b = estimate(design, N, q, M), estimate(COUNTERPART[design], N, q, M)
    if view == "approx":
        return float(a.approx_xor) / float(b.approx_xor)
    if view == "itemized":
        return float(a.gate_count.xor_equiv) / float(b.gate_count.xor_equiv)
    raise ConfigError(f"view must be 'approx' or 'itemized', got {view!r}")


@dataclass(frozen=True)
class ClaimResult:
    label: str
    claimed: float
    view: str
    best_ratio: float
    best_params: tuple[int, int, int]  # N, q, M
    matched: bool
    lo: float
    hi: float


def search_claims(qs=range(4, 9), Ns=tuple(1 << k for k in range(8, 13)), M_values=None) -> list[ClaimResult]:
    """Closest computed ratio to each claim over the grid, for both total views.

    ``M_values`` defaults to every admissible ``M`` (1 .. N-1) for the
    concurrent comparison and ``M = 1`` elsewhere.
    """
    out = []
    for label, d, _, claimed in CLAIMS:
        target = float(claimed)
        for view in ("approx", "itemized"):
            best = None
            lo, hi = math.inf, -math.inf
            for N in Ns:
                Ms = (M_values or range(1, N)) if d == "d2" else (1,)
                for q in qs:
                    for M in Ms:
                        r = ratio(d, N, q, M, view)
                        lo, hi = min(lo, r), max(hi, r)
                        if best is None or abs(r - target) < abs(best[0] - target):
                            best = (r, (N, q, M))
            matched = abs(best[0] - target) * 100 <= TOLERANCE_PP
            out.append(ClaimResult(label, target, view, best[0], best[1], matched, lo, hi))
    return out


def ratio_report(N: int, q: int, M: int = 1, search: bool = True) -> str:
    """Text report of the computed ratios at ``(N, q, M)`` and the claim search."""
    lines = [f"# hardware ratios at N={N} q={q} M={M} (IGC excluded)"]
    for label, d, c, claimed in CLAIMS:
        ra = ratio(d, N, q, M, "approx")
        ri = ratio(d, N, q, M, "itemized")
        lines.append(
            f"{d}/{c}: approx={ra:.4f} itemized={ri:.4f} claimed={float(claimed):.4f} ({label})"
        )
    ta = throughput_area_ratio(N, q, "approx")
    ti = throughput_area_ratio(N, q, "itemized")
    lines.append(f"d4/d3 throughput-to-area: approx={ta:.4f} itemized={ti:.4f} reference 2(N-1)/N={2 * (N - 1) / N:.4f}")
    if search:
        lines.append("# claim search: q in [4..8], N in {2^8..2^12}, all M for d2; tolerance +-0.5 pp")
        for r in search_claims():
            verdict = "MATCH" if r.matched else "NO MATCH"
            N_, q_, M_ = r.best_params
            lines.append(
                f"{r.label} [{r.view}]: closest={r.best_ratio:.4f} at N={N_} q={q_} M={M_}; "
                f"range=[{r.lo:.4f}, {r.hi:.4f}] -> {verdict}"
            )
        lines.append("# leading-order limits without the -3 terms: 17/16=1.0625, 17/19=0.8947")
    return "\n".join(lines) + "\n"


def throughput_area_ratio(N: int, q: int, view: str = "approx") -> float:
    """(frames per cycle / area) of d4 over that of d3."""
    e3, e4 = estimate("d3", N, q), estimate("d4", N, q)
    a3 = e3.approx_xor if view == "approx" else e3.gate_count.xor_equiv
    a4 = e4.approx_xor if view == "approx" else e4.gate_count.xor_equiv
    return float(Fraction(2, N) / Fraction(a4) / (Fraction(1, N - 1) / Fraction(a3)))


# --- structural audit ----------------------------------------------------------------------

@dataclass(frozen=True)
class AuditItem:
    element: str
    published: object
    measured: object
    status: str  # "match", "mismatch" or "flagged"
    note: str = ""


def structural_audit(cfg: ArchitectureConfig) -> list[AuditItem]:
    """Pair instantiated element counts with the published counts.

    Mismatches are reported as ``mismatch``; known inconsistencies between
    two published counts are reported as ``flagged``.
    """
    inv = inventory(cfg)
    N, n, q = cfg.N, cfg.n, cfg.q
    items: list[AuditItem] = []

    def add(name, published, measured, note=""):
        items.append(AuditItem(name, published, measured, "match" if published == measured else "mismatch", note))

    def flag(name, published, measured, note):
        items.append(AuditItem(name, published, measured, "flagged", note))

    igc = IgcPipeline(n) if n >= 2 else None
    if cfg.kind == "d1":
        add("merged PEs", N - 1, inv["merged_pes"])
        add("2-to-1 word multiplexers", 2 * N - 3, inv["mux_words"])
        add("delay elements (words)", 3 * (N - 1), inv["registers_words"])
        add("XOR-pass elements", N // 2 - 1, inv["igc_xor_pass"])
        add("1-to-2 demultiplexers", N // 2 - 2, inv["igc_demux"])
        add("RAM bits", N // 2 - 2, inv["igc_storage_bits"])
        add("IGC instances", N - 1, inv["igc_instances"], "published count is N-1; one shared pipeline is instantiated")
        add("other REGs (bits)", q * (3 * N - 4), q * inv["registers_words"])
        add("other MUXs (bits)", q * (2 * N - 3), q * inv["mux_words"])
    elif cfg.kind == "d2":
        add("merged PEs", scheduler.required_pe_count(N, cfg.M), inv["merged_pes"])
        add("IGC instances", cfg.M, inv["igc_instances"])
    elif cfg.kind == "d3":
        add("merged PEs", N // 2, inv["merged_pes"])
        add("IGC instances", 1, inv["igc_instances"])
        add("other REGs (bits)", q * (3 * N // 2 + 2), q * inv["registers_words"])
        add("other MUXs (bits)", q * (N - 1), q * inv["mux_words"])
        sw = scheduler.folding_switches(n) if n >= 2 else 0
        if N == 8:
            add("folding switches (N=8 figure)", 9, sw, "measured = bank input ports with more than one source")
        add("folding switches (N/3+2)", round(N / 3 + 2, 3), sw, "general rule is not an integer for N=2^n")
    elif cfg.kind == "d4":
        add("merged PEs", N // 2, inv["merged_pes"])
        add("IGC instances", 2, inv["igc_instances"])
        add("other REGs (bits)", q * (9 * N // 2 + 4), q * inv["registers_words"])
        add("other MUXs (bits)", q * (N + 2), q * inv["mux_words"])
    elif cfg.kind == "tree":
        add("PEs", N - 1, inv["tree_pes"])
        add("other REGs (bits)", q * (N - 1), q * inv["registers_words"])
    if igc is not None and cfg.kind != "tree":
        flag(
            "demultiplexers: same-as-XOR-pass rule vs itemized list",
            (N // 2 - 1, N // 2 - 2),
            igc.demux_count,
            "XOR-pass count N/2-1 and demux count N/2-2 are both published; measured demux matches N/2-2",
        )
        flag(
            "IGC XOR per instance vs simplified-graph XOR operations",
            N // 2 - 1,
            (igc.xor_pass_count, (N * (n - 2)) // 2 + 1),
            "N/2-1 counts XOR-pass elements; the unrolled graph needs N(n-2)/2+1 XOR operations",
        )
    return items


def audit_text(items: list[AuditItem]) -> str:
    buf = io.StringIO()
    buf.write("element,published,measured,status,note\n")
    for it in items:
        buf.write(f"\"{it.element}\",\"{it.published}\",\"{it.measured}\",{it.status},\"{it.note}\"\n")
    return buf.getvalue()


def pe_xor(kind: str, q: int) -> int:
    """Per-PE XOR cost from the gate models (merged) or the separate pair (tree)."""
    if kind == "merged":
        return gate_pe.xor_cost("merged", q)
    return gate_pe.xor_cost("type1", q) + gate_pe.xor_cost("type2", q)
