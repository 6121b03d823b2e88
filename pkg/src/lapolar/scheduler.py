"""Decoding time charts and multi-codeword schedules.

A time chart lists, cycle by cycle, which decoder stage works on which tree
node.  Stage ``s`` (1-based, stage 1 next to the channel) processes nodes at
tree depth ``s - 1``; each activation of stage ``s`` occupies ``N / 2^s``
processing elements.

Charts
------
``conventional_chart``
    one f or one g update per cycle, ``2(N - 1)`` cycles.
``lookahead_chart``
    one merged activation per cycle (f plus both g candidates), ``N - 1``
    cycles.  It is the preorder walk of the internal tree nodes.

Schedules
---------
A :class:`Schedule` places the chart of one or more codewords onto physical
units.  ``concurrent_schedule`` duplicates high-index stages so that up to
``M`` codewords are in flight; ``folded_schedule`` and
``parallel_schedule`` time-share one bank of ``N / 2`` merged PEs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .errors import ContractError, RangeError

TYPE_I = "I"
TYPE_II = "II"
TYPE_I_AND_II = "I&II"

MAX_CHART_N = 20


def _check_n(n: int, lo: int = 1, hi: int = MAX_CHART_N) -> None:
    if not isinstance(n, int) or not lo <= n <= hi:
        raise RangeError(f"n must be in [{lo}, {hi}], got {n!r}")


@dataclass(frozen=True)
class StageActivation:
    stage: int
    pe_kind: str
    node: int  # index of the tree node within its depth, 0-based

    def pe_demand(self, n: int) -> int:
        return 1 << (n - self.stage)


@dataclass(frozen=True)
class TimeChart:
    """Per-cycle activations of a single codeword.  ``cycles[t]`` is cycle ``t + 1``."""

    n: int
    kind: str
    cycles: tuple[tuple[StageActivation, ...], ...]

    def __len__(self) -> int:
        return len(self.cycles)

    def stage_cycles(self, stage: int) -> list[int]:
        """1-based cycles in which ``stage`` is active."""
        return [t + 1 for t, acts in enumerate(self.cycles) if any(a.stage == stage for a in acts)]

    def activations(self) -> list[tuple[int, StageActivation]]:
        return [(t + 1, a) for t, acts in enumerate(self.cycles) for a in acts]


def _label_nodes(stages_kinds: list[tuple[int, str]], per_node: int) -> tuple[tuple[StageActivation, ...], ...]:
    seen: dict[int, int] = {}
    out = []
    for stage, kind in stages_kinds:
        k = seen.get(stage, 0)
        seen[stage] = k + 1
        out.append((StageActivation(stage, kind, k // per_node),))
    return tuple(out)


def conventional_chart(n: int) -> TimeChart:
    """Chart built by left insertion, duplication and a Type I to Type II flip per stage."""
    _check_n(n)
    tc: list[tuple[int, str]] = []
    for i in range(n, 0, -1):
        tc = [(i, TYPE_I)] + tc
        tc = tc + tc
        first = next(k for k, (_, kind) in enumerate(tc) if kind == TYPE_I)
        tc[first] = (tc[first][0], TYPE_II)
    return TimeChart(n, "conventional", _label_nodes(tc, per_node=2))


def lookahead_chart(n: int) -> TimeChart:
    """Chart built by left insertion of a merged activation and duplication per stage."""
    _check_n(n)
    tc: list[tuple[int, str]] = []
    for i in range(n, 0, -1):
        tc = [(i, TYPE_I_AND_II)] + tc
        if i == 1:
            break
        tc = tc + tc
    return TimeChart(n, "lookahead", _label_nodes(tc, per_node=1))


# --- schedules ----------------------------------------------------------------

@dataclass(frozen=True)
class Activation:
    cycle: int
    codeword: int  # 1-based
    stage: int
    node: int
    unit: str
    pes: tuple[int, ...]  # physical PE ids inside the unit


@dataclass(frozen=True)
class Schedule:
    """Placement of codeword activations onto physical units.

    ``units`` lists the physical rows (``"1"``, ``"3'"``, or ``"bank"``) and
    ``unit_pes`` their PE counts.  Activation cycles are 1-based.
    """

    n: int
    design: str
    units: tuple[str, ...]
    unit_pes: tuple[int, ...]
    activations: tuple[Activation, ...]
    arrivals: tuple[int, ...]  # cycle at which each codeword's LLRs are available
    M: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def codewords(self) -> int:
        return len(self.arrivals)

    @property
    def pe_count(self) -> int:
        return sum(self.unit_pes)

    @cached_property
    def horizon(self) -> int:
        return max((a.cycle for a in self.activations), default=0)

    @cached_property
    def _bounds(self) -> dict[int, tuple[int, int]]:
        out: dict[int, tuple[int, int]] = {}
        for a in self.activations:
            lo, hi = out.get(a.codeword, (a.cycle, a.cycle))
            out[a.codeword] = (min(lo, a.cycle), max(hi, a.cycle))
        return out

    def start(self, codeword: int) -> int:
        return self._bounds[codeword][0]

    def done(self, codeword: int) -> int:
        return self._bounds[codeword][1]

    def latency(self, codeword: int) -> int:
        """Cycles from the codeword's arrival to its last activation, inclusive."""
        return self.done(codeword) - self.arrivals[codeword - 1] + 1

    def grid(self, cycles: int | None = None) -> dict[tuple[str, int], int]:
        """``(unit, cycle) -> codeword``; raises if a cell is doubly occupied."""
        cells: dict[tuple[str, int], int] = {}
        for a in self.activations:
            if cycles is not None and a.cycle > cycles:
                continue
            key = (a.unit, a.cycle)
            if key in cells and cells[key] != a.codeword:
                raise ContractError(f"collision at unit {a.unit}, cycle {a.cycle}")
            cells[key] = a.codeword
        return cells

    def pe_demand(self, codeword: int | None = None) -> list[int]:
        """Active PEs per cycle (1..horizon), optionally for one codeword."""
        out = [0] * self.horizon
        for a in self.activations:
            if codeword is None or a.codeword == codeword:
                out[a.cycle - 1] += len(a.pes)
        return out

    def to_csv(self, cycles: int | None = None) -> str:
        """Rows are units, columns cycles, cells codeword ids (``-`` when idle)."""
        cycles = self.horizon if cycles is None else cycles
        cells = self.grid(cycles)
        buf = io.StringIO()
        buf.write(",".join(["stage"] + [str(c) for c in range(1, cycles + 1)]) + "\n")
        for unit in self.units:
            row = [f"C{cells[(unit, c)]}" if (unit, c) in cells else "-" for c in range(1, cycles + 1)]
            buf.write(",".join([unit] + row) + "\n")
        return buf.getvalue()

    def demand_csv(self, cycles: int | None = None) -> str:
        """Rows are codewords, cells the number of active merged PEs (``-`` when none)."""
        cycles = self.horizon if cycles is None else cycles
        buf = io.StringIO()
        buf.write(",".join(["input"] + [str(c) for c in range(1, cycles + 1)]) + "\n")
        for k in range(1, self.codewords + 1):
            d = self.pe_demand(k) + [0] * cycles
            buf.write(",".join([f"C{k}"] + [str(x) if x else "-" for x in d[:cycles]]) + "\n")
        return buf.getvalue()


def _prime(label: int, copy: int) -> str:
    return f"{label}" + "'" * copy


def concurrency_bracket(M: int) -> int:
    """Smallest ``i`` with ``M <= 2^i - 1``."""
    if M < 1:
        raise RangeError("M must be >= 1")
    i = 1
    while M > (1 << i) - 1:
        i += 1
    return i


def concurrent_units(n: int, M: int) -> list[tuple[int, int]]:
    """Physical stage rows ``(stage, copy)`` of the M-concurrent decoder.

    Starts from one row per stage and, for each bracket step, appends a
    duplicate of the ``2^(k-1) - 1`` rows with the highest stage indices,
    i.e. the last rows of the list.
    """
    rows = [(s, 0) for s in range(1, n + 1)]
    for k in range(2, concurrency_bracket(M) + 1):
        tail = rows[len(rows) - ((1 << (k - 1)) - 1):]
        copies: dict[int, int] = {}
        for s, _ in rows:
            copies[s] = copies.get(s, 0) + 1
        for s, _ in tail:
            rows.append((s, copies[s]))
            copies[s] += 1
    return rows


def required_pe_count(N: int, M: int) -> int:
    """PEs of the M-concurrent decoder: ``N + 2^(i-1) (i - 2)``."""
    if N < 2 or N & (N - 1):
        raise RangeError(f"N must be a power of two >= 2, got {N}")
    if not 1 <= M <= N - 1:
        raise RangeError(f"M must be in [1, {N - 1}], got {M}")
    i = concurrency_bracket(M)
    return N + (1 << (i - 1)) * (i - 2)


def concurrent_schedule(n: int, M: int, codewords: int | None = None, cycles: int | None = None) -> Schedule:
    """Greedy M-concurrent placement of look-ahead charts.

    Codewords are admitted in order, each at the earliest cycle after the
    previous admission at which fewer than ``M`` codewords are in flight and
    none of its activations collides.  Within a codeword the ``r``-th
    activation of a stage goes to that stage's ``r mod copies``-th row.

    ``codewords`` caps the number admitted; ``cycles`` instead admits every
    codeword that starts within that many cycles.  With neither, ``2M``
    codewords are placed, enough to cover one steady-state period.
    """
    _check_n(n, hi=16)
    N = 1 << n
    if not 1 <= M <= N - 1:
        raise RangeError(f"M must be in [1, {N - 1}], got {M}")
    if codewords is None and cycles is None:
        codewords = 2 * M
    rows = concurrent_units(n, M)
    labels = [_prime(s, c) for s, c in rows]
    by_stage: dict[int, list[str]] = {}
    for (s, _), lab in zip(rows, labels):
        by_stage.setdefault(s, []).append(lab)
    chart = lookahead_chart(n).activations()
    seen: dict[int, int] = {}
    template = []  # (offset, stage, node, unit)
    for t, act in chart:
        r = seen.get(act.stage, 0)
        seen[act.stage] = r + 1
        copies = by_stage[act.stage]
        template.append((t - 1, act.stage, act.node, copies[r % len(copies)]))

    busy: set[tuple[str, int]] = set()
    acts: list[Activation] = []
    starts: list[int] = []
    dones: list[int] = []
    k = 0
    while True:
        if codewords is not None and k >= codewords:
            break
        t = starts[-1] + 1 if starts else 1
        if k >= M:
            t = max(t, dones[k - M] + 1)
        while any((u, t + off) in busy for off, _, _, u in template):
            t += 1
        if cycles is not None and t > cycles:
            break
        k += 1
        for off, s, node, u in template:
            busy.add((u, t + off))
            acts.append(Activation(t + off, k, s, node, u, tuple(range(1 << (n - s)))))
        starts.append(t)
        dones.append(t + len(template) - 1)
    return Schedule(
        n, "d2", tuple(labels), tuple(1 << (n - s) for s, _ in rows), tuple(acts), tuple(starts), M,
    )


def lookahead_schedule(n: int, codewords: int = 1, cycles: int | None = None) -> Schedule:
    """Single-codeword pipeline: one row per stage, a new codeword every ``N - 1`` cycles."""
    s = concurrent_schedule(n, 1, codewords=None if cycles else codewords, cycles=cycles)
    return Schedule(s.n, "d1", s.units, s.unit_pes, s.activations, s.arrivals, 1)


def tree_schedule(n: int, codewords: int = 1) -> Schedule:
    """Conventional chart on one row per stage, codewords back to back."""
    _check_n(n, hi=16)
    chart = conventional_chart(n).activations()
    L = len(chart)
    acts = []
    for k in range(codewords):
        for t, a in chart:
            acts.append(Activation(k * L + t, k + 1, a.stage, a.node, str(a.stage), tuple(range(1 << (n - a.stage)))))
    units = tuple(str(s) for s in range(1, n + 1))
    return Schedule(n, "tree", units, tuple(1 << (n - s) for s in range(1, n + 1)), tuple(acts),
                    tuple(k * L + 1 for k in range(codewords)))


def folded_schedule(n: int) -> Schedule:
    """Look-ahead chart on one bank of ``N / 2`` merged PEs; stage ``s`` uses PEs ``0 .. N/2^s - 1``."""
    _check_n(n, hi=16)
    acts = tuple(
        Activation(t, 1, a.stage, a.node, "bank", tuple(range(1 << (n - a.stage))))
        for t, a in lookahead_chart(n).activations()
    )
    return Schedule(n, "d3", ("bank",), (1 << (n - 1),), acts, (1,))


def parallel_schedule(n: int, L: int) -> Schedule:
    """``L`` codewords interleaved on one bank of ``N / 2`` merged PEs.

    All codewords arrive at cycle 1.  Each cycle, pending activations are
    granted in priority order (stage 1 first, then lower codeword index)
    while PEs remain; an activation that does not fit stalls its codeword
    for that cycle.  Granted activations take the lowest free PE ids.
    """
    _check_n(n, hi=16)
    if L < 1:
        raise RangeError("L must be >= 1")
    bank = 1 << (n - 1)
    chart = [a for _, a in lookahead_chart(n).activations()]
    ptr = [0] * L
    acts = []
    t = 0
    while any(p < len(chart) for p in ptr):
        t += 1
        if t > 4 * L * (1 << n):
            raise ContractError("parallel schedule failed to make progress")
        pending = [k for k in range(L) if ptr[k] < len(chart)]
        pending.sort(key=lambda k: (chart[ptr[k]].stage != 1, k))
        free = 0
        for k in pending:
            a = chart[ptr[k]]
            need = a.pe_demand(n)
            if free + need > bank:
                continue
            acts.append(Activation(t, k + 1, a.stage, a.node, "bank", tuple(range(free, free + need))))
            free += need
            ptr[k] += 1
    return Schedule(n, f"parallel{L}", ("bank",), (bank,), tuple(acts), tuple([1] * L), L)


def two_parallel_schedule(n: int) -> Schedule:
    """Two codewords on ``N / 2`` merged PEs; total latency ``N``."""
    s = parallel_schedule(n, 2)
    return Schedule(s.n, "d4", s.units, s.unit_pes, s.activations, s.arrivals, 2)


def parallel_overhead(L: int, N: int | None = None) -> int:
    """Extra cycles of L-parallel interleaving, ``L(L-1)/2``."""
    if L < 2:
        raise RangeError(f"L must be >= 2, got {L}")
    # L = 2 is also admitted at N = 4, where the two-frame design still runs
    if N is not None and not (L < N // 2 or (L == 2 and N >= 4)):
        raise RangeError(f"L must be below N/2={N // 2}")
    return L * (L - 1) // 2


def steady_state_window(schedule: Schedule) -> tuple[int, int]:
    """First and last cycle of the first period in which ``M`` codewords are in flight."""
    M = schedule.M
    if schedule.codewords < M:
        raise ContractError("schedule holds fewer than M codewords")
    first = schedule.arrivals[M - 1]
    return first, first + schedule.N - 2


def stage_utilization(schedule: Schedule, window: tuple[int, int] | None = None) -> dict[str, Fraction]:
    """Fraction of cycles each physical row is occupied over ``window``.

    The default window is :func:`steady_state_window`; the schedule must
    contain every codeword that can start inside it.
    """
    lo, hi = window or steady_state_window(schedule)
    if window is None and schedule.codewords < 2 * schedule.M and schedule.M > 1:
        raise ContractError("steady-state utilization needs at least 2M codewords in the schedule")
    span = hi - lo + 1
    occupied = {(a.unit, a.cycle) for a in schedule.activations if lo <= a.cycle <= hi}
    return {u: Fraction(sum(1 for c in range(lo, hi + 1) if (u, c) in occupied), span) for u in schedule.units}


def folding_switches(n: int) -> int:
    """PE input ports of the folded bank that are fed by more than one source.

    Stage ``s`` on PE ``j`` reads positions ``j`` and ``j + N/2^s`` of its
    parent node: the channel for stage 1, otherwise the outputs of PEs
    ``j`` and ``j + N/2^s`` from stage ``s - 1``.
    """
    _check_n(n, hi=16)
    N = 1 << n
    sources: dict[tuple[int, str], set] = {}
    for s in range(1, n + 1):
        h = N >> s
        for j in range(h):
            for port, pos in (("a", j), ("b", j + h)):
                src = ("ch", pos) if s == 1 else ("pe", pos)
                sources.setdefault((j, port), set()).add(src)
    return sum(1 for v in sources.values() if len(v) > 1)
