"""Cycle-accurate behavioural simulation of the decoder architectures.

Supported kinds (aliases in parentheses):

``tree`` (``tree_baseline``)
    pipelined tree, one f or g update per cycle, ``2(N - 1)`` cycles.
``d1`` (``lookahead_pipelined``)
    one row of merged PEs per stage, ``N - 1`` cycles per codeword.
``d2`` (``refined_concurrent``)
    ``M`` codewords in flight on duplicated high-index stages.
``d3`` (``folded``)
    one bank of ``N / 2`` merged PEs reused by every stage.
``d4`` (``two_parallel``)
    two codewords interleaved on the folded bank, ``N`` cycles.

The schedule of every design is independent of the data, so a run carries
a leading batch axis: ``B`` lanes execute the same schedule on different
frames in lock step.  Each in-flight codeword owns a private register file
and IGC instance.

Look-ahead datapath, per activation of stage ``s`` on node ``j``:

* the merged PEs compute ``f`` and both ``g`` candidates of node ``j``;
* the ``f`` word (left child) is usable from the next cycle;
* the candidates wait in the stage's registers until the IGC releases the
  re-encoded left subtree, which drives the candidate-select multiplexers;
* at stage ``n`` the two decisions of the node are taken in the same cycle
  and fed to the IGC as one bit pair.

Reading a register whose contents belong to another node, or a candidate
pair before its selector is known, raises :class:`~lapolar.errors.StateError`.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import gate_pe, scheduler
from .codec import PolarCode, bit_reversal_permutation, polar_transform
from .errors import ConfigError, SizeError, StateError
from .igc import IgcPipeline

KIND_ALIASES = {
    "tree": "tree",
    "tree_baseline": "tree",
    "d1": "d1",
    "lookahead_pipelined": "d1",
    "d2": "d2",
    "refined_concurrent": "d2",
    "d3": "d3",
    "folded": "d3",
    "d4": "d4",
    "two_parallel": "d4",
}
DESIGNS = ("tree", "d1", "d2", "d3", "d4")


@dataclass(frozen=True)
class ArchitectureConfig:
    kind: str
    n: int
    q: int = 6
    f: int = 2
    M: int = 1
    igc_storage: str = "registers"

    def __post_init__(self) -> None:
        if self.kind not in KIND_ALIASES:
            raise ConfigError(f"unknown architecture {self.kind!r}")
        object.__setattr__(self, "kind", KIND_ALIASES[self.kind])
        if not 1 <= self.n <= 16:
            raise ConfigError(f"n must be in [1, 16], got {self.n}")
        N = 1 << self.n
        if self.kind == "d2" and not 1 <= self.M <= N - 1:
            raise ConfigError(f"M must be in [1, {N - 1}] for N={N}")
        if self.kind != "d2" and self.M != 1:
            raise ConfigError("M applies to d2 only")
        if not 0 <= self.f < self.q:
            raise ConfigError("need 0 <= f < q")
        if self.igc_storage not in ("registers", "ram"):
            raise ConfigError("igc_storage must be 'registers' or 'ram'")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def latency_formula(self) -> int:
        N = self.N
        return {"tree": 2 * (N - 1), "d4": N}.get(self.kind, N - 1)

    @property
    def pe_bank_size(self) -> int:
        N = self.N
        if self.kind in ("tree", "d1"):
            return N - 1
        if self.kind == "d2":
            return scheduler.required_pe_count(N, self.M)
        return N // 2

    def check_frame_count(self, F: int) -> None:
        if F < 1:
            raise ConfigError("at least one frame per run")
        if self.kind == "d3" and F != 1:
            raise ConfigError("the folded design decodes exactly one frame per run")
        if self.kind == "d4" and F != 2:
            raise ConfigError("the two-parallel design decodes exactly two frames per run")

    def frames_per_run(self) -> int:
        return {"d4": 2, "d2": self.M}.get(self.kind, 1)

    def schedule(self, frames: int = 1) -> scheduler.Schedule:
        self.check_frame_count(frames)
        if self.kind == "tree":
            return scheduler.tree_schedule(self.n, frames)
        if self.kind == "d1":
            return scheduler.lookahead_schedule(self.n, frames)
        if self.kind == "d2":
            return scheduler.concurrent_schedule(self.n, self.M, codewords=frames)
        if self.kind == "d3":
            return scheduler.folded_schedule(self.n)
        return scheduler.two_parallel_schedule(self.n)


# --- trace ------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceRecord:
    cycle: int
    unit: str
    stage: int
    node: int
    codeword: int
    op_kind: str
    pe_ids: tuple[int, ...]


@dataclass(frozen=True)
class SelectEvent:
    """Life of one look-ahead candidate pair (cycles are 1-based)."""

    codeword: int
    stage: int  # stage whose PEs computed the candidates
    node: int  # node (depth stage-1) whose right child they belong to
    computed: int
    resolved: int
    consumed: int | None


@dataclass
class ActivityTrace:
    records: list[TraceRecord] = field(default_factory=list)
    igc_emissions: list[tuple[int, int, int, int, int]] = field(default_factory=list)  # cycle, codeword, stage, node, bits
    selects: list[SelectEvent] = field(default_factory=list)
    # (cycle, codeword, stage, node, bits) of every selector word read by the datapath; off unless requested
    consumed_selectors: list | None = None

    @property
    def length(self) -> int:
        return max((r.cycle for r in self.records), default=0)

    def active_pes(self) -> list[int]:
        out = [0] * self.length
        for r in self.records:
            out[r.cycle - 1] += len(r.pe_ids)
        return out

    def active_pes_by_codeword(self, codeword: int) -> list[int]:
        out = [0] * self.length
        for r in self.records:
            if r.codeword == codeword:
                out[r.cycle - 1] += len(r.pe_ids)
        return out

    def to_csv(self) -> str:
        """One row per active PE: ``cycle,stage,pe_id,codeword,op_kind`` (plus unit)."""
        buf = io.StringIO()
        buf.write("cycle,stage,unit,pe_id,codeword,op_kind\n")
        for r in sorted(self.records, key=lambda r: (r.cycle, r.codeword, r.stage)):
            for p in r.pe_ids:
                buf.write(f"{r.cycle},{r.stage},{r.unit},{p},C{r.codeword},{r.op_kind}\n")
        return buf.getvalue()


@dataclass
class SimResult:
    """Outcome of one batched run.

    ``u_hat`` has shape ``(B, F, N)``; ``latency_cycles[k]`` is the latency of
    codeword ``k + 1`` (identical across lanes).
    """

    config: ArchitectureConfig
    u_hat: np.ndarray
    decision_llrs: np.ndarray
    latency_cycles: tuple[int, ...]
    trace: ActivityTrace
    pe_bank_size: int
    schedule: scheduler.Schedule
    inventory: dict

    @property
    def total_cycles(self) -> int:
        return self.trace.length

    def summary(self) -> str:
        lines = [
            f"design={self.config.kind}",
            f"n={self.config.n}",
            f"frames={self.u_hat.shape[1]}",
            f"lanes={self.u_hat.shape[0]}",
            f"latency={','.join(map(str, self.latency_cycles))}",
            f"total_cycles={self.total_cycles}",
            f"pe_bank={self.pe_bank_size}",
            f"peak_active_pes={max(self.trace.active_pes(), default=0)}",
            f"candidate_selects={len(self.trace.selects)}",
        ]
        return "\n".join(lines) + "\n"


# --- per-codeword register file -------------------------------------------------------

class _Word:
    """A tagged register bank: contents, owning node and the cycle they became valid."""

    __slots__ = ("data", "node", "cycle")

    def __init__(self):
        self.data = None
        self.node = -1
        self.cycle = 0


class _CodewordState:
    """Registers, decisions and IGC of one in-flight codeword (all lanes)."""

    def __init__(self, n: int, B: int, storage: str):
        self.n = n
        self.out1 = [_Word() for _ in range(n + 1)]
        self.cand = [_Word() for _ in range(n + 1)]
        self.sel = [_Word() for _ in range(n + 1)]
        self.pending: dict[int, list] = {}
        self.igc = IgcPipeline(n, storage, B) if n >= 2 else None
        self.codeword = 0
        self.finished = False
        self.channel = None
        self.u = None
        self.llr = None

    def load(self, codeword: int, channel: np.ndarray, N: int) -> None:
        self.codeword = codeword
        self.finished = False
        self.channel = channel
        B = channel.shape[0]
        self.u = np.zeros((B, N), dtype=np.uint8)
        self.llr = np.zeros((B, N), dtype=np.int64)
        for w in self.out1 + self.cand + self.sel:
            w.node = -1
        self.pending = {}
        if self.igc is not None:
            self.igc.reset()


def _decide(values: np.ndarray, index: int, code: PolarCode) -> np.ndarray:
    if code.frozen_mask[index]:
        return np.full(values.shape, code.frozen_word[index], dtype=np.uint8)
    return (values < 0).astype(np.uint8)


class _LookaheadEngine:
    def __init__(self, cfg: ArchitectureConfig, code: PolarCode, trace: ActivityTrace):
        self.cfg = cfg
        self.code = code
        self.trace = trace
        self.n = cfg.n
        self.q = cfg.q

    def _input(self, st: _CodewordState, s: int, j: int, t: int) -> np.ndarray:
        if s == 1:
            return st.channel
        d = s - 1  # stage s - 1 wrote the children of node j // 2
        parent = j // 2
        if j % 2 == 0:
            w = st.out1[d]
            if w.node != parent or w.cycle >= t:
                raise StateError(f"stage {s} node {j}: f register of stage {d} not valid at cycle {t}")
            return w.data
        c, sel = st.cand[d], st.sel[d]
        if c.node != parent or sel.node != parent or sel.cycle >= t:
            raise StateError(f"stage {s} node {j}: unresolved candidates from stage {d} at cycle {t}")
        for ev in st.pending.pop(d, []):
            self.trace.selects.append(SelectEvent(*ev, consumed=t))
        if self.trace.consumed_selectors is not None:
            self.trace.consumed_selectors.append((t, st.codeword, d, parent, sel.data.copy()))
        return np.where(sel.data.astype(bool), c.data[1], c.data[0])

    def activate(self, st: _CodewordState, act: scheduler.Activation) -> None:
        s, j, t = act.stage, act.node, act.cycle
        alpha = self._input(st, s, j, t)
        h = alpha.shape[1] // 2
        out1, out2, out3 = gate_pe.merged_pe_array(alpha[:, :h], alpha[:, h:], self.q)
        self.trace.records.append(TraceRecord(t, act.unit, s, j, st.codeword, scheduler.TYPE_I_AND_II, act.pes))
        if s < self.n:
            st.out1[s].data, st.out1[s].node, st.out1[s].cycle = out1, j, t
            st.cand[s].data, st.cand[s].node, st.cand[s].cycle = (out2, out3), j, t
            return
        # output stage: decide both bits of the pair in this cycle
        i0 = 2 * j
        v0 = out1[:, 0]
        u0 = _decide(v0, i0, self.code)
        v1 = np.where(u0.astype(bool), out3[:, 0], out2[:, 0])
        u1 = _decide(v1, i0 + 1, self.code)
        st.u[:, i0], st.u[:, i0 + 1] = u0, u1
        st.llr[:, i0], st.llr[:, i0 + 1] = v0, v1
        self.trace.selects.append(SelectEvent(st.codeword, s, j, t, t, t))
        if st.igc is None:
            return
        for em in st.igc.step((u0, u1)):
            d = em.stage
            c = st.cand[d]
            if c.node != em.node:
                raise StateError(f"IGC released stage {d} node {em.node} but registers hold node {c.node}")
            st.sel[d].data, st.sel[d].node, st.sel[d].cycle = em.bits, em.node, t
            st.pending.setdefault(d, []).append((st.codeword, d, em.node, c.cycle, t))
            self.trace.igc_emissions.append((t, st.codeword, d, em.node, em.bits.shape[1]))


class _TreeEngine:
    """Conventional SC order: separate f (Type II) and g (Type I) cycles."""

    def __init__(self, cfg: ArchitectureConfig, code: PolarCode, trace: ActivityTrace):
        self.cfg = cfg
        self.code = code
        self.trace = trace
        self.n = cfg.n
        self.q = cfg.q

    def _node_input(self, st: _CodewordState, s: int, j: int, t: int) -> np.ndarray:
        if s == 1:
            return st.channel
        w = st.out1[s - 1] if j % 2 == 0 else st.cand[s - 1]
        if w.node != j or w.cycle >= t:
            raise StateError(f"tree stage {s} node {j}: input not ready at cycle {t}")
        return w.data

    def activate(self, st: _CodewordState, act: scheduler.Activation, kind: str) -> None:
        s, j, t = act.stage, act.node, act.cycle
        alpha = self._node_input(st, s, j, t)
        h = alpha.shape[1] // 2
        a, b = alpha[:, :h], alpha[:, h:]
        span = alpha.shape[1]
        self.trace.records.append(TraceRecord(t, act.unit, s, j, st.codeword, kind, act.pes))
        if kind == scheduler.TYPE_II:
            val = gate_pe.f_minsum_array(a, b, self.q)
            child = 2 * j
        else:
            start = j * span
            beta = polar_transform(st.u[:, start : start + h])
            c0, c1 = gate_pe.g_candidates_array(a, b, self.q)
            val = np.where(beta.astype(bool), c1, c0)
            child = 2 * j + 1
        if s < self.n:
            w = st.out1[s] if kind == scheduler.TYPE_II else st.cand[s]
            w.data, w.node, w.cycle = val, child, t
            return
        idx = child
        st.u[:, idx] = _decide(val[:, 0], idx, self.code)
        st.llr[:, idx] = val[:, 0]


def _quantize_frames(frames: np.ndarray, cfg: ArchitectureConfig) -> np.ndarray:
    return gate_pe.quantize(frames, cfg.q, cfg.f)


def inventory(cfg: ArchitectureConfig, schedule: scheduler.Schedule | None = None) -> dict:
    """Instantiated element counts of a design (words are q bits wide).

    Counts come from the schedule's physical units and the storage the engine
    allocates: every merged PE registers its three outputs, candidate
    selection uses one word multiplexer per merged PE, and PEs beyond stage 1
    carry one input-select multiplexer per operand.
    """
    schedule = schedule or cfg.schedule(cfg.frames_per_run())
    n, N = cfg.n, cfg.N
    pes = schedule.pe_count
    inv = {"merged_pes": 0, "tree_pes": 0}
    if cfg.kind == "tree":
        inv["tree_pes"] = pes
        inv["registers_words"] = pes  # one output register per PE
        inv["cand_select_mux_words"] = 0
        inv["input_select_mux_words"] = 0
        inv["igc_instances"] = 0
    else:
        inv["merged_pes"] = pes
        stage_pes = {}
        for unit, k in zip(schedule.units, schedule.unit_pes):
            stage = int(unit.rstrip("'")) if unit != "bank" else 1
            stage_pes[stage] = stage_pes.get(stage, 0) + k
        in_flight = {"d1": 1, "d2": cfg.M, "d3": 1, "d4": 2}[cfg.kind]
        # out1/out2/out3 registers per stage PE row, for every codeword held in flight
        inv["registers_words"] = 3 * (N - 1) * in_flight
        inv["cand_select_mux_words"] = pes
        if cfg.kind in ("d3", "d4"):
            inv["input_select_mux_words"] = scheduler.folding_switches(n) if n > 1 else 0
        else:
            inv["input_select_mux_words"] = 2 * sum(k for s, k in stage_pes.items() if s >= 2)
        inv["igc_instances"] = in_flight if n >= 2 else 0
    if n >= 2 and inv["igc_instances"]:
        p = IgcPipeline(n)
        inv["igc_xor_pass"] = p.xor_pass_count
        inv["igc_demux"] = p.demux_count
        inv["igc_storage_bits"] = p.total_storage_bits
    else:
        inv["igc_xor_pass"] = inv["igc_demux"] = inv["igc_storage_bits"] = 0
    inv["mux_words"] = inv["cand_select_mux_words"] + inv["input_select_mux_words"]
    return inv


def simulate_batch(cfg: ArchitectureConfig, code: PolarCode, frames, record_selects: bool = False) -> SimResult:
    """Run ``B`` lanes of the design; ``frames`` has shape ``(B, F, N)`` of real LLRs.

    ``record_selects`` keeps a copy of every selector word at the cycle the
    candidate multiplexers read it (``trace.consumed_selectors``).
    """
    frames = np.asarray(frames, dtype=float)
    if frames.ndim != 3 or frames.shape[2] != cfg.N:
        raise SizeError(f"frames must have shape (B, F, {cfg.N}), got {frames.shape}")
    if code.n != cfg.n:
        raise ConfigError("code length does not match the architecture")
    B, F, N = frames.shape
    cfg.check_frame_count(F)
    sched = cfg.schedule(F)
    raw = _quantize_frames(frames, cfg)[:, :, bit_reversal_permutation(cfg.n)]
    trace = ActivityTrace(consumed_selectors=[] if record_selects else None)
    engine = _TreeEngine(cfg, code, trace) if cfg.kind == "tree" else _LookaheadEngine(cfg, code, trace)
    slots_n = {"d2": cfg.M, "d4": 2}.get(cfg.kind, 1)
    slots = [_CodewordState(cfg.n, B, cfg.igc_storage) for _ in range(slots_n)]
    u_hat = np.zeros((B, F, N), dtype=np.uint8)
    llrs = np.zeros((B, F, N), dtype=np.int64)
    kinds = {}
    if cfg.kind == "tree":
        chart = scheduler.conventional_chart(cfg.n).activations()
        kinds = {i: a.pe_kind for i, (_, a) in enumerate(chart)}
    acts = sorted(sched.activations, key=lambda a: (a.cycle, a.codeword))
    seq = {}
    for act in acts:
        k = act.codeword
        st = slots[(k - 1) % slots_n]
        if st.codeword != k:
            if st.codeword and not st.finished:
                raise StateError(f"codeword {k} evicts unfinished codeword {st.codeword}")
            st.load(k, raw[:, k - 1], N)
        if cfg.kind == "tree":
            i = seq.get(k, 0)
            seq[k] = i + 1
            engine.activate(st, act, kinds[i])
        else:
            engine.activate(st, act)
        if act.cycle == sched.done(k):
            u_hat[:, k - 1], llrs[:, k - 1] = st.u, st.llr
            st.finished = True
    for k in range(1, F + 1):
        leftover = slots[(k - 1) % slots_n].pending if slots[(k - 1) % slots_n].codeword == k else {}
        if any(leftover.values()):
            raise StateError("candidate pairs resolved but never consumed")
    latencies = tuple(sched.latency(k) for k in range(1, F + 1))
    return SimResult(cfg, u_hat, llrs, latencies, trace, cfg.pe_bank_size, sched, inventory(cfg, sched))


def simulate(cfg: ArchitectureConfig, code: PolarCode, frames) -> SimResult:
    """Decode ``F`` frames (shape ``(F, N)``) in one run of the design."""
    frames = np.asarray(frames, dtype=float)
    if frames.ndim == 1:
        frames = frames[None, :]
    return simulate_batch(cfg, code, frames[None, :, :])


def decode_frames(cfg: ArchitectureConfig, code: PolarCode, llrs) -> np.ndarray:
    """Decode any number of frames by packing them into lanes of ``frames_per_run``.

    Returns ``u_hat`` of shape ``(T, N)``.  When the frame count is not a
    multiple of the per-run count, the last lane is padded with copies.
    """
    llrs = np.asarray(llrs, dtype=float)
    T = llrs.shape[0]
    F = cfg.frames_per_run()
    lanes = -(-T // F)
    pad = lanes * F - T
    if pad:
        llrs = np.concatenate([llrs, np.repeat(llrs[-1:], pad, axis=0)])
    res = simulate_batch(cfg, code, llrs.reshape(lanes, F, cfg.N))
    return res.u_hat.reshape(lanes * F, cfg.N)[:T]


def candidate_select_events(result: SimResult) -> list[SelectEvent]:
    """Every resolved candidate pair; checks that none was consumed before resolution."""
    for ev in result.trace.selects:
        if ev.resolved < ev.computed or (ev.consumed is not None and ev.consumed < ev.resolved):
            raise StateError(f"determinism rule violated: {ev}")
        if ev.stage < result.config.n and (ev.consumed is None or ev.consumed <= ev.resolved):
            raise StateError(f"candidate consumed in its resolution cycle: {ev}")
    return list(result.trace.selects)


@dataclass(frozen=True)
class UtilizationReport:
    """Exact utilization figures.

    ``per_cycle_bank``
        active PEs / physical PEs, per cycle.
    ``per_cycle_graph_stage``
        for the tree design, active PEs / N: the share of the ``N``
        nodes of the active stage in the full SC graph.
    ``per_unit``
        occupancy of each physical row over ``window``.
    """

    per_cycle_bank: tuple[Fraction, ...]
    per_cycle_graph_stage: tuple[Fraction, ...]
    per_unit: dict
    window: tuple[int, int]
    aggregate: Fraction
    max_active: int

    @property
    def max_bank(self) -> Fraction:
        return max(self.per_cycle_bank)

    @property
    def min_graph_stage(self) -> Fraction:
        return min(x for x in self.per_cycle_graph_stage if x > 0)

    @property
    def max_graph_stage(self) -> Fraction:
        return max(self.per_cycle_graph_stage)


def utilization_report(result: SimResult, window: tuple[int, int] | None = None) -> UtilizationReport:
    cfg = result.config
    active = result.trace.active_pes()
    bank = result.pe_bank_size
    per_bank = tuple(Fraction(a, bank) for a in active)
    per_graph = tuple(Fraction(a, cfg.N) for a in active)
    sched = result.schedule
    if window is None:
        if cfg.kind == "d2" and sched.codewords >= 2 * cfg.M:
            window = scheduler.steady_state_window(sched)
        else:
            window = (1, len(active))
    lo, hi = window
    per_unit = scheduler.stage_utilization(sched, window)
    busy = sum(active[c - 1] for c in range(lo, hi + 1))
    agg = Fraction(busy, bank * (hi - lo + 1))
    return UtilizationReport(per_bank, per_graph, per_unit, window, agg, max(active))
