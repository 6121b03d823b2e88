"""Input generating circuit: on-the-fly partial sums for the g-update selectors.

When a left subtree of size ``2^k`` finishes decoding, the candidates
pre-computed for its right sibling need the re-encoded left bits
``u_left . F^(x)k``.  This module produces them in two ways.

Flow graphs
    An in-place butterfly network over ``u_1 .. u_N`` with ``n - 1`` layers.
    Layer ``k`` turns each aligned pair of blocks of size ``2^(k-1)`` into
    the transform of the block of size ``2^k`` with XOR nodes (upper
    outputs) and pass nodes (lower outputs).  :func:`simplify_graph` drops
    nodes nobody reads and turns pass nodes into wires.

Pipeline
    :class:`IgcPipeline` is the unfolded streaming form clocked once per
    decoded bit pair.  Stage ``k`` holds ``2^(k-1)`` XOR-pass elements that
    merge a stored left block with the block just finished.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .codec import _check_n, polar_transform
from .errors import RangeError, StateError

XOR, PASS, WIRE = "xor", "pass", "wire"


# --- flow graphs --------------------------------------------------------------

@dataclass(frozen=True)
class Element:
    kind: str
    position: int
    inputs: tuple[int, ...]  # positions in the previous layer


@dataclass(frozen=True)
class IgcFlowGraph:
    """Layered butterfly graph.  ``layers[k - 1]`` holds layer ``k``'s elements.

    ``outputs`` maps decoder stage ``s`` to the ``(layer, position)`` signals it
    consumes, grouped per left block in tree order.
    """

    n: int
    layers: tuple[tuple[Element, ...], ...]
    outputs: dict = field(compare=False)
    simplified: bool = False

    @property
    def N(self) -> int:
        return 1 << self.n

    def count(self, kind: str) -> int:
        return sum(1 for layer in self.layers for e in layer if e.kind == kind)

    @property
    def xor_count(self) -> int:
        return self.count(XOR)

    @property
    def output_count(self) -> int:
        return sum(len(v) for v in self.outputs.values())

    def evaluate(self, u) -> list[np.ndarray]:
        """Signal values of every layer; layer 0 is ``u`` itself.  Missing nodes are -1."""
        u = np.asarray(u, dtype=np.int8)
        values = [u.copy()]
        for layer in self.layers:
            prev = values[-1]
            cur = np.full(self.N, -1, dtype=np.int8)
            for e in layer:
                if e.kind == XOR:
                    cur[e.position] = prev[e.inputs[0]] ^ prev[e.inputs[1]]
                else:
                    cur[e.position] = prev[e.inputs[-1]]
            values.append(cur)
        return values

    def output_values(self, u) -> dict[int, np.ndarray]:
        values = self.evaluate(u)
        return {s: np.array([values[k][p] for k, p in sig], dtype=np.uint8) for s, sig in self.outputs.items()}

    def to_adjacency(self) -> str:
        """One line per element: ``L<k>.<pos> <kind> <- L<k-1>.<in>, ...``."""
        buf = io.StringIO()
        buf.write(f"# igc n={self.n} simplified={int(self.simplified)}\n")
        for k, layer in enumerate(self.layers, start=1):
            for e in layer:
                srcs = ", ".join(f"L{k - 1}.{i}" for i in e.inputs)
                buf.write(f"L{k}.{e.position} {e.kind} <- {srcs}\n")
        for s, sig in sorted(self.outputs.items()):
            buf.write(f"out stage {s}: " + " ".join(f"L{k}.{p}" for k, p in sig) + "\n")
        return buf.getvalue()


def _needed_outputs(n: int) -> dict[int, list[tuple[int, int]]]:
    # decoder stage s reads the transform of every left block at depth s (size 2^(n-s))
    N = 1 << n
    out = {}
    for s in range(1, n):
        k = n - s
        size = 1 << k
        out[s] = [(k, p) for start in range(0, N, 2 * size) for p in range(start, start + size)]
    return out


def build_full_graph(n: int) -> IgcFlowGraph:
    """Complete butterfly network with ``n - 1`` layers of ``N/2`` XOR/pass pairs."""
    _check_n(n)
    if n < 2:
        raise RangeError("flow graph needs n >= 2")
    N = 1 << n
    layers = []
    for k in range(1, n):
        h = 1 << (k - 1)
        layer = []
        for p in range(N):
            if p & h:
                layer.append(Element(PASS, p, (p - h, p)))
            else:
                layer.append(Element(XOR, p, (p, p + h)))
        layers.append(tuple(layer))
    return IgcFlowGraph(n, tuple(layers), _needed_outputs(n))


def simplify_graph(g: IgcFlowGraph) -> IgcFlowGraph:
    """Drop nodes whose value never reaches an output; replace pass nodes by wires."""
    live: set[tuple[int, int]] = {sig for sigs in g.outputs.values() for sig in sigs}
    for k in range(len(g.layers), 0, -1):
        for e in g.layers[k - 1]:
            if (k, e.position) in live:
                srcs = e.inputs if e.kind == XOR else e.inputs[-1:]
                live.update((k - 1, i) for i in srcs)
    layers = []
    for k, layer in enumerate(g.layers, start=1):
        kept = []
        for e in layer:
            if (k, e.position) not in live:
                continue
            if e.kind == PASS:
                e = Element(WIRE, e.position, e.inputs[-1:])
            kept.append(e)
        layers.append(tuple(kept))
    return IgcFlowGraph(g.n, tuple(layers), g.outputs, simplified=True)


def xor_count_formula(n: int) -> int:
    """Closed-form XOR count of the simplified graph, ``N(n - 2)/2 + 1``."""
    return (1 << n) * (n - 2) // 2 + 1


# --- unfolded pipeline ------------------------------------------------------------

def xor_pass(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bank of XOR-pass elements: ``(L xor R, R)``."""
    return left ^ right, right


@dataclass(frozen=True)
class Emission:
    """Partial sums released by one pipeline stage.

    ``stage`` is the decoder stage whose candidates they select, ``node`` the
    tree node (depth ``stage - 1``) owning those candidates, and ``bits`` has
    shape ``(batch, N / 2^stage)``.
    """

    event: int
    stage: int
    node: int
    bits: np.ndarray


class _RegisterBank:
    """Load-enable register of ``width`` bits per lane."""

    def __init__(self, batch: int, width: int):
        self.data = np.zeros((batch, width), dtype=np.uint8)
        self.valid = False

    def write(self, event: int, bits: np.ndarray) -> None:
        self.data[:] = bits
        self.valid = True

    def read(self, event: int) -> np.ndarray:
        if not self.valid:
            raise StateError("read of an empty IGC register")
        self.valid = False
        return self.data.copy()


class _RamBank(_RegisterBank):
    """Single-word RAM whose enables are derived from the pair-clock schedule.

    Records the write and read pair clocks so the data lifetime can be audited.
    """

    def __init__(self, batch: int, width: int):
        super().__init__(batch, width)
        self.write_event = None
        self.lifetimes: list[int] = []
        self.enable_log: list[tuple[int, str]] = []

    def write(self, event: int, bits: np.ndarray) -> None:
        super().write(event, bits)
        self.write_event = event
        self.enable_log.append((event, "we"))

    def read(self, event: int) -> np.ndarray:
        out = super().read(event)
        self.lifetimes.append(event - self.write_event - 1)
        self.enable_log.append((event, "re"))
        return out


class IgcPipeline:
    """Unfolded streaming IGC for one code length, one frame at a time.

    Parameters
    ----------
    n : int
        log2 of the block length, ``n >= 2``.
    storage : {"registers", "ram"}
        How left blocks wait for their right siblings.
    batch : int
        Number of independent lanes decoded in lock step.

    Each call to :meth:`step` with a bit pair is one pair clock ``e``
    (0-based).  Control bit ``c_k`` equals bit ``k - 1`` of ``e``: when it is 0
    the block finished at stage ``k`` is a left child and is stored (and
    emitted); when it is 1 the block merges with its stored sibling in stage
    ``k + 1``.  Stage 1 needs no storage since both bits arrive together.
    """

    def __init__(self, n: int, storage: str = "registers", batch: int = 1):
        _check_n(n)
        if n < 2:
            raise RangeError("IGC pipeline needs n >= 2")
        if storage not in ("registers", "ram"):
            raise RangeError(f"storage must be 'registers' or 'ram', got {storage!r}")
        self.n = n
        self.N = 1 << n
        self.storage = storage
        self.batch = batch
        bank = _RamBank if storage == "ram" else _RegisterBank
        # stage k (2..n-1) waits on a left block of 2^(k-1) bits
        self.banks = {k: bank(batch, 1 << (k - 1)) for k in range(2, n)}
        self.event = 0
        self.cycle = 0

    # structural counts
    @property
    def stages(self) -> int:
        return self.n - 1

    @property
    def xor_pass_elements(self) -> dict[int, int]:
        return {k: 1 << (k - 1) for k in range(1, self.n)}

    @property
    def xor_pass_count(self) -> int:
        return sum(self.xor_pass_elements.values())

    @property
    def demux_count(self) -> int:
        # every output bit of stages 1..n-2 is steered to storage or to the next stage
        return sum(1 << k for k in range(1, self.n - 1))

    @property
    def storage_bits(self) -> dict[int, int]:
        return {k: b.data.shape[1] for k, b in self.banks.items()}

    @property
    def total_storage_bits(self) -> int:
        return sum(self.storage_bits.values())

    def control_bits(self, event: int | None = None) -> tuple[int, ...]:
        e = self.event if event is None else event
        return tuple((e >> (k - 1)) & 1 for k in range(1, self.n))

    def reset(self) -> None:
        for b in self.banks.values():
            b.data[:] = 0
            b.valid = False
        self.event = 0
        self.cycle = 0

    @property
    def frame_done(self) -> bool:
        return self.event >= self.N // 2

    def step(self, decoded_pair=None) -> list[Emission]:
        """Advance one clock.

        ``decoded_pair`` is ``(u_odd, u_even)`` (ints or per-lane arrays) when
        the decoder resolves a pair this clock, else ``None``.
        """
        self.cycle += 1
        if decoded_pair is None:
            return []
        if self.frame_done:
            raise StateError("IGC stepped past the end of the frame; call reset()")
        e = self.event
        a = np.broadcast_to(np.asarray(decoded_pair[0], dtype=np.uint8), (self.batch,))
        b = np.broadcast_to(np.asarray(decoded_pair[1], dtype=np.uint8), (self.batch,))
        block = np.stack(xor_pass(a, b), axis=1)  # stage 1 output, size 2
        out: list[Emission] = []
        for k in range(1, self.n):
            c = (e >> (k - 1)) & 1
            if c == 0:
                stage = self.n - k
                out.append(Emission(e, stage, e >> k, block.copy()))
                if k + 1 < self.n:
                    self.banks[k + 1].write(e, block)
                break
            if k + 1 == self.n:
                break  # right half of the whole frame: nothing downstream needs it
            left = self.banks[k + 1].read(e)
            block = np.concatenate(xor_pass(left, block), axis=1)
        self.event += 1
        return out

    def ram_lifetimes(self) -> dict[int, list[int]]:
        if self.storage != "ram":
            return {}
        return {k: list(b.lifetimes) for k, b in self.banks.items()}


def build_unfolded_pipeline(n: int, storage: str = "registers", batch: int = 1) -> IgcPipeline:
    return IgcPipeline(n, storage, batch)


def expected_emissions(u) -> list[tuple[int, int, np.ndarray]]:
    """Reference ``(stage, node, bits)`` list for a full decoded vector, in release order."""
    u = np.asarray(u, dtype=np.uint8)
    N = u.shape[-1]
    n = N.bit_length() - 1
    out = []
    for e in range(N // 2):
        for k in range(1, n):
            if (e >> (k - 1)) & 1 == 0:
                size = 1 << k
                end = 2 * (e + 1)
                out.append((n - k, e >> k, polar_transform(u[..., end - size : end])))
                break
    return out
