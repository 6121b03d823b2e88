import numpy as np
import pytest

from lapolar import igc
from lapolar.codec import PolarCode, partial_sum_oracle, polar_transform
from lapolar.errors import RangeError, StateError


def _left_blocks(u, n):
    """Oracle outputs of the flow graph: transform of every left block, per decoder stage."""
    N = 1 << n
    out = {}
    for stage in range(1, n):
        size = N >> stage
        out[stage] = np.concatenate([polar_transform(u[st:st + size]) for st in range(0, N, 2 * size)])
    return out


@pytest.mark.parametrize("n", range(2, 9))
def test_graph_outputs_match_transform_oracle(n):
    rng = np.random.default_rng(n)
    full = igc.build_full_graph(n)
    simple = igc.simplify_graph(full)
    for _ in range(20):
        u = rng.integers(0, 2, 1 << n, dtype=np.uint8)
        want = _left_blocks(u, n)
        for g in (full, simple):
            got = g.output_values(u)
            for st in want:
                assert np.array_equal(got[st], want[st])


@pytest.mark.parametrize("n", range(2, 11))
def test_simplified_xor_count(n):
    g = igc.simplify_graph(igc.build_full_graph(n))
    assert g.xor_count == igc.xor_count_formula(n) == (1 << n) * (n - 2) // 2 + 1


def test_n3_simplified_has_five_xors():
    assert igc.simplify_graph(igc.build_full_graph(3)).xor_count == 5


def test_full_graph_xor_count():
    for n in range(2, 8):
        assert igc.build_full_graph(n).xor_count == (n - 1) * (1 << (n - 1))


def test_adjacency_text():
    text = igc.build_full_graph(2).to_adjacency()
    assert text.startswith("# igc n=2 simplified=0")
    assert "L1.0 xor <- L0.0, L0.1" in text
    assert text.rstrip().endswith("out stage 1: L1.0 L1.1")


@pytest.mark.parametrize("n", range(2, 11))
def test_pipeline_structure(n):
    N = 1 << n
    p = igc.IgcPipeline(n)
    assert p.xor_pass_count == N // 2 - 1
    assert p.demux_count == N // 2 - 2
    assert p.total_storage_bits == N // 2 - 2


@pytest.mark.parametrize("n", range(2, 9))
@pytest.mark.parametrize("storage", ["registers", "ram"])
def test_pipeline_matches_partial_sum_oracle(n, storage):
    N = 1 << n
    rng = np.random.default_rng(100 + n)
    B = 32
    u = rng.integers(0, 2, (B, N), dtype=np.uint8)
    code = PolarCode(n, ())
    pipe = igc.IgcPipeline(n, storage, batch=B)
    emitted = []
    for e in range(N // 2):
        ems = pipe.step((u[:, 2 * e], u[:, 2 * e + 1]))
        for em in ems:
            assert np.array_equal(em.bits, partial_sum_oracle(u[:, : 2 * e + 2], em.stage, code))
        emitted += ems
    # one emission per internal tree node except the root
    assert len(emitted) == N // 2 - 1
    ref = igc.expected_emissions(u)
    assert [(em.stage, em.node) for em in emitted] == [(st, nd) for st, nd, _ in ref]


def test_idle_cycles_do_not_advance():
    p = igc.IgcPipeline(3)
    assert p.step(None) == []
    assert p.event == 0 and p.cycle == 1


def test_step_past_end_raises():
    p = igc.IgcPipeline(2)
    p.step((0, 1))
    p.step((1, 1))
    assert p.frame_done
    with pytest.raises(StateError):
        p.step((0, 0))
    p.reset()
    assert p.step((1, 0))[0].bits.tolist() == [[1, 0]]


def test_control_bits_follow_pair_counter():
    p = igc.IgcPipeline(4)
    assert [p.control_bits(e) for e in range(4)] == [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)]


def test_ram_lifetimes_recorded():
    p = igc.IgcPipeline(4, "ram")
    for e in range(8):
        p.step((e & 1, 0))
    life = p.ram_lifetimes()
    assert set(life) == {2, 3} and all(life.values())


def test_small_n_rejected():
    with pytest.raises(RangeError):
        igc.IgcPipeline(1)
    with pytest.raises(RangeError):
        igc.build_full_graph(1)
