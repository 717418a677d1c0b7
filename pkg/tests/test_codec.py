import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zdf.codec import (FountainEncoder, GraphError, OutputPacket, OutputPacketHeader,
                       WireFormatError, build_factor_graph, combine, pack_header, pack_packet,
                       unpack_header, unpack_packet)
from zdf.distributions import DEFAULT_DELTA, DEFAULT_OMEGA, DegreeDistribution, ShiftDistribution
from zdf.precode import ParityCheck, build_precode, precode_packets
from zdf.ternary import TernaryWord, shift_pad, xor_merge

from oracles import poly_output


def _encoder(precoded, seed=0):
    return FountainEncoder(np.asarray(precoded, dtype=np.uint8), DEFAULT_OMEGA, DEFAULT_DELTA,
                           np.random.default_rng(seed))


def test_two_packet_payload():
    b = np.array([[1, 0, 1], [0, 1, 1]], dtype=np.uint8)
    pkt = _encoder(b).emit((0, 1), (0, 1))
    assert pkt.payload.tolist() == [1, 0, 0, 1]
    assert np.array_equal(pkt.payload, poly_output(b, (0, 1), (0, 1)))
    assert pkt.ell == 3


def test_degree_one_copy():
    b = np.zeros((6, 3), dtype=np.uint8)
    b[5] = (1, 1, 0)
    pkt = _encoder(b).emit((5,), (0,))
    assert pkt.payload.tolist() == [1, 1, 0]


def test_normalized_shift_header():
    with pytest.raises(ValueError):
        OutputPacketHeader(0, (0, 1), (1, 1))
    b = np.ones((2, 3), dtype=np.uint8)
    pkt = _encoder(b).emit((0, 1), (0, 0))
    assert len(pkt.payload) == 3


def test_random_packets_match_polynomial_oracle():
    H, plan, _ = build_precode(300, 2)
    rng = np.random.default_rng(9)
    b = precode_packets(plan, rng.integers(0, 2, (plan.k, 40)))
    enc = _encoder(b, seed=3)
    for pkt in enc.generate(200):
        h = pkt.header
        assert min(h.shifts) == 0 and max(h.shifts) <= 1
        assert len(set(h.indices)) == h.d
        assert np.array_equal(pkt.payload, poly_output(b, h.indices, h.shifts))


def test_degree_clamped_to_n():
    omega = DegreeDistribution((66,), (1.0,))
    enc = FountainEncoder(np.zeros((10, 4), dtype=np.uint8), omega, DEFAULT_DELTA,
                          np.random.default_rng(0))
    assert enc.encode_next().header.d == 10


def test_degree_histogram():
    b = np.zeros((300, 1), dtype=np.uint8)
    enc = _encoder(b, seed=11)
    N = 20000
    degs = np.array([enc.encode_next().header.d for _ in range(N)])
    for d, p in zip(DEFAULT_OMEGA.degrees, DEFAULT_OMEGA.probs):
        assert abs(np.mean(degs == d) - p) < 5 * np.sqrt(p * (1 - p) / N)


def test_wire_layout():
    h = OutputPacketHeader(1, (3, 7), (0, 1))
    raw = pack_header(h, 3, 1)
    assert raw == b"ZDF1" + struct.pack(">IHHB", 1, 2, 3, 1) + struct.pack(">IBIB", 3, 0, 7, 1)
    assert unpack_header(raw) == (h, 3, 1, len(raw))
    pkt = OutputPacket(h, np.array([1, 0, 0, 1], dtype=np.uint8))
    wire = pack_packet(pkt, 1)
    assert wire[len(raw):] == bytes([0b10010000])
    assert unpack_packet(wire) == (pkt, 1)


def test_wire_errors():
    h = OutputPacketHeader(1, (3, 7), (0, 1))
    raw = pack_packet(OutputPacket(h, np.array([1, 0, 0, 1], dtype=np.uint8)), 1)
    with pytest.raises(WireFormatError, match="truncated"):
        unpack_packet(raw[:-1])
    with pytest.raises(WireFormatError, match="truncated"):
        unpack_header(raw[:20])
    with pytest.raises(WireFormatError, match="magic"):
        unpack_header(b"ZDF2" + raw[4:])
    bad = bytearray(raw)
    bad[17] = 1  # first shift (0 -> 1) gives shifts (1, 1)
    with pytest.raises(WireFormatError, match="normalized"):
        unpack_header(bytes(bad))
    with pytest.raises(WireFormatError):
        pack_header(h, 3, 0)
    with pytest.raises(WireFormatError, match="trailing"):
        unpack_packet(raw + b"\x00")


@st.composite
def headers(draw):
    d = draw(st.integers(1, 8))
    idx = draw(st.lists(st.integers(0, 2**32 - 1), min_size=d, max_size=d, unique=True))
    shifts = draw(st.lists(st.integers(0, 5), min_size=d, max_size=d))
    shifts = [s - min(shifts) for s in shifts]
    return OutputPacketHeader(draw(st.integers(0, 2**32 - 1)), idx, shifts)


@given(headers(), st.integers(0, 70), st.data())
def test_packet_round_trip(h, ell, data):
    payload = np.array(data.draw(st.lists(st.integers(0, 1), min_size=ell + h.span,
                                          max_size=ell + h.span)), dtype=np.uint8)
    pkt = OutputPacket(h, payload)
    assert unpack_packet(pack_packet(pkt, 5)) == (pkt, 5)


def test_graph_construction_trace():
    H = ParityCheck(4, ((0, 1, 2, 3),))
    pkt = OutputPacket(OutputPacketHeader(0, (1,), (0,)), np.array([1, 0, 1], dtype=np.uint8))
    g = build_factor_graph(H, [pkt], 3, 1)
    assert g.num_factors == 2
    assert g.neighbors(0) == [(0, 0), (1, 0), (2, 0), (3, 0)]
    assert g.memory[0].tolist() == [0, 0, 0, 0]
    assert g.neighbors(1) == [(1, 0)]
    assert g.memory[1].tolist() == [1, 0, 1, 0]


def test_graph_without_packets_and_bad_index():
    H = ParityCheck(4, ((0, 1, 2, 3),))
    g = build_factor_graph(H, [], 3, 1)
    assert g.num_factors == 1 and g.num_edges == 4
    bad = OutputPacket(OutputPacketHeader(0, (4,), (0,)), np.zeros(3, dtype=np.uint8))
    with pytest.raises(GraphError, match="out of range"):
        build_factor_graph(H, [bad], 3, 1)
    wide = OutputPacket(OutputPacketHeader(0, (0, 1), (0, 2)), np.zeros(5, dtype=np.uint8))
    with pytest.raises(GraphError, match="exceeds"):
        build_factor_graph(H, [wide], 3, 1)


def test_truth_satisfies_every_factor():
    H, plan, _ = build_precode(300, 5)
    rng = np.random.default_rng(1)
    b = precode_packets(plan, rng.integers(0, 2, (plan.k, 12)))
    enc = _encoder(b, seed=2)
    g = build_factor_graph(H, enc.generate(320), 12, 1)
    truth = [TernaryWord.from_arrays(np.ones(12, dtype=np.uint8), row) for row in b]
    for i in range(g.num_factors):
        mem = TernaryWord.from_arrays(np.ones(13, dtype=np.uint8), g.memory[i])
        total = xor_merge([mem] + [shift_pad(s, truth[j], 1) for j, s in g.neighbors(i)])
        assert total == TernaryWord(13, (1 << 13) - 1, 0)


def test_combine_wider_shift():
    b = np.array([[1, 1]], dtype=np.uint8)
    assert combine(np.vstack([b, b]), (0, 1), (0, 2)).tolist() == [1, 1, 1, 1]
    with pytest.raises(ValueError):
        ShiftDistribution(())
