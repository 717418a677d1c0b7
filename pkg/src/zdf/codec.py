"""Shifted-XOR fountain encoding, the packet wire format, and receiver graphs.

All indices (sequence numbers, precoded packets, factor nodes, bit
positions) are 0-based.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import (DegreeDistribution, ShiftDistribution, sample_degrees,
                            sample_shifts)
from .precode import ParityCheck

MAGIC = b"ZDF1"
_FIXED = struct.Struct(">4sIHHB")
_RECORD = struct.Struct(">IB")


class WireFormatError(ValueError):
    pass


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class OutputPacketHeader:
    t: int
    indices: tuple
    shifts: tuple

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(j) for j in self.indices))
        object.__setattr__(self, "shifts", tuple(int(s) for s in self.shifts))
        if not self.indices:
            raise ValueError("output packet needs degree >= 1")
        if len(self.indices) != len(self.shifts):
            raise ValueError("indices and shifts differ in length")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError(f"repeated precoded index in {self.indices}")
        if min(self.indices) < 0 or min(self.shifts) < 0:
            raise ValueError("negative index or shift")
        if min(self.shifts) != 0:
            raise ValueError(f"shifts {self.shifts} not normalized to minimum 0")

    @property
    def d(self) -> int:
        return len(self.indices)

    @property
    def span(self) -> int:
        return max(self.shifts)


@dataclass(frozen=True, eq=False)
class OutputPacket:
    header: OutputPacketHeader
    payload: np.ndarray = field(repr=False)

    @property
    def ell(self) -> int:
        return len(self.payload) - self.header.span

    def __eq__(self, other):
        if not isinstance(other, OutputPacket):
            return NotImplemented
        return self.header == other.header and np.array_equal(self.payload, other.payload)


def combine(precoded: np.ndarray, indices: Sequence[int], shifts: Sequence[int]) -> np.ndarray:
    """XOR of ``precoded[j]`` delayed by its shift, length ``ell + max(shifts)``."""
    ell = precoded.shape[1]
    out = np.zeros(ell + max(shifts), dtype=np.uint8)
    for j, s in zip(indices, shifts):
        out[s:s + ell] ^= precoded[j]
    return out


class FountainEncoder:
    """Generates output packets ``t = 0, 1, 2, ...`` from fixed precoded packets."""

    def __init__(self, precoded, omega: DegreeDistribution, delta: ShiftDistribution,
                 rng: np.random.Generator):
        self.precoded = np.asarray(precoded, dtype=np.uint8)
        if self.precoded.ndim != 2:
            raise ValueError("precoded packets must form an (n, ell) array")
        self.omega = omega
        self.delta = delta
        self.rng = rng
        self.t = 0

    @property
    def n(self) -> int:
        return self.precoded.shape[0]

    def encode_next(self) -> OutputPacket:
        d = int(sample_degrees(self.omega, self.rng, 1)[0])
        # degrees above n cannot pick distinct packets
        d = min(d, self.n)
        shifts = sample_shifts(self.delta, d, self.rng)
        indices = self.rng.choice(self.n, size=d, replace=False)
        return self.emit(indices, shifts)

    def emit(self, indices, shifts) -> OutputPacket:
        header = OutputPacketHeader(self.t, indices, shifts)
        self.t += 1
        return OutputPacket(header, combine(self.precoded, header.indices, header.shifts))

    def generate(self, count: int) -> list:
        return [self.encode_next() for _ in range(count)]


def pack_header(h: OutputPacketHeader, ell: int, max_shift: int) -> bytes:
    if h.span > max_shift:
        raise WireFormatError(f"shift {h.span} exceeds D={max_shift}")
    try:
        parts = [_FIXED.pack(MAGIC, h.t, h.d, ell, max_shift)]
        parts += [_RECORD.pack(j, s) for j, s in zip(h.indices, h.shifts)]
    except struct.error as err:
        raise WireFormatError(str(err)) from None
    return b"".join(parts)


def unpack_header(buf: bytes):
    """Parse a header; returns ``(header, ell, max_shift, bytes_consumed)``."""
    if len(buf) < _FIXED.size:
        raise WireFormatError("truncated header")
    magic, t, d, ell, max_shift = _FIXED.unpack_from(buf)
    if magic != MAGIC:
        raise WireFormatError(f"bad magic {magic!r}")
    end = _FIXED.size + d * _RECORD.size
    if len(buf) < end:
        raise WireFormatError("truncated header records")
    recs = [_RECORD.unpack_from(buf, _FIXED.size + q * _RECORD.size) for q in range(d)]
    indices = [j for j, _ in recs]
    shifts = [s for _, s in recs]
    if shifts and max(shifts) > max_shift:
        raise WireFormatError(f"shift exceeds D={max_shift}")
    try:
        header = OutputPacketHeader(t, indices, shifts)
    except ValueError as err:
        raise WireFormatError(str(err)) from None
    return header, ell, max_shift, end


def pack_packet(pkt: OutputPacket, max_shift: int) -> bytes:
    return pack_header(pkt.header, pkt.ell, max_shift) + np.packbits(pkt.payload).tobytes()


def unpack_packet(buf: bytes):
    """Parse header and payload; returns ``(packet, max_shift)``."""
    header, ell, max_shift, pos = unpack_header(buf)
    nbits = ell + header.span
    nbytes = (nbits + 7) // 8
    if len(buf) < pos + nbytes:
        raise WireFormatError("truncated payload")
    if len(buf) > pos + nbytes:
        raise WireFormatError("trailing bytes after payload")
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8, count=nbytes, offset=pos))
    if bits[nbits:].any():
        raise WireFormatError("non-zero fill bits")
    return OutputPacket(header, bits[:nbits].copy()), max_shift


@dataclass
class FactorGraph:
    """Receiver factor graph in CSR form.

    Factors ``0 .. m-1`` are precode checks (all labels 0, zero memory);
    factor ``m + t`` belongs to the ``t``-th received packet, its memory
    being the payload zero-extended to ``ell + max_shift``. The received
    packets' own variable nodes are folded into those memories.
    """

    n: int
    m: int
    ell: int
    max_shift: int
    fac_ptr: np.ndarray
    fac_var: np.ndarray
    fac_shift: np.ndarray
    memory: np.ndarray

    @property
    def num_factors(self) -> int:
        return len(self.fac_ptr) - 1

    @property
    def num_edges(self) -> int:
        return int(self.fac_ptr[-1])

    def neighbors(self, i: int) -> list:
        lo, hi = self.fac_ptr[i], self.fac_ptr[i + 1]
        return list(zip(self.fac_var[lo:hi].tolist(), self.fac_shift[lo:hi].tolist()))


def build_factor_graph(H: ParityCheck, received: Sequence[OutputPacket], ell: int,
                       max_shift: int) -> FactorGraph:
    frame = ell + max_shift
    F = H.m + len(received)
    ptr = np.zeros(F + 1, dtype=np.int64)
    var, shift = [], []
    memory = np.zeros((F, frame), dtype=np.uint8)
    for i, row in enumerate(H.rows):
        var.extend(row)
        shift.extend([0] * len(row))
        ptr[i + 1] = ptr[i] + len(row)
    for t, pkt in enumerate(received):
        h = pkt.header
        if h.span > max_shift:
            raise GraphError(f"packet {h.t}: shift {h.span} exceeds D={max_shift}")
        if max(h.indices) >= H.n:
            raise GraphError(f"packet {h.t}: index {max(h.indices)} out of range for n={H.n}")
        if len(pkt.payload) != ell + h.span:
            raise GraphError(f"packet {h.t}: payload length {len(pkt.payload)} != {ell + h.span}")
        i = H.m + t
        var.extend(h.indices)
        shift.extend(h.shifts)
        ptr[i + 1] = ptr[i] + h.d
        memory[i, :len(pkt.payload)] = pkt.payload
    return FactorGraph(H.n, H.m, ell, max_shift, ptr, np.array(var, dtype=np.int64),
                       np.array(shift, dtype=np.int64), memory)
