"""Regular LDPC precode: construction, systematic encoding, alist I/O."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

SOCKET_PERMUTATIONS = 100


class PrecodeError(ValueError):
    pass


class RankDeficientError(PrecodeError):
    pass


@dataclass(frozen=True)
class ParityCheck:
    """Sparse binary parity-check matrix; ``rows[i]`` lists the columns of check ``i``."""

    n: int
    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(sorted(int(c) for c in r)) for r in self.rows)
        for r in rows:
            if len(set(r)) != len(r):
                raise PrecodeError(f"duplicate column in check row {r}")
            if r and (r[0] < 0 or r[-1] >= self.n):
                raise PrecodeError(f"column index out of range in row {r}")
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def k(self) -> int:
        return self.n - self.m

    def column_weights(self) -> np.ndarray:
        w = np.zeros(self.n, dtype=int)
        for r in self.rows:
            w[list(r)] += 1
        return w

    def row_weights(self) -> np.ndarray:
        return np.array([len(r) for r in self.rows], dtype=int)

    def is_regular(self, dv: int, dc: int) -> bool:
        return bool(np.all(self.column_weights() == dv) and np.all(self.row_weights() == dc))

    def dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            H[i, list(r)] = 1
        return H

    def syndrome(self, b: np.ndarray) -> np.ndarray:
        """Check sums of an ``(n, ell)`` bit array, one row per check."""
        b = np.asarray(b, dtype=np.uint8)
        out = np.zeros((self.m,) + b.shape[1:], dtype=np.uint8)
        for i, r in enumerate(self.rows):
            out[i] = np.bitwise_xor.reduce(b[list(r)], axis=0) if r else 0
        return out


def _repair_parallel_edges(rows_of, cols, rng, max_passes=50):
    """Swap column endpoints until no (row, column) pair repeats. In place."""
    counts = Counter(zip(rows_of.tolist(), cols.tolist()))
    E = len(cols)
    for _ in range(max_passes):
        dups = [e for e in range(E) if counts[(rows_of[e], cols[e])] > 1]
        if not dups:
            return True
        for e in dups:
            r, c = rows_of[e], cols[e]
            if counts[(r, c)] < 2:
                continue
            for e2 in rng.integers(0, E, size=64):
                r2, c2 = rows_of[e2], cols[e2]
                if r2 == r or c2 == c or counts[(r, c2)] or counts[(r2, c)]:
                    continue
                counts[(r, c)] -= 1
                counts[(r2, c2)] -= 1
                counts[(r, c2)] += 1
                counts[(r2, c)] += 1
                cols[e], cols[e2] = c2, c
                break
    return all(v <= 1 for v in counts.values())


def build_regular_ldpc(n: int, dv: int = 3, dc: int = 30, seed: int = 0) -> ParityCheck:
    """(dv, dc)-regular parity-check matrix from a random socket permutation.

    Parallel edges left by the permutation are removed by endpoint swaps;
    if that fails a fresh permutation is drawn, up to ``SOCKET_PERMUTATIONS``.
    """
    if n <= 0 or (n * dv) % dc:
        raise PrecodeError(f"n={n}: {dv}*n is not divisible by {dc}")
    m = n * dv // dc
    if dv > m or dc > n:
        raise PrecodeError(f"n={n} too small for a ({dv},{dc})-regular code")
    rng = np.random.default_rng(seed)
    rows_of = np.repeat(np.arange(m), dc)
    for _ in range(SOCKET_PERMUTATIONS):
        cols = rng.permutation(np.repeat(np.arange(n), dv))
        if _repair_parallel_edges(rows_of, cols, rng):
            rows = [[] for _ in range(m)]
            for r, c in zip(rows_of.tolist(), cols.tolist()):
                rows[r].append(c)
            return ParityCheck(n, tuple(tuple(r) for r in rows))
    raise PrecodeError(f"no simple ({dv},{dc}) graph after {SOCKET_PERMUTATIONS} permutations")


@dataclass(frozen=True)
class EncoderPlan:
    """Systematic encoder: ``b[parity] = A @ b[systematic] (mod 2)``."""

    systematic: np.ndarray
    parity: np.ndarray
    A: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return len(self.systematic)

    @property
    def n(self) -> int:
        return len(self.systematic) + len(self.parity)


def make_encoder(H: ParityCheck) -> EncoderPlan:
    """Reduce ``H`` to ``[P | I]`` form over GF(2).

    Pivot columns are searched from the right, so the parity positions sit
    at the end of the codeword whenever that part of ``H`` is invertible and
    other columns are swapped in otherwise.
    """
    M = H.dense().astype(bool)
    m, n = M.shape
    free = np.ones(n, dtype=bool)
    pivots = []
    for r in range(m):
        candidates = np.flatnonzero(free & M[r:].any(axis=0))
        if not len(candidates):
            raise RankDeficientError(f"parity-check matrix has rank {r} < {m}")
        pivot = int(candidates[-1])
        src = r + int(np.argmax(M[r:, pivot]))
        if src != r:
            M[[r, src]] = M[[src, r]]
        hits = M[:, pivot].copy()
        hits[r] = False
        M[hits] ^= M[r]
        free[pivot] = False
        pivots.append(pivot)
    systematic = np.flatnonzero(free)
    A = M[:, systematic].astype(np.float32)
    A.setflags(write=False)
    return EncoderPlan(systematic, np.array(pivots, dtype=np.int64), A)


def precode_packets(plan: EncoderPlan, source) -> np.ndarray:
    """Encode ``k`` source packets (rows of a 0/1 array) into ``n`` precoded packets.

    Each bit position is encoded independently as one codeword.
    """
    src = np.asarray(source)
    if src.ndim != 2 or src.shape[0] != plan.k:
        raise PrecodeError(f"expected {plan.k} source packets of equal length, got shape {src.shape}")
    if not np.isin(src, (0, 1)).all():
        raise PrecodeError("source packets must be fully known 0/1 bits")
    src = src.astype(np.uint8)
    b = np.empty((plan.n, src.shape[1]), dtype=np.uint8)
    b[plan.systematic] = src
    if len(plan.parity):
        b[plan.parity] = np.fmod(plan.A @ src.astype(np.float32), 2).astype(np.uint8)
    return b


def build_precode(n: int, seed: int = 0, dv: int = 3, dc: int = 30, rebuilds: int = 20):
    """Regular code with a working encoder; on rank deficiency retry with ``seed + 1``.

    Returns ``(H, plan, seed_used)``.
    """
    for s in range(seed, seed + rebuilds):
        H = build_regular_ldpc(n, dv, dc, s)
        try:
            return H, make_encoder(H), s
        except RankDeficientError as err:
            log.info("precode seed %d rejected: %s", s, err)
    raise PrecodeError(f"no full-rank ({dv},{dc}) code for n={n} in {rebuilds} seeds")


def write_alist(H: ParityCheck, path) -> None:
    """MacKay alist text format (1-based indices, zero padded)."""
    cols = [[] for _ in range(H.n)]
    for i, r in enumerate(H.rows):
        for c in r:
            cols[c].append(i)
    cw = [len(c) for c in cols]
    rw = [len(r) for r in H.rows]
    max_c, max_r = max(cw, default=0), max(rw, default=0)
    lines = [f"{H.n} {H.m}", f"{max_c} {max_r}", " ".join(map(str, cw)), " ".join(map(str, rw))]
    for c in cols:
        lines.append(" ".join(str(i + 1) for i in c) + " 0" * (max_c - len(c)))
    for r in H.rows:
        lines.append(" ".join(str(j + 1) for j in r) + " 0" * (max_r - len(r)))
    Path(path).write_text("\n".join(line.strip() for line in lines) + "\n")


def read_alist(path) -> ParityCheck:
    tokens = [int(t) for t in Path(path).read_text().split()]
    try:
        n, m, max_c, max_r = tokens[:4]
        pos = 4
        cw = tokens[pos:pos + n]; pos += n
        rw = tokens[pos:pos + m]; pos += m
        col_rows = []
        for w in cw:
            col_rows.append(tokens[pos:pos + w])
            pos += max_c
        rows = []
        for w in rw:
            rows.append([j - 1 for j in tokens[pos:pos + w]])
            pos += max_r
    except ValueError:
        raise PrecodeError(f"truncated alist file {path}") from None
    if len(rows) != m or pos > len(tokens):
        raise PrecodeError(f"truncated alist file {path}")
    H = ParityCheck(n, tuple(tuple(r) for r in rows))
    from_cols = sorted((i - 1, c) for c, rs in enumerate(col_rows) for i in rs)
    from_rows = sorted((i, c) for i, r in enumerate(H.rows) for c in r)
    if from_cols != from_rows:
        raise PrecodeError("alist column and row sections disagree")
    return H
