"""Erasure-bit algebra over the alphabet {0, 1, *}.

A :class:`TernaryWord` stores two packed bit masks as Python integers:
``known`` (bit set where the position holds a 0/1) and ``value`` (the bit
itself, forced to 0 where unknown). Position ``p`` (0-based) lives in bit
``p`` of both masks, so position 1 in the usual 1-based notation is the
least significant bit.

The four mappings used by bit-wise peeling are provided as plain functions:

    shift_pad   S   : pad a length-l word into the length l+D factor frame
    xor_merge   Phi : position-wise XOR, * wherever any input is *
    window      S+  : read a length-l window back out of the factor frame
    fill        Psi : keep known bits of the first word, fill the rest

and :func:`factor_update` composes them into one factor-node update.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np


def _ones(n: int) -> int:
    return (1 << n) - 1


@dataclass(frozen=True)
class TernaryWord:
    length: int
    known: int = 0
    value: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise ValueError(f"negative length {self.length}")
        full = _ones(self.length)
        if self.known & ~full or self.value & ~full:
            raise ValueError("mask bits set beyond word length")
        if self.value & ~self.known:
            raise ValueError("value bit set at an unknown position")

    @classmethod
    def from_string(cls, s: str) -> "TernaryWord":
        """Parse ``"10*1"`` style text, first character = first position."""
        known = value = 0
        for p, ch in enumerate(s):
            if ch == "*":
                continue
            if ch not in "01":
                raise ValueError(f"bad symbol {ch!r}")
            known |= 1 << p
            if ch == "1":
                value |= 1 << p
        return cls(len(s), known, value)

    @classmethod
    def from_arrays(cls, known, value) -> "TernaryWord":
        """Build from 0/1 arrays; ``value`` is masked by ``known``."""
        known = np.asarray(known, dtype=np.uint8)
        value = np.asarray(value, dtype=np.uint8) & known
        pack = lambda a: int.from_bytes(np.packbits(a, bitorder="little").tobytes(), "little")
        return cls(len(known), pack(known), pack(value))

    def to_arrays(self):
        """``(known, value)`` as uint8 arrays of length ``self.length``."""
        def unpack(x):
            raw = np.frombuffer(x.to_bytes((self.length + 7) // 8, "little"), dtype=np.uint8)
            return np.unpackbits(raw, count=self.length, bitorder="little")
        return unpack(self.known), unpack(self.value)

    def __str__(self) -> str:
        return "".join(self.symbol(p) for p in range(self.length))

    def __len__(self) -> int:
        return self.length

    def symbol(self, p: int) -> str:
        if not 0 <= p < self.length:
            raise IndexError(p)
        if not (self.known >> p) & 1:
            return "*"
        return "1" if (self.value >> p) & 1 else "0"

    def to_list(self) -> list:
        """Entries as ints, with ``None`` for erased positions."""
        return [None if s == "*" else int(s) for s in str(self)]

    @property
    def unknown_count(self) -> int:
        return self.length - self.known.bit_count()


def make_known(bits: Iterable[int]) -> TernaryWord:
    bits = list(bits)
    value = 0
    for p, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {b!r}")
        value |= b << p
    return TernaryWord(len(bits), _ones(len(bits)), value)


def make_erased(length: int) -> TernaryWord:
    return TernaryWord(length, 0, 0)


def _check_shift(k: int, max_shift: int) -> None:
    if not 0 <= k <= max_shift:
        raise ValueError(f"shift {k} outside [0, {max_shift}]")


def shift_pad(k: int, w: TernaryWord, max_shift: int) -> TernaryWord:
    """Place ``w`` at offset ``k`` inside a frame of length ``len(w) + max_shift``.

    The ``k`` leading and ``max_shift - k`` trailing positions are known zeros.
    """
    _check_shift(k, max_shift)
    n = w.length + max_shift
    pad = _ones(n) & ~(_ones(w.length) << k)
    return TernaryWord(n, (w.known << k) | pad, w.value << k)


def window(k: int, w: TernaryWord, ell: int) -> TernaryWord:
    """Extract positions ``k .. k+ell-1`` (0-based) of a frame word."""
    _check_shift(k, w.length - ell)
    mask = _ones(ell)
    return TernaryWord(ell, (w.known >> k) & mask, (w.value >> k) & mask)


def xor_merge(words: Sequence[TernaryWord]) -> TernaryWord:
    if not words:
        raise ValueError("xor_merge needs at least one word")
    n = words[0].length
    if any(w.length != n for w in words):
        raise ValueError("xor_merge over words of different lengths")
    known = reduce(lambda a, w: a & w.known, words, _ones(n))
    value = reduce(lambda a, w: a ^ w.value, words, 0)
    return TernaryWord(n, known, value & known)


def fill(w1: TernaryWord, w2: TernaryWord) -> TernaryWord:
    if w1.length != w2.length:
        raise ValueError("fill over words of different lengths")
    return TernaryWord(w1.length, w1.known | w2.known, w1.value | (w2.value & ~w1.known))


def is_resolved(w: TernaryWord) -> bool:
    return w.known == _ones(w.length)


def resolution_flag(w: TernaryWord) -> int:
    """0 when every position is known, 1 otherwise."""
    return 0 if is_resolved(w) else 1


def factor_update(memory: TernaryWord, target_shift: int, target_word: TernaryWord,
                  others: Sequence[tuple]) -> TernaryWord:
    """Candidate for the target variable from one factor node.

    Parameters
    ----------
    memory : TernaryWord
        Fully known factor memory of length ``ell + D``.
    target_shift : int
        Label of the edge between the factor and the target variable.
    target_word : TernaryWord
        Current state of the target variable (length ``ell``).
    others : sequence of (shift, TernaryWord)
        Every other neighbour of the factor with its edge label.

    Returns
    -------
    TernaryWord
        ``target_word`` with any bit the factor pins down filled in. Known
        bits of ``target_word`` are never overwritten.
    """
    ell = target_word.length
    max_shift = memory.length - ell
    if max_shift < 0:
        raise ValueError("memory shorter than the target word")
    for _, w in others:
        if w.length != ell:
            raise ValueError("neighbour word length differs from target")
    merged = xor_merge([memory] + [shift_pad(k, w, max_shift) for k, w in others])
    return fill(target_word, window(target_shift, merged, ell))
