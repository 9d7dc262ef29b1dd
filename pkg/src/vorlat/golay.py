"""Binary (24,12) extended Golay code, built rather than transcribed.

The length-23 perfect Golay code is cyclic, generated by either degree-11
factor of (x^23+1)/(x+1) over GF(2). We recover such a factor by direct
search (1024 candidates), append an overall parity bit, and cache the
4096-word codebook. Downstream uses: the scaled Leech lattice generator and
its coset-decomposition quantizer.
"""

from __future__ import annotations

import numpy as np


def _poly_divides(g: int, f: int) -> bool:
    """Carry-less polynomial division test over GF(2), bit i = coeff of x^i."""
    dg = g.bit_length() - 1
    while f.bit_length() - 1 >= dg and f:
        f ^= g << (f.bit_length() - 1 - dg)
    return f == 0


def _golay23_generator_poly() -> int:
    x23_1 = (1 << 23) | 1
    for low in range(1 << 10):
        g = (1 << 11) | (low << 1) | 1
        if _poly_divides(g, x23_1):
            return g
    raise AssertionError("no degree-11 factor of x^23+1 found")


def _build_generator() -> np.ndarray:
    g = _golay23_generator_poly()
    coeffs = [(g >> i) & 1 for i in range(12)]
    rows = []
    for shift in range(12):
        row = [0] * 23
        for i, c in enumerate(coeffs):
            row[shift + i] = c
        rows.append(row)
    gen = np.array(rows, dtype=np.uint8)
    parity = gen.sum(axis=1) % 2
    return np.concatenate([gen, parity[:, None]], axis=1)


_GEN = None
_WORDS = None


def generator_matrix() -> np.ndarray:
    """12x24 generator of the extended Golay code (uint8, not systematic)."""
    global _GEN
    if _GEN is None:
        _GEN = _build_generator()
        _GEN.setflags(write=False)
    return _GEN


def codewords() -> np.ndarray:
    """All 4096 codewords as a (4096, 24) uint8 array, row 0 the zero word."""
    global _WORDS
    if _WORDS is None:
        table = np.zeros((1, 24), dtype=np.uint8)
        for row in generator_matrix():
            table = np.concatenate([table, table ^ row], axis=0)
        w = table.sum(axis=1)
        if table.shape != (4096, 24) or w[w > 0].min() != 8:
            raise AssertionError("Golay construction failed self-check")
        _WORDS = table
        _WORDS.setflags(write=False)
    return _WORDS
