"""Bit-packed linear algebra over GF(2).

A matrix with r rows and c columns is stored as a numpy uint64 array of
shape (r, ceil(c/64)); bit j of a row sits in word j >> 6 at position
j & 63 (LSB first).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "pack_rows",
    "unpack_rows",
    "rref",
    "rank",
    "solve",
    "nullspace",
    "reduce_by_rref",
]


def _words(cols: int) -> int:
    return max(1, (cols + 63) >> 6)


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into uint64 words, LSB first."""
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
    r, c = bits.shape
    packed = np.zeros((r, _words(c)), dtype=np.uint64)
    padded = np.zeros((r, _words(c) * 64), dtype=np.uint8)
    padded[:, :c] = bits
    byte = np.packbits(padded, axis=1, bitorder="little")
    packed[:] = byte.reshape(r, -1, 8).view(np.uint64).reshape(r, -1)
    return packed


def unpack_rows(packed: np.ndarray, cols: int) -> np.ndarray:
    """Inverse of pack_rows; returns a (rows, cols) uint8 array."""
    r = packed.shape[0]
    byte = packed.astype("<u8").reshape(r, -1).view(np.uint8)
    bits = np.unpackbits(byte, axis=1, bitorder="little")
    return bits[:, :cols].copy()


def _column(packed: np.ndarray, j: int) -> np.ndarray:
    return (packed[:, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)


def rref(packed: np.ndarray, cols: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form. Returns (rref matrix, pivot column list)."""
    m = packed.copy()
    rows = m.shape[0]
    pivots: list[int] = []
    row = 0
    for j in range(cols):
        if row >= rows:
            break
        col = _column(m, j)
        hits = np.nonzero(col[row:])[0]
        if hits.size == 0:
            continue
        p = row + int(hits[0])
        if p != row:
            m[[row, p]] = m[[p, row]]
        mask = _column(m, j) == 1
        mask[row] = False
        if mask.any():
            m[mask] ^= m[row]
        pivots.append(j)
        row += 1
    return m, pivots


def rank(packed: np.ndarray, cols: int) -> int:
    return len(rref(packed, cols)[1])


def solve(packed: np.ndarray, cols: int, rhs: np.ndarray) -> np.ndarray | None:
    """One solution of A x = rhs with free variables set to 0, or None."""
    rhs = np.asarray(rhs, dtype=np.uint8)
    aug = np.zeros((packed.shape[0], _words(cols + 1)), dtype=np.uint64)
    aug[:, : packed.shape[1]] = packed
    w, b = cols >> 6, np.uint64(cols & 63)
    aug[:, w] |= rhs.astype(np.uint64) << b
    red, pivots = rref(aug, cols + 1)
    if pivots and pivots[-1] == cols:
        return None
    x = np.zeros(cols, dtype=np.uint8)
    rhs_col = _column(red, cols)
    for i, j in enumerate(pivots):
        x[j] = rhs_col[i]
    return x


def nullspace(packed: np.ndarray, cols: int) -> np.ndarray:
    """Kernel basis as a (dim, cols) uint8 array, one vector per row."""
    red, pivots = rref(packed, cols)
    pivot_set = set(pivots)
    free = [j for j in range(cols) if j not in pivot_set]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        col = _column(red, f)
        for i, j in enumerate(pivots):
            basis[k, j] = col[i]
    return basis


def reduce_by_rref(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Reduce x modulo the row space of basis, taken to RREF first.

    The result is the lexicographically least element of x + rowspan(basis)
    when variable 0 is the most significant position.
    """
    x = np.asarray(x, dtype=np.uint8).copy()
    cols = x.shape[0]
    if basis.size == 0:
        return x
    red, pivots = rref(pack_rows(basis), cols)
    vecs = unpack_rows(red, cols)
    for i, j in enumerate(pivots):
        if x[j]:
            x ^= vecs[i]
    return x
