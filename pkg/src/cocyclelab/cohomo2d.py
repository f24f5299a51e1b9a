"""Discrete two-dimensional cochain complex over GF(2).

A pair of commuting permutations S, T generates a Z^2 action on a finite
point set.  GF(2)-valued functions on the points form the 0- and 2-cochains,
pairs of functions the 1-cochains, and the differentials are

    d0 C      = (C o S + C,  C o T + C)            (the discrete gradient)
    d1 (P, Q) = P + Q o S + P o T + Q              (the discrete curl)

with d1 o d0 = 0 exactly because S and T commute.  ``solve_curl`` inverts
d1 where possible, returning a deterministic lexicographically-least gauge
pair, and ``cohomology_dims`` reports the dimensions of the three
cohomology groups.  On an M x N periodic grid with coordinate shifts the
dims are (1, 2, 1); the h2 = 1 reflects the single parity obstruction to
solving the curl equation on a finite torus.
"""

from __future__ import annotations

import numpy as np

from . import gf2
from .dynsys import FinitePermutation

__all__ = [
    "Action2D",
    "d0",
    "d1",
    "cohomology_dims",
    "solve_curl",
    "cochain_to_json",
    "cochain_from_json",
]


class Action2D:
    """Two commuting permutations of the same point set.

    ``shape`` is stored when the action is a torus grid so cochains can be
    serialized with their grid header; it is None for ad-hoc pairs.
    """

    def __init__(
        self,
        s: FinitePermutation,
        t: FinitePermutation,
        shape: tuple[int, int] | None = None,
    ):
        if s.n != t.n:
            raise ValueError("the two permutations act on different point counts")
        if not np.array_equal(s.sigma[t.sigma], t.sigma[s.sigma]):
            raise ValueError("the permutations do not commute")
        self.s = s
        self.t = t
        self.n = s.n
        self.shape = None if shape is None else (int(shape[0]), int(shape[1]))

    @classmethod
    def torus_grid(cls, m: int, n: int) -> "Action2D":
        """The M x N periodic grid with S the row shift and T the column shift.

        Cell (i, j) sits at index i*n + j; S sends it to ((i+1) mod m, j)
        and T to (i, (j+1) mod n).
        """
        m, n = int(m), int(n)
        if m < 1 or n < 1:
            raise ValueError("grid sides must be positive")
        i, j = np.divmod(np.arange(m * n), n)
        s = FinitePermutation(((i + 1) % m) * n + j)
        t = FinitePermutation(i * n + (j + 1) % n)
        return cls(s, t, shape=(m, n))

    def __repr__(self) -> str:
        if self.shape is not None:
            return f"Action2D.torus_grid{self.shape}"
        return f"Action2D(n={self.n})"


def _as_cochain(action: Action2D, c) -> np.ndarray:
    c = np.asarray(c, dtype=np.uint8)
    if c.shape != (action.n,):
        raise ValueError("cochain length does not match the point count")
    if np.any(c > 1):
        raise ValueError("cochain entries must be 0 or 1")
    return c


def d0(action: Action2D, c) -> tuple[np.ndarray, np.ndarray]:
    c = _as_cochain(action, c)
    return c[action.s.sigma] ^ c, c[action.t.sigma] ^ c


def d1(action: Action2D, p, q) -> np.ndarray:
    p = _as_cochain(action, p)
    q = _as_cochain(action, q)
    return p ^ q[action.s.sigma] ^ p[action.t.sigma] ^ q


def _d0_matrix(action: Action2D) -> np.ndarray:
    # output rows: n rows for the S component then n for the T component
    n = action.n
    r = np.arange(n)
    rows = np.zeros((2 * n, n), dtype=np.uint8)
    rows[r, action.s.sigma] ^= 1
    rows[r, r] ^= 1
    rows[n + r, action.t.sigma] ^= 1
    rows[n + r, r] ^= 1
    return rows


def _d1_matrix(action: Action2D) -> np.ndarray:
    # row x is the curl equation at x; columns are P then Q
    n = action.n
    r = np.arange(n)
    rows = np.zeros((n, 2 * n), dtype=np.uint8)
    rows[r, r] ^= 1
    rows[r, action.t.sigma] ^= 1
    rows[r, n + action.s.sigma] ^= 1
    rows[r, n + r] ^= 1
    return rows


def cohomology_dims(action: Action2D) -> tuple[int, int, int]:
    """(h0, h1, h2) = dims of ker d0, ker d1 / im d0, and coker d1."""
    n = action.n
    r0 = gf2.rank(gf2.pack_rows(_d0_matrix(action)), n)
    r1 = gf2.rank(gf2.pack_rows(_d1_matrix(action)), 2 * n)
    return n - r0, 2 * n - r1 - r0, n - r1


def solve_curl(action: Action2D, f) -> tuple[np.ndarray, np.ndarray] | None:
    """A pair (P, Q) with d1(P, Q) = F, or None when no pair exists.

    Among all solutions the returned one is lexicographically least in the
    concatenated variable order P[0..n-1], Q[0..n-1], so repeated runs and
    different platforms agree bit for bit.
    """
    f = _as_cochain(action, f)
    n = action.n
    packed = gf2.pack_rows(_d1_matrix(action))
    v = gf2.solve(packed, 2 * n, f)
    if v is None:
        return None
    v = gf2.reduce_by_rref(v, gf2.nullspace(packed, 2 * n))
    return v[:n].copy(), v[n:].copy()


def cochain_to_json(action: Action2D, bits) -> dict:
    """Hex serialization with the grid header; grid-built actions only."""
    if action.shape is None:
        raise ValueError("serialization needs a grid shape")
    from .msets import _bits_to_hex

    bits = np.asarray(bits, dtype=np.uint8)
    return {
        "shape": list(action.shape),
        "cells": int(bits.size),
        "hex": _bits_to_hex(bits),
    }


def cochain_from_json(obj: dict) -> tuple[tuple[int, int], np.ndarray]:
    from .msets import _hex_to_bits

    m, n = (int(v) for v in obj["shape"])
    bits = _hex_to_bits(obj["hex"], int(obj["cells"]))
    if bits.size != m * n:
        raise ValueError("cell count does not match the grid shape")
    return (m, n), bits
