"""Invertible measure-preserving model systems and orbit machinery.

Three system families are provided:

* ``FinitePermutation`` -- a bijection of {0, ..., n-1} with counting measure,
* ``TorusRotation`` -- translation by a constant vector on the d-torus,
* ``CatMap`` -- the hyperbolic toral automorphism (x, y) -> (2x+y, x+y) mod 1.

Points are plain Python values: an int for finite systems, a float for the
circle, and a tuple of floats for higher-dimensional tori.  Torus coordinates
are reduced mod 1 after every step, so they always lie in [0, 1).

Floating point cannot support exact inversion of a hyperbolic map over long
orbits (errors grow like the expansion factor per step), so ``iterate`` runs
the cat map in exact dyadic-rational arithmetic: a double is a fraction
p / 2**k, and the integer matrix acts on (p_x, p_y) mod 2**k without any
rounding.  Statistical orbit engines use the same integer dynamics on the
2**-53 lattice, which makes every long-orbit experiment an exact permutation
of a finite lattice instead of a drifting float recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GOLDEN_MEAN",
    "FinitePermutation",
    "TorusRotation",
    "CatMap",
    "apply",
    "iterate",
    "cycles",
    "orbit_points",
    "catmap_cell_permutation",
]

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0

LATTICE_BITS = 53
_LATTICE = 1 << LATTICE_BITS
_LATTICE_MASK = _LATTICE - 1


class FinitePermutation:
    """A permutation of {0, ..., n-1}, stored as the image array sigma."""

    def __init__(self, sigma) -> None:
        arr = np.array(sigma, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("sigma must be a non-empty 1-d sequence")
        if not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise ValueError("sigma is not a bijection of 0..n-1")
        arr.setflags(write=False)
        self.sigma = arr
        self.n = int(arr.size)
        self._inverse: np.ndarray | None = None
        self._cycles: tuple[tuple[int, ...], ...] | None = None

    @property
    def inverse_sigma(self) -> np.ndarray:
        if self._inverse is None:
            inv = np.argsort(self.sigma).astype(np.int64)
            inv.setflags(write=False)
            self._inverse = inv
        return self._inverse

    def __repr__(self) -> str:
        return f"FinitePermutation({self.sigma.tolist()!r})"


@dataclass(frozen=True)
class TorusRotation:
    """Translation x -> x + alpha mod 1 on the d-torus."""

    alpha: tuple[float, ...]

    def __init__(self, alpha) -> None:
        if np.ndim(alpha) == 0:
            alpha = (float(alpha),)
        vec = tuple(float(a) for a in alpha)
        if not vec:
            raise ValueError("alpha must have at least one coordinate")
        if any(not (0.0 <= a < 1.0) for a in vec):
            raise ValueError("rotation coordinates must lie in [0, 1)")
        object.__setattr__(self, "alpha", vec)

    @property
    def d(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class CatMap:
    """The automorphism of the 2-torus induced by the matrix [[2, 1], [1, 1]]."""

    MATRIX = ((2, 1), (1, 1))
    INVERSE_MATRIX = ((1, -1), (-1, 2))


def _check_torus_point(x, d: int) -> tuple[float, ...]:
    if np.ndim(x) == 0:
        pt = (float(x),)
    else:
        pt = tuple(float(c) for c in x)
    if len(pt) != d:
        raise ValueError(f"point has {len(pt)} coordinates, system expects {d}")
    if any(not (0.0 <= c < 1.0) for c in pt):
        raise ValueError("torus coordinates must lie in [0, 1)")
    return pt


def apply(system, x):
    """One forward step of the system at the point x."""
    if isinstance(system, FinitePermutation):
        xi = int(x)
        if not 0 <= xi < system.n:
            raise ValueError("point outside the finite state space")
        return int(system.sigma[xi])
    if isinstance(system, TorusRotation):
        pt = _check_torus_point(x, system.d)
        out = tuple((c + a) % 1.0 for c, a in zip(pt, system.alpha))
        return out[0] if system.d == 1 else out
    if isinstance(system, CatMap):
        px, py = _check_torus_point(x, 2)
        return ((2.0 * px + py) % 1.0, (px + py) % 1.0)
    raise TypeError(f"unsupported system type: {type(system).__name__}")


def _dyadic(value: float) -> tuple[int, int]:
    """Exact representation of a double in [0, 1) as (numerator, shift)."""
    num, den = float(value).as_integer_ratio()
    return num, den.bit_length() - 1


def _catmap_iterate_exact(x: tuple[float, float], n: int) -> tuple[float, float]:
    px, sx = _dyadic(x[0])
    py, sy = _dyadic(x[1])
    shift = max(sx, sy)
    q = 1 << shift
    px <<= shift - sx
    py <<= shift - sy
    if n >= 0:
        for _ in range(n):
            px, py = (2 * px + py) % q, (px + py) % q
    else:
        for _ in range(-n):
            px, py = (px - py) % q, (2 * py - px) % q
    return px / q, py / q


def iterate(system, x, n: int):
    """n-fold composition T^n(x); negative n runs the inverse map."""
    n = int(n)
    if isinstance(system, FinitePermutation):
        xi = int(x)
        if not 0 <= xi < system.n:
            raise ValueError("point outside the finite state space")
        cyc = _cycle_through(system, xi)
        pos = cyc.index(xi)
        return cyc[(pos + n) % len(cyc)]
    if isinstance(system, TorusRotation):
        pt = _check_torus_point(x, system.d)
        out = tuple((c + n * a) % 1.0 for c, a in zip(pt, system.alpha))
        return out[0] if system.d == 1 else out
    if isinstance(system, CatMap):
        pt = _check_torus_point(x, 2)
        return _catmap_iterate_exact(pt, n)
    raise TypeError(f"unsupported system type: {type(system).__name__}")


def _cycle_through(perm: FinitePermutation, x: int) -> list[int]:
    sigma = perm.sigma
    cyc = [x]
    y = int(sigma[x])
    while y != x:
        cyc.append(y)
        y = int(sigma[y])
    return cyc


def cycles(perm: FinitePermutation) -> tuple[tuple[int, ...], ...]:
    """Cycle decomposition; each cycle starts at its minimal element and the
    cycles are sorted by that element."""
    if perm._cycles is not None:
        return perm._cycles
    seen = np.zeros(perm.n, dtype=bool)
    out: list[tuple[int, ...]] = []
    for start in range(perm.n):
        if seen[start]:
            continue
        cyc = _cycle_through(perm, start)
        for c in cyc:
            seen[c] = True
        out.append(tuple(cyc))
    perm._cycles = tuple(out)
    return perm._cycles


def to_lattice(value: float) -> int:
    """Snap a float in [0, 1) to the 2**-53 integer lattice."""
    p = int(round(float(value) * _LATTICE))
    return min(max(p, 0), _LATTICE - 1)


def catmap_lattice_orbit(px: int, py: int, length: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact cat-map orbit on the 2**-53 lattice, as int64 coordinate arrays."""
    xs = [0] * length
    ys = [0] * length
    for i in range(length):
        xs[i] = px
        ys[i] = py
        px, py = (2 * px + py) & _LATTICE_MASK, (px + py) & _LATTICE_MASK
    return np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64)


def catmap_batch_step(px: np.ndarray, py: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised exact lattice step for a batch of cat-map points."""
    mask = np.int64(_LATTICE_MASK)
    return (2 * px + py) & mask, (px + py) & mask


def rotation_orbit(rot: TorusRotation, x0, length: int, offset: int = 0) -> np.ndarray:
    """Closed-form rotation orbit x0 + (offset + j) * alpha mod 1.

    Returns shape (length,) for d = 1 and (length, d) otherwise.
    """
    pt = np.asarray(_check_torus_point(x0, rot.d))
    steps = np.arange(offset, offset + length, dtype=np.float64)
    alpha = np.asarray(rot.alpha)
    orbit = (pt[None, :] + steps[:, None] * alpha[None, :]) % 1.0
    return orbit[:, 0] if rot.d == 1 else orbit


def orbit_points(system, x, length: int) -> np.ndarray:
    """First `length` points of the forward orbit of x, starting at x."""
    length = int(length)
    if length < 0:
        raise ValueError("length must be non-negative")
    if isinstance(system, FinitePermutation):
        cyc = np.array(_cycle_through(system, int(x)), dtype=np.int64)
        reps = length // cyc.size + 1
        return np.tile(cyc, reps)[:length]
    if isinstance(system, TorusRotation):
        return rotation_orbit(system, x, length)
    if isinstance(system, CatMap):
        pt = _check_torus_point(x, 2)
        xs, ys = catmap_lattice_orbit(to_lattice(pt[0]), to_lattice(pt[1]), length)
        out = np.empty((length, 2), dtype=np.float64)
        out[:, 0] = xs * (1.0 / _LATTICE)
        out[:, 1] = ys * (1.0 / _LATTICE)
        return out
    raise TypeError(f"unsupported system type: {type(system).__name__}")


def catmap_cell_permutation(n: int) -> FinitePermutation:
    """The exact permutation the cat map induces on an n x n grid of cells.

    The integer matrix maps the lattice (i/n, j/n) to itself, so at grid
    resolution n the map acts on cell indices (row-major, i * n + j) as
    (i, j) -> (2i + j mod n, i + j mod n).
    """
    if n < 1:
        raise ValueError("grid resolution must be positive")
    i, j = np.divmod(np.arange(n * n, dtype=np.int64), n)
    sigma = ((2 * i + j) % n) * n + (i + j) % n
    return FinitePermutation(sigma)
