"""Set representations that support symmetric difference, measure, and the
action of the model systems.

Three representations, one per system family:

* ``FiniteSet``    -- subset of {0, ..., n-1} under normalised counting measure,
* ``IntervalUnion``-- finite union of half-open intervals [a, b) in [0, 1),
* ``GridSet``      -- union of lattice cells on a regular grid of the 1- or
  2-torus; cell (i, j) covers [i/n, (i+1)/n) x [j/n, (j+1)/n) and the bit
  vector is row-major with j fastest.

All intervals and cells are half-open, so boundary points belong to exactly
one cell and set algebra is exact.  Together with symmetric difference each
representation is an elementary abelian 2-group, and
``distance(A, B) = measure(symdiff(A, B))`` is the measure metric.
"""

from __future__ import annotations

import numpy as np

from .dynsys import (
    CatMap,
    FinitePermutation,
    TorusRotation,
    catmap_cell_permutation,
)

__all__ = [
    "MERGE_TOL",
    "MAX_INTERVALS",
    "FiniteSet",
    "IntervalUnion",
    "GridSet",
    "symdiff",
    "measure",
    "distance",
    "membership",
    "membership_array",
    "pushforward",
    "preimage",
    "grid_box",
    "rational_union",
    "random_interval_union",
    "random_rational_union",
    "random_grid_set",
    "conditional_bin_array",
    "set_to_json",
    "set_from_json",
]

MERGE_TOL = 1e-12
MAX_INTERVALS = 10**6


class FiniteSet:
    """Subset of {0, ..., n-1}; measure of a point is 1/n."""

    def __init__(self, n: int, bits) -> None:
        n = int(n)
        arr = np.zeros(n, dtype=bool)
        arr[:] = np.asarray(bits, dtype=bool)
        if arr.size != n:
            raise ValueError("bit vector length does not match n")
        arr.setflags(write=False)
        self.n = n
        self.bits = arr

    @classmethod
    def from_indices(cls, n: int, indices) -> "FiniteSet":
        bits = np.zeros(n, dtype=bool)
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError("index outside the universe")
        bits[idx] = True
        return cls(n, bits)

    def indices(self) -> np.ndarray:
        return np.nonzero(self.bits)[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteSet)
            and self.n == other.n
            and bool(np.array_equal(self.bits, other.bits))
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"FiniteSet({self.n}, indices={self.indices().tolist()!r})"


class IntervalUnion:
    """Disjoint sorted union of half-open intervals inside [0, 1).

    The constructor accepts any finite list of [a, b) pairs, takes their
    union, and merges adjacent pieces separated by less than ``MERGE_TOL``.
    A union that would need more than ``MAX_INTERVALS`` pieces is refused.
    """

    def __init__(self, intervals) -> None:
        pairs = [(float(a), float(b)) for a, b in intervals]
        for a, b in pairs:
            if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
                raise ValueError("interval endpoints must lie in [0, 1]")
        pairs = [(a, b) for a, b in pairs if b > a]
        pairs.sort()
        merged: list[tuple[float, float]] = []
        for a, b in pairs:
            if merged and a <= merged[-1][1] + MERGE_TOL:
                prev_a, prev_b = merged[-1]
                merged[-1] = (prev_a, max(prev_b, b))
            else:
                merged.append((a, b))
        if len(merged) > MAX_INTERVALS:
            raise ValueError(
                f"interval capacity exceeded: {len(merged)} > {MAX_INTERVALS}"
            )
        self.intervals: tuple[tuple[float, float], ...] = tuple(merged)
        # flat endpoint array for O(log k) membership
        self._edges = np.array(
            [e for ab in merged for e in ab], dtype=np.float64
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalUnion) and self.intervals == other.intervals

    __hash__ = None

    def __repr__(self) -> str:
        return f"IntervalUnion({list(self.intervals)!r})"


class GridSet:
    """Union of cells of a regular n x ... x n grid on the d-torus, d in {1, 2}."""

    def __init__(self, n: int, d: int, bits) -> None:
        n = int(n)
        d = int(d)
        if d not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        if n < 1:
            raise ValueError("grid resolution must be positive")
        arr = np.zeros(n**d, dtype=bool)
        arr[:] = np.asarray(bits, dtype=bool)
        if arr.size != n**d:
            raise ValueError("bit vector length does not match n**d")
        arr.setflags(write=False)
        self.n = n
        self.d = d
        self.bits = arr

    def cell_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GridSet)
            and self.n == other.n
            and self.d == other.d
            and bool(np.array_equal(self.bits, other.bits))
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"GridSet(n={self.n}, d={self.d}, cells={self.cell_count()})"


# ---------------------------------------------------------------------------
# group structure and measure


def _check_same_universe(a, b) -> None:
    if type(a) is not type(b):
        raise ValueError("sets come from different representations")
    if isinstance(a, FiniteSet) and a.n != b.n:
        raise ValueError("finite sets live on different universes")
    if isinstance(a, GridSet) and (a.n != b.n or a.d != b.d):
        raise ValueError("grid sets live on different grids")


def symdiff(a, b):
    """Symmetric difference, the group operation of each representation."""
    _check_same_universe(a, b)
    if isinstance(a, FiniteSet):
        return FiniteSet(a.n, a.bits ^ b.bits)
    if isinstance(a, GridSet):
        return GridSet(a.n, a.d, a.bits ^ b.bits)
    if isinstance(a, IntervalUnion):
        edges = np.unique(
            np.concatenate((a._edges, b._edges, [0.0, 1.0]))
        )
        mids = (edges[:-1] + edges[1:]) / 2.0
        inside = membership_array(a, mids) ^ membership_array(b, mids)
        out = [
            (float(edges[i]), float(edges[i + 1]))
            for i in np.nonzero(inside)[0]
        ]
        return IntervalUnion(out)
    raise TypeError(f"unsupported set type: {type(a).__name__}")


def measure(a) -> float:
    if isinstance(a, FiniteSet):
        return float(np.count_nonzero(a.bits)) / a.n
    if isinstance(a, IntervalUnion):
        return float(sum(b - x for x, b in a.intervals))
    if isinstance(a, GridSet):
        return float(np.count_nonzero(a.bits)) / a.n**a.d
    raise TypeError(f"unsupported set type: {type(a).__name__}")


def distance(a, b) -> float:
    """Measure of the symmetric difference; a metric modulo null sets."""
    return measure(symdiff(a, b))


# ---------------------------------------------------------------------------
# membership


def _floor_mul_lattice(p: np.ndarray, n: int) -> np.ndarray:
    """floor(p * n / 2**53) for 0 <= p < 2**53 without int64 overflow.

    2**53 = 2**27 * 2**26, and x // (a*b) == (x // a) // b exactly, so the
    product is split into high and low halves that both fit in 64 bits.
    """
    hi = p >> 27
    lo = p & ((1 << 27) - 1)
    return (hi * n + ((lo * n) >> 27)) >> 26


def _to_lattice_array(xs: np.ndarray) -> np.ndarray:
    p = np.rint(np.asarray(xs, dtype=np.float64) * 2.0**53).astype(np.int64)
    return np.clip(p, 0, (1 << 53) - 1)


def _grid_cell_indices(g: GridSet, xs: np.ndarray) -> np.ndarray:
    # snap to the 2**-53 lattice first so cell assignment matches the exact
    # integer orbit engines bit for bit
    if g.d == 1:
        return _floor_mul_lattice(_to_lattice_array(xs), g.n)
    xs = np.atleast_2d(xs)
    i = _floor_mul_lattice(_to_lattice_array(xs[:, 0]), g.n)
    j = _floor_mul_lattice(_to_lattice_array(xs[:, 1]), g.n)
    return i * g.n + j


def membership_array(a, xs) -> np.ndarray:
    """Vectorised indicator values, uint8 0/1."""
    if isinstance(a, FiniteSet):
        idx = np.asarray(xs, dtype=np.int64)
        return a.bits[idx].astype(np.uint8)
    if isinstance(a, IntervalUnion):
        pos = np.searchsorted(a._edges, np.asarray(xs, dtype=np.float64), side="right")
        return (pos & 1).astype(np.uint8)
    if isinstance(a, GridSet):
        return a.bits[_grid_cell_indices(a, np.asarray(xs, dtype=np.float64))].astype(
            np.uint8
        )
    raise TypeError(f"unsupported set type: {type(a).__name__}")


def membership(a, x) -> int:
    """Indicator value of a single point (0 or 1, half-open convention)."""
    if isinstance(a, FiniteSet):
        return int(a.bits[int(x)])
    if isinstance(a, IntervalUnion):
        return int(membership_array(a, np.array([float(x)]))[0])
    if isinstance(a, GridSet):
        pt = np.array([x] if a.d == 1 else [tuple(x)], dtype=np.float64)
        return int(membership_array(a, pt)[0])
    raise TypeError(f"unsupported set type: {type(a).__name__}")


def lattice_cell_index(g: GridSet, px: np.ndarray, py: np.ndarray | None = None) -> np.ndarray:
    """Grid cell index of exact lattice coordinates p / 2**53 (no float round-off)."""
    ix = _floor_mul_lattice(px, g.n)
    if g.d == 1:
        return ix
    return ix * g.n + _floor_mul_lattice(py, g.n)


# ---------------------------------------------------------------------------
# system action


_CELL_PERM_CACHE: dict[int, FinitePermutation] = {}


def _cell_perm(n: int) -> FinitePermutation:
    if n not in _CELL_PERM_CACHE:
        _CELL_PERM_CACHE[n] = catmap_cell_permutation(n)
    return _CELL_PERM_CACHE[n]


def _translate_intervals(a: IntervalUnion, shift: float) -> IntervalUnion:
    out: list[tuple[float, float]] = []
    for lo, hi in a.intervals:
        lo2 = (lo + shift) % 1.0
        hi2 = (hi + shift) % 1.0
        if hi2 > lo2:
            out.append((lo2, hi2))
        else:
            out.append((lo2, 1.0))
            if hi2 > 0.0:
                out.append((0.0, hi2))
    return IntervalUnion(out)


def pushforward(system, a):
    """The image set T(A).  Exact for every supported pair."""
    if isinstance(system, FinitePermutation) and isinstance(a, FiniteSet):
        if system.n != a.n:
            raise ValueError("permutation and set have different universes")
        bits = np.zeros(a.n, dtype=bool)
        bits[system.sigma] = a.bits
        return FiniteSet(a.n, bits)
    if isinstance(system, TorusRotation) and isinstance(a, IntervalUnion):
        if system.d != 1:
            raise ValueError("interval unions pair with 1-d rotations only")
        return _translate_intervals(a, system.alpha[0])
    if isinstance(system, CatMap) and isinstance(a, GridSet):
        if a.d != 2:
            raise ValueError("the cat map acts on 2-d grid sets")
        perm = _cell_perm(a.n)
        bits = np.zeros(a.bits.size, dtype=bool)
        bits[perm.sigma] = a.bits
        return GridSet(a.n, 2, bits)
    raise ValueError(
        f"incompatible pair: {type(system).__name__} acting on {type(a).__name__}"
    )


def preimage(system, a):
    """The inverse image T^{-1}(A) = {x : T(x) in A}."""
    if isinstance(system, FinitePermutation) and isinstance(a, FiniteSet):
        if system.n != a.n:
            raise ValueError("permutation and set have different universes")
        return FiniteSet(a.n, a.bits[system.sigma])
    if isinstance(system, TorusRotation) and isinstance(a, IntervalUnion):
        if system.d != 1:
            raise ValueError("interval unions pair with 1-d rotations only")
        return _translate_intervals(a, -system.alpha[0] % 1.0)
    if isinstance(system, CatMap) and isinstance(a, GridSet):
        if a.d != 2:
            raise ValueError("the cat map acts on 2-d grid sets")
        perm = _cell_perm(a.n)
        return GridSet(a.n, 2, a.bits[perm.sigma])
    raise ValueError(
        f"incompatible pair: {type(system).__name__} acting on {type(a).__name__}"
    )


# ---------------------------------------------------------------------------
# constructors


def grid_box(n: int, a: float, b: float | None = None) -> GridSet:
    """The box [0, a) (d=1) or [0, a) x [0, b) (d=2) on an n-grid.

    The side lengths must be integer multiples of 1/n, so the box is exactly
    a union of cells.
    """

    def side_cells(length: float) -> int:
        cells = length * n
        if abs(cells - round(cells)) > 1e-9:
            raise ValueError(f"side {length} is not a multiple of 1/{n}")
        c = int(round(cells))
        if not 0 <= c <= n:
            raise ValueError("box side outside [0, 1]")
        return c

    ca = side_cells(a)
    if b is None:
        bits = np.zeros(n, dtype=bool)
        bits[:ca] = True
        return GridSet(n, 1, bits)
    cb = side_cells(b)
    bits = np.zeros((n, n), dtype=bool)
    bits[:ca, :cb] = True
    return GridSet(n, 2, bits.reshape(-1))


def rational_union(denominator: int, cells) -> IntervalUnion:
    """Union of the intervals [c/q, (c+1)/q) for the given cell indices."""
    q = int(denominator)
    if q < 1:
        raise ValueError("denominator must be positive")
    pairs = []
    for c in cells:
        c = int(c)
        if not 0 <= c < q:
            raise ValueError("cell index outside the denominator range")
        pairs.append((c / q, (c + 1) / q))
    return IntervalUnion(pairs)


def random_interval_union(rng: np.random.Generator, pieces: int) -> IntervalUnion:
    """Random union of `pieces` disjoint intervals (sorted uniform endpoints)."""
    cuts = np.sort(rng.random(2 * int(pieces)))
    return IntervalUnion([(cuts[2 * i], cuts[2 * i + 1]) for i in range(int(pieces))])


def random_rational_union(
    rng: np.random.Generator,
    denominator_range: tuple[int, int] = (4, 16),
    fill_range: tuple[float, float] = (0.2, 0.8),
) -> IntervalUnion:
    """Random union of grid intervals k/q with measure inside fill_range."""
    q = int(rng.integers(denominator_range[0], denominator_range[1] + 1))
    lo = max(1, int(np.ceil(fill_range[0] * q)))
    hi = min(q - 1, int(np.floor(fill_range[1] * q)))
    k = int(rng.integers(lo, max(lo, hi) + 1))
    chosen = rng.choice(q, size=k, replace=False)
    return rational_union(q, sorted(int(c) for c in chosen))


def random_grid_set(
    rng: np.random.Generator, n: int, d: int, density: float = 0.5
) -> GridSet:
    bits = rng.random(int(n) ** int(d)) < float(density)
    return GridSet(n, d, bits)


# ---------------------------------------------------------------------------
# conditional binning (used by induced-map equidistribution tests)


def conditional_bin_array(a, xs, cells: int) -> np.ndarray:
    """Bin points of A into `cells` pieces of equal conditional measure.

    Points must belong to A.  For interval unions the conditional CDF is
    piecewise linear; for finite and grid sets each element or cell of A
    carries equal conditional mass and is ranked in index order.
    """
    cells = int(cells)
    if isinstance(a, IntervalUnion):
        if not a.intervals:
            raise ValueError("cannot bin against an empty set")
        starts = np.array([lo for lo, _ in a.intervals])
        lens = np.array([hi - lo for lo, hi in a.intervals])
        cum = np.concatenate(([0.0], np.cumsum(lens)))
        total = cum[-1]
        xs = np.asarray(xs, dtype=np.float64)
        k = np.searchsorted(starts, xs, side="right") - 1
        frac = (cum[k] + (xs - starts[k])) / total
        return np.minimum((frac * cells).astype(np.int64), cells - 1)
    if isinstance(a, (FiniteSet, GridSet)):
        member = np.nonzero(a.bits)[0]
        if member.size == 0:
            raise ValueError("cannot bin against an empty set")
        rank = np.full(a.bits.size, -1, dtype=np.int64)
        rank[member] = np.arange(member.size)
        if isinstance(a, FiniteSet):
            idx = np.asarray(xs, dtype=np.int64)
        else:
            idx = _grid_cell_indices(a, np.asarray(xs, dtype=np.float64))
        r = rank[idx]
        if (r < 0).any():
            raise ValueError("point outside the conditioning set")
        return (r * cells) // member.size
    raise TypeError(f"unsupported set type: {type(a).__name__}")


# ---------------------------------------------------------------------------
# serialization


def _bits_to_hex(bits: np.ndarray) -> str:
    """Hex encoding of a bit vector; bit i contributes 2**i (LSB first)."""
    raw = np.packbits(bits.astype(np.uint8), bitorder="little").tobytes()
    value = int.from_bytes(raw, "little")
    width = max(1, (bits.size + 3) // 4)
    return format(value, "x").zfill(width)


def _hex_to_bits(text: str, n: int) -> np.ndarray:
    value = int(text, 16)
    if value >> n:
        raise ValueError("hex bitstring longer than the universe")
    bits = np.zeros(n, dtype=bool)
    for i in range(n):
        bits[i] = (value >> i) & 1
    return bits


def set_to_json(a) -> dict:
    if isinstance(a, FiniteSet):
        return {"kind": "finite", "n": a.n, "bits": _bits_to_hex(a.bits)}
    if isinstance(a, IntervalUnion):
        return {"kind": "intervals", "intervals": [list(p) for p in a.intervals]}
    if isinstance(a, GridSet):
        return {"kind": "grid", "n": a.n, "d": a.d, "bits": _bits_to_hex(a.bits)}
    raise TypeError(f"unsupported set type: {type(a).__name__}")


def set_from_json(obj: dict):
    kind = obj.get("kind")
    if kind == "finite":
        return FiniteSet(obj["n"], _hex_to_bits(obj["bits"], int(obj["n"])))
    if kind == "intervals":
        return IntervalUnion([tuple(p) for p in obj["intervals"]])
    if kind == "grid":
        n, d = int(obj["n"]), int(obj["d"])
        return GridSet(n, d, _hex_to_bits(obj["bits"], n**d))
    raise ValueError(f"unknown set kind: {kind!r}")
