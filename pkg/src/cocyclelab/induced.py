"""First-return (induced) maps and return-time statistics.

For x in a positive-measure set A, the return time is the least t >= 1 with
T^t(x) in A, and the induced map sends x to that landing point.  Two checks
anchor the machinery: the mean return time over A equals 1 / measure(A)
(the classical return-time identity, the same 1/measure(A) factor that
rescales entropy under inducing), and the square of the induced map is
ergodic exactly when A is not a coboundary, which gives an independent
statistical route to the coboundary question.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cobound import (
    ErgodicityReport,
    _chi_square_verdict,
)
from .dynsys import (
    CatMap,
    FinitePermutation,
    TorusRotation,
    apply,
    catmap_lattice_orbit,
    cycles,
    rotation_orbit,
)
from .msets import (
    FiniteSet,
    GridSet,
    IntervalUnion,
    conditional_bin_array,
    lattice_cell_index,
    measure,
    membership,
    membership_array,
)

__all__ = [
    "CapExceededError",
    "SamplingError",
    "ReturnRecord",
    "ReturnStats",
    "InducedSystem",
    "default_cap",
    "induced_apply",
    "induced_orbit",
    "sample_points",
    "return_time_stats",
    "ta2_ergodicity_experiment",
    "induced_orbit_samples",
    "return_stats_to_csv",
    "return_stats_summary",
]

REJECTION_BUDGET = 10**6
_LATTICE = 1 << 53


class CapExceededError(RuntimeError):
    """No return observed within the step cap."""


class SamplingError(RuntimeError):
    """Rejection sampling produced no acceptances within the draw budget."""


@dataclass(frozen=True)
class ReturnRecord:
    point: object
    return_time: int
    next: object


@dataclass(frozen=True)
class ReturnStats:
    count: int
    mean: float
    histogram: dict
    cap_hits: int
    seed: int


@dataclass(frozen=True)
class InducedSystem:
    """The first-return system of `base` on `subset`, for spectral experiments."""

    base: object
    subset: object
    cap: int | None = None


def default_cap(a) -> int:
    """Step cap scaled to the expected return time 1/measure(A)."""
    m = measure(a)
    if m <= 0.0:
        raise ValueError("cannot induce on a null set")
    return max(10**6, int(np.ceil(100.0 / m)))


def induced_apply(system, a, x, cap: int | None = None) -> ReturnRecord:
    """First return of x to A; raises CapExceededError past the cap."""
    if not membership(a, x):
        raise ValueError("the start point does not belong to A")
    cap = default_cap(a) if cap is None else int(cap)
    y = x
    for t in range(1, cap + 1):
        y = apply(system, y)
        if membership(a, y):
            return ReturnRecord(x, t, y)
    raise CapExceededError(f"no return within {cap} steps")


def induced_orbit(system, a, x, steps: int, cap: int | None = None) -> list:
    """The first `steps` points of the induced-map orbit, starting at x."""
    steps = int(steps)
    out: list = []
    y = x
    for _ in range(steps):
        out.append(y)
        y = induced_apply(system, a, y, cap=cap).next
    return out


# ---------------------------------------------------------------------------
# sampling


def _rejection(rng_draw, accept, count: int):
    """Generic rejection loop; fails after REJECTION_BUDGET fruitless draws."""
    kept = []
    collected = 0
    fruitless = 0
    batch = max(4096, 2 * count)
    while collected < count:
        cand = rng_draw(batch)
        ok = accept(cand)
        sel = cand[ok] if cand.ndim == 1 else cand[ok, :]
        if sel.shape[0] == 0:
            fruitless += batch
            if fruitless >= REJECTION_BUDGET:
                raise SamplingError(
                    f"no acceptances in {fruitless} draws; is the set null?"
                )
        else:
            fruitless = 0
        kept.append(sel)
        collected += sel.shape[0]
    merged = np.concatenate(kept)
    return merged[:count]


def sample_points(a, count: int, rng: np.random.Generator):
    """Uniform points of A by rejection from the ambient space."""
    count = int(count)
    if isinstance(a, FiniteSet):
        return _rejection(
            lambda k: rng.integers(a.n, size=k),
            lambda xs: a.bits[xs],
            count,
        )
    if isinstance(a, IntervalUnion) or (isinstance(a, GridSet) and a.d == 1):
        return _rejection(
            lambda k: rng.random(k),
            lambda xs: membership_array(a, xs).astype(bool),
            count,
        )
    if isinstance(a, GridSet) and a.d == 2:
        return _rejection(
            lambda k: rng.random((k, 2)),
            lambda xs: membership_array(a, xs).astype(bool),
            count,
        )
    raise TypeError(f"unsupported set type: {type(a).__name__}")


def _sample_lattice(a: GridSet, count: int, rng: np.random.Generator):
    """Uniform 2**-53 lattice points of a 2-d grid set (exact membership)."""
    def draw(k):
        return rng.integers(_LATTICE, size=(k, 2), dtype=np.int64)

    def accept(ps):
        return a.bits[lattice_cell_index(a, ps[:, 0], ps[:, 1])]

    return _rejection(draw, accept, count)


# ---------------------------------------------------------------------------
# batched return times


def _batch_returns(system, a, rng, samples: int, cap: int):
    """Return times for a batch of sampled start points (vectorised per system)."""
    times = np.zeros(samples, dtype=np.int64)
    if isinstance(system, FinitePermutation):
        if not isinstance(a, FiniteSet) or a.n != system.n:
            raise ValueError("finite systems pair with finite sets on the same universe")
        cur = sample_points(a, samples, rng).astype(np.int64)
        idx = np.arange(samples)
        t = 0
        while idx.size and t < cap:
            t += 1
            cur = system.sigma[cur]
            hit = a.bits[cur]
            times[idx[hit]] = t
            idx, cur = idx[~hit], cur[~hit]
        return times, idx
    if isinstance(system, TorusRotation) and system.d == 1:
        if isinstance(a, GridSet) and a.d != 1:
            raise ValueError("1-d rotations pair with 1-d sets")
        alpha = system.alpha[0]
        cur = sample_points(a, samples, rng)
        idx = np.arange(samples)
        t = 0
        while idx.size and t < cap:
            t += 1
            cur = (cur + alpha) % 1.0
            hit = membership_array(a, cur).astype(bool)
            times[idx[hit]] = t
            idx, cur = idx[~hit], cur[~hit]
        return times, idx
    if isinstance(system, CatMap):
        if not isinstance(a, GridSet) or a.d != 2:
            raise ValueError("the cat map pairs with 2-d grid sets")
        pts = _sample_lattice(a, samples, rng)
        px, py = pts[:, 0].copy(), pts[:, 1].copy()
        idx = np.arange(samples)
        mask = np.int64(_LATTICE - 1)
        t = 0
        while idx.size and t < cap:
            t += 1
            px, py = (2 * px + py) & mask, (px + py) & mask
            hit = a.bits[lattice_cell_index(a, px, py)]
            times[idx[hit]] = t
            idx, px, py = idx[~hit], px[~hit], py[~hit]
        return times, idx
    # generic scalar fallback
    starts = sample_points(a, samples, rng)
    pending = []
    for i in range(samples):
        x = starts[i] if starts.ndim == 1 else tuple(starts[i])
        try:
            times[i] = induced_apply(system, a, x, cap=cap).return_time
        except CapExceededError:
            pending.append(i)
    return times, np.array(pending, dtype=np.int64)


def return_time_stats(
    system, a, samples: int = 100_000, cap: int | None = None, seed: int = 0
) -> ReturnStats:
    """Return-time distribution over uniformly sampled start points in A.

    Starts that fail to return within the cap are counted in ``cap_hits``
    and excluded from the mean and the histogram.
    """
    samples = int(samples)
    cap = default_cap(a) if cap is None else int(cap)
    rng = np.random.default_rng(seed)
    times, missed = _batch_returns(system, a, rng, samples, cap)
    ok = np.ones(samples, dtype=bool)
    ok[missed] = False
    good = times[ok]
    values, freq = np.unique(good, return_counts=True)
    hist = {int(v): int(c) for v, c in zip(values, freq)}
    mean = float(good.mean()) if good.size else float("nan")
    return ReturnStats(
        count=int(good.size),
        mean=mean,
        histogram=hist,
        cap_hits=int(missed.size),
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# induced orbits, vectorised


def _member_sequence_rotation(rot, a, x0: float, count: int, max_base: int):
    alpha_chunk = 1 << 20
    out = []
    collected = 0
    offset = 0
    while collected < count and offset < max_base:
        xs = rotation_orbit(rot, x0, alpha_chunk, offset=offset)
        sel = xs[membership_array(a, xs).astype(bool)]
        out.append(sel)
        collected += sel.size
        offset += alpha_chunk
    if collected < count:
        raise CapExceededError("ran out of base-orbit budget collecting returns")
    return np.concatenate(out)[:count]


def _member_sequence_catmap(a, px: int, py: int, count: int, max_base: int):
    chunk = 1 << 19
    out = []
    collected = 0
    base = 0
    mask = _LATTICE - 1
    while collected < count and base < max_base:
        ix, iy = catmap_lattice_orbit(px, py, chunk)
        memb = a.bits[lattice_cell_index(a, ix, iy)]
        out.append(np.stack([ix[memb], iy[memb]], axis=1))
        collected += int(memb.sum())
        last_x, last_y = int(ix[-1]), int(iy[-1])
        px, py = (2 * last_x + last_y) & mask, (last_x + last_y) & mask
        base += chunk
    if collected < count:
        raise CapExceededError("ran out of base-orbit budget collecting returns")
    return np.concatenate(out)[:count] * 2.0**-53


def _induced_permutation(perm: FinitePermutation, a: FiniteSet) -> np.ndarray:
    """First-return map of a finite permutation as a permutation of A's ranks."""
    members = np.nonzero(a.bits)[0]
    rank = {int(x): i for i, x in enumerate(members)}
    ta = np.empty(members.size, dtype=np.int64)
    abits = a.bits
    for cyc in cycles(perm):
        ms = [x for x in cyc if abits[x]]
        for i, x in enumerate(ms):
            ta[rank[x]] = rank[ms[(i + 1) % len(ms)]]
    return ta


def induced_orbit_samples(isys: InducedSystem, count: int, seed: int) -> np.ndarray:
    """Seeded orbit of the induced map, as an array of `count` points of A."""
    count = int(count)
    rng = np.random.default_rng(seed)
    system, a = isys.base, isys.subset
    m = measure(a)
    max_base = max(10**6, int(np.ceil(20.0 * count / max(m, 1e-12))))
    if isinstance(system, FinitePermutation):
        members = np.nonzero(a.bits)[0]
        if members.size == 0:
            raise ValueError("cannot induce on an empty set")
        ta = _induced_permutation(system, a)
        start = int(rng.choice(members.size))
        orbit = np.empty(count, dtype=np.int64)
        r = start
        for i in range(count):
            orbit[i] = members[r]
            r = int(ta[r])
        return orbit
    if isinstance(system, TorusRotation) and system.d == 1:
        x0 = float(sample_points(a, 1, rng)[0])
        return _member_sequence_rotation(system, a, x0, count, max_base)
    if isinstance(system, CatMap):
        p0 = _sample_lattice(a, 1, rng)
        return _member_sequence_catmap(a, int(p0[0, 0]), int(p0[0, 1]), count, max_base)
    raise TypeError(f"unsupported base system: {type(system).__name__}")


# ---------------------------------------------------------------------------
# ergodicity of the squared induced map


def ta2_ergodicity_experiment(
    system, a, orbit_length: int = 250_000, cells: int = 64, seed: int = 0
) -> ErgodicityReport:
    """Equidistribution test for the SQUARE of the induced map on A.

    One seeded orbit of T_A^2 is binned into `cells` boxes of equal
    conditional measure inside A and tested against uniformity with the same
    chi-square thresholds as the skew-product test.  When A is a coboundary
    the induced map alternates between two halves of A, so its square is
    stuck in one half and the verdict is non-ergodic; when A is not a
    coboundary the square equidistributes.

    For finite systems the bins are the elements of A and `cells` is ignored.
    """
    orbit_length = int(orbit_length)
    rng = np.random.default_rng(seed)
    if isinstance(system, FinitePermutation):
        if not isinstance(a, FiniteSet) or a.n != system.n:
            raise ValueError("finite systems pair with finite sets on the same universe")
        members = np.nonzero(a.bits)[0]
        if members.size == 0:
            raise ValueError("cannot induce on an empty set")
        cells_eff = int(members.size)
        if orbit_length < 10 * cells_eff * 2:
            raise ValueError("orbit_length must be at least 10 * cells * 2")
        ta = _induced_permutation(system, a)
        ta2 = ta[ta]
        start = int(rng.choice(members.size))
        cyc = [start]
        r = int(ta2[start])
        while r != start:
            cyc.append(r)
            r = int(ta2[r])
        cyc_arr = np.array(cyc, dtype=np.int64)
        reps = orbit_length // cyc_arr.size + 1
        ranks = np.tile(cyc_arr, reps)[:orbit_length]
        counts = np.bincount(ranks, minlength=cells_eff)
    else:
        cells_eff = int(cells)
        if isinstance(a, GridSet):
            # a grid set can fill at most one conditional bin per member cell
            cells_eff = min(cells_eff, int(a.bits.sum()))
        if orbit_length < 10 * cells_eff * 2:
            raise ValueError("orbit_length must be at least 10 * cells * 2")
        isys = InducedSystem(system, a)
        seq = induced_orbit_samples(isys, 2 * orbit_length, seed)
        sq = seq[::2][:orbit_length]
        bins = conditional_bin_array(a, sq, cells_eff)
        counts = np.bincount(bins, minlength=cells_eff)
    dof = cells_eff - 1
    verdict, stat, quantile, rule = _chi_square_verdict(
        counts, orbit_length, dof, paired=False
    )
    return ErgodicityReport(
        verdict=verdict,
        statistic=stat,
        threshold=quantile,
        dof=dof,
        cells=cells_eff,
        orbit_length=orbit_length,
        seed=int(seed),
        rule=rule,
    )


# ---------------------------------------------------------------------------
# serialization


def return_stats_to_csv(stats: ReturnStats, path) -> None:
    """Write the return-time histogram as (return_time, count) rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("return_time,count\n")
        for t in sorted(stats.histogram):
            fh.write(f"{t},{stats.histogram[t]}\n")


def return_stats_summary(stats: ReturnStats) -> dict:
    return {
        "mean": stats.mean,
        "count": stats.count,
        "cap_hits": stats.cap_hits,
        "seed": stats.seed,
    }
