"""Coboundary equations over GF(2) and the skew-product ergodicity test.

A set A is a coboundary of the system T when the indicator equation

    1_A(x) = 1_B(T x) XOR 1_B(x)

has a measurable solution B; we write dB for the right-hand side.  Over a
finite permutation the equation is exactly solvable: restricted to one cycle
the values of B are prefix sums of A along the cycle, and a solution exists
iff A meets every cycle in an even number of points.  The quotient of all
sets by the coboundary subgroup is a GF(2) vector space of dimension equal
to the number of cycles.

For systems without exact cycle structure the statistical route is the skew
product on X x {0, 1},

    (x, s) -> (T x, s XOR 1_A(x)),

which is ergodic precisely when A is not a coboundary.  ``stepin_test``
simulates one seeded orbit of the skew product, bins visits into
(cell, parity) boxes, and reads off a chi-square equidistribution verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .dynsys import (
    CatMap,
    FinitePermutation,
    TorusRotation,
    apply,
    catmap_cell_permutation,
    catmap_lattice_orbit,
    cycles,
    rotation_orbit,
)
from .msets import (
    FiniteSet,
    GridSet,
    IntervalUnion,
    grid_box,
    lattice_cell_index,
    membership,
    membership_array,
    preimage,
    symdiff,
)

__all__ = [
    "CoboundaryCertificate",
    "SkewState",
    "SkewProductSystem",
    "ErgodicityReport",
    "CoboundaryClassification",
    "coboundary_apply",
    "solve_coboundary_finite",
    "cohomology_rank_finite",
    "skew_apply",
    "skew_orbit",
    "stepin_test",
    "classify_coboundary",
    "catmap_challenge",
    "ergodicity_report_to_json",
]

# verdict rule constants; quantile and multipliers are calibration choices
# frozen with the test suite, not tunable knobs
CHI2_CONFIDENCE = 0.995
NONERGODIC_STAT_FACTOR = 10.0
ZERO_BIN_MIRROR_FACTOR = 5.0

VERDICT_ERGODIC = "ergodic-consistent"
VERDICT_NONERGODIC = "non-ergodic"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CoboundaryCertificate:
    """Exact answer for a finite system.

    ``obstruction`` lists (cycle index, parity) for each cycle where A has
    odd intersection; it is empty iff the equation is solvable.  The witness
    is normalised so that B excludes the minimal element of every cycle.
    """

    solvable: bool
    witness: FiniteSet | None
    obstruction: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SkewState:
    point: object
    parity: int


@dataclass(frozen=True)
class SkewProductSystem:
    """The two-point extension of `base` driven by the indicator of `fiber_set`."""

    base: object
    fiber_set: object


@dataclass(frozen=True)
class ErgodicityReport:
    verdict: str
    statistic: float
    threshold: float
    dof: int
    cells: int
    orbit_length: int
    seed: int
    rule: str


@dataclass(frozen=True)
class CoboundaryClassification:
    verdict: str
    report: ErgodicityReport


def coboundary_apply(system, b):
    """dB = T^{-1}(B) symdiff B, the set whose indicator is 1_B(Tx) + 1_B(x)."""
    return symdiff(preimage(system, b), b)


def solve_coboundary_finite(perm: FinitePermutation, a: FiniteSet) -> CoboundaryCertificate:
    """Exact GF(2) solve of dB = A over a finite permutation.

    Along each cycle, starting from its minimal element with B = 0, the
    recurrence B(next) = B(current) XOR A(current) determines B; the cycle
    closes up iff A meets it an even number of times.
    """
    if perm.n != a.n:
        raise ValueError("permutation and set have different universes")
    abits = a.bits.tolist()
    witness = np.zeros(perm.n, dtype=bool)
    obstruction: list[tuple[int, int]] = []
    for ci, cyc in enumerate(cycles(perm)):
        value = 0
        for x in cyc:
            witness[x] = value
            value ^= abits[x]
        if value:
            obstruction.append((ci, 1))
    if obstruction:
        return CoboundaryCertificate(False, None, tuple(obstruction))
    return CoboundaryCertificate(True, FiniteSet(perm.n, witness), ())


def cohomology_rank_finite(perm: FinitePermutation) -> tuple[int, int]:
    """(number of cycles k, dimension n - k of the coboundary subgroup)."""
    k = len(cycles(perm))
    return k, perm.n - k


# ---------------------------------------------------------------------------
# skew product


def skew_apply(skew: SkewProductSystem, state: SkewState) -> SkewState:
    flip = membership(skew.fiber_set, state.point)
    return SkewState(apply(skew.base, state.point), state.parity ^ flip)


def _orbit_and_indicator(system, a, length: int, rng: np.random.Generator):
    """Seeded orbit plus indicator samples; returns (points, memb, bin_source).

    bin_source carries whatever the caller needs to bin points spatially:
    the float orbit for torus systems, integer states for permutations.
    """
    if isinstance(system, FinitePermutation):
        if not isinstance(a, FiniteSet) or a.n != system.n:
            raise ValueError("finite systems pair with finite sets on the same universe")
        x0 = int(rng.integers(system.n))
        from .dynsys import orbit_points

        pts = orbit_points(system, x0, length)
        return pts, a.bits[pts].astype(np.uint8), pts
    if isinstance(system, TorusRotation):
        if system.d == 1 and isinstance(a, (IntervalUnion, GridSet)):
            if isinstance(a, GridSet) and a.d != 1:
                raise ValueError("1-d rotations pair with 1-d sets")
            x0 = float(rng.random())
            xs = rotation_orbit(system, x0, length)
            return xs, membership_array(a, xs), xs
        if system.d == 2 and isinstance(a, GridSet) and a.d == 2:
            x0 = rng.random(2)
            xs = rotation_orbit(system, x0, length)
            return xs, membership_array(a, xs), xs
        raise ValueError("rotation dimension does not match the set representation")
    if isinstance(system, CatMap):
        if not isinstance(a, GridSet) or a.d != 2:
            raise ValueError("the cat map pairs with 2-d grid sets")
        px = int(rng.integers(1 << 53))
        py = int(rng.integers(1 << 53))
        ix, iy = catmap_lattice_orbit(px, py, length)
        memb = a.bits[lattice_cell_index(a, ix, iy)].astype(np.uint8)
        pts = np.stack([ix * 2.0**-53, iy * 2.0**-53], axis=1)
        return pts, memb, (ix, iy)
    raise TypeError(f"unsupported system type: {type(system).__name__}")


def _parities(memb: np.ndarray, s0: int) -> np.ndarray:
    out = np.empty(memb.size, dtype=np.int64)
    out[0] = s0
    if memb.size > 1:
        np.cumsum(memb[:-1], out=out[1:])
        out[1:] += s0
    return out & 1


def skew_orbit(skew: SkewProductSystem, length: int, seed: int):
    """Seeded skew-product orbit as (base points, parity array)."""
    rng = np.random.default_rng(seed)
    pts, memb, _ = _orbit_and_indicator(skew.base, skew.fiber_set, length, rng)
    s0 = int(rng.integers(2))
    return pts, _parities(memb, s0)


def _spatial_bins(system, bin_source, cells: int) -> tuple[np.ndarray, int]:
    """Bin orbit positions into roughly `cells` equal-measure boxes."""
    if isinstance(system, FinitePermutation):
        return np.asarray(bin_source, dtype=np.int64), system.n
    if isinstance(system, TorusRotation) and system.d == 1:
        xs = np.asarray(bin_source)
        return np.minimum((xs * cells).astype(np.int64), cells - 1), cells
    # 2-d torus: side-by-side grid of r x r boxes, r = round(sqrt(cells))
    r = max(1, int(round(np.sqrt(cells))))
    if isinstance(system, CatMap):
        from .msets import _floor_mul_lattice

        ix, iy = bin_source
        return _floor_mul_lattice(ix, r) * r + _floor_mul_lattice(iy, r), r * r
    xs = np.asarray(bin_source)
    bi = np.minimum((xs[:, 0] * r).astype(np.int64), r - 1)
    bj = np.minimum((xs[:, 1] * r).astype(np.int64), r - 1)
    return bi * r + bj, r * r


def _chi_square_verdict(
    counts: np.ndarray, orbit_length: int, dof: int, paired: bool
) -> tuple[str, float, float, str]:
    expected = orbit_length / counts.size
    stat = float((((counts - expected) ** 2) / expected).sum())
    quantile = float(chi2.ppf(CHI2_CONFIDENCE, dof))
    if paired:
        mirror = counts[np.arange(counts.size) ^ 1]
        zero_hit = bool(
            np.any((counts == 0) & (mirror > ZERO_BIN_MIRROR_FACTOR * expected))
        )
        if zero_hit:
            return VERDICT_NONERGODIC, stat, quantile, "zero-bin-with-loaded-mirror"
    if stat > NONERGODIC_STAT_FACTOR * quantile:
        return VERDICT_NONERGODIC, stat, quantile, "statistic-above-10x-quantile"
    if stat < quantile:
        return VERDICT_ERGODIC, stat, quantile, "statistic-below-quantile"
    return VERDICT_INCONCLUSIVE, stat, quantile, "statistic-between-thresholds"


def stepin_test(
    system, a, orbit_length: int = 1_000_000, cells: int = 64, seed: int = 0
) -> ErgodicityReport:
    """Chi-square equidistribution test for the skew product T x_A Z_2.

    One orbit of (x, s) -> (Tx, s XOR 1_A(x)) from a seeded start is binned
    into (cell, parity) boxes against the uniform law.  Verdicts:

    * ``ergodic-consistent``  -- statistic below the 99.5% chi-square quantile,
    * ``non-ergodic``         -- statistic above 10x that quantile, or some
      bin is empty while its parity mirror holds more than 5x the expected
      count,
    * ``inconclusive``        -- anything between.

    For finite permutations the cell partition is the state space itself and
    the `cells` argument is ignored.
    """
    orbit_length = int(orbit_length)
    rng = np.random.default_rng(seed)
    _, memb, bin_source = _orbit_and_indicator(system, a, orbit_length, rng)
    s0 = int(rng.integers(2))
    cell_idx, cells_eff = _spatial_bins(system, bin_source, cells)
    if orbit_length < 10 * cells_eff * 2:
        raise ValueError("orbit_length must be at least 10 * cells * 2")
    parity = _parities(memb, s0)
    counts = np.bincount(cell_idx * 2 + parity, minlength=2 * cells_eff)
    dof = 2 * cells_eff - 1
    verdict, stat, quantile, rule = _chi_square_verdict(
        counts, orbit_length, dof, paired=True
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


def classify_coboundary(
    system, a, orbit_length: int = 1_000_000, cells: int = 64, seed: int = 0
) -> CoboundaryClassification:
    """Statistical coboundary classification via the skew-product dichotomy.

    A non-ergodic skew product is exactly what a coboundary produces, so the
    stepin verdict maps to ``coboundary-consistent`` / ``non-coboundary-
    consistent`` / ``inconclusive``.
    """
    report = stepin_test(system, a, orbit_length=orbit_length, cells=cells, seed=seed)
    if report.verdict == VERDICT_NONERGODIC:
        label = "coboundary-consistent"
    elif report.verdict == VERDICT_ERGODIC:
        label = "non-coboundary-consistent"
    else:
        label = VERDICT_INCONCLUSIVE
    return CoboundaryClassification(label, report)


def ergodicity_report_to_json(report: ErgodicityReport) -> dict:
    return {
        "verdict": report.verdict,
        "statistic": report.statistic,
        "threshold": report.threshold,
        "dof": report.dof,
        "cells": report.cells,
        "orbit_length": report.orbit_length,
        "seed": report.seed,
        "rule": report.rule,
    }


# ---------------------------------------------------------------------------
# cat-map resolution ladder


def catmap_challenge(
    a: float = 0.5,
    b: float = 0.5,
    resolutions=(8, 16, 32, 64, 128),
    seed: int = 0,
    orbit_factor: int = 100,
) -> dict:
    """Study the box [0, a) x [0, b) against the cat map on a resolution ladder.

    At grid resolution n the cat map is an exact permutation of the n*n
    cells, so the coboundary question for the discretised box has an exact
    answer: solvable iff every cycle carries an even number of box cells.
    Each rung reports that answer, the per-cycle obstruction count, and a
    stepin run on the largest cycle, whose verdict must match that cycle's
    parity (odd parity <=> doubled, hence ergodic-consistent).
    """
    if orbit_factor < 20:
        raise ValueError("orbit_factor below the 10 * cells * 2 precondition")
    entries = []
    for n in resolutions:
        n = int(n)
        box = grid_box(n, a, b)
        aset = FiniteSet(n * n, box.bits)
        perm = catmap_cell_permutation(n)
        cert = solve_coboundary_finite(perm, aset)
        cycs = cycles(perm)
        parities = [
            int(np.count_nonzero(aset.bits[np.array(c, dtype=np.int64)]) & 1)
            for c in cycs
        ]
        largest_idx = max(range(len(cycs)), key=lambda i: len(cycs[i]))
        largest = np.array(cycs[largest_idx], dtype=np.int64)
        ell = largest.size
        restricted = FinitePermutation((np.arange(ell) + 1) % ell)
        restricted_set = FiniteSet(ell, aset.bits[largest])
        report = stepin_test(
            restricted,
            restricted_set,
            orbit_length=orbit_factor * ell,
            seed=seed + n,
        )
        doubled = report.verdict == VERDICT_ERGODIC
        consistent = report.verdict != VERDICT_INCONCLUSIVE and doubled == bool(
            parities[largest_idx]
        )
        entries.append(
            {
                "resolution": n,
                "box_cells": int(aset.bits.sum()),
                "cycle_count": len(cycs),
                "odd_cycles": int(sum(parities)),
                "solvable": cert.solvable,
                "probed_cycle_length": int(ell),
                "probed_cycle_parity": parities[largest_idx],
                "stepin": ergodicity_report_to_json(report),
                "consistent": bool(consistent),
            }
        )
    return {
        "a": float(a),
        "b": float(b),
        "seed": int(seed),
        "resolutions": [int(n) for n in resolutions],
        "solvable_by_resolution": [e["solvable"] for e in entries],
        "all_consistent": all(e["consistent"] for e in entries),
        "entries": entries,
    }
