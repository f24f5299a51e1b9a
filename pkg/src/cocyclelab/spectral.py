"""Koopman correlation sequences and weak-mixing statistics.

The composition operator U f = f o T is unitary on L^2, and the correlations
c[n] = <U^n f, f> are the Fourier coefficients of the spectral measure of f.
Everything here estimates those correlations along a single seeded orbit
(a Birkhoff average), then reads spectral structure out of them:

* ``wiener_statistic`` -- the averaged squared modulus (1/L) sum |c[n]|^2 /
  c[0]^2, which tends to the total atomic mass of the spectral measure;
  near 0 means continuous spectrum (weak mixing for mean-zero observables),
  near 1 means the observable sits on an eigenfunction.
* ``spectral_density`` -- a non-negative triangular-weighted (Cesaro)
  density estimate; atoms show up as narrow peaks, continuous spectrum as a
  spread-out profile.
* ``koopman_spectrum_finite`` -- for a permutation the spectrum is exact:
  each cycle of length l contributes all l-th roots of unity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import fft, ifft, next_fast_len

from .cobound import SkewProductSystem, skew_orbit
from .dynsys import (
    CatMap,
    FinitePermutation,
    TorusRotation,
    cycles,
    orbit_points,
)
from .induced import InducedSystem, induced_orbit_samples
from .msets import GridSet, _grid_cell_indices

__all__ = [
    "Observable",
    "torus_character",
    "fiber_sign",
    "grid_function",
    "CorrelationSequence",
    "SpectralDensityEstimate",
    "WeakMixingReport",
    "autocorrelation",
    "wiener_statistic",
    "spectral_density",
    "koopman_spectrum_finite",
    "weak_mixing_experiment",
    "correlation_to_csv",
    "density_to_csv",
]

WM_CONTINUOUS_MAX = 0.05
WM_POINT_MIN = 0.5

LABEL_CONTINUOUS = "continuous-spectrum-consistent"
LABEL_POINT = "point-spectrum-consistent"
LABEL_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Observable:
    """A complex observable evaluated along orbits.

    kind is one of:

    * ``torus-character`` -- f(x) = exp(2 pi i k . x) for an integer vector k,
    * ``fiber-sign``      -- f(x, s) = (-1)^s on a skew product,
    * ``grid-function``   -- f(x) = values[cell(x)] for a fixed grid.

    With ``mean_removed`` set, the empirical orbit mean is subtracted from
    the samples before correlating, so the constant component is gone and
    the Wiener statistic measures only the non-trivial point spectrum.
    """

    kind: str
    k: tuple[int, ...] | None = None
    values: tuple[float, ...] | None = None
    grid_n: int = 0
    grid_d: int = 0
    mean_removed: bool = True

    def label(self) -> str:
        if self.kind == "torus-character":
            return f"torus-character{list(self.k)}"
        if self.kind == "grid-function":
            return f"grid-function(n={self.grid_n},d={self.grid_d})"
        return self.kind


def torus_character(k, mean_removed: bool = True) -> Observable:
    if np.ndim(k) == 0:
        k = (int(k),)
    return Observable(
        kind="torus-character", k=tuple(int(v) for v in k), mean_removed=mean_removed
    )


def fiber_sign(mean_removed: bool = True) -> Observable:
    return Observable(kind="fiber-sign", mean_removed=mean_removed)


def grid_function(n: int, d: int, values, mean_removed: bool = True) -> Observable:
    values = tuple(float(v) for v in values)
    if len(values) != int(n) ** int(d):
        raise ValueError("value table does not match the grid size")
    return Observable(
        kind="grid-function",
        values=values,
        grid_n=int(n),
        grid_d=int(d),
        mean_removed=mean_removed,
    )


@dataclass(frozen=True)
class CorrelationSequence:
    """Estimated correlations c[0..lags]; c[0] is real and bounds the rest."""

    lags: int
    c: np.ndarray
    orbit_length: int
    seed: int


@dataclass(frozen=True)
class SpectralDensityEstimate:
    bins: int
    density: np.ndarray
    total_mass: float


@dataclass(frozen=True)
class WeakMixingReport:
    observable: str
    wm: float
    classification: str
    lags: int
    orbit_length: int
    seed: int


# ---------------------------------------------------------------------------
# sampling observables along orbits


def _evaluate(obs: Observable, pts: np.ndarray, parities: np.ndarray | None) -> np.ndarray:
    if obs.kind == "fiber-sign":
        if parities is None:
            raise ValueError("fiber-sign needs a skew-product orbit")
        return (1.0 - 2.0 * parities).astype(np.complex128)
    if obs.kind == "torus-character":
        coords = np.asarray(pts, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.shape[1] != len(obs.k):
            raise ValueError("character frequency does not match the point dimension")
        phase = coords @ np.asarray(obs.k, dtype=np.float64)
        return np.exp(2j * np.pi * phase)
    if obs.kind == "grid-function":
        table = np.asarray(obs.values)
        if np.issubdtype(np.asarray(pts).dtype, np.integer):
            idx = np.asarray(pts, dtype=np.int64)
        else:
            geom = GridSet(obs.grid_n, obs.grid_d, np.zeros(obs.grid_n**obs.grid_d))
            idx = _grid_cell_indices(geom, np.asarray(pts, dtype=np.float64))
        return table[idx].astype(np.complex128)
    raise ValueError(f"unknown observable kind: {obs.kind!r}")


def _observable_samples(system, obs: Observable, length: int, seed: int) -> np.ndarray:
    if isinstance(system, SkewProductSystem):
        pts, parities = skew_orbit(system, length, seed)
        w = _evaluate(obs, pts, parities)
    elif isinstance(system, InducedSystem):
        pts = induced_orbit_samples(system, length, seed)
        w = _evaluate(obs, pts, None)
    else:
        rng = np.random.default_rng(seed)
        if isinstance(system, FinitePermutation):
            x0 = int(rng.integers(system.n))
        elif isinstance(system, TorusRotation):
            x0 = float(rng.random()) if system.d == 1 else tuple(rng.random(system.d))
        elif isinstance(system, CatMap):
            x0 = tuple(rng.random(2))
        else:
            raise TypeError(f"unsupported system type: {type(system).__name__}")
        pts = orbit_points(system, x0, length)
        w = _evaluate(obs, pts, None)
    if obs.mean_removed:
        w = w - w.mean()
    return w


# ---------------------------------------------------------------------------
# correlations


def autocorrelation(
    system, obs: Observable, orbit_length: int = 1_000_000, lags: int = 4096, seed: int = 0
) -> CorrelationSequence:
    """Birkhoff estimate of c[n] = <U^n f, f> for n = 0..lags.

    c[n] = (1/M) sum_{j<M} f(T^{n+j} x) conj(f(T^j x)) with M = orbit_length
    - lags, computed by FFT cross-correlation over one seeded orbit.
    """
    orbit_length = int(orbit_length)
    lags = int(lags)
    if lags < 1:
        raise ValueError("lags must be positive")
    if orbit_length < 10 * lags:
        raise ValueError("orbit_length must be at least 10 * lags")
    w = _observable_samples(system, obs, orbit_length, seed)
    m = orbit_length - lags
    size = next_fast_len(orbit_length)
    spectrum = fft(w, size) * np.conj(fft(w[:m], size))
    corr = ifft(spectrum)[: lags + 1] / m
    corr[0] = corr[0].real
    return CorrelationSequence(
        lags=lags, c=corr, orbit_length=orbit_length, seed=int(seed)
    )


def wiener_statistic(cs: CorrelationSequence) -> float:
    """(1/L) sum_{n=1}^{L} |c[n]|^2 / c[0]^2; the total atom mass estimate."""
    c0 = float(cs.c[0].real)
    if c0 <= 0.0:
        raise ValueError("c[0] must be positive (constant-zero observable?)")
    tail = cs.c[1:]
    return float(np.mean(np.abs(tail) ** 2) / c0**2)


def spectral_density(cs: CorrelationSequence, bins: int) -> SpectralDensityEstimate:
    """Triangular-weighted spectral mass in each of `bins` frequency boxes.

    The length-L Cesaro polynomial sum_{|n|<L} (1 - |n|/L) c[n] e^{-2 pi i n
    theta} is integrated exactly over every box [b/bins, (b+1)/bins): the
    n-th coefficient picks up the factor kappa_n = (1 - e^{-2 pi i n/bins})
    / (2 pi i n), and one FFT over the residues of n mod bins evaluates all
    boxes at once.  Entries are clipped at zero and sum to about c[0]; an
    atom at frequency theta drops essentially all its mass into the box
    containing theta, while continuous spectrum stays near c[0]/bins per
    box.
    """
    bins = int(bins)
    if bins < 1 or bins > cs.lags:
        raise ValueError("bins must lie in 1..lags")
    ell = cs.lags
    n = np.arange(1, ell)
    kappa = (1.0 - np.exp(-2j * np.pi * n / bins)) / (2j * np.pi * n)
    coeff = (1.0 - n / ell) * cs.c[1:ell] * kappa
    folded = np.zeros(bins, dtype=np.complex128)
    np.add.at(folded, n % bins, coeff)
    mass = 2.0 * fft(folded).real + float(cs.c[0].real) / bins
    density = np.maximum(mass, 0.0)
    return SpectralDensityEstimate(
        bins=bins, density=density, total_mass=float(density.sum())
    )


def koopman_spectrum_finite(perm: FinitePermutation) -> np.ndarray:
    """Exact eigenvalue multiset: the l-th roots of unity for each l-cycle."""
    vals = [
        np.exp(2j * np.pi * np.arange(len(cyc)) / len(cyc)) for cyc in cycles(perm)
    ]
    return np.concatenate(vals)


def weak_mixing_experiment(
    system,
    observables,
    orbit_length: int = 1_000_000,
    lags: int = 4096,
    seed: int = 0,
) -> list[WeakMixingReport]:
    """Wiener-statistic classification for a batch of observables.

    WM below 0.05 is labelled continuous-spectrum-consistent, above 0.5
    point-spectrum-consistent, anything between inconclusive.  Calibrated at
    lags = 4096 over orbits of 10^6 points.
    """
    out = []
    for obs in observables:
        cs = autocorrelation(
            system, obs, orbit_length=orbit_length, lags=lags, seed=seed
        )
        wm = wiener_statistic(cs)
        if wm < WM_CONTINUOUS_MAX:
            label = LABEL_CONTINUOUS
        elif wm > WM_POINT_MIN:
            label = LABEL_POINT
        else:
            label = LABEL_INCONCLUSIVE
        out.append(
            WeakMixingReport(
                observable=obs.label(),
                wm=wm,
                classification=label,
                lags=int(lags),
                orbit_length=int(orbit_length),
                seed=int(seed),
            )
        )
    return out


# ---------------------------------------------------------------------------
# serialization


def correlation_to_csv(cs: CorrelationSequence, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("lag,re,im\n")
        for n in range(cs.lags + 1):
            fh.write(f"{n},{float(cs.c[n].real)!r},{float(cs.c[n].imag)!r}\n")


def density_to_csv(est: SpectralDensityEstimate, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bin,density\n")
        for b in range(est.bins):
            fh.write(f"{b},{float(est.density[b])!r}\n")
