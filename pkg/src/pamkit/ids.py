"""Empirical integrated density of states and spectral-edge fits.

The curve is the disorder average of the volume-normalized eigenvalue
counting function of the box Hamiltonian.  Per-realization eigenvalues are
retained so Laplace transforms are exact Stieltjes sums rather than grid
approximations.  The edge fits quantify the stretched-exponential vanishing
at the spectral bottom: a slope of log(-log N) against log E and a residual
comparison between the plain power-law model and its log-corrected variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .disorder import DistributionSpec, potential_sample
from .lattice import BoxGeometry, build_hamiltonian, full_spectrum
from .seeding import derive_seed


@dataclass(frozen=True)
class IdsCurve:
    """Averaged counting function on an energy grid, plus raw eigenvalues."""

    energies: np.ndarray
    values: np.ndarray
    se: np.ndarray
    n_disorder: int
    geometry: BoxGeometry
    spec_id: str
    seed: int
    eigenvalues: Optional[tuple] = None

    def __post_init__(self):
        if np.any(np.diff(self.energies) <= 0):
            raise ValueError("energy grid must be strictly increasing")
        if np.any(np.diff(self.values) < -1e-12):
            raise ValueError("counting function must be nondecreasing")
        if np.any(self.values < 0) or np.any(self.values > 1 + 1e-12):
            raise ValueError("counting function must lie in [0, 1]")

    @property
    def resolution_floor(self) -> float:
        """Counting level of a single eigenvalue across the whole ensemble."""
        return 1.0 / (self.geometry.n_sites * self.n_disorder)


def empirical_ids(spec: DistributionSpec, geometry: BoxGeometry,
                  energy_grid: Sequence[float], n_disorder: int, seed: int = 0,
                  keep_eigenvalues: bool = True, cap: int = 4096) -> IdsCurve:
    """Average |box|^-1 #{eigenvalues <= E} over disorder realizations."""
    if n_disorder < 2:
        raise ValueError("n_disorder must be >= 2")
    grid = np.asarray(energy_grid, dtype=float)
    vol = geometry.n_sites
    counts = np.zeros((n_disorder, grid.size))
    spectra = []
    for i in range(n_disorder):
        pot = potential_sample(spec, geometry, derive_seed(seed, i))
        H = build_hamiltonian(geometry, pot)
        eigenvalues = full_spectrum(H, cap=cap).eigenvalues
        counts[i] = np.searchsorted(eigenvalues, grid, side="right") / vol
        if keep_eigenvalues:
            spectra.append(eigenvalues)
    mean = counts.mean(axis=0)
    se = counts.std(axis=0, ddof=1) / math.sqrt(n_disorder)
    return IdsCurve(grid, mean, se, n_disorder, geometry, spec.label, seed,
                    tuple(spectra) if keep_eigenvalues else None)


def laplace_of_ids(curve: IdsCurve, t: float) -> float:
    """Stieltjes sum int exp(-E t) dN(E) against the stored eigenvalues.

    Uses the raw per-realization spectra, so the value coincides with the
    volume-normalized heat trace on the same realizations.
    """
    if curve.eigenvalues is None:
        raise ValueError("curve was built without retained eigenvalues")
    if t < 0:
        raise ValueError("t must be >= 0")
    vol = curve.geometry.n_sites
    per = [np.exp(-t * ev).sum() / vol for ev in curve.eigenvalues]
    return float(np.mean(per))


def default_fit_window(curve: IdsCurve, floor_factor: float = 10.0,
                       ceiling: float = 0.1) -> Tuple[float, float]:
    """Window rule for edge fits: counting level in [floor_factor/(vol*n), ceiling].

    The lower cut keeps at least ``floor_factor`` eigenvalue hits behind each
    point (log(-log N) is unstable at the single-count level); the upper cut
    stays below the spectral bulk.
    """
    floor = floor_factor * curve.resolution_floor
    usable = (curve.values >= floor) & (curve.values <= ceiling) & (curve.energies > 0)
    if not np.any(usable):
        raise ValueError("no usable energies between the resolution floor and the bulk")
    es = curve.energies[usable]
    return float(es.min()), float(es.max())


def _fit_points(curve: IdsCurve, window: Tuple[float, float],
                floor_factor: float) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = window
    floor = floor_factor * curve.resolution_floor
    mask = ((curve.energies >= lo) & (curve.energies <= hi)
            & (curve.values >= floor) & (curve.values < 1.0)
            & (curve.energies > 0))
    if mask.sum() < 3:
        raise ValueError("fewer than 3 usable points in the fit window")
    return curve.energies[mask], curve.values[mask]


@dataclass(frozen=True)
class EdgeSlopeFit:
    slope: float
    stderr: float
    n_points: int
    window: Tuple[float, float]


def lifshitz_fit(curve: IdsCurve, window: Tuple[float, float],
                 floor_factor: float = 10.0) -> EdgeSlopeFit:
    """Least-squares slope of log(-log N(E)) against log E over the window."""
    es, ns = _fit_points(curve, window, floor_factor)
    x = np.log(es)
    y = np.log(-np.log(ns))
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return EdgeSlopeFit(float(coeffs[0]), float(math.sqrt(cov[0, 0])),
                        es.size, window)


@dataclass(frozen=True)
class LogCorrectionDiagnostic:
    residual_power: float
    residual_logcorrected: float
    preferred: str
    coeff_power: float
    coeff_logcorrected: float
    n_points: int


def log_correction_diagnostic(curve: IdsCurve, d: int,
                              window: Tuple[float, float],
                              floor_factor: float = 10.0) -> LogCorrectionDiagnostic:
    """Compare log N(E) ~ C E^(-d/2) against C E^(-d/2) log E on the window.

    Each model is linear in its single coefficient, so the least-squares fit
    is a projection; the smaller residual sum of squares wins.
    """
    es, ns = _fit_points(curve, window, floor_factor)
    y = np.log(ns)
    basis_a = es ** (-d / 2.0)
    basis_b = basis_a * np.log(es)
    out = {}
    for name, basis in (("power", basis_a), ("logcorrected", basis_b)):
        coeff = float(np.dot(basis, y) / np.dot(basis, basis))
        resid = float(np.sum((y - coeff * basis) ** 2))
        out[name] = (coeff, resid)
    preferred = "power" if out["power"][1] <= out["logcorrected"][1] else "logcorrected"
    return LogCorrectionDiagnostic(out["power"][1], out["logcorrected"][1],
                                   preferred, out["power"][0],
                                   out["logcorrected"][0], es.size)
