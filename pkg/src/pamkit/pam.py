"""Heat semigroup on a disordered box and its annealed averages.

``solve_pam`` propagates the all-ones initial condition through exp(-tH) with
a Lanczos (Krylov) matrix-exponential action under step-halving error
control.  ``feynman_kac_mc`` estimates the same quantity pathwise with a
continuous-time walk: total jump rate 2d, uniform neighbor choice, and the
potential integrated exactly along the piecewise-constant trajectory.  The
annealed estimators average either quantity over disorder realizations with
jackknife errors.

Only the first annealed moment is implemented: higher moments reduce to the
first one at summed times through the product identity
< u(t,0) u(s,0) > = < u(t+s,0) >.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .disorder import DistributionSpec, potential_sample
from .lattice import (BoxGeometry, HamiltonianOperator, NonConvergenceError,
                      PotentialSample, build_hamiltonian, full_spectrum)
from .seeding import derive_rng, derive_seed

KILLED = "killed"
FREE = "free"


@dataclass(frozen=True)
class PamSolution:
    """Field u(., t) on the box with a solver tag and error estimate."""

    u: np.ndarray
    t: float
    method: str
    error_estimate: float
    steps: int


@dataclass(frozen=True)
class AnnealedEstimate:
    """Mean/standard-error record; arrays when evaluated on a time grid."""

    t: Union[float, np.ndarray]
    mean: Union[float, np.ndarray]
    se: Union[float, np.ndarray]
    n_disorder: int
    n_paths: int
    seed: int
    method: str


def _lanczos_expm_step(matrix, v: np.ndarray, dt: float, m: int) -> np.ndarray:
    """Approximate expm(-dt * H) v in an m-dimensional Krylov space.

    Full reorthogonalization (two Gram-Schmidt passes) keeps the basis clean;
    a happy breakdown truncates early, in which case the result is exact up
    to roundoff.
    """
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        return np.zeros_like(v)
    n = v.size
    m = min(m, n)
    V = np.zeros((n, m))
    alpha = np.zeros(m)
    beta = np.zeros(max(m - 1, 0))
    V[:, 0] = v / norm_v
    used = m
    for j in range(m):
        w = matrix @ V[:, j]
        alpha[j] = float(V[:, j] @ w)
        w = w - alpha[j] * V[:, j]
        if j > 0:
            w = w - beta[j - 1] * V[:, j - 1]
        for _ in range(2):
            w = w - V[:, :j + 1] @ (V[:, :j + 1].T @ w)
        if j + 1 == m:
            break
        b = float(np.linalg.norm(w))
        if b <= 1e-13 * max(1.0, abs(alpha[j])):
            used = j + 1
            break
        beta[j] = b
        V[:, j + 1] = w / b
    if used == 1:
        coef = np.array([math.exp(-dt * alpha[0])])
    else:
        vals, vecs = eigh_tridiagonal(alpha[:used], beta[:used - 1])
        coef = vecs @ (np.exp(-dt * vals) * vecs[0, :])
    return norm_v * (V[:, :used] @ coef)


def expm_action(H: HamiltonianOperator, v: np.ndarray, t: float,
                steps: int = 1, krylov_dim: int = 40) -> np.ndarray:
    """exp(-tH) v by ``steps`` equal Krylov substeps."""
    if t == 0.0:
        return np.asarray(v, dtype=float).copy()
    dt = t / steps
    u = np.asarray(v, dtype=float)
    for _ in range(steps):
        u = _lanczos_expm_step(H.matrix, u, dt, krylov_dim)
    return u


def solve_pam(H: HamiltonianOperator, t: float, tol: float = 1e-8,
              krylov_dim: int = 40, max_halvings: int = 24) -> PamSolution:
    """u(., t) = exp(-tH) 1 with step-halving control in the max norm.

    The step count doubles until two consecutive refinements differ by at
    most ``tol``; the finer solution is returned with that difference as the
    error estimate.  Raises :class:`NonConvergenceError` when the halving
    budget runs out.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if tol <= 0:
        raise ValueError("tol must be positive")
    ones = np.ones(H.dim)
    if t == 0.0:
        return PamSolution(ones, 0.0, "integrator", 0.0, 0)
    steps = 1
    coarse = expm_action(H, ones, t, steps, krylov_dim)
    for _ in range(max_halvings):
        fine = expm_action(H, ones, t, 2 * steps, krylov_dim)
        err = float(np.max(np.abs(fine - coarse)))
        if err <= tol:
            return PamSolution(fine, t, "integrator", err, 2 * steps)
        steps *= 2
        coarse = fine
    raise NonConvergenceError(
        f"step-halving budget exhausted at {2 * steps} steps (error {err:.3e} > tol {tol:.3e})")


def _as_potential_values(potential, geometry: BoxGeometry) -> np.ndarray:
    if isinstance(potential, PotentialSample):
        values = potential.values
    else:
        values = np.asarray(potential, dtype=float)
    if values.shape != (geometry.n_sites,):
        raise ValueError("potential does not match box site count")
    return values


def feynman_kac_mc(potential, geometry: BoxGeometry, x0, t: float,
                   n_paths: int, seed: int, mode: str = KILLED) -> AnnealedEstimate:
    """Pathwise estimate of u(x0, t) = E[exp(-int V)] for one potential.

    Walks jump at total rate 2d with uniform neighbor choice and accumulate
    the potential exactly between jump epochs.  In ``killed`` mode a step out
    of the box zeroes the path (the box-restricted quantity); in ``free``
    mode the walk continues on the full lattice with zero potential outside.
    """
    if mode not in (KILLED, FREE):
        raise ValueError(f"unknown mode {mode!r}")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    values = _as_potential_values(potential, geometry)
    d, n = geometry.d, geometry.n
    start = np.asarray(geometry.site_coords(x0) if np.isscalar(x0) else x0, dtype=np.int64)
    if start.shape != (d,) or np.any(start < 1) or np.any(start > n):
        raise ValueError("start site must lie inside the box")

    rng = derive_rng(seed, 0)
    pos = np.tile(start, (n_paths, 1))
    remaining = np.full(n_paths, float(t))
    integral = np.zeros(n_paths)
    alive = np.ones(n_paths, dtype=bool)
    rate = 2.0 * d
    grid_values = values.reshape(geometry.shape)

    while True:
        act = np.nonzero(alive & (remaining > 0))[0]
        if act.size == 0:
            break
        hold = rng.exponential(1.0 / rate, act.size)
        dt = np.minimum(hold, remaining[act])
        cur = pos[act]
        inside = np.all((cur >= 1) & (cur <= n), axis=1)
        v_here = np.zeros(act.size)
        if np.any(inside):
            idx = tuple((cur[inside] - 1).T)
            v_here[inside] = grid_values[idx]
        integral[act] += v_here * dt
        remaining[act] -= dt
        jumpers = act[remaining[act] > 0]
        if jumpers.size:
            axes = rng.integers(0, d, jumpers.size)
            signs = rng.integers(0, 2, jumpers.size) * 2 - 1
            pos[jumpers, axes] += signs
            if mode == KILLED:
                out = np.any((pos[jumpers] < 1) | (pos[jumpers] > n), axis=1)
                alive[jumpers[out]] = False

    weights = np.exp(-integral)
    if mode == KILLED:
        weights = np.where(alive, weights, 0.0)
    mean = float(weights.mean())
    se = float(weights.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.inf
    return AnnealedEstimate(t, mean, se, 1, n_paths, seed, f"mc-{mode}")


def _finite_support(spec: DistributionSpec):
    if spec.family == "bernoulli":
        p0, a = spec.param("p0"), spec.param("a")
        return [(0.0, p0), (a, 1.0 - p0)]
    if spec.family == "point_mass":
        return [(spec.param("v"), 1.0)]
    return None


def _jackknife_se(samples: np.ndarray) -> float:
    n = samples.shape[0]
    if n < 2:
        return math.inf
    total = samples.sum(axis=0)
    loo = (total - samples) / (n - 1)
    return np.sqrt((n - 1) / n * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))


def annealed_moment(spec: DistributionSpec, geometry: BoxGeometry, ts,
                    n_disorder: int, method: str = "integrator", seed: int = 0,
                    n_paths: int = 10_000, tol: float = 1e-8,
                    x0: Optional[int] = None, stratified: bool = False,
                    max_halvings: int = 24) -> AnnealedEstimate:
    """Disorder average of u(x0, t) over i.i.d. potential realizations.

    ``stratified`` enumerates every potential configuration exactly (finite
    single-site support only, ``n_disorder`` must equal the configuration
    count); otherwise realizations are sampled from per-index seed streams.
    The reported error is the disorder jackknife with any inner Monte Carlo
    error added in quadrature.
    """
    if method not in ("integrator", "mc"):
        raise ValueError(f"unknown method {method!r}")
    scalar_t = np.isscalar(ts)
    t_grid = np.atleast_1d(np.asarray(ts, dtype=float))
    site = geometry.center_index() if x0 is None else int(x0)

    if stratified:
        support = _finite_support(spec)
        if support is None:
            raise ValueError(f"{spec.family} has no finite support to stratify")
        n_configs = len(support) ** geometry.n_sites
        if n_disorder != n_configs:
            raise ValueError(
                f"stratified enumeration needs n_disorder == {n_configs}")
        mean = np.zeros(t_grid.size)
        for combo in itertools.product(support, repeat=geometry.n_sites):
            values = np.array([v for v, _ in combo])
            weight = math.prod(p for _, p in combo)
            if weight == 0.0:
                continue
            H = build_hamiltonian(geometry, PotentialSample(values, -1, spec.label))
            for k, t in enumerate(t_grid):
                mean[k] += weight * solve_pam(H, t, tol, max_halvings=max_halvings).u[site]
        se = np.zeros(t_grid.size)
        out_t, out_m, out_s = (t_grid[0], float(mean[0]), 0.0) if scalar_t else (t_grid, mean, se)
        return AnnealedEstimate(out_t, out_m, out_s, n_disorder, 0, seed, "exhaustive")

    if n_disorder < 2:
        raise ValueError("n_disorder must be >= 2")
    quenched = np.zeros((n_disorder, t_grid.size))
    inner_var = np.zeros(t_grid.size)
    for i in range(n_disorder):
        pot = potential_sample(spec, geometry, derive_seed(seed, i))
        if method == "integrator":
            H = build_hamiltonian(geometry, pot)
            for k, t in enumerate(t_grid):
                quenched[i, k] = solve_pam(H, t, tol, max_halvings=max_halvings).u[site]
        else:
            for k, t in enumerate(t_grid):
                est = feynman_kac_mc(pot, geometry, site, t, n_paths,
                                     derive_seed(seed, i, k), mode=KILLED)
                quenched[i, k] = est.mean
                inner_var[k] += est.se**2
    mean = quenched.mean(axis=0)
    se = np.sqrt(np.asarray(_jackknife_se(quenched))**2 + inner_var / n_disorder**2)
    if scalar_t:
        return AnnealedEstimate(float(t_grid[0]), float(mean[0]), float(se[0]),
                                n_disorder, n_paths if method == "mc" else 0,
                                seed, method)
    return AnnealedEstimate(t_grid, mean, se, n_disorder,
                            n_paths if method == "mc" else 0, seed, method)


def annealed_heat_trace(spec: DistributionSpec, geometry: BoxGeometry, ts,
                        n_disorder: int, seed: int = 0,
                        cap: int = 4096) -> AnnealedEstimate:
    """Disorder average of the volume-normalized heat trace.

    Per realization this is |box|^-1 sum_i exp(-t E_i) over the full Dirichlet
    spectrum; identically 1 at t = 0.
    """
    if n_disorder < 2:
        raise ValueError("n_disorder must be >= 2")
    scalar_t = np.isscalar(ts)
    t_grid = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(t_grid < 0):
        raise ValueError("t must be >= 0")
    traces = np.zeros((n_disorder, t_grid.size))
    vol = geometry.n_sites
    for i in range(n_disorder):
        pot = potential_sample(spec, geometry, derive_seed(seed, i))
        H = build_hamiltonian(geometry, pot)
        eigenvalues = full_spectrum(H, cap=cap).eigenvalues
        traces[i] = np.exp(-np.outer(t_grid, eigenvalues)).sum(axis=1) / vol
    mean = traces.mean(axis=0)
    se = np.asarray(_jackknife_se(traces))
    if scalar_t:
        return AnnealedEstimate(float(t_grid[0]), float(mean[0]), float(se[0]),
                                n_disorder, 0, seed, "heat-trace")
    return AnnealedEstimate(t_grid, mean, se, n_disorder, 0, seed, "heat-trace")
