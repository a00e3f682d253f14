"""Finite lattice boxes with hard-zero exterior, their Hamiltonians and spectra.

The box is a cube of ``n**d`` sites with coordinates in ``{1..n}**d``.  The
kinetic part is the graph Laplacian of the cube with Dirichlet (hard zero)
exterior: exterior neighbors contribute to the diagonal but are never indexed,
so the operator acts as

    (H u)(x) = (2d + V(x)) u(x) - sum_{y ~ x, y inside} u(y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, eigh_tridiagonal, eigvalsh_tridiagonal
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

#: Largest matrix dimension handled by the dense full-spectrum solver.
DENSE_CAP = 4096


class NonConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget before reaching tolerance."""


class TruncationWarning(UserWarning):
    """A discrete minimization hit its search cap."""


@dataclass(frozen=True)
class BoxGeometry:
    """Cube of ``n**d`` sites, coordinates ``{1..n}**d``, Dirichlet exterior.

    ``site_index`` flattens coordinates in C order (first coordinate slowest),
    matching ``numpy.ravel_multi_index`` on the zero-based grid.
    """

    d: int
    n: int

    def __post_init__(self):
        if not (isinstance(self.d, int) and self.d >= 1):
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"sites per axis must be a positive integer, got {self.n}")

    @property
    def n_sites(self) -> int:
        return self.n**self.d

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @classmethod
    def centered(cls, d: int, halfwidth: int) -> "BoxGeometry":
        """Cube {x : |x|_inf <= halfwidth}, i.e. 2*halfwidth + 1 sites per axis."""
        return cls(d, 2 * halfwidth + 1)

    @property
    def halfwidth(self) -> float:
        """Inverse of :meth:`centered`: (n - 1) / 2, not necessarily integer."""
        return (self.n - 1) / 2

    def site_index(self, coords: Sequence[int]) -> int:
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.d or any(not (1 <= c <= self.n) for c in coords):
            raise ValueError(f"coordinates {coords} outside {{1..{self.n}}}^{self.d}")
        return int(np.ravel_multi_index(tuple(c - 1 for c in coords), self.shape))

    def site_coords(self, index: int) -> tuple:
        if not (0 <= index < self.n_sites):
            raise ValueError(f"site index {index} out of range")
        return tuple(int(c) + 1 for c in np.unravel_index(index, self.shape))

    def center_index(self) -> int:
        """Index of the most central site, ((n+1)//2, ...)."""
        return self.site_index(((self.n + 1) // 2,) * self.d)

    def boundary_deficit(self) -> np.ndarray:
        """Number of exterior neighbors of each site (0 .. 2d)."""
        deficit = np.zeros(self.shape, dtype=float)
        for axis in range(self.d):
            face = [slice(None)] * self.d
            face[axis] = 0
            deficit[tuple(face)] += 1.0
            face[axis] = self.n - 1
            deficit[tuple(face)] += 1.0
        return deficit.reshape(-1)


@dataclass(frozen=True)
class PotentialSample:
    """One realization of the site potential on a box."""

    values: np.ndarray
    seed: int
    spec_id: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if not np.all(np.isfinite(values)):
            raise ValueError("potential contains non-finite entries")


def _path_laplacian(n: int) -> sp.csr_matrix:
    """1-d Dirichlet Laplacian on n sites: tridiag(-1, 2, -1)."""
    if n == 1:
        return sp.csr_matrix(np.array([[2.0]]))
    ones = np.ones(n - 1)
    return sp.diags([-ones, 2.0 * np.ones(n), -ones], [-1, 0, 1], format="csr")


def dirichlet_laplacian(geometry: BoxGeometry) -> sp.csr_matrix:
    """Kronecker-sum Laplacian of the cube with hard-zero exterior."""
    n, d = geometry.n, geometry.d
    t1 = _path_laplacian(n)
    eye = sp.identity(n, format="csr")
    total = None
    for axis in range(d):
        factors = [t1 if j == axis else eye for j in range(d)]
        term = reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)
        total = term if total is None else total + term
    return total.tocsr()


@dataclass(frozen=True)
class HamiltonianOperator:
    """Sparse action of (-Laplacian + V) on a box with Dirichlet exterior."""

    geometry: BoxGeometry
    potential: Optional[PotentialSample]
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.geometry.n_sites

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.dim:
            raise ValueError("vector length does not match box site count")
        return self.matrix @ u

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def trace(self) -> float:
        return float(self.matrix.diagonal().sum())

    def is_tridiagonal(self) -> bool:
        return self.geometry.d == 1


def build_hamiltonian(geometry: BoxGeometry,
                      potential: Optional[PotentialSample] = None) -> HamiltonianOperator:
    """Assemble -Laplacian + V on the box.

    Applying the result to u gives, at each site x,
    ``sum_{y ~ x, y in box} [u(x) - u(y)] + (exterior degree) u(x) + V(x) u(x)``.
    """
    matrix = dirichlet_laplacian(geometry)
    if potential is not None:
        if potential.values.shape != (geometry.n_sites,):
            raise ValueError(
                f"potential has {potential.values.shape[0]} entries, "
                f"box has {geometry.n_sites} sites")
        matrix = (matrix + sp.diags(potential.values)).tocsr()
    return HamiltonianOperator(geometry, potential, matrix)


def laplacian_ground_energy(d: int, n: int) -> float:
    """Smallest eigenvalue of the Dirichlet Laplacian on the n**d cube.

    Exact value 4 d sin^2(pi / (2 (n + 1))).
    """
    if d < 1 or n < 1:
        raise ValueError("d and n must be positive")
    return 4.0 * d * math.sin(math.pi / (2.0 * (n + 1))) ** 2


def laplacian_ground_state(d: int, n: int) -> np.ndarray:
    """Positive unit-norm ground state of the Dirichlet Laplacian on the cube.

    Product over axes of sqrt(2/(n+1)) sin(x pi / (n+1)), x in {1..n}.
    """
    if d < 1 or n < 1:
        raise ValueError("d and n must be positive")
    x = np.arange(1, n + 1, dtype=float)
    axis = np.sqrt(2.0 / (n + 1)) * np.sin(np.pi * x / (n + 1))
    state = axis
    for _ in range(d - 1):
        state = np.multiply.outer(state, axis)
    return state.reshape(-1)


@dataclass(frozen=True)
class SpectralResult:
    """Ascending eigenvalues with optional eigenvectors and residual norms."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    residuals: Optional[np.ndarray] = None


def _tridiagonal_bands(H: HamiltonianOperator) -> tuple:
    diag = H.matrix.diagonal()
    off = H.matrix.diagonal(1) if H.dim > 1 else np.zeros(0)
    return diag, off


def _residual_norms(H: HamiltonianOperator, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    resid = H.matrix @ vecs - vecs * vals[np.newaxis, :]
    return np.linalg.norm(resid, axis=0)


def smallest_eigenvalues(H: HamiltonianOperator, k: int, tol: float = 1e-10,
                         seed: int = 0, method: str = "auto",
                         maxiter: Optional[int] = None) -> SpectralResult:
    """k smallest eigenpairs, ascending, each with residual norm <= tol.

    ``method`` is "auto" (dense below :data:`DENSE_CAP`, else Lanczos),
    "dense", or "lanczos".  The Lanczos start vector is derived from ``seed``
    so repeated calls are bit-identical.  Raises :class:`NonConvergenceError`
    if any residual exceeds ``tol``.
    """
    if not (1 <= k <= H.dim):
        raise ValueError(f"need 1 <= k <= {H.dim}, got k={k}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")

    use_dense = method == "dense" or (method == "auto" and
                                      (H.dim <= DENSE_CAP or k >= H.dim - 1))
    if method == "lanczos" and k >= H.dim:
        raise ValueError("lanczos path needs k < dim")

    if use_dense:
        if H.is_tridiagonal() and H.dim > 1:
            diag, off = _tridiagonal_bands(H)
            vals, vecs = eigh_tridiagonal(diag, off, select="i",
                                          select_range=(0, k - 1))
        else:
            vals, vecs = eigh(H.dense())
            vals, vecs = vals[:k], vecs[:, :k]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(H.dim)
        try:
            vals, vecs = eigsh(H.matrix, k=k, which="SA", v0=v0,
                               maxiter=maxiter, tol=0)
        except ArpackNoConvergence as exc:
            raise NonConvergenceError(
                f"Lanczos iteration budget exhausted: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    residuals = _residual_norms(H, vals, vecs)
    if np.any(residuals > tol):
        raise NonConvergenceError(
            f"eigen residuals {residuals.max():.3e} exceed tolerance {tol:.3e}")
    return SpectralResult(np.asarray(vals, dtype=float), vecs, residuals)


def full_spectrum(H: HamiltonianOperator, cap: int = DENSE_CAP) -> SpectralResult:
    """All eigenvalues of H, ascending (dense solve, capped dimension)."""
    if H.dim > cap:
        raise ValueError(f"dimension {H.dim} exceeds dense cap {cap}")
    if H.is_tridiagonal() and H.dim > 1:
        diag, off = _tridiagonal_bands(H)
        vals = eigvalsh_tridiagonal(diag, off)
    else:
        vals = np.linalg.eigvalsh(H.dense())
    return SpectralResult(np.sort(vals))


@dataclass(frozen=True)
class OccupationMeasure:
    """Probability weights on the sites of a box."""

    weights: np.ndarray
    geometry: BoxGeometry

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.shape != (self.geometry.n_sites,):
            raise ValueError("weight vector does not match box site count")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1 within 1e-12")

    @classmethod
    def delta(cls, geometry: BoxGeometry, index: Optional[int] = None) -> "OccupationMeasure":
        """Point mass at a site (default: box center)."""
        w = np.zeros(geometry.n_sites)
        w[geometry.center_index() if index is None else index] = 1.0
        return cls(w, geometry)

    @classmethod
    def ground_state_square(cls, geometry: BoxGeometry) -> "OccupationMeasure":
        phi = laplacian_ground_state(geometry.d, geometry.n)
        w = phi**2
        return cls(w / w.sum(), geometry)


def dirichlet_form(p: OccupationMeasure) -> float:
    """Dirichlet energy of sqrt(p) with hard-zero exterior.

    (1/2) sum over interior neighbor pairs of (sqrt p(x) - sqrt p(y))^2 plus
    sum of p(x) over boundary faces per exterior neighbor.  Always in (0, 2d]
    for a probability vector.
    """
    geo = p.geometry
    q = np.sqrt(p.weights).reshape(geo.shape)
    total = 0.0
    for axis in range(geo.d):
        diff = np.diff(q, axis=axis)
        total += float(np.sum(diff * diff))
        face = [slice(None)] * geo.d
        face[axis] = 0
        total += float(np.sum(q[tuple(face)] ** 2))
        face[axis] = geo.n - 1
        total += float(np.sum(q[tuple(face)] ** 2))
    return total


def classify_measure(p: OccupationMeasure, gamma: float) -> Optional[int]:
    """Scale bin of an occupation measure from its Dirichlet energy.

    Bin 1 is (gamma/2, 2d]; bin L >= 2 is the half-open interval
    (gamma sin^2(pi/(2(L+1))), gamma sin^2(pi/(2L))].  Together the bins
    partition (0, 2d].  Returns None for a (defensive) zero form value.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    f = dirichlet_form(p)
    if f <= 0.0:
        return None
    if f > 0.5 * gamma:
        return 1
    # f / gamma <= 1/2, so the arcsine below is at most pi/4.
    a = math.asin(math.sqrt(f / gamma))
    ell = int(math.floor(math.pi / (2.0 * a)))
    ell = max(ell, 2)
    # Guard rounding at the half-open edges.
    while ell > 2 and f > gamma * math.sin(math.pi / (2.0 * ell)) ** 2:
        ell -= 1
    while f <= gamma * math.sin(math.pi / (2.0 * (ell + 1))) ** 2:
        ell += 1
    return ell


@dataclass(frozen=True)
class FaberKrahnResult:
    satisfied: bool
    margin: float
    ground_energy: float
    bound: float


def faber_krahn_check(sites: Sequence[Sequence[int]], c_fk: float) -> FaberKrahnResult:
    """Check E_1(-Laplacian on the site set, Dirichlet) >= c_fk |U|^(-2/d).

    ``sites`` is a finite collection of distinct lattice points of common
    dimension; the induced graph keeps edges between points at distance 1.
    """
    pts = [tuple(int(c) for c in s) for s in sites]
    if not pts:
        raise ValueError("site set must be nonempty")
    d = len(pts[0])
    if any(len(s) != d for s in pts):
        raise ValueError("sites must share a common dimension")
    if len(set(pts)) != len(pts):
        raise ValueError("sites must be distinct")
    index = {s: i for i, s in enumerate(pts)}
    m = len(pts)
    mat = np.zeros((m, m))
    np.fill_diagonal(mat, 2.0 * d)
    for s, i in index.items():
        for axis in range(d):
            for step in (-1, 1):
                nb = list(s)
                nb[axis] += step
                j = index.get(tuple(nb))
                if j is not None:
                    mat[i, j] = -1.0
    e1 = float(np.linalg.eigvalsh(mat)[0])
    bound = c_fk * m ** (-2.0 / d)
    margin = e1 - bound
    return FaberKrahnResult(margin >= -1e-12, margin, e1, bound)
