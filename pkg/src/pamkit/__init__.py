"""Lattice toolkit for disordered Schrodinger operators on finite boxes.

Modules: :mod:`pamkit.lattice` (geometry, Hamiltonians, spectra),
:mod:`pamkit.disorder` (single-site laws and cumulants),
:mod:`pamkit.variational` (scale functionals and sandwich bounds),
:mod:`pamkit.pam` (heat semigroup and Feynman-Kac Monte Carlo),
:mod:`pamkit.ids` (integrated density of states and edge fits),
:mod:`pamkit.tauber` (Legendre transforms and inversion bounds),
:mod:`pamkit.cli` (reproducible experiment runner).
"""

__version__ = "0.1.0"

from .disorder import (DistributionSpec, EmpiricalCumulant, QuadratureError,
                       RVMetadata, cdf, cumulant, empirical_cumulant, h_rho,
                       potential_sample, rv_metadata, s_deviation, sample)
from .ids import (EdgeSlopeFit, IdsCurve, LogCorrectionDiagnostic,
                  default_fit_window, empirical_ids, laplace_of_ids,
                  lifshitz_fit, log_correction_diagnostic)
from .lattice import (BoxGeometry, FaberKrahnResult, HamiltonianOperator,
                      NonConvergenceError, OccupationMeasure, PotentialSample,
                      SpectralResult, TruncationWarning, build_hamiltonian,
                      classify_measure, dirichlet_form, faber_krahn_check,
                      full_spectrum, laplacian_ground_energy,
                      laplacian_ground_state, smallest_eigenvalues)
from .pam import (AnnealedEstimate, PamSolution, annealed_heat_trace,
                  annealed_moment, expm_action, feynman_kac_mc, solve_pam)
from .tauber import (EnvelopeResult, LegendreResult, OscillationBounds,
                     ShiftedRateBounds, de_bruijn_bounds, kasahara_bounds,
                     legendre_inf, lifshitz_envelope, rate_function,
                     shifted_rate_bounds)
from .variational import (ASYMPTOTIC, EXACT, BoundsReport, BoxSchedule,
                          InfChiResult, VariationalParams, box_schedule,
                          chi_minus, chi_plus, classical_chi_star, inf_chi,
                          ell_star, kinetic_ground_energy, regime_tag,
                          sandwich_bounds)

__all__ = [name for name in dir() if not name.startswith("_")]
