"""Numerical Legendre transforms and limit-of-oscillation inversion bounds.

``legendre_inf`` minimizes t -> E t + f(t) over t > 0 by geometric bracket
expansion plus golden-section refinement, flagging boundary (non-interior)
infima.  On top of it sit the single-site rate transform, its shifted
classical-regime bounds, the two oscillation-bound inversions (bounded case
with inf[Et - f], unbounded case with inf[Et + f]), and the spectral-edge
envelope that inverts the auxiliary scaling function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .disorder import DistributionSpec, cumulant, rate_form_cumulant, rv_metadata


@dataclass(frozen=True)
class LegendreResult:
    """Value and minimizer of inf_{t>0} [E t + f(t)]."""

    E: float
    value: float
    t_star: float
    interior: bool
    boundary: Optional[str] = None
    n_eval: int = 0


def _golden_min(fn, lo: float, hi: float, iters: int = 200) -> Tuple[float, float]:
    """Golden-section minimum on [lo, hi] in log coordinates."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(math.exp(x1)), fn(math.exp(x2))
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(math.exp(x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(math.exp(x2))
        if b - a < 1e-14:
            break
    return (math.exp(x1), f1) if f1 <= f2 else (math.exp(x2), f2)


def legendre_inf(f: Callable[[float], float], E: float, t0: float = 1.0,
                 grow: float = 4.0, max_expand: int = 200,
                 multistart: int = 8) -> LegendreResult:
    """Minimize t -> E t + f(t) over t > 0.

    Walks a geometric ladder from ``t0`` until the objective turns upward,
    then refines by golden section; a ladder that stays monotone to the
    boundary is reported with ``interior=False`` and the limiting endpoint
    value.  A coarse multi-start sweep guards against non-unimodal inputs.
    """
    evals = 0

    def phi(t: float) -> float:
        nonlocal evals
        evals += 1
        return E * t + f(t)

    def descend(start: float):
        """Return (bracket lo, mid, hi) or a boundary tag from one start."""
        tm, t, tp = start / grow, start, start * grow
        fm, fc, fp = phi(tm), phi(t), phi(tp)
        for _ in range(max_expand):
            if fc <= fm and fc <= fp:
                return ("bracket", tm, t, tp, fc)
            if fm < fc:
                t, tp, fc, fp = tm, t, fm, fc
                tm = t / grow
                fm = phi(tm)
            else:
                tm, t, fm, fc = t, tp, fc, fp
                tp = t * grow
                fp = phi(tp)
        if fm < fc:
            return ("t->0", tm, fm)
        return ("t->inf", tp, fp)

    outcome = descend(t0)
    if outcome[0] == "bracket":
        _, lo, mid, hi, _ = outcome
        t_best, v_best = _golden_min(phi, lo, hi)
        # Guard against a wrong basin: coarse log-spaced sweep, best kept.
        sweep = np.geomspace(1e-8, 1e8, multistart)
        for s in sweep:
            if phi(float(s)) < v_best - 1e-12 * (abs(v_best) + 1.0):
                alt = descend(float(s))
                if alt[0] == "bracket":
                    t_alt, v_alt = _golden_min(phi, alt[1], alt[3])
                    if v_alt < v_best:
                        t_best, v_best = t_alt, v_alt
        return LegendreResult(E, v_best, t_best, True, None, evals)
    tag, t_edge, v_edge = outcome
    return LegendreResult(E, v_edge, t_edge, False, tag, evals)


def rate_function(spec: DistributionSpec, E: float,
                  form: str = "canonical") -> LegendreResult:
    """Single-site rate transform inf_{t>0} [E t + G(t)].

    ``form="canonical"`` transforms the family's leading cumulant form (the
    one whose transform has a closed expression for the double-exponential
    family); ``form="exact"`` always transforms the exact cumulant.
    """
    if form == "canonical":
        f = lambda t: rate_form_cumulant(spec, t)
    elif form == "exact":
        f = lambda t: cumulant(spec, t)
    else:
        raise ValueError(f"unknown form {form!r}")
    return legendre_inf(f, E)


@dataclass(frozen=True)
class ShiftedRateBounds:
    lower: float
    upper: float
    rate_lower: LegendreResult
    rate_upper: LegendreResult
    constant: float


def shifted_rate_bounds(spec: DistributionSpec, E: float,
                        chi_minus_star: float, chi_plus_star: float,
                        d: int, constant: float = 1.0) -> ShiftedRateBounds:
    """Classical-regime counting-function bounds from the shifted transform.

    Returns (-constant * I(E - 2d chi_minus_star), -I(E - 2d chi_plus_star))
    with I the rate transform; the positive values estimate the magnitude of
    log N(E).  ``constant`` is reported, default 1.
    """
    rl = rate_function(spec, E - 2.0 * d * chi_minus_star)
    ru = rate_function(spec, E - 2.0 * d * chi_plus_star)
    return ShiftedRateBounds(-constant * rl.value, -ru.value, rl, ru, constant)


@dataclass(frozen=True)
class OscillationBounds:
    """Two-sided inversion output C_i * inf, with the raw transform attached."""

    lower: float
    upper: float
    infimum: float
    t_star: float
    c1: float
    c2: float
    interior: bool
    boundary: Optional[str] = None


def de_bruijn_bounds(f: Callable[[float], float], B1: float, B2: float,
                     E: float, rho: float) -> OscillationBounds:
    """Bounded-case inversion: C_i * inf_{t>0} [E t - f(t)], f of index rho.

    Requires B1 >= B2 > 0 and 0 < rho < 1.  The scale factors
    C_i = B_i * rho^(rho/(rho-1)) / (1 - rho) are the proof-derived constants
    of the oscillation bound; they coincide when B1 = B2.
    """
    if not (B1 >= B2 > 0):
        raise ValueError("need B1 >= B2 > 0")
    if not (0.0 < rho < 1.0):
        raise ValueError("need 0 < rho < 1")
    if E <= 0:
        raise ValueError("E must be positive")
    res = legendre_inf(lambda t: -f(t), E)
    scale = rho ** (rho / (rho - 1.0)) / (1.0 - rho)
    c1, c2 = B1 * scale, B2 * scale
    return OscillationBounds(c1 * res.value, c2 * res.value, res.value,
                             res.t_star, c1, c2, res.interior, res.boundary)


def kasahara_bounds(f: Callable[[float], float], B1: float, B2: float,
                    E: float, rho: float) -> OscillationBounds:
    """Unbounded-case inversion: C_i * inf_{t>0} [E t + f(t)], f of index rho > 1.

    The scale factors C_i = B_i * rho^(rho/(rho-1)) / (rho - 1) mirror the
    bounded case ("proof-derived"; equal when B1 = B2).
    """
    if not (B1 > 0 and B2 > 0):
        raise ValueError("need B1, B2 > 0")
    if rho <= 1.0:
        raise ValueError("need rho > 1")
    res = legendre_inf(f, E)
    scale = rho ** (rho / (rho - 1.0)) / (rho - 1.0)
    c1, c2 = B1 * scale, B2 * scale
    return OscillationBounds(c1 * res.value, c2 * res.value, res.value,
                             res.t_star, c1, c2, res.interior, res.boundary)


@dataclass(frozen=True)
class EnvelopeResult:
    t_star: float
    envelope: float
    t_star_closed_form: float
    target: float
    residual: float


def lifshitz_envelope(spec: Optional[DistributionSpec], E: float, d: int,
                      t_min: float = 10.0, scale: float = 1.0,
                      metadata=None) -> EnvelopeResult:
    """Spectral-edge envelope E^(-d/2 + 1 + 1/rho) g0(t*)^(-1/rho).

    ``t*`` solves g(t*) = E^((2 - d rho)/2) by bisection in log t on the
    decreasing branch of g (t >= t_min); the closed-form asymptotic inverse
    x^(1/rho) g0(x^(1/rho))^(-1/rho) is returned alongside for cross-checking.
    Requires metadata with rho in [-1, 0); pass ``metadata`` explicitly to
    study a synthetic auxiliary function instead of a family's.
    """
    md = metadata if metadata is not None else rv_metadata(spec)
    if md.degenerate or not (-1.0 - 1e-12 <= md.rho < 0.0):
        raise ValueError("envelope requires scaling index in [-1, 0)")
    if E <= 0:
        raise ValueError("E must be positive")
    rho = md.rho
    target = E ** ((2.0 - d * rho) / 2.0)
    lo = t_min
    if md.g(lo) <= target:
        raise ValueError("root not bracketed: g(t_min) is already below the target")
    hi = lo
    for _ in range(400):
        hi *= 4.0
        if md.g(hi) < target:
            break
    else:
        raise ValueError("root not bracketed: g never fell below the target")
    la, lb = math.log(lo), math.log(hi)
    for _ in range(200):
        mid = 0.5 * (la + lb)
        if md.g(math.exp(mid)) > target:
            la = mid
        else:
            lb = mid
        if lb - la < 1e-15:
            break
    t_star = math.exp(0.5 * (la + lb))
    residual = abs(md.g(t_star) - target) / target
    envelope = scale * E ** (-d / 2.0 + 1.0 + 1.0 / rho) * md.g0(t_star) ** (-1.0 / rho)
    x_pow = target ** (1.0 / rho)
    t_cf = x_pow * md.g0(x_pow) ** (-1.0 / rho)
    return EnvelopeResult(t_star, envelope, t_cf, target, residual)
