"""Closed-form covariance analytics for invariant ensembles.

The covariance of the field at angular separation arccos(t) is

    F(t) = sum over admissible l of p_d(l)^2 (d(n,l)/|S^n|) C~_l(t),

and everything here is built from F(1), F'(1), F''(1): the random-matrix
parameter B, the cancellation-safe (1-B)^{-1}, the slice parameter delta
(expected zeros of the restriction to a projective line), and its companion
delta' with (1-B)^{-1} = 2 delta'^2.

B, delta, delta' are invariant under rescaling all weights; the |S^n| factor
is kept so F doubles as the (unnormalized) reproducing kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .ensemble import EnsembleSpec, covariance_level_masses
from .errors import DegenerateEnsembleError, DomainError
from .specfun import (
    gegenbauer_deriv1_at1,
    gegenbauer_deriv2_at1,
    gegenbauer_normalized_all,
)

__all__ = [
    "CovarianceSummary",
    "covariance_fn",
    "covariance_derivs",
    "rmt_B",
    "one_minus_B_inv",
    "slice_parameter",
    "slice_parameter_prime",
    "covariance_summary",
    "rescaled_kernel_check",
]


@dataclass(frozen=True)
class CovarianceSummary:
    """F'(1), F''(1) and the derived parameters for one ensemble.

    The overall positive normalization of F tracks the unit-sum weights; it
    cancels in B, delta, and delta'.
    """

    F1: float
    F2: float
    B: float
    one_minus_B_inv: float
    delta: float
    delta_prime: float

    def to_json(self) -> dict:
        return {
            "F1": self.F1,
            "F2": self.F2,
            "B": self.B,
            "one_minus_B_inv": self.one_minus_B_inv,
            "delta": self.delta,
            "delta_prime": self.delta_prime,
        }


def covariance_fn(e: EnsembleSpec, t) -> np.ndarray | float:
    """F(t) for t in [-1, 1] (vectorized)."""
    scalar = np.isscalar(t)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < -1.0 - 1e-12) or np.any(t_arr > 1.0 + 1e-12):
        raise DomainError("covariance argument must lie in [-1, 1]")
    cheb = gegenbauer_normalized_all(e.n, e.d, np.clip(t_arr, -1.0, 1.0))
    masses = covariance_level_masses(e)
    out = np.tensordot(masses, cheb[e.ells], axes=(0, 0))
    return float(out) if scalar else out


def covariance_derivs(e: EnsembleSpec) -> tuple[float, float]:
    """(F'(1), F''(1)) via the closed-form Gegenbauer endpoint derivatives."""
    masses = covariance_level_masses(e)
    f1 = math.fsum(m * gegenbauer_deriv1_at1(e.n, int(ell))
                   for m, ell in zip(masses, e.ells))
    f2 = math.fsum(m * gegenbauer_deriv2_at1(e.n, int(ell))
                   for m, ell in zip(masses, e.ells))
    return f1, f2


def rmt_B(e: EnsembleSpec) -> float:
    """B = (F''(1) - F'(1)) / (F''(1) + F'(1))."""
    f1, f2 = covariance_derivs(e)
    if f1 + f2 <= 0.0:
        raise DegenerateEnsembleError("B undefined: all mass at degree 0")
    return (f2 - f1) / (f2 + f1)


def one_minus_B_inv(e: EnsembleSpec) -> float:
    """(1 - B)^{-1} computed as (F'+F'')/(2F'), safe against cancellation."""
    f1, f2 = covariance_derivs(e)
    if f1 <= 0.0:
        raise DegenerateEnsembleError("(1-B)^{-1} undefined: no mass above degree 0")
    return (f1 + f2) / (2.0 * f1)


def slice_parameter(e: EnsembleSpec) -> float:
    """delta: sqrt of sum l(l+n-1) d(n,l) p^2 over n sum d(n,l) p^2.

    Equals the expected number of zeros of the field restricted to a
    projective line; a full circle carries 2 delta zeros on average.
    """
    masses = covariance_level_masses(e)
    num = math.fsum(m * ell * (ell + e.n - 1) for m, ell in zip(masses, e.ells.tolist()))
    den = e.n * math.fsum(masses.tolist())
    return math.sqrt(num / den)


def slice_parameter_prime(e: EnsembleSpec) -> float:
    """delta' = sqrt((1-B)^{-1} / 2), so that (1-B)^{-1} = 2 delta'^2."""
    return math.sqrt(one_minus_B_inv(e) / 2.0)


def covariance_summary(e: EnsembleSpec) -> CovarianceSummary:
    f1, f2 = covariance_derivs(e)
    if f1 + f2 <= 0.0 or f1 <= 0.0:
        raise DegenerateEnsembleError("covariance summary undefined for degree-0 ensembles")
    inv = (f1 + f2) / (2.0 * f1)
    return CovarianceSummary(
        F1=f1,
        F2=f2,
        B=(f2 - f1) / (f2 + f1),
        one_minus_B_inv=inv,
        delta=slice_parameter(e),
        delta_prime=math.sqrt(inv / 2.0),
    )


@dataclass(frozen=True)
class KernelCheckReport:
    """Sup-distance between the rescaled kernel and the cosine transform of psi^2."""

    theta_max: float
    grid: int
    sup_distance: float
    d: int

    def to_json(self) -> dict:
        return {"theta_max": self.theta_max, "grid": self.grid,
                "sup_distance": self.sup_distance, "d": self.d}


def rescaled_kernel_check(e: EnsembleSpec, theta_max: float, grid: int) -> KernelCheckReport:
    """Compare K_d(theta/d^lam) against the normalized cosine transform of psi^2.

    n = 1 only.  K_d is the covariance in the angle, normalized to K_d(0) = 1;
    the limit kernel is int psi^2 cos(x theta) dx / int psi^2 dx.
    """
    if e.n != 1:
        raise DomainError("the rescaled-kernel check is implemented for n = 1")
    if e.psi is None or not e.coherent:
        raise DegenerateEnsembleError("rescaled-kernel check needs a coherent ensemble")
    thetas = np.linspace(0.0, theta_max, grid)
    masses = covariance_level_masses(e)
    masses = masses / masses.sum()
    # n=1 zonal values are cos(l theta): evaluate the angular kernel directly
    kd = np.cos(np.outer(thetas / float(e.d) ** e.lam, e.ells)) @ masses

    c1, c2 = e.psi.tail
    cutoff = 1.0
    while c1 * c1 * math.exp(-2.0 * c2 * cutoff * cutoff) > 1e-16:
        cutoff *= 1.25
    pts = sorted({b for b in e.psi.breakpoints if 0.0 < b < cutoff})
    norm, _ = integrate.quad(lambda x: float(e.psi(x) ** 2), 0.0, cutoff,
                             points=pts or None, limit=200)
    limit = np.empty_like(thetas)
    for i, th in enumerate(thetas):
        if th == 0.0:
            limit[i] = 1.0
            continue
        val = 0.0
        edges = [0.0] + pts + [cutoff]
        for a, b in zip(edges, edges[1:]):
            seg, _ = integrate.quad(lambda x: float(e.psi(x) ** 2), a, b,
                                    weight="cos", wvar=float(th), limit=200)
            val += seg
        limit[i] = val / norm
    return KernelCheckReport(theta_max, grid, float(np.max(np.abs(kd - limit))), e.d)
