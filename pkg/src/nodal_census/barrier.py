"""Band-limited barrier functions and the barrier-event probability.

A barrier at x is the unit-norm combination of zonal harmonics

    B_x = sum over band degrees of p_d(l) Y_l(theta(., x)) / sqrt(#terms),

positive at x and negative on the circle of radius r = 2 y_n / (2 L + n - 1),
where L is the top band degree and y_n the first minimum of J_{(n-2)/2}.
The event Omega(x, r) = {f(x) > 0 and f < 0 on the boundary circle} certifies
a nodal component inside the disk; its probability is estimated by Monte
Carlo with the boundary checked at finitely many points (sample count at
least twice the top degree, so a sign pattern cannot hide between samples).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import EnsembleSpec, _rebuild
from .errors import DomainError
from .fieldsim import eval_points_matrix, sample_coefficient_matrix, coefficient_layout
from .specfun import (
    SphericalBasis,
    bessel_first_min,
    gegenbauer_normalized_all,
    harmonic_dim_float,
    sphere_surface,
)

__all__ = [
    "BarrierConfig",
    "Barrier",
    "make_barrier",
    "barrier_margins",
    "MarginReport",
    "estimate_omega_probability",
    "OmegaReport",
]

DEFAULT_BOUNDARY_SAMPLES = 256

_NORTH = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class BarrierConfig:
    """Band multipliers and geometry for the barrier construction.

    The band covers degrees [a_band, b_band] in units of the effective top of
    the limit profile's mass: d^lam in general, 2 sqrt(2) sqrt(d) for the
    Kostlan kind (covering the bulk of its Gaussian profile).  The radius is
    r = 2 y_n / (2 L_hi + n - 1) with L_hi the top band degree.
    """

    a_band: float = 0.75
    b_band: float = 1.0
    center: np.ndarray | float | None = None
    boundary_samples: int = DEFAULT_BOUNDARY_SAMPLES

    def __post_init__(self):
        if not (0.0 < self.a_band < self.b_band):
            raise DomainError("need 0 < a_band < b_band")


def _band_scale(e: EnsembleSpec) -> float:
    scale = float(e.d) ** e.lam
    if e.kind == "kostlan":
        scale *= 2.0 * math.sqrt(2.0)
    return scale


def _center_for(e: EnsembleSpec, cfg: BarrierConfig):
    if cfg.center is not None:
        if e.n == 1:
            return float(cfg.center)
        c = np.asarray(cfg.center, dtype=float)
        if c.shape != (3,) or abs(np.linalg.norm(c) - 1.0) > 1e-9:
            raise DomainError("center must be a unit vector for n=2")
        return c
    return 0.0 if e.n == 1 else _NORTH


class Barrier:
    """A resolved barrier: band degrees, radius, and evaluation machinery."""

    def __init__(self, e: EnsembleSpec, cfg: BarrierConfig):
        if e.n not in (1, 2):
            raise DomainError("barrier evaluation is implemented for n in {1, 2}")
        scale = _band_scale(e)
        lo = cfg.a_band * scale
        hi_nominal = cfg.b_band * scale
        hi = min(hi_nominal, float(e.d))
        in_band = [(int(ell), w) for ell, w in zip(e.ells.tolist(), e.weights.tolist())
                   if lo <= ell <= hi and w > 0.0]
        if not in_band:
            raise DomainError(f"band [{lo:.1f}, {hi:.1f}] contains no weighted degree")
        self.ensemble = e
        self.cfg = cfg
        self.band_lo, self.band_hi = lo, hi
        self.ells = np.array([ell for ell, _ in in_band], dtype=int)
        self.terms = len(in_band)
        # the radius follows the nominal band top, even when the admissible
        # degrees clip at d
        self.r = 2.0 * bessel_first_min(e.n) / (2.0 * hi_nominal + e.n - 1.0)
        self.center = _center_for(e, cfg)
        dims = np.array([harmonic_dim_float(e.n, ell) for ell in self.ells])
        weights = np.array([w for _, w in in_band])
        self._amps = weights * np.sqrt(dims / sphere_surface(e.n)) / math.sqrt(self.terms)

    def value_at_cos(self, t) -> np.ndarray:
        """Barrier value as a function of the cosine of the polar angle from x."""
        cheb = gegenbauer_normalized_all(self.ensemble.n, int(self.ells.max()), t)
        return np.tensordot(self._amps, cheb[self.ells], axes=(0, 0))

    def __call__(self, points):
        if self.ensemble.n == 1:
            theta = np.asarray(points, dtype=float)
            return self.value_at_cos(np.cos(theta - self.center))
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.value_at_cos(np.clip(pts @ self.center, -1.0, 1.0))

    def xi_coefficients(self) -> np.ndarray:
        """The barrier in the ensemble's xi coordinates (unit Euclidean norm)."""
        e = self.ensemble
        sizes, _ = coefficient_layout(e)
        xi = np.zeros(int(sizes.sum()))
        basis = SphericalBasis(e.n, e.d)
        center_pt = [self.center] if e.n == 1 else self.center[None, :]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        band_set = set(self.ells.tolist())
        for k, ell in enumerate(e.ells.tolist()):
            if ell not in band_set:
                continue
            y = basis.evaluate(center_pt, ells=[ell])[0]
            amp = math.sqrt(sphere_surface(e.n) / harmonic_dim_float(e.n, ell))
            xi[offsets[k]:offsets[k + 1]] = amp * y / math.sqrt(self.terms)
        return xi


def make_barrier(e: EnsembleSpec, cfg: BarrierConfig | None = None) -> Barrier:
    """Unit-norm band-limited barrier for the ensemble (default band)."""
    return Barrier(e, cfg or BarrierConfig())


@dataclass(frozen=True)
class MarginReport:
    """Scaled barrier values at the center and on the boundary across degrees.

    m_plus(d) = B_x(x) d^{-lam(n-2)/2}, m_minus(d) = max of the boundary value
    at the same scaling.  ``common_margin`` = min(min m_plus, min -m_minus);
    a positive value certifies a uniform two-sided margin over the ladder.
    """

    d_list: tuple[int, ...]
    m_plus: tuple[float, ...]
    m_minus: tuple[float, ...]
    common_margin: float
    uniform: bool

    def to_json(self) -> dict:
        return {"d_list": list(self.d_list), "m_plus": list(self.m_plus),
                "m_minus": list(self.m_minus), "common_margin": self.common_margin,
                "uniform": self.uniform}


def barrier_margins(e: EnsembleSpec, cfg: BarrierConfig | None, d_list) -> MarginReport:
    """Evaluate the scaled barrier margins for each degree in the ladder.

    The boundary is sampled at 64 points; by rotational symmetry of the
    barrier one point suffices, the extras guard the numerics.
    """
    cfg = cfg or BarrierConfig()
    m_plus, m_minus = [], []
    for d in d_list:
        e_d = _rebuild(e, int(d))
        b = Barrier(e_d, cfg)
        power = float(d) ** (-e_d.lam * (e_d.n - 2) / 2.0)
        m_plus.append(float(b.value_at_cos(np.ones(1))[0]) * power)
        boundary = np.full(64, math.cos(b.r))
        m_minus.append(float(b.value_at_cos(boundary).max()) * power)
    common = min(min(m_plus), min(-m for m in m_minus))
    return MarginReport(tuple(int(d) for d in d_list), tuple(m_plus), tuple(m_minus),
                        common, uniform=common > 0.0)


@dataclass(frozen=True)
class OmegaReport:
    """Monte-Carlo estimate of P{f(x) > 0 and f < 0 on the boundary circle}."""

    d: int
    r: float
    band: tuple[float, float]
    p_omega: float
    stderr: float
    trials: int
    seed: int
    boundary_samples: int

    def to_json(self) -> dict:
        return {"d": self.d, "r": self.r, "band": list(self.band),
                "p_omega": self.p_omega, "stderr": self.stderr,
                "trials": self.trials, "seed": self.seed,
                "boundary_samples": self.boundary_samples}


def _boundary_points(barrier: Barrier) -> np.ndarray:
    e = barrier.ensemble
    m = barrier.cfg.boundary_samples
    if m < 2 * e.d:
        # sign changes of a degree-d restriction could hide between samples
        m = 4 * e.d
    if e.n == 1:
        return np.array([barrier.center - barrier.r, barrier.center + barrier.r])
    x = barrier.center
    helper = np.array([1.0, 0.0, 0.0]) if abs(x[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(x, helper)
    u /= np.linalg.norm(u)
    v = np.cross(x, u)
    phis = 2.0 * math.pi * np.arange(m) / m
    ring = (math.cos(barrier.r) * x[None, :]
            + math.sin(barrier.r) * (np.cos(phis)[:, None] * u[None, :]
                                     + np.sin(phis)[:, None] * v[None, :]))
    return ring / np.linalg.norm(ring, axis=1, keepdims=True)


def estimate_omega_probability(e: EnsembleSpec, cfg: BarrierConfig | None,
                               trials: int, seed: int = 0) -> OmegaReport:
    """Fraction of field draws positive at the center and negative on the ring.

    Boundary negativity is certified at the sampled resolution (a proxy for
    the continuum condition; adequate because the boundary restriction has at
    most 2d zeros and at least 2d samples are enforced).
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    cfg = cfg or BarrierConfig()
    barrier = Barrier(e, cfg)
    ring = _boundary_points(barrier)
    if e.n == 1:
        pts = np.concatenate([[barrier.center], ring])
    else:
        pts = np.concatenate([barrier.center[None, :], ring], axis=0)

    hits = 0
    batch = 4096
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        seeds = [[int(seed), done + t] for t in range(b)]
        xi = sample_coefficient_matrix(e, b, seeds)
        vals = eval_points_matrix(e, pts, xi)
        ok = (vals[0] > 0.0) & (vals[1:].max(axis=0) < 0.0)
        hits += int(ok.sum())
        done += b
    p = hits / trials
    stderr = math.sqrt(max(p * (1.0 - p), 1e-300) / trials)
    return OmegaReport(e.d, barrier.r, (barrier.band_lo, barrier.band_hi),
                       p, stderr, trials, int(seed), ring.shape[0] if e.n == 2 else 2)
