"""Gaussian field samples f = sum_l p_d(l) sum_j xi_l^j Y_l^j on S^1 and S^2.

Coefficients are stored in the harmonic basis (never converted to monomials)
in (l ascending, j ascending) order; the weight p_d(l) is applied at
evaluation time.  Evaluation batches points and trials through the basis
design matrix, so censuses over many draws share the Legendre tables.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .ensemble import EnsembleSpec
from .errors import CapabilityError, DomainError
from .specfun import SphericalBasis, harmonic_dim

__all__ = [
    "FIELD_DEGREE_CAP",
    "FieldSample",
    "sample_field",
    "sample_coefficient_matrix",
    "eval_points_matrix",
    "CircleRestriction",
    "restrict_to_circle",
    "dump_coefficients",
    "load_coefficients",
]

FIELD_DEGREE_CAP = 256

_MAGIC = b"NCF1"


def coefficient_layout(e: EnsembleSpec) -> tuple[np.ndarray, np.ndarray]:
    """(block sizes per admissible degree, per-coefficient weight vector)."""
    sizes = np.array([harmonic_dim(e.n, int(ell)) for ell in e.ells], dtype=int)
    per_coeff = np.repeat(e.weights, sizes)
    return sizes, per_coeff


def _check_field_support(e: EnsembleSpec):
    if e.n not in (1, 2):
        raise CapabilityError("field sampling is implemented for n in {1, 2}")
    if e.d > FIELD_DEGREE_CAP:
        raise CapabilityError(f"degree {e.d} exceeds the field cap {FIELD_DEGREE_CAP}")


def sample_coefficient_matrix(e: EnsembleSpec, trials: int, seeds) -> np.ndarray:
    """Standard-normal coefficient draws, one column per trial.

    ``seeds`` is a sequence of per-trial seeds (ints or SeedSequence inputs);
    each trial uses its own stream, so any subset of trials is reproducible.
    """
    _check_field_support(e)
    sizes, _ = coefficient_layout(e)
    ncoef = int(sizes.sum())
    out = np.empty((ncoef, trials), dtype=float)
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seeds[t]))
        out[:, t] = rng.standard_normal(ncoef)
    return out


@dataclass(frozen=True, eq=False)
class FieldSample:
    """One Gaussian draw from an invariant ensemble."""

    ensemble: EnsembleSpec
    xi: np.ndarray
    seed: int

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        sizes, _ = coefficient_layout(self.ensemble)
        if xi.shape != (int(sizes.sum()),):
            raise DomainError("coefficient array has the wrong length")
        xi.flags.writeable = False
        object.__setattr__(self, "xi", xi)

    def eval(self, point) -> float:
        """Field value at one point (angle for n=1, unit 3-vector for n=2)."""
        return float(self.eval_many([point])[0])

    def eval_many(self, points) -> np.ndarray:
        return eval_points_matrix(self.ensemble, points, self.xi[:, None])[:, 0]

    def eval_grid(self, grid) -> np.ndarray:
        """Values at all nodes of a grid (SphereGrid or raw point array)."""
        pts = grid.points if hasattr(grid, "points") else grid
        return self.eval_many(pts)


def sample_field(e: EnsembleSpec, seed: int) -> FieldSample:
    """Draw independent standard-normal coefficients for every basis element."""
    _check_field_support(e)
    xi = sample_coefficient_matrix(e, 1, [seed])[:, 0]
    return FieldSample(ensemble=e, xi=xi, seed=int(seed))


def _validate_points(e: EnsembleSpec, points) -> np.ndarray:
    if e.n == 1:
        return np.atleast_1d(np.asarray(points, dtype=float))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DomainError("n=2 points must be vectors in R^3")
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise DomainError("points must be unit vectors (norm within 1e-9)")
    return pts


def eval_points_matrix(e: EnsembleSpec, points, xi_matrix, chunk: int = 16384) -> np.ndarray:
    """Field values for a batch of coefficient vectors.

    ``xi_matrix`` has shape (ncoef, ntrials); returns (npts, ntrials).  Points
    are processed in chunks so the basis tables stay in cache-sized blocks.
    """
    _check_field_support(e)
    pts = _validate_points(e, points)
    sizes, per_coeff = coefficient_layout(e)
    xi_matrix = np.asarray(xi_matrix, dtype=float)
    if xi_matrix.ndim != 2 or xi_matrix.shape[0] != int(sizes.sum()):
        raise DomainError("coefficient matrix has the wrong shape")
    scaled = per_coeff[:, None] * xi_matrix
    basis = SphericalBasis(e.n, e.d)
    npts = pts.shape[0]
    out = np.empty((npts, xi_matrix.shape[1]), dtype=float)
    for start in range(0, npts, chunk):
        block = pts[start:start + chunk]
        design = basis.evaluate(block, ells=e.ells.tolist())
        out[start:start + chunk] = design @ scaled
    return out


class CircleRestriction:
    """The field restricted to a great circle theta -> f(u cos + v sin).

    ``as_trig_poly`` collapses the restriction to its Fourier coefficients
    (exact for a degree-d restriction), making repeated evaluation O(d).
    """

    def __init__(self, fs: FieldSample, u, v):
        if fs.ensemble.n != 2:
            raise DomainError("circle restrictions are for fields on S^2")
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape != (3,) or v.shape != (3,):
            raise DomainError("frame vectors must live in R^3")
        if (abs(np.dot(u, u) - 1.0) > 1e-9 or abs(np.dot(v, v) - 1.0) > 1e-9
                or abs(np.dot(u, v)) > 1e-9):
            raise DomainError("(u, v) must be an orthonormal frame")
        self.fs = fs
        self.u = u
        self.v = v

    def __call__(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        pts = np.outer(np.cos(theta), self.u) + np.outer(np.sin(theta), self.v)
        return self.fs.eval_many(pts)

    def as_trig_poly(self) -> "TrigPoly":
        d = self.fs.ensemble.d
        m = 1
        while m < 4 * (d + 1):
            m *= 2
        theta = 2.0 * math.pi * np.arange(m) / m
        vals = self(theta)
        spec = np.fft.rfft(vals) / m
        a = 2.0 * spec.real
        a[0] *= 0.5
        b = -2.0 * spec.imag
        return TrigPoly(a[: d + 1], b[: d + 1])


class TrigPoly:
    """a_0 + sum_m a_m cos(m theta) + b_m sin(m theta), vectorized."""

    def __init__(self, a: np.ndarray, b: np.ndarray):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.degree = self.a.size - 1

    def __call__(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        ms = np.arange(self.a.size)
        ang = np.outer(theta, ms)
        return np.cos(ang) @ self.a + np.sin(ang) @ self.b


def restrict_to_circle(fs: FieldSample, circle) -> CircleRestriction:
    """Restriction of an S^2 field to the great circle spanned by (u, v)."""
    u, v = circle
    return CircleRestriction(fs, u, v)


def dump_coefficients(fs: FieldSample, path: str) -> None:
    """Binary dump: magic 'NCF1', n, d (u32 LE), kind (u16 length + utf8),
    seed (u64), count (u64), then float64 little-endian coefficients."""
    kind = fs.ensemble.kind.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIH", fs.ensemble.n, fs.ensemble.d, len(kind)))
        fh.write(kind)
        fh.write(struct.pack("<QQ", fs.seed, fs.xi.size))
        fh.write(fs.xi.astype("<f8").tobytes())


def load_coefficients(path: str) -> tuple[dict, np.ndarray]:
    """Read a coefficient dump; returns (header dict, coefficient array)."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise DomainError(f"{path} is not a coefficient dump")
        n, d, klen = struct.unpack("<IIH", fh.read(10))
        kind = fh.read(klen).decode("utf-8")
        seed, count = struct.unpack("<QQ", fh.read(16))
        xi = np.frombuffer(fh.read(8 * count), dtype="<f8").astype(float)
    return {"n": n, "d": d, "kind": kind, "seed": seed}, xi
