"""Special functions for harmonic analysis on the n-sphere.

Gegenbauer (ultraspherical) polynomials in the endpoint-normalized form
C~_l(t) = C_l^m(t) / C_l^m(1) with m = (n-1)/2, their derivatives at t = 1,
harmonic-space dimensions, zonal and full real spherical-harmonic bases for
n in {1, 2}, Bessel first minima, and sphere surface areas.

All functions are pure; basis handles are immutable after construction.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special

from .errors import CapabilityError, DomainError, NumericError

BASIS_DEGREE_CAP = 512


def harmonic_dim(n: int, ell: int) -> int:
    """Dimension of the space of degree-ell spherical harmonics on S^n.

    Exact integer arithmetic: (n+2l-1) (n+l-2)! / (l! (n-1)!).  Reduces to 1
    for l = 0, to 2 for n = 1 and l >= 1, and to 2l+1 for n = 2.
    """
    n = int(n)
    ell = int(ell)
    if n < 1 or ell < 0:
        raise DomainError(f"harmonic_dim requires n >= 1, ell >= 0, got ({n}, {ell})")
    if ell == 0:
        return 1
    if n == 1:
        return 2
    num = (n + 2 * ell - 1) * math.factorial(n + ell - 2)
    den = math.factorial(ell) * math.factorial(n - 1)
    value, rem = divmod(num, den)
    if rem:
        raise NumericError(f"harmonic_dim({n}, {ell}) is not an integer (internal error)")
    return value


def harmonic_dim_float(n: int, ell: int) -> float:
    """harmonic_dim coerced to float, reporting overflow instead of saturating."""
    value = harmonic_dim(n, ell)
    try:
        return float(value)
    except OverflowError as exc:
        raise NumericError(f"harmonic_dim({n}, {ell}) overflows float64") from exc


def sphere_surface(n: int) -> float:
    """Surface measure |S^n| = 2 pi^((n+1)/2) / Gamma((n+1)/2)."""
    if n < 1:
        raise DomainError("sphere_surface requires n >= 1")
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < -1.0 - 1e-12) or np.any(t > 1.0 + 1e-12):
        raise DomainError("Gegenbauer argument must lie in [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def gegenbauer_normalized_all(n: int, lmax: int, t) -> np.ndarray:
    """Endpoint-normalized Gegenbauer values C~_l(t) for l = 0..lmax.

    Uses the recurrence on the normalized values,

        c_l = (2(l+m-1) t c_{l-1} - (l-1) c_{l-2}) / (l + 2m - 1),

    which keeps every iterate in [-1, 1] and has c_l(1) = 1 identically.
    For n = 1 (m = 0) this is the Chebyshev recurrence, realizing the
    cos(l arccos t) limit convention.

    Returns an array of shape (lmax+1,) + shape(t).
    """
    if n < 1 or lmax < 0:
        raise DomainError("gegenbauer requires n >= 1, lmax >= 0")
    t = _check_t(t)
    m = (n - 1) / 2.0
    out = np.empty((lmax + 1,) + t.shape, dtype=float)
    out[0] = 1.0
    if lmax >= 1:
        out[1] = t
    for ell in range(2, lmax + 1):
        out[ell] = (2.0 * (ell + m - 1.0) * t * out[ell - 1]
                    - (ell - 1.0) * out[ell - 2]) / (ell + 2.0 * m - 1.0)
    return out


def gegenbauer_normalized(n: int, ell: int, t):
    """C~_l^{(n-1)/2}(t), normalized so the value at t = 1 is exactly 1."""
    scalar = np.isscalar(t)
    vals = gegenbauer_normalized_all(n, ell, t)[ell]
    return float(vals) if scalar else vals


def gegenbauer_deriv1_at1(n: int, ell: int) -> float:
    """d/dt C~_l(t) at t = 1: (n+l-1) l / n."""
    if n < 1 or ell < 0:
        raise DomainError("invalid (n, ell)")
    return (n + ell - 1) * ell / n


def gegenbauer_deriv2_at1(n: int, ell: int) -> float:
    """d^2/dt^2 C~_l(t) at t = 1: (n+l)(n+l-1) l (l-1) / (n (n+2))."""
    if n < 1 or ell < 0:
        raise DomainError("invalid (n, ell)")
    return (n + ell) * (n + ell - 1) * ell * (ell - 1) / (n * (n + 2))


def gegenbauer_unnormalized(m: float, ell: int, t, with_derivative: bool = False):
    """Classical (unnormalized) ultraspherical C_l^m(t) by three-term recurrence.

    When ``with_derivative`` is set, the derivative is propagated through the
    recurrence alongside the value (exact apart from rounding), so identities
    like d/dt C_l^m = 2m C_{l-1}^{m+1} can be checked at full precision.
    """
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)
    d_prev = np.zeros_like(t)
    if ell == 0:
        return (p_prev, d_prev) if with_derivative else p_prev
    p_cur = 2.0 * m * t
    d_cur = np.full_like(t, 2.0 * m)
    for k in range(2, ell + 1):
        p_next = (2.0 * (k + m - 1.0) * t * p_cur - (k + 2.0 * m - 2.0) * p_prev) / k
        d_next = (2.0 * (k + m - 1.0) * (p_cur + t * d_cur) - (k + 2.0 * m - 2.0) * d_prev) / k
        p_prev, p_cur = p_cur, p_next
        d_prev, d_cur = d_cur, d_next
    return (p_cur, d_cur) if with_derivative else p_cur


def gegenbauer_value_at1(m: float, ell: int) -> float:
    """C_l^m(1) = binom(l + 2m - 1, l), valid for real m > 0."""
    return math.exp(math.lgamma(ell + 2 * m) - math.lgamma(ell + 1) - math.lgamma(2 * m))


def legendre_table_normalized(lmax: int, cos_theta, sin_theta=None) -> np.ndarray:
    """Fully normalized associated Legendre values Pbar_{l m}(cos theta).

    Normalization: the real spherical harmonics built as

        Y_{l 0} = Pbar_{l 0},  Y_{l m}^{c,s} = sqrt(2) Pbar_{l m} {cos,sin}(m phi)

    are orthonormal in L^2(S^2).  Stable for lmax up to at least 512; sectoral
    values underflow gracefully to 0 near the poles.

    Returns an array of shape points x n_lm with column index l(l+1)/2 + m.
    """
    if lmax < 0:
        raise DomainError("lmax must be nonnegative")
    if lmax > BASIS_DEGREE_CAP:
        raise CapabilityError(f"lmax={lmax} exceeds configured cap {BASIS_DEGREE_CAP}")
    x = np.atleast_1d(np.asarray(cos_theta, dtype=float))
    if sin_theta is None:
        s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    else:
        s = np.atleast_1d(np.asarray(sin_theta, dtype=float))
    npts = x.shape[0]
    nlm = (lmax + 1) * (lmax + 2) // 2
    out = np.empty((npts, nlm), dtype=float)

    def idx(ell, m):
        return ell * (ell + 1) // 2 + m

    out[:, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(0, lmax + 1):
        col_mm = idx(m, m)
        if m > 0:
            out[:, col_mm] = math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * out[:, idx(m - 1, m - 1)]
        if m + 1 <= lmax:
            out[:, idx(m + 1, m)] = math.sqrt(2.0 * m + 3.0) * x * out[:, col_mm]
        for ell in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
            out[:, idx(ell, m)] = a * (x * out[:, idx(ell - 1, m)] - b * out[:, idx(ell - 2, m)])
    return out


class SphericalBasis:
    """Evaluator for the full orthonormal real harmonic basis on S^1 or S^2.

    Per degree l the basis labels are ordered as
      n=1:  [cos(l theta)/sqrt(pi), sin(l theta)/sqrt(pi)]  (constant for l=0)
      n=2:  [m=0, (m=1,cos), (m=1,sin), (m=2,cos), (m=2,sin), ...]
    matching the coefficient layout used by the field sampler.
    """

    def __init__(self, n: int, lmax: int, cap: int = BASIS_DEGREE_CAP):
        if n not in (1, 2):
            raise CapabilityError("full point bases are available only for n in {1, 2}")
        if lmax < 0:
            raise DomainError("lmax must be nonnegative")
        if lmax > cap:
            raise CapabilityError(f"lmax={lmax} exceeds configured cap {cap}")
        self.n = n
        self.lmax = lmax

    def block_size(self, ell: int) -> int:
        return harmonic_dim(self.n, ell)

    def evaluate(self, points, ells=None) -> np.ndarray:
        """Basis values at points, shape (npts, sum of block sizes).

        ``points``: angles (radians) for n=1, unit vectors (npts, 3) for n=2.
        ``ells``: degrees to include, default 0..lmax.
        """
        if ells is None:
            ells = range(self.lmax + 1)
        ells = list(ells)
        if ells and max(ells) > self.lmax:
            raise DomainError("requested degree exceeds basis lmax")
        if self.n == 1:
            theta = np.atleast_1d(np.asarray(points, dtype=float))
            cols = []
            for ell in ells:
                if ell == 0:
                    cols.append(np.full((theta.shape[0], 1), 1.0 / math.sqrt(2.0 * math.pi)))
                else:
                    cols.append(np.stack([np.cos(ell * theta), np.sin(ell * theta)], axis=1)
                                / math.sqrt(math.pi))
            return np.concatenate(cols, axis=1)

        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != 3:
            raise DomainError("n=2 basis points must be unit vectors in R^3")
        ct = np.clip(pts[:, 2], -1.0, 1.0)
        st = np.sqrt(np.maximum(0.0, pts[:, 0] ** 2 + pts[:, 1] ** 2))
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        table = legendre_table_normalized(self.lmax, ct, st)
        mmax = max(ells) if ells else 0
        marange = np.arange(1, mmax + 1)
        cosm = np.cos(phi[:, None] * marange)
        sinm = np.sin(phi[:, None] * marange)
        sqrt2 = math.sqrt(2.0)
        cols = []
        for ell in ells:
            base = ell * (ell + 1) // 2
            block = np.empty((pts.shape[0], 2 * ell + 1), dtype=float)
            block[:, 0] = table[:, base]
            for m in range(1, ell + 1):
                p = table[:, base + m]
                block[:, 2 * m - 1] = sqrt2 * p * cosm[:, m - 1]
                block[:, 2 * m] = sqrt2 * p * sinm[:, m - 1]
            cols.append(block)
        return np.concatenate(cols, axis=1)


def real_spherical_harmonic_basis(n: int, lmax: int, cap: int = BASIS_DEGREE_CAP) -> SphericalBasis:
    """Handle evaluating the L^2-orthonormal real harmonic basis up to lmax."""
    return SphericalBasis(n, lmax, cap)


def zonal_harmonic(n: int, ell: int, cos_theta):
    """L^2(S^n)-normalized zonal harmonic centered at the pole.

    Y_l(theta) = sqrt(d(n,l)/|S^n|) C~_l(cos theta); satisfies the addition
    formula sum_j Y_l^j(x) Y_l^j(y) = (d(n,l)/|S^n|) C~_l(<x,y>).
    """
    amp = math.sqrt(harmonic_dim_float(n, ell) / sphere_surface(n))
    return amp * gegenbauer_normalized(n, ell, cos_theta)


def bessel_first_min(n: int) -> float:
    """First local minimum y_n of the Bessel function J_{(n-2)/2} after 0.

    Brackets the first sign change of the derivative J'_nu beyond the first
    positive zero of J_nu and solves it to ~1e-12.
    """
    if n < 1:
        raise DomainError("bessel_first_min requires n >= 1")
    nu = (n - 2) / 2.0

    jval = lambda x: special.jv(nu, x)
    jder = lambda x: special.jvp(nu, x)

    # first positive zero of J_nu by scanning, then the derivative's sign
    # change beyond it
    step = 0.05
    x = step
    while jval(x) > 0.0:
        x += step
        if x > 100.0:
            raise NumericError("failed to bracket the first Bessel zero")
    zero = optimize.brentq(jval, x - step, x, xtol=1e-14)
    x = zero + step
    while jder(x) < 0.0:
        x += step
        if x > 200.0:
            raise NumericError("failed to bracket the first Bessel derivative sign change")
    ymin = optimize.brentq(jder, x - step, x, xtol=1e-13)
    return float(ymin)
