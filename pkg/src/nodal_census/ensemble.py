"""Weight families p_d(l) for invariant Gaussian polynomial ensembles.

An invariant ensemble on S^n is parameterized by nonnegative weights on the
harmonic degrees l with l = d (mod 2), normalized to unit sum.  A d-indexed
family is *coherent* when the rescaled weights P_{d,lam}(x) = p_d(d^lam x) d^lam
converge to a fixed integrable profile under a subgaussian envelope.

Conventions
-----------
* The stored limit profile ``psi`` is normalized to unit integral on [0, inf).
  Because admissible degrees are spaced by 2, the raw pointwise limit of
  P_{d,lam} is 2 psi; code that needs the raw limit uses ``rescaled_limit``.
* The step extension of p_d to real arguments picks the nearest integer of the
  same parity as d (round-half-even on the parity grid).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DegenerateEnsembleError, DomainError, NumericError
from .specfun import harmonic_dim_float

__all__ = [
    "PsiProfile",
    "EnsembleSpec",
    "MomentTable",
    "CoherenceReport",
    "make_kostlan",
    "make_rfs",
    "make_harmonic",
    "make_prescribed",
    "rescaled_weight",
    "rescaled_limit",
    "moments",
    "moment_sum",
    "coherence_check",
    "admissible_degrees",
    "indicator_profile",
    "gaussian_profile",
    "custom_profile",
    "ensemble_from_json",
    "weights_from_r",
    "r_from_weights",
]


def admissible_degrees(d: int) -> np.ndarray:
    """Degrees l in {d, d-2, ...} down to 0 or 1, ascending."""
    if d < 1:
        raise DomainError("degree must be >= 1")
    return np.arange(d % 2, d + 1, 2)


@dataclass(frozen=True)
class PsiProfile:
    """A limit profile on [0, inf) with a declared subgaussian tail bound.

    ``tail = (c1, c2)`` declares |psi(x)| <= c1 exp(-c2 x^2); ``breakpoints``
    lists discontinuities for quadrature.
    """

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    tail: tuple[float, float]
    params: dict = field(default_factory=dict)
    breakpoints: tuple[float, ...] = ()

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def to_json(self) -> dict:
        return {"type": self.kind, "params": dict(self.params)}


def indicator_profile(a: float = 0.0, b: float = 1.0) -> PsiProfile:
    """Normalized indicator of [a, b] (unit integral)."""
    height = 1.0 / (b - a)
    fn = lambda x: np.where((x >= a) & (x <= b), height, 0.0)
    c2 = 1.0 / max(b, 1.0) ** 2
    c1 = height * math.exp(c2 * b * b) * 1.0000001
    return PsiProfile("indicator", fn, (c1, c2), {"a": a, "b": b}, breakpoints=(a, b))


def gaussian_profile(sigma2: float = 2.0) -> PsiProfile:
    """Unit-integral half-Gaussian exp(-x^2/(2 sigma2)) / Z on [0, inf).

    The default sigma2 = 2 gives the exp(-x^2/4) shape arising as the
    rescaled-weight limit of the Kostlan family.
    """
    z = math.sqrt(math.pi * sigma2 / 2.0)
    fn = lambda x: np.exp(-x * x / (2.0 * sigma2)) / z
    return PsiProfile("gaussian", fn, (1.01 / z, 1.0 / (2.0 * sigma2)), {"sigma2": sigma2})


def custom_profile(fn: Callable, c1: float, c2: float, breakpoints=()) -> PsiProfile:
    """Wrap a caller-supplied integrable profile with its declared tail bound."""
    raw = lambda x: np.asarray(fn(x), dtype=float)
    return PsiProfile("custom", raw, (c1, c2), {}, tuple(breakpoints))


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """An invariant ensemble: weights over the admissible degrees of one d.

    Invariants: weights are nonnegative, sum to 1 within 1e-12, and only
    degrees with l = d (mod 2) carry mass.  Arrays are read-only.
    """

    kind: str
    n: int
    d: int
    lam: float
    ells: np.ndarray
    weights: np.ndarray
    psi: PsiProfile | None
    coherent: bool = True

    def __post_init__(self):
        ells = np.asarray(self.ells, dtype=int)
        w = np.asarray(self.weights, dtype=float)
        if ells.shape != w.shape:
            raise DomainError("ells and weights must align")
        if np.any(w < 0):
            raise DomainError("weights must be nonnegative")
        if np.any((ells % 2) != (self.d % 2)):
            raise DomainError("weights on degrees of the wrong parity")
        total = math.fsum(w.tolist())
        if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise DomainError(f"weights must sum to 1 (got {total!r})")
        ells.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "ells", ells)
        object.__setattr__(self, "weights", w)

    def weight_at(self, ell: int) -> float:
        """p_d(ell); zero off the admissible set."""
        if ell < 0 or ell > self.d or (ell % 2) != (self.d % 2):
            return 0.0
        return float(self.weights[(ell - self.d % 2) // 2])

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "d": self.d,
            "lambda": self.lam,
            "weights": self.weights.tolist(),
            "psi": self.psi.to_json() if self.psi is not None else None,
        }


def ensemble_from_json(obj: dict) -> EnsembleSpec:
    """Rebuild an ensemble from its JSON descriptor (canonical kinds only)."""
    kind = obj["kind"]
    n, d = int(obj["n"]), int(obj["d"])
    if kind == "kostlan":
        return make_kostlan(n, d)
    if kind == "rfs":
        return make_rfs(n, d)
    if kind == "harmonic":
        return make_harmonic(n, d)
    if kind == "prescribed":
        psi = obj.get("psi") or {}
        if psi.get("type") == "indicator":
            profile = indicator_profile(psi["params"].get("a", 0.0), psi["params"].get("b", 1.0))
        elif psi.get("type") == "gaussian":
            profile = gaussian_profile(psi["params"].get("sigma2", 2.0))
        else:
            raise DomainError("custom psi profiles cannot be rebuilt from JSON")
        return make_prescribed(profile, float(obj["lambda"]), n, d)
    raise DomainError(f"unknown ensemble kind {kind!r}")


def _normalized(kind, n, d, lam, ells, raw, psi, coherent=True) -> EnsembleSpec:
    total = math.fsum(np.asarray(raw, dtype=float).tolist())
    if total <= 0.0:
        raise DegenerateEnsembleError("all weights vanish")
    return EnsembleSpec(kind, n, d, lam, np.asarray(ells), np.asarray(raw) / total,
                        psi, coherent)


def make_kostlan(n: int, d: int) -> EnsembleSpec:
    """Kostlan ensemble: covariance <x, y>^d; rescaling exponent 1/2.

    Squared weights are proportional to d! / (2^d ((d-l)/2)! Gamma((n+1)/2 +
    (d+l)/2)), evaluated in log-space.
    """
    ells = admissible_degrees(d)
    ks = (d - ells) // 2
    logp2 = (math.lgamma(d + 1) - d * math.log(2.0)
             - np.array([math.lgamma(k + 1) for k in ks])
             - np.array([math.lgamma((n + 1) / 2.0 + (d + ell) / 2.0) for ell in ells]))
    logp = 0.5 * (logp2 - logp2.max())
    return _normalized("kostlan", n, d, 0.5, ells, np.exp(logp), gaussian_profile(2.0))


def make_rfs(n: int, d: int) -> EnsembleSpec:
    """Real Fubini-Study ensemble: constant weight on each admissible degree."""
    ells = admissible_degrees(d)
    return _normalized("rfs", n, d, 1.0, ells, np.ones_like(ells, dtype=float),
                       indicator_profile(0.0, 1.0))


def make_harmonic(n: int, d: int) -> EnsembleSpec:
    """Random spherical harmonics: all mass on the top degree.

    Not a coherent family (no rescaled limit profile); downstream asymptotics
    that need psi reject it, while the covariance/extrema formulas still apply.
    """
    ells = admissible_degrees(d)
    raw = np.zeros_like(ells, dtype=float)
    raw[-1] = 1.0
    return _normalized("harmonic", n, d, 1.0, ells, raw, None, coherent=False)


def make_prescribed(psi: PsiProfile, lam: float, n: int, d: int) -> EnsembleSpec:
    """Ensemble with weights d^{-lam} psi(l / d^lam) over admissible degrees."""
    if not (0.0 < lam <= 1.0):
        raise DomainError("lambda must lie in (0, 1]")
    ells = admissible_degrees(d)
    scale = float(d) ** lam
    raw = np.asarray(psi(ells / scale), dtype=float) / scale
    if np.any(raw < 0):
        raise DomainError("psi must be nonnegative on the sampled grid")
    if not np.any(raw > 0):
        raise DegenerateEnsembleError("psi vanishes on every admissible degree")
    return _normalized("prescribed", n, d, lam, ells, raw, psi)


def _nearest_same_parity(y: float, parity: int) -> int:
    # round-half-even on the grid {parity, parity+2, ...}
    k = 2 * round((y - parity) / 2.0) + parity
    return max(parity, int(k))


def rescaled_weight(e: EnsembleSpec, x: float) -> float:
    """P_{d,lam}(x) = p_d({d^lam x}) d^lam, with {.} the nearest admissible degree.

    Zero beyond degree d.  Note the raw values converge to 2 psi(x) for a
    coherent family (degree spacing 2); comparisons against psi normalize
    both sides to unit integral.
    """
    if x < 0:
        raise DomainError("x must be nonnegative")
    scale = float(e.d) ** e.lam
    ell = _nearest_same_parity(scale * x, e.d % 2)
    if ell > e.d:
        return 0.0
    return e.weight_at(ell) * scale


def rescaled_limit(e: EnsembleSpec, x) -> np.ndarray:
    """The raw pointwise limit 2 psi(x) of the rescaled weights."""
    if e.psi is None:
        raise DegenerateEnsembleError(f"{e.kind} ensemble has no rescaled limit")
    return 2.0 * e.psi(x)


@dataclass(frozen=True)
class MomentTable:
    """Moments mu_k = int_0^inf psi(x)^2 x^k dx with quadrature error bounds."""

    psi: PsiProfile
    ks: tuple[int, ...]
    values: tuple[float, ...]
    errors: tuple[float, ...]

    def __getitem__(self, k: int) -> float:
        return self.values[self.ks.index(k)]


def _tail_cutoff(c1: float, c2: float, k: int) -> float:
    # smallest X with c1^2 exp(-2 c2 x^2) x^k < 1e-16 beyond X
    x = 1.0
    for _ in range(200):
        val = c1 * c1 * math.exp(-2.0 * c2 * x * x) * x ** k
        if val < 1e-16:
            return x
        x *= 1.25
    raise NumericError("could not locate a quadrature cutoff; tail bound too weak")


def moments(psi: PsiProfile, k_list: Sequence[int]) -> MomentTable:
    """Adaptive quadrature of psi^2 x^k on [0, X] with X from the tail bound."""
    c1, c2 = psi.tail
    values, errors = [], []
    for k in k_list:
        cutoff = _tail_cutoff(c1, c2, k)
        pts = sorted({b for b in psi.breakpoints if 0.0 < b < cutoff})
        val, err = integrate.quad(lambda x: float(psi(x) ** 2 * x ** k), 0.0, cutoff,
                                  points=pts or None, limit=200, epsabs=1e-12, epsrel=1e-12)
        if err > 1e-10:
            raise NumericError(f"moment quadrature for k={k} did not converge (err={err:g})")
        values.append(val)
        errors.append(err)
    return MomentTable(psi, tuple(k_list), tuple(values), tuple(errors))


def moment_sum(e: EnsembleSpec, a: float, b: float) -> float:
    """Sum over admissible degrees of l^a p_d(l)^b, assembled in log-space."""
    if a <= 0 or b <= 0:
        raise DomainError("moment_sum requires a, b > 0")
    terms = []
    for ell, w in zip(e.ells.tolist(), e.weights.tolist()):
        if ell == 0 or w == 0.0:
            continue
        terms.append(math.exp(a * math.log(ell) + b * math.log(w)))
    return math.fsum(terms)


@dataclass(frozen=True)
class CoherenceReport:
    """Outcome of the rescaled-weight convergence diagnostic."""

    kind: str
    lam: float
    d_list: tuple[int, ...]
    sup_distances: tuple[float, ...]
    envelope: tuple[float, float] | None
    coherent: bool
    decreasing: bool

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "lambda": self.lam,
            "d_list": list(self.d_list),
            "sup_distances": list(self.sup_distances),
            "envelope": list(self.envelope) if self.envelope else None,
            "coherent": self.coherent,
            "decreasing": self.decreasing,
        }


def coherence_check(make: Callable[[int], EnsembleSpec] | EnsembleSpec,
                    d_list: Sequence[int], grid: np.ndarray | None = None) -> CoherenceReport:
    """Sup-distance between normalized P_{d,lam} and psi per d, plus envelope fit.

    ``make`` is either a constructor d -> EnsembleSpec or a template ensemble
    whose kind is rebuilt at each d.  A failed check is a report, not an
    exception; the harmonic kind reports non-coherent.
    """
    if isinstance(make, EnsembleSpec):
        template = make
        builder = lambda d: _rebuild(template, d)
    else:
        builder = make
    samples = [builder(d) for d in d_list]
    kind = samples[0].kind
    lam = samples[0].lam
    if any(s.psi is None or not s.coherent for s in samples):
        return CoherenceReport(kind, lam, tuple(d_list), (), None, False, False)

    psi = samples[0].psi
    if grid is None:
        grid = np.linspace(0.0, 4.0, 257)
    sups = []
    envelope_c2 = psi.tail[1]
    envelope_c1 = 0.0
    for e in samples:
        raw = np.array([rescaled_weight(e, float(x)) for x in grid])
        # normalize the sampled profile to unit integral before comparing
        step_mass = np.trapezoid(raw, grid)
        if step_mass <= 0:
            return CoherenceReport(kind, lam, tuple(d_list), (), None, False, False)
        norm = raw / step_mass
        target = psi(grid)
        mask = _away_from_breakpoints(grid, psi.breakpoints, 2.0 / float(e.d) ** e.lam)
        sups.append(float(np.max(np.abs(norm - target)[mask])))
        envelope_c1 = max(envelope_c1, float(np.max(raw * np.exp(envelope_c2 * grid * grid))))
    decreasing = all(s2 <= s1 * 1.05 for s1, s2 in zip(sups, sups[1:]))
    return CoherenceReport(kind, lam, tuple(d_list), tuple(sups),
                           (envelope_c1, envelope_c2), True, decreasing)


def _away_from_breakpoints(grid, breakpoints, h):
    mask = np.ones(grid.shape, dtype=bool)
    for b in breakpoints:
        mask &= np.abs(grid - b) > max(h, 1e-9)
    return mask


def _rebuild(template: EnsembleSpec, d: int) -> EnsembleSpec:
    if template.kind == "kostlan":
        return make_kostlan(template.n, d)
    if template.kind == "rfs":
        return make_rfs(template.n, d)
    if template.kind == "harmonic":
        return make_harmonic(template.n, d)
    if template.kind == "prescribed":
        return make_prescribed(template.psi, template.lam, template.n, d)
    raise DomainError(f"cannot rebuild ensembles of kind {template.kind!r}")


def covariance_level_masses(e: EnsembleSpec) -> np.ndarray:
    """p_d(l)^2 d(n,l) / |S^n| per admissible degree (the F(t) coefficients)."""
    from .specfun import sphere_surface

    dims = np.array([harmonic_dim_float(e.n, int(ell)) for ell in e.ells])
    return e.weights ** 2 * dims / sphere_surface(e.n)


def weights_from_r(r: np.ndarray, n: int, d: int) -> np.ndarray:
    """Convert Kostlan-style level amplitudes r_i to weights p_d(l).

    r is indexed by i = (d - l)/2; returns weights aligned with
    admissible_degrees(d) (ascending l), not normalized.
    """
    from .specfun import sphere_surface

    ells = admissible_degrees(d)
    r = np.asarray(r, dtype=float)
    if r.shape[0] != ells.shape[0]:
        raise DomainError("r has the wrong length")
    dims = np.array([harmonic_dim_float(n, int(ell)) for ell in ells])
    return r[::-1] * np.sqrt(sphere_surface(n) / dims)


def r_from_weights(e: EnsembleSpec) -> np.ndarray:
    """Level amplitudes r_i = p_d(l) sqrt(d(n,l)/|S^n|), indexed by i=(d-l)/2."""
    from .specfun import sphere_surface

    dims = np.array([harmonic_dim_float(e.n, int(ell)) for ell in e.ells])
    return (e.weights * np.sqrt(dims / sphere_surface(e.n)))[::-1]
