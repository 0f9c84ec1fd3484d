"""GOE sampling and the extreme-eigenvalue integrals behind extrema counts.

The integral I(N, B) = E[exp(-N B lambda_max^2 / 2)] over GOE(N), estimated by
direct Monte Carlo, feeds the closed-form expected number of minima of the
hemisphere field,

    E N_minima = (1+B)^{(n+1)/2} (1-B)^{-n/2} I(n+1, B),

and the leading-coefficient bounds for component counts.

GOE convention: the eigenvalue density carries exp(-(N/2) sum lambda_i^2),
i.e. matrix entries have variance 1/N on the diagonal and 1/(2N) off it.
Exactly this normalization reproduces I_2 = sqrt(3)/(2 sqrt(2)) and
I_3 = 1/sqrt(6); those two values are pinned in the acceptance tests and
guard the convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .covariance import one_minus_B_inv, rmt_B
from .ensemble import EnsembleSpec, PsiProfile, moments
from .errors import DegenerateEnsembleError, DomainError, NumericError

__all__ = [
    "I2_EXACT",
    "I3_EXACT",
    "GoeEstimate",
    "ExtremaPrediction",
    "sample_goe",
    "largest_eigenvalue",
    "goe_lambda_max_draws",
    "i_from_draws",
    "i_integral",
    "expected_minima",
    "i_asymptotic",
    "leading_coeff_bound",
    "minima_power_law_check",
]

I2_EXACT = math.sqrt(3.0) / (2.0 * math.sqrt(2.0))
I3_EXACT = 1.0 / math.sqrt(6.0)

ZETA_PRIME_AT_1 = -0.1654  # reference value used by the asymptotic formula

_CHUNK = 1 << 16
_MAX_DESK_N = 64


@dataclass(frozen=True)
class GoeEstimate:
    """Monte-Carlo estimate of I(N, B) with its standard error."""

    N: int
    B: float
    value: float
    stderr: float
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {"N": self.N, "B": self.B, "value": self.value,
                "stderr": self.stderr, "samples": self.samples, "seed": self.seed}


@dataclass(frozen=True)
class ExtremaPrediction:
    """Expected extrema counts derived from one ensemble.

    minima_half counts minima of the hemisphere field; the full-sphere and
    extrema factors (2 and 4) are exposed as separate fields, never applied
    implicitly.  asymptotic_ratio = minima_full / d^{lam n}.
    """

    n: int
    d: int
    B: float
    minima_half: float
    minima_full: float
    extrema_full: float
    asymptotic_ratio: float
    goe: GoeEstimate

    def to_json(self) -> dict:
        return {
            "n": self.n, "d": self.d, "B": self.B,
            "minima_half": self.minima_half, "minima_full": self.minima_full,
            "extrema_full": self.extrema_full, "asymptotic_ratio": self.asymptotic_ratio,
            "goe": self.goe.to_json(),
        }


def _goe_batch(N: int, count: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((count, N, N))
    return (a + a.swapaxes(-1, -2)) / (2.0 * math.sqrt(N))


def sample_goe(N: int, rng: np.random.Generator) -> np.ndarray:
    """One GOE(N) draw: diagonal variance 1/N, off-diagonal 1/(2N)."""
    if N < 1:
        raise DomainError("N must be >= 1")
    return _goe_batch(N, 1, rng)[0]


def largest_eigenvalue(H: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric matrix (desk scale, N <= 64)."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError("largest_eigenvalue expects a square matrix")
    if H.shape[0] > _MAX_DESK_N:
        raise DomainError(f"N={H.shape[0]} exceeds the desk-scale cap {_MAX_DESK_N}")
    if not np.allclose(H, H.T, atol=1e-12):
        raise DomainError("matrix must be symmetric")
    return float(np.linalg.eigvalsh(H)[-1])


def goe_lambda_max_draws(N: int, samples: int, seed: int) -> np.ndarray:
    """largest-eigenvalue draws from GOE(N), chunked into deterministic streams.

    Chunk i uses the stream SeedSequence([seed, N, i]) regardless of worker
    scheduling, so results are reproducible and independent of parallelism.
    """
    if N < 1 or samples < 1:
        raise DomainError("need N >= 1 and samples >= 1")
    out = np.empty(samples, dtype=float)
    done = 0
    chunk_idx = 0
    while done < samples:
        m = min(_CHUNK, samples - done)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(N), chunk_idx]))
        mats = _goe_batch(N, m, rng)
        if N == 1:
            out[done:done + m] = mats[:, 0, 0]
        else:
            out[done:done + m] = np.linalg.eigvalsh(mats)[:, -1]
        done += m
        chunk_idx += 1
    return out


def i_from_draws(draws: np.ndarray, N: int, B: float) -> tuple[float, float]:
    """(mean, stderr) of exp(-N B lambda^2 / 2) over precomputed draws."""
    vals = np.exp(-0.5 * N * B * draws * draws)
    n = vals.size
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def i_integral(N: int, B: float, samples: int, seed: int = 0) -> GoeEstimate:
    """Monte-Carlo estimate of E[exp(-N B lambda_max^2 / 2)] over GOE(N)."""
    if N < 2:
        raise DomainError("i_integral requires N >= 2")
    if not (0.0 <= B <= 1.0):
        raise DomainError("B must lie in [0, 1]")
    if samples < 100:
        raise DomainError("at least 100 samples are required")
    draws = goe_lambda_max_draws(N, samples, seed)
    value, stderr = i_from_draws(draws, N, B)
    return GoeEstimate(N=N, B=float(B), value=value, stderr=stderr,
                       samples=samples, seed=int(seed))


def expected_minima(e: EnsembleSpec, samples: int = 400_000, seed: int = 0) -> ExtremaPrediction:
    """Expected minima of the hemisphere field via the B-dependent formula."""
    B = rmt_B(e)
    if B < 0.0:
        # linear fields (all mass at degree 1) have B = -1; the GOE factor is
        # still defined with exponent clipped into [0, 1]
        Bq = 0.0
    else:
        Bq = B
    inv = one_minus_B_inv(e)
    est = i_integral(e.n + 1, Bq, samples, seed)
    minima_half = (1.0 + B) ** ((e.n + 1) / 2.0) * inv ** (e.n / 2.0) * est.value
    minima_full = 2.0 * minima_half
    return ExtremaPrediction(
        n=e.n, d=e.d, B=B,
        minima_half=minima_half,
        minima_full=minima_full,
        extrema_full=4.0 * minima_half,
        asymptotic_ratio=minima_full / float(e.d) ** (e.lam * e.n),
        goe=est,
    )


def i_asymptotic(N: int) -> float:
    """Large-N asymptotic g_N for I(N, 1).

    g_N = A 2^{35/16} N^{-17/36} exp(-N + (4 sqrt(2)/3) sqrt(N-1)), with
    log A = -(169/96) log 2 + zeta'(1)/2 and zeta'(1) ~ -0.1654.
    """
    if N < 2:
        raise DomainError("the asymptotic is defined for N >= 2")
    log_a = -(169.0 / 96.0) * math.log(2.0) + 0.5 * ZETA_PRIME_AT_1
    return math.exp(log_a + (35.0 / 16.0) * math.log(2.0)
                    - (17.0 / 36.0) * math.log(N)
                    - N + (4.0 * math.sqrt(2.0) / 3.0) * math.sqrt(N - 1.0))


def leading_coeff_bound(psi: PsiProfile, lam: float, n: int,
                        samples: int = 400_000, seed: int = 0,
                        method: str = "auto") -> tuple[float, float]:
    """Bounds on the leading coefficient of the expected component count.

    bound_sphere = 2^{5/2} (mu_{n+3} / ((n+2) mu_{n+1}))^{n/2} I_{n+1} limits
    lim E b0 / d^{lam n} on the sphere; the projective bound halves it (double
    cover).  ``method``: "exact" uses the closed forms I_2, I_3 (n <= 2),
    "mc" forces Monte Carlo, "auto" prefers exact when available.

    Returns (bound_sphere, bound_projective).
    """
    if psi is None:
        raise DegenerateEnsembleError("leading-coefficient bound needs a coherent family")
    if method not in ("auto", "exact", "mc"):
        raise DomainError(f"unknown method {method!r}")
    table = moments(psi, [n + 1, n + 3])
    ratio = table[n + 3] / ((n + 2) * table[n + 1])
    if method == "mc" or (method == "auto" and n + 1 not in (2, 3)):
        i_val = i_integral(n + 1, 1.0, samples, seed).value
    elif n + 1 == 2:
        i_val = I2_EXACT
    elif n + 1 == 3:
        i_val = I3_EXACT
    else:
        raise DomainError(f"no closed form for I_{n + 1}; use method='mc'")
    bound_sphere = 2.0 ** 2.5 * ratio ** (n / 2.0) * i_val
    return bound_sphere, bound_sphere / 2.0


@dataclass(frozen=True)
class PowerLawReport:
    """Ratio of n-dimensional to (1-dimensional)^n expected minima across d."""

    n: int
    d_list: tuple[int, ...]
    ratios: tuple[float, ...]
    spread: float

    def to_json(self) -> dict:
        return {"n": self.n, "d_list": list(self.d_list),
                "ratios": list(self.ratios), "spread": self.spread}


def minima_power_law_check(family: Callable[[int, int], EnsembleSpec], n: int,
                           d_list: Sequence[int], samples: int = 400_000,
                           seed: int = 0) -> PowerLawReport:
    """Check that expected minima in dimension n scale like the n-th power
    of the one-dimensional count.

    ``family(n, d)`` builds the ensemble at each dimension/degree.  The GOE
    draws are shared across the d sweep (coupled estimates) so the reported
    spread reflects the d-dependence, not Monte-Carlo noise.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    draws_hi = goe_lambda_max_draws(n + 1, samples, seed)
    draws_lo = draws_hi if n == 1 else goe_lambda_max_draws(2, samples, seed)
    ratios = []
    for d in d_list:
        e_hi = family(n, d)
        e_lo = family(1, d)
        hi = _minima_full_from_draws(e_hi, draws_hi)
        lo = _minima_full_from_draws(e_lo, draws_lo)
        ratios.append(hi / lo ** n)
    ratios = tuple(float(r) for r in ratios)
    mean = sum(ratios) / len(ratios)
    spread = (max(ratios) - min(ratios)) / mean if mean else float("nan")
    return PowerLawReport(n, tuple(int(d) for d in d_list), ratios, spread)


def _minima_full_from_draws(e: EnsembleSpec, draws: np.ndarray) -> float:
    B = rmt_B(e)
    inv = one_minus_B_inv(e)
    value, _ = i_from_draws(draws, e.n + 1, max(B, 0.0))
    return 2.0 * (1.0 + B) ** ((e.n + 1) / 2.0) * inv ** (e.n / 2.0) * value
