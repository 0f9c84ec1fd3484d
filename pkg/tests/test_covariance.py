import math

import numpy as np
import pytest

from nodal_census import covariance as cov
from nodal_census import ensemble as ens
from nodal_census.errors import DegenerateEnsembleError, DomainError
from nodal_census.specfun import harmonic_dim, sphere_surface


def test_harmonic_covariance_single_term():
    e = ens.make_harmonic(2, 6)
    t = np.linspace(-1, 1, 9)
    from nodal_census.specfun import gegenbauer_normalized
    expected = harmonic_dim(2, 6) / sphere_surface(2) * gegenbauer_normalized(2, 6, t)
    assert np.allclose(cov.covariance_fn(e, t), expected, atol=1e-14)
    assert cov.covariance_fn(e, 1.0) > 0


def test_covariance_domain_error():
    with pytest.raises(DomainError):
        cov.covariance_fn(ens.make_rfs(2, 4), 1.2)


def test_kostlan_covariance_law_module_level():
    e = ens.make_kostlan(2, 11)
    t = np.linspace(-1, 1, 200)
    dev = np.max(np.abs(cov.covariance_fn(e, t) / cov.covariance_fn(e, 1.0) - t ** 11))
    assert dev < 1e-8


def test_harmonic_derivative_closed_form():
    # two equivalent closed forms for F'(1) of the top-degree ensemble
    n, d = 2, 5
    e = ens.make_harmonic(n, d)
    f1, f2 = cov.covariance_derivs(e)
    direct = harmonic_dim(n, d) * (n + d - 1) * d / (n * sphere_surface(n))
    factorial_form = (math.factorial(n + d - 1) * (n + 2 * d - 1)
                      / (math.factorial(d - 1) * math.factorial(n))) / sphere_surface(n)
    assert f1 == pytest.approx(direct, rel=1e-14)
    assert f1 == pytest.approx(factorial_form, rel=1e-14)
    d2_form = (n + d) * (n + d - 1) * d * (d - 1) / (n * (n + 2))
    assert f2 == pytest.approx(harmonic_dim(n, d) * d2_form / sphere_surface(n), rel=1e-14)


def test_degree_zero_mass_is_degenerate():
    ells = ens.admissible_degrees(2)
    raw = np.array([1.0, 0.0])  # all mass at l = 0
    e = ens._normalized("prescribed", 2, 2, 1.0, ells, raw, ens.indicator_profile())
    f1, f2 = cov.covariance_derivs(e)
    assert f1 == 0.0 and f2 == 0.0
    with pytest.raises(DegenerateEnsembleError):
        cov.rmt_B(e)
    with pytest.raises(DegenerateEnsembleError):
        cov.covariance_summary(e)


def test_derivatives_match_finite_differences():
    # independent oracle: rebuild F from scipy Gegenbauer values (valid for
    # t beyond 1, F being a polynomial), centered differences + Richardson
    from scipy.special import eval_gegenbauer

    e = ens.make_rfs(2, 40)
    f1, f2 = cov.covariance_derivs(e)
    masses = ens.covariance_level_masses(e)
    norms = np.array([eval_gegenbauer(int(l), 0.5, 1.0) for l in e.ells])

    def F(t):
        vals = np.array([eval_gegenbauer(int(l), 0.5, t) for l in e.ells])
        return float(np.dot(masses, vals / norms))

    def centered_d1(s):
        return (F(1.0 + s) - F(1.0 - s)) / (2 * s)

    def centered_d2(s):
        return (F(1.0 + s) - 2 * F(1.0) + F(1.0 - s)) / s ** 2

    d1 = (4 * centered_d1(5e-5) - centered_d1(1e-4)) / 3.0
    d2 = (4 * centered_d2(5e-5) - centered_d2(1e-4)) / 3.0
    assert d1 == pytest.approx(f1, rel=1e-5)
    assert d2 == pytest.approx(f2, rel=1e-5)


def test_linear_field_B_is_minus_one():
    e = ens.make_rfs(2, 1)  # only l = 1 admissible
    assert cov.rmt_B(e) == pytest.approx(-1.0, abs=1e-15)
    assert cov.one_minus_B_inv(e) == pytest.approx(0.5, rel=1e-15)


def test_harmonic_one_minus_b_inverse_exact():
    # for the top-degree ensemble (1-B)^{-1} = (d^2 + d + 2)/8 at n = 2
    for d in (5, 50, 500):
        e = ens.make_harmonic(2, d)
        assert cov.one_minus_B_inv(e) == pytest.approx((d * d + d + 2) / 8.0, rel=1e-12)


def test_b_asymptotics_against_moment_ratios():
    # (1-B)^{-1} d^{-2 lam} -> mu_{n+3} / (2 (n+2) mu_{n+1}) of the limit profile
    for make, profile in ((ens.make_rfs, ens.indicator_profile()),
                          (ens.make_kostlan, ens.gaussian_profile())):
        e = make(2, 500)
        table = ens.moments(profile, [3, 5])
        target = table[5] / (2.0 * 4.0 * table[3])
        got = cov.one_minus_B_inv(e) / 500.0 ** (2 * e.lam)
        assert got == pytest.approx(target, rel=0.02)


def test_slice_parameter_kostlan_exact():
    for n in (1, 2, 3):
        for d in (1, 7, 31, 100):
            assert cov.slice_parameter(ens.make_kostlan(n, d)) == pytest.approx(
                math.sqrt(d), abs=1e-10)


def test_slice_parameter_rfs_n1_closed_form_and_kac_rice_oracle():
    # Kac-Rice on the angular covariance rho(theta) = F(cos theta):
    # E[circle zeros] = 2 sqrt(-rho''(0) / rho(0)); independent of the
    # weight-space formula.  The exact value is 2 sqrt(d(d+2)/3).
    for d in (1, 2, 5, 25, 88):
        e = ens.make_rfs(1, d)
        two_delta = 2.0 * cov.slice_parameter(e)
        assert two_delta == pytest.approx(2.0 * math.sqrt(d * (d + 2) / 3.0), abs=1e-10)
        h = 1e-5
        rho = lambda th: cov.covariance_fn(e, math.cos(th))
        lam2 = -(rho(2 * h) - 2 * rho(h) + rho(0.0)) / h ** 2
        oracle = 2.0 * math.sqrt(lam2 / rho(0.0))
        assert two_delta == pytest.approx(oracle, rel=1e-3)


def test_slice_parameter_harmonic():
    for n, d in ((1, 9), (2, 12), (3, 20)):
        e = ens.make_harmonic(n, d)
        assert cov.slice_parameter(e) == pytest.approx(
            math.sqrt(d * (d + n - 1) / n), rel=1e-13)


def test_delta_prime_identity_exact():
    for e in (ens.make_rfs(2, 30), ens.make_kostlan(2, 30), ens.make_harmonic(1, 10)):
        s = cov.covariance_summary(e)
        assert 2.0 * s.delta_prime ** 2 == pytest.approx(s.one_minus_B_inv, rel=1e-15)


def test_rfs_n1_one_minus_b_inv_limit():
    e = ens.make_rfs(1, 500)
    assert cov.one_minus_B_inv(e) / 500 ** 2 == pytest.approx(0.1, rel=0.02)
    # chain: 4 (1+B) delta' I2 sqrt(2) ~ 2 d sqrt(3/5)
    from nodal_census.rmt import I2_EXACT
    B = cov.rmt_B(e)
    chain = 4.0 * (1.0 + B) * cov.slice_parameter_prime(e) * I2_EXACT * math.sqrt(2.0)
    assert chain == pytest.approx(2 * 500 * math.sqrt(3 / 5), rel=0.01)


def test_summary_scale_invariance_bitwise():
    ells = ens.admissible_degrees(16)
    raw = np.linspace(0.5, 1.5, ells.size)
    a = ens._normalized("prescribed", 2, 16, 1.0, ells, raw, ens.indicator_profile())
    b = ens._normalized("prescribed", 2, 16, 1.0, ells, raw * 4.0, ens.indicator_profile())
    sa, sb = cov.covariance_summary(a), cov.covariance_summary(b)
    assert (sa.B, sa.delta, sa.delta_prime) == (sb.B, sb.delta, sb.delta_prime)


def test_summary_json_fields():
    s = cov.covariance_summary(ens.make_rfs(2, 10))
    assert set(s.to_json()) == {"F1", "F2", "B", "one_minus_B_inv", "delta", "delta_prime"}


def test_rescaled_kernel_check_basics():
    rep = cov.rescaled_kernel_check(ens.make_rfs(1, 80), theta_max=10.0, grid=41)
    assert rep.sup_distance < 0.2
    with pytest.raises(DegenerateEnsembleError):
        cov.rescaled_kernel_check(ens.make_harmonic(1, 10), 5.0, 11)
    with pytest.raises(DomainError):
        cov.rescaled_kernel_check(ens.make_rfs(2, 10), 5.0, 11)


def test_rescaled_kernel_zero_matches():
    e = ens.make_kostlan(1, 60)
    masses = ens.covariance_level_masses(e)
    # the angular kernel at 0 equals its own normalization
    assert cov.covariance_fn(e, 1.0) == pytest.approx(float(masses.sum()), rel=1e-14)
    rep = cov.rescaled_kernel_check(e, theta_max=1e-9, grid=3)
    assert rep.sup_distance < 1e-8
