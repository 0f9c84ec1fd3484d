import math

import numpy as np
import pytest

from nodal_census import ensemble as ens
from nodal_census.errors import DegenerateEnsembleError, DomainError

ALL_KINDS = [
    lambda n, d: ens.make_kostlan(n, d),
    lambda n, d: ens.make_rfs(n, d),
    lambda n, d: ens.make_harmonic(n, d),
    lambda n, d: ens.make_prescribed(ens.indicator_profile(), 1.0, n, d),
]


@pytest.mark.parametrize("make", ALL_KINDS)
@pytest.mark.parametrize("n,d", [(1, 1), (1, 8), (2, 5), (2, 24), (3, 13)])
def test_unit_sum_and_parity(make, n, d):
    e = make(n, d)
    assert math.fsum(e.weights.tolist()) == pytest.approx(1.0, abs=1e-12)
    assert np.all(e.weights >= 0)
    assert np.all(e.ells % 2 == d % 2)
    assert e.ells[-1] <= d
    # off-parity lookups are exactly zero
    assert e.weight_at(d - 1) == 0.0
    assert e.weight_at(d + 2) == 0.0


def test_admissible_degrees():
    assert ens.admissible_degrees(5).tolist() == [1, 3, 5]
    assert ens.admissible_degrees(4).tolist() == [0, 2, 4]


def test_kostlan_lambda_and_weights_d2():
    e = ens.make_kostlan(1, 2)
    assert e.lam == 0.5
    # hand evaluation: p^2 proportional to {l=0: 1/2, l=2: 1/4}
    raw = np.array([math.sqrt(0.5), math.sqrt(0.25)])
    expected = raw / raw.sum()
    assert np.allclose(e.weights, expected, atol=1e-14)


def test_rfs_weights_and_psi():
    e5 = ens.make_rfs(2, 5)
    assert e5.ells.tolist() == [1, 3, 5]
    assert np.allclose(e5.weights, 1.0 / 3.0)
    e4 = ens.make_rfs(2, 4)
    assert e4.ells.tolist() == [0, 2, 4]
    assert np.allclose(e4.weights, 1.0 / 3.0)
    assert e4.lam == 1.0
    assert float(e4.psi(0.5)) == pytest.approx(1.0)
    assert float(e4.psi(1.5)) == 0.0


def test_harmonic_top_degree_only():
    e = ens.make_harmonic(2, 9)
    assert math.fsum(e.weights.tolist()) == pytest.approx(1.0, abs=1e-15)
    assert e.weight_at(9) == 1.0
    assert e.weight_at(7) == 0.0
    assert not e.coherent
    rep = ens.coherence_check(e, [5, 9, 13])
    assert not rep.coherent


def test_prescribed_indicator_matches_rfs():
    a = ens.make_prescribed(ens.indicator_profile(), 1.0, 2, 12)
    b = ens.make_rfs(2, 12)
    assert np.allclose(a.weights, b.weights, atol=1e-14)


def test_prescribed_support_cut():
    e = ens.make_prescribed(ens.indicator_profile(), 0.5, 2, 100)
    # d^0.5 = 10: indicator support keeps only degrees <= 10
    assert e.ells[np.nonzero(e.weights)[0]].max() <= 10
    assert e.weight_at(12) == 0.0


def test_prescribed_gaussian_shape():
    d = 64
    e = ens.make_prescribed(ens.gaussian_profile(), 0.5, 2, d)
    nz = e.weights > 0
    shape = np.exp(-e.ells[nz] ** 2 / (4.0 * d))
    ratio = e.weights[nz] / shape
    assert np.max(np.abs(ratio / ratio[0] - 1.0)) < 1e-10


def test_prescribed_degenerate():
    off_support = ens.indicator_profile(5.0, 6.0)
    with pytest.raises(DegenerateEnsembleError):
        ens.make_prescribed(off_support, 1.0, 2, 10)


def test_prescribed_lambda_domain():
    with pytest.raises(DomainError):
        ens.make_prescribed(ens.indicator_profile(), 1.5, 2, 10)


def test_rescaled_weight_values():
    e = ens.make_rfs(2, 100)
    assert ens.rescaled_weight(e, 0.5) == pytest.approx(100.0 / 51.0, rel=1e-14)
    assert ens.rescaled_weight(e, 1.2) == 0.0
    with pytest.raises(DomainError):
        ens.rescaled_weight(e, -0.1)


def test_rescaled_weight_parity_snapping():
    e = ens.make_rfs(1, 9)  # odd parity
    # x d^lam = 2.0 snaps to the nearest odd degree
    assert ens.rescaled_weight(e, 2.0 / 9.0) == e.weight_at(1) * 9.0 or \
        ens.rescaled_weight(e, 2.0 / 9.0) == e.weight_at(3) * 9.0


def test_rescaled_profile_converges_normalized():
    # normalized rescaled weights approach the unit-integral profile
    e = ens.make_kostlan(1, 10_000)
    xs = np.linspace(0.0, 6.0, 301)
    raw = np.array([ens.rescaled_weight(e, float(x)) for x in xs])
    norm = raw / np.trapezoid(raw, xs)
    assert np.max(np.abs(norm - e.psi(xs))) < 1e-2


def test_rescaled_limit_is_twice_psi():
    e = ens.make_rfs(2, 100)
    assert float(ens.rescaled_limit(e, 0.5)) == pytest.approx(2.0)
    h = ens.make_harmonic(2, 10)
    with pytest.raises(DegenerateEnsembleError):
        ens.rescaled_limit(h, 0.5)


def test_moments_indicator():
    table = ens.moments(ens.indicator_profile(), [0, 1, 2, 5])
    for k, val in zip(table.ks, table.values):
        assert val == pytest.approx(1.0 / (k + 1), abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_moment_ratio_rfs(n):
    table = ens.moments(ens.indicator_profile(), [n + 1, n + 3])
    ratio = table[n + 3] / ((n + 2) * table[n + 1])
    assert ratio == pytest.approx(1.0 / (n + 4), rel=1e-8)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_moment_ratio_kostlan(n):
    table = ens.moments(ens.gaussian_profile(), [n + 1, n + 3])
    ratio = table[n + 3] / ((n + 2) * table[n + 1])
    assert ratio == pytest.approx(1.0, rel=1e-8)


def test_moment_sum_examples():
    assert ens.moment_sum(ens.make_rfs(1, 5), 1.0, 1.0) == pytest.approx(3.0, abs=1e-12)
    e = ens.make_harmonic(2, 7)
    assert ens.moment_sum(e, 3.0, 2.0) == pytest.approx(7.0 ** 3, rel=1e-14)


def test_moment_sum_rescaling_lemma():
    # sum l^a p^b ~ d^{lam(a-b+1)} (1/2) int x^a (2 psi)^b dx; for the
    # constant-weight family with a=3, b=2 the limit constant is 1/2
    limit = 0.5 * 4.0 * (1.0 / 4.0)
    ratios = []
    # odd degrees: even ones hit the limit exactly for a cubic summand
    for d in (101, 401, 1601):
        e = ens.make_rfs(1, d)
        ratios.append(ens.moment_sum(e, 3.0, 2.0) / (d ** 2 * limit))
    assert abs(ratios[-1] - 1.0) < 0.05
    deviations = [abs(r - 1.0) for r in ratios]
    assert deviations[0] >= deviations[1] >= deviations[2]


def test_coherence_check_rfs_and_kostlan():
    rep = ens.coherence_check(ens.make_rfs(2, 50), [50, 100, 200])
    assert rep.coherent and rep.decreasing
    assert rep.envelope is not None and rep.envelope[0] > 0
    rep = ens.coherence_check(ens.make_kostlan(2, 100), [100, 400, 1600])
    assert rep.coherent
    assert rep.sup_distances[-1] < rep.sup_distances[0]


def test_scale_invariance_of_normalization():
    ells = ens.admissible_degrees(14)
    raw = np.linspace(1.0, 2.0, ells.size)
    a = ens._normalized("prescribed", 2, 14, 1.0, ells, raw, ens.indicator_profile())
    b = ens._normalized("prescribed", 2, 14, 1.0, ells, raw * 4.0, ens.indicator_profile())
    assert np.array_equal(a.weights, b.weights)


def test_serialization_round_trip():
    for e in (ens.make_kostlan(2, 9), ens.make_rfs(1, 6), ens.make_harmonic(2, 5),
              ens.make_prescribed(ens.gaussian_profile(), 0.5, 2, 20)):
        back = ens.ensemble_from_json(e.to_json())
        assert back.kind == e.kind and back.n == e.n and back.d == e.d
        assert np.allclose(back.weights, e.weights, atol=1e-15)


def test_r_weight_conversions_round_trip():
    e = ens.make_kostlan(2, 11)
    r = ens.r_from_weights(e)
    w = ens.weights_from_r(r, 2, 11)
    assert np.allclose(w / w.sum(), e.weights, atol=1e-14)


def test_weights_are_read_only():
    e = ens.make_rfs(2, 8)
    with pytest.raises(ValueError):
        e.weights[0] = 0.5
