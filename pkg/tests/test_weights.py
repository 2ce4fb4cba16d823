import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from malab.errors import ConvexityError, DomainError, OutOfDomainError
from malab.weights import (
    DensitySample,
    KVerdict,
    TailFunction,
    WeightSpec,
    check_condition_K,
    conjugate_value,
    eval_weight,
    inverse_conjugate,
    inverse_conjugate_array,
    legendre_conjugate,
    luxembourg_norm,
)
from malab import _kernels


def mp_loglog_weight(t, p, n):
    """High-precision oracle for t (log(t+10))^n (log log(t+10))^p."""
    with mpmath.workdps(40):
        t = mpmath.mpf(t)
        L = mpmath.log(t + 10)
        return float(t * L ** n * mpmath.log(L) ** p)


# -- eval_weight ------------------------------------------------------------


def test_power_weight_value():
    assert eval_weight(WeightSpec("PowerP", 2), 3.0) == 9.0


def test_log_weight_vanishes_at_zero():
    assert eval_weight(WeightSpec("LogP", 1, 1), 0.0) == 0.0


def test_loglog_weight_matches_high_precision():
    spec = WeightSpec("LogLogP", 2, 2)
    t0 = math.exp(math.e) - 10.0
    assert t0 > 0
    ts = np.concatenate([[t0], np.geomspace(1e-3, 1e6, 9)])
    got = eval_weight(spec, ts)
    want = np.array([mp_loglog_weight(t, 2, 2) for t in ts])
    np.testing.assert_allclose(got, want, rtol=1e-13)


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        eval_weight(WeightSpec("PowerP", 2), -1.0)


def test_tabulated_out_of_range():
    spec = WeightSpec("Tabulated", table=([0, 1, 2, 3], [0, 1, 4, 9]))
    assert eval_weight(spec, 2.0) == pytest.approx(4.0)
    with pytest.raises(OutOfDomainError):
        eval_weight(spec, 3.5)


def test_spec_roundtrip_dict():
    spec = WeightSpec("loglogp", 3.5, 3)
    assert WeightSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(DomainError):
        WeightSpec.from_dict({"family": "PowerP", "q": 2})


# -- condition (K) ----------------------------------------------------------


@pytest.mark.parametrize("p,expected", [(0.5, False), (1, False), (1.5, True), (2, True)])
def test_power_family_verdicts(p, expected):
    r = check_condition_K(WeightSpec("PowerP", p, 1))
    assert (r.verdict is KVerdict.SATISFIES) is expected


@pytest.mark.parametrize("family", ["LogP", "LogLogP"])
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("dp,expected", [(-1, False), (0, False), (0.5, True), (1, True)])
def test_log_family_verdicts(family, n, dp, expected):
    if n + dp < 0:
        pytest.skip("negative exponent")
    r = check_condition_K(WeightSpec(family, n + dp, n))
    assert (r.verdict is KVerdict.SATISFIES) is expected


def test_documented_examples():
    assert check_condition_K(WeightSpec("PowerP", 2)).verdict is KVerdict.SATISFIES
    assert check_condition_K(WeightSpec("LogP", 2, 2)).verdict is KVerdict.FAILS
    assert check_condition_K(WeightSpec("LogLogP", 4, 3)).verdict is KVerdict.SATISFIES


def test_tabulated_is_unknown():
    spec = WeightSpec("Tabulated", table=([0, 1, 2], [0, 1, 4]))
    r = check_condition_K(spec)
    assert r.verdict is KVerdict.UNKNOWN and r.tail is None


def test_loglog_tail_is_power_of_s():
    # for large s the extracted tail tends to s^(p/n)
    spec = WeightSpec("LogLogP", 5, 2)
    tail = check_condition_K(spec).tail
    s = np.array([50.0, 200.0, 600.0])
    np.testing.assert_allclose(tail(s), s ** 2.5, rtol=1e-12)


@pytest.mark.parametrize("spec", [WeightSpec("PowerP", 1.5), WeightSpec("LogP", 2.5, 2),
                                  WeightSpec("LogLogP", 3.5, 3), WeightSpec("LogLogP", 3, 2)])
def test_satisfied_tails_are_cauchy(spec):
    r = check_condition_K(spec)
    assert r.cauchy_threshold is not None
    incs = np.asarray(r.increments)
    k = int(round(math.log2(r.cauchy_threshold)))
    assert np.all(incs[k:] < 1e-6)


@pytest.mark.parametrize("spec", [WeightSpec("PowerP", 1), WeightSpec("LogP", 2, 2),
                                  WeightSpec("LogLogP", 3, 3), WeightSpec("LogLogP", 1, 2)])
def test_failed_tails_have_increments_bounded_below(spec):
    r = check_condition_K(spec)
    assert r.verdict is KVerdict.FAILS
    assert min(r.increments[-20:]) > 0.5


def test_tail_integral_closed_form():
    h = TailFunction.power(2.0)
    assert h.reciprocal_integral(1.0, 4.0) == pytest.approx(0.75, rel=1e-12)
    np.testing.assert_allclose(h.doubling_increments(1.0, 4), [0.5, 0.25, 0.125, 0.0625], rtol=1e-12)


# -- Luxembourg norm --------------------------------------------------------


def brute_force_norm(f, spec, lo, hi, num=200001):
    rs = np.linspace(lo, hi, num)
    w1 = eval_weight(spec, 1.0)
    vals = np.array([np.dot(f.masses, eval_weight(spec, f.values / r)) for r in rs])
    return rs[np.argmax(vals <= w1)]


def test_constant_density_has_unit_norm():
    f = DensitySample.uniform(np.ones(7))
    for spec in (WeightSpec("PowerP", 2), WeightSpec("LogP", 3, 2), WeightSpec("LogLogP", 3, 2)):
        assert luxembourg_norm(f, spec) == pytest.approx(1.0, rel=1e-10)


def test_two_valued_density():
    f = DensitySample([2.0, 0.0], [0.5, 0.5])
    spec = WeightSpec("PowerP", 2)
    got = luxembourg_norm(f, spec)
    assert got == pytest.approx(math.sqrt(2.0), rel=1e-10)
    assert brute_force_norm(f, spec, 1.0, 2.0) == pytest.approx(math.sqrt(2.0), abs=1e-5)


def test_zero_density_has_zero_norm():
    assert luxembourg_norm(DensitySample.uniform(np.zeros(4)), WeightSpec("PowerP", 2)) == 0.0


def test_norm_scaling_by_three():
    rng = np.random.default_rng(3)
    f = DensitySample.uniform(rng.exponential(size=50))
    spec = WeightSpec("LogP", 3, 2)
    assert luxembourg_norm(f.scaled(3.0), spec) == pytest.approx(3 * luxembourg_norm(f, spec), rel=1e-9)


def test_density_sample_validation(tmp_path):
    with pytest.raises(DomainError):
        DensitySample([1.0, -1.0], [0.5, 0.5])
    with pytest.raises(DomainError):
        DensitySample([1.0, 1.0], [0.5, 0.6])
    f = DensitySample([0.5, 1.5], [0.25, 0.75])
    path = tmp_path / "f.csv"
    f.to_csv(path)
    assert path.read_text().splitlines()[0] == "f,m"
    g = DensitySample.from_csv(path)
    np.testing.assert_array_equal(g.values, f.values)


positive_samples = st.lists(st.floats(0.0, 50.0), min_size=1, max_size=30).filter(lambda v: max(v) > 1e-3)


@settings(max_examples=60, deadline=None)
@given(positive_samples, st.floats(1e-3, 1e3), st.sampled_from([
    WeightSpec("PowerP", 2), WeightSpec("PowerP", 1.3), WeightSpec("LogP", 2, 1), WeightSpec("LogLogP", 3, 2)]))
def test_norm_positive_homogeneity(values, s, spec):
    f = DensitySample.uniform(values)
    assert luxembourg_norm(f.scaled(s), spec) == pytest.approx(s * luxembourg_norm(f, spec), rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(positive_samples, st.data())
def test_norm_monotone(values, data):
    f = DensitySample.uniform(values)
    bumps = data.draw(st.lists(st.floats(0.0, 10.0), min_size=len(values), max_size=len(values)))
    g = DensitySample.uniform(np.asarray(values) + np.asarray(bumps))
    spec = WeightSpec("LogP", 2, 1)
    assert luxembourg_norm(f, spec) <= luxembourg_norm(g, spec) * (1 + 1e-10) + 1e-10


# -- conjugates -------------------------------------------------------------


def test_square_conjugate():
    spec = WeightSpec("PowerP", 2)
    s = np.array([0.0, 1.0, 2.0, 4.0])
    conj = legendre_conjugate(spec, s)
    np.testing.assert_allclose(conj.values, s ** 2 / 4, atol=1e-6)
    # dense grid search oracle
    t = np.linspace(0, 10, 200001)
    brute = np.array([np.max(si * t - t ** 2) for si in s])
    np.testing.assert_allclose(conj.values, brute, atol=1e-8)


def test_conjugate_at_zero_slope():
    for spec in (WeightSpec("PowerP", 3), WeightSpec("LogP", 2, 1), WeightSpec("LogLogP", 2, 1)):
        assert legendre_conjugate(spec, [0.0]).values[0] == 0.0


def test_biconjugate_recovers_weight():
    spec = WeightSpec("LogP", 3, 2)
    t = np.linspace(0.0, 20.0, 201)
    s_max = float(spec.derivative(t[-1]))
    s = np.linspace(0.0, s_max, 20001)
    conj = legendre_conjugate(spec, s)
    back, _ = _kernels.conjugate_sweep(s, np.ascontiguousarray(conj.values), t)
    np.testing.assert_allclose(back, eval_weight(spec, t), atol=1e-6)


def test_nonconvex_table_rejected():
    spec = WeightSpec("Tabulated", table=([0, 1, 2, 3], [0, 2, 2.5, 6]))
    with pytest.raises(ConvexityError):
        legendre_conjugate(spec, [0.0, 1.0])


def test_pointwise_conjugate_matches_sweep():
    spec = WeightSpec("LogLogP", 3, 2)
    s = np.linspace(0.0, 60.0, 31)
    sweep = legendre_conjugate(spec, s, num=400001)
    point, _ = conjugate_value(spec, s)
    np.testing.assert_allclose(sweep.values, point, atol=1e-6)


def test_inverse_conjugate_values():
    spec = WeightSpec("PowerP", 2)
    assert inverse_conjugate(spec, 1.0)[0] == pytest.approx(2.0, abs=1e-10)
    assert inverse_conjugate(spec, 0.0) == (0.0, False)
    s, flag = inverse_conjugate(spec, -0.5)
    assert s == 0.0 and flag


@pytest.mark.parametrize("spec", [WeightSpec("PowerP", 2), WeightSpec("PowerP", 1.5),
                                  WeightSpec("LogP", 3, 2), WeightSpec("LogLogP", 3, 2)])
def test_inverse_conjugate_round_trip(spec):
    y = np.random.default_rng(7).uniform(0.0, 50.0, 20)
    s, flag = inverse_conjugate_array(spec, y)
    assert not flag.any()
    back, _ = conjugate_value(spec, s)
    np.testing.assert_allclose(back, y, atol=1e-8)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(0.0, 30.0),
       st.sampled_from([WeightSpec("PowerP", 2), WeightSpec("PowerP", 1.5),
                        WeightSpec("LogP", 2, 1), WeightSpec("LogLogP", 3, 2)]))
def test_young_inequality(t, s, spec):
    val, _ = conjugate_value(spec, s)
    assert s * t <= eval_weight(spec, t) + val + 1e-8
