import math

import numpy as np
import pytest

from sumhess import cones, symfun
from sumhess.cones import InequalityConstants, MARGIN_FLOOR
from sumhess.errors import ConfigError
from sumhess.lift import ConeSpec
from oracles import deleted_sym_enum


def test_constants_examples():
    c = InequalityConstants.for_problem(4, 2, 2, delta=0.4, eps=0.1)
    fact = math.factorial(6)
    assert c.delta1 == pytest.approx(0.4**2 / (fact * 16), rel=1e-12)
    assert c.theta1 == pytest.approx(c.delta1, rel=1e-12)  # exponent k-1 = 1
    assert c.theta2 == pytest.approx(0.4 / (4 * 2 * 6**3), rel=1e-12)
    assert cones.deletion_constant(3, 1.0, 0.1) == pytest.approx(0.00125)


def test_ordered_inequalities_examples():
    res = cones.check_ordered_cone_inequalities([3.0, 2.0, 1.0], 2)
    assert res["hypothesis"]
    assert res["margins"]["deleted_positive"] == pytest.approx(3.0)
    deleted = symfun.deleted_sym_table(np.array([3.0, 2.0, 1.0]), 1)
    assert deleted.tolist() == [3.0, 4.0, 5.0]
    # symmetric point: the weighted lower bound is tight
    res = cones.check_ordered_cone_inequalities([1.0, 1.0, 1.0], 2)
    assert res["margins"]["weighted_lower"] == pytest.approx(0.0, abs=1e-14)
    # degenerate midpoint segment
    res = cones.check_ordered_cone_inequalities(
        [1.0, 1.0, 1.0], 2, partner=[1.0, 1.0, 1.0]
    )
    assert res["margins"]["midpoint_concavity"] == pytest.approx(0.0, abs=1e-14)
    # unsorted input is a skip, not a failure
    res = cones.check_ordered_cone_inequalities([1.0, 2.0, 3.0], 2)
    assert not res["hypothesis"]


def test_maclaurin_examples():
    res = cones.check_maclaurin([1.0, 1.0, 1.0], 2, 1)
    assert res["margins"]["ratio_order"] == pytest.approx(0.0, abs=1e-14)
    assert res["margins"]["gradient_sum"] == pytest.approx(0.0, abs=1e-12)
    res = cones.check_maclaurin([3.0, 2.0, 1.0], 2, 1)
    assert res["margins"]["ratio_order"] == pytest.approx(
        2.0 - math.sqrt(11.0 / 3.0), rel=1e-12
    )
    with pytest.raises(ValueError):
        cones.check_maclaurin([1.0, 1.0, 1.0], 2, 0)


def test_negative_entry_example():
    lam = [3.0, 3.0, -1.0]
    res = cones.check_negative_entry(lam, 2, 2)
    assert res["hypothesis"]
    assert res["margins"]["dominates_average"] == pytest.approx(6.0 - 10.0 / 2.0)
    assert res["margins"]["power_lower"] == pytest.approx(10.0 - 1.0)
    # degree one: every deleted value is 1, the average bound is tight
    res = cones.check_negative_entry([3.0, -0.1, -0.2], 1, 1)
    assert res["margins"]["dominates_average"] == pytest.approx(0.0, abs=1e-14)
    assert res["margins"]["power_lower"] == pytest.approx(2.0)  # n - 1 = 2 >= 1
    res = cones.check_negative_entry([1.0, 1.0, 1.0], 2, 0)
    assert not res["hypothesis"]


def test_sum_lift_bounds_example():
    spec = ConeSpec(4, 2, 2)
    res = cones.check_sum_lift_gradient_bounds(
        [1.0, 1.0, 1.0, -0.5], spec, delta=0.4, L=1.0
    )
    assert res["hypothesis"]
    assert res["margins"]["gradient_sum"] > 0
    assert res["margins"]["partial_vs_sum"] > 0


def test_sum_lift_bounds_range_error():
    spec = ConeSpec(3, 2, 2)
    with pytest.raises(ConfigError):
        cones.check_sum_lift_gradient_bounds([1.0, 1.0, -0.5], spec, delta=0.4)


def test_sum_lift_scaling():
    # both sides of the gradient-sum bound scale as L^(k-1)
    spec = ConeSpec(4, 2, 2)
    mu = np.array([0.7, 0.7, 0.65, -0.45])
    res1 = cones.check_sum_lift_gradient_bounds(mu, spec, delta=0.4, L=1.0)
    for c in (0.5, 2.0, 10.0):
        res = cones.check_sum_lift_gradient_bounds(c * mu, spec, delta=0.4, L=c)
        ratio = res["margins"]["gradient_sum"] / res1["margins"]["gradient_sum"]
        assert ratio == pytest.approx(c ** (spec.k - 1), rel=1e-9)


def test_large_entry_deletion_example():
    res = cones.check_large_entry_deletion([1.0, 1.0, -0.1], 2, delta=1.0, eps=0.1)
    assert res["hypothesis"]
    c0 = cones.deletion_constant(3, 1.0, 0.1)
    assert res["margins"]["deletion_factor"] == pytest.approx(
        min(1.0 - c0, 0.9 - c0 * 1.9), rel=1e-12
    )
    res = cones.check_large_entry_deletion([1.0, 1.0, 1.0], 2, delta=1.0, eps=0.1)
    assert not res["hypothesis"]


def test_homogeneity_of_margins():
    lam = np.array([2.0, 1.0, 0.5, -0.3])
    base = cones.check_ordered_cone_inequalities(lam, 2)
    for c in (0.5, 2.0, 10.0):
        res = cones.check_ordered_cone_inequalities(c * lam, 2)
        # S_{k-1}-type margins scale as c^(k-1), S_k-type as c^k
        assert res["margins"]["deleted_positive"] == pytest.approx(
            c * base["margins"]["deleted_positive"], rel=1e-12
        )
        assert res["margins"]["weighted_lower"] == pytest.approx(
            c**2 * base["margins"]["weighted_lower"], rel=1e-9, abs=1e-12
        )


def test_samplers_satisfy_hypotheses():
    spec = ConeSpec(5, 2, 3)
    samples, rate = cones.sample_cone(spec, 200, "gamma_k", seed=1)
    assert rate > 0.01 and samples.shape == (200, 5)
    for lam in samples:
        ok, _ = symfun.in_cone(lam, 3)
        assert ok
    samples, _ = cones.sample_cone(spec, 100, "gamma_k_m", seed=2)
    from sumhess import lift

    tuples = lift.subset_table(5, 2).tuples
    for mu in samples:
        ok, _ = symfun.in_cone(mu[tuples].sum(axis=1), 3)
        assert ok
    samples, _ = cones.sample_cone(spec, 100, "prop25_hypotheses", seed=3)
    assert (samples.min(axis=1) < 0).all()
    samples, _ = cones.sample_cone(spec, 100, "prop26_hypotheses", seed=4, delta=0.4)
    assert (samples[:, -1] < -0.4).all()
    samples, _ = cones.sample_cone(
        spec, 100, "prop27_hypotheses", seed=5, delta=0.5, eps=0.15
    )
    assert (samples[:, -1] <= -0.15 * samples[:, 0]).all()


def test_sampler_positive_orthant_limit():
    spec = ConeSpec(4, 2, 4)
    samples, _ = cones.sample_cone(spec, 100, "gamma_k", seed=7)
    assert (samples > 0).all()  # degree-n cone is the positive orthant
    empty, rate = cones.sample_cone(spec, 0, "gamma_k", seed=7)
    assert empty.shape[0] == 0 and rate == 1.0


def test_sampler_starvation():
    # a proposal shifted deep into the rejected region must error out with
    # diagnostics instead of spinning forever
    from sumhess.errors import SamplerStarvationError

    spec = ConeSpec(4, 2, 3)
    with pytest.raises(SamplerStarvationError) as info:
        cones.sample_cone(spec, 10, "gamma_k", seed=0, shift=-50.0)
    assert info.value.acceptance_rate < 1e-4
    assert info.value.proposals >= 200_000


def test_sampler_impossible_modes():
    with pytest.raises(ConfigError):
        cones.sample_cone(ConeSpec(4, 2, 4), 10, "prop25_hypotheses", seed=1)
    with pytest.raises(ConfigError):
        cones.sample_cone(ConeSpec(3, 2, 2), 10, "prop26_hypotheses", seed=1)
    with pytest.raises(ConfigError):
        cones.sample_cone(ConeSpec(5, 2, 3), 10, "bogus", seed=1)


def test_oracle_equivalence_inside_checks():
    # deleted values used by the checks match explicit enumeration
    rng = np.random.default_rng(11)
    for n in (3, 4, 5):
        for _ in range(20):
            lam = rng.normal(0.5, 1.0, size=n)
            k = int(rng.integers(1, n + 1))
            table = symfun.deleted_sym_table(lam, k - 1)
            for i in range(n):
                ref = deleted_sym_enum(lam, k - 1, i)
                scale = max(abs(ref), 1.0)
                assert abs(table[i] - ref) / scale < 1e-12


@pytest.mark.parametrize(
    "which,spec,kwargs",
    [
        ("prop23", ConeSpec(5, 2, 3), {}),
        ("prop24", ConeSpec(5, 2, 3), {"l": 1}),
        ("prop25", ConeSpec(5, 2, 3), {}),
        ("prop26", ConeSpec(4, 2, 2), {"delta": 0.4}),
        ("prop27", ConeSpec(6, 2, 3), {"delta": 0.5, "eps": 0.15}),
    ],
)
def test_suites_small_runs(which, spec, kwargs):
    report = cones.run_suite(which, spec=spec, trials=300, seed=42, **kwargs)
    assert report.passed, report.as_dict()
    assert report.hypothesis_hits == 300
    assert report.worst_margin > MARGIN_FLOOR


def test_suite_sweep_across_shapes():
    # lighter-weight sweep over more cone shapes; the acceptance suite runs
    # the deep 10^4-sample versions
    trials = 400
    combos = []
    for n in (4, 5, 6):
        for k in range(2, n + 1):
            combos.append(("prop23", ConeSpec(n, 2, k), {}))
            combos.append(("prop24", ConeSpec(n, 2, k), {"l": k - 1}))
            if k <= n - 1:
                combos.append(("prop25", ConeSpec(n, 2, k), {}))
    for n, m, k in [(4, 2, 3), (5, 2, 4), (5, 3, 3), (6, 2, 5), (6, 3, 6), (6, 4, 4)]:
        combos.append(("prop26", ConeSpec(n, m, k), {"delta": 0.4}))
    for n, k in [(4, 2), (5, 3), (6, 3), (6, 4)]:
        combos.append(("prop27", ConeSpec(n, 2, k), {"delta": 0.5, "eps": 0.12}))
    for which, spec, kwargs in combos:
        report = cones.run_suite(which, spec=spec, trials=trials, seed=1234, **kwargs)
        assert report.violations == 0, (which, spec, report.as_dict())
        assert report.hypothesis_hits == trials


def test_identity_suites_small_runs():
    report = cones.run_suite("prop21", n=6, trials=200, seed=1)
    assert report.passed, report.as_dict()
    report = cones.run_suite("prop22", spec=ConeSpec(5, 2, 3), trials=100, seed=2)
    assert report.passed, report.as_dict()
    report = cones.run_suite("mixed", n=4, trials=50, seed=3)
    assert report.passed, report.as_dict()


def test_euler_and_spectral_lift_suites():
    report = cones.run_suite("euler", spec=ConeSpec(4, 2, 3), trials=100, seed=4)
    assert report.passed, report.as_dict()
    report = cones.run_suite(
        "spectral-lift", spec=ConeSpec(5, 2, 3), trials=200, seed=5
    )
    assert report.passed, report.as_dict()


def test_report_flags_violations_with_witness():
    # the aggregation itself must have teeth: a below-floor margin counts as
    # a violation and captures the offending sample
    report = cones.SampleReport(suite="synthetic")
    report.record({"hypothesis": True, "margins": {"good": 1.0}}, [1.0, 2.0])
    assert report.passed and report.violations == 0
    report.record({"hypothesis": False, "margins": {}}, [9.0])
    assert report.hypothesis_hits == 1
    report.record({"hypothesis": True, "margins": {"bad": -1e-9}}, [3.0, 4.0])
    assert not report.passed and report.violations == 1
    assert report.worst_margin == -1e-9
    assert report.witness == [3.0, 4.0]
    # margins within the roundoff floor are not violations
    report2 = cones.SampleReport(suite="synthetic")
    report2.record({"hypothesis": True, "margins": {"tight": -1e-13}}, [0.0])
    assert report2.passed


def test_report_serializes():
    report = cones.run_suite("prop24", spec=ConeSpec(4, 2, 2), trials=50, seed=6, l=1)
    d = report.as_dict()
    assert d["violations"] == 0
    assert d["trials"] == 50
    import json

    json.dumps(d)
