import math
from pathlib import Path

import numpy as np
import pytest

from errors import TooFewSamples
from norms import (
    ClassifyPolicy,
    VerdictLabel,
    captured_seminorms,
    classify,
    classify_reports,
    norm_report,
    propagation_estimates,
    report_sequence,
    seminorm,
)
from opcore import (
    Window,
    canonical_family,
    capture_commutator,
    commutator_window,
    dilation_shift,
    hermite_p,
    hermite_q,
    product,
    toeplitz,
    weighted_shift,
)
from specfile import load_spec

SPECS = Path(__file__).resolve().parent.parent / "specs"
GEOMETRIC = [2**k for k in range(1, 15)]


def test_seminorm_modes():
    w = Window(np.diag([3.0, -4.0]))
    assert seminorm(w, "u") == pytest.approx(4.0)
    assert seminorm(w, "s1") == pytest.approx(7.0)
    assert seminorm(w, "s2") == pytest.approx(5.0)
    assert seminorm(Window(np.zeros((3, 3))), "s1") == 0.0


def test_captured_norms_equal_dense_norms():
    spec = product(hermite_q(), toeplitz({-1: 1, 2: 0.5j}))
    for n in (3, 7, 12):
        u, s1, s2 = captured_seminorms(capture_commutator(spec, canonical_family(), n))
        win = commutator_window(spec, canonical_family(), n)
        assert u == pytest.approx(seminorm(win, "u"), rel=1e-12)
        assert s1 == pytest.approx(seminorm(win, "s1"), rel=1e-12)
        assert s2 == pytest.approx(seminorm(win, "s2"), rel=1e-12)


def test_report_sequence_requires_increasing_grid():
    with pytest.raises(ValueError):
        report_sequence(hermite_q(), canonical_family(), [4, 2])


def test_report_sequence_workers_keep_order():
    ns = list(range(1, 40))
    serial = report_sequence(hermite_q(), canonical_family(), ns)
    threaded = report_sequence(hermite_q(), canonical_family(), ns, workers=4)
    assert serial == threaded


def test_log_shift_closed_forms():
    reports = report_sequence(weighted_shift("log"), canonical_family(), [100, 1000, 10_000])
    for r in reports:
        assert r.ratio1 == pytest.approx(math.log(r.n) / r.n, abs=1e-12)
        assert r.ratio2 == pytest.approx(math.log(r.n) / math.sqrt(r.n), abs=1e-12)
    verdicts = classify_reports(report_sequence(weighted_shift("log"), canonical_family(), GEOMETRIC))
    assert verdicts["ratio1"].label is VerdictLabel.TENDS_TO_ZERO
    assert verdicts["ratio2"].label is VerdictLabel.TENDS_TO_ZERO


def test_sqrt_shift_is_two_foelner_limit_one():
    for r in report_sequence(weighted_shift("sqrt"), canonical_family(), [100, 1000, 10_000]):
        assert abs(r.ratio2 - 1) < 1e-12
        assert r.ratio1 == pytest.approx(r.n**-0.5, abs=1e-12)


def test_linear_shift_diverges_in_ratio2():
    reports = report_sequence(weighted_shift("linear"), canonical_family(), GEOMETRIC)
    for r in reports:
        assert r.ratio1 == pytest.approx(1.0, abs=1e-12)
    assert classify_reports(reports)["ratio2"].label is VerdictLabel.DIVERGES


def test_unilateral_shift_foelner_but_not_quasidiagonal():
    reports = report_sequence(weighted_shift("const:1"), canonical_family(), range(1, 10_001))
    assert all(abs(r.u - 1) < 1e-14 for r in reports)
    assert all(r.ratio1 == pytest.approx(1 / r.n, rel=1e-14) for r in reports[::97])
    sample = [reports[n - 1] for n in GEOMETRIC[:13]]
    verdicts = classify_reports(sample)
    assert verdicts["ratio1"].label is VerdictLabel.TENDS_TO_ZERO
    assert verdicts["ratio2"].label is VerdictLabel.TENDS_TO_ZERO
    assert verdicts["u"].label is VerdictLabel.TENDS_TO_POSITIVE
    assert verdicts["u"].limit == pytest.approx(1.0)


def test_dilation_shift_lower_bound():
    for r in report_sequence(dilation_shift("sqrt"), canonical_family(), range(1, 1001)):
        n = r.n
        for a, ratio in ((1, r.ratio1), (2, r.ratio2)):
            proved = math.ceil(n / 2) ** (1 / a) * ((n + 1) / 2) ** 0.5 / n ** (1 / a)
            assert ratio >= proved * (1 - 1e-12)
            assert ratio >= (n + 1) ** 0.5 / 2 ** (1 / a + 0.5) * (1 - 1e-12)


def test_hermite_commutators():
    ns = list(range(1, 1001))
    for spec in (hermite_q(), hermite_p()):
        for r in report_sequence(spec, canonical_family(), ns):
            assert r.u == pytest.approx(math.sqrt(r.n / 2), abs=1e-10)
        grid = [2**k for k in range(1, 14)] + [10_000]
        verdicts = classify_reports(report_sequence(spec, canonical_family(), grid))
        assert verdicts["ratio1"].label is VerdictLabel.TENDS_TO_ZERO
        assert verdicts["ratio2"].label is VerdictLabel.TENDS_TO_POSITIVE
        assert abs(verdicts["ratio2"].limit - 1) < 0.02


def test_hermite_squares_are_not_foelner():
    for spec in (product(hermite_q(), hermite_q()), product(hermite_p(), hermite_p())):
        for r in report_sequence(spec, canonical_family(), range(1, 1001)):
            assert r.ratio1 >= 1
            assert r.ratio2 >= math.sqrt(r.n) * (1 - 1e-10)


def test_propagation_estimates_hold():
    for spec in (hermite_q(), weighted_shift("log"), toeplitz({-2: 1, 1: 3})):
        for n in (5, 50, 500):
            assert all(propagation_estimates(norm_report(spec, canonical_family(), n)).values())


def test_classify_needs_samples():
    with pytest.raises(TooFewSamples):
        classify([1.0, 0.5, 0.25])


def test_classify_labels():
    xs = list(range(1, 21))
    assert classify([1 / x for x in xs]).label is VerdictLabel.TENDS_TO_ZERO
    assert classify([float(x) for x in xs]).label is VerdictLabel.DIVERGES
    positive = classify([2.0 + 1 / x**2 for x in xs])
    assert positive.label is VerdictLabel.TENDS_TO_POSITIVE
    assert positive.limit == pytest.approx(2.0, rel=0.01)
    assert str(positive).startswith("tends_to_positive(")
    oscillating = [1.0 if x % 2 else 3.0 for x in xs]
    assert classify(oscillating).label is VerdictLabel.INCONCLUSIVE


def test_classify_policy_thresholds():
    strict = ClassifyPolicy(zero_tol=1e-6, min_slope=5.0)
    values = [0.5 / x for x in range(1, 11)]
    assert classify(values, strict).label is not VerdictLabel.TENDS_TO_ZERO
    assert classify(values).label is VerdictLabel.TENDS_TO_ZERO


def _random_window(rng, size=9):
    return rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))


@pytest.mark.parametrize("mode", ["u", "s1", "s2"])
def test_seminorms_ignore_basis_relabeling(mode):
    rng = np.random.default_rng(11)
    for _ in range(20):
        a = _random_window(rng)
        perm = rng.permutation(a.shape[0])
        relabeled = a[np.ix_(perm, perm)]
        assert seminorm(Window(relabeled), mode) == pytest.approx(seminorm(Window(a), mode), rel=1e-12)


@pytest.mark.parametrize("mode", ["u", "s1", "s2"])
def test_seminorms_scale_with_modulus(mode):
    rng = np.random.default_rng(12)
    for _ in range(20):
        a = _random_window(rng)
        c = complex(rng.standard_normal(), rng.standard_normal())
        assert seminorm(Window(c * a), mode) == pytest.approx(abs(c) * seminorm(Window(a), mode), rel=1e-12)


def test_squared_sqrt_shift_is_not_two_foelner():
    spec = load_spec(SPECS / "shift_square_sqrt.json").operator
    reports = report_sequence(spec, canonical_family(), GEOMETRIC)
    for r in reports:
        assert r.ratio1 >= 1
        assert r.ratio2 == pytest.approx(math.sqrt(2 * r.n), rel=1e-12)
    assert reports[-1].ratio1 == pytest.approx(2.0, rel=1e-3)
    assert classify_reports(reports)["ratio2"].label is VerdictLabel.DIVERGES


def test_floor_is_not_decay_to_zero():
    xs = list(range(1, 17))
    verdict = classify([0.5 + 10 / x for x in xs], ns=xs)
    assert verdict.label is VerdictLabel.INCONCLUSIVE
    assert verdict.evidence["late_slope"] > verdict.evidence["early_slope"]


def test_floor_under_square_root_decay_on_geometric_grid():
    ys = [0.05 + 1 / math.sqrt(n) for n in GEOMETRIC]
    assert classify(ys, ns=GEOMETRIC).label is VerdictLabel.INCONCLUSIVE
    # without the floor the same decay is recognised
    assert classify([1 / math.sqrt(n) for n in GEOMETRIC], ns=GEOMETRIC).label is VerdictLabel.TENDS_TO_ZERO


def test_flatten_tolerance_is_configurable():
    xs = list(range(1, 17))
    loose = ClassifyPolicy(flatten_tol=0.5)
    assert classify([0.5 + 10 / x for x in xs], loose, xs).label is VerdictLabel.TENDS_TO_ZERO
