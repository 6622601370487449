import csv
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pvaltools import distfn
from pvaltools.errors import DegenerateInput, DomainError, InsufficientData, UndefinedStatistic
from pvaltools.inference import (
    SampleSummary,
    TestSpec,
    fit_pseudo_data,
    p_from_t,
    summarize,
    t_test,
    t_test_data,
    welch_df,
)

from . import oracle

FIXTURES = Path(__file__).parent / "fixtures"


def _read_column(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    return [float(r[0]) for r in rows[1:]]


def _hand_calc(path):
    # pull the recorded hand results out of the fixture header
    text = path.read_text()
    mean = float(text.split("mean = ")[1].split()[0])
    var = float(text.split("variance = ")[1].split("=")[1].split(",")[0])
    return mean, var


# --------------------------------------------------------------- summarize

def test_summarize_hand_examples():
    assert summarize([1, 2, 3]) == SampleSummary(3, 2.0, 1.0)
    assert summarize([5, 5, 5, 5]) == SampleSummary(4, 5.0, 0.0)


def test_summarize_fixture_matches_hand_calculation():
    path = FIXTURES / "summary10.csv"
    mean, var = _hand_calc(path)
    s = summarize(_read_column(path))
    assert s.n == 10
    assert s.mean == pytest.approx(mean, abs=1e-12)
    assert s.sd == pytest.approx(math.sqrt(var), abs=1e-12)


def test_summarize_errors():
    with pytest.raises(InsufficientData):
        summarize([1.0])
    with pytest.raises(DomainError):
        summarize([1.0, math.nan])
    with pytest.raises(DomainError):
        SampleSummary(3, 1.0, -0.1)


# ------------------------------------------------------------------ t_test

def test_identical_groups():
    g = SampleSummary(5, 2.0, 1.0)
    one = t_test(g, g, TestSpec(tails="one-greater"))
    two = t_test(g, g, TestSpec(tails="two"))
    assert one.t == 0.0 and one.p == 0.5
    assert two.p == 1.0


def test_worked_example():
    g1, g2 = SampleSummary(5, 3.0, 2.0), SampleSummary(5, 0.0, 2.0)
    r = t_test(g1, g2, TestSpec(tails="one-greater"))
    assert r.t == pytest.approx(3.0 / (2.0 * math.sqrt(0.4)), abs=1e-14)
    assert r.df == 8.0
    assert r.pooled_sd == 2.0
    assert r.cohen_d == 1.5
    assert r.p == pytest.approx(1.0 - distfn.t_cdf(r.t, 8), abs=1e-15)
    se = oracle.binomial_se(oracle.NULL_T_EXCEED_2_3717_DF8, 10_000_000)
    assert abs(r.p - oracle.NULL_T_EXCEED_2_3717_DF8) < 3 * se


def test_null_offset_absorbs_difference():
    g1, g2 = SampleSummary(5, 3.0, 2.0), SampleSummary(5, 0.0, 2.0)
    r = t_test(g1, g2, TestSpec(null_delta=3.0))
    assert r.t == 0.0 and r.p == 0.5
    assert r.mean_diff == 3.0


def test_one_sample():
    g = SampleSummary(9, 1.5, 1.2)
    r = t_test(g, None, TestSpec(variant="one-sample", null_delta=0.5))
    assert r.t == pytest.approx(1.0 / (1.2 / 3.0))
    assert r.df == 8.0
    assert r.cohen_d == pytest.approx(1.0 / 1.2)
    assert r.pooled_sd is None
    with pytest.raises(DomainError):
        t_test(g, g, TestSpec(variant="one-sample"))


def test_welch_against_scipy():
    from scipy import stats

    a = [4.1, 5.3, 6.2, 5.9, 7.7, 6.6]
    b = [3.2, 3.9, 4.4, 3.1]
    r = t_test_data(a, b, TestSpec(variant="welch", tails="two"))
    ref = stats.ttest_ind(a, b, equal_var=False)
    assert r.t == pytest.approx(ref.statistic, abs=1e-12)
    assert r.p == pytest.approx(ref.pvalue, abs=1e-12)
    pooled = t_test_data(a, b, TestSpec(tails="two"))
    ref = stats.ttest_ind(a, b)
    assert pooled.p == pytest.approx(ref.pvalue, abs=1e-12)


def test_degenerate_scale():
    g1, g2 = SampleSummary(4, 3.0, 0.0), SampleSummary(4, 1.0, 0.0)
    r = t_test(g1, g2, TestSpec(tails="one-greater"))
    assert r.degenerate and r.t == math.inf and r.p == 0.0
    r = t_test(g1, g2, TestSpec(tails="one-less"))
    assert r.p == 1.0
    with pytest.raises(UndefinedStatistic):
        t_test(g1, g1)


def test_to_dict_keys():
    r = t_test(SampleSummary(5, 3.0, 2.0), SampleSummary(5, 0.0, 2.0))
    assert {"t", "df", "p", "tails", "mean_diff", "pooled_sd", "cohen_d", "variant"} <= set(r.to_dict())


def test_unknown_options():
    with pytest.raises(DomainError):
        TestSpec(tails="sideways")
    with pytest.raises(DomainError):
        TestSpec(variant="paired")


# -------------------------------------------------------------- invariants

samples = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=12)


def _spread(xs):
    return max(xs) - min(xs) > 1e-3


@settings(max_examples=200, deadline=None)
@given(a=samples, b=samples, shift=st.floats(-1e3, 1e3))
def test_location_invariance(a, b, shift):
    if not (_spread(a) and _spread(b)):
        return
    r0 = t_test_data(a, b)
    r1 = t_test_data(np.add(a, shift), np.add(b, shift))
    assert r1.t == pytest.approx(r0.t, rel=1e-9, abs=1e-9)
    assert r1.p == pytest.approx(r0.p, abs=1e-12 + 1e-9 * r0.p)
    assert r1.df == r0.df


@settings(max_examples=200, deadline=None)
@given(a=samples, b=samples, k=st.floats(0.01, 100))
def test_scale_equivariance(a, b, k):
    if not (_spread(a) and _spread(b)):
        return
    r0 = t_test_data(a, b)
    r1 = t_test_data(np.multiply(a, k), np.multiply(b, k))
    assert r1.t == pytest.approx(r0.t, rel=1e-9, abs=1e-9)
    assert r1.p == pytest.approx(r0.p, abs=1e-12)
    assert r1.mean_diff == pytest.approx(k * r0.mean_diff, rel=1e-9, abs=1e-9)
    assert r1.pooled_sd == pytest.approx(k * r0.pooled_sd, rel=1e-9)


@settings(max_examples=300, deadline=None)
@given(t=st.floats(1e-6, 60), df=st.floats(0.5, 300))
def test_tail_identity(t, df):
    g = p_from_t(t, df, "one-greater")
    l = p_from_t(t, df, "one-less")
    assert g + l == pytest.approx(1.0, abs=1e-15)
    assert p_from_t(t, df, "two") == pytest.approx(2 * min(g, l), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 50), m1=st.floats(-10, 10), m2=st.floats(-10, 10), s=st.floats(0.1, 10))
def test_pooled_equals_welch_for_balanced_equal_sd(n, m1, m2, s):
    g1, g2 = SampleSummary(n, m1, s), SampleSummary(n, m2, s)
    p = t_test(g1, g2, TestSpec(variant="pooled"))
    w = t_test(g1, g2, TestSpec(variant="welch"))
    assert w.t == pytest.approx(p.t, rel=1e-12, abs=1e-12)
    assert w.df == pytest.approx(p.df, abs=1e-9)
    assert welch_df(s, n, s, n) == pytest.approx(2 * n - 2, abs=1e-9)


# ---------------------------------------------------------- pseudo-data fit

CONTROL = [4.2, 5.6, 4.9, 6.1, 5.2]


def test_fit_identity_target():
    c, t = fit_pseudo_data(CONTROL, 5, 0.5)
    np.testing.assert_allclose(t, c, atol=1e-9)


@pytest.mark.parametrize("target", [0.06, 0.04])
def test_fit_reference_targets(target):
    c, t = fit_pseudo_data(CONTROL, 5, target, TestSpec(tails="one-greater"))
    r = t_test_data(t, c)
    assert abs(r.p - target) <= 1e-9
    assert np.std(t, ddof=1) == pytest.approx(np.std(c, ddof=1), abs=1e-12)


def test_fit_decreasing_targets_give_increasing_shifts():
    shifts = []
    for target in (0.05, 0.005, 0.0005, 0.0001):
        c, t = fit_pseudo_data(CONTROL, 5, target)
        assert abs(t_test_data(t, c).p - target) <= 1e-9
        shifts.append(float(np.mean(t - c)))
    assert all(b > a for a, b in zip(shifts, shifts[1:]))


@pytest.mark.parametrize("tails", ["one-less", "two"])
@pytest.mark.parametrize("variant", ["pooled", "welch"])
def test_fit_other_tails(tails, variant):
    spec = TestSpec(variant=variant, tails=tails)
    for target in (0.3, 0.01):
        c, t = fit_pseudo_data(CONTROL, 5, target, spec)
        assert abs(t_test_data(t, c, spec).p - target) <= 1e-9


def test_fit_errors():
    with pytest.raises(DegenerateInput):
        fit_pseudo_data([2.0, 2.0, 2.0], 3, 0.05)
    with pytest.raises(DomainError):
        fit_pseudo_data(CONTROL, 4, 0.05)
    with pytest.raises(DomainError):
        fit_pseudo_data(CONTROL, 5, 1.0)
    with pytest.raises(DomainError):
        fit_pseudo_data(CONTROL, 5, 0.05, TestSpec(variant="one-sample"))
