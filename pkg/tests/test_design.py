import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from pvaltools.design import (
    CurveTable,
    DesignQuery,
    PostHocPowerWarning,
    default_effect_grid,
    default_n_list,
    observed_power,
    p_mean,
    p_quantile,
    p_quantile_curve,
    power,
    power_curve,
    round_n,
    solve_n,
)
from pvaltools.errors import DomainError, InfeasibleTarget
from pvaltools.inference import SampleSummary, TestSpec, t_test

from . import oracle


def _scipy_power(effect, n, alpha):
    df = 2 * n - 2
    return stats.nct.sf(stats.t.ppf(1 - alpha, df), df, effect * np.sqrt(n / 2))


# ------------------------------------------------------------------- power

def test_power_under_null_is_alpha():
    for n in (3, 7.5, 40):
        for alpha in (0.05, 0.005):
            assert power(DesignQuery(0.0, n, alpha)) == pytest.approx(alpha, abs=1e-6)
            assert power(DesignQuery(0.0, n, alpha, tails="two")) == pytest.approx(alpha, abs=1e-6)


def test_power_reference_design():
    assert power(DesignQuery(1.5, 6.298691, 0.05)) == pytest.approx(0.80, abs=1e-3)


def test_power_at_seven_against_simulation():
    p7 = power(DesignQuery(1.5, 7, 0.05))
    assert p7 >= 0.80
    assert p7 >= power(DesignQuery(1.5, 6.298691, 0.05))
    se = oracle.binomial_se(oracle.POWER_E1_5_N7_A05, 10_000_000)
    assert abs(p7 - oracle.POWER_E1_5_N7_A05) < 3 * se


def test_power_matches_scipy_reference(np_rng):
    for _ in range(50):
        n = float(np_rng.uniform(2.5, 60))
        e = float(np_rng.uniform(-1, 3))
        a = float(np_rng.choice([0.05, 0.01, 0.005]))
        assert power(DesignQuery(e, n, a)) == pytest.approx(_scipy_power(e, n, a), abs=1e-8)


def test_two_tailed_power_sums_both_regions():
    q = DesignQuery(0.4, 10, 0.05, tails="two")
    df, ncp = 18, 0.4 * math.sqrt(5)
    c = stats.t.ppf(0.975, df)
    ref = stats.nct.sf(c, df, ncp) + stats.nct.cdf(-c, df, ncp)
    assert power(q) == pytest.approx(ref, abs=1e-9)
    # negative effect: same two-tailed power by symmetry
    assert power(DesignQuery(-0.4, 10, 0.05, tails="two")) == pytest.approx(power(q), abs=1e-12)


def test_ncp_conventions():
    assert DesignQuery(1.0, 8).ncp == pytest.approx(2.0)
    assert DesignQuery(1.0, 9, variant="one-sample").ncp == pytest.approx(3.0)
    assert DesignQuery(1.0, 6, n2=3).ncp == pytest.approx(math.sqrt(2.0))
    assert DesignQuery(1.0, 6, n2=3).df == 7.0
    assert DesignQuery(1.0, 6.5).df == 11.0


@settings(max_examples=60, deadline=None)
@given(n=st.floats(3, 50), e=st.floats(0.05, 3), a=st.floats(0.001, 0.2))
def test_power_increases_in_n_effect_alpha(n, e, a):
    base = power(DesignQuery(e, n, a))
    if base > 1 - 1e-9:
        return
    assert power(DesignQuery(e, n * 1.1, a)) > base
    assert power(DesignQuery(e * 1.1, n, a)) > base
    assert power(DesignQuery(e, n, min(a * 1.1, 0.99))) > base


def test_design_query_validation():
    with pytest.raises(DomainError):
        DesignQuery(1.0, 1.0)
    with pytest.raises(DomainError):
        DesignQuery(1.0, 5, alpha=1.0)
    with pytest.raises(DomainError):
        DesignQuery(1.0, 5, tails="left")


# ----------------------------------------------------------------- solve_n

def test_solve_n_reference():
    n = solve_n(1.5, 0.05, 0.8, "one", "two-sample")
    assert n == pytest.approx(6.298691, abs=1e-3)
    assert round_n(n) == 7


def _grid_oracle_n(effect, alpha, target):
    # fine n-grid on scipy's power, then linear interpolation of the crossing
    grid = np.arange(2.0, 20.0, 1e-4)
    pw = _scipy_power(effect, grid, alpha)
    i = int(np.argmax(pw >= target))
    return grid[i - 1] + (target - pw[i - 1]) / (pw[i] - pw[i - 1]) * 1e-4


def test_solve_n_strict_alpha_against_grid():
    n = solve_n(1.5, 0.005, 0.8)
    assert n == pytest.approx(_grid_oracle_n(1.5, 0.005, 0.8), abs=1e-5)
    assert n > solve_n(1.5, 0.05, 0.8)


def test_solve_n_decreases_when_effect_doubles():
    for e in (0.3, 0.8, 1.5):
        assert solve_n(2 * e, 0.05, 0.8) < solve_n(e, 0.05, 0.8)


@pytest.mark.parametrize("e, a, target, tails, variant", [
    (1.5, 0.05, 0.8, "one", "two-sample"),
    (0.5, 0.005, 0.9, "one", "two-sample"),
    (0.7, 0.05, 0.8, "two", "two-sample"),
    (-0.7, 0.05, 0.8, "two", "two-sample"),
    (1.0, 0.01, 0.95, "one", "one-sample"),
    (2.5, 0.05, 0.6, "two", "one-sample"),
])
def test_solve_n_power_roundtrip(e, a, target, tails, variant):
    n = solve_n(e, a, target, tails, variant)
    assert power(DesignQuery(e, n, a, tails, variant)) == pytest.approx(target, abs=1e-6)


def test_solve_n_infeasible():
    with pytest.raises(InfeasibleTarget):
        solve_n(1.0, 0.05, 0.04)
    with pytest.raises(InfeasibleTarget):
        solve_n(-1.0, 0.05, 0.8, "one")
    with pytest.raises(DomainError):
        solve_n(0.0, 0.05, 0.8)


# ------------------------------------------------------------- power_curve

def test_power_curve_shape_and_rows():
    n_list = [3, 5, 10, 20]
    grid = [0.0, 0.5, 1.0, 2.0]
    table = power_curve(n_list, grid, 0.05)
    assert table.values.shape == (4, 4)
    np.testing.assert_allclose(table.values[:, 0], 0.05, atol=1e-6)
    assert np.all(np.diff(table.values[:, 1:], axis=0) > 0)
    assert np.all((table.values >= 0) & (table.values <= 1))


def test_power_curve_workers_identical():
    n_list = [3, 6, 9]
    grid = default_effect_grid(1.0, 0.25)
    a = power_curve(n_list, grid, 0.005, workers=1)
    b = power_curve(n_list, grid, 0.005, workers=3)
    assert np.array_equal(a.values, b.values)


def test_power_curve_spot_cell_simulation():
    rng = np.random.default_rng(11)
    p = oracle.two_sample_p_values(1.0, 10, 1_000_000, rng)
    sim = float(np.mean(p < 0.005))
    table = power_curve([10], [1.0], 0.005)
    assert abs(table.values[0, 0] - sim) < 3 * oracle.binomial_se(sim, 1_000_000)


def test_default_grids():
    assert default_n_list() == list(range(3, 41))
    g = default_effect_grid()
    assert g[0] == 0.0 and g[-1] == 4.0 and len(g) == 81


def test_curve_csv_layout():
    table = power_curve([3, 4], [0.0, 1.0], 0.05)
    buf = io.StringIO()
    table.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# kind=power"
    header = [l for l in lines if not l.startswith("#")][0]
    assert header == "effect,n=3,n=4"
    assert isinstance(table, CurveTable)


# --------------------------------------------------------- expected P-values

def test_p_quantile_null_is_uniform():
    for n in (3, 10, 40):
        assert p_quantile(0.5, n, 0.0) == pytest.approx(0.5, abs=1e-6)
        assert p_quantile(0.9, n, 0.0) == pytest.approx(0.9, abs=1e-6)
        assert p_quantile(0.9, n, 0.0, tails="two") == pytest.approx(0.9, abs=1e-6)


def test_p_quantile_median_against_simulation():
    rng = np.random.default_rng(5)
    p = oracle.two_sample_p_values(1.5, 10, 1_000_000, rng)
    med = p_quantile(0.5, 10, 1.5)
    share = float(np.mean(p < med))
    assert abs(share - 0.5) < 3 * oracle.binomial_se(0.5, 1_000_000)


def test_p_quantile_two_tailed_against_simulation():
    rng = np.random.default_rng(6)
    p1 = oracle.two_sample_p_values(0.6, 8, 400_000, rng)
    # two-tailed P from the one-tailed upper P
    p2 = 2 * np.minimum(p1, 1 - p1)
    for q in (0.5, 0.9):
        share = float(np.mean(p2 < p_quantile(q, 8, 0.6, tails="two")))
        assert abs(share - q) < 3 * oracle.binomial_se(q, 400_000)


def test_p_quantile_nondecreasing_and_median_below_p90():
    for n in (3, 5, 10, 20, 40):
        for e in (0.0, 0.25, 0.5, 1.0, 2.0, 3.0):
            qs = [p_quantile(q, n, e) for q in (0.1, 0.25, 0.5, 0.75, 0.9, 0.99)]
            assert all(b >= a for a, b in zip(qs, qs[1:]))


def test_p_quantile_curve_median_le_p90_on_figure_grid():
    n_list = [3, 5, 10, 20, 40]
    grid = default_effect_grid(4.0, 0.5)
    med = p_quantile_curve(0.5, n_list, grid)
    p90 = p_quantile_curve(0.9, n_list, grid)
    assert np.all(med.values <= p90.values)


def test_p_mean_null_and_limit():
    assert p_mean(10, 0.0) == pytest.approx(0.5, abs=1e-5)
    assert p_mean(10, 10.0) < 1e-6


def test_p_mean_against_simulation():
    rng = np.random.default_rng(8)
    p = oracle.two_sample_p_values(0.8, 6, 1_000_000, rng)
    se = float(np.std(p) / math.sqrt(p.size))
    assert abs(p_mean(6, 0.8) - float(np.mean(p))) < 3 * se


# ---------------------------------------------------------- post-hoc power

def test_observed_power_warns():
    r = t_test(SampleSummary(5, 3.0, 2.0), SampleSummary(5, 0.0, 2.0))
    with pytest.warns(PostHocPowerWarning):
        observed_power(r)


def test_observed_power_decreases_as_p_grows():
    spec = TestSpec(tails="one-greater")
    ctrl = SampleSummary(6, 0.0, 1.0)
    rows = []
    for diff in np.linspace(0.05, 3.0, 40):
        r = t_test(SampleSummary(6, float(diff), 1.0), ctrl, spec)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PostHocPowerWarning)
            rows.append((r.p, observed_power(r)))
    rows.sort()
    powers = [pw for _, pw in rows]
    assert all(b < a for a, b in zip(powers, powers[1:]))
