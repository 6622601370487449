"""Power, sample size and expected P-value curves for one- and two-sample t tests.

Noncentrality conventions (standardised effect ``e = delta / sigma``):

* two-sample, n per group: df = 2n - 2, ncp = e * sqrt(n / 2)
* two-sample, n1 and n2:   df = n1 + n2 - 2, ncp = e * sqrt(n1 n2 / (n1 + n2))
* one-sample:              df = n - 1, ncp = e * sqrt(n)

One-tailed designs reject in the upper tail, so a negative effect has
power below alpha. Sample sizes are continuous reals while solving.

"Power" throughout is the probability of rejecting the null at the given
true effect, i.e. one minus the false *negative* rate.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import integrate, optimize

from . import distfn
from .errors import DomainError, InfeasibleTarget, NumericalFailure

DESIGN_TAILS = ("one", "two")
DESIGN_VARIANTS = ("two-sample", "one-sample")


class PostHocPowerWarning(UserWarning):
    """Observed-effect power carries no information beyond the P-value."""


def _norm_tails(tails):
    if tails in ("one", "one-greater", "one-sided"):
        return "one"
    if tails in ("two", "two-sided"):
        return "two"
    raise DomainError(f"tails must be 'one' or 'two', got {tails!r}")


@dataclass(frozen=True)
class DesignQuery:
    std_effect: float
    n_per_group: float
    alpha: float = 0.05
    tails: str = "one"
    variant: str = "two-sample"
    n2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "tails", _norm_tails(self.tails))
        if self.variant not in DESIGN_VARIANTS:
            raise DomainError(f"variant must be one of {DESIGN_VARIANTS}, got {self.variant!r}")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not math.isfinite(self.std_effect):
            raise DomainError("std_effect must be finite")
        if not (self.n_per_group > 1.0):
            raise DomainError(f"n_per_group must exceed 1, got {self.n_per_group!r}")
        if self.n2 is not None:
            if self.variant != "two-sample":
                raise DomainError("n2 only applies to two-sample designs")
            if not (self.n2 > 0 and self.n_per_group + self.n2 > 2):
                raise DomainError("n1 + n2 must exceed 2")

    @property
    def df(self):
        if self.variant == "one-sample":
            return self.n_per_group - 1.0
        if self.n2 is None:
            return 2.0 * self.n_per_group - 2.0
        return self.n_per_group + self.n2 - 2.0

    @property
    def ncp(self):
        n = self.n_per_group
        if self.variant == "one-sample":
            return self.std_effect * math.sqrt(n)
        if self.n2 is None:
            return self.std_effect * math.sqrt(n / 2.0)
        return self.std_effect * math.sqrt(n * self.n2 / (n + self.n2))


@dataclass
class CurveTable:
    """Values on an (n, effect) grid; ``values[i][j]`` is at n_list[i], effect_grid[j]."""

    effect_grid: list
    n_list: list
    alpha: float | None
    values: np.ndarray
    kind: str
    tails: str = "one"
    q: float | None = None
    meta: dict = field(default_factory=dict)

    def to_csv(self, fh):
        """Write ``effect,n=3,...`` rows with ``#`` metadata lines first."""
        fh.write(f"# kind={self.kind}\n")
        if self.q is not None:
            fh.write(f"# q={self.q!r}\n")
        if self.alpha is not None:
            fh.write(f"# alpha={self.alpha!r}\n")
        fh.write(f"# tails={self.tails}\n")
        for key, val in self.meta.items():
            fh.write(f"# {key}={val}\n")
        fh.write("effect," + ",".join(f"n={_fmt_n(n)}" for n in self.n_list) + "\n")
        for j, e in enumerate(self.effect_grid):
            row = [f"{e:.6g}"] + [repr(float(v)) for v in self.values[:, j]]
            fh.write(",".join(row) + "\n")


def _fmt_n(n):
    return str(int(n)) if float(n).is_integer() else repr(float(n))


def power(q):
    """Probability that the t test rejects at the design's true effect.

    Two-tailed power adds the two rejection regions separately.
    """
    df, ncp = q.df, q.ncp
    if q.tails == "one":
        crit = distfn.t_quantile(1.0 - q.alpha, df)
        return distfn.nct_sf(crit, df, ncp)
    crit = distfn.t_quantile(1.0 - 0.5 * q.alpha, df)
    return distfn.nct_sf(crit, df, ncp) + distfn.nct_cdf(-crit, df, ncp)


def solve_n(std_effect, alpha=0.05, power_target=0.8, tails="one", variant="two-sample"):
    """Continuous per-group sample size reaching ``power_target``.

    Solved by Brent root finding on ``power(n) - power_target``; round up with
    :func:`round_n` for a usable design.

    Raises
    ------
    InfeasibleTarget
        When the target is at or below the power at zero effect (alpha), or
        a one-tailed design points against the effect.
    """
    tails = _norm_tails(tails)
    if not (0.0 < power_target < 1.0):
        raise DomainError(f"power_target must lie in (0, 1), got {power_target!r}")
    if std_effect == 0.0:
        raise DomainError("std_effect must be nonzero")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if power_target <= alpha:
        raise InfeasibleTarget(
            f"power target {power_target} does not exceed alpha {alpha}; "
            "no sample size is needed or meaningful"
        )
    if tails == "one" and std_effect < 0:
        raise InfeasibleTarget("a one-tailed (upper) design cannot gain power against a negative effect")

    def gap(n):
        return power(DesignQuery(std_effect, n, alpha, tails, variant)) - power_target

    hi = 2.0
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise InfeasibleTarget(f"power {power_target} not reached below n=1e12")
    lo = hi / 2.0 if hi > 2.0 else 2.0
    if lo == hi:
        # target met at n=2 already; walk down towards n -> 1 where df -> 0
        lo = 1.5
        while gap(lo) >= 0.0:
            lo = 1.0 + (lo - 1.0) / 2.0
            if lo - 1.0 < 1e-6:
                raise InfeasibleTarget("power target met for any admissible n")
    root, info = optimize.brentq(gap, lo, hi, xtol=1e-12, rtol=1e-14, full_output=True, disp=False)
    if not info.converged:
        raise NumericalFailure("sample-size solver did not converge", lo=lo, hi=hi)
    return root


def round_n(n):
    """Round a continuous sample size up to the next whole number."""
    return math.ceil(n)


def _power_row(args):
    n, effects, alpha, tails, variant = args
    return [power(DesignQuery(float(e), float(n), alpha, tails, variant)) for e in effects]


def _run_rows(fn, rows, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, rows))
    return [fn(r) for r in rows]


def _check_grids(n_list, effect_grid):
    if len(n_list) == 0 or len(effect_grid) == 0:
        raise DomainError("grids must be nonempty")
    if list(n_list) != sorted(n_list) or list(effect_grid) != sorted(effect_grid):
        raise DomainError("grids must be sorted ascending")


def power_curve(n_list, effect_grid, alpha=0.05, tails="one", variant="two-sample", workers=None):
    """Power on an (n, effect) grid, one row per sample size."""
    tails = _norm_tails(tails)
    _check_grids(n_list, effect_grid)
    rows = [(n, list(effect_grid), alpha, tails, variant) for n in n_list]
    values = np.array(_run_rows(_power_row, rows, workers), dtype=float)
    return CurveTable(list(effect_grid), list(n_list), alpha, values, "power", tails)


def _dfncp(n, std_effect, variant):
    q = DesignQuery(std_effect, n, 0.5, "one", variant)
    return q.df, q.ncp


def p_quantile(q, n, std_effect, tails="one", variant="two-sample"):
    """q-quantile of the P-value distribution at a true standardised effect.

    For the one-tailed (upper) test P = 1 - F_t(T), so its q-quantile is the
    upper tail of the central t at the (1 - q) quantile of the noncentral t.
    The two-tailed version inverts the distribution of |T|.
    """
    if not (0.0 < q < 1.0):
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    tails = _norm_tails(tails)
    df, ncp = _dfncp(n, std_effect, variant)
    if tails == "one":
        t = distfn.nct_quantile(1.0 - q, df, ncp)
        return distfn.t_sf(t, df)
    # |T| has cdf G(x) = F(x) - F(-x); P <= p iff |T| >= t_{1-p/2}
    target = 1.0 - q

    def abs_cdf(x):
        return distfn.nct_cdf(x, df, ncp) - distfn.nct_cdf(-x, df, ncp)

    def abs_sf(x):
        return distfn.nct_sf(x, df, ncp) + distfn.nct_cdf(-x, df, ncp)

    if target <= 0.5:
        f = lambda x: abs_cdf(x) - target
    else:
        f = lambda x: q - abs_sf(x)
    hi = max(abs(ncp), 1.0)
    while f(hi) < 0.0:
        hi *= 2.0
        if not math.isfinite(hi):
            raise NumericalFailure("could not bracket |T| quantile", q=q, df=df, ncp=ncp)
    x = optimize.brentq(f, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return min(2.0 * distfn.t_sf(x, df), 1.0)


def p_mean(n, std_effect, tails="one", variant="two-sample"):
    """Mean P-value at a true effect, integrating the quantile function over (0, 1)."""
    tails = _norm_tails(tails)
    if std_effect == 0.0:
        return 0.5
    val, err = integrate.quad(
        lambda u: p_quantile(u, n, std_effect, tails, variant),
        0.0, 1.0, epsabs=1e-9, epsrel=1e-8, limit=200,
    )
    if err > 1e-6:
        raise NumericalFailure("expected-P quadrature missed tolerance", value=val, abserr=err)
    return min(max(val, 0.0), 1.0)


def _pq_row(args):
    n, effects, q, tails, variant = args
    return [p_quantile(q, float(n), float(e), tails, variant) for e in effects]


def _pmean_row(args):
    n, effects, tails, variant = args
    return [p_mean(float(n), float(e), tails, variant) for e in effects]


def p_quantile_curve(q, n_list, effect_grid, tails="one", variant="two-sample", workers=None):
    """Expected P-value q-quantile on an (n, effect) grid."""
    tails = _norm_tails(tails)
    _check_grids(n_list, effect_grid)
    rows = [(n, list(effect_grid), q, tails, variant) for n in n_list]
    values = np.array(_run_rows(_pq_row, rows, workers), dtype=float)
    return CurveTable(list(effect_grid), list(n_list), None, values, f"p-quantile({q!r})", tails, q=q)


def p_mean_curve(n_list, effect_grid, tails="one", variant="two-sample", workers=None):
    """Mean expected P-value on an (n, effect) grid."""
    tails = _norm_tails(tails)
    _check_grids(n_list, effect_grid)
    rows = [(n, list(effect_grid), tails, variant) for n in n_list]
    values = np.array(_run_rows(_pmean_row, rows, workers), dtype=float)
    return CurveTable(list(effect_grid), list(n_list), None, values, "p-mean", tails)


def default_n_list():
    return list(range(3, 41))


def default_effect_grid(stop=4.0, step=0.05):
    k = int(round(stop / step))
    return [round(i * step, 10) for i in range(k + 1)]


def observed_power(result, alpha=0.05, warn=True):
    """Power at the observed effect size of a two-sample t test result.

    Provided as a diagnostic only: it is a monotone transform of the observed
    P-value (larger P always maps to lower power) and says nothing about
    whether the study was adequately sized. Emits
    :class:`PostHocPowerWarning` unless ``warn`` is false.
    """
    if warn:
        warnings.warn(
            "post-experiment power at the observed effect is a restatement of "
            "the P-value, not evidence about sample-size adequacy",
            PostHocPowerWarning,
            stacklevel=2,
        )
    if result.variant == "two-sample-welch":
        raise DomainError("observed power is defined here for pooled and one-sample tests only")
    if result.tails == "two":
        tails, effect = "two", abs(result.cohen_d)
    elif result.tails == "one-less":
        tails, effect = "one", -result.cohen_d
    else:
        tails, effect = "one", result.cohen_d
    if result.variant == "one-sample":
        q = DesignQuery(effect, result.df + 1.0, alpha, tails, "one-sample")
    else:
        # equal-n equivalent of the pooled df
        q = DesignQuery(effect, (result.df + 2.0) / 2.0, alpha, tails, "two-sample")
    return power(q)
