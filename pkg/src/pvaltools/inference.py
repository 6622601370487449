"""Sample summaries, Student / Welch / one-sample t tests and pseudo-data fitting."""
from dataclasses import dataclass, asdict
import math

import numpy as np
from scipy import optimize

from . import distfn
from .errors import (
    DegenerateInput,
    DomainError,
    InsufficientData,
    NumericalFailure,
    UndefinedStatistic,
)

VARIANTS = ("two-sample-pooled", "two-sample-welch", "one-sample")
TAILS = ("one-greater", "one-less", "two")
_TAIL_ALIASES = {
    "one": "one-greater",
    "greater": "one-greater",
    "less": "one-less",
    "one-sided": "one-greater",
    "two-sided": "two",
}
_VARIANT_ALIASES = {
    "pooled": "two-sample-pooled",
    "student": "two-sample-pooled",
    "two-sample": "two-sample-pooled",
    "welch": "two-sample-welch",
    "one": "one-sample",
}


def normalize_tails(tails):
    tails = _TAIL_ALIASES.get(tails, tails)
    if tails not in TAILS:
        raise DomainError(f"unknown tails {tails!r}; expected one of {TAILS}")
    return tails


def normalize_variant(variant):
    variant = _VARIANT_ALIASES.get(variant, variant)
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return variant


@dataclass(frozen=True)
class SampleSummary:
    """Sufficient statistics of one group (sd uses divisor n - 1)."""

    n: int
    mean: float
    sd: float

    def __post_init__(self):
        if self.n < 2:
            raise InsufficientData(f"need n >= 2 for a standard deviation, got {self.n}")
        if not math.isfinite(self.mean):
            raise DomainError("mean must be finite")
        if not (self.sd >= 0.0) or not math.isfinite(self.sd):
            raise DomainError(f"sd must be finite and nonnegative, got {self.sd!r}")


@dataclass(frozen=True)
class TestSpec:
    """Which t test to run: variant, null offset and tail direction.

    ``null_delta`` is the hypothesised mean difference (group 1 minus
    group 2) or, for the one-sample variant, the hypothesised mean.
    """

    variant: str = "two-sample-pooled"
    null_delta: float = 0.0
    tails: str = "one-greater"

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        object.__setattr__(self, "variant", normalize_variant(self.variant))
        object.__setattr__(self, "tails", normalize_tails(self.tails))
        if not math.isfinite(self.null_delta):
            raise DomainError("null_delta must be finite")


@dataclass(frozen=True)
class TTestResult:
    """Outcome of a t test.

    ``pooled_sd`` is only set for the pooled variant. ``scale`` is the
    standard deviation used for ``cohen_d`` in every variant: s_p (pooled),
    sqrt((s1^2 + s2^2) / 2) (Welch) or s (one-sample). ``degenerate`` marks a
    zero-scale result whose p is the limiting value.
    """

    t: float
    df: float
    p: float
    tails: str
    variant: str
    mean_diff: float
    pooled_sd: float | None
    scale: float
    cohen_d: float
    degenerate: bool = False

    __test__ = False

    def to_dict(self):
        return asdict(self)


def summarize(data):
    """Summarize a sequence of observations as a :class:`SampleSummary`."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 1:
        raise DomainError("data must be one-dimensional")
    if x.size < 2:
        raise InsufficientData(f"need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("data contain non-finite values")
    return SampleSummary(n=int(x.size), mean=float(x.mean()), sd=float(x.std(ddof=1)))


def p_from_t(t, df, tails):
    """P-value for a t statistic (scalar or ndarray) in the given direction."""
    tails = normalize_tails(tails)
    if tails == "one-greater":
        return distfn.t_sf(t, df)
    if tails == "one-less":
        return distfn.t_cdf(t, df)
    if isinstance(t, np.ndarray):
        return np.minimum(2.0 * distfn.t_sf(np.abs(t), df), 1.0)
    return min(2.0 * distfn.t_sf(abs(t), df), 1.0)


def _degenerate_p(numerator, tails):
    # zero scale: t is +/- infinity, p takes its limit
    if tails == "one-greater":
        return 0.0 if numerator > 0 else 1.0
    if tails == "one-less":
        return 0.0 if numerator < 0 else 1.0
    return 0.0


def welch_df(s1, n1, s2, n2):
    """Welch-Satterthwaite degrees of freedom."""
    v1 = s1 * s1 / n1
    v2 = s2 * s2 / n2
    return (v1 + v2) ** 2 / (v1 * v1 / (n1 - 1) + v2 * v2 / (n2 - 1))


def t_test(g1, g2=None, spec=None):
    """Run a t test on one or two :class:`SampleSummary` groups.

    Parameters
    ----------
    g1 : SampleSummary
        First group (the treatment group in a two-sample comparison).
    g2 : SampleSummary, optional
        Second group; must be ``None`` for the one-sample variant.
    spec : TestSpec, optional
        Defaults to a pooled two-sample, one-tailed (greater) test with a
        zero null difference.

    Returns
    -------
    TTestResult

    Raises
    ------
    UndefinedStatistic
        When the scale is zero and so is the numerator.
    """
    spec = spec or TestSpec()
    pooled_sd = None
    if spec.variant == "one-sample":
        if g2 is not None:
            raise DomainError("one-sample test takes a single group")
        mean_diff = g1.mean - spec.null_delta
        numerator = mean_diff
        scale = g1.sd
        se = g1.sd / math.sqrt(g1.n)
        df = float(g1.n - 1)
    else:
        if g2 is None:
            raise DomainError(f"{spec.variant} test needs two groups")
        mean_diff = g1.mean - g2.mean
        numerator = mean_diff - spec.null_delta
        if spec.variant == "two-sample-pooled":
            df = float(g1.n + g2.n - 2)
            pooled_sd = math.sqrt(
                ((g1.n - 1) * g1.sd ** 2 + (g2.n - 1) * g2.sd ** 2) / df
            )
            scale = pooled_sd
            se = pooled_sd * math.sqrt(1.0 / g1.n + 1.0 / g2.n)
        else:
            scale = math.sqrt(0.5 * (g1.sd ** 2 + g2.sd ** 2))
            se = math.sqrt(g1.sd ** 2 / g1.n + g2.sd ** 2 / g2.n)
            if se > 0:
                df = welch_df(g1.sd, g1.n, g2.sd, g2.n)
            else:
                df = float(g1.n + g2.n - 2)

    if se == 0.0:
        if numerator == 0.0:
            raise UndefinedStatistic("zero scale and zero difference: t is 0/0")
        t = math.copysign(math.inf, numerator)
        cohen_d = math.copysign(math.inf, mean_diff) if mean_diff else 0.0
        return TTestResult(
            t=t, df=df, p=_degenerate_p(numerator, spec.tails), tails=spec.tails,
            variant=spec.variant, mean_diff=mean_diff, pooled_sd=pooled_sd,
            scale=scale, cohen_d=cohen_d, degenerate=True,
        )

    t = numerator / se
    return TTestResult(
        t=t, df=df, p=p_from_t(t, df, spec.tails), tails=spec.tails,
        variant=spec.variant, mean_diff=mean_diff, pooled_sd=pooled_sd,
        scale=scale, cohen_d=mean_diff / scale,
    )


def t_test_data(a, b=None, spec=None):
    """Convenience wrapper running :func:`t_test` on raw observations."""
    return t_test(summarize(a), None if b is None else summarize(b), spec)


def fit_pseudo_data(control, n=None, target_p=0.05, spec=None):
    """Shift a control dataset so that the t test hits an exact P-value.

    The treatment group is ``control + c``; ``c`` is found by Brent root
    finding on the (monotone) P-value as a function of the shift. Both groups
    keep the same standard deviation by construction. The test compares
    treatment (group 1) with control (group 2).

    Returns
    -------
    (ndarray, ndarray)
        ``(control, treatment)``.
    """
    spec = spec or TestSpec()
    if spec.variant == "one-sample":
        raise DomainError("pseudo-data fitting needs a two-sample variant")
    if not (0.0 < target_p < 1.0):
        raise DomainError(f"target_p must lie in (0, 1), got {target_p!r}")
    control = np.asarray(control, dtype=float)
    if n is not None and control.size != n:
        raise DomainError(f"control has {control.size} values, expected n={n}")
    base = summarize(control)
    if base.sd == 0.0:
        raise DegenerateInput("control has zero standard deviation; no shift reaches a target P")
    def p_of(shift):
        g1 = SampleSummary(base.n, base.mean + shift, base.sd)
        return t_test(g1, base, spec).p

    # u -> p is decreasing for one-tailed tests, and for u >= 0 when two-tailed
    sign = -1.0 if spec.tails == "one-less" else 1.0

    def excess(u):
        return p_of(spec.null_delta + sign * u) - target_p

    step = base.sd * math.sqrt(2.0 / base.n)
    lo, hi = 0.0, 0.0
    if excess(0.0) > 0.0:
        hi = step
        while excess(hi) > 0.0:
            hi *= 2.0
            if not math.isfinite(hi):
                raise NumericalFailure("could not bracket the shift", target_p=target_p)
    else:
        lo = -step
        while excess(lo) < 0.0:
            lo *= 2.0
            if not math.isfinite(lo):
                raise NumericalFailure("could not bracket the shift", target_p=target_p)
    if excess(lo) == 0.0:
        u = lo
    elif excess(hi) == 0.0:
        u = hi
    else:
        u = optimize.brentq(
            excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500,
        )
    return control.copy(), control + (spec.null_delta + sign * u)
