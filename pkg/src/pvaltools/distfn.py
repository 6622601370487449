"""Special functions and t / normal distribution primitives.

Scalar arguments take a pure-Python path (these functions sit inside root
finders and series loops); ``t_cdf``, ``reg_inc_beta``, ``norm_cdf`` and
``norm_quantile`` also accept numpy arrays for the simulation engine.
"""
from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, NumericalFailure

_EPS = 1.0e-16
_FPMIN = 1.0e-300
_CF_MAXIT = 20000
_SERIES_MAXIT = 20000
_SERIES_TOL = 1.0e-13
# above this |ncp| the series needs too many terms; integrate instead
NCP_SERIES_LIMIT = 20.0
_LOWER_TAIL_SWITCH = 1e-7


@dataclass(frozen=True)
class DistParams:
    """Degrees of freedom and noncentrality of a t distribution."""

    df: float
    ncp: float = 0.0

    def __post_init__(self):
        _check_df(self.df)
        if not math.isfinite(self.ncp):
            raise DomainError(f"ncp must be finite, got {self.ncp!r}")

    def cdf(self, t):
        if self.ncp == 0.0:
            return t_cdf(t, self.df)
        return nct_cdf(t, self.df, self.ncp)

    def quantile(self, p):
        if self.ncp == 0.0:
            return t_quantile(p, self.df)
        return nct_quantile(p, self.df, self.ncp)


def _check_df(df):
    if not (df > 0) or math.isnan(df):
        raise DomainError(f"degrees of freedom must be positive, got {df!r}")


def _check_prob_open(p, name="p"):
    if not (0.0 < p < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {p!r}")


def ln_gamma(x):
    """Natural log of the gamma function for x > 0."""
    if isinstance(x, np.ndarray):
        if not np.all(np.isfinite(x) & (x > 0)):
            raise DomainError("ln_gamma requires finite positive arguments")
        return special.gammaln(x)
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"ln_gamma requires a finite positive argument, got {x!r}")
    return math.lgamma(x)


# --------------------------------------------------------------------------
# regularized incomplete beta


def _betacf(a, b, x):
    """Modified Lentz evaluation of the incomplete beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NumericalFailure(
        "incomplete beta continued fraction did not converge",
        a=a, b=b, x=x, iterations=_CF_MAXIT, last_delta=delta,
    )


def _ibeta(a, b, x, y):
    """I_x(a, b) for scalars, with y = 1 - x supplied by the caller."""
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(y)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def _betacf_vec(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= _EPS
        if not active.any():
            return h
    raise NumericalFailure(
        "vectorized incomplete beta continued fraction did not converge",
        iterations=_CF_MAXIT, unconverged=int(active.sum()),
    )


def _ibeta_vec(a, b, x, y):
    a, b, x, y = np.broadcast_arrays(
        np.asarray(a, float), np.asarray(b, float),
        np.asarray(x, float), np.asarray(y, float),
    )
    out = np.empty(x.shape)
    lo = x <= 0.0
    hi = ~lo & (y <= 0.0)
    out[lo] = 0.0
    out[hi] = 1.0
    mid = ~(lo | hi)
    if mid.any():
        am, bm, xm, ym = a[mid], b[mid], x[mid], y[mid]
        front = np.exp(
            special.gammaln(am + bm) - special.gammaln(am) - special.gammaln(bm)
            + am * np.log(xm) + bm * np.log(ym)
        )
        swap = xm >= (am + 1.0) / (am + bm + 2.0)
        aa = np.where(swap, bm, am)
        bb = np.where(swap, am, bm)
        xx = np.where(swap, ym, xm)
        cf = _betacf_vec(aa, bb, xx)
        out[mid] = np.where(swap, 1.0 - front * cf / aa, front * cf / aa)
    return out


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b).

    Parameters
    ----------
    a, b : float
        Positive shape parameters.
    x : float or ndarray
        Upper limit of integration in [0, 1].

    Returns
    -------
    float or ndarray
        I_x(a, b) in [0, 1].
    """
    if isinstance(x, np.ndarray) or isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        xa = np.asarray(x, float)
        if np.any(~((xa >= 0.0) & (xa <= 1.0))):
            raise DomainError("reg_inc_beta requires 0 <= x <= 1")
        if np.any(~(np.asarray(a) > 0)) or np.any(~(np.asarray(b) > 0)):
            raise DomainError("reg_inc_beta requires a > 0 and b > 0")
        return _ibeta_vec(a, b, xa, 1.0 - xa)
    if not (a > 0 and b > 0) or not math.isfinite(a) or not math.isfinite(b):
        raise DomainError(f"reg_inc_beta requires a > 0 and b > 0, got a={a!r}, b={b!r}")
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"reg_inc_beta requires 0 <= x <= 1, got {x!r}")
    return _ibeta(a, b, x, 1.0 - x)


# --------------------------------------------------------------------------
# standard normal


def norm_cdf(z):
    """Standard normal CDF."""
    if isinstance(z, np.ndarray):
        return special.ndtr(z)
    if math.isnan(z):
        raise DomainError("norm_cdf argument is NaN")
    return float(special.ndtr(z))


def norm_quantile(p):
    """Standard normal quantile (inverse CDF) for p in (0, 1)."""
    if isinstance(p, np.ndarray):
        if np.any(~((p > 0.0) & (p < 1.0))):
            raise DomainError("norm_quantile requires 0 < p < 1")
        return special.ndtri(p)
    _check_prob_open(p)
    return float(special.ndtri(p))


# --------------------------------------------------------------------------
# central t


def _t_tail(t, df):
    """P(T > |t|) for scalar t."""
    t2 = t * t
    denom = df + t2
    if math.isinf(denom):
        return 0.0
    return 0.5 * _ibeta(0.5 * df, 0.5, df / denom, t2 / denom)


def t_cdf(t, df):
    """Central Student t CDF.

    Accepts a scalar ``t`` or an ndarray (``df`` may then be a scalar or a
    broadcastable array). Non-integer ``df`` is allowed.
    """
    if isinstance(t, np.ndarray) or isinstance(df, np.ndarray):
        ta = np.asarray(t, float)
        dfa = np.asarray(df, float)
        if np.any(~(dfa > 0)):
            raise DomainError("degrees of freedom must be positive")
        ta, dfa = np.broadcast_arrays(ta, dfa)
        t2 = ta * ta
        with np.errstate(invalid="ignore", over="ignore"):
            denom = dfa + t2
            x = np.where(np.isinf(denom), 0.0, dfa / denom)
            y = np.where(np.isinf(denom), 1.0, t2 / denom)
        finite_df = np.isfinite(dfa)
        tail = np.empty(ta.shape)
        tail[finite_df] = 0.5 * _ibeta_vec(0.5 * dfa[finite_df], 0.5, x[finite_df], y[finite_df])
        tail[~finite_df] = special.ndtr(-np.abs(ta[~finite_df]))
        return np.where(ta < 0, tail, 1.0 - tail)
    _check_df(df)
    if math.isnan(t):
        raise DomainError("t is NaN")
    if math.isinf(df):
        return norm_cdf(t)
    tail = _t_tail(t, df)
    return tail if t < 0 else 1.0 - tail


def t_sf(t, df):
    """Upper tail P(T > t) without the cancellation of ``1 - t_cdf``."""
    if isinstance(t, np.ndarray):
        return t_cdf(-t, df)
    return t_cdf(-t, df)


def _bracket(f, guess, step):
    """Find lo < hi with f(lo) <= 0 <= f(hi) for increasing f."""
    lo = hi = guess
    flo = fhi = f(guess)
    it = 0
    while flo > 0.0:
        lo -= step
        step *= 2.0
        flo = f(lo)
        it += 1
        if it > 2000 or not math.isfinite(lo):
            raise NumericalFailure("could not bracket root from below", guess=guess, lo=lo)
    step_hi = abs(step) if it else step
    while fhi < 0.0:
        hi += step_hi
        step_hi *= 2.0
        fhi = f(hi)
        it += 1
        if it > 4000 or not math.isfinite(hi):
            raise NumericalFailure("could not bracket root from above", guess=guess, hi=hi)
    return lo, hi


def _solve_increasing(f, guess, step):
    lo, hi = _bracket(f, guess, step)
    if lo == hi:
        return lo
    try:
        root, info = optimize.brentq(
            f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
            maxiter=500, full_output=True, disp=False,
        )
    except ValueError as exc:
        raise NumericalFailure("root finder rejected the bracket", lo=lo, hi=hi) from exc
    if not info.converged:
        raise NumericalFailure(
            "root finder did not converge", lo=lo, hi=hi, iterations=info.iterations,
        )
    return root


def t_quantile(p, df):
    """Inverse of :func:`t_cdf` by bracketed Brent root finding."""
    _check_prob_open(p)
    _check_df(df)
    if p == 0.5:
        return 0.0
    if math.isinf(df):
        return norm_quantile(p)
    if p < 0.5:
        return _solve_increasing(lambda t: t_cdf(t, df) - p, norm_quantile(p), 1.0)
    # solve on the upper tail so p near 1 keeps its resolution
    q = 1.0 - p
    return _solve_increasing(lambda t: q - t_sf(t, df), norm_quantile(p), 1.0)


# --------------------------------------------------------------------------
# noncentral t


def _nct_series(t, df, ncp):
    """Noncentral t CDF for t >= 0 as a Poisson mixture of incomplete betas.

    Sums outward from the Poisson mode in both directions; incomplete beta
    values are carried by the recurrence I(a+1) = I(a) - g(a) with g kept
    in log space so that neither direction underflows.
    """
    base = norm_cdf(-ncp)
    if t == 0.0:
        return base
    if math.isinf(t):
        return 1.0
    t2 = t * t
    denom = t2 + df
    if math.isinf(denom):
        return 1.0
    x = t2 / denom
    y = df / denom
    if x == 0.0:
        return base
    if y <= 0.0:
        return 1.0
    b = 0.5 * df
    lam = 0.5 * ncp * ncp
    if lam == 0.0:
        return base + 0.5 * _ibeta(0.5, b, x, y)

    lx = math.log(x)
    ly = math.log(y)
    llam = math.log(lam)
    k = int(lam)
    lgb = math.lgamma(b)

    def log_g(a):
        return math.lgamma(a + b) - math.lgamma(a + 1.0) - lgb + a * lx + b * ly

    p_k = math.exp(-lam + k * llam - math.lgamma(k + 1.0))
    q_k = ncp / math.sqrt(2.0) * math.exp(-lam + k * llam - math.lgamma(k + 1.5))
    a1 = k + 0.5
    a2 = k + 1.0
    i1_k = _ibeta(a1, b, x, y)
    i2_k = _ibeta(a2, b, x, y)
    lg1_k = log_g(a1)
    lg2_k = log_g(a2)

    total = 0.0
    # forward from the mode
    pj, qj, i1, i2, lg1, lg2 = p_k, q_k, i1_k, i2_k, lg1_k, lg2_k
    j = k
    for _ in range(_SERIES_MAXIT):
        total += pj * i1 + qj * i2
        i1 = max(i1 - math.exp(lg1), 0.0)
        i2 = max(i2 - math.exp(lg2), 0.0)
        a1j = j + 0.5
        a2j = j + 1.0
        lg1 += lx + math.log((a1j + b) / (a1j + 1.0))
        lg2 += lx + math.log((a2j + b) / (a2j + 1.0))
        j += 1
        pj *= lam / j
        qj *= lam / (j + 0.5)
        ratio = lam / (j + 1.0)
        bound = (pj + abs(qj)) / (1.0 - ratio) * max(i1, i2)
        if bound < _SERIES_TOL:
            break
    else:
        raise NumericalFailure(
            "noncentral t series did not converge",
            t=t, df=df, ncp=ncp, iterations=_SERIES_MAXIT, last_bound=bound,
        )
    total += _nct_backward(k, lam, p_k, q_k, i1_k, i2_k, lg1_k, lg2_k, lx, b)
    return min(max(base + 0.5 * total, 0.0), 1.0)


def _nct_backward(k, lam, p_k, q_k, i1, i2, lg1, lg2, lx, b):
    total = 0.0
    pj, qj = p_k, q_k
    a1 = k + 0.5
    a2 = k + 1.0
    for j in range(k - 1, -1, -1):
        # step a -> a - 1: g(a - 1) = g(a) * a / (x * (a - 1 + b))
        lg1 += math.log(a1 / (a1 - 1.0 + b)) - lx
        lg2 += math.log(a2 / (a2 - 1.0 + b)) - lx
        a1 -= 1.0
        a2 -= 1.0
        i1 += math.exp(lg1)
        i2 += math.exp(lg2)
        pj *= (j + 1.0) / lam
        qj *= (j + 1.5) / lam
        term = pj * min(i1, 1.0) + qj * min(i2, 1.0)
        total += term
        if pj + abs(qj) < 1e-300:
            break
    return total


def _nct_quadrature(t, df, ncp, relative=False):
    """Noncentral t CDF by integrating over the chi scale variable.

    With S = sqrt(V / df), V ~ chi-square(df), P(T <= t) = E[Phi(t S - ncp)].
    ``relative=True`` drops the absolute tolerance, for tiny lower tails.
    """
    half = 0.5 * df
    log_norm = math.log(2.0) + half * math.log(half) - math.lgamma(half)
    # below df = 1 the density has an s**(df - 1) pole at 0; integrating over
    # u = s**df instead removes it, since s**(df - 1) ds = du / df
    power = 1.0 / df if df < 1.0 else 1.0

    def log_integrand(x):
        if x <= 0.0:
            return -math.inf
        s = x ** power
        if power != 1.0:
            log_jac = -math.log(df)
        else:
            log_jac = (df - 1.0) * math.log(s)
        return log_norm + log_jac - half * s * s + float(special.log_ndtr(t * s - ncp))

    # S has sd ~ 1/sqrt(2 df) around 1 for large df and chi(df) tails for small
    upper = (1.0 + 40.0 / math.sqrt(min(df, 1.0))) ** (1.0 / power)
    points = [1.0]
    if t != 0.0 and 0.0 < ncp / t:
        kink = (ncp / t) ** (1.0 / power)
        if kink < upper:
            points.append(kink)
    shift = 0.0
    if relative:
        # scale by the peak so tiny tails keep relative precision
        opt = optimize.minimize_scalar(
            lambda x: -log_integrand(x), bounds=(1e-12, upper), method="bounded",
            options={"xatol": 1e-10},
        )
        shift = -opt.fun
        points.append(opt.x)

    def integrand(x):
        return math.exp(log_integrand(x) - shift) if x > 0.0 else 0.0

    with warnings.catch_warnings():
        # roundoff notices are judged by the error check below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(
            integrand, 0.0, upper, points=sorted(set(points)),
            epsabs=0.0 if relative else 1e-13, epsrel=1e-11 if relative else 1e-12, limit=500,
        )
    if not math.isfinite(val) or err > (1e-8 * val if relative else 1e-9):
        raise NumericalFailure(
            "noncentral t quadrature did not reach tolerance",
            t=t, df=df, ncp=ncp, value=val, abserr=err,
        )
    val *= math.exp(shift)
    return min(max(val, 0.0), 1.0)


def nct_cdf(t, df, ncp):
    """Noncentral Student t CDF P(T <= t) for T ~ t(df, ncp).

    Uses the incomplete-beta series for |ncp| <= 20 and adaptive quadrature
    of the defining integral beyond that.
    """
    _check_df(df)
    if not math.isfinite(ncp):
        raise DomainError(f"ncp must be finite, got {ncp!r}")
    if math.isnan(t):
        raise DomainError("t is NaN")
    if ncp == 0.0:
        return t_cdf(t, df)
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    if abs(ncp) > NCP_SERIES_LIMIT:
        return _nct_quadrature(t, df, ncp)
    if t >= 0.0:
        val = _nct_series(t, df, ncp)
        if 1.0 - val < _LOWER_TAIL_SWITCH:
            return 1.0 - _nct_quadrature(-t, df, -ncp, relative=True)
        return val
    val = 1.0 - _nct_series(-t, df, -ncp)
    if val < _LOWER_TAIL_SWITCH:
        # the reflection cancels to noise here; integrate directly instead
        return _nct_quadrature(t, df, ncp, relative=True)
    return min(val, 1.0)


def nct_sf(t, df, ncp):
    """P(T > t), evaluated through the reflected distribution."""
    _check_df(df)
    if ncp == 0.0:
        return t_sf(t, df)
    return nct_cdf(-t, df, -ncp)


def nct_quantile(p, df, ncp):
    """Inverse of :func:`nct_cdf` by bracketed Brent root finding."""
    _check_prob_open(p)
    _check_df(df)
    if not math.isfinite(ncp):
        raise DomainError(f"ncp must be finite, got {ncp!r}")
    if ncp == 0.0:
        return t_quantile(p, df)
    z = norm_quantile(p)
    spread = math.sqrt(1.0 + ncp * ncp / (2.0 * df)) if math.isfinite(df) else 1.0
    guess = ncp + z * spread
    if p <= 0.5:
        return _solve_increasing(lambda t: nct_cdf(t, df, ncp) - p, guess, spread)
    q = 1.0 - p
    return _solve_increasing(lambda t: q - nct_sf(t, df, ncp), guess, spread)
