"""Seeded simulations: significance filter, type M error, optional stopping, FWER.

Every simulation is split into fixed replicate blocks (see :mod:`pvaltools.rng`)
which may run on several threads; block results are merged in block order, so
output is identical for any ``workers`` value.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict, field
import math

import numpy as np

from . import distfn, rng
from .errors import DomainError
from .inference import normalize_tails, p_from_t
from .multiplicity import fwer_analytic

DEFAULT_SEED = 2019


@dataclass(frozen=True)
class PopulationSpec:
    mu: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0) or not math.isfinite(self.sigma):
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if not math.isfinite(self.mu):
            raise DomainError("mu must be finite")


@dataclass(frozen=True)
class SimConfig:
    """Shared simulation settings; defaults are the n=5, mu=sigma=1 scenario."""

    reps: int = 100_000
    seed: int = DEFAULT_SEED
    n_per_group: int = 5
    population: PopulationSpec = field(default_factory=PopulationSpec)
    null_mu: float = 0.0
    alpha: float = 0.05
    tails: str = "one-greater"
    workers: int = 1

    def __post_init__(self):
        if int(self.reps) != self.reps or self.reps < 1:
            raise DomainError(f"reps must be a positive integer, got {self.reps!r}")
        if int(self.n_per_group) != self.n_per_group or self.n_per_group < 2:
            raise DomainError(f"n_per_group must be an integer >= 2, got {self.n_per_group!r}")
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise DomainError("workers must be a positive integer")
        rng._check_seed(self.seed)
        object.__setattr__(self, "tails", normalize_tails(self.tails))

    def to_dict(self):
        d = asdict(self)
        d.pop("workers")
        return d


@dataclass(frozen=True)
class StoppingRule:
    """Two-stage protocol: test at n1, add n_add per group iff alpha_stop < p < p_continue_max."""

    n1: int = 5
    n_add: int = 5
    alpha_stop: float = 0.05
    p_continue_max: float = 0.1

    def __post_init__(self):
        if self.n1 < 2 or self.n_add < 1:
            raise DomainError("need n1 >= 2 and n_add >= 1")
        if not (0.0 < self.alpha_stop <= self.p_continue_max <= 1.0):
            raise DomainError("need 0 < alpha_stop <= p_continue_max <= 1")


def _run(cfg, per_rep, block_fn):
    """Apply ``block_fn(first_rep, normals)`` to every block, merged in order."""
    plan = rng.blocks(cfg.reps)

    def work(item):
        b, first, count = item
        return block_fn(first, rng.block_normals(cfg.seed, b, count, per_rep))

    if cfg.workers > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            parts = list(ex.map(work, plan))
    else:
        parts = [work(item) for item in plan]
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}


def _mean_sd(x):
    return x.mean(axis=1), x.std(axis=1, ddof=1)


def _binomial_summary(hits, reps):
    """Rate, standard error and 95% Wilson interval."""
    rate = hits / reps
    se = math.sqrt(rate * (1.0 - rate) / reps)
    z = distfn.norm_quantile(0.975)
    denom = 1.0 + z * z / reps
    centre = (rate + z * z / (2 * reps)) / denom
    half = z * math.sqrt(rate * (1.0 - rate) / reps + z * z / (4 * reps * reps)) / denom
    return rate, se, max(centre - half, 0.0), min(centre + half, 1.0)


# --------------------------------------------------------------------------
# significance filter


@dataclass
class FilterRecords:
    """Per-replicate one-sample test outcomes."""

    mean: np.ndarray
    sd: np.ndarray
    p: np.ndarray
    significant: np.ndarray

    def to_csv(self, fh, header_lines=()):
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("rep,mean,sd,p,significant\n")
        for i in range(self.mean.size):
            fh.write(
                f"{i},{self.mean[i]!r},{self.sd[i]!r},{self.p[i]!r},{int(self.significant[i])}\n"
            )


@dataclass(frozen=True)
class FilterReport:
    reps: int
    true_effect: float
    all_median_mean: float
    all_median_sd: float
    sig_median_mean: float | None
    sig_median_sd: float | None
    sig_count: int
    median_d_all: float
    median_d_sig: float | None
    exaggeration_ratio: float | None
    max_exaggeration: float | None
    mean_sd_all: float

    def to_dict(self):
        return asdict(self)


def _filter_block(cfg):
    n = cfg.n_per_group
    mu, sigma = cfg.population.mu, cfg.population.sigma

    def block(first, z):
        mean, sd = _mean_sd(mu + sigma * z)
        t = (mean - cfg.null_mu) / (sd / math.sqrt(n))
        p = p_from_t(t, float(n - 1), cfg.tails)
        return {"mean": mean, "sd": sd, "p": p}

    return block


def _one_sample_records(cfg):
    out = _run(cfg, cfg.n_per_group, _filter_block(cfg))
    return FilterRecords(out["mean"], out["sd"], out["p"], out["p"] < cfg.alpha)


def sim_significance_filter(cfg):
    """Sample ``reps`` datasets of size n and compare all results with the significant ones.

    Each dataset gets a one-sample t test of mean == ``null_mu``; a result is
    significant when p < alpha. The standardised effect of a replicate is
    ``(mean - null_mu) / sd``; exaggeration ratios divide by the true
    ``(mu - null_mu) / sigma`` and are ``None`` when that is zero or nothing
    is significant.

    Returns
    -------
    (FilterReport, FilterRecords)
    """
    rec = _one_sample_records(cfg)
    true_effect = (cfg.population.mu - cfg.null_mu) / cfg.population.sigma
    d = (rec.mean - cfg.null_mu) / rec.sd
    sig = rec.significant
    count = int(sig.sum())
    if count:
        sig_mm = float(np.median(rec.mean[sig]))
        sig_ms = float(np.median(rec.sd[sig]))
        med_d_sig = float(np.median(d[sig]))
    else:
        sig_mm = sig_ms = med_d_sig = None
    if count and true_effect != 0.0:
        ratio = med_d_sig / true_effect
        max_ratio = float(np.max(d[sig] / true_effect))
    else:
        ratio = max_ratio = None
    report = FilterReport(
        reps=cfg.reps,
        true_effect=true_effect,
        all_median_mean=float(np.median(rec.mean)),
        all_median_sd=float(np.median(rec.sd)),
        sig_median_mean=sig_mm,
        sig_median_sd=sig_ms,
        sig_count=count,
        median_d_all=float(np.median(d)),
        median_d_sig=med_d_sig,
        exaggeration_ratio=ratio,
        max_exaggeration=max_ratio,
        mean_sd_all=float(rec.sd.mean()),
    )
    return report, rec


def null_p_values(cfg):
    """Single-stage one-sample P-values with the population mean set to the null."""
    null_cfg = SimConfig(
        reps=cfg.reps, seed=cfg.seed, n_per_group=cfg.n_per_group,
        population=PopulationSpec(cfg.null_mu, cfg.population.sigma),
        null_mu=cfg.null_mu, alpha=cfg.alpha, tails=cfg.tails, workers=cfg.workers,
    )
    return _one_sample_records(null_cfg).p


# --------------------------------------------------------------------------
# type M


@dataclass(frozen=True)
class TypeMReport:
    true_effect: float
    n: int
    alpha: float
    reps: int
    sig_count: int
    mean_ratio: float | None
    median_ratio: float | None
    type_s_rate: float | None
    empty: bool

    def to_dict(self):
        return asdict(self)


def sim_type_m(cfg, true_effect):
    """Exaggeration of significant standardised effects at a given true effect.

    The population mean is set to ``null_mu + true_effect * sigma``. Ratios
    are ``|observed d| / |true_effect|`` over significant replicates;
    ``type_s_rate`` is the share of significant replicates whose observed
    effect has the wrong sign.
    """
    if true_effect == 0.0 or not math.isfinite(true_effect):
        raise DomainError("true_effect must be finite and nonzero")
    sigma = cfg.population.sigma
    run_cfg = SimConfig(
        reps=cfg.reps, seed=cfg.seed, n_per_group=cfg.n_per_group,
        population=PopulationSpec(cfg.null_mu + true_effect * sigma, sigma),
        null_mu=cfg.null_mu, alpha=cfg.alpha, tails=cfg.tails, workers=cfg.workers,
    )
    rec = _one_sample_records(run_cfg)
    d = (rec.mean - cfg.null_mu) / rec.sd
    sig = rec.significant
    count = int(sig.sum())
    if count == 0:
        return TypeMReport(true_effect, cfg.n_per_group, cfg.alpha, cfg.reps, 0, None, None, None, True)
    ratio = np.abs(d[sig]) / abs(true_effect)
    wrong_sign = np.sign(d[sig]) != np.sign(true_effect)
    return TypeMReport(
        true_effect=true_effect,
        n=cfg.n_per_group,
        alpha=cfg.alpha,
        reps=cfg.reps,
        sig_count=count,
        mean_ratio=float(ratio.mean()),
        median_ratio=float(np.median(ratio)),
        type_s_rate=float(wrong_sign.mean()),
        empty=False,
    )


# --------------------------------------------------------------------------
# optional stopping


@dataclass(frozen=True)
class StoppingReport:
    reps: int
    rejections: int
    stage1_rejections: int
    continued: int
    fpr: float
    se: float
    ci_low: float
    ci_high: float
    alpha_stop: float

    def to_dict(self):
        return asdict(self)


def _pooled_t(a, b):
    n1 = a.shape[1]
    n2 = b.shape[1]
    ma, sa = _mean_sd(a)
    mb, sb = _mean_sd(b)
    df = n1 + n2 - 2
    sp = np.sqrt(((n1 - 1) * sa * sa + (n2 - 1) * sb * sb) / df)
    return (ma - mb) / (sp * math.sqrt(1.0 / n1 + 1.0 / n2)), float(df)


def sim_optional_stopping(rule, cfg):
    """False positive rate of a two-stage optional-stopping protocol under a true null.

    Both groups are drawn from ``cfg.population``. Stage 1 tests the first
    ``n1`` per group and rejects if p <= alpha_stop; if
    alpha_stop < p < p_continue_max, ``n_add`` more per group are added and
    the pooled data are tested again at alpha_stop.
    """
    n1, n_total = rule.n1, rule.n1 + rule.n_add
    mu, sigma = cfg.population.mu, cfg.population.sigma

    def block(first, z):
        x = mu + sigma * z
        a, b = x[:, :n_total], x[:, n_total:]
        t1, df1 = _pooled_t(a[:, :n1], b[:, :n1])
        p1 = p_from_t(t1, df1, cfg.tails)
        t2, df2 = _pooled_t(a, b)
        p2 = p_from_t(t2, df2, cfg.tails)
        stop_reject = p1 <= rule.alpha_stop
        cont = (p1 > rule.alpha_stop) & (p1 < rule.p_continue_max)
        reject = stop_reject | (cont & (p2 <= rule.alpha_stop))
        return {"reject": reject, "stage1": stop_reject, "cont": cont}

    out = _run(cfg, 2 * n_total, block)
    hits = int(out["reject"].sum())
    rate, se, lo, hi = _binomial_summary(hits, cfg.reps)
    return StoppingReport(
        reps=cfg.reps, rejections=hits, stage1_rejections=int(out["stage1"].sum()),
        continued=int(out["cont"].sum()), fpr=rate, se=se, ci_low=lo, ci_high=hi,
        alpha_stop=rule.alpha_stop,
    )


# --------------------------------------------------------------------------
# family-wise error


@dataclass(frozen=True)
class FwerReport:
    k: int
    alpha: float
    reps: int
    families_with_rejection: int
    fwer: float
    se: float
    ci_low: float
    ci_high: float
    analytic: float
    mean_rejections: float

    def to_dict(self):
        return asdict(self)


def sim_fwer(k, alpha, cfg):
    """Family-wise error of ``k`` independent two-sample t tests under the global null.

    A test rejects when its statistic reaches the critical value for
    ``alpha`` (equivalent to p <= alpha).
    """
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    n = cfg.n_per_group
    df = 2.0 * n - 2.0
    tails = cfg.tails
    if tails == "two":
        crit = distfn.t_quantile(1.0 - 0.5 * alpha, df)
    else:
        crit = distfn.t_quantile(1.0 - alpha, df)
    mu, sigma = cfg.population.mu, cfg.population.sigma

    def block(first, z):
        x = (mu + sigma * z).reshape(z.shape[0] * k, 2 * n)
        t, _ = _pooled_t(x[:, :n], x[:, n:])
        if tails == "one-greater":
            rej = t >= crit
        elif tails == "one-less":
            rej = t <= -crit
        else:
            rej = np.abs(t) >= crit
        per_family = rej.reshape(z.shape[0], k).sum(axis=1)
        return {"count": per_family}

    out = _run(cfg, 2 * n * k, block)
    hits = int((out["count"] > 0).sum())
    rate, se, lo, hi = _binomial_summary(hits, cfg.reps)
    return FwerReport(
        k=int(k), alpha=alpha, reps=cfg.reps, families_with_rejection=hits,
        fwer=rate, se=se, ci_low=lo, ci_high=hi,
        analytic=fwer_analytic(alpha, int(k)),
        mean_rejections=float(out["count"].mean()),
    )
