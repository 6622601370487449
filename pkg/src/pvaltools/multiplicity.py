"""Bonferroni adjustment and family-wise error arithmetic.

Which tests form a family is the caller's decision; nothing here tries to
infer it.
"""
from dataclasses import dataclass
import math

from .errors import DomainError


@dataclass(frozen=True)
class Family:
    k: int
    alpha_family: float = 0.05
    p_values: tuple | None = None

    def __post_init__(self):
        _check_k(self.k)
        _check_alpha(self.alpha_family)
        if self.p_values is not None:
            object.__setattr__(self, "p_values", tuple(_check_ps(self.p_values)))

    @property
    def threshold(self):
        return bonferroni_threshold(self.alpha_family, self.k)

    def adjusted(self):
        if self.p_values is None:
            raise DomainError("family has no P-values")
        return bonferroni_adjust_p(self.p_values, self.k)

    def rejected(self):
        """Tests significant after adjustment (adjusted p <= alpha_family)."""
        return [p <= self.alpha_family for p in self.adjusted()]


def _check_k(k):
    if int(k) != k or k < 1:
        raise DomainError(f"family size k must be a positive integer, got {k!r}")


def _check_alpha(alpha):
    if not (0.0 <= alpha <= 1.0):
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")


def _check_ps(p_values):
    ps = [float(p) for p in p_values]
    for p in ps:
        if not (0.0 <= p <= 1.0):
            raise DomainError(f"P-values must lie in [0, 1], got {p!r}")
    return ps


def bonferroni_threshold(alpha_family, k):
    """Per-test significance threshold ``alpha_family / k``."""
    _check_k(k)
    _check_alpha(alpha_family)
    return alpha_family / k


def bonferroni_adjust_p(p_values, k=None):
    """Bonferroni-adjusted P-values ``min(1, k p)``.

    ``k`` defaults to the number of P-values given; pass it explicitly when
    only part of the family is being adjusted.
    """
    ps = _check_ps(p_values)
    if k is None:
        k = len(ps)
    _check_k(k)
    if k < len(ps):
        raise DomainError(f"k={k} is smaller than the {len(ps)} P-values supplied")
    return [min(1.0, k * p) for p in ps]


def fwer_analytic(alpha_per_test, k):
    """P(at least one rejection) among ``k`` independent true-null tests."""
    _check_k(k)
    _check_alpha(alpha_per_test)
    if alpha_per_test == 1.0:
        return 1.0
    return -math.expm1(k * math.log1p(-alpha_per_test))
