"""One-way ANOVA with an F-distribution tail computed from first principles.

The F cdf is evaluated through the regularized incomplete beta function,
I_t(d1/2, d2/2) with t = d1*x / (d1*x + d2). The incomplete beta uses a
modified Lentz continued fraction with the standard symmetry switch at
t > (a+1)/(a+b+2), which keeps the fraction well conditioned on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateInput, DomainError

__all__ = ["GroupedSamples", "AnovaResult", "one_way_anova", "f_cdf", "reg_incomplete_beta"]

_CF_EPS = 1e-16
_CF_FPMIN = 1e-300
_CF_MAX_ITER = 500


@dataclass(frozen=True)
class GroupedSamples:
    """Labeled observation groups for a one-way layout."""

    groups: tuple[tuple[str, tuple[float, ...]], ...]

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, Sequence[float]]]) -> "GroupedSamples":
        return cls(tuple((label, tuple(float(x) for x in values)) for label, values in pairs))

    def validate(self) -> None:
        if len(self.groups) < 2:
            raise DegenerateInput("need at least two groups")
        if any(not values for _, values in self.groups):
            raise DegenerateInput("every group must be non-empty")
        total = sum(len(values) for _, values in self.groups)
        if total <= len(self.groups):
            raise DegenerateInput(
                f"need more observations ({total}) than groups ({len(self.groups)})"
            )


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float
    ss_between: float
    ss_within: float

    def as_document(self) -> dict:
        return {
            "f_stat": self.f_stat,
            "df_between": self.df_between,
            "df_within": self.df_within,
            "p_value": self.p_value,
            "ss_between": self.ss_between,
            "ss_within": self.ss_within,
        }

    def summary(self) -> str:
        return (
            f"F({self.df_between}, {self.df_within}) = {self.f_stat:.4f}, "
            f"p = {self.p_value:.4f}"
        )


def one_way_anova(samples: GroupedSamples) -> AnovaResult:
    """Standard between/within variance decomposition.

    Conventions for degenerate data: all observations identical gives
    f = 0, p = 1; zero within-group variance with distinct group means gives
    f = +inf, p = 0.
    """
    samples.validate()
    groups = [values for _, values in samples.groups]
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    d1 = k - 1
    d2 = n_total - k

    all_values = [x for g in groups for x in g]
    if len(set(all_values)) == 1:
        return AnovaResult(0.0, d1, d2, 1.0, 0.0, 0.0)

    grand_mean = math.fsum(all_values) / n_total
    group_means = [math.fsum(g) / len(g) for g in groups]
    ss_between = math.fsum(len(g) * (m - grand_mean) ** 2 for g, m in zip(groups, group_means))
    ss_within = math.fsum(
        math.fsum((x - m) ** 2 for x in g) for g, m in zip(groups, group_means)
    )

    if ss_within == 0.0 or all(len(set(g)) == 1 for g in groups):
        return AnovaResult(math.inf, d1, d2, 0.0, ss_between, 0.0)

    f_stat = (ss_between / d1) / (ss_within / d2)
    p_value = 1.0 - f_cdf(f_stat, d1, d2)
    return AnovaResult(f_stat, d1, d2, p_value, ss_between, ss_within)


def f_cdf(x: float, d1: int, d2: int) -> float:
    """P(F <= x) for an F(d1, d2) variate; monotone in x, 0 at x = 0."""
    if d1 <= 0 or d2 <= 0:
        raise DomainError(f"degrees of freedom must be positive, got ({d1}, {d2})")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    t = d1 * x / (d1 * x + d2)
    return reg_incomplete_beta(t, d1 / 2.0, d2 / 2.0)


def reg_incomplete_beta(t: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_t(a, b) via Lentz continued fraction.

    Satisfies I_0 = 0, I_1 = 1, and the reflection identity
    I_t(a, b) = 1 - I_{1-t}(b, a).
    """
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"a and b must be positive, got a={a}, b={b}")
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must be in [0, 1], got {t}")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(t)
        + b * math.log1p(-t)
    )
    front = math.exp(ln_front)
    if t < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, t) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - t) / b


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Modified Lentz evaluation of the incomplete beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise DomainError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )
