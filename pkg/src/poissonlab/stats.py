"""Goodness-of-fit machinery with an in-repo numeric core.

KS p-values come from the asymptotic Kolmogorov distribution (both theta
series, truncated at a 1e-12 tail); chi-square p-values from the
regularized incomplete gamma function (power series / Lentz continued
fraction).  No external stats dependency: the golden-value tests pin these
against independently computed references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateExpected, TooFewSamples

__all__ = [
    "TestResult",
    "kolmogorov_sf",
    "gammq",
    "chi2_sf",
    "ks_test",
    "chi_square_counts",
    "two_sample_chi_square",
    "DEFAULT_ALPHA",
]

DEFAULT_ALPHA = 0.01
_SERIES_TAIL = 1e-12


@dataclass(frozen=True)
class TestResult:
    """Outcome of one statistical check at a configured level."""

    name: str
    statistic: float
    p_value: float
    n: int
    alpha: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": self.n,
            "alpha": self.alpha,
            "passed": self.passed,
        }
        if self.detail:
            out["detail"] = self.detail
        return out


def kolmogorov_sf(t: float) -> float:
    """P(K > t) for the Kolmogorov distribution."""
    if t <= 0.0:
        return 1.0
    if t < 1.18:
        # theta-series form of the CDF, fast for small t
        a = math.pi * math.pi / (8.0 * t * t)
        total = 0.0
        j = 1
        while True:
            term = math.exp(-((2 * j - 1) ** 2) * a)
            total += term
            if term < _SERIES_TAIL or j > 200:
                break
            j += 1
        return max(0.0, min(1.0, 1.0 - math.sqrt(2.0 * math.pi) / t * total))
    total = 0.0
    sign = 1.0
    j = 1
    while True:
        term = math.exp(-2.0 * j * j * t * t)
        total += sign * term
        if term < _SERIES_TAIL or j > 200:
            break
        sign = -sign
        j += 1
    return max(0.0, min(1.0, 2.0 * total))


def _gamma_series(a: float, x: float) -> float:
    """P(a, x) by power series; valid for x < a + 1."""
    ap = a
    summand = 1.0 / a
    total = summand
    for _ in range(10_000):
        ap += 1.0
        summand *= x / ap
        total += summand
        if abs(summand) < abs(total) * 1e-15:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    """Q(a, x) by modified Lentz continued fraction; valid for x >= a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammq(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = Gamma(a, x)/Gamma(a)."""
    if a <= 0.0 or x < 0.0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, min(1.0, 1.0 - _gamma_series(a, x)))
    return max(0.0, min(1.0, _gamma_cf(a, x)))


def chi2_sf(x: float, dof: int) -> float:
    """Survival function of the chi-square distribution."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    return gammq(dof / 2.0, x / 2.0)


def ks_test(samples: Sequence[float], cdf: Callable[[float], float],
            alpha: float = DEFAULT_ALPHA, name: str = "ks") -> TestResult:
    """One-sample Kolmogorov-Smirnov test against a hypothesized CDF."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = xs.size
    if n < 10:
        raise TooFewSamples(f"KS needs >= 10 samples, got {n}")
    f = np.clip(np.array([cdf(float(x)) for x in xs]), 0.0, 1.0)
    grid = np.arange(1, n + 1, dtype=np.float64) / n
    d_plus = float(np.max(grid - f))
    d_minus = float(np.max(f - (grid - 1.0 / n)))
    stat = max(d_plus, d_minus)
    p = kolmogorov_sf(math.sqrt(n) * stat)
    return TestResult(name, stat, p, int(n), alpha, p > alpha)


def _merge_small_cells(obs: np.ndarray, exp: np.ndarray, min_expected: float):
    """Merge each under-populated cell into its neighbor until every expected
    count is >= min_expected (tail cells collapse first by construction)."""
    obs = obs.astype(np.float64).copy()
    exp = exp.astype(np.float64).copy()
    while exp.size > 1 and float(np.min(exp)) < min_expected:
        i = int(np.argmin(exp))
        j = i - 1 if i == exp.size - 1 else i + 1
        exp[j] += exp[i]
        obs[j] += obs[i]
        exp = np.delete(exp, i)
        obs = np.delete(obs, i)
    if exp.size < 2 or float(np.min(exp)) < min_expected:
        raise DegenerateExpected("cannot form >= 2 cells with the required expected mass")
    return obs, exp


def chi_square_counts(observed: Sequence[float], expected: Sequence[float],
                      n: int | None = None, alpha: float = DEFAULT_ALPHA,
                      min_expected: float = 5.0, name: str = "chi2") -> TestResult:
    """Pearson chi-square of observed counts against cell probabilities.

    Cells are merged until every expected count reaches ``min_expected``;
    dof = merged cells - 1.
    """
    obs = np.asarray(observed, dtype=np.float64)
    p = np.asarray(expected, dtype=np.float64)
    if obs.shape != p.shape:
        raise ValueError("observed and expected must align")
    if np.any(p < 0.0) or abs(float(np.sum(p)) - 1.0) > 1e-6:
        raise DegenerateExpected("expected probabilities must be >= 0 and sum to 1")
    total = float(np.sum(obs)) if n is None else float(n)
    if total <= 0:
        raise DegenerateExpected("no observations")
    obs_m, exp_m = _merge_small_cells(obs, total * p, min_expected)
    stat = float(np.sum((obs_m - exp_m) ** 2 / exp_m))
    dof = exp_m.size - 1
    pv = chi2_sf(stat, dof)
    return TestResult(name, stat, pv, int(total), alpha, pv > alpha,
                      detail={"dof": int(dof), "cells": int(exp_m.size)})


def two_sample_chi_square(counts_a: Sequence[float], counts_b: Sequence[float],
                          alpha: float = DEFAULT_ALPHA,
                          min_expected: float = 5.0, name: str = "chi2-2s") -> TestResult:
    """Homogeneity chi-square for two count vectors over the same cells."""
    a = np.asarray(counts_a, dtype=np.float64)
    b = np.asarray(counts_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("count vectors must align")
    na, nb = float(np.sum(a)), float(np.sum(b))
    if na <= 0 or nb <= 0:
        raise DegenerateExpected("empty sample")
    pooled = (a + b) / (na + nb)
    # merge in lockstep, keyed on the pooled expectation of the smaller sample
    scale = min(na, nb)
    a_m, b_m, key_m = _merge_lockstep(a, b, scale * pooled, min_expected)
    pooled_m = key_m / scale
    stat = 0.0
    for counts, tot in ((a_m, na), (b_m, nb)):
        exp = tot * pooled_m
        stat += float(np.sum((counts - exp) ** 2 / exp))
    dof = pooled_m.size - 1
    pv = chi2_sf(stat, dof)
    return TestResult(name, stat, pv, int(na + nb), alpha, pv > alpha,
                      detail={"dof": int(dof), "cells": int(pooled_m.size)})


def _merge_lockstep(a: np.ndarray, b: np.ndarray, key: np.ndarray, min_expected: float):
    a = a.astype(np.float64).copy()
    b = b.astype(np.float64).copy()
    key = key.astype(np.float64).copy()
    while key.size > 1 and float(np.min(key)) < min_expected:
        i = int(np.argmin(key))
        j = i - 1 if i == key.size - 1 else i + 1
        for arr in (a, b, key):
            arr[j] += arr[i]
        a = np.delete(a, i)
        b = np.delete(b, i)
        key = np.delete(key, i)
    if key.size < 2:
        raise DegenerateExpected("cannot form >= 2 cells with the required expected mass")
    return a, b, key
