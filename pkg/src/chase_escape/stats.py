"""Comparison statistics for the verification harness."""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

#: Asymptotic Kolmogorov quantile at alpha = 0.01.
KS_C_001 = 1.628


@dataclass(frozen=True)
class EmpiricalSummary:
    sorted_sample: np.ndarray
    mean: float
    variance: float
    count: int

    @classmethod
    def from_sample(cls, sample) -> "EmpiricalSummary":
        x = np.sort(np.asarray(sample, dtype=float).ravel())
        if x.size == 0:
            raise ValueError("empty sample")
        var = float(x.var(ddof=1)) if x.size > 1 else 0.0
        return cls(x, float(x.mean()), max(var, 0.0), int(x.size))


def _summary(sample) -> EmpiricalSummary:
    return sample if isinstance(sample, EmpiricalSummary) else EmpiricalSummary.from_sample(sample)


def ks_one_sample(sample, cdf: Callable, cdf_left: Callable | None = None) -> float:
    """Kolmogorov distance between the empirical CDF and ``cdf``.

    For continuous F this is max over i of max(i/n - F(x_i), F(x_i) - (i-1)/n).
    When F has atoms, pass its left limit ``cdf_left``.  Tied sample values
    are then compared as one block, so a sample that sits exactly on an atom
    is not penalised for the jump.
    """
    s = _summary(sample)
    x = s.sorted_sample
    n = s.count
    values, first = np.unique(x, return_index=True)
    last = np.append(first[1:], n)  # empirical CDF after each block is last/n
    right = np.asarray(cdf(values), dtype=float)
    left = right if cdf_left is None else np.asarray(cdf_left(values), dtype=float)
    above = np.max(last / n - right)
    below = np.max(left - first / n)
    return float(max(above, below, 0.0))


def ks_two_sample(a, b) -> float:
    """Sup distance between two empirical CDFs (symmetric, ties handled)."""
    xa = _summary(a).sorted_sample
    xb = _summary(b).sorted_sample
    grid = np.union1d(xa, xb)
    fa = np.searchsorted(xa, grid, side="right") / xa.size
    fb = np.searchsorted(xb, grid, side="right") / xb.size
    return float(np.max(np.abs(fa - fb)))


def kolmogorov_c(alpha: float) -> float:
    """Asymptotic Kolmogorov quantile sqrt(-ln(alpha/2) / 2)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(-math.log(alpha / 2) / 2)


def ks_critical_value(m: int, n: int | None = None, c: float = KS_C_001) -> float:
    """c * sqrt((m+n)/(mn)); one-sample when ``n`` is None."""
    if n is None:
        return c / math.sqrt(m)
    return c * math.sqrt((m + n) / (m * n))


def _check_normalized(p: Mapping, name: str) -> None:
    total = math.fsum(p.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"{name} sums to {total!r}, not 1")


def tv_distance_discrete(p: Mapping, q: Mapping) -> float:
    _check_normalized(p, "p")
    _check_normalized(q, "q")
    keys = set(p) | set(q)
    return min(1.0, 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys))


def empirical_pmf(values) -> dict:
    """Relative frequencies keyed by value (tuples allowed)."""
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    n = sum(counts.values())
    return {k: c / n for k, c in counts.items()}


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int

    @property
    def p_value(self) -> float:
        return float(sps.chi2.sf(self.statistic, self.dof)) if self.dof > 0 else 1.0


def chi_square_gof(observed, expected, total: int, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson chi-square over cells in order.

    Trailing cells with expected count below ``min_expected`` are pooled into
    one tail cell; if the listed cells leave probability mass uncovered, that
    remainder becomes a cell of its own.  dof = cells - 1.
    """
    obs = np.asarray(observed, dtype=float)
    exp_p = np.asarray(expected, dtype=float)
    if obs.shape != exp_p.shape:
        raise ValueError("observed and expected must have the same length")
    if np.any(exp_p <= 0):
        raise ValueError("expected masses must be positive on tested cells")
    cells_o = list(obs)
    cells_e = list(exp_p * total)
    rest_o = total - obs.sum()
    rest_e = total * (1.0 - exp_p.sum())
    if rest_e > 1e-9 * total or rest_o > 0:
        cells_o.append(rest_o)
        cells_e.append(max(rest_e, 0.0))

    # pool from the right until each cell is big enough
    out_o: list[float] = []
    out_e: list[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(reversed(cells_o), reversed(cells_e)):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            out_o.append(acc_o)
            out_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if not out_o:
            raise ValueError("no cell reaches the expected-count threshold")
        out_o[-1] += acc_o
        out_e[-1] += acc_e
    o = np.array(out_o)
    e = np.array(out_e)
    stat = float(np.sum((o - e) ** 2 / e))
    return ChiSquareResult(stat, len(o) - 1)


def mean_ci(sample, z: float = 1.96) -> tuple[float, float]:
    s = _summary(sample)
    if s.count < 2:
        raise ValueError("a confidence interval needs at least two values")
    half = z * math.sqrt(s.variance / s.count)
    return s.mean - half, s.mean + half


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(np.asarray(x, dtype=float))
        ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ValueError("slope needs at least two points")
    if not np.all(np.isfinite(ly)):
        raise ValueError("slope needs positive y values")
    return float(np.polyfit(lx, ly, 1)[0])
