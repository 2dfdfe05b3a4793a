"""Limit laws of the absorbed state as N grows, and first-order asymptotes.

Each law exposes ``cdf``, ``pdf`` (or ``pmf``), ``quantile``, ``sample`` and
``mean``.  Laws with an atom also expose ``cdf_left`` (the left limit), which
the KS statistic needs.

The compound exponential law is an exponential variable whose rate is an
independent copy of Exp(1)**(1/lam).  Its survival function
E[exp(-u W)] has no closed form for general lam and is integrated numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

#: (sqrt(5) - 1) / 2, where the leading term of N - E[R] changes.
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

_BOUNDARY_RTOL = 1e-12
_QUAD_EPSABS = 1e-12


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message: str, error_bound: float):
        super().__init__(f"{message} (achieved error bound {error_bound:.3g})")
        self.error_bound = error_bound


def _at(lam: float, boundary: float) -> bool:
    return math.isclose(lam, boundary, rel_tol=_BOUNDARY_RTOL, abs_tol=0.0)


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0:
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    return lam


def limiting_extinction_probability(lam: float) -> float:
    """Large-N limit of the probability that the susceptibles die out."""
    lam = _check_lam(lam)
    if _at(lam, 1.0):
        return 0.5
    return 0.0 if lam < 1.0 else 1.0


# -- powered exponential ------------------------------------------------------


def powered_exponential_cdf(x, lam: float):
    lam = _check_lam(lam)
    x = np.asarray(x, dtype=float)
    pos = np.maximum(x, 0.0)
    with np.errstate(over="ignore"):  # x**(1/lam) = inf still gives cdf 1
        out = np.where(x > 0, -np.expm1(-(pos ** (1.0 / lam))), 0.0)
    return out[()] if out.ndim == 0 else out


def powered_exponential_pdf(x, lam: float):
    lam = _check_lam(lam)
    x = np.asarray(x, dtype=float)
    pos = np.where(x > 0, x, 1.0)
    a = 1.0 / lam
    out = np.where(x > 0, a * pos ** (a - 1.0) * np.exp(-(pos**a)), 0.0)
    return out[()] if out.ndim == 0 else out


def powered_exponential_quantile(q, lam: float):
    lam = _check_lam(lam)
    q = np.asarray(q, dtype=float)
    if np.any((q < 0) | (q >= 1)):
        raise ValueError("quantile level must lie in [0, 1)")
    out = (-np.log1p(-q)) ** lam
    return out[()] if out.ndim == 0 else out


def powered_exponential_sample(lam: float, size: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_exponential(size) ** _check_lam(lam)


# -- geometric laws at criticality -------------------------------------------


def shifted_geometric_pmf(i: int) -> float:
    """P(G = i) = 2**-(i+1) for i >= 0."""
    if int(i) != i or i < 0:
        raise ValueError(f"G is supported on the nonnegative integers, got {i!r}")
    return math.ldexp(1.0, -(int(i) + 1))


def positive_geometric_pmf(i: int) -> float:
    """P(G' = i) = 2**-i for i >= 1 (G conditioned to be positive)."""
    if int(i) != i or i < 1:
        raise ValueError(f"G' is supported on the positive integers, got {i!r}")
    return math.ldexp(1.0, -int(i))


# -- critical mixtures --------------------------------------------------------


def critical_r_mixture_cdf(x):
    """CDF of half an atom at 1 plus the density (1+x)**-2 on [0, 1]."""
    x = np.asarray(x, dtype=float)
    inside = np.clip(x, 0.0, 1.0)
    out = np.where(x < 0, 0.0, np.where(x < 1, inside / (1.0 + inside), 1.0))
    return out[()] if out.ndim == 0 else out


def critical_i_law_cdf(x):
    """CDF of half an atom at 0 plus the density (2-x)**-2 on [0, 1].

    The density alone carries mass 1/2; the atom at 0 is the event that the
    infected die out first, whose probability tends to 1/2.
    """
    x = np.asarray(x, dtype=float)
    inside = np.clip(x, 0.0, 1.0)
    out = np.where(x < 0, 0.0, np.where(x <= 1, 1.0 / (2.0 - inside), 1.0))
    return out[()] if out.ndim == 0 else out


# -- compound exponential -----------------------------------------------------


def _compound_sf_scalar(u: float, lam: float) -> float:
    if u == 0.0:
        return 1.0
    if lam >= 1.0:
        # with y = t**lam: lam t**(lam-1) exp(-t**lam - t u), bounded near 0
        def f(t):
            return lam * t ** (lam - 1.0) * math.exp(-(t**lam) - t * u)

        scale = 1.0 / (1.0 + u)
    else:
        def f(y):
            return math.exp(-y - y ** (1.0 / lam) * u)

        scale = min(1.0, u ** (-lam)) if u > 0 else 1.0
    total = 0.0
    err = 0.0
    for a, b in ((0.0, scale), (scale, 40.0 * scale), (40.0 * scale, math.inf)):
        val, e = integrate.quad(f, a, b, epsabs=_QUAD_EPSABS, epsrel=1e-12, limit=200)
        total += val
        err += e
    if err > 1e-10:
        raise QuadratureError(f"compound survival at u={u}, lam={lam}", err)
    return min(1.0, max(0.0, total))


def _compound_sf_vector(u: np.ndarray, lam: float) -> np.ndarray:
    # one adaptive pass for all points; the integrand is vector valued
    if lam >= 1.0:
        def f(t):
            return lam * t ** (lam - 1.0) * np.exp(-(t**lam) - t * u)
    else:
        def f(y):
            return np.exp(-y - y ** (1.0 / lam) * u)

    edges = [0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 60.0]
    total = np.zeros_like(u)
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad_vec(f, a, b, epsabs=_QUAD_EPSABS, epsrel=1e-12, norm="max", limit=2000)
        total += val
        err += e
    if err > 1e-10:
        raise QuadratureError(f"compound survival on {u.size} points, lam={lam}", err)
    return np.clip(total, 0.0, 1.0)


def compound_exponential_sf(u, lam: float):
    """P(X > u) for X ~ Exp(rate Exp(1)**(1/lam)), by adaptive quadrature."""
    lam = _check_lam(lam)
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("compound law is supported on [0, inf)")
    if arr.ndim == 0:
        return _compound_sf_scalar(float(arr), lam)
    out = np.ones_like(arr)
    pos = arr > 0
    if np.any(pos):
        flat = arr[pos]
        # points far in the tail are integrated one by one; the vector pass is
        # tuned for moderate u
        big = flat > 1e4
        vals = np.empty_like(flat)
        if np.any(~big):
            vals[~big] = _compound_sf_vector(flat[~big], lam)
        for k in np.flatnonzero(big):
            vals[k] = _compound_sf_scalar(float(flat[k]), lam)
        out[pos] = vals
    return out


def compound_exponential_cdf(u, lam: float):
    sf = compound_exponential_sf(u, lam)
    return 1.0 - sf


def compound_exponential_pdf(u, lam: float) -> float:
    """Density E[W exp(-u W)], W = Exp(1)**(1/lam)."""
    lam = _check_lam(lam)
    u = float(u)
    if u < 0:
        return 0.0
    val, err = integrate.quad(
        lambda y: y ** (1.0 / lam) * math.exp(-y - y ** (1.0 / lam) * u),
        0.0, math.inf, epsabs=_QUAD_EPSABS, epsrel=1e-12, limit=200,
    )
    if err > 1e-10:
        raise QuadratureError(f"compound density at u={u}, lam={lam}", err)
    return val


def compound_exponential_quantile(q: float, lam: float) -> float:
    lam = _check_lam(lam)
    if not 0.0 <= q < 1.0:
        raise ValueError("quantile level must lie in [0, 1)")
    if q == 0.0:
        return 0.0
    hi = 1.0
    while compound_exponential_cdf(hi, lam) < q:
        hi *= 4.0
    return optimize.brentq(lambda u: compound_exponential_cdf(u, lam) - q, 0.0, hi, xtol=1e-13, rtol=1e-13)


def compound_exponential_sample(lam: float, size: int, rng: np.random.Generator) -> np.ndarray:
    rate = rng.standard_exponential(size) ** (1.0 / _check_lam(lam))
    return rng.standard_exponential(size) / rate


def compound_exponential_moment(s: float, lam: float) -> float:
    """E[X**s] = Gamma(1+s) * Gamma(1 - s/lam) for -1 < s < lam.

    X = E1 / W with E1 ~ Exp(1) independent of W = Exp(1)**(1/lam), so the
    moment factorises as E[E1**s] E[W**-s].
    """
    lam = _check_lam(lam)
    if not -1.0 < s < lam:
        raise ValueError(f"moment of order s={s} exists only for -1 < s < lam={lam}")
    return math.gamma(1.0 + s) * math.gamma(1.0 - s / lam)


def compound_exponential_mean_by_quadrature(lam: float, split: float = 100.0) -> float:
    """Mean as the integral of the survival function, for lam > 1.

    The survival function from :func:`compound_exponential_sf` is integrated
    over [0, split].  The remainder over [split, inf) is computed with the
    order of integration swapped, E[exp(-split W) / W], which is exact and
    converges quickly.
    """
    lam = _check_lam(lam)
    if lam <= 1.0:
        raise ValueError("the compound law has a finite mean only for lam > 1")
    head = 0.0
    edges = [0.0, 0.1, 1.0, 10.0, split]
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(lambda u: _compound_sf_scalar(u, lam), a, b,
                                  epsabs=1e-13, epsrel=1e-13, limit=400)
        if err > 1e-9:
            raise QuadratureError(f"survival integral on [{a}, {b}]", err)
        head += val

    # t-form, W = t: int lam t**(lam-2) exp(-t**lam - split t) dt
    def g(t):
        return lam * t ** (lam - 2.0) * math.exp(-(t**lam) - split * t)

    # the t**(lam-2) endpoint singularity goes into an algebraic weight
    tail, err = integrate.quad(lambda t: lam * math.exp(-(t**lam) - split * t), 0.0, 1.0 / split,
                               weight="alg", wvar=(lam - 2.0, 0.0), epsabs=1e-14, epsrel=1e-13)
    if err > 1e-9:
        raise QuadratureError("survival integral tail", err)
    for a, b in ((1.0 / split, 1.0), (1.0, math.inf)):
        val, err = integrate.quad(g, a, b, epsabs=1e-14, epsrel=1e-13, limit=400)
        if err > 1e-9:
            raise QuadratureError("survival integral tail", err)
        tail += val
    return head + tail


def compound_exponential_tail_asymptote(u: float, lam: float) -> float:
    """Gamma(lam+1) u**-lam: leading behaviour of P(X > u), not the exact tail."""
    lam = _check_lam(lam)
    if u <= 0:
        raise ValueError("tail asymptote needs u > 0")
    return math.gamma(lam + 1.0) * u ** (-lam)


# -- law objects --------------------------------------------------------------


@dataclass(frozen=True)
class PoweredExponential:
    lam: float
    kind = "powered-exp"
    discrete = False

    def cdf(self, x):
        return powered_exponential_cdf(x, self.lam)

    cdf_left = cdf

    def pdf(self, x):
        return powered_exponential_pdf(x, self.lam)

    def quantile(self, q):
        return powered_exponential_quantile(q, self.lam)

    def sample(self, size, rng):
        return powered_exponential_sample(self.lam, size, rng)

    def mean(self):
        return math.gamma(1.0 + self.lam)


@dataclass(frozen=True)
class ShiftedGeometric:
    kind = "geometric"
    discrete = True
    offset = 0

    def pmf(self, i):
        return shifted_geometric_pmf(i) if self.offset == 0 else positive_geometric_pmf(i)

    def cdf(self, x):
        x = np.floor(np.asarray(x, dtype=float))
        k = x - self.offset + 1  # number of support points <= x
        out = np.where(k <= 0, 0.0, -np.expm1(np.maximum(k, 0.0) * math.log(0.5)))
        return out[()] if out.ndim == 0 else out

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        return self.cdf(np.ceil(x) - 1)

    def quantile(self, q):
        if not 0.0 <= q < 1.0:
            raise ValueError("quantile level must lie in [0, 1)")
        # smallest support point with cdf >= q
        k = max(1, math.ceil(-math.log2(1.0 - q) - 1e-12))
        return k - 1 + self.offset

    def sample(self, size, rng):
        return rng.geometric(0.5, size) - 1 + self.offset

    def mean(self):
        return 1.0 + self.offset


@dataclass(frozen=True)
class PositiveGeometric(ShiftedGeometric):
    kind = "positive-geometric"
    offset = 1


@dataclass(frozen=True)
class CriticalRMixture:
    kind = "critical-r"
    discrete = False

    def cdf(self, x):
        return critical_r_mixture_cdf(x)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.clip(x, 0.0, 1.0)
        out = np.where(x <= 0, 0.0, np.where(x <= 1, inside / (1.0 + inside), 1.0))
        return out[()] if out.ndim == 0 else out

    def pdf(self, x):
        """Density of the absolutely continuous part (the atom at 1 is excluded)."""
        x = np.asarray(x, dtype=float)
        out = np.where((x >= 0) & (x <= 1), 1.0 / (1.0 + np.clip(x, 0, 1)) ** 2, 0.0)
        return out[()] if out.ndim == 0 else out

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q >= 1)):
            raise ValueError("quantile level must lie in [0, 1)")
        out = np.where(q < 0.5, q / (1.0 - np.minimum(q, 0.5)), 1.0)
        return out[()] if out.ndim == 0 else out

    def sample(self, size, rng):
        return self.quantile(rng.random(size))

    def mean(self):
        return math.log(2.0)


@dataclass(frozen=True)
class CriticalILaw:
    kind = "critical-i"
    discrete = False

    def cdf(self, x):
        return critical_i_law_cdf(x)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.clip(x, 0.0, 1.0)
        out = np.where(x <= 0, 0.0, np.where(x <= 1, 1.0 / (2.0 - inside), 1.0))
        return out[()] if out.ndim == 0 else out

    def pdf(self, x):
        """Density of the absolutely continuous part (the atom at 0 is excluded)."""
        x = np.asarray(x, dtype=float)
        out = np.where((x >= 0) & (x <= 1), 1.0 / (2.0 - np.clip(x, 0, 1)) ** 2, 0.0)
        return out[()] if out.ndim == 0 else out

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q >= 1)):
            raise ValueError("quantile level must lie in [0, 1)")
        out = np.where(q <= 0.5, 0.0, 2.0 - 1.0 / np.maximum(q, 0.5))
        return out[()] if out.ndim == 0 else out

    def sample(self, size, rng):
        return self.quantile(rng.random(size))

    def mean(self):
        return 1.0 - math.log(2.0)


@dataclass(frozen=True)
class CompoundExponential:
    lam: float
    kind = "compound"
    discrete = False

    def cdf(self, u):
        return compound_exponential_cdf(u, self.lam)

    cdf_left = cdf

    def pdf(self, u):
        return compound_exponential_pdf(u, self.lam)

    def quantile(self, q):
        return compound_exponential_quantile(q, self.lam)

    def sample(self, size, rng):
        return compound_exponential_sample(self.lam, size, rng)

    def moment(self, s):
        return compound_exponential_moment(s, self.lam)

    def mean(self):
        return compound_exponential_moment(1.0, self.lam) if self.lam > 1 else math.inf


LAW_NAMES = ("powered-exp", "geometric", "positive-geometric", "critical-r", "critical-i", "compound")


def make_law(name: str, lam: float | None = None):
    """Build a law object from its CLI name."""
    if name == "powered-exp":
        return PoweredExponential(_check_lam(_need(lam, name)))
    if name == "compound":
        return CompoundExponential(_check_lam(_need(lam, name)))
    if name == "geometric":
        return ShiftedGeometric()
    if name == "positive-geometric":
        return PositiveGeometric()
    if name == "critical-r":
        return CriticalRMixture()
    if name == "critical-i":
        return CriticalILaw()
    raise ValueError(f"unknown law {name!r}; expected one of {', '.join(LAW_NAMES)}")


def _need(lam, name):
    if lam is None:
        raise ValueError(f"law {name!r} needs lam")
    return lam


# -- first-order asymptotes ---------------------------------------------------


@dataclass(frozen=True)
class Asymptote:
    """Leading-order value of an expectation, with the regime it came from."""

    value: float
    regime: str


QUANTITIES = ("S", "I", "R", "R_deficit", "I_deficit")


def expected_final_count_asymptote(quantity: str, lam: float, n: int) -> Asymptote:
    """Leading-order behaviour of E[S], E[I], E[R], N - E[R] or N - E[I].

    Boundary regimes (lam = 1/2, (sqrt 5 - 1)/2, 1) are matched with a relative
    tolerance of 1e-12.
    """
    lam = _check_lam(lam)
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = float(n)
    g = math.gamma
    critical = _at(lam, 1.0)
    sub = lam < 1.0 and not critical

    if quantity == "S":
        if critical:
            return Asymptote(2.0, "lam = 1: E[S] -> 1 + E[G] = 2")
        if sub:
            return Asymptote(g(lam + 1.0) * n ** (1.0 - lam), "lam < 1: Gamma(lam+1) N^(1-lam)")
        return Asymptote(1.0 / lam, "lam > 1: E[S] -> 1/lam")

    if quantity == "R_deficit":
        if not sub:
            raise ValueError("N - E[R] asymptote is given only for lam < 1")
        if _at(lam, GOLDEN):
            value = (0.5 * g(1.0 + 1.0 / lam) + g(lam + 1.0)) * n ** ((3.0 - math.sqrt(5.0)) / 2.0)
            return Asymptote(value, "lam = (sqrt5-1)/2: both contributions, N^((3-sqrt5)/2)")
        if lam < GOLDEN:
            return Asymptote(g(lam + 1.0) * n ** (1.0 - lam), "lam < (sqrt5-1)/2: Gamma(lam+1) N^(1-lam)")
        return Asymptote(0.5 * g(1.0 + 1.0 / lam) * n ** (2.0 - 1.0 / lam),
                         "(sqrt5-1)/2 < lam < 1: Gamma(1+1/lam)/2 N^(2-1/lam)")

    if quantity == "I":
        if critical:
            return Asymptote((1.0 - math.log(2.0)) * n, "lam = 1: (1 - ln 2) N")
        if not sub:
            return Asymptote(n, "lam > 1: E[I] ~ N")
        if _at(lam, 0.5):
            return Asymptote(1.0, "lam = 1/2: E[I] -> 1")
        if lam < 0.5:
            return Asymptote(0.0, "lam < 1/2: E[I] -> 0")
        return Asymptote(0.5 * g(1.0 + 1.0 / lam) * n ** (2.0 - 1.0 / lam),
                         "1/2 < lam < 1: Gamma(1+1/lam)/2 N^(2-1/lam)")

    if quantity == "R":
        if critical:
            return Asymptote(math.log(2.0) * n, "lam = 1: ln(2) N")
        if sub:
            return Asymptote(n, "lam < 1: E[R] ~ N")
        return Asymptote(g(1.0 - 1.0 / lam) * n ** (1.0 / lam), "lam > 1: Gamma(1-1/lam) N^(1/lam)")

    if quantity == "I_deficit":
        if sub or critical:
            raise ValueError("N - E[I] asymptote is given only for lam > 1")
        return Asymptote(g(1.0 - 1.0 / lam) * n ** (1.0 / lam), "lam > 1: Gamma(1-1/lam) N^(1/lam)")

    raise ValueError(f"unknown quantity {quantity!r}; expected one of {', '.join(QUANTITIES)}")


def race_probability_asymptote(lam: float, n: int) -> float:
    """Gamma(1+1/lam) N^(1-1/lam), the decay of P(sigma(N) < rho(N)) for lam < 1.

    Clipped at 1, which only matters for small N or lam close to 1.
    """
    lam = _check_lam(lam)
    if lam >= 1.0:
        raise ValueError("race asymptote holds only for lam < 1")
    return min(1.0, math.gamma(1.0 + 1.0 / lam) * float(n) ** (1.0 - 1.0 / lam))
