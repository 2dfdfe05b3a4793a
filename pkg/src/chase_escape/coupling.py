"""Exact samplers built on independent clocks.

Infections and recoveries decouple: the susceptible count is a pure death
chain (each of the N susceptibles is infected after an independent
Exp(lam) time) and the recovered count a rate-1 Yule process.  The process
is absorbed at the first index k with rho(k) < sigma(k), or else when the
last susceptible is infected at sigma(N).

Two constructions of the clocks are provided: direct exponential
increments, and the Poisson embedding where each Yule process is a unit
Poisson process run on a random exponential time change.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .process import AbsorptionRecord, Cause, ProcessParams, StateCounts


class Method(str, Enum):
    DIRECT_CLOCKS = "clocks"
    POISSON_EMBEDDING = "poisson"


@dataclass(frozen=True)
class ClockPaths:
    """Jump times of both clocks.

    ``sigma[i-1]`` is the i-th infection time (i = 1..N) and ``rho[i-1]`` the
    i-th recovery time.  Absorption never looks past rho(N), so N + 1
    recovery times are always enough.
    """

    sigma: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))


@dataclass(frozen=True)
class EmbeddingDraw:
    """Primitives of the Poisson embedding.

    ``e`` and ``e_bar`` are the terminal values of the rate-1 and rate-lam
    Yule processes; ``tau[n-1]`` and ``tau_bar[n-1]`` are the n-th arrival
    times of two independent unit Poisson processes.
    """

    e: float
    e_bar: float
    tau: np.ndarray
    tau_bar: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))
        object.__setattr__(self, "tau_bar", np.asarray(self.tau_bar, dtype=float))


def sample_clock_paths(params: ProcessParams, rng: np.random.Generator) -> ClockPaths:
    n, lam = params.n, params.lam
    # sigma(i+1) - sigma(i) ~ Exp(lam (n - i)), rho(i) - rho(i-1) ~ Exp(i)
    sigma = np.cumsum(rng.standard_exponential(n) / (lam * np.arange(n, 0, -1)))
    rho = np.cumsum(rng.standard_exponential(n + 1) / np.arange(1, n + 2))
    return ClockPaths(sigma, rho)


def absorb_from_clocks(paths: ClockPaths, params: ProcessParams) -> AbsorptionRecord:
    """Read the absorbed state off a pair of clock paths."""
    n = params.n
    sigma = paths.sigma[:n]
    rho = paths.rho[:n]
    if sigma.size < n or rho.size < n:
        raise ValueError(f"clock paths must hold at least n={n} jump times")

    lost = rho < sigma
    if lost.any():
        k = int(np.argmax(lost)) + 1
        ties = int(np.count_nonzero(rho[:k] == sigma[:k]))
        final = StateCounts(n - k + 1, 0, k + 1)
        return AbsorptionRecord(final, Cause.INFECTED_EXTINCT, 2 * k - 1, float(rho[k - 1]), ties)

    end = sigma[-1]
    ties = int(np.count_nonzero(rho == sigma))
    # rho(n) >= sigma(n) here, so every recovery before sigma(n) has index < n
    recovered = int(np.searchsorted(rho, end, side="left"))
    if recovered < n and rho[recovered] == end:
        ties += 1
    final = StateCounts(0, n + 1 - recovered, 1 + recovered)
    return AbsorptionRecord(final, Cause.SUSCEPTIBLE_EXTINCT, n + recovered, float(end), ties)


def sample_poisson_embedding(params: ProcessParams, rng: np.random.Generator) -> EmbeddingDraw:
    n = params.n
    e = float(rng.standard_exponential())
    e_bar = float(rng.standard_exponential())
    tau_bar = np.cumsum(rng.standard_exponential(n))
    tau = np.cumsum(rng.standard_exponential(n + 1))
    return EmbeddingDraw(e, e_bar, tau, tau_bar)


def clocks_from_embedding(draw: EmbeddingDraw, params: ProcessParams) -> ClockPaths:
    """Map an embedding draw to clock paths.

    rho(i) = log(1 + tau_i / e) and
    sigma(i) = (log(1 + tau_bar_n / e_bar) - log(1 + tau_bar_{n-i} / e_bar)) / lam,
    the latter evaluated as a single log1p of a ratio so that late, tightly
    spaced infection times keep their relative precision.
    """
    n, lam = params.n, params.lam
    if draw.tau_bar.size < n:
        raise ValueError(f"embedding draw must hold tau_bar through index n={n}")
    tb = np.concatenate(([0.0], draw.tau_bar[:n]))
    before = tb[n - 1 :: -1]  # tau_bar_{n-i} for i = 1..n
    sigma = np.log1p((tb[n] - before) / (draw.e_bar + before)) / lam
    rho = np.log1p(draw.tau / draw.e)
    return ClockPaths(sigma, rho)


def run_coupled(
    params: ProcessParams,
    rng: np.random.Generator,
    method: Method | str = Method.POISSON_EMBEDDING,
) -> AbsorptionRecord:
    method = Method(method)
    if method is Method.DIRECT_CLOCKS:
        paths = sample_clock_paths(params, rng)
    else:
        paths = clocks_from_embedding(sample_poisson_embedding(params, rng), params)
    return absorb_from_clocks(paths, params)


def sigma_rho_race(draw: EmbeddingDraw, params: ProcessParams) -> bool:
    """Whether the last infection precedes the n-th recovery, sigma(n) < rho(n)."""
    n, lam = params.n, params.lam
    if draw.tau.size < n or draw.tau_bar.size < n:
        raise ValueError(f"embedding draw must hold both sequences through index n={n}")
    return bool(np.log1p(draw.tau_bar[n - 1] / draw.e_bar) / lam < np.log1p(draw.tau[n - 1] / draw.e))


def race_indicators(params: ProcessParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent race outcomes using Gamma(n, 1) endpoint draws.

    Only tau_n and tau_bar_n enter the race, so they are drawn directly
    instead of summing n exponentials.
    """
    n, lam = params.n, params.lam
    e = rng.standard_exponential(size)
    e_bar = rng.standard_exponential(size)
    tau_n = rng.standard_gamma(n, size)
    tau_bar_n = rng.standard_gamma(n, size)
    return np.log1p(tau_bar_n / e_bar) / lam < np.log1p(tau_n / e)


def count_infections_by(paths: ClockPaths, t: float) -> int:
    """Number of infection jumps in [0, t]."""
    return int(np.searchsorted(paths.sigma, t, side="right"))
