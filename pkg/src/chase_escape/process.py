"""Chase-escape dynamics on the complete graph K_{N+2}.

Only the embedded jump chain matters for the absorbed state: from (s, i, r)
an infection happens with probability ``lam*s / (lam*s + r)`` and a recovery
otherwise, independently of ``i``.  This module holds the state types, the
jump-chain sampler and an exhaustive dynamic program over the chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

#: Largest population accepted by :func:`exact_absorption_law`.
EXACT_MAX_N = 20000


@dataclass(frozen=True)
class ProcessParams:
    """Population size ``n`` (initially susceptible vertices) and infection
    intensity ``lam`` relative to the unit recovery rate."""

    n: int
    lam: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        lam = float(self.lam)
        if not math.isfinite(lam) or lam <= 0:
            raise ValueError(f"lam must be positive and finite, got {self.lam!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "lam", lam)

    @property
    def total(self) -> int:
        return self.n + 2


@dataclass(frozen=True, order=True)
class StateCounts:
    s: int
    i: int
    r: int

    @classmethod
    def initial(cls, params: ProcessParams) -> "StateCounts":
        return cls(params.n, 1, 1)

    @property
    def absorbed(self) -> bool:
        return self.s == 0 or self.i == 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.s, self.i, self.r)


class Cause(str, Enum):
    SUSCEPTIBLE_EXTINCT = "SusceptibleExtinct"
    INFECTED_EXTINCT = "InfectedExtinct"


@dataclass(frozen=True)
class AbsorptionRecord:
    """Absorbed state of one run.

    ``time`` is only set by the clock-based samplers.  ``ties`` counts
    floating-point coincidences between an infection and a recovery clock;
    they are resolved as infection first.
    """

    final: StateCounts
    cause: Cause
    jumps: int
    time: float | None = None
    ties: int = 0

    @property
    def extinct(self) -> bool:
        """True on the event that the susceptibles die out."""
        return self.cause is Cause.SUSCEPTIBLE_EXTINCT


def classify(final: StateCounts) -> Cause:
    if final.s == 0:
        return Cause.SUSCEPTIBLE_EXTINCT
    if final.i == 0:
        return Cause.INFECTED_EXTINCT
    raise ValueError(f"state {final} is not absorbed")


def jump_probabilities(s: int, r: int, lam: float) -> tuple[float, float]:
    """Probabilities that the next jump is an infection or a recovery."""
    if s < 1 or r < 1:
        raise ValueError(f"need s >= 1 and r >= 1, got s={s}, r={r}")
    total = lam * s + r
    return lam * s / total, r / total


def step(state: StateCounts, u: float, params: ProcessParams) -> StateCounts:
    """Advance the jump chain by one jump driven by the uniform ``u``.

    An infection happens iff ``u < p_infect`` (strict).
    """
    if state.absorbed:
        raise ValueError(f"cannot step from absorbed state {state}")
    p_infect, _ = jump_probabilities(state.s, state.r, params.lam)
    if u < p_infect:
        return StateCounts(state.s - 1, state.i + 1, state.r)
    return StateCounts(state.s, state.i - 1, state.r + 1)


#: Uniforms are drawn in blocks of this size; most runs with lam < 1 end
#: long before 2n + 1 jumps.
UNIFORM_BLOCK = 4096


@njit(cache=True)
def _jump_chain_kernel(n, lam, s, i, r, u):
    # Same comparison as ``step``; stops when absorbed or out of uniforms.
    k = 0
    while s > 0 and i > 0 and k < u.size:
        if u[k] < lam * s / (lam * s + r):
            s -= 1
            i += 1
        else:
            i -= 1
            r += 1
        k += 1
    return s, i, r, k


def _uniform_blocks(params: ProcessParams, rng: np.random.Generator):
    # at most 2n + 1 jumps occur (n infections, n + 1 recoveries)
    left = 2 * params.n + 1
    while left > 0:
        size = min(left, UNIFORM_BLOCK)
        left -= size
        yield rng.random(size)


def run_jump_chain(params: ProcessParams, rng: np.random.Generator) -> AbsorptionRecord:
    """Sample the absorbed state by iterating the embedded jump chain.

    Uniforms come from ``rng.random`` in blocks of :data:`UNIFORM_BLOCK`;
    the unused tail of the last block is discarded.
    """
    s, i, r, jumps = params.n, 1, 1, 0
    for u in _uniform_blocks(params, rng):
        s, i, r, k = _jump_chain_kernel(params.n, params.lam, s, i, r, u)
        jumps += k
        if s == 0 or i == 0:
            break
    final = StateCounts(int(s), int(i), int(r))
    return AbsorptionRecord(final, classify(final), int(jumps))


def run_jump_chain_reference(params: ProcessParams, rng: np.random.Generator) -> AbsorptionRecord:
    """Pure-Python twin of :func:`run_jump_chain` built on :func:`step`.

    Consumes the same uniforms, so both return identical records for the
    same stream.  Slow; kept for cross-checking the compiled loop.
    """
    state = StateCounts.initial(params)
    k = 0
    for u in _uniform_blocks(params, rng):
        for x in u:
            state = step(state, float(x), params)
            k += 1
            if state.absorbed:
                break
        if state.absorbed:
            break
    return AbsorptionRecord(state, classify(state), k)


@dataclass(frozen=True)
class ExactLaw:
    """Full law of the absorbed state, as (state, probability) pairs."""

    params: ProcessParams
    support: list[tuple[StateCounts, float]]
    extinction_probability: float

    def probability(self, state: StateCounts | tuple[int, int, int]) -> float:
        if not isinstance(state, StateCounts):
            state = StateCounts(*state)
        return self._table.get(state, 0.0)

    @property
    def _table(self) -> dict[StateCounts, float]:
        table = self.__dict__.get("_table_cache")
        if table is None:
            table = dict(self.support)
            object.__setattr__(self, "_table_cache", table)
        return table

    def marginal(self, field: str) -> dict[int, float]:
        """Law of one coordinate (``"s"``, ``"i"`` or ``"r"``)."""
        out: dict[int, float] = {}
        for state, p in self.support:
            key = getattr(state, field)
            out[key] = out.get(key, 0.0) + p
        return out

    def total_mass(self) -> float:
        return math.fsum(p for _, p in self.support)

    def mean(self, field: str) -> float:
        return math.fsum(getattr(state, field) * p for state, p in self.support)


def _absorption_masses(n: int, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Forward-propagate mass over the jump chain, one diagonal at a time.

    A transient state is indexed by (j infections, m recoveries) with
    0 <= m <= j <= n-1, i.e. (s, i, r) = (n-j, 1+j-m, 1+m).  Diagonal k holds
    the states with j + m = k, so the state graph is processed in jump order.

    Returns ``(dead, full)``: ``dead[j]`` is the mass absorbed at
    (n-j, 0, j+2) and ``full[m]`` the mass absorbed at (0, n+1-m, 1+m).
    """
    dead = np.zeros(n + 1)
    full = np.zeros(n + 1)
    cur = np.zeros(n + 1)
    nxt = np.zeros(n + 1)
    cur[0] = 1.0
    j_all = np.arange(n + 1, dtype=float)
    for k in range(2 * n):
        lo = (k + 1) // 2
        hi = min(k, n - 1)
        if lo > hi:
            break
        j = j_all[lo : hi + 1]
        m = k - j
        mass = cur[lo : hi + 1]
        a = lam * (n - j)
        denom = a + 1.0 + m
        infect = mass * (a / denom)
        recover = mass * ((1.0 + m) / denom)

        nxt[lo : hi + 2] = 0.0
        nxt[lo : hi + 1] += recover
        if k % 2 == 0:
            # m == j at j = lo: the last infected individual recovers
            dead[lo] += nxt[lo]
            nxt[lo] = 0.0
        nxt[lo + 1 : hi + 2] += infect
        if hi == n - 1:
            # infection of the last susceptible
            full[k - hi] += nxt[n]
            nxt[n] = 0.0
        cur[lo : hi + 1] = 0.0
        cur, nxt = nxt, cur
    return dead, full


def exact_absorption_law(params: ProcessParams) -> ExactLaw:
    """Exact law of the absorbed state for ``n <= EXACT_MAX_N``.

    >>> law = exact_absorption_law(ProcessParams(2, 1.0))
    >>> round(law.extinction_probability, 12)
    0.444444444444
    """
    n, lam = params.n, params.lam
    if n > EXACT_MAX_N:
        raise ValueError(f"exact law limited to n <= {EXACT_MAX_N}, got n={n}")
    dead, full = _absorption_masses(n, lam)
    support: list[tuple[StateCounts, float]] = []
    for j in range(n):
        if dead[j] > 0.0:
            support.append((StateCounts(n - j, 0, j + 2), float(dead[j])))
    for m in range(n):
        if full[m] > 0.0:
            support.append((StateCounts(0, n + 1 - m, 1 + m), float(full[m])))
    return ExactLaw(params, support, math.fsum(full))


def exact_extinction_probability(params: ProcessParams) -> float:
    """Probability that the susceptibles die out, from the exact law."""
    if params.n > EXACT_MAX_N:
        raise ValueError(f"exact law limited to n <= {EXACT_MAX_N}, got n={params.n}")
    _, full = _absorption_masses(params.n, params.lam)
    return math.fsum(full)
