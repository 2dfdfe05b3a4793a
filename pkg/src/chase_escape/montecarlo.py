"""Replica orchestration, sweeps and the verification suite.

Replica ``i`` of an ensemble always draws from the stream
``PCG64(SeedSequence(master_seed, spawn_key=(i,)))``, so an ensemble is a
pure function of its configuration: worker count and scheduling only decide
who computes which contiguous block of replicas, and blocks are merged back
in replica order.
"""

from __future__ import annotations

import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import limits, stats
from .coupling import (
    EmbeddingDraw,
    Method,
    absorb_from_clocks,
    clocks_from_embedding,
    race_indicators,
    run_coupled,
)
from .process import (
    Cause,
    ProcessParams,
    exact_absorption_law,
    run_jump_chain,
)

#: Raw scaled samples kept per quantity before reservoir subsampling.
SCALED_SAMPLE_CAP = 10**6

THREADS_ENV = "CHASE_ESCAPE_THREADS"


class Sampler(str, Enum):
    JUMP_CHAIN = "jump"
    DIRECT_CLOCKS = "clocks"
    POISSON_EMBEDDING = "poisson"


def replica_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for replica ``index``; depends on nothing else."""
    if index < 0:
        raise ValueError("replica index must be nonnegative")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(master_seed: int, tag: str) -> int:
    """A 64-bit seed for a named sub-experiment of ``master_seed``."""
    seq = np.random.SeedSequence([int(master_seed) & (2**64 - 1), zlib.crc32(tag.encode())])
    return int(seq.generate_state(1, np.uint64)[0])


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


@dataclass(frozen=True)
class EnsembleConfig:
    params: ProcessParams
    replicas: int
    sampler: Sampler = Sampler.JUMP_CHAIN
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if int(self.replicas) != self.replicas or self.replicas < 1:
            raise ValueError(f"replicas must be a positive integer, got {self.replicas!r}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ValueError(f"workers must be a positive integer, got {self.workers!r}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        object.__setattr__(self, "sampler", Sampler(self.sampler))


def sample_one(params: ProcessParams, sampler: Sampler, rng: np.random.Generator):
    if sampler is Sampler.JUMP_CHAIN:
        return run_jump_chain(params, rng)
    method = Method.DIRECT_CLOCKS if sampler is Sampler.DIRECT_CLOCKS else Method.POISSON_EMBEDDING
    return run_coupled(params, rng, method)


_FIELDS = ("s", "i", "r", "jumps", "ties")


def _run_block(params: ProcessParams, sampler: Sampler, seed: int, start: int, stop: int):
    m = stop - start
    out = {name: np.empty(m, dtype=np.int64) for name in _FIELDS}
    times = np.full(m, np.nan)
    for k in range(m):
        rec = sample_one(params, sampler, replica_stream(seed, start + k))
        out["s"][k], out["i"][k], out["r"][k] = rec.final.as_tuple()
        out["jumps"][k] = rec.jumps
        out["ties"][k] = rec.ties
        if rec.time is not None:
            times[k] = rec.time
    out["time"] = times
    return out


def _blocks(total: int, workers: int) -> list[tuple[int, int]]:
    pieces = min(total, workers * 4)
    edges = np.linspace(0, total, pieces + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _map_blocks(fn, args_for, blocks, workers):
    if workers == 1 or len(blocks) == 1:
        return [fn(*args_for(a, b)) for a, b in blocks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args_for(a, b)) for a, b in blocks]
        return [f.result() for f in futures]


@dataclass
class EnsembleSummary:
    """Absorbed states of every replica plus derived estimates.

    Arrays are indexed by replica.  ``time`` is NaN for the jump-chain
    sampler.  ``tie_counts`` holds the clock coincidences of each replica,
    all resolved as infection first.
    """

    config: EnsembleConfig
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    jumps: np.ndarray
    time: np.ndarray
    tie_counts: np.ndarray
    elapsed: float = field(default=0.0, compare=False)

    @property
    def params(self) -> ProcessParams:
        return self.config.params

    @property
    def replicas(self) -> int:
        return int(self.s.size)

    @property
    def ties(self) -> int:
        return int(self.tie_counts.sum())

    def cause_counts(self) -> dict[str, int]:
        ext = int(np.count_nonzero(self.s == 0))
        return {Cause.SUSCEPTIBLE_EXTINCT.value: ext, Cause.INFECTED_EXTINCT.value: self.replicas - ext}

    @property
    def extinction_frequency(self) -> float:
        return float(np.count_nonzero(self.s == 0)) / self.replicas

    def extinction_stderr(self) -> float:
        p = self.extinction_frequency
        return math.sqrt(p * (1.0 - p) / self.replicas)

    def state_law(self) -> dict[tuple[int, int, int], float]:
        triples = np.stack([self.s, self.i, self.r], axis=1)
        uniq, counts = np.unique(triples, axis=0, return_counts=True)
        return {tuple(int(v) for v in row): c / self.replicas for row, c in zip(uniq, counts)}

    def marginal(self, name: str) -> dict[int, float]:
        vals, counts = np.unique(getattr(self, name), return_counts=True)
        return {int(v): c / self.replicas for v, c in zip(vals, counts)}

    def frequency(self, state: tuple[int, int, int]) -> float:
        s, i, r = state
        hit = (self.s == s) & (self.i == i) & (self.r == r)
        return float(np.count_nonzero(hit)) / self.replicas

    def mean(self, name: str) -> float:
        return float(np.mean(getattr(self, name)))

    def mean_ci(self, name: str, z: float = 1.96) -> tuple[float, float]:
        return stats.mean_ci(getattr(self, name).astype(float), z)

    def scaled_names(self) -> list[str]:
        lam = self.params.lam
        if limits._at(lam, 1.0):
            return ["s", "r/N", "i/N"]
        if lam < 1.0:
            return ["s/N^(1-lam)", "(N-r)/N^(1-lam)"]
        return ["r/N^(1/lam)", "(N-i)/N^(1/lam)"]

    def scaled(self, name: str) -> np.ndarray:
        """A regime-scaled quantity, reservoir-subsampled above the cap."""
        n, lam = float(self.params.n), self.params.lam
        table = {
            "s": lambda: self.s.astype(float),
            "r/N": lambda: self.r / n,
            "i/N": lambda: self.i / n,
            "s/N^(1-lam)": lambda: self.s / n ** (1.0 - lam),
            "(N-r)/N^(1-lam)": lambda: (n - self.r) / n ** (1.0 - lam),
            "r/N^(1/lam)": lambda: self.r / n ** (1.0 / lam),
            "(N-i)/N^(1/lam)": lambda: (n - self.i) / n ** (1.0 / lam),
        }
        if name not in table:
            raise KeyError(f"unknown scaled quantity {name!r}")
        values = table[name]()
        if values.size > SCALED_SAMPLE_CAP:
            rng = np.random.Generator(np.random.PCG64(derive_seed(self.config.master_seed, "reservoir")))
            keep = np.sort(rng.choice(values.size, SCALED_SAMPLE_CAP, replace=False))
            values = values[keep]
        return values

    def head(self, m: int) -> "EnsembleSummary":
        """The first ``m`` replicas, which form the ensemble of size ``m``."""
        if not 1 <= m <= self.replicas:
            raise ValueError(f"cannot take {m} of {self.replicas} replicas")
        cfg = replace(self.config, replicas=m)
        return EnsembleSummary(cfg, self.s[:m], self.i[:m], self.r[:m], self.jumps[:m], self.time[:m],
                               self.tie_counts[:m])

    def to_dict(self) -> dict:
        p = self.params
        out = {
            "lambda": p.lam,
            "n": p.n,
            "replicas": self.replicas,
            "sampler": self.config.sampler.value,
            "master_seed": self.config.master_seed,
            "causes": self.cause_counts(),
            "extinction_frequency": self.extinction_frequency,
            "ties": self.ties,
        }
        for name in ("s", "i", "r"):
            out[f"mean_final_{name}"] = self.mean(name)
            if self.replicas >= 2:
                lo, hi = self.mean_ci(name)
                out[f"ci95_final_{name}"] = [lo, hi]
        return out


def run_replicas(config: EnsembleConfig) -> EnsembleSummary:
    """Draw every replica of ``config`` and collect the absorbed states."""
    start = time.perf_counter()
    blocks = _blocks(config.replicas, config.workers)
    parts = _map_blocks(
        _run_block,
        lambda a, b: (config.params, config.sampler, config.master_seed, a, b),
        blocks,
        config.workers,
    )
    arrays = {name: np.concatenate([p[name] for p in parts]) for name in (*_FIELDS, "time")}
    return EnsembleSummary(config, arrays["s"], arrays["i"], arrays["r"], arrays["jumps"], arrays["time"],
                           arrays["ties"], time.perf_counter() - start)


# -- importance sampling of rare large outbreaks -------------------------------


@dataclass(frozen=True)
class ImportanceEstimate:
    mean: float
    stderr: float
    replicas: int
    tilt_rate: float
    plain_mean: float  # unweighted mean under the proposal, for diagnostics only


def default_tilt_rate(params: ProcessParams) -> float:
    """N^(1/lam - 1): the scale of E below which the infection wins the race."""
    if params.lam >= 1.0:
        return 1.0
    return float(params.n) ** (1.0 / params.lam - 1.0)


def _importance_block(params, seed, tilt, start, stop, field_name):
    n = params.n
    vals = np.empty(stop - start)
    weights = np.empty(stop - start)
    for k in range(stop - start):
        rng = replica_stream(seed, start + k)
        # E is drawn from 1/2 Exp(1) + 1/2 Exp(tilt); the weight
        # e^-x / q(x) is bounded by 2
        pick_tilt = rng.random() < 0.5
        e = float(rng.standard_exponential()) / (tilt if pick_tilt else 1.0)
        e_bar = float(rng.standard_exponential())
        tau_bar = np.cumsum(rng.standard_exponential(n))
        tau = np.cumsum(rng.standard_exponential(n + 1))
        rec = absorb_from_clocks(clocks_from_embedding(EmbeddingDraw(e, e_bar, tau, tau_bar), params), params)
        weights[k] = 1.0 / (0.5 + 0.5 * tilt * math.exp((1.0 - tilt) * e))
        vals[k] = getattr(rec.final, field_name)
    return vals, weights


def importance_mean(
    params: ProcessParams,
    replicas: int,
    master_seed: int,
    field_name: str = "i",
    tilt_rate: float | None = None,
    workers: int = 1,
) -> ImportanceEstimate:
    """Unbiased estimate of E[final field] with the recovery terminal value tilted.

    For lam < 1 the outbreak is large only on the rare event that the
    infection clock beats the recovery clock, which needs the terminal value
    E of the recovery Yule process to be of order N^(1 - 1/lam).  Drawing E
    from a defensive mixture that puts half its mass at that scale, and
    reweighting by the likelihood ratio, estimates the same expectation with
    far smaller variance.  Everything else in the Poisson embedding is drawn
    from its true law.
    """
    if field_name not in ("s", "i", "r"):
        raise ValueError(f"field must be s, i or r, got {field_name!r}")
    tilt = default_tilt_rate(params) if tilt_rate is None else float(tilt_rate)
    if not tilt > 0:
        raise ValueError("tilt rate must be positive")
    blocks = _blocks(replicas, workers)
    parts = _map_blocks(
        _importance_block,
        lambda a, b: (params, master_seed, tilt, a, b, field_name),
        blocks,
        workers,
    )
    vals = np.concatenate([p[0] for p in parts])
    w = np.concatenate([p[1] for p in parts])
    terms = vals * w
    return ImportanceEstimate(
        float(terms.mean()),
        float(terms.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else math.inf,
        replicas,
        tilt,
        float(vals.mean()),
    )


# -- sweeps --------------------------------------------------------------------


def _asymptote_or_nan(quantity: str, lam: float, n: int) -> float:
    try:
        return limits.expected_final_count_asymptote(quantity, lam, n).value
    except ValueError:
        return math.nan


SWEEP_COLUMNS = (
    "lambda", "n", "replicas", "sampler", "extinction_frequency",
    "mean_final_s", "mean_final_i", "mean_final_r",
    "stderr_final_s", "stderr_final_i", "stderr_final_r",
    "asymptote_E_S", "asymptote_E_I", "asymptote_E_R", "error",
)


def sweep(grid, template: EnsembleConfig) -> list[dict]:
    """One summary row per (lam, n) grid point, in grid order.

    Each point reuses the template's seed, replicas, sampler and workers.
    A point that raises is reported through the ``error`` column.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid is empty")
    rows = []
    for lam, n in grid:
        row = {c: math.nan for c in SWEEP_COLUMNS}
        row.update({"lambda": float(lam), "n": int(n), "replicas": template.replicas,
                    "sampler": template.sampler.value, "error": ""})
        try:
            params = ProcessParams(int(n), float(lam))
            summary = run_replicas(replace(template, params=params))
        except ValueError as exc:
            row["error"] = str(exc).replace(",", ";")
            rows.append(row)
            continue
        row["extinction_frequency"] = summary.extinction_frequency
        for name in ("s", "i", "r"):
            x = getattr(summary, name).astype(float)
            row[f"mean_final_{name}"] = float(x.mean())
            row[f"stderr_final_{name}"] = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
        row["asymptote_E_S"] = _asymptote_or_nan("S", lam, n)
        row["asymptote_E_I"] = _asymptote_or_nan("I", lam, n)
        row["asymptote_E_R"] = _asymptote_or_nan("R", lam, n)
        rows.append(row)
    return rows


def sweep_slope(rows: list[dict], column: str) -> float:
    """Least-squares log-log slope of ``column`` against n over the rows."""
    ok = [r for r in rows if not r.get("error")]
    return stats.loglog_slope([r["n"] for r in ok], [r[column] for r in ok])


# -- verification suite ----------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    target: str
    tolerance: str
    passed: bool
    detail: str = ""
    exact: float | None = None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "measured": self.measured,
            "target": self.target,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        }
        if self.exact is not None:
            out["exact"] = self.exact
        return out


@dataclass
class VerifyReport:
    level: str
    seed: int
    checks: list[CheckResult]

    @property
    def failures(self) -> int:
        return sum(not c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "seed": self.seed,
            "failures": self.failures,
            "checks": [c.to_dict() for c in self.checks],
        }


class EnsembleCache:
    """Shares ensembles between checks of one suite run.

    An ensemble is keyed by (n, lam, sampler); its seed is derived from the
    suite seed and that key, and a smaller request is served by the first
    replicas of a larger one (which is exactly the smaller ensemble).
    """

    def __init__(self, seed: int, workers: int):
        self.seed = seed
        self.workers = workers
        self._store: dict[tuple, EnsembleSummary] = {}

    def get(self, n: int, lam: float, sampler: Sampler, replicas: int) -> EnsembleSummary:
        key = (n, float(lam), Sampler(sampler))
        have = self._store.get(key)
        if have is not None and have.replicas >= replicas:
            return have if have.replicas == replicas else have.head(replicas)
        cfg = EnsembleConfig(ProcessParams(n, lam), replicas, sampler,
                             derive_seed(self.seed, f"{key[2].value}:{n}:{key[1]!r}"), self.workers)
        summary = run_replicas(cfg)
        self._store[key] = summary
        return summary


@dataclass(frozen=True)
class SuiteScale:
    oracle_replicas: int
    t1_replicas: int
    full: bool


SCALES = {
    "quick": SuiteScale(oracle_replicas=30_000, t1_replicas=20_000, full=False),
    "full": SuiteScale(oracle_replicas=100_000, t1_replicas=100_000, full=True),
}

_SAMPLERS = (Sampler.JUMP_CHAIN, Sampler.DIRECT_CLOCKS, Sampler.POISSON_EMBEDDING)


def _fmt(lam: float) -> str:
    return f"{lam:g}"


def check_first_jump(cache: EnsembleCache, scale: SuiteScale) -> list[CheckResult]:
    out = []
    for n, lam in ((50, 1.7), (7, 0.3)):
        exact = 1.0 / (lam * n + 1.0)
        dp = exact_absorption_law(ProcessParams(n, lam)).probability((n, 0, 2))
        ens = cache.get(n, lam, Sampler.JUMP_CHAIN, scale.t1_replicas)
        freq = ens.frequency((n, 0, 2))
        se = math.sqrt(exact * (1 - exact) / ens.replicas)
        ok = abs(dp - exact) < 1e-12 and abs(freq - exact) <= 4 * se
        out.append(CheckResult(
            f"eq-t1[n={n};lam={_fmt(lam)}]", freq, "1/(lam*n+1)", f"dp 1e-12; empirical 4se={4 * se:.3g}",
            ok, f"dp={dp!r}; replicas={ens.replicas}", exact=exact,
        ))
    return out


def check_oracle(cache: EnsembleCache, scale: SuiteScale) -> list[CheckResult]:
    out = []
    n = 20
    for lam in (0.5, 1.0, 1.5):
        law = exact_absorption_law(ProcessParams(n, lam))
        exact = {st.as_tuple(): p for st, p in law.support}
        for sampler in _SAMPLERS:
            ens = cache.get(n, lam, sampler, scale.oracle_replicas)
            tv = stats.tv_distance_discrete(ens.state_law(), exact)
            out.append(CheckResult(f"oracle-tv[{sampler.value};lam={_fmt(lam)}]", tv, "0", "< 0.03",
                                   tv < 0.03, f"n={n}; replicas={ens.replicas}"))
            freq, p = ens.extinction_frequency, law.extinction_probability
            se = math.sqrt(p * (1 - p) / ens.replicas)
            out.append(CheckResult(f"extinction-bracket[{sampler.value};lam={_fmt(lam)}]", freq,
                                   "exact extinction probability", f"4se={4 * se:.3g}",
                                   abs(freq - p) <= 4 * se, f"n={n}", exact=p))
    return out


def check_cross(cache: EnsembleCache, scale: SuiteScale) -> list[CheckResult]:
    n, lam, m = 100, 1.2, 10_000
    crit = 0.0231
    ens = {s: cache.get(n, lam, s, m) for s in _SAMPLERS}
    out = []
    for a, b in ((0, 1), (0, 2), (1, 2)):
        sa, sb = _SAMPLERS[a], _SAMPLERS[b]
        d = stats.ks_two_sample(ens[sa].r, ens[sb].r)
        out.append(CheckResult(f"cross-ks[{sa.value};{sb.value}]", d, "0", f"< {crit}", d < crit,
                               f"final r; n={n}; lam={lam}; replicas={m}"))
    return out


def check_critical_extinction(cache: EnsembleCache) -> list[CheckResult]:
    out = []
    bands = {
        1.0: ("[0.47, 0.53]", lambda f: 0.47 <= f <= 0.53),
        0.5: ("< 0.05", lambda f: f < 0.05),
        2.0: ("> 0.95", lambda f: f > 0.95),
    }
    for lam, (tol, ok) in bands.items():
        ens = cache.get(10_000, lam, Sampler.POISSON_EMBEDDING, 10_000)
        f = ens.extinction_frequency
        out.append(CheckResult(f"critical-extinction[lam={_fmt(lam)}]", f,
                               f"{limits.limiting_extinction_probability(lam):g}", tol, ok(f),
                               f"n=10000; replicas={ens.replicas}; ties={ens.ties}"))
    return out


def check_geometric(cache: EnsembleCache) -> list[CheckResult]:
    ens = cache.get(10_000, 1.0, Sampler.JUMP_CHAIN, 100_000)
    emp = ens.marginal("s")
    top = max(max(emp), 60)
    target = {k: limits.shifted_geometric_pmf(k) for k in range(top + 1)}
    target[top + 1] = 1.0 - math.fsum(target.values())
    tv = stats.tv_distance_discrete(emp, target)
    return [CheckResult("geometric-tv[lam=1]", tv, "0", "< 0.02", tv < 0.02, "final s vs G; n=10000")]


def check_powered_exponential(cache: EnsembleCache) -> list[CheckResult]:
    ens = cache.get(100_000, 0.5, Sampler.JUMP_CHAIN, 2_000)
    x = ens.scaled("s/N^(1-lam)")
    d = stats.ks_one_sample(x, limits.PoweredExponential(0.5).cdf)
    return [CheckResult("powered-exp-ks[lam=0.5]", d, "0", "< 0.08", d < 0.08, "s/sqrt(N) vs 1-exp(-x^2); n=100000")]


def check_critical_mixtures(cache: EnsembleCache) -> list[CheckResult]:
    ens = cache.get(10_000, 1.0, Sampler.JUMP_CHAIN, 100_000)
    n = ens.params.n
    fr = float(np.mean(ens.r / n <= 0.5))
    atom = float(np.mean(ens.r / n > 0.99))
    fi = float(np.mean(ens.i / n <= 0.5))
    return [
        CheckResult("critical-r-cdf[0.5]", fr, "1/3", "0.02", abs(fr - 1 / 3) < 0.02, "r/N; n=10000", exact=1 / 3),
        CheckResult("critical-r-atom", atom, "1/2", "[0.45, 0.55]", 0.45 <= atom <= 0.55, "mass of r/N > 0.99"),
        CheckResult("critical-i-cdf[0.5]", fi, "2/3", "0.02", abs(fi - 2 / 3) < 0.02, "i/N; n=10000", exact=2 / 3),
    ]


def check_compound(cache: EnsembleCache) -> list[CheckResult]:
    lam, n = 2.0, 100_000
    ens = cache.get(n, lam, Sampler.JUMP_CHAIN, 2_000)
    x = ens.r / math.sqrt(n)
    d = stats.ks_one_sample(x, limits.CompoundExponential(lam).cdf)
    m = float(x.mean())
    stated = 1.0 / math.sqrt(math.pi)
    limit_mean = limits.compound_exponential_moment(1.0, lam)
    return [
        CheckResult("compound-ks[lam=2]", d, "0", "< 0.08", d < 0.08, "r/sqrt(N); n=100000"),
        CheckResult("compound-mean[lam=2]", m, "1/sqrt(pi)", "10%", abs(m - stated) <= 0.1 * stated,
                    f"mean r/sqrt(N); limit law mean Gamma(2)Gamma(1/2) = {limit_mean:.6g}", exact=stated),
    ]


def check_moments(cache: EnsembleCache, seed: int, workers: int) -> list[CheckResult]:
    out = []
    ens = cache.get(100_000, 0.5, Sampler.JUMP_CHAIN, 10_000)
    v = ens.mean("s") / math.sqrt(ens.params.n)
    g = math.gamma(1.5)
    out.append(CheckResult("moment-S[lam=0.5]", v, "Gamma(1.5)", "10%", abs(v - g) <= 0.1 * g,
                           "mean s / sqrt(N); n=100000", exact=g))
    ens1 = cache.get(10_000, 1.0, Sampler.JUMP_CHAIN, 10_000)
    v = ens1.mean("r") / ens1.params.n
    ln2 = math.log(2.0)
    out.append(CheckResult("moment-R[lam=1]", v, "ln 2", "5%", abs(v - ln2) <= 0.05 * ln2,
                           "mean r / N; n=10000", exact=ln2))
    params = ProcessParams(100_000, 0.5)
    est = importance_mean(params, 10_000, derive_seed(seed, "importance-i:100000:0.5"), "i", workers=workers)
    out.append(CheckResult("mean-I[lam=0.5]", est.mean, "1", "[0.6, 1.4]", 0.6 <= est.mean <= 1.4,
                           f"importance sampled; stderr={est.stderr:.3g}; "
                           f"plain mean of the 10000-replica ensemble={ens.mean('i'):.4g}", exact=1.0))
    return out


def check_outbreak_slope(cache: EnsembleCache) -> list[CheckResult]:
    lam = 0.7
    ns = (1_000, 10_000, 100_000)
    means = [cache.get(n, lam, Sampler.JUMP_CHAIN, 10_000).mean("i") for n in ns]
    slope = stats.loglog_slope(ns, means)
    target = 2.0 - 1.0 / lam
    return [CheckResult("outbreak-slope[lam=0.7]", slope, f"{target:.6g}", "0.1", abs(slope - target) <= 0.1,
                        "mean final i at n=" + "/".join(f"{m:.4g}" for m in means), exact=target)]


def check_race(seed: int) -> list[CheckResult]:
    lam = 0.75
    ns = (1_000, 10_000, 100_000)
    freqs = []
    for n in ns:
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, f"race:{n}:{lam!r}")))
        freqs.append(float(race_indicators(ProcessParams(n, lam), 100_000, rng).mean()))
    slope = stats.loglog_slope(ns, freqs)
    target = 1.0 - 1.0 / lam
    return [CheckResult("race-slope[lam=0.75]", slope, f"{target:.6g}", "0.1", abs(slope - target) <= 0.1,
                        "frequencies " + "/".join(f"{f:.4g}" for f in freqs), exact=target)]


def check_law_selftests(seed: int, size: int) -> list[CheckResult]:
    out = []
    crit = stats.ks_critical_value(size)
    continuous = [
        limits.PoweredExponential(0.5), limits.PoweredExponential(2.0),
        limits.CriticalRMixture(), limits.CriticalILaw(),
        limits.CompoundExponential(0.5), limits.CompoundExponential(2.0),
    ]
    for law in continuous:
        tag = law.kind + (f"({law.lam:g})" if hasattr(law, "lam") else "")
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, f"law:{tag}")))
        d = stats.ks_one_sample(law.sample(size, rng), law.cdf, law.cdf_left)
        out.append(CheckResult(f"law-ks[{tag}]", d, "0", f"< {crit:.4g}", d < crit, f"n={size}"))
    for law in (limits.ShiftedGeometric(), limits.PositiveGeometric()):
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, f"law:{law.kind}")))
        x = law.sample(size, rng)
        support = np.arange(law.offset, law.offset + 20)
        observed = [int(np.count_nonzero(x == k)) for k in support]
        res = stats.chi_square_gof(observed, [law.pmf(int(k)) for k in support], size)
        out.append(CheckResult(f"law-chi2[{law.kind}]", res.p_value, "p-value", "> 0.01", res.p_value > 0.01,
                               f"statistic={res.statistic:.4g}; dof={res.dof}; n={size}"))
    for lam in (1.5, 2.0, 3.0):
        formula = limits.compound_exponential_moment(1.0, lam)
        numeric = limits.compound_exponential_mean_by_quadrature(lam)
        rel = abs(formula / numeric - 1.0)
        out.append(CheckResult(f"compound-moment-quadrature[lam={_fmt(lam)}]", rel, "0", "< 1e-6", rel < 1e-6,
                               f"moment={formula!r}; integral of survival={numeric!r}"))
    return out


def verify_suite(level: str = "quick", seed: int = 0, workers: int = 1) -> VerifyReport:
    """Run the named checks at the given scale; failures are reported, not raised."""
    if level not in SCALES:
        raise ValueError(f"level must be one of {', '.join(SCALES)}, got {level!r}")
    scale = SCALES[level]
    cache = EnsembleCache(seed, workers)
    plan = [
        ("first-jump", lambda: check_first_jump(cache, scale)),
        ("oracle", lambda: check_oracle(cache, scale)),
        ("cross", lambda: check_cross(cache, scale)),
    ]
    if scale.full:
        plan += [
            ("critical-extinction", lambda: check_critical_extinction(cache)),
            ("geometric", lambda: check_geometric(cache)),
            ("critical-mixtures", lambda: check_critical_mixtures(cache)),
            ("powered-exp", lambda: check_powered_exponential(cache)),
            ("compound", lambda: check_compound(cache)),
            ("moments", lambda: check_moments(cache, seed, workers)),
            ("outbreak-slope", lambda: check_outbreak_slope(cache)),
            ("race", lambda: check_race(seed)),
            ("law-selftests", lambda: check_law_selftests(seed, 100_000)),
        ]
    else:
        plan.append(("law-selftests", lambda: check_law_selftests(seed, 10_000)))
    checks: list[CheckResult] = []
    for name, run in plan:
        try:
            checks.extend(run())
        except Exception as exc:  # a crashing check is a failed check
            checks.append(CheckResult(name, math.nan, "", "", False, f"{type(exc).__name__}: {exc}"))
    return VerifyReport(level, seed, checks)
