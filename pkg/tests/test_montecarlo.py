import math

import numpy as np
import pytest

from chase_escape.montecarlo import (
    SCALED_SAMPLE_CAP,
    EnsembleCache,
    EnsembleConfig,
    Sampler,
    default_workers,
    derive_seed,
    importance_mean,
    replica_stream,
    run_replicas,
    sweep,
    sweep_slope,
    verify_suite,
)
from chase_escape.process import ProcessParams, exact_absorption_law, exact_extinction_probability
from chase_escape.stats import ks_two_sample


def same_summary(a, b):
    return all(np.array_equal(getattr(a, f), getattr(b, f), equal_nan=True)
               for f in ("s", "i", "r", "jumps", "time", "tie_counts"))


class TestStreams:
    def test_pure_function_of_seed_and_index(self):
        a = replica_stream(5, 17).random(4)
        b = replica_stream(5, 17).random(4)
        c = replica_stream(5, 18).random(4)
        d = replica_stream(6, 17).random(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c) and not np.array_equal(a, d)

    def test_rejects_negative_index(self):
        with pytest.raises(ValueError):
            replica_stream(0, -1)

    def test_derive_seed(self):
        assert derive_seed(1, "x") == derive_seed(1, "x")
        assert derive_seed(1, "x") != derive_seed(1, "y")
        assert 0 <= derive_seed(2**64 - 1, "z") < 2**64

    def test_env_workers(self, monkeypatch):
        monkeypatch.delenv("CHASE_ESCAPE_THREADS", raising=False)
        assert default_workers() == 1
        monkeypatch.setenv("CHASE_ESCAPE_THREADS", "3")
        assert default_workers() == 3
        monkeypatch.setenv("CHASE_ESCAPE_THREADS", "zero")
        with pytest.raises(ValueError):
            default_workers()


class TestConfig:
    @pytest.mark.parametrize("kw", [{"replicas": 0}, {"workers": 0}, {"master_seed": -1}, {"sampler": "gillespie"}])
    def test_rejects(self, kw):
        base = {"params": ProcessParams(3, 1.0), "replicas": 5}
        with pytest.raises(ValueError):
            EnsembleConfig(**{**base, **kw})


class TestRunReplicas:
    @pytest.mark.parametrize("sampler", list(Sampler))
    def test_scheduling_independent(self, sampler):
        p = ProcessParams(30, 0.9)
        base = run_replicas(EnsembleConfig(p, 203, sampler, 42, 1))
        for w in (4, 16):
            other = run_replicas(EnsembleConfig(p, 203, sampler, 42, w))
            assert same_summary(base, other)
            assert base.to_dict() == other.to_dict()

    def test_head_is_smaller_ensemble(self):
        p = ProcessParams(12, 1.1)
        big = run_replicas(EnsembleConfig(p, 500, Sampler.POISSON_EMBEDDING, 9))
        small = run_replicas(EnsembleConfig(p, 120, Sampler.POISSON_EMBEDDING, 9))
        assert same_summary(big.head(120), small)

    def test_counts_and_invariants(self):
        p = ProcessParams(25, 1.0)
        ens = run_replicas(EnsembleConfig(p, 2000, Sampler.DIRECT_CLOCKS, 3))
        counts = ens.cause_counts()
        assert sum(counts.values()) == 2000
        assert np.all(ens.s + ens.i + ens.r == 27)
        assert sum(ens.marginal("r").values()) == pytest.approx(1.0)
        assert np.all(np.isfinite(ens.time))
        jump = run_replicas(EnsembleConfig(p, 10, Sampler.JUMP_CHAIN, 3))
        assert np.all(np.isnan(jump.time))

    def test_n1_extinction(self):
        ens = run_replicas(EnsembleConfig(ProcessParams(1, 1.0), 100_000, Sampler.JUMP_CHAIN, 0))
        assert abs(ens.extinction_frequency - 0.5) < 0.005

    @pytest.mark.parametrize("n,lam", [(5, 0.7), (20, 1.0), (13, 2.2)])
    def test_extinction_bracket(self, n, lam):
        exact = exact_extinction_probability(ProcessParams(n, lam))
        for sampler in Sampler:
            ens = run_replicas(EnsembleConfig(ProcessParams(n, lam), 20_000, sampler, 11))
            se = math.sqrt(exact * (1 - exact) / ens.replicas)
            assert abs(ens.extinction_frequency - exact) <= 4 * se

    def test_first_jump_frequency(self):
        n, lam = 50, 1.7
        ens = run_replicas(EnsembleConfig(ProcessParams(n, lam), 50_000, Sampler.JUMP_CHAIN, 5))
        p = 1 / (lam * n + 1)
        assert abs(ens.frequency((n, 0, 2)) - p) <= 4 * math.sqrt(p * (1 - p) / ens.replicas)

    def test_pairwise_samplers(self, ks_crit):
        p = ProcessParams(60, 0.8)
        rs = [run_replicas(EnsembleConfig(p, 10_000, s, 21)).r for s in Sampler]
        for a in range(3):
            for b in range(a + 1, 3):
                assert ks_two_sample(rs[a], rs[b]) < ks_crit(10_000, 10_000)

    def test_scaled_quantities(self, monkeypatch):
        sub = run_replicas(EnsembleConfig(ProcessParams(100, 0.5), 50, Sampler.JUMP_CHAIN, 1))
        assert sub.scaled_names() == ["s/N^(1-lam)", "(N-r)/N^(1-lam)"]
        np.testing.assert_allclose(sub.scaled("s/N^(1-lam)"), sub.s / 10.0)
        crit = run_replicas(EnsembleConfig(ProcessParams(100, 1.0), 50, Sampler.JUMP_CHAIN, 1))
        assert crit.scaled_names() == ["s", "r/N", "i/N"]
        sup = run_replicas(EnsembleConfig(ProcessParams(100, 4.0), 50, Sampler.JUMP_CHAIN, 1))
        np.testing.assert_allclose(sup.scaled("r/N^(1/lam)"), sup.r / 100**0.25)
        with pytest.raises(KeyError):
            sup.scaled("bogus")
        # the reservoir cap keeps a deterministic uniform subsample
        import chase_escape.montecarlo as mc

        monkeypatch.setattr(mc, "SCALED_SAMPLE_CAP", 20)
        a, b = sup.scaled("r/N^(1/lam)"), sup.scaled("r/N^(1/lam)")
        assert a.size == 20 and np.array_equal(a, b)
        assert SCALED_SAMPLE_CAP == 10**6

    def test_to_dict(self):
        d = run_replicas(EnsembleConfig(ProcessParams(4, 1.0), 30, Sampler.JUMP_CHAIN, 2)).to_dict()
        assert d["replicas"] == 30 and sum(d["causes"].values()) == 30
        assert d["ci95_final_r"][0] <= d["mean_final_r"] <= d["ci95_final_r"][1]


class TestImportance:
    @pytest.mark.parametrize("n,lam", [(2000, 0.5), (3000, 0.7)])
    def test_unbiased_against_exact(self, n, lam):
        law = exact_absorption_law(ProcessParams(n, lam))
        exact = law.mean("i")
        est = importance_mean(ProcessParams(n, lam), 4000, 17)
        assert abs(est.mean - exact) <= 4 * est.stderr
        # and it beats plain averaging (about 2x in spread across seeds at these sizes)
        second = math.fsum(st.i**2 * q for st, q in law.support)
        plain_se = math.sqrt(second - exact**2) / math.sqrt(4000)
        assert est.stderr < plain_se / 2

    def test_other_fields(self):
        p = ProcessParams(500, 0.6)
        law = exact_absorption_law(p)
        for name in ("s", "r"):
            est = importance_mean(p, 3000, 4, name)
            assert abs(est.mean - law.mean(name)) <= 4 * est.stderr

    def test_no_tilt_above_one(self):
        est = importance_mean(ProcessParams(50, 1.5), 3000, 2)
        assert est.tilt_rate == 1.0
        assert est.mean == pytest.approx(est.plain_mean)

    def test_deterministic_across_workers(self):
        p = ProcessParams(300, 0.5)
        a = importance_mean(p, 101, 8, workers=1)
        b = importance_mean(p, 101, 8, workers=3)
        assert a == b

    def test_rejects(self):
        with pytest.raises(ValueError):
            importance_mean(ProcessParams(10, 0.5), 10, 0, "q")
        with pytest.raises(ValueError):
            importance_mean(ProcessParams(10, 0.5), 10, 0, tilt_rate=0.0)


class TestSweep:
    def test_single_point_reproduces_run_replicas(self):
        template = EnsembleConfig(ProcessParams(1, 1.0), 400, Sampler.JUMP_CHAIN, 13)
        (row,) = sweep([(0.8, 40)], template)
        ens = run_replicas(EnsembleConfig(ProcessParams(40, 0.8), 400, Sampler.JUMP_CHAIN, 13))
        assert row["mean_final_i"] == ens.mean("i")
        assert row["extinction_frequency"] == ens.extinction_frequency

    def test_asymptote_columns(self):
        template = EnsembleConfig(ProcessParams(1, 1.0), 20, Sampler.JUMP_CHAIN, 1)
        rows = sweep([(1.0, 10_000), (0.5, 100), (2.0, 100)], template)
        assert rows[0]["asymptote_E_R"] == pytest.approx(math.log(2) * 10_000)
        assert rows[1]["asymptote_E_I"] == 1.0
        assert rows[2]["asymptote_E_R"] == pytest.approx(math.sqrt(math.pi * 100))

    def test_errors_recorded(self):
        template = EnsembleConfig(ProcessParams(1, 1.0), 10, Sampler.JUMP_CHAIN, 1)
        rows = sweep([(1.0, 10), (-1.0, 10)], template)
        assert rows[0]["error"] == "" and rows[1]["error"]
        assert math.isnan(rows[1]["mean_final_s"])
        with pytest.raises(ValueError):
            sweep([], template)

    def test_slope(self):
        rows = [{"n": n, "m": 2.0 * n**0.5, "error": ""} for n in (10, 100, 1000)]
        rows.append({"n": 5, "m": math.nan, "error": "boom"})
        assert sweep_slope(rows, "m") == pytest.approx(0.5)


class TestCache:
    def test_serves_prefix(self):
        cache = EnsembleCache(3, 1)
        big = cache.get(10, 1.0, Sampler.JUMP_CHAIN, 300)
        small = cache.get(10, 1.0, Sampler.JUMP_CHAIN, 100)
        assert same_summary(big.head(100), small)


def test_quick_suite_passes_and_is_deterministic():
    a = verify_suite("quick", seed=7, workers=1)
    assert a.failures == 0, [c for c in a.checks if not c.passed]
    names = [c.name for c in a.checks]
    assert any(n.startswith("eq-t1") for n in names)
    t1 = next(c for c in a.checks if c.name.startswith("eq-t1"))
    assert t1.exact == pytest.approx(1 / (1.7 * 50 + 1))
    b = verify_suite("quick", seed=7, workers=3)
    assert a.to_dict() == b.to_dict()


def test_suite_rejects_level():
    with pytest.raises(ValueError):
        verify_suite("medium")
