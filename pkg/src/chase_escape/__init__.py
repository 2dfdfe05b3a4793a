"""Exact samplers, oracles and limit laws for chase-escape on complete graphs."""

from .coupling import (
    ClockPaths,
    EmbeddingDraw,
    Method,
    absorb_from_clocks,
    clocks_from_embedding,
    race_indicators,
    run_coupled,
    sample_clock_paths,
    sample_poisson_embedding,
    sigma_rho_race,
)
from .montecarlo import (
    EnsembleConfig,
    EnsembleSummary,
    Sampler,
    importance_mean,
    replica_stream,
    run_replicas,
    sweep,
    verify_suite,
)
from .process import (
    AbsorptionRecord,
    Cause,
    ExactLaw,
    ProcessParams,
    StateCounts,
    exact_absorption_law,
    exact_extinction_probability,
    jump_probabilities,
    run_jump_chain,
    step,
)

__version__ = "0.1.0"
