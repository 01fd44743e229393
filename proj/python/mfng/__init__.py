"""Metric-free natural gradient training for Boltzmann machines.

Thin Python wrapper over the C++ core: models, inference, the matrix-free
Fisher-metric operator, MinRes/CG solvers, exact-enumeration oracles, AIS
partition-function estimation and the training loop.
"""

from ._mfng import (  # noqa: F401
    AisConfig,
    AisResult,
    Algorithm,
    ChainPool,
    DbmModel,
    FimForm,
    GenericBm,
    InferenceConfig,
    MetricOperator,
    SampleMatrix,
    SolveResult,
    SolverConfig,
    Termination,
    TrainConfig,
    ais_log_z,
    bars_stripes_dataset,
    bars_stripes_patterns,
    base_rate_biases,
    binarize,
    build_sample_matrix,
    exact_fim,
    exact_fim_generic,
    exact_log_z,
    exact_log_z_generic,
    exact_loglik,
    exact_natural_gradient,
    gibbs_sweep,
    linear_betas,
    load_checkpoint,
    mean_field_posterior,
    mfng_diag_iteration,
    mfng_iteration,
    minres_dense,
    random_bernoulli_dataset,
    run_experiment,
    sample_negative,
    save_checkpoint,
    sml_iteration,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
