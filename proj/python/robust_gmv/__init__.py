"""Robust global-minimum-variance portfolios (Python bindings)."""

from ._core import (
    ActionEstimator,
    DataError,
    NumericalError,
    PgdConfig,
    RobustConfig,
    calmar,
    ew_weights,
    effective_rank,
    gmv_long,
    gmv_pgd,
    linear_shrinkage,
    load_price_csv,
    log_returns,
    max_drawdown,
    mv_pgd,
    project_simplex,
    project_sum_one,
    robust_action,
    robust_mean,
    rotate_for_benign_optimum,
    run_cli,
    sample_covariance,
    sample_gaussian,
    sample_gmv,
    sample_heavy_mixture,
    sample_rademacher_subset,
    sd_sr,
    synthetic_market_covariance,
    target_turnover,
    turnover,
)

__all__ = [name for name in dir() if not name.startswith("_")]
