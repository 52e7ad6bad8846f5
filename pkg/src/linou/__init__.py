"""Linear OU stochastic-volatility model: characteristic function, cumulants,
Fourier pricing, Monte Carlo cross-checks and two-step calibration."""

from .calibration import (
    CalibrationResult, MarketQuote, backus_iv, calibrate, d1, fit_smile_stats, global_objective,
)
from .charfn import abc, cf, cf_values, martingale_integral, pole_ordinates, strip_bounds
from .cumulants import (
    CumulantSet, SmileStats, analytic_cumulants, model_smile_stats, small_tau_asymptotics,
)
from .dataio import MarketDataset, bundled_dataset, bundled_stats, load_market_csv
from .montecarlo import (
    McEnsemble, McEstimate, SimConfig, mc_call_price, mc_smile_stats, simulate, simulate_many,
)
from .params import ModelKind, ModelParams, ObjectiveParams, linearize, validate
from .pipeline import PipelineConfig, RunManifest, run_pipeline
from .pricer import black_scholes, contour_offset, implied_vol, lewis_call, pdf_from_cf, smile_curve

__all__ = [
    "CalibrationResult", "CumulantSet", "MarketDataset", "MarketQuote", "McEnsemble",
    "McEstimate", "ModelKind", "ModelParams", "ObjectiveParams", "PipelineConfig",
    "RunManifest", "SimConfig", "SmileStats", "abc", "analytic_cumulants", "backus_iv",
    "black_scholes", "bundled_dataset", "bundled_stats", "calibrate", "cf", "cf_values",
    "contour_offset", "d1", "fit_smile_stats", "global_objective", "implied_vol",
    "lewis_call", "linearize", "load_market_csv", "martingale_integral", "mc_call_price",
    "mc_smile_stats", "model_smile_stats", "pdf_from_cf", "pole_ordinates", "run_pipeline",
    "simulate", "simulate_many", "small_tau_asymptotics", "smile_curve", "strip_bounds",
    "validate",
]
