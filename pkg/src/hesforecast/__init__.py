"""Intermittent-demand forecasting with hyperbolic-exponential smoothing."""

from .forecasters import (
    CrostonState,
    ForecasterBank,
    HesState,
    Method,
    SesState,
    SmoothingParams,
    TsbState,
    forecast,
    init_state,
    step,
    update,
)
from .generators import Constant, Geometric, LinearDecreasing, Logarithmic, Scenario, Stationary, Sudden
from .metrics import MetricAccumulator, PairAccumulator, mase_scale
from .experiment import ExperimentSpec, ResultTable, compare_tables, head_to_head, run_grid, run_single

__version__ = "0.1.0"
