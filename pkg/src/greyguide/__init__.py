"""Grey-model guidance extraction and gated feature-fusion hazard classification."""

from .grey import (
    FSGMParams,
    GreyGuidance,
    TimeResponse,
    fit_fsgm,
    fit_gm11,
    grey_guidance,
    reconstruct,
)
from .hts import (
    HTS,
    CumulativeSeries,
    HazardRecord,
    PeriodEstimate,
    accumulate,
    concat_guidance,
    estimate_period,
    load_records,
    squeeze,
)
from .metrics import Metrics, compute_metrics
from .model import HffnnConfig, train
from .pipeline import RunReport, SplitSpec, evaluate, run_variant, split_dataset, sweep_order

__version__ = "0.1.0"

__all__ = [
    "HTS",
    "CumulativeSeries",
    "FSGMParams",
    "GreyGuidance",
    "HazardRecord",
    "HffnnConfig",
    "Metrics",
    "PeriodEstimate",
    "RunReport",
    "SplitSpec",
    "TimeResponse",
    "accumulate",
    "compute_metrics",
    "concat_guidance",
    "estimate_period",
    "evaluate",
    "fit_fsgm",
    "fit_gm11",
    "grey_guidance",
    "load_records",
    "reconstruct",
    "run_variant",
    "split_dataset",
    "squeeze",
    "sweep_order",
    "train",
]
