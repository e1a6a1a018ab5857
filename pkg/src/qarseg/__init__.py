"""Piecewise quantile autoregression segmentation of nonstationary time series."""

from .core import (
    MdlScore,
    SegmentFit,
    Segmentation,
    TimeSeries,
    min_segment_length,
    relative_locations,
)
from .ga import Chromosome, GaConfig, GaResult, decode, encode, run
from .mdl import QuantileSpec, mdl_multi, mdl_single, optimal_weights
from .qr_solver import check_loss, fit_qar
from .simgen import (
    PRESET_NAMES,
    QarSpec,
    sample_asymmetric_laplace,
    simulate_preset,
    simulate_qar,
)

__all__ = [
    "TimeSeries",
    "Segmentation",
    "SegmentFit",
    "MdlScore",
    "min_segment_length",
    "relative_locations",
    "check_loss",
    "fit_qar",
    "QuantileSpec",
    "mdl_single",
    "mdl_multi",
    "optimal_weights",
    "Chromosome",
    "GaConfig",
    "GaResult",
    "decode",
    "encode",
    "run",
    "QarSpec",
    "PRESET_NAMES",
    "simulate_qar",
    "simulate_preset",
    "sample_asymmetric_laplace",
]

__version__ = "0.1.0"
