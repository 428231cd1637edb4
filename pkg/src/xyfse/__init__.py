"""Renyi entropies of the XY chain and the scaling of their finite-size effects."""

from .cft import CftParams, CoefficientMode, calibrate_s0, cft_multi_interval, cft_single_interval, jk_delta
from .corr_matrix import CorrMatrix, build
from .entropy import NuSpectrum, edge_localization, nu_spectrum, renyi_entropy, renyi_from_pairs
from .errors import XyFseError
from .fse import (
    EntropyEngine,
    FseRecord,
    Kind,
    ScalingFit,
    delta_extrinsic,
    delta_intrinsic,
    delta_single,
    dilation_sweep,
    fit_eta,
    scaling_bound_check,
)
from .intervals import IntervalSet, Pattern, PatternFamily, constituents, dilate, parse_pattern
from .xy_model import Correlator, Phase, PhasePoint, correlator_g, decay_length, integrate_g

__version__ = "0.1.0"
