"""Bounds, density evolution and simulation for LDPC ensembles on MBIOS channels."""

from .bounds import (
    bec_de,
    bec_threshold,
    bhattacharyya_threshold,
    ms_upper_bound,
    sp_lower_bound,
    weight_enumerator,
)
from .channels import ChannelModel, bhattacharyya, llr_density, parse_channel, uncoded_error_prob
from .density import QuantizationParams, QuantizedDensity, check_update, run_de, variable_update
from .ensembles import DegreePolynomial, Ensemble, design_rate, load_ensemble
from .simulator import SimulationConfig, build_graph, monte_carlo, ms_decode, sp_decode

__version__ = "0.1.0"
