"""Coupled-resonator bandpass filter design, SIR layout and receiver noise budgeting."""
from .errors import DomainError, LayoutError, ParseError, RangeError, SirkitError, SolverError
from .filter_design import (
    FilterPlan,
    PrototypeTable,
    band_plan,
    chebyshev_prototype,
    coupling_plan,
    frequency_response,
    midband_il_estimate,
)
from .microstrip import SubstrateSpec, analyze_line, synthesize_width, unloaded_q
from .network import BandSpec, FrequencyGrid, PassbandMetrics, TwoPortSweep, passband_metrics
from .noise_radar import CascadeStage, RadarParams, cascade_nf, cascade_nf_sweep, radar_max_range, range_improvement
from .sir import FoldSpec, SirGeometry, design_sir, fold_layout, resonance_spectrum, spurious_ratio
from .touchstone import TouchstoneOptions, compare, parse_touchstone, write_touchstone
from .tuning import CouplingModel, TuneResult, TuneSpec, calibrate_coupling, tune

__version__ = "0.1.0"
