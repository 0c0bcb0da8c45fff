"""Light-matter coupling of 2D atomic arrays to a Gaussian mode, in free space and in a cavity."""

__version__ = "0.1.0"

from .analytics import (RateBreakdown, ReferenceEnsembleSpec, cavity_rates, free_space_rates, gamma_diff,
                        gamma_diff_shifted, gamma_zero, overlap_eta, propagating_orders, reference_rates,
                        resonance_spacings)
from .model import (BeamSpec, CavitySpec, ConfigError, DetuningGrid, LatticeSpec, SimulationConfig,
                    atom_positions, load_config, square_config, validate_config)
from .scattering import ArrayResponse, ResonanceSummary, detuning_scan, extract_resonance
from .sweeps import optimal_waist, spacing_sweep, waist_sweep

__all__ = [
    "ArrayResponse", "BeamSpec", "CavitySpec", "ConfigError", "DetuningGrid", "LatticeSpec",
    "RateBreakdown", "ReferenceEnsembleSpec", "ResonanceSummary", "SimulationConfig",
    "atom_positions", "cavity_rates", "detuning_scan", "extract_resonance", "free_space_rates",
    "gamma_diff", "gamma_diff_shifted", "gamma_zero", "load_config", "optimal_waist", "overlap_eta",
    "propagating_orders", "reference_rates", "resonance_spacings", "spacing_sweep",
    "square_config", "validate_config", "waist_sweep",
]
