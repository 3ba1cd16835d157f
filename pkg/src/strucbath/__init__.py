"""Qubit decoherence in a structured bath.

Two viewpoints of the same model: a spin-boson problem with a Lorentzian
spectral density, or a qubit coupled to a damped harmonic oscillator.  The
package solves the dynamics analytically (transformed rotating-wave solver)
and numerically exactly (quasi-adiabatic path-integral tensor propagation in
both viewpoints) and cross-validates the two routes.
"""

from .errors import (ConfigError, NumericsError, ResourceLimitError,
                     TruncationError)
from .harness import (ComparisonReport, RunRecord, ScanReport, Scenario,
                      compare, compare_engines, emit, fit_decay_rate,
                      kernel_decay_times, load_config, preset, read_csv, run,
                      scan_convergence, tabulate_kernel)
from .models import (SystemModel, TruncationReport, build_qubit_ho_model,
                     build_qubit_model, observable_series)
from .quapi import (AugmentedState, ConvergenceReport, InfluenceTable,
                    PropagationResult, bare_propagator, build_influence_table,
                    convergence_report, influence_factor, propagate)
from .spectral import (ResponseKernel, SpectralDensity, ViewMapping,
                       counterterm_mu, evaluate_j, j_integral, lorentzian,
                       map_alpha_to_g0, map_g0_to_alpha, ohmic,
                       quapi_density_from_physical, response_kernel)
from .trwa import TrwaSolution, peak_damping_estimate, solve_eta, solve_trwa

__version__ = "0.1.0"

__all__ = [
    "AugmentedState", "ComparisonReport", "ConfigError", "ConvergenceReport",
    "InfluenceTable", "NumericsError", "PropagationResult", "ResponseKernel",
    "ResourceLimitError", "RunRecord", "ScanReport", "Scenario",
    "SpectralDensity", "SystemModel", "TrwaSolution", "TruncationError",
    "TruncationReport", "ViewMapping", "bare_propagator",
    "build_influence_table", "build_qubit_ho_model", "build_qubit_model",
    "compare", "compare_engines", "convergence_report", "counterterm_mu",
    "emit", "evaluate_j", "fit_decay_rate", "influence_factor", "j_integral",
    "kernel_decay_times", "load_config", "lorentzian", "map_alpha_to_g0",
    "map_g0_to_alpha", "observable_series", "ohmic", "peak_damping_estimate",
    "preset", "propagate", "quapi_density_from_physical", "read_csv",
    "response_kernel", "run", "scan_convergence", "solve_eta", "solve_trwa",
    "tabulate_kernel",
]
