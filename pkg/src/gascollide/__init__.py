"""Collisional master equation for a multilevel system in a dilute gas
with internal structure: Lindblad channel assembly from on-shell
scattering amplitudes, classical transition rates, time evolution, and
thermodynamic consistency diagnostics."""

from .errors import ChannelClosedError, ConfigError, NumericFailure
from .qmath import (DensityMatrix, LevelSystem, Operator, SpinQuantum, dissipator, eigh,
                    gibbs_state, spin_operators, trace_distance, von_neumann_entropy)
from .gas import (DerivedScales, GasEnvironment, InteractionSpec, ancilla_populations,
                  derived_scales, maxwell_boltzmann, spin_exchange_coupling)
from .scattering import (AmplitudeModel, Channel, MicroReversibilityReport,
                         born_gaussian_amplitude, check_microreversibility,
                         effective_hamiltonian, enumerate_channels, lindblad_channel_operator,
                         outgoing_momentum)
from .rates import (DetailedBalanceReport, QuadratureSpec, RateMatrix, SpinRates,
                    check_local_detailed_balance, effective_temperature, integral_I,
                    negative_temperature_condition, rate_matrix, spin_rates)
from .dynamics import (PopulationVector, Trajectory, collision_action, evolve_lindblad,
                       evolve_populations, steady_state)
from .thermo import (ClausiusReport, ThermoSample, entropy_production_check,
                     entropy_rate_finite_difference, ergotropy_diagonal, ergotropy_general,
                     heat_power, thermo_samples)
from .config import (ScenarioConfig, SpinScenario, build_scenario, initial_density_matrix,
                     load_config, parse_grid, smoothed_ground)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeModel", "Channel", "ChannelClosedError", "ClausiusReport", "ConfigError",
    "DensityMatrix", "DerivedScales", "DetailedBalanceReport", "GasEnvironment",
    "InteractionSpec", "LevelSystem", "MicroReversibilityReport", "NumericFailure",
    "Operator", "PopulationVector", "QuadratureSpec", "RateMatrix", "ScenarioConfig",
    "SpinQuantum", "SpinRates", "SpinScenario", "ThermoSample", "Trajectory",
    "ancilla_populations", "born_gaussian_amplitude", "build_scenario",
    "check_local_detailed_balance", "check_microreversibility", "collision_action",
    "derived_scales", "dissipator", "effective_hamiltonian", "effective_temperature",
    "eigh", "enumerate_channels", "entropy_production_check",
    "entropy_rate_finite_difference", "ergotropy_diagonal", "ergotropy_general",
    "evolve_lindblad", "evolve_populations", "gibbs_state", "heat_power",
    "initial_density_matrix", "integral_I", "lindblad_channel_operator", "load_config",
    "maxwell_boltzmann", "negative_temperature_condition", "outgoing_momentum",
    "parse_grid", "rate_matrix", "smoothed_ground", "spin_exchange_coupling",
    "spin_operators", "spin_rates", "steady_state", "thermo_samples", "trace_distance",
    "von_neumann_entropy",
]
