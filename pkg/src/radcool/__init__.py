"""Radiation-pressure cooling of a mechanical oscillator as a quantum dynamical process.

The linearized cavity-mechanics system is propagated through time-ordered
transition matrices; phonon and photon numbers are split into system, noise
and coherent parts, and the stabilized values are compared with closed-form
limits.
"""

from .analytics import (
    classical_sidebands,
    jump_ratio,
    limit_branch,
    limit_phonon,
    mode_splitting,
    prior_strong_prediction,
    prior_weak_prediction,
)
from .gaussian import GaussianState, purity, thermal_occupation, to_gaussian, wigner
from .model import (
    DimensionlessParams,
    InvalidParameterError,
    SystemParams,
    coherent_drive,
    dimensionless,
    drive_kernel,
    dynamical_matrix,
    noise_moments,
    solve_for_J,
)
from .observables import Regime, detect_stabilization, phonon_decomposition, photon_decomposition
from .propagator import (
    Scheme,
    evolve_mean,
    evolve_second_moments,
    evolve_transition,
    history_noise_oracle,
    simulate,
    step_matrix,
    transition_between,
)
from .spectrum import noise_spectrum, two_time_correlation
from .sweep import RunSettings, SweepSpec, find_optimum_J, run_scenario, sweep

__version__ = "0.1.0"
