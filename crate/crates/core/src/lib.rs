//! Exact correlation dynamics of two-qubit Bell-diagonal states under
//! local dephasing channels.
//!
//! The crate computes quantum mutual information, classical correlations,
//! entropic quantum discord and relative entropy of entanglement along the
//! time evolution generated by three dephasing families (Markovian,
//! random-telegraph colored noise, Ohmic-class spectral densities with
//! optional dynamical-decoupling pulse control), and detects the dynamical
//! phenomena they produce: sudden changes, frozen discord, entanglement
//! sudden death and time-invariant discord.

pub mod channels;
pub mod correlations;
pub mod dephasing;
pub mod error;
pub mod phenomena;
pub mod qops;

pub use channels::{
    apply_kraus_general, decohered_mutual_information_shortcut, Channel, MarkovDephasing,
    NoiseSide, RtnDephasing, SpectralDephasing,
};
pub use correlations::{
    bell_diagonal_correlations, closest_classical_state, discord_bruteforce,
    relative_entropy_entanglement, BellDiagonalState, BellLabel, ClosestClassical,
    ClosestClassicalState, CorrelationTriple, MeasurementGrid,
};
pub use dephasing::{
    big_gamma, big_gamma_quadrature, controlled_gamma, controlled_gamma_quadrature,
    controlled_gamma_rate, gamma0, markovianity_criterion, DephasingProfile, Markovianity,
    OhmicSpectrum, PulseSequence, TemperatureRegime,
};
pub use error::{Error, Result};
pub use phenomena::{
    detect_transitions, frozen_discord_value, scan_time_invariant_region, simulate_trajectory,
    sudden_death_time, transition_time_spectral, CellFlag, Classification, CorrelationTrajectory,
    RegionScan, Scenario, SpectralTransition, TimeGrid, TransitionReport,
};
pub use qops::{
    measurement_update, relative_entropy, DensityMatrix2, DensityMatrix4, MeasurementBasis,
    Outcome, Subsystem,
};
