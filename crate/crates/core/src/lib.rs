//! Simulation and analysis of a data-hiding scheme built on a double-pass
//! down-conversion source.
//!
//! The crate is layered bottom-up:
//!
//! - [`fock`]: sparse multimode Fock states, mode maps, density matrices;
//! - [`algebra`]: exact polynomial algebra of creation operators over
//!   rationals extended by sqrt(2), used as an independent oracle;
//! - [`states`]: the source model, the ten two-photon basis states, and
//!   the four-photon decomposition identity;
//! - [`gba`]: the generalized Bell analyzer circuit, its three-way
//!   classification, and exact outcome distributions;
//! - [`protocol`]: heralding, bit encoding into class-count parity,
//!   share distribution, decoding, and seeded Monte Carlo sessions;
//! - [`analysis`]: exact small ensembles, trace distance, information
//!   bounds, and local discrimination strategies.

pub mod algebra;
pub mod analysis;
pub mod fock;
pub mod gba;
pub mod protocol;
pub mod states;

pub use analysis::{
    binary_entropy, bound_curve, entropy, hiding_density_matrix, local_count_strategy,
    locc_distinguish_omega, mutual_information, overhead_factor, pair_ensemble, security_bound,
    trace_distance, AnalysisError, OmegaSign, StrategyResult,
};
pub use fock::{
    DensityMatrix, FockError, FockState, Mode, ModeMap, OccupationVector, Polarization,
};
pub use gba::{
    calibrate, classify, measure, outcome_distribution, ClickPattern, DetectorId, GbaCircuit,
    GbaClass, GbaError, GbaOutcome,
};
pub use protocol::{
    decode, distribute, encode, run_sessions, trial_rng, AggregateStats, EncodeStats,
    HidingInstance, PairRecord, PairSource, ProtocolError, SessionConfig, SessionReport, Share,
};
pub use states::{
    bell, label_probabilities, sector_probabilities, spdc_double_pass, theta,
    verify_decomposition, BellKind, SourceParams, StateSet, StatesError,
};
