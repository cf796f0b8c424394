//! Simulation and analytic key-rate calculation for measurement-device-independent
//! QKD that encodes one key bit in each of several degrees of freedom (DOFs) of
//! a single photon.
//!
//! Alice and Bob each prepare a photon whose DOFs (polarization and two
//! longitudinal momenta by default) carry independent BB84-style qubits. Charlie
//! performs a complete hyper-Bell-state analysis and announces the outcome; Bob's
//! per-DOF post-selection flips turn matching-basis DOFs into shared key bits.
//!
//! Modules, bottom-up:
//! * [`state`]: state vectors, Bell and hyper-Bell bases;
//! * [`encoding`]: basis/bit choices and (imperfect) preparation;
//! * [`channel`]: rotation misalignment and attenuation;
//! * [`hbsa`]: outcome distributions and sampling;
//! * [`sifting`]: post-selection rule and QBER estimates;
//! * [`rates`]: closed-form QBER and key rates;
//! * [`protocol`]: seeded, partitionable Monte Carlo runs.

pub mod channel;
pub mod encoding;
pub mod error;
pub mod hbsa;
pub mod protocol;
pub mod rates;
pub mod sifting;
pub mod state;

pub use num_complex::Complex64;

pub use channel::{ChannelParams, RotationConvention};
pub use encoding::{DofChoice, EncodingChoice, SourceFidelity, SourceModel};
pub use error::{QkdError, Result};
pub use hbsa::OutcomeDistribution;
pub use protocol::{ProtocolStats, RunConfig};
pub use rates::{DofNoise, KeyRate, MisalignmentCoeffs, RateParams, RateReport};
pub use sifting::{Correction, QberEstimate, RoundRecord, SiftedBitPair};
pub use state::{BasisKind, BellIndex, DofLabel, HyperBellOutcome, JointState, SinglePhotonState};
