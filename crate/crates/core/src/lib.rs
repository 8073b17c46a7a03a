//! Joint flavor-tag probabilities for entangled neutral meson pairs (K0 K0bar
//! and B0 B0bar) in quantum mechanics and in a local-realistic model, plus
//! tools showing that hidden-state-dependent detection efficiencies let the
//! local model mimic the quantum prediction.

pub mod bell;
pub mod cli;
pub mod constants;
pub mod error;
pub mod fit;
pub mod lrm;
pub mod mc;
pub mod qm;
pub mod quadrature;

pub use constants::{species_params, OscillationParams, Species};
pub use error::{Error, Result};
pub use lrm::{EfficiencyWeights, InitialPair, Preset, RhoProfile};
pub use qm::{FlavorOutcome, TimePair};
