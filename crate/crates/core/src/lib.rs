//! Information-theoretic and thermodynamic quantities of discrete memoryless
//! channels: capacity (Blahut–Arimoto and the closed-form inverse solution),
//! its gradient, multiplicative-reversibilization mixing times, effective
//! thermodynamic states and parameter-space landscapes.

pub mod capacity;
pub mod channel;
pub mod error;
pub mod io;
pub mod landscape;
pub mod linalg;
pub mod mixing;
pub mod thermo;
pub mod verify;

pub use capacity::{
    blahut_arimoto, capacity, capacity_gradient, fd_capacity_gradient, good_channel, muroga_capacity, CapacityGradient,
    CapacityMethod, CapacityResult, MethodChoice,
};
pub use channel::{ChannelMatrix, Distribution, InfoMeasures, Role};
pub use error::{Error, Result};
pub use mixing::{invariant_distribution, reversibilization, spectral_gap, MixingResult};
pub use thermo::{dmc_thermo, effective_state, factoring_work, inverse_state, DmcThermo, ThermoState};
