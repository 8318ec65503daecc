//! Qubit dynamics in a Lorentzian bosonic bath beyond the rotating-wave
//! approximation, the linear-optical circuit that realizes the resulting
//! channel, and temporal-steering diagnostics.

pub mod channel;
pub mod heom;
pub mod linalg;
pub mod ode;
pub mod optics;
pub mod state;
pub mod steering;
pub mod tomography;

pub use linalg::{C64, Mat2};
pub use state::DensityMatrix;
