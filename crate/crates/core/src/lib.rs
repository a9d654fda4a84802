//! Pseudo-spectral simulation and diagnostics for the incompressible
//! magneto-micropolar equations on the periodic box `[0, 2π)³`.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod diophantine;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod norms;
pub mod selftest;
pub mod spectral;
pub mod state;

pub use dynamics::{EnergyAudit, Model, RhsDecomposition, Tendency};
pub use error::{Error, Result};
pub use integrator::{RunReport, RunStatus, StepperConfig};
pub use norms::{DecayFit, DecayModel, DiagnosticsRecord, DiagnosticsSettings};
pub use spectral::{GridSpec, SpectralScalarField, SpectralVectorField};
pub use state::{InitSpec, PhysParams, State, SystemVariant};
