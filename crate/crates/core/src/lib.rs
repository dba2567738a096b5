//! Norm inflation for the 3D Boussinesq system in negative Besov spaces:
//! exact trigonometric algebra, lacunary initial data, first Picard iterates,
//! a pseudo-spectral reference solver and quantitative checks tying them together.

pub mod error;
pub mod lacunary;
pub mod picard;
pub mod spectral_sim;
pub mod trig_field;
pub mod verify;

pub use error::{Error, Result};
pub use lacunary::{InitialData, LacunaryParams, WaveTriple};
pub use trig_field::{Arity, BesovEstimate, Frequency, LinfNorm, Mode, TGridSpec, TrigField, Vec3};
pub use verify::{BoundReport, SweepResult};
