pub mod aniso_flow;
pub mod asymptotics;
pub mod error;
pub mod interp;
pub mod ode;
pub mod poly;
pub mod radial_flow;
pub mod soliton_atlas;
pub mod spectral_ou;
pub mod symmetry;

pub use error::{Error, Result};
pub use symmetry::SymmetryClass;
