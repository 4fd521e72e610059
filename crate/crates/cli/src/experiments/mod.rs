//! Built-in experiments, one per tag.

mod aniso;
mod radial;
mod solitons;

pub use aniso::{width_run, RatioSolve, WidthRatio, WidthRun, DENSITY_SLACK};
pub use radial::{spectral_identities, study_checks, study_metrics, RadialAsymptotics, SpectralTrace};
pub use solitons::{bowl_as_zoom, FoliationCheck, SolitonAtlas};

use ovals_core::SymmetryClass;

use crate::config::{Kind, Param, Point};
use crate::error::CliError;
use crate::registry::Experiment;

pub(crate) const SYMMETRY_PARAMS: [Param; 2] = [
    Param::new("n", Kind::Count, "3", "hypersurface dimension"),
    Param::new("k", Kind::Count, "2", "number of long axes"),
];

pub(crate) fn symmetry(p: &Point) -> Result<SymmetryClass, CliError> {
    SymmetryClass::new(p.usize("n"), p.usize("k")).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn all() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(RadialAsymptotics),
        Box::new(SpectralTrace),
        Box::new(SolitonAtlas),
        Box::new(FoliationCheck),
        Box::new(WidthRatio),
        Box::new(RatioSolve),
    ]
}
