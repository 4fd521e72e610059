use std::collections::BTreeMap;

use crate::config::{Param, Point};
use crate::error::CliError;
use crate::record::Outcome;

/// An experiment runnable from the command line.
pub trait Experiment: Send + Sync {
    fn tag(&self) -> &'static str;

    fn describe(&self) -> &'static str;

    fn params(&self) -> &'static [Param];

    /// Range checks beyond what the schema types express.
    fn validate(&self, _point: &Point) -> Result<(), CliError> {
        Ok(())
    }

    /// Runs one sweep element.
    fn run(&self, point: &Point) -> Result<Outcome, CliError>;

    /// Cross-element metrics and checks once the whole sweep has finished.
    fn aggregate(&self, _results: &[(Point, Outcome)]) -> Result<Outcome, CliError> {
        Ok(Outcome::default())
    }

    /// Fast built-in self-checks that need no config.
    fn verify(&self) -> Result<Outcome, CliError>;
}

pub struct Registry {
    experiments: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { experiments: BTreeMap::new() }
    }

    /// Registry holding every built-in experiment.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        for e in crate::experiments::all() {
            r.add(e);
        }
        r
    }

    pub fn add(&mut self, e: Box<dyn Experiment>) {
        self.experiments.insert(e.tag(), e);
    }

    pub fn get(&self, tag: &str) -> Result<&dyn Experiment, CliError> {
        self.experiments.get(tag).map(|e| e.as_ref()).ok_or_else(|| {
            CliError::Validation(format!("unknown experiment `{tag}`; known: {}", self.tags().join(", ")))
        })
    }

    pub fn tags(&self) -> Vec<&'static str> {
        self.experiments.keys().copied().collect()
    }
}
