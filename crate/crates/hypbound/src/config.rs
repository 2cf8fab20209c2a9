//! Run configuration: the map family, the constants and the output location.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curve::Refinement;
use crate::curves_critical::{ALPHA, LAMBDA_HAT};
use crate::error::Result;
use crate::map_core::MapParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub newton: f64,
    pub bisection: f64,
    pub refinement: Refinement,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { newton: 1e-12, bisection: 1e-8, refinement: Refinement::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    pub delta: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub k0: usize,
    pub lambda_hat: f64,
    pub tolerances: Tolerances,
}

impl Default for Constants {
    fn default() -> Self {
        Self { delta: 0.1, alpha: ALPHA, epsilon: 0.15, k0: 3, lambda_hat: LAMBDA_HAT, tolerances: Tolerances::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub family: MapParams,
    pub constants: Constants,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { family: MapParams::default(), constants: Constants::default(), seed: 1, output_dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    /// Read a JSON config; missing fields take their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
