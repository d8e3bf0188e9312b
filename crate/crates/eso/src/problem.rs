//! JSON sidecar `{lambda, b, x0}` completing a matrix file into a
//! quadratic problem. `b` defaults to all ones and `x0` to zeros.

use std::path::Path;

use eso_core::solver::QuadraticProblem;
use eso_core::DataMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSidecar {
    pub lambda: f64,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

impl ProblemSidecar {
    pub fn build(&self, data: DataMatrix) -> Result<(QuadraticProblem, Vec<f64>), CliError> {
        let n = data.n();
        let b = self.b.clone().unwrap_or_else(|| vec![1.0; n]);
        let x0 = self.x0.clone().unwrap_or_else(|| vec![0.0; n]);
        if x0.len() != n {
            return Err(CliError::Input(format!("x0 has length {}, expected {n}", x0.len())));
        }
        Ok((QuadraticProblem::new(data, self.lambda, b)?, x0))
    }
}

pub fn load_sidecar(path: &Path) -> Result<ProblemSidecar, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(&path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(&path.display().to_string(), e))
}
