//! JSON system files.
//!
//! ```json
//! {"n": 1, "m": 1, "A": [[[-1]], [[0.5]]], "B": [[1]], "C": [[1]], "D": [[0]], "tau": [0, 1]}
//! ```

use std::fs;
use std::path::Path;

use delay_hinf_core::linalg::RMat;
use delay_hinf_core::DelaySystem;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
}

fn matrix(name: &str, rows: &[Vec<f64>], nrows: usize, ncols_if_empty: usize) -> Result<RMat, CliError> {
    if rows.len() != nrows {
        return Err(CliError::Shape(format!("{name} has {} rows, expected {nrows}", rows.len())));
    }
    let ncols = rows.first().map_or(ncols_if_empty, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Shape(format!("{name} has rows of unequal length")));
    }
    Ok(RMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl SystemFile {
    pub fn to_system(&self) -> Result<DelaySystem, CliError> {
        if self.a.len() != self.m + 1 {
            return Err(CliError::Shape(format!(
                "A lists {} matrices, expected m + 1 = {}",
                self.a.len(),
                self.m + 1
            )));
        }
        let n = self.n;
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(i, ai)| matrix(&format!("A[{i}]"), ai, n, n))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, ai) in a.iter().enumerate() {
            if ai.ncols() != n {
                return Err(CliError::Shape(format!("A[{i}] is not {n} x {n}")));
            }
        }
        let b = matrix("B", &self.b, n, 0)?;
        let ny = self.c.len();
        let c = matrix("C", &self.c, ny, n)?;
        let d = matrix("D", &self.d, ny, b.ncols())?;
        Ok(DelaySystem::new(a, b, c, d, self.tau.clone())?)
    }

    pub fn from_system(sys: &DelaySystem) -> Self {
        SystemFile {
            n: sys.n(),
            m: sys.m(),
            a: sys.a().iter().map(rows).collect(),
            b: rows(sys.b()),
            c: rows(sys.c()),
            d: rows(sys.d()),
            tau: sys.tau().to_vec(),
        }
    }
}

pub fn parse_system(text: &str) -> Result<DelaySystem, CliError> {
    let file: SystemFile = serde_json::from_str(text)?;
    file.to_system()
}

pub fn load_system(path: &Path) -> Result<DelaySystem, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    parse_system(&text)
}

pub fn serialize_system(sys: &DelaySystem) -> String {
    serde_json::to_string(&SystemFile::from_system(sys)).expect("plain numeric data serializes")
}

pub fn save_system(sys: &DelaySystem, path: &Path) -> Result<(), CliError> {
    fs::write(path, serialize_system(sys)).map_err(|e| CliError::Io(path.display().to_string(), e))
}
