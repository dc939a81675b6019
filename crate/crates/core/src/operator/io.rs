//! JSON state files: `factors`, row-major `matrix` of `[re, im]` pairs, optional `seed` and `description`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hermitian::{CMat, HermitianOperator};
use super::layout::{Factor, SystemLayout};
use super::state::QuantumState;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub factors: Vec<Factor>,
    pub matrix: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl StateFile {
    pub fn from_state(rho: &QuantumState, seed: Option<u64>, description: Option<String>) -> Self {
        StateFile {
            factors: rho.layout().factors().to_vec(),
            matrix: matrix_to_rows(rho.matrix()),
            seed,
            description,
        }
    }

    /// Validates layout, shape, Hermiticity and state invariants.
    pub fn to_state(&self) -> Result<QuantumState> {
        let layout = SystemLayout::from_factors(self.factors.clone())?;
        let m = rows_to_matrix(&self.matrix, layout.dim())?;
        QuantumState::new(HermitianOperator::new(layout, m)?)
    }
}

pub(crate) fn matrix_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub(crate) fn rows_to_matrix(rows: &[Vec<[f64; 2]>], d: usize) -> Result<CMat> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension(format!("matrix must be {d}x{d}")));
    }
    Ok(CMat::from_fn(d, d, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn read_state_file(path: impl AsRef<Path>) -> Result<(QuantumState, StateFile)> {
    let text = std::fs::read_to_string(path)?;
    let file: StateFile = serde_json::from_str(&text)?;
    Ok((file.to_state()?, file))
}

pub fn write_state_file(path: impl AsRef<Path>, file: &StateFile) -> Result<()> {
    let text = serde_json::to_string_pretty(file)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Serde adapter for lists of square complex matrices as `[re, im]` rows.
pub(crate) mod cmat_list {
    use super::{matrix_to_rows, rows_to_matrix, CMat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(matrix_to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMat>, D::Error> {
        let rows: Vec<Vec<Vec<[f64; 2]>>> = Vec::deserialize(d)?;
        rows.iter().map(|r| rows_to_matrix(r, r.len()).map_err(serde::de::Error::custom)).collect()
    }
}
