//! JSON algebra documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{CartanSplit, LieAlgebra};
use crate::error::{Error, Result};

/// `{dim, basis, brackets: [[i, j, k, value]], k_indices, p_indices, h_indices}`
/// with 0-based indices. `brackets[n] = [i, j, k, v]` means the `e_k`
/// coefficient of `[e_i, e_j]` is `v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDocument {
    pub dim: usize,
    pub basis: Vec<String>,
    pub brackets: Vec<(usize, usize, usize, f64)>,
    pub k_indices: Vec<usize>,
    pub p_indices: Vec<usize>,
    #[serde(default)]
    pub h_indices: Vec<usize>,
}

impl AlgebraDocument {
    pub fn from_parts(alg: &LieAlgebra, split: &CartanSplit, h_indices: &[usize]) -> Self {
        Self {
            dim: alg.dim(),
            basis: alg.basis_names().to_vec(),
            brackets: alg.entries(),
            k_indices: split.k_indices.clone(),
            p_indices: split.p_indices.clone(),
            h_indices: h_indices.to_vec(),
        }
    }

    pub fn to_parts(&self) -> Result<(LieAlgebra, CartanSplit, Vec<usize>)> {
        if self.basis.len() != self.dim {
            return Err(Error::Input(format!(
                "dim is {} but {} basis names are given",
                self.dim,
                self.basis.len()
            )));
        }
        let alg = LieAlgebra::new(self.basis.clone(), &self.brackets)?;
        let split = CartanSplit::new(self.k_indices.clone(), self.p_indices.clone(), self.dim)?;
        if let Some(&bad) = self.h_indices.iter().find(|&&i| i >= self.dim) {
            return Err(Error::Input(format!("h index {bad} out of range")));
        }
        Ok((alg, split, self.h_indices.clone()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
