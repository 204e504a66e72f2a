use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{norm3, sub3};

/// Atoms closer than this (Å) are treated as coincident.
pub const MIN_SEPARATION: f64 = 1e-6;

/// Atomic numbers and Cartesian positions (Å), with an optional dipole norm
/// label in Debye.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    pub atomic_numbers: Vec<u32>,
    pub positions: Vec<[f64; 3]>,
    pub dipole_label: Option<f64>,
    pub id: Option<String>,
}

impl Molecule {
    /// Validates finiteness and atom separation.
    pub fn new(atomic_numbers: Vec<u32>, positions: Vec<[f64; 3]>) -> Result<Self> {
        let mol = Molecule {
            atomic_numbers,
            positions,
            dipole_label: None,
            id: None,
        };
        mol.validate()?;
        Ok(mol)
    }

    pub fn with_label(mut self, label: f64) -> Self {
        self.dipole_label = Some(label);
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.atomic_numbers.len() != self.positions.len() {
            return Err(Error::Invalid(format!(
                "{} atomic numbers but {} positions",
                self.atomic_numbers.len(),
                self.positions.len()
            )));
        }
        if let Some(i) = self
            .positions
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::Invalid(format!("atom {i} has a non-finite position")));
        }
        let min = self.min_distance();
        if min <= MIN_SEPARATION {
            return Err(Error::Degenerate(format!(
                "atoms coincide (min distance {min:e} Å)"
            )));
        }
        Ok(())
    }

    pub fn n_atoms(&self) -> usize {
        self.atomic_numbers.len()
    }

    pub fn centroid(&self) -> [f64; 3] {
        let n = self.n_atoms().max(1) as f64;
        let mut c = [0.0; 3];
        for p in &self.positions {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        c.map(|v| v / n)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        norm3(sub3(self.positions[j], self.positions[i]))
    }

    /// Smallest pairwise distance, `inf` for fewer than two atoms.
    pub fn min_distance(&self) -> f64 {
        let n = self.n_atoms();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                best = best.min(self.distance(i, j));
            }
        }
        best
    }

    /// Count of atoms per atomic number, sorted by atomic number.
    pub fn formula(&self) -> Vec<(u32, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for &z in &self.atomic_numbers {
            *counts.entry(z).or_insert(0) += 1;
        }
        counts.into_iter().collect()
    }
}
