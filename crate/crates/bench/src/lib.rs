//! Shared fixtures for the benchmarks.

use dipnet::checks::synthetic_molecules;
use dipnet::molgraph::point_charge_dipole;
use dipnet::{DipoleModel, ModelConfig, Molecule};

/// Synthetic molecules with at least `min_atoms` atoms, labeled with their
/// point-charge dipole.
pub fn molecules(n: usize, min_atoms: usize, seed: u64) -> Vec<Molecule> {
    let mut out = Vec::with_capacity(n);
    let mut round = 0;
    while out.len() < n {
        for m in synthetic_molecules(4 * n, seed.wrapping_add(round)) {
            if m.n_atoms() >= min_atoms && out.len() < n {
                let label = point_charge_dipole(&m);
                out.push(m.with_label(label));
            }
        }
        round += 1;
    }
    out
}

/// Default architecture at the given width.
pub fn model(hidden: usize) -> DipoleModel {
    DipoleModel::new(
        ModelConfig {
            hidden,
            ..ModelConfig::default()
        },
        0,
    )
    .expect("valid config")
}
