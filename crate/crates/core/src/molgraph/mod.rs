//! Molecules, cutoff graphs, bond-angle line graphs and rigid transforms.

mod acene;
mod batch;
mod elements;
mod graph;
mod molecule;
mod synthetic;
mod transform;

pub use acene::{generate_acene, ACENE_CC, ACENE_CH};
pub use batch::{GraphBatch, MolGraph};
pub use elements::{atomic_number, element_symbol};
pub use graph::{build_atom_bond_graph, build_bond_angle_graph, AtomBondGraph, BondAngleGraph};
pub use molecule::{Molecule, MIN_SEPARATION};
pub use synthetic::{labeled_synthetic_set, point_charge_dipole, random_organic_molecule};
pub use transform::{apply_transform, random_rotation, RigidTransform};

/// Default neighbor cutoff in Å.
pub const DEFAULT_CUTOFF: f64 = 5.0;

pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
