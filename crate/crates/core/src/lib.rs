//! Dipole-moment prediction with direction-invariant edge embeddings.
//!
//! The crate is organised bottom-up:
//!
//! - [`autodiff`]: dense tensors with a define-by-run reverse-mode tape.
//! - [`molgraph`]: molecules, cutoff graphs, bond-angle line graphs, rigid
//!   transforms and idealized acene geometries.
//! - [`featurize`]: radial-basis expansions and initial feature blocks.
//! - [`model`]: GIN convolutions, the pairwise vector embedding, readout and loss.
//! - [`dataio`]: QM9 XYZ parsing, splits and CSV/JSON outputs.
//! - [`train`]: AdamW, reduce-on-plateau, the training loop and ablations.
//! - [`checks`]: the randomized invariance and gradient property suite.

pub mod activation;
pub mod autodiff;
pub mod checks;
pub mod dataio;
pub mod error;
pub mod featurize;
pub mod model;
pub mod molgraph;
pub mod tensor;
pub mod train;

pub use activation::Activation;
pub use autodiff::{ParamId, ParamStore, Tape, Var};
pub use error::{Error, Result};
pub use model::{DipoleModel, EmbedVariant, ModelConfig};
pub use molgraph::{AtomBondGraph, BondAngleGraph, Molecule, RigidTransform};
pub use tensor::Tensor;
