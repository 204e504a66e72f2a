use rand::Rng;

use crate::activation::Activation;
use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::featurize::{rbf_matrix, RbfSpec};
use crate::molgraph::GraphBatch;
use crate::tensor::Tensor;

use super::config::EmbedVariant;
use super::layers::{glorot, Mlp};

/// Which of the two directed edges of a pair computes its vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairOrientation {
    /// The `i < j` edge.
    Canonical,
    /// The `j → i` edge.
    Reversed,
}

/// Readout parameters for the chosen variant.
#[derive(Clone, Copy, Debug)]
pub enum EmbedParams {
    PaperLiteral { w_h: ParamId, w_r: ParamId },
    StrictEquivariant { w_h: ParamId, gate: Mlp },
    NonsymEdge { mlp: Mlp },
    NodeCharge { w: ParamId },
}

impl EmbedParams {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        variant: EmbedVariant,
        hidden: usize,
        distance_basis: usize,
        gate_hidden: usize,
    ) -> Self {
        match variant {
            EmbedVariant::PaperLiteral => EmbedParams::PaperLiteral {
                w_h: store.add("readout.w_h", glorot(rng, hidden, 1)),
                w_r: store.add("readout.w_r", glorot(rng, 3, 1)),
            },
            EmbedVariant::StrictEquivariant => EmbedParams::StrictEquivariant {
                w_h: store.add("readout.w_h", glorot(rng, hidden, 1)),
                gate: Mlp::new(store, rng, "readout.gate", distance_basis, gate_hidden, 1),
            },
            EmbedVariant::NonsymEdge => EmbedParams::NonsymEdge {
                mlp: Mlp::new(store, rng, "readout.pair", 2 * hidden + distance_basis, gate_hidden, 1),
            },
            EmbedVariant::NodeCharge => EmbedParams::NodeCharge {
                w: store.add("readout.w_q", glorot(rng, hidden, 1)),
            },
        }
    }

    pub fn variant(&self) -> EmbedVariant {
        match self {
            EmbedParams::PaperLiteral { .. } => EmbedVariant::PaperLiteral,
            EmbedParams::StrictEquivariant { .. } => EmbedVariant::StrictEquivariant,
            EmbedParams::NonsymEdge { .. } => EmbedVariant::NonsymEdge,
            EmbedParams::NodeCharge { .. } => EmbedVariant::NodeCharge,
        }
    }
}

/// One 3-vector per unordered pair (per atom for `NodeCharge`), with the scalar
/// coefficient that multiplies the displacement.
#[derive(Clone, Debug)]
pub struct EdgeVectorSet {
    /// rows × 3
    pub vectors: Var,
    /// rows × 1
    pub phi: Var,
    /// Molecule index of every row.
    pub owner: Vec<usize>,
    /// Atom pair `(i, j)` of every row, in batch atom indices. For `NodeCharge`
    /// rows, `(i, i)`.
    pub atoms: Vec<(usize, usize)>,
}

fn vectors_tensor(rows: impl Iterator<Item = [f64; 3]>) -> Tensor {
    let data: Vec<f64> = rows.flat_map(|r| r.into_iter()).collect();
    let n = data.len() / 3;
    Tensor::matrix(n, 3, data).expect("three columns")
}

/// Builds the per-pair vectors `v_ij = phi_ij · r_ij` from the final atom features.
#[allow(clippy::too_many_arguments)]
pub fn direction_invariant_embed(
    tape: &mut Tape,
    store: &ParamStore,
    x_final: Var,
    batch: &GraphBatch,
    params: &EmbedParams,
    distance_rbf: &RbfSpec,
    act: Activation,
    orientation: PairOrientation,
) -> Result<EdgeVectorSet> {
    if tape.value(x_final).rows() != batch.n_atoms() {
        return Err(Error::ShapeMismatch {
            op: "direction_invariant_embed",
            left: tape.value(x_final).shape().to_vec(),
            right: vec![batch.n_atoms()],
        });
    }

    if let EmbedParams::NodeCharge { w } = params {
        let w = tape.param(store, *w);
        let q = tape.matmul(x_final, w)?;
        let pos = tape.constant(vectors_tensor(batch.centered.iter().copied()));
        let vectors = tape.mul_col(pos, q)?;
        return Ok(EdgeVectorSet {
            vectors,
            phi: q,
            owner: batch.atom_owner.clone(),
            atoms: (0..batch.n_atoms()).map(|i| (i, i)).collect(),
        });
    }

    let edges: Vec<usize> = match orientation {
        PairOrientation::Canonical => batch.pair_edges.clone(),
        PairOrientation::Reversed => batch.pair_edges.iter().map(|&e| batch.edge_reverse[e]).collect(),
    };
    let from: Vec<usize> = edges.iter().map(|&e| batch.edge_src[e]).collect();
    let to: Vec<usize> = edges.iter().map(|&e| batch.edge_dst[e]).collect();
    let disp = tape.constant(vectors_tensor(edges.iter().map(|&e| batch.edge_disp[e])));
    let dist: Vec<f64> = edges.iter().map(|&e| batch.edge_dist[e]).collect();

    let phi = match params {
        EmbedParams::PaperLiteral { w_h, w_r } => {
            let w_h = tape.param(store, *w_h);
            let a = tape.matmul(x_final, w_h)?;
            let a_from = tape.gather_rows(a, &from)?;
            let a_to = tape.gather_rows(a, &to)?;
            let anti = tape.sub(a_from, a_to)?;
            let w_r = tape.param(store, *w_r);
            let along = tape.matmul(disp, w_r)?;
            tape.add(anti, along)?
        }
        EmbedParams::StrictEquivariant { w_h, gate } => {
            let h_from = tape.gather_rows(x_final, &from)?;
            let h_to = tape.gather_rows(x_final, &to)?;
            let diff = tape.sub(h_from, h_to)?;
            let w_h = tape.param(store, *w_h);
            let anti = tape.matmul(diff, w_h)?;
            let basis = tape.constant(rbf_matrix(&dist, distance_rbf));
            let g = gate.forward(tape, store, basis, act)?;
            tape.mul(anti, g)?
        }
        EmbedParams::NonsymEdge { mlp } => {
            let h_from = tape.gather_rows(x_final, &from)?;
            let h_to = tape.gather_rows(x_final, &to)?;
            let basis = tape.constant(rbf_matrix(&dist, distance_rbf));
            let joined = tape.concat_cols(&[h_from, h_to, basis])?;
            mlp.forward(tape, store, joined, act)?
        }
        EmbedParams::NodeCharge { .. } => unreachable!(),
    };
    let vectors = tape.mul_col(disp, phi)?;
    Ok(EdgeVectorSet {
        vectors,
        phi,
        owner: batch.pair_owner.clone(),
        atoms: from.into_iter().zip(to).collect(),
    })
}

/// Sums each molecule's vectors: `n_molecules × 3`. Rows are visited in their
/// canonical order, so the result is deterministic.
pub fn readout(tape: &mut Tape, evs: &EdgeVectorSet, n_molecules: usize) -> Result<Var> {
    tape.segment_sum(evs.vectors, &evs.owner, n_molecules)
}
