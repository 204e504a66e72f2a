use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::activation::Activation;
use crate::autodiff::{ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::featurize::{init_features, FeatureParams, RbfSpec};
use crate::molgraph::{GraphBatch, MolGraph, Molecule};

use super::config::ModelConfig;
use super::embed::{direction_invariant_embed, readout, EdgeVectorSet, EmbedParams, PairOrientation};
use super::gin::{gin_conv, gin_conv_projected, GinParams};
use super::layers::Linear;
use super::{FeatureState, LineFeatures};

/// One interaction block: a line-graph convolution, an atom-graph convolution
/// and, optionally, an angle update.
#[derive(Clone, Copy, Debug)]
pub struct LayerParams {
    pub line: GinParams,
    pub atom: GinParams,
    pub angle: Option<Linear>,
}

/// `y' = GIN_L(y, z)`, `x' = GIN_G(x, y')`, and `z' = act(L(z + y'_src + y'_dst))`
/// when angle updates are enabled.
pub fn layer_forward(
    tape: &mut Tape,
    store: &ParamStore,
    params: &LayerParams,
    state: FeatureState,
    batch: &GraphBatch,
    act: Activation,
) -> Result<FeatureState> {
    let y = match state.z {
        // z W = basis (W_z W) + b_z W, which avoids a product over every line edge at full width
        LineFeatures::Factored(f) => {
            let w = tape.param(store, params.line.message.weight);
            let folded = tape.matmul(f.weight, w)?;
            let shift = tape.matmul(f.bias, w)?;
            let ew = tape.matmul(f.basis, folded)?;
            gin_conv_projected(
                tape,
                store,
                &params.line,
                state.y,
                ew,
                Some(shift),
                &batch.line_src,
                &batch.line_dst,
                act,
            )?
        }
        LineFeatures::Dense(z) => gin_conv(tape, store, &params.line, state.y, z, &batch.line_src, &batch.line_dst, act)?,
    };
    let x = gin_conv(tape, store, &params.atom, state.x, y, &batch.edge_src, &batch.edge_dst, act)?;
    let z = match &params.angle {
        Some(lin) => {
            let from = tape.gather_rows(y, &batch.line_src)?;
            let to = tape.gather_rows(y, &batch.line_dst)?;
            let z = state.z.dense(tape)?;
            let s = tape.add(z, from)?;
            let s = tape.add(s, to)?;
            let s = lin.forward(tape, store, s)?;
            LineFeatures::Dense(tape.activation(act, s)?)
        }
        None => state.z,
    };
    Ok(FeatureState { x, y, z })
}

/// The full dipole network with its parameters.
#[derive(Clone, Debug)]
pub struct DipoleModel {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub features: FeatureParams,
    pub layers: Vec<LayerParams>,
    pub embed: EmbedParams,
    distance_rbf: RbfSpec,
    angle_rbf: RbfSpec,
}

impl DipoleModel {
    /// Initializes every parameter from a seeded stream.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let h = config.hidden;
        let features = FeatureParams::new(
            &mut store,
            &mut rng,
            &config.species,
            config.atom_features.as_ref(),
            config.atom_embed_dim,
            config.distance_basis,
            config.angle_basis,
            h,
        )?;
        let layers = (0..config.n_layers)
            .map(|l| LayerParams {
                line: GinParams::new(&mut store, &mut rng, &format!("layer{l}.line"), h),
                atom: GinParams::new(&mut store, &mut rng, &format!("layer{l}.atom"), h),
                angle: config
                    .update_angles
                    .then(|| Linear::new(&mut store, &mut rng, &format!("layer{l}.angle"), h, h)),
            })
            .collect();
        let embed = EmbedParams::new(
            &mut store,
            &mut rng,
            config.variant,
            h,
            config.distance_basis,
            config.gate_hidden,
        );
        Ok(DipoleModel {
            distance_rbf: config.distance_rbf()?,
            angle_rbf: config.angle_rbf()?,
            config,
            store,
            features,
            layers,
            embed,
        })
    }

    pub fn num_parameters(&self) -> usize {
        self.store.num_scalars()
    }

    pub fn graph(&self, mol: &Molecule) -> Result<MolGraph> {
        let g = MolGraph::build(mol, self.config.cutoff)?;
        for &z in &g.atomic_numbers {
            self.features.species_index(z)?;
        }
        Ok(g)
    }

    /// Final atom features after all interaction blocks.
    pub fn encode(&self, tape: &mut Tape, batch: &GraphBatch) -> Result<Var> {
        let act = self.config.activation;
        let mut state = init_features(
            tape,
            &self.store,
            batch,
            &self.features,
            &self.distance_rbf,
            &self.angle_rbf,
        )?;
        for layer in &self.layers {
            state = layer_forward(tape, &self.store, layer, state, batch, act)?;
        }
        Ok(state.x)
    }

    /// Per-pair (or per-atom) vectors before the readout sum.
    pub fn edge_vectors(
        &self,
        tape: &mut Tape,
        batch: &GraphBatch,
        orientation: PairOrientation,
    ) -> Result<EdgeVectorSet> {
        let x = self.encode(tape, batch)?;
        direction_invariant_embed(
            tape,
            &self.store,
            x,
            batch,
            &self.embed,
            &self.distance_rbf,
            self.config.activation,
            orientation,
        )
    }

    /// Predicted dipole vectors, `n_molecules × 3`.
    pub fn forward_batch(&self, tape: &mut Tape, batch: &GraphBatch) -> Result<Var> {
        self.forward_oriented(tape, batch, PairOrientation::Canonical)
    }

    pub fn forward_oriented(
        &self,
        tape: &mut Tape,
        batch: &GraphBatch,
        orientation: PairOrientation,
    ) -> Result<Var> {
        let evs = self.edge_vectors(tape, batch, orientation)?;
        readout(tape, &evs, batch.n_molecules)
    }

    pub fn predict_graphs(&self, graphs: &[&MolGraph]) -> Result<Vec<[f64; 3]>> {
        if graphs.is_empty() {
            return Ok(Vec::new());
        }
        let batch = GraphBatch::new(graphs.iter().copied());
        let mut tape = Tape::new();
        let out = self.forward_batch(&mut tape, &batch)?;
        let v = tape.value(out);
        if !v.all_finite() {
            return Err(Error::Invalid("prediction is not finite".into()));
        }
        Ok((0..batch.n_molecules)
            .map(|m| {
                let r = v.row(m);
                [r[0], r[1], r[2]]
            })
            .collect())
    }

    pub fn predict(&self, mol: &Molecule) -> Result<[f64; 3]> {
        let g = self.graph(mol)?;
        Ok(self.predict_graphs(&[&g])?[0])
    }
}
