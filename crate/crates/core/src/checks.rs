//! Randomized invariance, equivariance and gradient properties.
//!
//! Every property returns a [`PropertyOutcome`] with the worst value it
//! measured. Properties that a variant does not satisfy by construction are
//! [`Status::Reported`] instead of failed.

use std::f64::consts::SQRT_2;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::activation::Activation;
use crate::autodiff::{grad_check, grad_check_params, ParamStore, Tape, UnaryFn, Var};
use crate::error::Result;
use crate::model::{
    direction_invariant_embed, rmse_norm_loss, DipoleModel, EmbedParams, EmbedVariant, ModelConfig,
    PairOrientation,
};
use crate::molgraph::{
    apply_transform, generate_acene, random_organic_molecule, random_rotation, GraphBatch, MolGraph, Molecule,
    RigidTransform,
};
use crate::tensor::Tensor;

/// Finite-difference step (relative to `max(1, |x|)`).
pub const GRAD_STEP: f64 = 1e-6;
pub const GRAD_TOL: f64 = 1e-4;
pub const EQUIVARIANCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Measured and printed, but not expected to hold.
    Reported,
}

#[derive(Clone, Debug)]
pub struct PropertyOutcome {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub status: Status,
    pub detail: String,
}

impl PropertyOutcome {
    fn judged(name: impl Into<String>, measured: f64, tolerance: f64, asserted: bool, detail: String) -> Self {
        let status = if !asserted {
            Status::Reported
        } else if measured <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        PropertyOutcome {
            name: name.into(),
            measured,
            tolerance,
            status,
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.status {
            Status::Pass => write!(f, "PASS {}: max {:.3e} (tol {:.0e})", self.name, self.measured, self.tolerance)?,
            Status::Fail => write!(f, "FAIL {}: max {:.3e} (tol {:.0e})", self.name, self.measured, self.tolerance)?,
            Status::Reported => write!(f, "INFO {}: measured violation: {:.3e}", self.name, self.measured)?,
        }
        if !self.detail.is_empty() {
            write!(f, " [{}]", self.detail)?;
        }
        Ok(())
    }
}

/// Sizes of the randomized suite.
#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub model: ModelConfig,
    pub seed: u64,
    pub direction_draws: usize,
    pub molecules: usize,
    pub rotations: usize,
    pub acene_max: usize,
    pub acene_draws: usize,
    pub grad_instances: usize,
    /// Upper bound on parameter entries probed by the end-to-end gradient check.
    pub grad_param_probes: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            model: ModelConfig::default(),
            seed: 0,
            direction_draws: 1000,
            molecules: 100,
            rotations: 10,
            acene_max: 5,
            acene_draws: 20,
            grad_instances: 100,
            grad_param_probes: 2000,
        }
    }
}

fn sub_seed(seed: u64, stream: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ stream.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ index.wrapping_mul(0x1656_67B1_9E37_79F9)
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

fn normal_tensor<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Tensor::matrix(rows, cols, data).expect("sized by construction")
}

/// Synthetic organic molecules with up to nine heavy atoms.
pub fn synthetic_molecules(n: usize, seed: u64) -> Vec<Molecule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_organic_molecule(&mut rng, 9)).collect()
}

/// Compares the pair vectors computed from each direction of every pair, over
/// random molecules, atom features and readout parameters.
pub fn direction_invariance(cfg: &CheckConfig, variant: EmbedVariant) -> Result<PropertyOutcome> {
    let m = &cfg.model;
    let rbf = m.distance_rbf()?;
    let mut worst = 0.0f64;
    for draw in 0..cfg.direction_draws {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 1, draw as u64));
        let mol = random_organic_molecule(&mut rng, 9);
        let graph = MolGraph::build(&mol, m.cutoff)?;
        let batch = GraphBatch::new([&graph]);
        let scale = 10f64.powf(rng.random_range(-2.0..1.0));
        let features = normal_tensor(&mut rng, batch.n_atoms(), m.hidden, scale);
        let mut store = ParamStore::new();
        let params = EmbedParams::new(&mut store, &mut rng, variant, m.hidden, m.distance_basis, m.gate_hidden);

        let mut tape = Tape::new();
        let x = tape.constant(features);
        let fwd = direction_invariant_embed(&mut tape, &store, x, &batch, &params, &rbf, m.activation, PairOrientation::Canonical)?;
        let rev = direction_invariant_embed(&mut tape, &store, x, &batch, &params, &rbf, m.activation, PairOrientation::Reversed)?;
        let diff = tape
            .value(fwd.vectors)
            .zip_map(tape.value(rev.vectors), |a, b| (a - b).abs())
            .max_abs();
        worst = worst.max(diff);
    }
    Ok(PropertyOutcome::judged(
        format!("direction_invariance[{variant}]"),
        worst,
        0.0,
        variant.is_direction_invariant(),
        format!("{} draws", cfg.direction_draws),
    ))
}

fn model_for(cfg: &CheckConfig, stream: u64, index: usize) -> Result<DipoleModel> {
    DipoleModel::new(cfg.model.clone(), sub_seed(cfg.seed, stream, index as u64))
}

/// `‖μ̂(R·mol) − R·μ̂(mol)‖ / (1 + ‖μ̂(mol)‖)` over molecules × rotations, with
/// fresh random parameters per molecule.
pub fn rotation_equivariance(cfg: &CheckConfig, molecules: &[Molecule]) -> Result<PropertyOutcome> {
    let mut worst = 0.0f64;
    for (i, mol) in molecules.iter().enumerate() {
        let model = model_for(cfg, 2, i)?;
        let mu = model.predict(mol)?;
        for r in 0..cfg.rotations {
            let rot = random_rotation(sub_seed(cfg.seed, 3, (i * cfg.rotations + r) as u64));
            let turned = model.predict(&apply_transform(mol, &rot)?)?;
            worst = worst.max(dist(turned, rot.rotate(mu)) / (1.0 + norm(mu)));
        }
    }
    let variant = cfg.model.variant;
    Ok(PropertyOutcome::judged(
        format!("rotation_equivariance[{variant}]"),
        worst,
        EQUIVARIANCE_TOL,
        variant != EmbedVariant::PaperLiteral,
        format!("{} molecules x {} rotations", molecules.len(), cfg.rotations),
    ))
}

/// Absolute change of μ̂ under a random translation combined with a random
/// atom relabeling.
pub fn translation_permutation_invariance(cfg: &CheckConfig, molecules: &[Molecule]) -> Result<PropertyOutcome> {
    let mut worst = 0.0f64;
    for (i, mol) in molecules.iter().enumerate() {
        let model = model_for(cfg, 4, i)?;
        let mu = model.predict(mol)?;
        for r in 0..cfg.rotations {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 5, (i * cfg.rotations + r) as u64));
            let shift: [f64; 3] = std::array::from_fn(|_| rng.random_range(-10.0..10.0));
            let mut perm: Vec<usize> = (0..mol.n_atoms()).collect();
            perm.shuffle(&mut rng);
            let t = RigidTransform::translation(shift)?.with_permutation(perm)?;
            let moved = model.predict(&apply_transform(mol, &t)?)?;
            let dev = (0..3).map(|k| (moved[k] - mu[k]).abs()).fold(0.0, f64::max);
            worst = worst.max(dev);
        }
    }
    Ok(PropertyOutcome::judged(
        format!("translation_permutation_invariance[{}]", cfg.model.variant),
        worst,
        EQUIVARIANCE_TOL,
        true,
        format!("{} molecules x {} moves", molecules.len(), cfg.rotations),
    ))
}

/// Largest `‖μ̂‖` of `model` over acenes with `1..=n_max` rings.
pub fn acene_max_norm(model: &DipoleModel, n_max: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 1..=n_max {
        worst = worst.max(norm(model.predict(&generate_acene(n)?)?));
    }
    Ok(worst)
}

fn centrosymmetric_asserted(variant: EmbedVariant) -> bool {
    matches!(variant, EmbedVariant::StrictEquivariant | EmbedVariant::NodeCharge)
}

/// `‖μ̂‖` on acenes for several random parameter draws.
pub fn centrosymmetric_null(cfg: &CheckConfig) -> Result<PropertyOutcome> {
    let mut worst = 0.0f64;
    for d in 0..cfg.acene_draws {
        worst = worst.max(acene_max_norm(&model_for(cfg, 6, d)?, cfg.acene_max)?);
    }
    let variant = cfg.model.variant;
    Ok(PropertyOutcome::judged(
        format!("centrosymmetric_null[{variant}]"),
        worst,
        EQUIVARIANCE_TOL,
        centrosymmetric_asserted(variant),
        format!("acenes 1..={} x {} draws", cfg.acene_max, cfg.acene_draws),
    ))
}

/// The same null for one given (possibly trained) model.
pub fn centrosymmetric_null_for(model: &DipoleModel, n_max: usize) -> Result<PropertyOutcome> {
    let variant = model.config.variant;
    Ok(PropertyOutcome::judged(
        format!("centrosymmetric_null_model[{variant}]"),
        acene_max_norm(model, n_max)?,
        EQUIVARIANCE_TOL,
        centrosymmetric_asserted(variant),
        format!("acenes 1..={n_max}"),
    ))
}

type Primitive = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>;

/// Checks `sum(w ⊙ op(inputs))` against central differences in each input.
fn check_instance<R: Rng + ?Sized>(rng: &mut R, inputs: &[Tensor], op: &Primitive) -> Result<f64> {
    let shape = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let out = op(&mut tape, &vars)?;
        tape.value(out).shape().to_vec()
    };
    let n: usize = shape.iter().product();
    let weights = Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let mut worst = 0.0f64;
    for k in 0..inputs.len() {
        let report = grad_check(
            |tape, x| {
                let vars: Vec<Var> = inputs
                    .iter()
                    .enumerate()
                    .map(|(j, t)| if j == k { x } else { tape.constant(t.clone()) })
                    .collect();
                let out = op(tape, &vars)?;
                let w = tape.constant(weights.clone());
                let prod = tape.mul(out, w)?;
                tape.sum(prod)
            },
            &inputs[k],
            GRAD_STEP,
        )?;
        worst = worst.max(report.max_rel_error);
    }
    Ok(worst)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::matrix(rows, cols, data).expect("sized by construction")
}

fn indices<R: Rng + ?Sized>(rng: &mut R, len: usize, bound: usize) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..bound)).collect()
}

/// One random instance of a named primitive: inputs and the op.
fn primitive_instance(name: &str, rng: &mut ChaCha8Rng) -> (Vec<Tensor>, Primitive) {
    let r = rng.random_range(1..=4);
    let c = rng.random_range(1..=4);
    let m = |rng: &mut ChaCha8Rng, rows: usize, cols: usize| uniform(rng, rows, cols, -2.0, 2.0);
    match name {
        "add" => (vec![m(rng, r, c), m(rng, r, c)], Box::new(|t, v| t.add(v[0], v[1]))),
        "sub" => (vec![m(rng, r, c), m(rng, r, c)], Box::new(|t, v| t.sub(v[0], v[1]))),
        "neg" => (vec![m(rng, r, c)], Box::new(|t, v| t.neg(v[0]))),
        "mul" => (vec![m(rng, r, c), m(rng, r, c)], Box::new(|t, v| t.mul(v[0], v[1]))),
        "scale" => {
            let s = rng.random_range(-3.0..3.0);
            (vec![m(rng, r, c)], Box::new(move |t, v| t.scale(v[0], s)))
        }
        "add_scalar" => {
            let s = rng.random_range(-3.0..3.0);
            (vec![m(rng, r, c)], Box::new(move |t, v| t.add_scalar(v[0], s)))
        }
        "add_row" => (vec![m(rng, r, c), m(rng, 1, c)], Box::new(|t, v| t.add_row(v[0], v[1]))),
        "mul_col" => (vec![m(rng, r, c), m(rng, r, 1)], Box::new(|t, v| t.mul_col(v[0], v[1]))),
        "scale_by" => (vec![m(rng, r, c), m(rng, 1, 1)], Box::new(|t, v| t.scale_by(v[0], v[1]))),
        "matmul" => {
            let k = rng.random_range(1..=5);
            (vec![m(rng, r, k), m(rng, k, c)], Box::new(|t, v| t.matmul(v[0], v[1])))
        }
        "gather_rows" => {
            let len = rng.random_range(1..=6);
            let idx = indices(rng, len, r);
            (vec![m(rng, r, c)], Box::new(move |t, v| t.gather_rows(v[0], &idx)))
        }
        "segment_sum" => {
            let segs = rng.random_range(1..=3);
            let seg = indices(rng, r, segs);
            (vec![m(rng, r, c)], Box::new(move |t, v| t.segment_sum(v[0], &seg, segs)))
        }
        "square" => (vec![m(rng, r, c)], Box::new(|t, v| t.unary(UnaryFn::Square, v[0]))),
        "sqrt" => (vec![uniform(rng, r, c, 0.5, 3.0)], Box::new(|t, v| t.unary(UnaryFn::Sqrt, v[0]))),
        "l2_norm" => (vec![m(rng, r, c)], Box::new(|t, v| t.l2_norm(v[0]))),
        "row_norms" => (vec![uniform(rng, r, c, 0.2, 2.0)], Box::new(|t, v| t.row_norms(v[0]))),
        "sum" => (vec![m(rng, r, c)], Box::new(|t, v| t.sum(v[0]))),
        "mean" => (vec![m(rng, r, c)], Box::new(|t, v| t.mean(v[0]))),
        "concat_cols" => {
            let c2 = rng.random_range(1..=3);
            (vec![m(rng, r, c), m(rng, r, c2)], Box::new(|t, v| t.concat_cols(&[v[0], v[1]])))
        }
        "edge_message" => {
            let edges = rng.random_range(1..=6);
            let src = indices(rng, edges, r);
            let n_out = rng.random_range(1..=4);
            let dst = indices(rng, edges, n_out);
            let act = Activation::ALL[rng.random_range(0..Activation::ALL.len())];
            (
                vec![m(rng, edges, c), m(rng, r, c), m(rng, 1, c)],
                Box::new(move |t, v| t.edge_message(v[0], v[1], v[2], &src, &dst, n_out, act)),
            )
        }
        act => {
            let a: Activation = act.parse().expect("activation primitive");
            (vec![uniform(rng, r, c, -4.0, 4.0)], Box::new(move |t, v| t.activation(a, v[0])))
        }
    }
}

/// Every tape primitive, each activation counted separately.
pub const PRIMITIVES: &[&str] = &[
    "add",
    "sub",
    "neg",
    "mul",
    "scale",
    "add_scalar",
    "add_row",
    "mul_col",
    "scale_by",
    "matmul",
    "gather_rows",
    "segment_sum",
    "square",
    "sqrt",
    "l2_norm",
    "row_norms",
    "sum",
    "mean",
    "concat_cols",
    "edge_message",
    "silu",
    "mish",
    "shifted-softplus",
    "bent-identity",
];

/// Worst relative gradient error of one primitive over random instances.
pub fn primitive_grad_error(name: &str, instances: usize, seed: u64) -> Result<f64> {
    let stream = name.bytes().fold(7u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
    let mut worst = 0.0f64;
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, stream, i as u64));
        let (inputs, op) = primitive_instance(name, &mut rng);
        worst = worst.max(check_instance(&mut rng, &inputs, &op)?);
    }
    Ok(worst)
}

pub fn primitive_gradients(cfg: &CheckConfig) -> Result<PropertyOutcome> {
    let mut worst = (0.0f64, "");
    for name in PRIMITIVES {
        let e = primitive_grad_error(name, cfg.grad_instances, cfg.seed)?;
        if e >= worst.0 {
            worst = (e, name);
        }
    }
    Ok(PropertyOutcome::judged(
        "gradcheck_primitives",
        worst.0,
        GRAD_TOL,
        true,
        format!("{} primitives x {} instances, worst {}", PRIMITIVES.len(), cfg.grad_instances, worst.1),
    ))
}

pub fn water() -> Molecule {
    Molecule::new(
        vec![8, 1, 1],
        vec![[0.0, 0.0, 0.1173], [0.0, 0.7572, -0.4692], [0.0, -0.7572, -0.4692]],
    )
    .expect("valid geometry")
    .with_label(1.85)
}

/// Gradient of the training loss on one water molecule with respect to the
/// model parameters.
pub fn end_to_end_gradient(cfg: &CheckConfig) -> Result<PropertyOutcome> {
    let model = model_for(cfg, 7, 0)?;
    let mol = water();
    let graph = model.graph(&mol)?;
    let batch = GraphBatch::new([&graph]);
    let labels = [mol.dipole_label.unwrap_or(0.0)];
    let stride = model.num_parameters().div_ceil(cfg.grad_param_probes.max(1));
    let err = grad_check_params(
        &model.store,
        |tape, store| {
            let mut probe = model.clone();
            probe.store = store.clone();
            let preds = probe.forward_batch(tape, &batch)?;
            rmse_norm_loss(tape, &labels, preds)
        },
        GRAD_STEP,
        stride,
    )?;
    Ok(PropertyOutcome::judged(
        format!("gradcheck_loss[{}]", cfg.model.variant),
        err,
        GRAD_TOL,
        true,
        format!("water, 1 in {stride} of {} parameters", model.num_parameters()),
    ))
}

/// Bent-identity values and monotonicity, shifted-softplus at zero, and
/// gradients of every activation.
pub fn activation_suite(cfg: &CheckConfig) -> Result<Vec<PropertyOutcome>> {
    let bent = Activation::BentIdentity;
    let expected = [
        (-1.0, (SQRT_2 - 1.0) / 2.0 - 1.0),
        (0.0, 0.0),
        (1.0, (SQRT_2 - 1.0) / 2.0 + 1.0),
    ];
    let value_err = expected
        .iter()
        .map(|&(x, y)| (bent.apply(x) - y).abs())
        .fold(0.0, f64::max);

    let n = 100_000;
    let grid: Vec<f64> = (0..n).map(|i| -50.0 + 100.0 * i as f64 / (n - 1) as f64).collect();
    let violations = grid
        .windows(2)
        .filter(|w| bent.apply(w[1]) <= bent.apply(w[0]))
        .count();

    let mut grad = (0.0f64, "");
    for a in Activation::ALL {
        let e = primitive_grad_error(a.name(), cfg.grad_instances, cfg.seed)?;
        if e >= grad.0 {
            grad = (e, a.name());
        }
    }

    Ok(vec![
        PropertyOutcome::judged("bent_identity_values", value_err, 1e-12, true, "x in {-1, 0, 1}".into()),
        PropertyOutcome::judged(
            "bent_identity_monotone",
            violations as f64,
            0.0,
            true,
            format!("{n}-point grid on [-50, 50]"),
        ),
        PropertyOutcome::judged(
            "shifted_softplus_zero",
            Activation::ShiftedSoftplus.apply(0.0).abs(),
            1e-15,
            true,
            String::new(),
        ),
        PropertyOutcome::judged("gradcheck_activations", grad.0, GRAD_TOL, true, format!("worst {}", grad.1)),
    ])
}

/// The whole suite on the given molecules.
pub fn run_suite(cfg: &CheckConfig, molecules: &[Molecule]) -> Result<Vec<PropertyOutcome>> {
    let mut out = vec![
        direction_invariance(cfg, EmbedVariant::PaperLiteral)?,
        direction_invariance(cfg, EmbedVariant::StrictEquivariant)?,
    ];
    if cfg.model.variant == EmbedVariant::NonsymEdge {
        out.push(direction_invariance(cfg, EmbedVariant::NonsymEdge)?);
    }
    out.push(rotation_equivariance(cfg, molecules)?);
    out.push(translation_permutation_invariance(cfg, molecules)?);
    out.push(centrosymmetric_null(cfg)?);
    out.push(primitive_gradients(cfg)?);
    out.push(end_to_end_gradient(cfg)?);
    out.extend(activation_suite(cfg)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(variant: EmbedVariant) -> CheckConfig {
        CheckConfig {
            model: ModelConfig {
                n_layers: 2,
                hidden: 8,
                atom_embed_dim: 4,
                distance_basis: 6,
                angle_basis: 4,
                gate_hidden: 4,
                variant,
                ..ModelConfig::default()
            },
            seed: 5,
            direction_draws: 10,
            molecules: 4,
            rotations: 2,
            acene_max: 2,
            acene_draws: 2,
            grad_instances: 3,
            grad_param_probes: 200,
        }
    }

    #[test]
    fn strict_suite_passes() {
        let cfg = tiny(EmbedVariant::StrictEquivariant);
        let mols = synthetic_molecules(cfg.molecules, 1);
        for o in run_suite(&cfg, &mols).unwrap() {
            assert_eq!(o.status, Status::Pass, "{o}");
        }
    }

    #[test]
    fn literal_rotation_is_reported_with_a_nonzero_violation() {
        let cfg = tiny(EmbedVariant::PaperLiteral);
        let o = rotation_equivariance(&cfg, &synthetic_molecules(3, 2)).unwrap();
        assert_eq!(o.status, Status::Reported);
        assert!(o.measured > 1e-6, "{o}");
        assert!(o.to_string().contains("measured violation: "));
    }

    #[test]
    fn nonsym_edge_breaks_direction_invariance() {
        let o = direction_invariance(&tiny(EmbedVariant::NonsymEdge), EmbedVariant::NonsymEdge).unwrap();
        assert_eq!(o.status, Status::Reported);
        assert!(o.measured > 0.0);
    }

    #[test]
    fn a_wrong_gradient_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inputs = vec![uniform(&mut rng, 2, 2, -1.0, 1.0)];
        // a plain copy claims a zero gradient for a cubic
        let op: Primitive = Box::new(|t, v| {
            let c = t.constant(t.value(v[0]).map(|x| x * x * x));
            Ok(c)
        });
        assert!(check_instance(&mut rng, &inputs, &op).unwrap() > 0.1);
    }

    #[test]
    fn outcome_lines() {
        let pass = PropertyOutcome::judged("p", 1e-12, 1e-9, true, String::new());
        let fail = PropertyOutcome::judged("p", 1e-3, 1e-9, true, String::new());
        assert!(pass.to_string().starts_with("PASS p"));
        assert!(fail.to_string().starts_with("FAIL p"));
        assert!(!fail.passed());
    }
}
