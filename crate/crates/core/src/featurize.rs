//! Initial atom, bond and angle features.
//!
//! Distances and angle cosines are expanded on Gaussian radial bases and each
//! block is projected to the hidden width with its own linear layer.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::model::{layers::Linear, FeatureState, LineFeatures, LinearFactors};
use crate::molgraph::GraphBatch;
use crate::tensor::Tensor;

/// Gaussian basis `exp(-gamma (v - c_k)^2)` with centers equally spaced on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbfSpec {
    pub n_basis: usize,
    pub lo: f64,
    pub hi: f64,
    pub gamma: f64,
}

impl RbfSpec {
    pub fn new(n_basis: usize, lo: f64, hi: f64, gamma: f64) -> Result<Self> {
        let spec = RbfSpec { n_basis, lo, hi, gamma };
        spec.validate()?;
        Ok(spec)
    }

    /// Width set from the center spacing: `gamma = 1 / spacing^2`.
    pub fn spaced(n_basis: usize, lo: f64, hi: f64) -> Result<Self> {
        if n_basis < 2 {
            return Err(Error::Config(format!("rbf needs at least 2 centers, got {n_basis}")));
        }
        let spacing = (hi - lo) / (n_basis - 1) as f64;
        RbfSpec::new(n_basis, lo, hi, 1.0 / (spacing * spacing))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_basis < 2 {
            return Err(Error::Config(format!("rbf needs at least 2 centers, got {}", self.n_basis)));
        }
        if self.hi.is_nan() || self.lo.is_nan() || self.hi <= self.lo {
            return Err(Error::Config(format!("rbf range [{}, {}] is empty", self.lo, self.hi)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("rbf width must be positive, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (self.hi - self.lo) * k as f64 / (self.n_basis - 1) as f64
    }
}

/// Responses below `exp(-RBF_TAIL)` are stored as exact zeros, which keeps
/// subnormal numbers out of the products downstream.
pub const RBF_TAIL: f64 = 50.0;

fn gaussian(gamma: f64, d: f64) -> f64 {
    let a = gamma * d * d;
    if a > RBF_TAIL {
        0.0
    } else {
        (-a).exp()
    }
}

pub fn rbf_expand(v: f64, spec: &RbfSpec) -> Vec<f64> {
    (0..spec.n_basis).map(|k| gaussian(spec.gamma, v - spec.center(k))).collect()
}

/// One expanded row per value.
pub fn rbf_matrix(values: &[f64], spec: &RbfSpec) -> Tensor {
    let mut data = Vec::with_capacity(values.len() * spec.n_basis);
    let centers: Vec<f64> = (0..spec.n_basis).map(|k| spec.center(k)).collect();
    for &v in values {
        data.extend(centers.iter().map(|c| gaussian(spec.gamma, v - c)));
    }
    Tensor::matrix(values.len(), spec.n_basis, data).expect("sized by construction")
}

/// Reads a species → feature-vector map, e.g. CGCNN atom features:
/// `{"1": [..], "6": [..]}` with every vector the same length.
pub fn parse_atom_features(json: &str) -> Result<BTreeMap<u32, Vec<f64>>> {
    let raw: BTreeMap<String, Vec<f64>> =
        serde_json::from_str(json).map_err(|e| Error::Config(format!("atom feature JSON: {e}")))?;
    let mut out = BTreeMap::new();
    let mut width = None;
    for (key, vec) in raw {
        let z: u32 = key
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("atom feature key {key:?} is not an atomic number")))?;
        match width {
            None => width = Some(vec.len()),
            Some(w) if w != vec.len() => {
                return Err(Error::Config(format!(
                    "atom feature for Z={z} has length {}, expected {w}",
                    vec.len()
                )))
            }
            _ => {}
        }
        if vec.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("atom feature for Z={z} is not finite")));
        }
        out.insert(z, vec);
    }
    if width.unwrap_or(0) == 0 {
        return Err(Error::Config("atom feature map is empty".into()));
    }
    Ok(out)
}

pub fn load_atom_features(path: &Path) -> Result<BTreeMap<u32, Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_atom_features(&text)
}

/// Per-species atom representation: learnable rows, or a fixed table.
#[derive(Clone, Debug)]
pub enum AtomTable {
    Learnable(ParamId),
    Fixed(Tensor),
}

#[derive(Clone, Debug)]
pub struct FeatureParams {
    pub species: Vec<u32>,
    pub table: AtomTable,
    pub atom_proj: Linear,
    pub bond_proj: Linear,
    pub angle_proj: Linear,
}

impl FeatureParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        species: &[u32],
        fixed: Option<&BTreeMap<u32, Vec<f64>>>,
        embed_dim: usize,
        distance_basis: usize,
        angle_basis: usize,
        hidden: usize,
    ) -> Result<Self> {
        let (table, width) = match fixed {
            Some(map) => {
                let width = map.values().next().map_or(0, Vec::len);
                let mut data = Vec::with_capacity(species.len() * width);
                for z in species {
                    let row = map.get(z).ok_or(Error::UnknownSpecies(*z))?;
                    data.extend_from_slice(row);
                }
                (AtomTable::Fixed(Tensor::matrix(species.len(), width, data)?), width)
            }
            None => {
                let data = (0..species.len() * embed_dim)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                let id = store.add("embed.atoms", Tensor::matrix(species.len(), embed_dim, data)?);
                (AtomTable::Learnable(id), embed_dim)
            }
        };
        Ok(FeatureParams {
            species: species.to_vec(),
            table,
            atom_proj: Linear::new(store, rng, "embed.atom_proj", width, hidden),
            bond_proj: Linear::new(store, rng, "embed.bond_proj", distance_basis, hidden),
            angle_proj: Linear::new(store, rng, "embed.angle_proj", angle_basis, hidden),
        })
    }

    pub fn species_index(&self, z: u32) -> Result<usize> {
        self.species
            .iter()
            .position(|&s| s == z)
            .ok_or(Error::UnknownSpecies(z))
    }
}

/// Row `i` is the table entry of atom `i`'s species.
pub fn embed_atoms(tape: &mut Tape, store: &ParamStore, atomic_numbers: &[u32], params: &FeatureParams) -> Result<Var> {
    let rows = atomic_numbers
        .iter()
        .map(|&z| params.species_index(z))
        .collect::<Result<Vec<_>>>()?;
    let table = match &params.table {
        AtomTable::Learnable(id) => tape.param(store, *id),
        AtomTable::Fixed(t) => tape.constant(t.clone()),
    };
    tape.gather_rows(table, &rows)
}

/// Initial `(x, y, z)` blocks for a batch.
pub fn init_features(
    tape: &mut Tape,
    store: &ParamStore,
    batch: &GraphBatch,
    params: &FeatureParams,
    distance_rbf: &RbfSpec,
    angle_rbf: &RbfSpec,
) -> Result<FeatureState> {
    let atoms = embed_atoms(tape, store, &batch.atomic_numbers, params)?;
    let x = params.atom_proj.forward(tape, store, atoms)?;
    let dist = tape.constant(rbf_matrix(&batch.edge_dist, distance_rbf));
    let y = params.bond_proj.forward(tape, store, dist)?;
    let basis = tape.constant(rbf_matrix(&batch.line_cos, angle_rbf));
    let weight = tape.param(store, params.angle_proj.weight);
    let bias = tape.param(store, params.angle_proj.bias);
    Ok(FeatureState {
        x,
        y,
        z: LineFeatures::Factored(LinearFactors { basis, weight, bias }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_check_params;
    use crate::molgraph::{generate_acene, MolGraph, Molecule};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rbf_peaks_and_symmetry() {
        let spec = RbfSpec::spaced(6, 0.0, 5.0).unwrap();
        assert_eq!(spec.gamma, 1.0);
        let at_center = rbf_expand(spec.center(3), &spec);
        assert_eq!(at_center[3], 1.0);
        let mid = rbf_expand(2.5, &spec);
        assert!((mid[2] - mid[3]).abs() < 1e-15);
    }

    #[test]
    fn rbf_direct_evaluation() {
        let spec = RbfSpec::new(6, 0.0, 5.0, 1.0).unwrap();
        let got = rbf_expand(2.0, &spec);
        let expected: Vec<f64> = [0.0f64, 1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|c| (-(2.0 - c) * (2.0 - c)).exp())
            .collect();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-15);
        }
        assert!((got[0] - (-4.0f64).exp()).abs() < 1e-15);
        let row = rbf_matrix(&[2.0], &spec);
        assert_eq!(row.data(), got.as_slice());
    }

    #[test]
    fn rbf_derivative_matches_finite_difference() {
        let spec = RbfSpec::spaced(16, 0.0, 5.0).unwrap();
        for i in 0..50 {
            let v = -0.5 + 0.123 * i as f64;
            let h = 1e-6;
            let up = rbf_expand(v + h, &spec);
            let down = rbf_expand(v - h, &spec);
            let at = rbf_expand(v, &spec);
            for k in 0..spec.n_basis {
                let analytic = -2.0 * spec.gamma * (v - spec.center(k)) * at[k];
                let numeric = (up[k] - down[k]) / (2.0 * h);
                assert!((analytic - numeric).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(RbfSpec::new(1, 0.0, 1.0, 1.0).is_err());
        assert!(RbfSpec::new(4, 1.0, 1.0, 1.0).is_err());
        assert!(RbfSpec::new(4, 0.0, 1.0, 0.0).is_err());
    }

    fn params(store: &mut ParamStore) -> FeatureParams {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        FeatureParams::new(store, &mut rng, &[1, 6, 7, 8, 9], None, 4, 8, 6, 5).unwrap()
    }

    #[test]
    fn embedding_rows_follow_species() {
        let mut store = ParamStore::new();
        let p = params(&mut store);
        let mut tape = Tape::new();
        let rows = embed_atoms(&mut tape, &store, &[6, 1, 1, 1, 1], &p).unwrap();
        let v = tape.value(rows);
        for i in 2..5 {
            assert_eq!(v.row(1), v.row(i));
        }
        assert_ne!(v.row(0), v.row(1));
        assert!(matches!(
            embed_atoms(&mut tape, &store, &[6, 17], &p),
            Err(Error::UnknownSpecies(17))
        ));
    }

    #[test]
    fn shared_table_rows_get_summed_gradients() {
        let mut store = ParamStore::new();
        let p = params(&mut store);
        let err = grad_check_params(
            &store,
            |tape, s| {
                let rows = embed_atoms(tape, s, &[6, 1, 1, 8, 1], &p)?;
                let sq = tape.mul(rows, rows)?;
                let w = tape.constant(Tensor::matrix(5, 1, vec![0.3, -1.2, 0.7, 2.0, 0.1]).unwrap());
                let ones = tape_ones(tape, 4);
                let wt = tape.matmul(sq, ones)?;
                let m = tape.mul(wt, w)?;
                tape.sum(m)
            },
            1e-6,
            1,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    fn tape_ones(tape: &mut Tape, n: usize) -> Var {
        tape.constant(Tensor::full(&[n, 1], 1.0))
    }

    #[test]
    fn bond_directions_share_initial_features() {
        let mut store = ParamStore::new();
        let p = params(&mut store);
        let water = Molecule::new(
            vec![8, 1, 1],
            vec![[0.0; 3], [0.7569, 0.5859, 0.0], [-0.7569, 0.5859, 0.0]],
        )
        .unwrap();
        let mg = MolGraph::build(&water, 5.0).unwrap();
        let batch = GraphBatch::new([&mg]);
        let dspec = RbfSpec::spaced(8, 0.0, 5.0).unwrap();
        let aspec = RbfSpec::spaced(6, -1.0, 1.0).unwrap();
        let mut tape = Tape::new();
        let f = init_features(&mut tape, &store, &batch, &p, &dspec, &aspec).unwrap();
        let y = tape.value(f.y);
        for e in 0..batch.n_edges() {
            assert_eq!(y.row(e), y.row(batch.edge_reverse[e]));
        }
        // both angle rows centered on O are the same angle
        let z = f.z.dense(&mut tape).unwrap();
        let z = tape.value(z);
        let at_o: Vec<usize> = (0..batch.n_line_edges())
            .filter(|&l| batch.edge_dst[batch.line_src[l]] == 0)
            .collect();
        assert_eq!(at_o.len(), 2);
        assert_eq!(z.row(at_o[0]), z.row(at_o[1]));
    }

    #[test]
    fn fixed_atom_features_from_json() {
        let map = parse_atom_features(r#"{"1": [0.1, 0.2], "6": [1.0, -1.0]}"#).unwrap();
        assert_eq!(map[&6], vec![1.0, -1.0]);
        assert!(parse_atom_features(r#"{"1": [0.1], "6": [1.0, -1.0]}"#).is_err());
        assert!(parse_atom_features(r#"{"H": [0.1]}"#).is_err());
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = FeatureParams::new(&mut store, &mut rng, &[1, 6], Some(&map), 3, 4, 4, 2).unwrap();
        let mut tape = Tape::new();
        let rows = embed_atoms(&mut tape, &store, &[6, 1], &p).unwrap();
        assert_eq!(tape.value(rows).data(), &[1.0, -1.0, 0.1, 0.2]);
        let benzene = MolGraph::build(&generate_acene(1).unwrap(), 3.0).unwrap();
        assert_eq!(benzene.n_atoms(), 12);
        assert!(FeatureParams::new(&mut store, &mut rng, &[1, 8], Some(&map), 3, 4, 4, 2).is_err());
    }
}
