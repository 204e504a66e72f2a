use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::Molecule;

const ORTHO_TOL: f64 = 1e-12;

/// Proper rotation, translation and optional atom relabeling.
///
/// Applied as `p -> R p + t`; with a permutation, new atom `k` is old atom `perm[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidTransform {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    permutation: Option<Vec<usize>>,
}

impl RigidTransform {
    pub fn new(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Result<Self> {
        let dev = orthogonality_defect(&rotation);
        if dev > ORTHO_TOL {
            return Err(Error::InvalidTransform(format!(
                "rotation is not orthogonal (max |RᵀR - I| = {dev:e})"
            )));
        }
        let det = det3(&rotation);
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(Error::InvalidTransform(format!("det R = {det}, expected +1")));
        }
        if translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTransform("non-finite translation".into()));
        }
        Ok(RigidTransform {
            rotation,
            translation,
            permutation: None,
        })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: IDENTITY,
            translation: [0.0; 3],
            permutation: None,
        }
    }

    pub fn translation(t: [f64; 3]) -> Result<Self> {
        RigidTransform::new(IDENTITY, t)
    }

    /// Rotation by `angle` radians about a unit `axis`.
    pub fn axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let [x, y, z] = axis.map(|v| v / n);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        RigidTransform::new(
            [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
            [0.0; 3],
        )
    }

    pub fn with_permutation(mut self, perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidTransform("permutation is not a bijection".into()));
            }
        }
        self.permutation = Some(perm);
        Ok(self)
    }

    pub fn rotation(&self) -> &[[f64; 3]; 3] {
        &self.rotation
    }

    pub fn translation_vector(&self) -> [f64; 3] {
        self.translation
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        [
            r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
            r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
            r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
        ]
    }

    fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        if self.rotation == IDENTITY && self.translation == [0.0; 3] {
            return p;
        }
        let q = if self.rotation == IDENTITY { p } else { self.rotate(p) };
        [
            q[0] + self.translation[0],
            q[1] + self.translation[1],
            q[2] + self.translation[2],
        ]
    }
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Max entry of `|RᵀR - I|`.
pub(crate) fn orthogonality_defect(m: &[[f64; 3]; 3]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
            worst = worst.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

/// Moves every atom rigidly (and relabels, if a permutation is present).
/// Labels and ids are carried through.
pub fn apply_transform(mol: &Molecule, t: &RigidTransform) -> Result<Molecule> {
    let n = mol.n_atoms();
    let order: Vec<usize> = match &t.permutation {
        Some(p) if p.len() != n => {
            return Err(Error::InvalidTransform(format!(
                "permutation of length {} for {n} atoms",
                p.len()
            )))
        }
        Some(p) => p.clone(),
        None => (0..n).collect(),
    };
    Ok(Molecule {
        atomic_numbers: order.iter().map(|&i| mol.atomic_numbers[i]).collect(),
        positions: order.iter().map(|&i| t.apply_point(mol.positions[i])).collect(),
        dipole_label: mol.dipole_label,
        id: mol.id.clone(),
    })
}

/// Haar-uniform proper rotation from a normalized Gaussian quaternion.
pub fn random_rotation(seed: u64) -> RigidTransform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-8 {
            continue;
        }
        let [w, x, y, z] = q.map(|v| v / n);
        let rotation = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ];
        return RigidTransform::new(rotation, [0.0; 3]).expect("unit quaternion gives a rotation");
    }
}
