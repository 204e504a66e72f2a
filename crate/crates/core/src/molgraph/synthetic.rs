use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{norm3, sub3, Molecule};

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = norm3(v);
        if n > 1e-6 {
            return v.map(|x| x / n);
        }
    }
}

/// Random small molecule with QM9's species and size range.
///
/// Heavy atoms (C, N, O, F; at most 9) grow as a random tree with bond lengths
/// in 1.2–1.55 Å, then hydrogens are attached at 1.0–1.1 Å. Every pair is at
/// least 0.9 Å apart. The geometry is plausible in scale only, not chemistry.
pub fn random_organic_molecule<R: Rng + ?Sized>(rng: &mut R, max_heavy: usize) -> Molecule {
    let n_heavy = rng.random_range(1..=max_heavy.clamp(1, 9));
    let mut z: Vec<u32> = Vec::new();
    let mut pos: Vec<[f64; 3]> = Vec::new();
    let clear = |pos: &[[f64; 3]], p: [f64; 3], skip: usize, min: f64| {
        pos.iter()
            .enumerate()
            .all(|(i, q)| i == skip || norm3(sub3(*q, p)) >= min)
    };

    z.push(6);
    pos.push([0.0; 3]);
    while z.len() < n_heavy {
        let parent = rng.random_range(0..z.len());
        let bond = rng.random_range(1.2..1.55);
        let d = random_direction(rng);
        let p = [
            pos[parent][0] + bond * d[0],
            pos[parent][1] + bond * d[1],
            pos[parent][2] + bond * d[2],
        ];
        if clear(&pos, p, parent, 1.3) {
            let species = match rng.random_range(0..10) {
                0..=5 => 6,
                6 | 7 => 7,
                8 => 8,
                _ => 9,
            };
            z.push(species);
            pos.push(p);
        }
    }

    for heavy in 0..n_heavy {
        let slots = match z[heavy] {
            6 => rng.random_range(0..=3),
            7 => rng.random_range(0..=2),
            8 => rng.random_range(0..=1),
            _ => 0,
        };
        for _ in 0..slots {
            for _attempt in 0..20 {
                let bond = rng.random_range(1.0..1.1);
                let d = random_direction(rng);
                let p = [
                    pos[heavy][0] + bond * d[0],
                    pos[heavy][1] + bond * d[1],
                    pos[heavy][2] + bond * d[2],
                ];
                if clear(&pos, p, heavy, 0.9) {
                    z.push(1);
                    pos.push(p);
                    break;
                }
            }
        }
    }
    if z.len() == 1 {
        // keep at least one pair so a graph exists
        z.push(1);
        pos.push([1.09, 0.0, 0.0]);
    }
    Molecule::new(z, pos).expect("generator keeps atoms apart")
}

/// Dipole norm (Debye) of fixed per-element point charges about the centroid,
/// a smooth toy target for synthetic molecules.
pub fn point_charge_dipole(mol: &Molecule) -> f64 {
    const E_ANGSTROM_IN_DEBYE: f64 = 4.803_204;
    let c = mol.centroid();
    let mut mu = [0.0; 3];
    for (&z, p) in mol.atomic_numbers.iter().zip(&mol.positions) {
        let q = match z {
            1 => 0.12,
            6 => -0.05,
            7 => -0.30,
            8 => -0.40,
            9 => -0.25,
            _ => 0.0,
        };
        for k in 0..3 {
            mu[k] += q * (p[k] - c[k]);
        }
    }
    E_ANGSTROM_IN_DEBYE * norm3(mu)
}

/// `n` random molecules labeled with [`point_charge_dipole`].
pub fn labeled_synthetic_set<R: Rng + ?Sized>(rng: &mut R, n: usize, max_heavy: usize) -> Vec<Molecule> {
    (0..n)
        .map(|i| {
            let m = random_organic_molecule(rng, max_heavy);
            let label = point_charge_dipole(&m);
            m.with_label(label).with_id(format!("syn_{i}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sizes_and_species() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = random_organic_molecule(&mut rng, 9);
            assert!(m.n_atoms() >= 2 && m.n_atoms() <= 9 + 27);
            assert!(m.atomic_numbers.iter().all(|z| [1, 6, 7, 8, 9].contains(z)));
            assert!(m.min_distance() >= 0.9 - 1e-12);
        }
    }

    #[test]
    fn point_charge_label() {
        // one H at +x and one O at -x, 1 Å from the centroid each
        let m = Molecule::new(vec![1, 8], vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
        let expected = 4.803204 * (0.12 * 1.0 + 0.40 * 1.0);
        assert!((point_charge_dipole(&m) - expected).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = labeled_synthetic_set(&mut rng, 5, 4);
        assert!(set.iter().all(|m| m.dipole_label.unwrap() >= 0.0 && m.id.is_some()));
    }
}
