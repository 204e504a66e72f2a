use crate::error::{Error, Result};

use super::{norm3, sub3, Molecule};

/// Aromatic C–C bond length (Å).
pub const ACENE_CC: f64 = 1.40;
/// C–H bond length (Å).
pub const ACENE_CH: f64 = 1.09;

/// Planar linear acene with `n_rings` fused hexagons in the xy-plane, centered
/// at the origin: C_{4n+2} H_{2n+4}.
///
/// Carbons are listed first. Every peripheral carbon carries a hydrogen along
/// the exterior bisector of its C–C–C angle.
pub fn generate_acene(n_rings: usize) -> Result<Molecule> {
    if n_rings < 1 {
        return Err(Error::Invalid("an acene needs at least one ring".into()));
    }
    let a = ACENE_CC;
    let half_w = a * 3f64.sqrt() / 2.0;
    // Ring centers sit on the x axis with spacing 2·half_w, symmetric about 0.
    let centers: Vec<f64> = (0..n_rings)
        .map(|k| (2.0 * k as f64 - (n_rings - 1) as f64) * half_w)
        .collect();

    let mut carbons: Vec<[f64; 3]> = Vec::new();
    let mut push_unique = |p: [f64; 3]| {
        if !carbons.iter().any(|q| norm3(sub3(*q, p)) < 1e-6) {
            carbons.push(p);
        }
    };
    for &cx in &centers {
        for (dx, dy) in [
            (0.0, a),
            (half_w, a / 2.0),
            (half_w, -a / 2.0),
            (0.0, -a),
            (-half_w, -a / 2.0),
            (-half_w, a / 2.0),
        ] {
            push_unique([cx + dx, dy, 0.0]);
        }
    }

    let mut hydrogens = Vec::new();
    for (i, &c) in carbons.iter().enumerate() {
        let neighbors: Vec<[f64; 3]> = carbons
            .iter()
            .enumerate()
            .filter(|&(j, q)| j != i && (norm3(sub3(*q, c)) - a).abs() < 1e-6)
            .map(|(_, q)| *q)
            .collect();
        if neighbors.len() != 2 {
            continue;
        }
        let mut inward = [0.0; 3];
        for q in &neighbors {
            let u = sub3(*q, c);
            let n = norm3(u);
            for k in 0..3 {
                inward[k] += u[k] / n;
            }
        }
        let n = norm3(inward);
        hydrogens.push([
            c[0] - ACENE_CH * inward[0] / n,
            c[1] - ACENE_CH * inward[1] / n,
            0.0,
        ]);
    }

    let mut atomic_numbers = vec![6; carbons.len()];
    atomic_numbers.extend(std::iter::repeat_n(1, hydrogens.len()));
    carbons.extend(hydrogens);
    Ok(Molecule::new(atomic_numbers, carbons)?.with_id(format!("acene-{n_rings}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas() {
        for n in 1..=6 {
            let m = generate_acene(n).unwrap();
            assert_eq!(m.formula(), vec![(1, 2 * n + 4), (6, 4 * n + 2)]);
        }
        assert_eq!(generate_acene(1).unwrap().n_atoms(), 12);
        assert_eq!(generate_acene(2).unwrap().n_atoms(), 18);
        assert_eq!(generate_acene(3).unwrap().n_atoms(), 24);
        assert!(generate_acene(0).is_err());
    }

    #[test]
    fn bond_lengths() {
        let m = generate_acene(3).unwrap();
        for i in 0..m.n_atoms() {
            if m.atomic_numbers[i] != 1 {
                continue;
            }
            let nearest = (0..m.n_atoms())
                .filter(|&j| j != i)
                .map(|j| m.distance(i, j))
                .fold(f64::INFINITY, f64::min);
            assert!((nearest - ACENE_CH).abs() < 1e-12);
        }
        assert!((m.min_distance() - ACENE_CH).abs() < 1e-12);
    }

    #[test]
    fn inversion_maps_atoms_onto_same_species() {
        for n in 1..=6 {
            let m = generate_acene(n).unwrap();
            let c = m.centroid();
            for (i, p) in m.positions.iter().enumerate() {
                let image = [2.0 * c[0] - p[0], 2.0 * c[1] - p[1], 2.0 * c[2] - p[2]];
                let (j, d) = (0..m.n_atoms())
                    .map(|j| (j, norm3(sub3(m.positions[j], image))))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(d <= 1e-9, "n={n} atom {i}: {d}");
                assert_eq!(m.atomic_numbers[i], m.atomic_numbers[j]);
            }
        }
    }
}
