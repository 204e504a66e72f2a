use crate::error::{Error, Result};

use super::{dot3, norm3, sub3, Molecule};

/// Directed cutoff graph. Edges are sorted by `(src, dst)`; edge `(i, j)` carries
/// the displacement `r_ij = p_j - p_i` and distance `d_ij = |r_ij|`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomBondGraph {
    pub n_atoms: usize,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub disp: Vec<[f64; 3]>,
    pub dist: Vec<f64>,
    /// `reverse[e]` is the id of the edge running the other way.
    pub reverse: Vec<usize>,
}

impl AtomBondGraph {
    pub fn n_edges(&self) -> usize {
        self.src.len()
    }

    /// Undirected degree of every atom.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_atoms];
        for &s in &self.src {
            deg[s] += 1;
        }
        deg
    }

    /// Edge ids `(i, j)` with `i < j`, one per unordered pair, in edge order.
    pub fn canonical_edges(&self) -> Vec<usize> {
        (0..self.n_edges()).filter(|&e| self.src[e] < self.dst[e]).collect()
    }

    pub fn find_edge(&self, i: usize, j: usize) -> Option<usize> {
        (0..self.n_edges()).find(|&e| self.src[e] == i && self.dst[e] == j)
    }
}

/// Line graph of an [`AtomBondGraph`]: node `e` is directed edge `e`; a line edge
/// runs from edge `k→j` to edge `j→i` for every `k != i`.
#[derive(Clone, Debug, PartialEq)]
pub struct BondAngleGraph {
    pub n_nodes: usize,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// Cosine of the angle at the shared atom `j` between bonds `j→k` and `j→i`.
    pub cos: Vec<f64>,
}

impl BondAngleGraph {
    pub fn n_edges(&self) -> usize {
        self.src.len()
    }
}

/// Connects every ordered pair closer than `cutoff` (strict inequality).
pub fn build_atom_bond_graph(mol: &Molecule, cutoff: f64) -> Result<AtomBondGraph> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Err(Error::Config(format!("cutoff must be positive, got {cutoff}")));
    }
    let n = mol.n_atoms();
    if n < 2 {
        return Err(Error::Degenerate(format!("{n} atom(s); at least 2 required")));
    }
    let mut g = AtomBondGraph {
        n_atoms: n,
        src: Vec::new(),
        dst: Vec::new(),
        disp: Vec::new(),
        dist: Vec::new(),
        reverse: Vec::new(),
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = sub3(mol.positions[j], mol.positions[i]);
            let d = norm3(r);
            if d < cutoff {
                g.src.push(i);
                g.dst.push(j);
                g.disp.push(r);
                g.dist.push(d);
            }
        }
    }
    if g.src.is_empty() {
        return Err(Error::Degenerate(format!(
            "no atom pair lies within the {cutoff} Å cutoff"
        )));
    }
    // Edges are sorted by (src, dst), so the reverse of (i, j) is found by binary search.
    let keys: Vec<(usize, usize)> = g.src.iter().copied().zip(g.dst.iter().copied()).collect();
    g.reverse = keys
        .iter()
        .map(|&(i, j)| keys.binary_search(&(j, i)).expect("pair distances are symmetric"))
        .collect();
    Ok(g)
}

pub fn build_bond_angle_graph(g: &AtomBondGraph) -> BondAngleGraph {
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); g.n_atoms];
    for e in 0..g.n_edges() {
        incoming[g.dst[e]].push(e);
    }
    let mut lg = BondAngleGraph {
        n_nodes: g.n_edges(),
        src: Vec::new(),
        dst: Vec::new(),
        cos: Vec::new(),
    };
    for out in 0..g.n_edges() {
        let (j, i) = (g.src[out], g.dst[out]);
        let r_ji = g.disp[out];
        for &inc in &incoming[j] {
            let k = g.src[inc];
            if k == i {
                continue;
            }
            // bond vectors leaving the shared atom j
            let r_jk = g.disp[g.reverse[inc]];
            let c = dot3(r_jk, r_ji) / (g.dist[inc] * g.dist[out]);
            lg.src.push(inc);
            lg.dst.push(out);
            lg.cos.push(c.clamp(-1.0, 1.0));
        }
    }
    lg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::generate_acene;

    fn water() -> Molecule {
        let a = 0.9572f64;
        let half = 104.52f64.to_radians() / 2.0;
        Molecule::new(
            vec![8, 1, 1],
            vec![
                [0.0, 0.0, 0.0],
                [a * half.sin(), a * half.cos(), 0.0],
                [-a * half.sin(), a * half.cos(), 0.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn hydrogen_molecule() {
        let m = Molecule::new(vec![1, 1], vec![[0.0; 3], [0.74, 0.0, 0.0]]).unwrap();
        let g = build_atom_bond_graph(&m, 5.0).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert!(g.dist.iter().all(|&d| (d - 0.74).abs() < 1e-15));
        assert_eq!(build_bond_angle_graph(&g).n_edges(), 0);
    }

    #[test]
    fn water_graph_and_angles() {
        let g = build_atom_bond_graph(&water(), 5.0).unwrap();
        assert_eq!(g.n_edges(), 6);
        // law of cosines for the H···H separation
        let a = 0.9572f64;
        let hh = (2.0 * a * a - 2.0 * a * a * 104.52f64.to_radians().cos()).sqrt();
        assert!((hh - 1.5139).abs() < 1e-4);
        let e = g.find_edge(1, 2).unwrap();
        assert!((g.dist[e] - hh).abs() < 1e-12);

        let lg = build_bond_angle_graph(&g);
        assert_eq!(lg.n_edges(), 6);
        let centered_at_o: Vec<f64> = (0..lg.n_edges())
            .filter(|&l| g.dst[lg.src[l]] == 0)
            .map(|l| lg.cos[l])
            .collect();
        assert_eq!(centered_at_o.len(), 2);
        for c in centered_at_o {
            assert!((c - 104.52f64.to_radians().cos()).abs() < 1e-12);
            assert!((c + 0.2507).abs() < 1e-4);
        }
    }

    #[test]
    fn collinear_triplet_has_cosine_minus_one() {
        let m = Molecule::new(vec![6, 6, 6], vec![[-1.2, 0.0, 0.0], [0.0; 3], [1.3, 0.0, 0.0]]).unwrap();
        let g = build_atom_bond_graph(&m, 2.0).unwrap();
        let lg = build_bond_angle_graph(&g);
        assert_eq!(lg.n_edges(), 2);
        assert!(lg.cos.iter().all(|&c| c == -1.0));
    }

    #[test]
    fn benzene_with_short_cutoff() {
        let g = build_atom_bond_graph(&generate_acene(1).unwrap(), 2.0).unwrap();
        assert_eq!(g.n_edges(), 24);
        let deg = g.degrees();
        for (z, d) in generate_acene(1).unwrap().atomic_numbers.iter().zip(deg) {
            assert_eq!(d, if *z == 6 { 3 } else { 1 });
        }
    }

    #[test]
    fn edges_are_symmetric_bit_exactly() {
        let g = build_atom_bond_graph(&generate_acene(2).unwrap(), 5.0).unwrap();
        for e in 0..g.n_edges() {
            let r = g.reverse[e];
            assert_eq!((g.src[r], g.dst[r]), (g.dst[e], g.src[e]));
            for k in 0..3 {
                assert_eq!(g.disp[r][k], -g.disp[e][k]);
            }
            assert_eq!(g.dist[r].to_bits(), g.dist[e].to_bits());
            assert!(g.dist[e] < 5.0);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let one = Molecule::new(vec![1], vec![[0.0; 3]]).unwrap();
        assert!(matches!(build_atom_bond_graph(&one, 5.0), Err(Error::Degenerate(_))));
        let far = Molecule::new(vec![1, 1], vec![[0.0; 3], [10.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(build_atom_bond_graph(&far, 5.0), Err(Error::Degenerate(_))));
        assert!(build_atom_bond_graph(&water(), 0.0).is_err());
    }

    #[test]
    fn cutoff_is_strict() {
        let m = Molecule::new(vec![1, 1], vec![[0.0; 3], [2.0, 0.0, 0.0]]).unwrap();
        assert!(build_atom_bond_graph(&m, 2.0).is_err());
        assert_eq!(build_atom_bond_graph(&m, 2.0 + 1e-12).unwrap().n_edges(), 2);
    }
}
