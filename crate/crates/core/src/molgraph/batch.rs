use crate::error::Result;

use super::{build_atom_bond_graph, build_bond_angle_graph, AtomBondGraph, BondAngleGraph, Molecule};

/// A molecule with its cutoff graph and line graph, built once and reused.
#[derive(Clone, Debug)]
pub struct MolGraph {
    pub atomic_numbers: Vec<u32>,
    pub graph: AtomBondGraph,
    pub angles: BondAngleGraph,
    /// Positions relative to the molecule's centroid.
    pub centered: Vec<[f64; 3]>,
    pub label: Option<f64>,
    pub id: Option<String>,
}

impl MolGraph {
    pub fn build(mol: &Molecule, cutoff: f64) -> Result<Self> {
        mol.validate()?;
        let graph = build_atom_bond_graph(mol, cutoff)?;
        let angles = build_bond_angle_graph(&graph);
        let c = mol.centroid();
        Ok(MolGraph {
            atomic_numbers: mol.atomic_numbers.clone(),
            centered: mol
                .positions
                .iter()
                .map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]])
                .collect(),
            graph,
            angles,
            label: mol.dipole_label,
            id: mol.id.clone(),
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.atomic_numbers.len()
    }
}

/// Disjoint union of several molecular graphs. Indices are offset so no edge
/// or angle ever spans two molecules.
#[derive(Clone, Debug, Default)]
pub struct GraphBatch {
    pub n_molecules: usize,
    pub atomic_numbers: Vec<u32>,
    pub atom_owner: Vec<usize>,
    pub centered: Vec<[f64; 3]>,
    pub edge_src: Vec<usize>,
    pub edge_dst: Vec<usize>,
    pub edge_disp: Vec<[f64; 3]>,
    pub edge_dist: Vec<f64>,
    pub edge_reverse: Vec<usize>,
    pub line_src: Vec<usize>,
    pub line_dst: Vec<usize>,
    pub line_cos: Vec<f64>,
    /// Canonical (`src < dst`) edge of every unordered pair.
    pub pair_edges: Vec<usize>,
    pub pair_owner: Vec<usize>,
    pub labels: Vec<Option<f64>>,
}

impl GraphBatch {
    pub fn new<'a>(graphs: impl IntoIterator<Item = &'a MolGraph>) -> Self {
        let mut b = GraphBatch::default();
        for (m, mg) in graphs.into_iter().enumerate() {
            let atom_off = b.atomic_numbers.len();
            let edge_off = b.edge_src.len();
            let g = &mg.graph;
            b.atomic_numbers.extend_from_slice(&mg.atomic_numbers);
            b.atom_owner.extend(std::iter::repeat_n(m, mg.n_atoms()));
            b.centered.extend_from_slice(&mg.centered);
            b.edge_src.extend(g.src.iter().map(|i| i + atom_off));
            b.edge_dst.extend(g.dst.iter().map(|i| i + atom_off));
            b.edge_disp.extend_from_slice(&g.disp);
            b.edge_dist.extend_from_slice(&g.dist);
            b.edge_reverse.extend(g.reverse.iter().map(|e| e + edge_off));
            b.line_src.extend(mg.angles.src.iter().map(|e| e + edge_off));
            b.line_dst.extend(mg.angles.dst.iter().map(|e| e + edge_off));
            b.line_cos.extend_from_slice(&mg.angles.cos);
            for e in g.canonical_edges() {
                b.pair_edges.push(e + edge_off);
                b.pair_owner.push(m);
            }
            b.labels.push(mg.label);
            b.n_molecules += 1;
        }
        b
    }

    pub fn n_atoms(&self) -> usize {
        self.atomic_numbers.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_src.len()
    }

    pub fn n_line_edges(&self) -> usize {
        self.line_src.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::generate_acene;

    #[test]
    fn offsets_keep_molecules_disjoint() {
        let a = MolGraph::build(&generate_acene(1).unwrap(), 2.0).unwrap();
        let b = MolGraph::build(&generate_acene(2).unwrap(), 2.0).unwrap();
        let batch = GraphBatch::new([&a, &b]);
        assert_eq!(batch.n_molecules, 2);
        assert_eq!(batch.n_atoms(), 12 + 18);
        assert_eq!(batch.n_edges(), a.graph.n_edges() + b.graph.n_edges());
        for e in 0..batch.n_edges() {
            let (s, d) = (batch.edge_src[e], batch.edge_dst[e]);
            assert_eq!(batch.atom_owner[s], batch.atom_owner[d]);
            let r = batch.edge_reverse[e];
            assert_eq!((batch.edge_src[r], batch.edge_dst[r]), (d, s));
        }
        for l in 0..batch.n_line_edges() {
            let shared_in = batch.edge_dst[batch.line_src[l]];
            assert_eq!(shared_in, batch.edge_src[batch.line_dst[l]]);
        }
        assert_eq!(batch.pair_edges.len(), batch.n_edges() / 2);
    }
}
