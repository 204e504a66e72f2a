use std::collections::BTreeSet;

use dipnet::autodiff::{ParamStore, Tape};
use dipnet::dataio::{split_indices, SplitSpec};
use dipnet::featurize::{init_features, FeatureParams, RbfSpec};
use dipnet::molgraph::{
    apply_transform, build_atom_bond_graph, build_bond_angle_graph, random_organic_molecule, random_rotation,
    GraphBatch, MolGraph, RigidTransform,
};
use dipnet::train::PlateauScheduler;
use dipnet::{Activation, Molecule};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn molecule(seed: u64, max_heavy: usize) -> Molecule {
    random_organic_molecule(&mut ChaCha8Rng::seed_from_u64(seed), max_heavy)
}

/// Rotation, translation and relabeling from one seed, plus the permutation.
fn rigid_move(seed: u64, n: usize) -> (RigidTransform, Vec<usize>) {
    let rot = random_rotation(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let t = RigidTransform::new(*rot.rotation(), [3.0, -7.5, 0.25])
        .unwrap()
        .with_permutation(perm.clone())
        .unwrap();
    (t, perm)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_rotations_are_proper(seed in any::<u64>()) {
        let r = *random_rotation(seed).rotation();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expected).abs() <= 1e-12);
            }
        }
        prop_assert!((det3(&r) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cutoff_graph_survives_rigid_moves(seed in any::<u64>(), cutoff in 1.2f64..6.0) {
        let mol = molecule(seed, 9);
        let (t, perm) = rigid_move(seed, mol.n_atoms());
        let moved = apply_transform(&mol, &t).unwrap();
        let a = build_atom_bond_graph(&mol, cutoff).unwrap();
        let b = build_atom_bond_graph(&moved, cutoff).unwrap();
        // new atom k is old atom perm[k]
        let relabeled: BTreeSet<(usize, usize)> = (0..b.n_edges()).map(|e| (perm[b.src[e]], perm[b.dst[e]])).collect();
        let original: BTreeSet<(usize, usize)> = (0..a.n_edges()).map(|e| (a.src[e], a.dst[e])).collect();
        // pairs within 1e-9 of the cutoff may legitimately flip
        let near_cutoff = (0..mol.n_atoms())
            .flat_map(|i| (0..mol.n_atoms()).map(move |j| (i, j)))
            .any(|(i, j)| i != j && (mol.distance(i, j) - cutoff).abs() < 1e-9);
        if !near_cutoff {
            prop_assert_eq!(&relabeled, &original);
            for e in 0..b.n_edges() {
                let orig = a.find_edge(perm[b.src[e]], perm[b.dst[e]]).unwrap();
                prop_assert!((a.dist[orig] - b.dist[e]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn line_graph_matches_triplet_enumeration(seed in any::<u64>(), cutoff in 1.2f64..5.0) {
        let mol = molecule(seed, 6);
        let g = build_atom_bond_graph(&mol, cutoff).unwrap();
        let lg = build_bond_angle_graph(&g);
        let deg = g.degrees();
        let formula: usize = deg.iter().map(|&d| d * d.saturating_sub(1)).sum();
        prop_assert_eq!(lg.n_edges(), formula);

        let n = mol.n_atoms();
        let close = |i: usize, j: usize| i != j && mol.distance(i, j) < cutoff;
        let mut brute = BTreeSet::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    if k != i && close(k, j) && close(j, i) {
                        brute.insert((k, j, i));
                    }
                }
            }
        }
        let listed: BTreeSet<(usize, usize, usize)> = (0..lg.n_edges())
            .map(|l| {
                let (a, b) = (lg.src[l], lg.dst[l]);
                (g.src[a], g.dst[a], g.dst[b])
            })
            .collect();
        prop_assert_eq!(listed, brute);
    }

    #[test]
    fn initial_features_ignore_rigid_moves(seed in any::<u64>()) {
        let mol = molecule(seed, 5);
        let moved = apply_transform(&mol, &RigidTransform::new(*random_rotation(seed).rotation(), [1.5, 2.0, -4.0]).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let params = FeatureParams::new(&mut store, &mut rng, &[1, 6, 7, 8, 9], None, 4, 8, 6, 5).unwrap();
        let d = RbfSpec::spaced(8, 0.0, 5.0).unwrap();
        let a = RbfSpec::spaced(6, -1.0, 1.0).unwrap();
        let feats = |m: &Molecule| {
            let g = MolGraph::build(m, 5.0).unwrap();
            let batch = GraphBatch::new([&g]);
            let mut tape = Tape::new();
            let f = init_features(&mut tape, &store, &batch, &params, &d, &a).unwrap();
            let z = f.z.dense(&mut tape).unwrap();
            [f.x, f.y, z].map(|v| tape.value(v).clone())
        };
        for (p, q) in feats(&mol).iter().zip(&feats(&moved)) {
            prop_assert_eq!(p.shape(), q.shape());
            let worst = p.data().iter().zip(q.data()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            prop_assert!(worst <= 1e-10, "{}", worst);
        }
    }

    #[test]
    fn splits_are_disjoint_and_reproducible(
        n in 1usize..400,
        fr in (0.0f64..0.6, 0.0f64..0.2, 0.0f64..0.2),
        seed in any::<u64>(),
    ) {
        let spec = SplitSpec::Ratios { train: fr.0, validation: fr.1, test: fr.2 };
        let (a, b, c) = split_indices(n, &spec, seed).unwrap();
        let again = split_indices(n, &spec, seed).unwrap();
        prop_assert_eq!((&a, &b, &c), (&again.0, &again.1, &again.2));
        let all: BTreeSet<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        prop_assert_eq!(all.len(), a.len() + b.len() + c.len());
        prop_assert!(all.iter().all(|&i| i < n));
    }

    #[test]
    fn plateau_lr_stays_within_bounds(losses in proptest::collection::vec(0.0f64..10.0, 1..200), patience in 0usize..6) {
        let mut s = PlateauScheduler::new(1e-3, 0.5, patience, 1e-6, 1e-6);
        let mut last = 1e-3;
        for l in losses {
            let lr = s.step(l);
            prop_assert!((1e-6..=1e-3).contains(&lr));
            prop_assert!(lr <= last);
            last = lr;
        }
    }

    #[test]
    fn activations_stay_finite_with_finite_slopes(x in -700.0f64..700.0) {
        for a in Activation::ALL {
            prop_assert!(a.apply(x).is_finite() && a.derivative(x).is_finite(), "{} at {}", a, x);
        }
        let b = Activation::BentIdentity;
        prop_assert!(b.apply(x + 1e-3) > b.apply(x));
    }
}
