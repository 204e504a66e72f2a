use std::path::Path;

use dipnet::dataio::{load_dataset, LoadOptions, SplitSpec};
use dipnet::model::{load_checkpoint, save_checkpoint};
use dipnet::train::{evaluate, train, TrainConfig};
use dipnet::{DipoleModel, ModelConfig};

#[test]
fn sample_records_train_save_and_reload() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/qm9_sample");
    let spec = SplitSpec::Counts { train: 4, validation: 2, test: 0 };
    let data = load_dataset(&dir, &spec, 1, &LoadOptions::default()).unwrap();
    assert_eq!(data.molecules.len(), 6);
    assert!(data.skipped.is_empty());
    assert_eq!(data.split.manifest.files[0], "dsgdb9nsd_000001.xyz");

    let cfg = ModelConfig { n_layers: 2, hidden: 12, atom_embed_dim: 6, distance_basis: 10, angle_basis: 5, gate_hidden: 6, ..ModelConfig::default() };
    let mut model = DipoleModel::new(cfg, 2).unwrap();
    let tcfg = TrainConfig { epochs: 20, batch_size: 2, ..TrainConfig::default() };
    let (tr, va) = (data.select(&data.split.train), data.select(&data.split.validation));
    let out = train(&mut model, &tcfg, &tr, &va).unwrap();
    assert_eq!(out.history.len(), 20);
    assert!(out.history.last().unwrap().train_loss < out.history[0].train_loss);

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("ckpt.json");
    save_checkpoint(&model, serde_json::json!({"seed": 2}), &path).unwrap();
    let (back, meta) = load_checkpoint(&path).unwrap();
    assert_eq!(meta["seed"], 2);
    let a = evaluate(&model, &data.molecules).unwrap();
    let b = evaluate(&back, &data.molecules).unwrap();
    for (p, q) in a.predictions.iter().zip(&b.predictions) {
        assert!(p.iter().zip(q).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
}
