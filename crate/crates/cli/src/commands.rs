use std::fs;
use std::path::Path;

use serde_json::json;

use dipnet::checks::{self, Status};
use dipnet::dataio::{
    config_hash, load_dataset, parse_qm9_record, split_indices, write_history, write_metrics, write_predictions,
    Dataset, Metrics, PredictionRow, SplitSpec,
};
use dipnet::model::{load_checkpoint, save_checkpoint};
use dipnet::molgraph::generate_acene;
use dipnet::train::{self, evaluate, Evaluation, TrainConfig};
use dipnet::{DipoleModel, Molecule};

use crate::config::RunConfig;
use crate::{CliError, Overrides};

fn resolve(o: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(v) = &o.variant {
        cfg.set("model.variant", v)?;
    }
    if let Some(a) = &o.activation {
        cfg.set("model.activation", a)?;
    }
    if let Some(e) = o.epochs {
        cfg.train.epochs = e;
    }
    if let Some(n) = o.subset {
        cfg.data.subset = n;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

fn prediction_rows(mols: &[Molecule], ev: &Evaluation) -> Vec<PredictionRow> {
    mols.iter()
        .zip(&ev.predictions)
        .enumerate()
        .map(|(i, (m, p))| PredictionRow::new(m.id.clone().unwrap_or_else(|| i.to_string()), m.dipole_label, *p))
        .collect()
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string(value).expect("serializable"));
}

pub fn train(o: &Overrides, data_dir: &Path, out_dir: &Path) -> Result<(), CliError> {
    let cfg = resolve(o)?;
    let model_cfg = cfg.model_config()?;
    let train_cfg: TrainConfig = cfg.train_config()?;
    let spec = cfg.data.split_spec()?;
    if !data_dir.is_dir() {
        return Err(CliError::usage(format!("data directory {} does not exist", data_dir.display())));
    }
    let data = load_dataset(data_dir, &spec, cfg.seed, &cfg.data.load_options()?)?;
    let mut train_idx = data.split.train.clone();
    if cfg.data.subset > 0 {
        train_idx.truncate(cfg.data.subset);
    }
    let train_set = data.select(&train_idx);
    let val_set = data.select(&data.split.validation);
    if train_set.is_empty() || val_set.is_empty() {
        return Err(CliError::usage(format!(
            "split leaves {} training and {} validation molecules; both must be non-empty",
            train_set.len(),
            val_set.len()
        )));
    }
    let eval_set = if data.split.test.is_empty() {
        val_set.clone()
    } else {
        data.select(&data.split.test)
    };

    let text = cfg.to_text();
    let hash = config_hash(&text);
    let mut model = DipoleModel::new(model_cfg, cfg.seed)?;
    log::info!("{} parameters, {} training molecules", model.num_parameters(), train_set.len());
    let outcome = train::train(&mut model, &train_cfg, &train_set, &val_set)?;
    let ev = evaluate(&model, &eval_set)?;

    create_dir(out_dir)?;
    let metadata = json!({
        "seed": cfg.seed,
        "config": text,
        "config_hash": hash,
        "best_epoch": outcome.best_epoch,
        "best_val_loss": outcome.best_val_loss,
        "dataset_sha256": data.split.manifest.sha256,
        "n_train": train_set.len(),
        "n_validation": val_set.len(),
        "n_test": data.split.test.len(),
    });
    save_checkpoint(&model, metadata, &out_dir.join("checkpoint.json"))?;
    write_history(&out_dir.join("history.csv"), &outcome.history)?;
    let metrics = Metrics {
        mae: ev.mae,
        rmse: ev.rmse,
        n: eval_set.len(),
        config_hash: hash,
    };
    write_metrics(&out_dir.join("metrics.json"), &metrics)?;
    write_predictions(&out_dir.join("predictions.csv"), &prediction_rows(&eval_set, &ev))?;
    fs::write(out_dir.join("config.txt"), &text).map_err(|e| CliError::usage(format!("cannot write config: {e}")))?;
    print_json(&metrics);
    Ok(())
}

/// The configuration a checkpoint was trained with, or the defaults.
fn checkpoint_config(meta: &serde_json::Value) -> Result<RunConfig, CliError> {
    match meta.get("config").and_then(|v| v.as_str()) {
        Some(text) => RunConfig::parse(text),
        None => Ok(RunConfig::default()),
    }
}

fn checkpoint_hash(meta: &serde_json::Value) -> String {
    meta.get("config_hash")
        .and_then(|v| v.as_str())
        .unwrap_or_default()
        .to_string()
}

pub fn eval(checkpoint: &Path, data_dir: &Path, out_dir: Option<&Path>) -> Result<(), CliError> {
    let (model, meta) = load_checkpoint(checkpoint)?;
    let cfg = checkpoint_config(&meta)?;
    let all = SplitSpec::Ratios {
        train: 1.0,
        validation: 0.0,
        test: 0.0,
    };
    let data: Dataset = load_dataset(data_dir, &all, 0, &cfg.data.load_options()?)?;
    let ev = evaluate(&model, &data.molecules)?;
    let metrics = Metrics {
        mae: ev.mae,
        rmse: ev.rmse,
        n: data.molecules.len(),
        config_hash: checkpoint_hash(&meta),
    };
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        write_metrics(&dir.join("metrics.json"), &metrics)?;
        write_predictions(&dir.join("predictions.csv"), &prediction_rows(&data.molecules, &ev))?;
    }
    print_json(&metrics);
    Ok(())
}

pub fn predict(checkpoint: &Path, xyz: &Path) -> Result<(), CliError> {
    let (model, meta) = load_checkpoint(checkpoint)?;
    let cfg = checkpoint_config(&meta)?;
    let text = fs::read_to_string(xyz).map_err(|e| CliError::usage(format!("cannot read {}: {e}", xyz.display())))?;
    let opts = cfg.data.load_options()?;
    let rec = parse_qm9_record(&text, opts.xyz).map_err(|e| CliError::usage(format!("{}: {e}", xyz.display())))?;
    let mol = rec.molecule;
    let id = mol
        .id
        .clone()
        .or_else(|| xyz.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    let pred = model.predict(&mol)?;
    print_json(&PredictionRow::new(id, mol.dipole_label, pred));
    Ok(())
}

pub fn benzene_scan(checkpoint: &Path, n_max: usize, out_dir: Option<&Path>) -> Result<(), CliError> {
    if n_max == 0 {
        return Err(CliError::usage("--n-max must be at least 1"));
    }
    let (model, _) = load_checkpoint(checkpoint)?;
    let mut csv = String::from("n_rings,pred_norm\n");
    for n in 1..=n_max {
        let mu = model.predict(&generate_acene(n)?)?;
        let norm = (mu[0] * mu[0] + mu[1] * mu[1] + mu[2] * mu[2]).sqrt();
        csv.push_str(&format!("{n},{norm:e}\n"));
    }
    match out_dir {
        Some(dir) => {
            create_dir(dir)?;
            let path = dir.join("benzene_scan.csv");
            fs::write(&path, csv).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn check(o: &Overrides, checkpoint: Option<&Path>, data_dir: Option<&Path>) -> Result<(), CliError> {
    let cfg = resolve(o)?;
    let check_cfg = cfg.check_config()?;
    let loaded = checkpoint.map(load_checkpoint).transpose()?;

    let molecules = match data_dir {
        Some(dir) => {
            let all = SplitSpec::Ratios {
                train: 1.0,
                validation: 0.0,
                test: 0.0,
            };
            let data = load_dataset(dir, &all, cfg.seed, &cfg.data.load_options()?)?;
            let n = check_cfg.molecules.min(data.molecules.len());
            let pick = SplitSpec::Counts {
                train: n,
                validation: 0,
                test: 0,
            };
            let (idx, _, _) = split_indices(data.molecules.len(), &pick, cfg.seed)?;
            data.select(&idx)
        }
        None => checks::synthetic_molecules(check_cfg.molecules, cfg.seed),
    };

    let mut outcomes = checks::run_suite(&check_cfg, &molecules)?;
    if let Some((model, _)) = &loaded {
        outcomes.push(checks::centrosymmetric_null_for(model, check_cfg.acene_max)?);
    }
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| o.status == Status::Fail).count();
    if failed > 0 {
        return Err(CliError::failure(format!("{failed} propert{} failed", if failed == 1 { "y" } else { "ies" })));
    }
    Ok(())
}
