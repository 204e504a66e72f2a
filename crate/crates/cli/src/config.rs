//! Run configuration: a flat `key = value` file with `[section]` headers.
//!
//! ```text
//! # comments start with '#'
//! [model]
//! hidden = 64
//! variant = strict_equivariant
//!
//! [train]
//! epochs = 100
//! ```
//!
//! Every key has a default; unknown sections and keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dipnet::checks::CheckConfig;
use dipnet::dataio::{LoadOptions, SplitSpec, XyzOptions};
use dipnet::featurize::load_atom_features;
use dipnet::train::TrainConfig;
use dipnet::{Activation, EmbedVariant, ModelConfig};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitMode {
    Counts,
    Ratios,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataConfig {
    pub split: SplitMode,
    /// Counts or fractions, depending on `split`.
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub dipole_column: usize,
    /// Optional exclusion list (one id per line).
    pub exclude: Option<PathBuf>,
    pub skip_malformed: bool,
    /// Train on the first N molecules of the shuffled training split; 0 keeps all.
    pub subset: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            split: SplitMode::Ratios,
            train: 0.8,
            validation: 0.1,
            test: 0.1,
            dipole_column: XyzOptions::default().dipole_column,
            exclude: None,
            skip_malformed: false,
            subset: 0,
        }
    }
}

impl DataConfig {
    pub fn split_spec(&self) -> Result<SplitSpec, CliError> {
        Ok(match self.split {
            SplitMode::Ratios => SplitSpec::Ratios {
                train: self.train,
                validation: self.validation,
                test: self.test,
            },
            SplitMode::Counts => {
                let count = |name: &str, v: f64| {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(CliError::usage(format!("data.{name} must be a whole count, got {v}")))
                    }
                };
                SplitSpec::Counts {
                    train: count("train", self.train)?,
                    validation: count("validation", self.validation)?,
                    test: count("test", self.test)?,
                }
            }
        })
    }

    pub fn load_options(&self) -> Result<LoadOptions, CliError> {
        let exclude = match &self.exclude {
            Some(p) => dipnet::dataio::read_exclusions(p)?,
            None => Default::default(),
        };
        Ok(LoadOptions {
            xyz: XyzOptions {
                dipole_column: self.dipole_column,
            },
            exclude,
            skip_malformed: self.skip_malformed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
#[derive(Default)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    /// Fixed per-species feature table (JSON) replacing the learnable embedding.
    pub atom_features: Option<PathBuf>,
    pub train: TrainConfig,
    pub data: DataConfig,
    pub check: CheckSizes,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckSizes {
    pub direction_draws: usize,
    pub molecules: usize,
    pub rotations: usize,
    pub acene_max: usize,
    pub acene_draws: usize,
    pub grad_instances: usize,
    pub grad_param_probes: usize,
}

impl Default for CheckSizes {
    fn default() -> Self {
        let c = CheckConfig::default();
        CheckSizes {
            direction_draws: c.direction_draws,
            molecules: c.molecules,
            rotations: c.rotations,
            acene_max: c.acene_max,
            acene_draws: c.acene_draws,
            grad_instances: c.grad_instances,
            grad_param_probes: c.grad_param_probes,
        }
    }
}


fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::usage(format!("bad value {value:?} for {key}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::usage(format!("bad value {value:?} for {key}: expected true or false"))),
    }
}

fn parse_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    /// Applies one `section.key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim().trim_matches('"');
        let m = &mut self.model;
        let t = &mut self.train;
        let d = &mut self.data;
        let c = &mut self.check;
        match key {
            "run.seed" => self.seed = parse(key, value)?,
            "model.n_layers" => m.n_layers = parse(key, value)?,
            "model.hidden" => m.hidden = parse(key, value)?,
            "model.atom_embed_dim" => m.atom_embed_dim = parse(key, value)?,
            "model.activation" => m.activation = parse::<Activation>(key, value)?,
            "model.variant" => m.variant = parse::<EmbedVariant>(key, value)?,
            "model.cutoff" => m.cutoff = parse(key, value)?,
            "model.distance_basis" => m.distance_basis = parse(key, value)?,
            "model.angle_basis" => m.angle_basis = parse(key, value)?,
            "model.gate_hidden" => m.gate_hidden = parse(key, value)?,
            "model.update_angles" => m.update_angles = parse_bool(key, value)?,
            "model.species" => {
                m.species = value
                    .split(',')
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "model.atom_features" => self.atom_features = parse_path(value),
            "train.epochs" => t.epochs = parse(key, value)?,
            "train.lr" => t.lr = parse(key, value)?,
            "train.weight_decay" => t.weight_decay = parse(key, value)?,
            "train.plateau_factor" => t.plateau_factor = parse(key, value)?,
            "train.plateau_patience" => t.plateau_patience = parse(key, value)?,
            "train.plateau_threshold" => t.plateau_threshold = parse(key, value)?,
            "train.min_lr" => t.min_lr = parse(key, value)?,
            "train.batch_size" => t.batch_size = parse(key, value)?,
            "data.split" => {
                d.split = match value {
                    "counts" => SplitMode::Counts,
                    "ratios" => SplitMode::Ratios,
                    _ => return Err(CliError::usage(format!("data.split must be counts or ratios, got {value:?}"))),
                }
            }
            "data.train" => d.train = parse(key, value)?,
            "data.validation" => d.validation = parse(key, value)?,
            "data.test" => d.test = parse(key, value)?,
            "data.dipole_column" => d.dipole_column = parse(key, value)?,
            "data.exclude" => d.exclude = parse_path(value),
            "data.skip_malformed" => d.skip_malformed = parse_bool(key, value)?,
            "data.subset" => d.subset = parse(key, value)?,
            "check.direction_draws" => c.direction_draws = parse(key, value)?,
            "check.molecules" => c.molecules = parse(key, value)?,
            "check.rotations" => c.rotations = parse(key, value)?,
            "check.acene_max" => c.acene_max = parse(key, value)?,
            "check.acene_draws" => c.acene_draws = parse(key, value)?,
            "check.grad_instances" => c.grad_instances = parse(key, value)?,
            "check.grad_param_probes" => c.grad_param_probes = parse(key, value)?,
            _ => return Err(CliError::usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults. Keys before any section
    /// header belong to `run`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut section = "run".to_string();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !["run", "model", "train", "data", "check"].contains(&section.as_str()) {
                    return Err(CliError::usage(format!("line {}: unknown section [{section}]", no + 1)));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(&format!("{section}.{}", key.trim()), value)
                .map_err(|e| CliError::usage(format!("line {}: {}", no + 1, e.message)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    /// Canonical text of every setting; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let t = &self.train;
        let d = &self.data;
        let c = &self.check;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let species: Vec<String> = m.species.iter().map(|z| z.to_string()).collect();
        let mut s = String::new();
        let _ = writeln!(s, "[run]\nseed = {}\n", self.seed);
        let _ = writeln!(
            s,
            "[model]\nn_layers = {}\nhidden = {}\natom_embed_dim = {}\nactivation = {}\nvariant = {}\ncutoff = {:?}\n\
             distance_basis = {}\nangle_basis = {}\ngate_hidden = {}\nupdate_angles = {}\nspecies = {}\natom_features = {}\n",
            m.n_layers,
            m.hidden,
            m.atom_embed_dim,
            m.activation,
            m.variant,
            m.cutoff,
            m.distance_basis,
            m.angle_basis,
            m.gate_hidden,
            m.update_angles,
            species.join(","),
            path(&self.atom_features),
        );
        let _ = writeln!(
            s,
            "[train]\nepochs = {}\nlr = {:?}\nweight_decay = {:?}\nplateau_factor = {:?}\nplateau_patience = {}\n\
             plateau_threshold = {:?}\nmin_lr = {:?}\nbatch_size = {}\n",
            t.epochs,
            t.lr,
            t.weight_decay,
            t.plateau_factor,
            t.plateau_patience,
            t.plateau_threshold,
            t.min_lr,
            t.batch_size,
        );
        let split = match d.split {
            SplitMode::Counts => "counts",
            SplitMode::Ratios => "ratios",
        };
        let _ = writeln!(
            s,
            "[data]\nsplit = {split}\ntrain = {:?}\nvalidation = {:?}\ntest = {:?}\ndipole_column = {}\nexclude = {}\n\
             skip_malformed = {}\nsubset = {}\n",
            d.train,
            d.validation,
            d.test,
            d.dipole_column,
            path(&d.exclude),
            d.skip_malformed,
            d.subset,
        );
        let _ = write!(
            s,
            "[check]\ndirection_draws = {}\nmolecules = {}\nrotations = {}\nacene_max = {}\nacene_draws = {}\n\
             grad_instances = {}\ngrad_param_probes = {}\n",
            c.direction_draws, c.molecules, c.rotations, c.acene_max, c.acene_draws, c.grad_instances, c.grad_param_probes,
        );
        s
    }

    /// The model configuration with the feature table (if any) loaded.
    pub fn model_config(&self) -> Result<ModelConfig, CliError> {
        let mut m = self.model.clone();
        if let Some(p) = &self.atom_features {
            m.atom_features = Some(load_atom_features(p)?);
        }
        m.validate()?;
        Ok(m)
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let t = TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        };
        t.validate()?;
        Ok(t)
    }

    pub fn check_config(&self) -> Result<CheckConfig, CliError> {
        let c = &self.check;
        Ok(CheckConfig {
            model: self.model_config()?,
            seed: self.seed,
            direction_draws: c.direction_draws,
            molecules: c.molecules,
            rotations: c.rotations,
            acene_max: c.acene_max,
            acene_draws: c.acene_draws,
            grad_instances: c.grad_instances,
            grad_param_probes: c.grad_param_probes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("# nothing\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_and_values() {
        let cfg = RunConfig::parse(
            "seed = 9\n[model]\nhidden = 16 # narrow\nvariant = node_charge\nspecies = 1, 6\n\
             [train]\nepochs=3\n[data]\nsplit = counts\ntrain = 6\nvalidation = 2\ntest = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.model.hidden, 16);
        assert_eq!(cfg.model.variant, EmbedVariant::NodeCharge);
        assert_eq!(cfg.model.species, vec![1, 6]);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(
            cfg.data.split_spec().unwrap(),
            SplitSpec::Counts { train: 6, validation: 2, test: 2 }
        );
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let e = RunConfig::parse("[model]\nwidth = 3\n").unwrap_err();
        assert!(e.message.contains("unknown config key") && e.message.contains("line 2"), "{}", e.message);
        assert!(RunConfig::parse("[optimizer]\n").is_err());
        assert!(RunConfig::parse("[model]\nhidden\n").is_err());
        assert!(RunConfig::parse("[model]\nhidden = many\n").is_err());
        assert!(RunConfig::parse("[model]\nupdate_angles = maybe\n").is_err());
    }

    #[test]
    fn canonical_text_parses_back() {
        let mut cfg = RunConfig::default();
        cfg.set("model.cutoff", "3.7").unwrap();
        cfg.set("train.lr", "0.0003").unwrap();
        cfg.set("data.exclude", "skip.txt").unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn fractional_counts_are_rejected() {
        let cfg = RunConfig::parse("[data]\nsplit = counts\ntrain = 2.5\n").unwrap();
        assert!(cfg.data.split_spec().is_err());
    }
}
