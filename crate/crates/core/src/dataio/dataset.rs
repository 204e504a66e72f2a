use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::molgraph::Molecule;

use super::xyz::{parse_qm9_record, XyzOptions};

/// Split sizes used for the full 130,831-molecule QM9 set.
pub const QM9_SPLIT_COUNTS: (usize, usize, usize) = (110_000, 10_000, 10_829);

/// How to divide a shuffled index list.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitSpec {
    Counts { train: usize, validation: usize, test: usize },
    /// Fractions of the available records; the test set takes the remainder
    /// when the fractions add up to one.
    Ratios { train: f64, validation: f64, test: f64 },
}

impl SplitSpec {
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        let (a, b, c) = match *self {
            SplitSpec::Counts { train, validation, test } => (train, validation, test),
            SplitSpec::Ratios { train, validation, test } => {
                let sum = train + validation + test;
                if [train, validation, test].iter().any(|r| r.is_nan() || *r < 0.0) || sum > 1.0 + 1e-12 {
                    return Err(Error::Config(format!(
                        "split ratios must be non-negative and sum to at most 1, got {train}/{validation}/{test}"
                    )));
                }
                let a = (train * n as f64).floor() as usize;
                let b = (validation * n as f64).floor() as usize;
                let c = if (sum - 1.0).abs() <= 1e-12 {
                    n - a - b
                } else {
                    (test * n as f64).floor() as usize
                };
                (a, b, c)
            }
        };
        if a + b + c > n {
            return Err(Error::Config(format!(
                "split {a}/{b}/{c} needs {} records but only {n} are available",
                a + b + c
            )));
        }
        Ok((a, b, c))
    }
}

/// File list and content digest of a loaded directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceManifest {
    pub files: Vec<String>,
    pub sha256: String,
}

/// Disjoint train/validation/test index lists into a molecule vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub manifest: SourceManifest,
}

/// Shuffles `0..n` with `seed` and cuts it according to `spec`. Indices past
/// the requested sizes are left unused.
pub fn split_indices(n: usize, spec: &SplitSpec, seed: u64) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let (a, b, c) = spec.sizes(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((
        order[..a].to_vec(),
        order[a..a + b].to_vec(),
        order[a + b..a + b + c].to_vec(),
    ))
}

/// Options for [`load_dataset`].
#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    pub xyz: XyzOptions,
    /// Record ids to leave out: numeric QM9 indices, file stems or molecule ids.
    pub exclude: HashSet<String>,
    /// Skip unparseable files (each one logged and listed) instead of failing.
    pub skip_malformed: bool,
}

/// Reads an exclusion list: one id per line, `#` comments allowed. Lines of
/// the QM9 "uncharacterized" list start with the numeric index, which is
/// what is kept.
pub fn read_exclusions(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter_map(|l| l.split_whitespace().next())
        .map(|id| {
            if id.bytes().all(|b| b.is_ascii_digit()) {
                let t = id.trim_start_matches('0');
                if t.is_empty() { "0" } else { t }.to_string()
            } else {
                id.to_string()
            }
        })
        .collect())
}

/// Molecules loaded from a directory together with their split.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub molecules: Vec<Molecule>,
    pub split: DatasetSplit,
    /// `(file, reason)` for every skipped file.
    pub skipped: Vec<(String, String)>,
    pub excluded: usize,
}

impl Dataset {
    pub fn select(&self, idx: &[usize]) -> Vec<Molecule> {
        idx.iter().map(|&i| self.molecules[i].clone()).collect()
    }
}

/// `*.xyz` files of `dir` in lexicographic order.
pub fn list_xyz_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "xyz") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::File {
            path: dir.to_path_buf(),
            msg: "no .xyz files found".into(),
        });
    }
    Ok(files)
}

fn excluded(opts: &LoadOptions, stem: &str, index: Option<u64>, mol: &Molecule) -> bool {
    if opts.exclude.is_empty() {
        return false;
    }
    index.is_some_and(|i| opts.exclude.contains(&i.to_string()))
        || opts.exclude.contains(stem)
        || mol.id.as_ref().is_some_and(|id| opts.exclude.contains(id))
}

/// Parses every `.xyz` file of `dir` (lexicographic order) and splits the
/// usable records. Every molecule gets its file stem as id.
pub fn load_dataset(dir: &Path, spec: &SplitSpec, seed: u64, opts: &LoadOptions) -> Result<Dataset> {
    let files = list_xyz_files(dir)?;
    let mut hasher = Sha256::new();
    let mut molecules = Vec::new();
    let mut names = Vec::new();
    let mut skipped = Vec::new();
    let mut n_excluded = 0;
    for path in &files {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8_lossy(&bytes);
        let rec = match parse_qm9_record(&text, opts.xyz) {
            Ok(rec) => rec,
            Err(e) if opts.skip_malformed => {
                log::warn!("skipping {}: {e}", path.display());
                skipped.push((name, e.to_string()));
                continue;
            }
            Err(e) => {
                return Err(Error::File {
                    path: path.clone(),
                    msg: e.to_string(),
                })
            }
        };
        if excluded(opts, &stem, rec.index, &rec.molecule) {
            n_excluded += 1;
            continue;
        }
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update(&bytes);
        let mut mol = rec.molecule;
        mol.id = Some(stem);
        molecules.push(mol);
        names.push(name);
    }
    if molecules.is_empty() {
        return Err(Error::File {
            path: dir.to_path_buf(),
            msg: "no usable records".into(),
        });
    }
    let (train, validation, test) = split_indices(molecules.len(), spec, seed)?;
    Ok(Dataset {
        molecules,
        split: DatasetSplit {
            train,
            validation,
            test,
            seed,
            manifest: SourceManifest {
                files: names,
                sha256: hex::encode(hasher.finalize()),
            },
        },
        skipped,
        excluded: n_excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(i: usize) -> String {
        format!(
            "2\ngdb {i} 1 1 1 {}.5 1 1 1 1 1 1 1 1 1 1 1\nH 0 0 0 0\nF 0.9{i} 0 0 0\n",
            i
        )
    }

    fn write_dir(n: usize) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for i in 1..=n {
            fs::write(dir.path().join(format!("dsgdb9nsd_{i:06}.xyz")), record(i)).unwrap();
        }
        dir
    }

    #[test]
    fn split_sizes() {
        let (a, b, c) = split_indices(130_831, &SplitSpec::Counts { train: 110_000, validation: 10_000, test: 10_829 }, 0).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), QM9_SPLIT_COUNTS);
        let mut all: Vec<usize> = a.into_iter().chain(b).chain(c).collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 130_829);
        let ratios = SplitSpec::Ratios { train: 0.8, validation: 0.1, test: 0.1 };
        assert_eq!(ratios.sizes(10).unwrap(), (8, 1, 1));
        assert!(SplitSpec::Counts { train: 5, validation: 5, test: 1 }.sizes(10).is_err());
        assert!(SplitSpec::Ratios { train: 0.9, validation: 0.2, test: 0.0 }.sizes(10).is_err());
    }

    #[test]
    fn loading_is_deterministic() {
        let dir = write_dir(10);
        let spec = SplitSpec::Counts { train: 6, validation: 2, test: 2 };
        let a = load_dataset(dir.path(), &spec, 3, &LoadOptions::default()).unwrap();
        let b = load_dataset(dir.path(), &spec, 3, &LoadOptions::default()).unwrap();
        assert_eq!(a.split, b.split);
        assert_eq!(a.molecules[0].id.as_deref(), Some("dsgdb9nsd_000001"));
        assert_eq!(a.molecules[9].dipole_label, Some(10.5));
        let c = load_dataset(dir.path(), &spec, 4, &LoadOptions::default()).unwrap();
        assert_ne!(a.split.train, c.split.train);
        assert_eq!(a.split.manifest, c.split.manifest);
        let too_many = SplitSpec::Counts { train: 9, validation: 2, test: 0 };
        assert!(load_dataset(dir.path(), &too_many, 3, &LoadOptions::default()).is_err());
    }

    #[test]
    fn exclusions_and_malformed_files() {
        let dir = write_dir(5);
        fs::write(dir.path().join("dsgdb9nsd_000009.xyz"), "3\nbroken\n").unwrap();
        let spec = SplitSpec::Ratios { train: 0.5, validation: 0.25, test: 0.25 };
        let err = load_dataset(dir.path(), &spec, 0, &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("dsgdb9nsd_000009.xyz"));

        let list = dir.path().join("exclude.txt");
        fs::write(&list, "# uncharacterized\n   2  gdb 2\n00004\n").unwrap();
        let opts = LoadOptions {
            exclude: read_exclusions(&list).unwrap(),
            skip_malformed: true,
            ..LoadOptions::default()
        };
        let ds = load_dataset(dir.path(), &spec, 0, &opts).unwrap();
        assert_eq!(ds.molecules.len(), 3);
        assert_eq!(ds.excluded, 2);
        assert_eq!(ds.skipped.len(), 1);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SplitSpec::Counts { train: 0, validation: 0, test: 0 };
        assert!(load_dataset(dir.path(), &spec, 0, &LoadOptions::default()).is_err());
        assert!(load_dataset(&dir.path().join("missing"), &spec, 0, &LoadOptions::default()).is_err());
    }
}
