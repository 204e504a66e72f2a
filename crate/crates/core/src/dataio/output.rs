use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One row of a predictions file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub label_debye: Option<f64>,
    pub pred_x: f64,
    pub pred_y: f64,
    pub pred_z: f64,
    pub pred_norm: f64,
}

impl PredictionRow {
    pub fn new(id: impl Into<String>, label: Option<f64>, pred: [f64; 3]) -> Self {
        PredictionRow {
            id: id.into(),
            label_debye: label,
            pred_x: pred[0],
            pred_y: pred[1],
            pred_z: pred[2],
            pred_norm: (pred[0] * pred[0] + pred[1] * pred[1] + pred[2] * pred[2]).sqrt(),
        }
    }
}

/// Evaluation summary written as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
    pub config_hash: String,
}

/// One epoch of a training history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

/// Hex SHA-256 of a canonical configuration text.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

const PREDICTION_HEADER: [&str; 6] = ["id", "label_debye", "pred_x", "pred_y", "pred_z", "pred_norm"];
const HISTORY_HEADER: [&str; 4] = ["epoch", "train_loss", "val_loss", "lr"];

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::File {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let found = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::File {
            path: path.to_path_buf(),
            msg: format!("unexpected header {:?}", found.iter().collect::<Vec<_>>()),
        });
    }
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| csv_err(path, e))
}

/// CSV with header `id,label_debye,pred_x,pred_y,pred_z,pred_norm`. Missing
/// labels are written as empty fields.
pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    write_rows(path, &PREDICTION_HEADER, rows)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    read_rows(path, &PREDICTION_HEADER)
}

/// CSV with header `epoch,train_loss,val_loss,lr`.
pub fn write_history(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    write_rows(path, &HISTORY_HEADER, rows)
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>> {
    read_rows(path, &HISTORY_HEADER)
}

pub fn write_metrics(path: &Path, metrics: &Metrics) -> Result<()> {
    let text = serde_json::to_string_pretty(metrics).map_err(|e| Error::Invalid(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: &Path) -> Result<Metrics> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::File {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_predictions_are_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        write_predictions(&p, &[]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "id,label_debye,pred_x,pred_y,pred_z,pred_norm\n");
        assert!(read_predictions(&p).unwrap().is_empty());
    }

    #[test]
    fn zero_prediction_has_zero_norm() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        write_predictions(&p, &[PredictionRow::new("m1", Some(1.0), [0.0; 3])]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "m1,1.0,0.0,0.0,0.0,0.0");
    }

    #[test]
    fn predictions_read_back_to_twelve_digits() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        let rows = vec![
            PredictionRow::new("a", Some(2.0123456789012345), [1.0 / 3.0, -2e-9, 7.25]),
            PredictionRow::new("b", None, [1e10, 0.1, -0.2]),
        ];
        write_predictions(&p, &rows).unwrap();
        let back = read_predictions(&p).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label_debye.is_some(), b.label_debye.is_some());
            for (x, y) in [(a.pred_x, b.pred_x), (a.pred_y, b.pred_y), (a.pred_z, b.pred_z), (a.pred_norm, b.pred_norm)] {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn history_and_metrics_files() {
        let dir = tempfile::tempdir().unwrap();
        let h = dir.path().join("history.csv");
        let rows = vec![HistoryRow { epoch: 1, train_loss: 0.5, val_loss: 0.25, lr: 1e-3 }];
        write_history(&h, &rows).unwrap();
        assert!(fs::read_to_string(&h).unwrap().starts_with("epoch,train_loss,val_loss,lr\n1,0.5,0.25,0.001\n"));
        assert_eq!(read_history(&h).unwrap(), rows);

        let m = dir.path().join("metrics.json");
        let metrics = Metrics { mae: 0.1, rmse: 0.2, n: 3, config_hash: config_hash("a = 1") };
        write_metrics(&m, &metrics).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&m).unwrap()).unwrap();
        let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        keys.sort();
        assert_eq!(keys, ["config_hash", "mae", "n", "rmse"]);
        assert_eq!(read_metrics(&m).unwrap(), metrics);
        assert_eq!(metrics.config_hash.len(), 64);
    }
}
