//! QM9 XYZ parsing, dataset splits and result files.

mod dataset;
mod output;
mod xyz;

pub use dataset::{
    list_xyz_files, load_dataset, read_exclusions, split_indices, Dataset, DatasetSplit, LoadOptions, SourceManifest,
    SplitSpec, QM9_SPLIT_COUNTS,
};
pub use output::{
    config_hash, read_history, read_metrics, read_predictions, write_history, write_metrics, write_predictions,
    HistoryRow, Metrics, PredictionRow,
};
pub use xyz::{normalize_number, parse_qm9_record, parse_qm9_xyz, write_xyz, Qm9Record, XyzOptions, QM9_N_SCALARS};
