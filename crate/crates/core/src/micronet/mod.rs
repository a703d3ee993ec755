//! Small fully-connected classifier trained with plain SGD, used to compare
//! hidden activations under an otherwise identical protocol.

mod data;
mod net;
mod train;

pub use data::{
    blobs, encode_idx, load_idx_dataset, parse_idx, read_idx, synthetic_digits, write_idx,
    write_synthetic_digits, DataSource, Dataset, DatasetRef, IdxArray, DIGIT_SIDE,
};
pub use net::{accuracy, cross_entropy, init_network, ForwardCache, Gradients, Matrix, Network};
pub use train::{
    compare_activations, read_comparison_csv, read_history_csv, train, write_comparison_csv,
    write_history_csv, ComparisonRow, EpochStats, HistoryRow, TrainConfig, TrainOutcome,
};
