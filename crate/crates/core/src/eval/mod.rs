//! Datasets, metrics and the evaluation protocols.

pub mod dataset;
pub mod metrics;
pub mod protocols;
pub mod synthetic;

pub use dataset::{load_dataset, read_dataset, save_dataset, split_of, write_dataset, ExamplePair, Split};
pub use metrics::{compute_metrics, MetricsReport};
pub use protocols::{
    agreement_analysis, evaluate_at, flip_report, flipped_cases, negatable, score_dataset, sweep_filter,
    sweep_filter_calibrated, triple_for, FlipReport, FlipRow, ScoredExample, SweepReport, SweepRow,
};
