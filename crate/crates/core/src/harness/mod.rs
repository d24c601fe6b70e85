//! Datasets, the incremental classification experiment, paired t-tests
//! and reports.

pub mod dataset;
pub mod discretize;
pub mod report;
pub mod run;
pub mod synthetic;
pub mod ttest;

pub use dataset::{load_dataset, order_hash, parse_dataset, prepare, ClassColumn, Dataset, Instance, LoadOptions, MissingMode};
pub use discretize::{discretize_csv, discretize_equal_frequency, Discretized};
pub use report::{read_report, write_report, ReportFormat};
pub use run::{attribute_tables, compare_runs, run_incremental, FilterRun, PairComparison, RunReport};
pub use synthetic::{generate, SyntheticSpec};
pub use ttest::{paired_t_test, TTest};
