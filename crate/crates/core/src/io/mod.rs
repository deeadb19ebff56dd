//! Synthetic problems, dataset readers and writers, and run records.

mod dense;
mod libsvm;
pub mod record;
mod synthetic;

pub use dense::{parse_csv, read_csv, read_points_csv, write_dataset_csv, write_points_csv};
pub use libsvm::{parse_libsvm, read_libsvm, write_libsvm};
pub use record::{read_run, write_run, RunRecord};
pub use synthetic::{correlated_covariance, gen_synthetic, planted_beta, Family, Synthetic, SyntheticSpec};
