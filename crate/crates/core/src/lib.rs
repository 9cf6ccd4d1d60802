//! Missing-data imputation with a stacked linear meta-model.
//!
//! Seven base imputers (mean, median, mode, k-nearest neighbours, matrix
//! factorization, autoencoder, adversarial) each complete a matrix; a ridge
//! regression trained on artificially hidden cells combines their per-cell
//! outputs with a column encoding. The [`eval`] module runs the k-fold
//! benchmark with masked-cell and downstream-prediction scores.

pub mod data;
pub mod error;
pub mod eval;
pub mod folds;
pub mod imputers;
pub mod linalg;
pub mod masking;
pub mod meta;
pub mod neural;
pub mod rng;
pub mod standardize;
pub mod trees;

pub use data::{load_csv, parse_csv, save_csv, write_csv, DataMatrix};
pub use error::{MibError, Result};
pub use imputers::{FittedImputer, ImputerKind, ImputerSpec};
pub use masking::{apply_mcar_mask, masked_positions, Mask, MaskedCell};
pub use meta::{FjMode, MetaModel, MibImputer};
