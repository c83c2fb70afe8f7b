//! Automatic sparse PCA for high-dimension, low-sample-size data.
//!
//! The pipeline works through the `n × n` dual covariance, so cost is linear
//! in the dimension `d`:
//!
//! 1. [`fit_pca`] gives the conventional eigenvalues `λ̂_j` and unit
//!    directions `ĥ_j`;
//! 2. [`nr_from_pca`] applies the noise-reduction correction
//!    `λ̃_j = λ̂_j - δ̂_j` and rescales directions to `h̃_j`;
//! 3. [`threshold_auto`] keeps the largest entries of `h̃_j` until their
//!    squared mass reaches 1.
//!
//! [`simgen`] generates data with a known truth and [`bench`] runs replicated
//! comparisons against it.

pub mod bench;
pub mod covariance;
pub mod error;
pub mod linalg;
pub mod pca;
pub mod simgen;
pub mod sparse;

pub use covariance::{
    conventional_intrinsic, frobenius_loss, scaled_directions, FactorColumn, LowRankFactor,
};
pub use error::{Error, Result};
pub use linalg::{symmetric_eigen, EigenSystem, Matrix, SymmetricMatrix};
pub use pca::{
    aligned_mse, angle, component_count, dual_covariance, fit_nr, fit_pca, nr_from_pca, pc_scores,
    sparse_pc_scores, DataMatrix, NrFit, PcaFit,
};
pub use simgen::{ModelKind, ModelSpec, ModelTruth, Sample, Sampler, Setting};
pub use sparse::{
    aspca_fit, aspca_from_nr, cluster_by_sign, label_agreement, sh_pc_scores, threshold_auto,
    threshold_auto_vec, threshold_omega, threshold_omega_vec, tspca, AspcaComponent,
    SparseDirection, ThresholdMode,
};
