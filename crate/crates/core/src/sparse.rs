//! Thresholded PC directions: the automatic rule on NR directions, the
//! shrinkage variant with a cumulative-mass target ω, the ζ-tuned threshold
//! baseline, shrinkage PC scores and sign clustering.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::pca::{self, DataMatrix, NrFit};

/// How a [`SparseDirection`] was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Retained until the cumulative squared mass first reaches 1. Raw values.
    Auto,
    /// Retained until the cumulative squared mass first reaches ω. Raw values.
    Omega(f64),
    /// Entries with magnitude below `min(ζ, max|h|)` dropped, then renormalized.
    Tspca(f64),
}

impl ThresholdMode {
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdMode::Auto => "auto",
            ThresholdMode::Omega(_) => "omega",
            ThresholdMode::Tspca(_) => "tspca",
        }
    }
}

/// A thresholded direction stored as `(index, value)` pairs, ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDirection {
    dim: usize,
    entries: Vec<(usize, f64)>,
    component: usize,
    mode: ThresholdMode,
    norm_sq: f64,
    saturated: bool,
}

impl SparseDirection {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// 0-based component index this direction estimates.
    pub fn component(&self) -> usize {
        self.component
    }

    pub fn mode(&self) -> ThresholdMode {
        self.mode
    }

    /// Sum of squared retained values.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// True when the whole input mass fell short of the target and every entry
    /// was retained. Only reachable through rounding for NR directions.
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    /// Smallest retained magnitude.
    pub fn min_abs(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.1.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, x) in &self.entries {
            v[i] = x;
        }
        v
    }

    /// Copy scaled to unit length.
    pub fn normalized(&self) -> Vec<(usize, f64)> {
        let inv = 1.0 / self.norm_sq.sqrt();
        self.entries.iter().map(|&(i, v)| (i, v * inv)).collect()
    }
}

/// Indices ordered by `(|value| descending, index ascending)`.
pub fn magnitude_order(h: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&a, &b| h[b].abs().total_cmp(&h[a].abs()).then(a.cmp(&b)));
    order
}

/// Smallest `k` such that the `k` largest squared entries sum to at least
/// `target`, together with that partial sum. `None` when the total falls short.
pub fn cumulative_cutoff(h: &[f64], order: &[usize], target: f64) -> Option<(usize, f64)> {
    let mut acc = 0.0;
    for (k, &i) in order.iter().enumerate() {
        acc += h[i] * h[i];
        if acc >= target {
            return Some((k + 1, acc));
        }
    }
    None
}

fn truncate_by_mass(h: &[f64], target: f64, component: usize, mode: ThresholdMode) -> SparseDirection {
    let order = magnitude_order(h);
    let (k, norm_sq, saturated) = match cumulative_cutoff(h, &order, target) {
        Some((k, acc)) => (k, acc, false),
        None => (h.len(), order.iter().map(|&i| h[i] * h[i]).sum(), true),
    };
    let mut kept: Vec<usize> = order[..k].to_vec();
    kept.sort_unstable();
    SparseDirection {
        dim: h.len(),
        entries: kept.into_iter().map(|i| (i, h[i])).collect(),
        component,
        mode,
        norm_sq,
        saturated,
    }
}

/// Automatic thresholding of the NR direction of component `j` (0-based).
pub fn threshold_auto(fit: &NrFit, j: usize) -> Result<SparseDirection> {
    let h = fit.direction(j)?;
    Ok(threshold_auto_vec(h, j))
}

/// Automatic thresholding of a raw vector.
pub fn threshold_auto_vec(h: &[f64], component: usize) -> SparseDirection {
    truncate_by_mass(h, 1.0, component, ThresholdMode::Auto)
}

/// Shrinkage direction of component `j` with cumulative mass target `omega`.
pub fn threshold_omega(fit: &NrFit, j: usize, omega: f64) -> Result<SparseDirection> {
    check_omega(omega)?;
    let h = fit.direction(j)?;
    threshold_omega_vec(h, j, omega)
}

pub fn threshold_omega_vec(h: &[f64], component: usize, omega: f64) -> Result<SparseDirection> {
    check_omega(omega)?;
    Ok(truncate_by_mass(h, omega, component, ThresholdMode::Omega(omega)))
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(invalid(format!("omega must lie in (0, 1], got {omega}")));
    }
    Ok(())
}

/// Threshold SPCA on a unit direction: keep `|h_i| >= min(ζ, max|h|)`, then
/// rescale to unit length.
pub fn tspca(h: &[f64], component: usize, zeta: f64) -> Result<SparseDirection> {
    if !(zeta > 0.0) {
        return Err(invalid(format!("zeta must be positive, got {zeta}")));
    }
    let nsq: f64 = h.iter().map(|v| v * v).sum();
    if h.is_empty() || (nsq.sqrt() - 1.0).abs() > 1e-8 {
        return Err(invalid(format!(
            "tspca expects a unit direction, got norm {}",
            nsq.sqrt()
        )));
    }
    let hmax = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = zeta.min(hmax);
    let kept: Vec<(usize, f64)> = h
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| v.abs() >= cut)
        .collect();
    let kept_norm = kept.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    let entries: Vec<(usize, f64)> = kept.into_iter().map(|(i, v)| (i, v / kept_norm)).collect();
    let norm_sq = entries.iter().map(|e| e.1 * e.1).sum();
    Ok(SparseDirection {
        dim: h.len(),
        entries,
        component,
        mode: ThresholdMode::Tspca(zeta),
        norm_sq,
        saturated: false,
    })
}

/// Shrinkage PC scores `(x_i - x̄)^T h`, optionally with `h` scaled to unit norm.
pub fn sh_pc_scores(x: &DataMatrix, dir: &SparseDirection, normalized: bool) -> Result<Vec<f64>> {
    if dir.dim() != x.d() {
        return Err(Error::DimensionMismatch {
            expected: x.d(),
            found: dir.dim(),
        });
    }
    if normalized {
        pca::sparse_pc_scores(x, &dir.normalized())
    } else {
        pca::sparse_pc_scores(x, dir.entries())
    }
}

/// Label 1 for nonnegative scores, 2 otherwise.
pub fn cluster_by_sign(scores: &[f64]) -> Vec<u8> {
    scores.iter().map(|&s| if s >= 0.0 { 1 } else { 2 }).collect()
}

/// Fraction of matching labels, maximized over the two label assignments.
pub fn label_agreement(predicted: &[u8], truth: &[u8]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(invalid("no labels to compare"));
    }
    let same = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    let n = truth.len();
    Ok(same.max(n - same) as f64 / n as f64)
}

/// One estimated component of the automatic sparse PCA.
#[derive(Debug, Clone, PartialEq)]
pub struct AspcaComponent {
    pub lambda_tilde: f64,
    pub direction: SparseDirection,
}

/// Full pipeline for the first `m` components: dual covariance, eigen
/// decomposition, NR correction and automatic thresholding.
pub fn aspca_fit(x: &DataMatrix, m: usize) -> Result<Vec<AspcaComponent>> {
    let nr = pca::fit_nr(x)?;
    aspca_from_nr(&nr, m)
}

pub fn aspca_from_nr(nr: &NrFit, m: usize) -> Result<Vec<AspcaComponent>> {
    check_m(nr, m)?;
    (0..m).map(|j| aspca_component(nr, j)).collect()
}

/// Same as [`aspca_from_nr`] with components thresholded in parallel.
pub fn aspca_from_nr_par(nr: &NrFit, m: usize) -> Result<Vec<AspcaComponent>> {
    check_m(nr, m)?;
    (0..m).into_par_iter().map(|j| aspca_component(nr, j)).collect()
}

fn aspca_component(nr: &NrFit, j: usize) -> Result<AspcaComponent> {
    Ok(AspcaComponent {
        lambda_tilde: nr.lambda_tilde[j],
        direction: threshold_auto(nr, j)?,
    })
}

fn check_m(nr: &NrFit, m: usize) -> Result<()> {
    if m == 0 || m > nr.components() {
        return Err(Error::ComponentOutOfRange {
            requested: m,
            available: nr.components(),
        });
    }
    Ok(())
}
