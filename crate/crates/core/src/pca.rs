//! Dual-covariance PCA and the noise-reduction (NR) estimators.
//!
//! With `d` variables and `n` samples (`d >> n` in the regimes of interest),
//! everything is computed from the `n x n` dual covariance
//! `S_D = (X - X̄)^T (X - X̄) / (n - 1)`, which shares its nonzero spectrum with
//! the `d x d` sample covariance.

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, dot, norm, Matrix, SymmetricMatrix};

/// Eigenvalues within this fraction of the leading eigenvalue are treated as
/// exact zeros (rank deficiency of the dual covariance).
pub const RANK_TOLERANCE: f64 = 1e-10;

/// `d x n` data matrix whose columns are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Matrix,
}

impl DataMatrix {
    pub const MIN_SAMPLES: usize = 4;

    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() == 0 {
            return Err(invalid("data matrix needs at least one variable"));
        }
        if values.cols() < Self::MIN_SAMPLES {
            return Err(invalid(format!(
                "data matrix needs at least {} samples, got {}",
                Self::MIN_SAMPLES,
                values.cols()
            )));
        }
        if !values.is_finite() {
            return Err(invalid("data matrix contains non-finite entries"));
        }
        Ok(Self { values })
    }

    /// One slice per variable, each of length `n`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// One slice per observation, each of length `d`.
    pub fn from_observations<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        Self::new(Matrix::from_columns(columns)?)
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.values.cols()
    }

    #[inline]
    pub fn get(&self, variable: usize, sample: usize) -> f64 {
        self.values.get(variable, sample)
    }

    /// Values of one variable across all samples.
    pub fn variable(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn observation(&self, i: usize) -> Vec<f64> {
        self.values.column(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let data = self.values.as_slice().iter().map(|v| c * v).collect();
        Self::new(Matrix::new(self.d(), self.n(), data)?)
    }

    pub fn variable_means(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.d())
            .map(|i| self.variable(i).iter().sum::<f64>() / n)
            .collect()
    }
}

/// `S_D = (X - X̄)^T (X - X̄) / (n - 1)`.
pub fn dual_covariance(x: &DataMatrix) -> SymmetricMatrix {
    let (centered, _) = linalg::center_columns(x.matrix()).expect("DataMatrix is nonempty");
    let n = x.n();
    let mut sd = Matrix::zeros(n, n);
    for v in 0..x.d() {
        let row = centered.row(v);
        for i in 0..n {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..n {
                sd.set(i, j, sd.get(i, j) + ri * row[j]);
            }
        }
    }
    let scale = 1.0 / (n as f64 - 1.0);
    for i in 0..n {
        for j in i..n {
            let v = sd.get(i, j) * scale;
            sd.set(i, j, v);
            sd.set(j, i, v);
        }
    }
    SymmetricMatrix::new(sd).expect("square")
}

/// Conventional PCA computed through the dual covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    d: usize,
    n: usize,
    /// `λ̂_1 >= ... >= λ̂_r >= 0`, `r = min(n - 2, d)`.
    pub lambda_hat: Vec<f64>,
    /// Full spectrum of `S_D` (length `n`), after zero clamping.
    pub dual_spectrum: Vec<f64>,
    /// Dual eigenvectors `û_j` (length `n`).
    pub u_hat: Vec<Vec<f64>>,
    /// Unit PC directions `ĥ_j`; `None` when `λ̂_j == 0`.
    pub h_hat: Vec<Option<Vec<f64>>>,
    pub trace_dual: f64,
}

impl PcaFit {
    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of components `r = min(n - 2, d)`.
    #[inline]
    pub fn components(&self) -> usize {
        self.lambda_hat.len()
    }

    /// Unit direction of component `j` (0-based).
    pub fn direction(&self, j: usize) -> Result<&[f64]> {
        self.check_range(j)?;
        self.h_hat[j]
            .as_deref()
            .ok_or(Error::AbsentComponent { component: j + 1 })
    }

    pub(crate) fn check_range(&self, j: usize) -> Result<()> {
        if j >= self.components() {
            return Err(Error::ComponentOutOfRange {
                requested: j + 1,
                available: self.components(),
            });
        }
        Ok(())
    }
}

/// Component count used by every fit: `min(n - 2, d)`.
pub fn component_count(d: usize, n: usize) -> usize {
    (n - 2).min(d)
}

pub fn fit_pca(x: &DataMatrix) -> Result<PcaFit> {
    let sd = dual_covariance(x);
    let trace_dual = sd.trace();
    let eig = linalg::symmetric_eigen(&sd)?;
    let (d, n) = (x.d(), x.n());
    let r = component_count(d, n);

    let lead = eig.values[0].max(0.0);
    let dual_spectrum: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| if v.abs() <= RANK_TOLERANCE * lead { 0.0 } else { v })
        .collect();

    let (centered, _) = linalg::center_columns(x.matrix())?;
    let mut u_hat = Vec::with_capacity(r);
    let mut h_hat = Vec::with_capacity(r);
    for j in 0..r {
        let u = eig.vector(j);
        let lambda = dual_spectrum[j];
        let h = if lambda > 0.0 {
            let scale = 1.0 / ((n as f64 - 1.0) * lambda).sqrt();
            Some(
                (0..d)
                    .map(|v| scale * dot(centered.row(v), &u))
                    .collect::<Vec<f64>>(),
            )
        } else {
            None
        };
        u_hat.push(u);
        h_hat.push(h);
    }

    Ok(PcaFit {
        d,
        n,
        lambda_hat: dual_spectrum[..r].to_vec(),
        dual_spectrum,
        u_hat,
        h_hat,
        trace_dual,
    })
}

/// Noise-reduction estimates layered on a conventional fit.
#[derive(Debug, Clone, PartialEq)]
pub struct NrFit {
    pub base: PcaFit,
    /// `λ̃_j = λ̂_j - δ̂_j`.
    pub lambda_tilde: Vec<f64>,
    /// `δ̂_j = (tr(S_D) - Σ_{s<=j} λ̂_s) / (n - j - 1)`, clamped at 0.
    pub delta_hat: Vec<f64>,
    /// `h̃_j = (λ̂_j / λ̃_j)^{1/2} ĥ_j`; `None` for invalid components.
    pub h_tilde: Vec<Option<Vec<f64>>>,
    /// `λ̃_j > 0` (beyond rounding relative to `λ̂_1`) and `ĥ_j` defined.
    pub valid: Vec<bool>,
}

impl NrFit {
    pub fn components(&self) -> usize {
        self.base.components()
    }

    /// Non-unit NR direction of component `j` (0-based).
    pub fn direction(&self, j: usize) -> Result<&[f64]> {
        self.base.check_range(j)?;
        self.h_tilde[j]
            .as_deref()
            .ok_or(Error::InvalidComponent {
                component: j + 1,
                lambda_tilde: self.lambda_tilde[j],
            })
    }

    pub fn is_valid(&self, j: usize) -> bool {
        self.valid.get(j).copied().unwrap_or(false)
    }
}

pub fn fit_nr(x: &DataMatrix) -> Result<NrFit> {
    Ok(nr_from_pca(fit_pca(x)?))
}

/// Applies the NR correction to an existing conventional fit.
pub fn nr_from_pca(base: PcaFit) -> NrFit {
    let n = base.n() as f64;
    let r = base.components();
    let mut lambda_tilde = Vec::with_capacity(r);
    let mut delta_hat = Vec::with_capacity(r);
    let mut h_tilde = Vec::with_capacity(r);
    let mut valid = Vec::with_capacity(r);
    let lead = base.lambda_hat.first().copied().unwrap_or(0.0);
    let mut cumulative = 0.0;
    for j in 0..r {
        let lambda = base.lambda_hat[j];
        cumulative += lambda;
        // 1-based index j + 1 gives the divisor n - (j + 1) - 1
        let delta = ((base.trace_dual - cumulative) / (n - j as f64 - 2.0)).max(0.0);
        let tilde = lambda - delta;
        // rounding can leave a numerically zero λ̃ slightly positive
        let ok = tilde > RANK_TOLERANCE * lead && tilde > 0.0 && base.h_hat[j].is_some();
        let h = if ok {
            let factor = (lambda / tilde).sqrt();
            base.h_hat[j]
                .as_ref()
                .map(|h| h.iter().map(|v| factor * v).collect())
        } else {
            None
        };
        lambda_tilde.push(tilde);
        delta_hat.push(delta);
        h_tilde.push(h);
        valid.push(ok);
    }
    NrFit {
        base,
        lambda_tilde,
        delta_hat,
        h_tilde,
        valid,
    }
}

/// Scores `(x_i - x̄)^T direction` for every sample.
pub fn pc_scores(x: &DataMatrix, direction: &[f64]) -> Result<Vec<f64>> {
    if direction.len() != x.d() {
        return Err(Error::DimensionMismatch {
            expected: x.d(),
            found: direction.len(),
        });
    }
    let entries: Vec<(usize, f64)> = direction
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .collect();
    sparse_pc_scores(x, &entries)
}

/// Scores for a direction given as `(variable index, value)` pairs; only the
/// listed variables are touched.
pub fn sparse_pc_scores(x: &DataMatrix, entries: &[(usize, f64)]) -> Result<Vec<f64>> {
    let n = x.n();
    let mut scores = vec![0.0; n];
    for &(var, value) in entries {
        if var >= x.d() {
            return Err(invalid(format!(
                "direction index {var} out of range for d = {}",
                x.d()
            )));
        }
        let row = x.variable(var);
        let mean = row.iter().sum::<f64>() / n as f64;
        for (s, &xv) in scores.iter_mut().zip(row) {
            *s += (xv - mean) * value;
        }
    }
    Ok(scores)
}

/// `Arccos(u^T v / (|u| |v|))` in `[0, π]`.
pub fn angle(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(invalid("angle is undefined for a zero vector"));
    }
    // 2 atan2(|û - v̂|, |û + v̂|) stays accurate near 0 and π, unlike acos
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    Ok(2.0 * minus.sqrt().atan2(plus.sqrt()))
}

/// `min_{s = ±1} |s * estimate - truth|^2`.
pub fn aligned_mse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    let (mut plus, mut minus) = (0.0, 0.0);
    for (&e, &t) in estimate.iter().zip(truth) {
        plus += (e - t) * (e - t);
        minus += (e + t) * (e + t);
    }
    Ok(plus.min(minus))
}
