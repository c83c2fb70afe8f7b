//! Seeded synthetic data with a known spiked eigenstructure.
//!
//! Four reference settings are provided:
//!
//! * `s1`: Gaussian, diagonal covariance with `λ_1 = d^{2/3}`, `λ_2 = d^{1/2}`
//!   on the first two axes and unit noise elsewhere.
//! * `s2`: Gaussian, block diagonal with two intraclass blocks
//!   (`α = 0.5`, `β = 2`, sizes `⌈d^{2/3}⌉` and `⌈d^{1/2}⌉`) and an identity tail.
//! * `s3`: balanced two-class Gaussian mixture with means `±μ`, where `μ` has
//!   `⌈d^{2/3}⌉` leading ones, and power-decay covariances `ρ^{|i-j|^{1/3}}`
//!   with `ρ = 0.3` and `ρ = 0.4`.
//! * `s4`: non-Gaussian factor model `x = H Λ^{1/2} z` with standardized
//!   chi-squared(5) coordinates and `Σ = Γ_d` (`α = 0.5`, `β = 1`).
//!
//! Every draw comes from a ChaCha stream keyed by `(seed, replication)`, so
//! replications can be generated in any order or in parallel with identical
//! results.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covariance::{FactorColumn, LowRankFactor, DENSE_LIMIT};
use crate::error::{invalid, Result};
use crate::linalg::{cholesky, Matrix, SymmetricMatrix};
use crate::pca::DataMatrix;

/// Smallest integer `k` with `k^q >= d^p`, i.e. `⌈d^{p/q}⌉` without rounding error.
pub fn ceil_root(d: usize, p: u32, q: u32) -> usize {
    let target = (d as u128).pow(p);
    let mut k = (d as f64).powf(p as f64 / q as f64).floor() as u128;
    k = k.saturating_sub(2);
    while k.pow(q) < target {
        k += 1;
    }
    k as usize
}

/// Sample size `⌈√d⌉` used along the dimension sweeps.
pub fn n_for_d(d: usize) -> usize {
    ceil_root(d, 1, 2)
}

/// Generator family and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// Spike `spikes[j]` on axis `j`, variance `tail` on the remaining axes.
    SpikedDiagonal { spikes: Vec<f64>, tail: f64 },
    /// `diag(Γ_{d1}, Γ_{d2}, I)` with `Γ_q = β(αI + (1-α)11^T)`.
    BlockIntraclass {
        alpha: f64,
        beta: f64,
        d1: usize,
        d2: usize,
    },
    /// `ε N(μ, Ψ_1) + (1-ε) N(-μ, Ψ_2)`; `μ` has `mean_support` leading ones and
    /// `Ψ_s(i, j) = ρ_s^{|i-j|^{1/3}}`.
    TwoClassMixture {
        weight1: f64,
        mean_support: usize,
        rho1: f64,
        rho2: f64,
    },
    /// `x = H Λ^{1/2} z` with `HΛH^T = Γ_d` and `z` standardized chi-squared(df).
    ChiSqFactor { alpha: f64, beta: f64, df: usize },
}

/// Validated generator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    name: String,
    d: usize,
    kind: ModelKind,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, d: usize, kind: ModelKind) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.contains(|c: char| c == ',' || c.is_whitespace()) {
            return Err(invalid(format!("model name {name:?} must be a nonempty token")));
        }
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        match &kind {
            ModelKind::SpikedDiagonal { spikes, tail } => {
                if spikes.is_empty() || spikes.len() > d {
                    return Err(invalid("spiked model needs between 1 and d spikes"));
                }
                if spikes.iter().chain([tail]).any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(invalid("variances must be positive and finite"));
                }
            }
            ModelKind::BlockIntraclass { alpha, beta, d1, d2 } => {
                check_intraclass(*alpha, *beta)?;
                if *d1 == 0 || *d2 == 0 || d1 + d2 >= d {
                    return Err(invalid(format!(
                        "block sizes d1 = {d1}, d2 = {d2} must be positive with d1 + d2 < d = {d}"
                    )));
                }
            }
            ModelKind::TwoClassMixture {
                weight1,
                mean_support,
                rho1,
                rho2,
            } => {
                if !(*weight1 > 0.0 && *weight1 < 1.0) {
                    return Err(invalid("mixture weight must lie in (0, 1)"));
                }
                if *mean_support == 0 || *mean_support >= d {
                    return Err(invalid(format!(
                        "mean support {mean_support} must lie in [1, d) for d = {d}"
                    )));
                }
                if [rho1, rho2].iter().any(|r| !(**r > 0.0 && **r < 1.0)) {
                    return Err(invalid("correlation bases must lie in (0, 1)"));
                }
            }
            ModelKind::ChiSqFactor { alpha, beta, df } => {
                check_intraclass(*alpha, *beta)?;
                if *df == 0 {
                    return Err(invalid("degrees of freedom must be positive"));
                }
            }
        }
        Ok(Self { name, d, kind })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// True eigenstructure of the spiked part.
    pub fn truth(&self) -> ModelTruth {
        let d = self.d;
        let df = d as f64;
        match &self.kind {
            ModelKind::SpikedDiagonal { spikes, tail } => {
                let m = spikes.len();
                let directions = (0..m).map(|j| axis(d, j, 1.0)).collect();
                let noise = (d - m) as f64 * tail;
                let tr2 = spikes.iter().map(|l| l * l).sum::<f64>() + (d - m) as f64 * tail * tail;
                ModelTruth {
                    m,
                    lambda: spikes.clone(),
                    lambda_exact: true,
                    directions,
                    noise_trace: noise,
                    sse_ratio: Some(spikes.iter().fold(0.0f64, |a, b| a.max(*b)).powi(2) / tr2),
                    k_star: Some(vec![1; m]),
                }
            }
            ModelKind::BlockIntraclass { alpha, beta, d1, d2 } => {
                let lam = |q: usize| intraclass_max(q, *alpha, *beta);
                let (l1, l2) = (lam(*d1), lam(*d2));
                let d3 = d - d1 - d2;
                let inner = alpha * beta;
                let trace = beta * (*d1 + *d2) as f64 + d3 as f64;
                let tr2 = l1 * l1 + l2 * l2 + inner * inner * (*d1 + *d2 - 2) as f64 + d3 as f64;
                let h1 = block(d, 0, *d1);
                let h2 = block(d, *d1, *d2);
                ModelTruth {
                    m: 2,
                    lambda: vec![l1, l2],
                    lambda_exact: true,
                    directions: vec![h1, h2],
                    noise_trace: trace - l1 - l2,
                    sse_ratio: Some(l1.max(l2).powi(2) / tr2),
                    k_star: Some(vec![*d1, *d2]),
                }
            }
            ModelKind::TwoClassMixture {
                weight1,
                mean_support,
                ..
            } => {
                // ε1 ε2 |μ1 - μ2|^2 with μ2 = -μ1
                let lambda = weight1 * (1.0 - weight1) * 4.0 * *mean_support as f64;
                ModelTruth {
                    m: 1,
                    lambda: vec![lambda],
                    lambda_exact: false,
                    directions: vec![block(d, 0, *mean_support)],
                    noise_trace: df,
                    sse_ratio: None,
                    k_star: None,
                }
            }
            ModelKind::ChiSqFactor { alpha, beta, .. } => {
                let l1 = intraclass_max(d, *alpha, *beta);
                let inner = alpha * beta;
                let noise = (d - 1) as f64 * inner;
                ModelTruth {
                    m: 1,
                    lambda: vec![l1],
                    lambda_exact: true,
                    directions: vec![vec![1.0 / df.sqrt(); d]],
                    noise_trace: noise,
                    sse_ratio: Some(l1 * l1 / (l1 * l1 + (d - 1) as f64 * inner * inner)),
                    k_star: Some(vec![d]),
                }
            }
        }
    }

    /// Dense population covariance, for `d <= 1024`.
    pub fn covariance(&self) -> Result<SymmetricMatrix> {
        let d = self.d;
        if d > DENSE_LIMIT {
            return Err(invalid(format!("dense covariance refused for d = {d}")));
        }
        let mut m = Matrix::zeros(d, d);
        match &self.kind {
            ModelKind::SpikedDiagonal { spikes, tail } => {
                for i in 0..d {
                    m.set(i, i, spikes.get(i).copied().unwrap_or(*tail));
                }
            }
            ModelKind::BlockIntraclass { alpha, beta, d1, d2 } => {
                for (start, len) in [(0, *d1), (*d1, *d2)] {
                    let g = intraclass_cov(len, *alpha, *beta)?;
                    for i in 0..len {
                        for j in 0..len {
                            m.set(start + i, start + j, g.get(i, j));
                        }
                    }
                }
                for i in (d1 + d2)..d {
                    m.set(i, i, 1.0);
                }
            }
            ModelKind::TwoClassMixture {
                weight1,
                mean_support,
                rho1,
                rho2,
            } => {
                let w = *weight1;
                let spike = w * (1.0 - w) * 4.0;
                for i in 0..d {
                    for j in 0..d {
                        let mu = if i < *mean_support && j < *mean_support { spike } else { 0.0 };
                        let v = mu + w * power_decay(*rho1, i, j) + (1.0 - w) * power_decay(*rho2, i, j);
                        m.set(i, j, v);
                    }
                }
            }
            ModelKind::ChiSqFactor { alpha, beta, .. } => {
                return intraclass_cov(d, *alpha, *beta);
            }
        }
        SymmetricMatrix::new(m)
    }

    /// Prepares a sampler (factorizes any dense covariance once).
    pub fn sampler(&self) -> Result<Sampler> {
        let factors = match &self.kind {
            ModelKind::TwoClassMixture {
                mean_support: _,
                rho1,
                rho2,
                ..
            } => {
                let f1 = cholesky(&power_decay_matrix(self.d, *rho1)?)?;
                let f2 = cholesky(&power_decay_matrix(self.d, *rho2)?)?;
                Some((f1, f2))
            }
            _ => None,
        };
        Ok(Sampler {
            spec: self.clone(),
            factors,
        })
    }

    /// Serializes to a `key=value` block, one pair per line.
    pub fn to_kv(&self) -> String {
        let mut out = format!("name={}\nd={}\n", self.name, self.d);
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            ModelKind::SpikedDiagonal { spikes, tail } => {
                out += &format!("kind=spiked_diagonal\nspikes={}\ntail={tail}\n", join(spikes));
            }
            ModelKind::BlockIntraclass { alpha, beta, d1, d2 } => {
                out += &format!(
                    "kind=block_intraclass\nalpha={alpha}\nbeta={beta}\nd1={d1}\nd2={d2}\n"
                );
            }
            ModelKind::TwoClassMixture {
                weight1,
                mean_support,
                rho1,
                rho2,
            } => {
                out += &format!(
                    "kind=two_class_mixture\nweight1={weight1}\nmean_support={mean_support}\nrho1={rho1}\nrho2={rho2}\n"
                );
            }
            ModelKind::ChiSqFactor { alpha, beta, df } => {
                out += &format!("kind=chisq_factor\nalpha={alpha}\nbeta={beta}\ndf={df}\n");
            }
        }
        out
    }

    /// Parses a block written by [`ModelSpec::to_kv`]. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("expected key=value, got {line:?}")))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(invalid(format!("duplicate key {:?}", k.trim())));
            }
        }
        let get = |k: &str| {
            map.get(k)
                .map(String::as_str)
                .ok_or_else(|| invalid(format!("missing key {k:?}")))
        };
        let float = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| invalid(format!("key {k:?} is not a number")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| invalid(format!("key {k:?} is not an integer")))
        };
        let kind = match get("kind")? {
            "spiked_diagonal" => ModelKind::SpikedDiagonal {
                spikes: get("spikes")?
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| invalid(format!("bad spike value {s:?}")))
                    })
                    .collect::<Result<_>>()?,
                tail: float("tail")?,
            },
            "block_intraclass" => ModelKind::BlockIntraclass {
                alpha: float("alpha")?,
                beta: float("beta")?,
                d1: int("d1")?,
                d2: int("d2")?,
            },
            "two_class_mixture" => ModelKind::TwoClassMixture {
                weight1: float("weight1")?,
                mean_support: int("mean_support")?,
                rho1: float("rho1")?,
                rho2: float("rho2")?,
            },
            "chisq_factor" => ModelKind::ChiSqFactor {
                alpha: float("alpha")?,
                beta: float("beta")?,
                df: int("df")?,
            },
            other => return Err(invalid(format!("unknown model kind {other:?}"))),
        };
        Self::new(get("name")?, int("d")?, kind)
    }
}

/// True spiked eigenstructure of a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTruth {
    pub m: usize,
    pub lambda: Vec<f64>,
    /// False when `lambda` and `directions` are large-`d` approximations.
    pub lambda_exact: bool,
    /// Unit, mutually orthogonal directions `h_1..h_m` (dense).
    pub directions: Vec<Vec<f64>>,
    /// `Σ_{s > m} λ_s` (approximate when `lambda_exact` is false).
    pub noise_trace: f64,
    /// `λ_1^2 / tr(Σ^2)` when available in closed form.
    pub sse_ratio: Option<f64>,
    /// Supports of the true directions, when defined.
    pub k_star: Option<Vec<usize>>,
}

impl ModelTruth {
    /// `δ = Σ_{s > m} λ_s / (n - 1)`.
    pub fn delta(&self, n: usize) -> f64 {
        self.noise_trace / (n as f64 - 1.0)
    }

    /// `Σ_1 = Σ_j λ_j h_j h_j^T` as columns `λ_j^{1/2} h_j`, stored sparsely.
    pub fn sigma1_factor(&self) -> LowRankFactor {
        let d = self.directions[0].len();
        let columns = self
            .directions
            .iter()
            .zip(&self.lambda)
            .map(|(h, l)| {
                let s = l.sqrt();
                FactorColumn::Sparse(
                    h.iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(i, v)| (i, s * v))
                        .collect(),
                )
            })
            .collect();
        LowRankFactor::new(d, columns).expect("truth directions have length d")
    }
}

/// Draws from a [`ModelSpec`].
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: ModelSpec,
    factors: Option<(Matrix, Matrix)>,
}

/// A sampled data matrix with class labels (1 or 2) for mixture models.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub data: DataMatrix,
    pub labels: Option<Vec<u8>>,
}

/// Stream for replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

impl Sampler {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// `n` observations from replication stream `(seed, rep)`.
    pub fn sample_replication(&self, n: usize, seed: u64, rep: u64) -> Result<Sample> {
        self.sample_with(n, &mut replication_rng(seed, rep))
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Sample> {
        if n < DataMatrix::MIN_SAMPLES {
            return Err(invalid(format!(
                "need at least {} samples, got {n}",
                DataMatrix::MIN_SAMPLES
            )));
        }
        let d = self.spec.d;
        let mut columns = Vec::with_capacity(n);
        let mut labels = Vec::new();
        let mut z = vec![0.0; d];
        for _ in 0..n {
            let mut x = vec![0.0; d];
            match &self.spec.kind {
                ModelKind::SpikedDiagonal { spikes, tail } => {
                    let tail_sd = tail.sqrt();
                    for (i, xi) in x.iter_mut().enumerate() {
                        let sd = spikes.get(i).map_or(tail_sd, |s| s.sqrt());
                        *xi = sd * normal(rng);
                    }
                }
                ModelKind::BlockIntraclass { alpha, beta, d1, d2 } => {
                    intraclass_draw(&mut x[..*d1], *alpha, *beta, rng);
                    intraclass_draw(&mut x[*d1..d1 + d2], *alpha, *beta, rng);
                    for xi in &mut x[d1 + d2..] {
                        *xi = normal(rng);
                    }
                }
                ModelKind::TwoClassMixture {
                    weight1,
                    mean_support,
                    ..
                } => {
                    let first = rng.random::<f64>() < *weight1;
                    let (f1, f2) = self.factors.as_ref().expect("factored at construction");
                    let (factor, mu) = if first { (f1, 1.0) } else { (f2, -1.0) };
                    z.iter_mut().for_each(|v| *v = normal(rng));
                    for (i, xi) in x.iter_mut().enumerate() {
                        let row = &factor.row(i)[..=i];
                        let noise: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                        *xi = noise + if i < *mean_support { mu } else { 0.0 };
                    }
                    labels.push(if first { 1 } else { 2 });
                }
                ModelKind::ChiSqFactor { alpha, beta, df } => {
                    let scale = (2.0 * *df as f64).sqrt();
                    z.iter_mut().for_each(|v| {
                        let y: f64 = (0..*df).map(|_| normal(rng).powi(2)).sum();
                        *v = (y - *df as f64) / scale;
                    });
                    let l1 = intraclass_max(d, *alpha, *beta);
                    let rest = (alpha * beta).sqrt();
                    let coeffs: Vec<f64> = z.iter().enumerate().map(|(j, v)| {
                        if j == 0 { l1.sqrt() * v } else { rest * v }
                    }).collect();
                    helmert_combine(&coeffs, &mut x);
                }
            }
            columns.push(x);
        }
        let data = DataMatrix::from_observations(&columns)?;
        let labels = matches!(self.spec.kind, ModelKind::TwoClassMixture { .. }).then_some(labels);
        Ok(Sample { data, labels })
    }
}

/// One draw of `n` samples from `spec` on replication stream 0.
pub fn sample(spec: &ModelSpec, n: usize, seed: u64) -> Result<Sample> {
    spec.sampler()?.sample_replication(n, seed, 0)
}

#[inline]
fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `√β(√α z + √(1-α) w 1)`: covariance `Γ_q` in `O(q)`.
fn intraclass_draw<R: Rng + ?Sized>(out: &mut [f64], alpha: f64, beta: f64, rng: &mut R) {
    let w = normal(rng) * (1.0 - alpha).sqrt();
    let sa = alpha.sqrt();
    let sb = beta.sqrt();
    for x in out {
        *x = sb * (sa * normal(rng) + w);
    }
}

/// `out = Σ_k c_k h_k` where `h_1 = 1/√d` and `h_2..h_d` form the Helmert
/// basis of the complement.
fn helmert_combine(c: &[f64], out: &mut [f64]) {
    let d = c.len();
    let lead = c[0] / (d as f64).sqrt();
    // 1-based column k >= 2 has 1/√(k(k-1)) on rows 1..k-1 and -(k-1)/√(k(k-1)) on row k
    let mut suffix = 0.0;
    for i in (1..=d).rev() {
        let own = if i >= 2 {
            let k = i as f64;
            -(k - 1.0) * c[i - 1] / (k * (k - 1.0)).sqrt()
        } else {
            0.0
        };
        out[i - 1] = lead + own + suffix;
        if i >= 2 {
            let k = i as f64;
            suffix += c[i - 1] / (k * (k - 1.0)).sqrt();
        }
    }
}

fn check_intraclass(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// `β{(1-α)q + α}`.
pub fn intraclass_max(q: usize, alpha: f64, beta: f64) -> f64 {
    beta * ((1.0 - alpha) * q as f64 + alpha)
}

/// `Γ_q = β(αI + (1-α)11^T)`.
pub fn intraclass_cov(q: usize, alpha: f64, beta: f64) -> Result<SymmetricMatrix> {
    if q == 0 {
        return Err(invalid("intraclass block needs q >= 1"));
    }
    check_intraclass(alpha, beta)?;
    let mut m = Matrix::zeros(q, q);
    for i in 0..q {
        for j in 0..q {
            m.set(i, j, if i == j { beta } else { beta * (1.0 - alpha) });
        }
    }
    SymmetricMatrix::new(m)
}

fn power_decay(rho: f64, i: usize, j: usize) -> f64 {
    rho.powf((i.abs_diff(j) as f64).cbrt())
}

fn power_decay_matrix(d: usize, rho: f64) -> Result<SymmetricMatrix> {
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            m.set(i, j, power_decay(rho, i, j));
        }
    }
    SymmetricMatrix::new(m)
}

fn axis(d: usize, j: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[j] = value;
    v
}

fn block(d: usize, start: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    let s = 1.0 / (len as f64).sqrt();
    v[start..start + len].iter_mut().for_each(|x| *x = s);
    v
}

/// The four reference settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    S1,
    S2,
    S3,
    S4,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::S1, Setting::S2, Setting::S3, Setting::S4];

    pub fn id(self) -> &'static str {
        match self {
            Setting::S1 => "s1",
            Setting::S2 => "s2",
            Setting::S3 => "s3",
            Setting::S4 => "s4",
        }
    }

    pub fn spec(self, d: usize) -> Result<ModelSpec> {
        match self {
            Setting::S1 => setting_s1(d),
            Setting::S2 => setting_s2(d),
            Setting::S3 => setting_s3(d),
            Setting::S4 => setting_s4(d),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for Setting {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|x| x.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown setting {s:?} (expected s1, s2, s3 or s4)")))
    }
}

/// `λ_1 = d^{2/3}`, `λ_2 = d^{1/2}`, unit noise, `h_1 = e_1`, `h_2 = e_2`.
pub fn setting_s1(d: usize) -> Result<ModelSpec> {
    if d < 4 {
        return Err(invalid(format!("s1 needs d >= 4, got {d}")));
    }
    let df = d as f64;
    ModelSpec::new(
        "s1",
        d,
        ModelKind::SpikedDiagonal {
            spikes: vec![df.cbrt().powi(2), df.sqrt()],
            tail: 1.0,
        },
    )
}

/// Intraclass blocks of sizes `⌈d^{2/3}⌉`, `⌈d^{1/2}⌉` with `α = 0.5`, `β = 2`.
pub fn setting_s2(d: usize) -> Result<ModelSpec> {
    ModelSpec::new(
        "s2",
        d,
        ModelKind::BlockIntraclass {
            alpha: 0.5,
            beta: 2.0,
            d1: ceil_root(d, 2, 3),
            d2: ceil_root(d, 1, 2),
        },
    )
}

/// Balanced mixture of `N(±μ, Ψ_s)`; `μ` has `⌈d^{2/3}⌉` leading ones.
pub fn setting_s3(d: usize) -> Result<ModelSpec> {
    if d < 8 {
        return Err(invalid(format!("s3 needs d >= 8, got {d}")));
    }
    ModelSpec::new(
        "s3",
        d,
        ModelKind::TwoClassMixture {
            weight1: 0.5,
            mean_support: ceil_root(d, 2, 3),
            rho1: 0.3,
            rho2: 0.4,
        },
    )
}

/// Standardized chi-squared(5) factor model with `Σ = Γ_d`, `α = 0.5`, `β = 1`.
pub fn setting_s4(d: usize) -> Result<ModelSpec> {
    if d < 4 {
        return Err(invalid(format!("s4 needs d >= 4, got {d}")));
    }
    ModelSpec::new(
        "s4",
        d,
        ModelKind::ChiSqFactor {
            alpha: 0.5,
            beta: 1.0,
            df: 5,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, symmetric_eigen};

    fn empirical_cov(data: &DataMatrix) -> Matrix {
        let (c, _) = crate::linalg::center_columns(data.matrix()).unwrap();
        let mut s = c.matmul(&c.transpose()).unwrap();
        let k = 1.0 / (data.n() as f64 - 1.0);
        for i in 0..data.d() {
            for v in s.row_mut(i) {
                *v *= k;
            }
        }
        s
    }

    fn max_dev(a: &Matrix, b: &SymmetricMatrix) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_matrix().as_slice())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn ceil_root_is_exact() {
        assert_eq!(ceil_root(64, 2, 3), 16);
        assert_eq!(ceil_root(65, 2, 3), 17);
        assert_eq!(ceil_root(512, 2, 3), 64);
        assert_eq!(ceil_root(1000, 2, 3), 100);
        assert_eq!(ceil_root(500, 2, 3), 63);
        assert_eq!(n_for_d(128), 12);
        assert_eq!(n_for_d(64), 8);
        assert_eq!(n_for_d(512), 23);
        assert_eq!(n_for_d(1), 1);
    }

    #[test]
    fn s1_truth_d64() {
        let t = setting_s1(64).unwrap().truth();
        assert!((t.lambda[0] - 16.0).abs() < 1e-12);
        assert!((t.lambda[1] - 8.0).abs() < 1e-12);
        assert_eq!(t.directions[0][0], 1.0);
        assert_eq!(t.directions[1][1], 1.0);
        assert_eq!(t.k_star, Some(vec![1, 1]));
        assert!(setting_s1(3).is_err());
    }

    #[test]
    fn s2_truth_d64() {
        let spec = setting_s2(64).unwrap();
        let t = spec.truth();
        assert_eq!(
            spec.kind(),
            &ModelKind::BlockIntraclass { alpha: 0.5, beta: 2.0, d1: 16, d2: 8 }
        );
        assert_eq!(t.lambda, vec![17.0, 9.0]);
        assert_eq!(dot(&t.directions[0], &t.directions[1]), 0.0);
        assert_eq!(t.k_star, Some(vec![16, 8]));
        assert!(setting_s2(4).is_err());
    }

    #[test]
    fn s4_truth() {
        let t = setting_s4(100).unwrap().truth();
        assert_eq!(t.lambda, vec![50.5]);
        assert!((dot(&t.directions[0], &t.directions[0]) - 1.0).abs() < 1e-12);
        let big = setting_s4(1024).unwrap().truth();
        assert!(big.sse_ratio.unwrap() > 0.3);
    }

    #[test]
    fn closed_forms_match_eigensolver() {
        for spec in [setting_s1(16).unwrap(), setting_s2(40).unwrap(), setting_s4(64).unwrap()] {
            let t = spec.truth();
            let eig = symmetric_eigen(&spec.covariance().unwrap()).unwrap();
            for (j, l) in t.lambda.iter().enumerate() {
                assert!((eig.values[j] - l).abs() <= 1e-8 * l, "{}: {} vs {l}", spec.name(), eig.values[j]);
            }
            let total: f64 = eig.values.iter().sum();
            let expected = t.lambda.iter().sum::<f64>() + t.noise_trace;
            assert!((total - expected).abs() < 1e-8 * expected);
        }
    }

    #[test]
    fn truth_directions_orthonormal() {
        for s in Setting::ALL {
            let t = s.spec(64).unwrap().truth();
            for a in 0..t.m {
                for b in 0..t.m {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot(&t.directions[a], &t.directions[b]) - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn intraclass_closed_form() {
        let g = intraclass_cov(3, 0.5, 2.0).unwrap();
        assert_eq!(g.get(0, 0), 2.0);
        assert_eq!(g.get(0, 1), 1.0);
        let eig = symmetric_eigen(&g).unwrap();
        assert!((eig.values[0] - 4.0).abs() < 1e-10);
        assert!((eig.values[1] - 1.0).abs() < 1e-10);
        assert!((eig.values[2] - 1.0).abs() < 1e-10);
        let r = 1.0 / 3f64.sqrt();
        for v in eig.vector(0) {
            assert!((v - r).abs() < 1e-8);
        }
        let near = intraclass_cov(4, 0.999_999, 3.0).unwrap();
        assert!(near.get(0, 1) < 1e-5 && near.get(1, 1) == 3.0);
        assert!(intraclass_cov(0, 0.5, 1.0).is_err());
        assert!(intraclass_cov(2, 1.0, 1.0).is_err());
        assert!(intraclass_cov(2, 0.5, 0.0).is_err());
    }

    #[test]
    fn helmert_basis_is_orthonormal() {
        let d = 7;
        let basis: Vec<Vec<f64>> = (0..d)
            .map(|k| {
                let mut c = vec![0.0; d];
                c[k] = 1.0;
                let mut out = vec![0.0; d];
                helmert_combine(&c, &mut out);
                out
            })
            .collect();
        for a in 0..d {
            for b in 0..d {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot(&basis[a], &basis[b]) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let spec = setting_s1(16).unwrap();
        let a = sample(&spec, 6, 42).unwrap();
        let b = sample(&spec, 6, 42).unwrap();
        let c = sample(&spec, 6, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.data, c.data);
        let s = spec.sampler().unwrap();
        let r3 = s.sample_replication(6, 42, 3).unwrap();
        assert_eq!(r3, s.sample_replication(6, 42, 3).unwrap());
        assert_ne!(r3, a);
        assert!(s.sample_replication(3, 1, 0).is_err());
    }

    #[test]
    fn s1_empirical_covariance() {
        let spec = setting_s1(8).unwrap();
        let x = sample(&spec, 100_000, 1).unwrap().data;
        let s = empirical_cov(&x);
        assert!(max_dev(&s, &spec.covariance().unwrap()) <= 0.1);
        for m in x.variable_means() {
            assert!(m.abs() < 0.05);
        }
    }

    #[test]
    fn s2_empirical_covariance() {
        let spec = setting_s2(12).unwrap();
        let x = sample(&spec, 100_000, 2).unwrap().data;
        assert!(max_dev(&empirical_cov(&x), &spec.covariance().unwrap()) <= 0.1);
    }

    #[test]
    fn s3_mixture_properties() {
        let spec = setting_s3(12).unwrap();
        let s = sample(&spec, 10_000, 3).unwrap();
        let labels = s.labels.unwrap();
        let freq = labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len() as f64;
        assert!((freq - 0.5).abs() < 0.05);
        for m in s.data.variable_means() {
            assert!(m.abs() < 0.1);
        }
        let cov = spec.covariance().unwrap();
        assert!((0..12).all(|i| cov.get(i, i) > 1.0 - 1e-12));
        assert!(max_dev(&empirical_cov(&s.data), &cov) <= 0.15);
        assert!(!spec.truth().lambda_exact);
    }

    #[test]
    fn s4_standardized_chi_squared() {
        let spec = setting_s4(4).unwrap();
        let s = spec.sampler().unwrap();
        let mut rng = replication_rng(11, 0);
        let df = 5usize;
        let scale = (2.0 * df as f64).sqrt();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                let y: f64 = (0..df).map(|_| normal(&mut rng).powi(2)).sum();
                (y - df as f64) / scale
            })
            .collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let skew = draws.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.02);
        assert!((skew - 2.0 * (2.0f64 / 5.0).sqrt()).abs() < 0.1);

        let x = s.sample_replication(100_000, 5, 0).unwrap().data;
        assert!(max_dev(&empirical_cov(&x), &spec.covariance().unwrap()) <= 0.1);
    }

    #[test]
    fn kv_round_trip() {
        for s in Setting::ALL {
            let spec = s.spec(100).unwrap();
            let back = ModelSpec::from_kv(&spec.to_kv()).unwrap();
            assert_eq!(back, spec);
        }
        assert!(ModelSpec::from_kv("name=x\nd=4\nkind=nope\n").is_err());
        assert!(ModelSpec::from_kv("name=x\nd=4\n").is_err());
        assert!(ModelSpec::from_kv("garbage").is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::new("x", 4, ModelKind::SpikedDiagonal { spikes: vec![-1.0], tail: 1.0 }).is_err());
        assert!(ModelSpec::new(
            "x",
            10,
            ModelKind::TwoClassMixture { weight1: 1.0, mean_support: 2, rho1: 0.3, rho2: 0.4 }
        )
        .is_err());
        assert!(ModelSpec::new("two words", 4, ModelKind::SpikedDiagonal { spikes: vec![2.0], tail: 1.0 }).is_err());
        assert!("s5".parse::<Setting>().is_err());
        assert_eq!("S3".parse::<Setting>().unwrap(), Setting::S3);
    }
}
