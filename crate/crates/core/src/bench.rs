//! Replicated Monte-Carlo comparison of direction estimators against a known
//! truth.
//!
//! Every replication draws one data matrix from stream `(seed, rep)` and hands
//! it to all estimators (paired design). Replications may run in parallel;
//! results are collected by index and the per-cell summaries sort their
//! inputs before reducing, so output never depends on scheduling.

use std::cell::OnceCell;
use std::fmt;
use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::pca::{self, aligned_mse, component_count, DataMatrix, NrFit};
use crate::simgen::{ModelSpec, ModelTruth, Sampler, Setting};
use crate::sparse::{threshold_auto, threshold_omega, tspca};

/// Default number of replications per cell.
pub const DEFAULT_REPLICATIONS: usize = 100;

/// CSV header written by [`write_csv`].
pub const CSV_HEADER: &str =
    "setting,d,n,R,estimator,param,component,mean_mse,stderr,invalid_count,seed,seconds";

/// Data of one replication together with a lazily computed NR fit shared
/// across estimators.
pub struct Replicate<'a> {
    data: &'a DataMatrix,
    fit: OnceCell<Result<NrFit>>,
}

impl<'a> Replicate<'a> {
    pub fn new(data: &'a DataMatrix) -> Self {
        Self {
            data,
            fit: OnceCell::new(),
        }
    }

    pub fn data(&self) -> &DataMatrix {
        self.data
    }

    /// Conventional and NR fit of this replication, computed on first use.
    pub fn fit(&self) -> Result<&NrFit> {
        self.fit
            .get_or_init(|| pca::fit_nr(self.data))
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// A direction estimator evaluated by [`run_experiment`].
pub trait Estimator: Send + Sync {
    fn name(&self) -> String;

    /// Tuning parameter reported in the `param` column.
    fn param(&self) -> Option<f64> {
        None
    }

    /// Estimate of direction `j` (0-based). `Ok(None)` marks the replication as
    /// missing for this component (invalid NR component or undefined direction).
    fn estimate(&self, rep: &Replicate<'_>, j: usize) -> Result<Option<Vec<f64>>>;
}

/// Built-in estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// Unit sample eigenvectors `ĥ_j`.
    Conventional,
    /// `ĥ_j` thresholded at `min(ζ, max|ĥ_j|)` and renormalized.
    Tspca(f64),
    /// Automatic thresholding of `h̃_j`.
    Aspca,
    /// Cumulative-mass truncation of `h̃_j` at ω.
    Shrink(f64),
}

impl Builtin {
    /// Parses `pca`, `aspca`, `tspca:ζ` or `shrink:ω`.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |what: &str| -> Result<f64> {
            let a = arg.ok_or_else(|| invalid(format!("{head} needs a parameter, e.g. {head}:{what}")))?;
            a.parse()
                .map_err(|_| invalid(format!("bad {head} parameter {a:?}")))
        };
        let est = match head.to_ascii_lowercase().as_str() {
            "pca" | "conventional" if arg.is_none() => Builtin::Conventional,
            "aspca" if arg.is_none() => Builtin::Aspca,
            "tspca" => Builtin::Tspca(num("0.01")?),
            "shrink" => Builtin::Shrink(num("0.5")?),
            _ => return Err(invalid(format!("unknown estimator {s:?}"))),
        };
        match est {
            Builtin::Tspca(z) if !(z > 0.0 && z.is_finite()) => {
                Err(invalid(format!("tspca threshold must be positive, got {z}")))
            }
            Builtin::Shrink(w) if !(w > 0.0 && w <= 1.0) => {
                Err(invalid(format!("shrink target must lie in (0, 1], got {w}")))
            }
            e => Ok(e),
        }
    }

    /// Parses a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let list: Vec<Self> = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(Self::parse)
            .collect::<Result<_>>()?;
        if list.is_empty() {
            return Err(invalid("estimator list is empty"));
        }
        Ok(list)
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Conventional => f.write_str("pca"),
            Builtin::Aspca => f.write_str("aspca"),
            Builtin::Tspca(z) => write!(f, "tspca:{z}"),
            Builtin::Shrink(w) => write!(f, "shrink:{w}"),
        }
    }
}

impl Estimator for Builtin {
    fn name(&self) -> String {
        match self {
            Builtin::Conventional => "pca",
            Builtin::Tspca(_) => "tspca",
            Builtin::Aspca => "aspca",
            Builtin::Shrink(_) => "shrink",
        }
        .to_string()
    }

    fn param(&self) -> Option<f64> {
        match self {
            Builtin::Tspca(z) => Some(*z),
            Builtin::Shrink(w) => Some(*w),
            _ => None,
        }
    }

    fn estimate(&self, rep: &Replicate<'_>, j: usize) -> Result<Option<Vec<f64>>> {
        let fit = rep.fit()?;
        fit.base.check_range(j)?;
        Ok(match self {
            Builtin::Conventional => fit.base.h_hat[j].clone(),
            Builtin::Tspca(z) => match &fit.base.h_hat[j] {
                Some(h) => Some(tspca(h, j, *z)?.to_dense()),
                None => None,
            },
            Builtin::Aspca => fit
                .is_valid(j)
                .then(|| threshold_auto(fit, j).map(|s| s.to_dense()))
                .transpose()?,
            Builtin::Shrink(w) => fit
                .is_valid(j)
                .then(|| threshold_omega(fit, j, *w).map(|s| s.to_dense()))
                .transpose()?,
        })
    }
}

/// Replication settings shared by every cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub replications: usize,
    pub seed: u64,
    pub parallel: bool,
    /// Record wall time; when false `seconds` is 0 so output is reproducible.
    pub timing: bool,
}

impl RunOptions {
    pub fn new(replications: usize, seed: u64) -> Self {
        Self {
            replications,
            seed,
            parallel: true,
            timing: false,
        }
    }
}

/// One output row: an (estimator, component) summary of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub setting: String,
    pub d: usize,
    pub n: usize,
    pub replications: usize,
    pub estimator: String,
    pub param: Option<f64>,
    /// 1-based.
    pub component: usize,
    /// Mean over valid replications; NaN if none were valid.
    pub mean_mse: f64,
    pub stderr: f64,
    pub invalid_count: usize,
    pub seed: u64,
    /// Wall time of the whole cell.
    pub seconds: f64,
}

/// Per-replication MSE for each estimator and component: `[estimator][component]`.
pub fn replication_mse(
    sampler: &Sampler,
    truth: &ModelTruth,
    n: usize,
    estimators: &[&dyn Estimator],
    seed: u64,
    rep: u64,
) -> Result<Vec<Vec<Option<f64>>>> {
    let sample = sampler.sample_replication(n, seed, rep)?;
    let replicate = Replicate::new(&sample.data);
    estimators
        .iter()
        .map(|est| {
            (0..truth.m)
                .map(|j| match est.estimate(&replicate, j)? {
                    Some(h) => aligned_mse(&h, &truth.directions[j]).map(Some),
                    None => Ok(None),
                })
                .collect()
        })
        .collect()
}

/// Mean, standard error and missing count of a set of replication outcomes.
///
/// Values are sorted before summation so the result does not depend on the
/// order of the replications.
pub fn summarize(values: &[Option<f64>]) -> (f64, f64, usize) {
    let mut ok: Vec<f64> = values.iter().flatten().copied().collect();
    let missing = values.len() - ok.len();
    if ok.is_empty() {
        return (f64::NAN, f64::NAN, missing);
    }
    ok.sort_by(f64::total_cmp);
    let k = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / k;
    if ok.len() < 2 {
        return (mean, 0.0, missing);
    }
    let mut dev: Vec<f64> = ok.iter().map(|v| (v - mean).powi(2)).collect();
    dev.sort_by(f64::total_cmp);
    let var = dev.iter().sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt(), missing)
}

/// Runs `R` paired replications of one cell.
pub fn run_experiment(
    spec: &ModelSpec,
    n: usize,
    estimators: &[&dyn Estimator],
    opts: RunOptions,
) -> Result<Vec<BenchRecord>> {
    if estimators.is_empty() {
        return Err(invalid("estimator list is empty"));
    }
    if opts.replications == 0 {
        return Err(invalid("need at least one replication"));
    }
    if n < DataMatrix::MIN_SAMPLES {
        return Err(invalid(format!(
            "need at least {} samples, got {n}",
            DataMatrix::MIN_SAMPLES
        )));
    }
    let truth = spec.truth();
    let available = component_count(spec.d(), n);
    if truth.m > available {
        return Err(Error::ComponentOutOfRange {
            requested: truth.m,
            available,
        });
    }
    let start = Instant::now();
    let sampler = spec.sampler()?;
    let one = |rep: usize| replication_mse(&sampler, &truth, n, estimators, opts.seed, rep as u64);
    let outcomes: Vec<Vec<Vec<Option<f64>>>> = if opts.parallel {
        (0..opts.replications)
            .into_par_iter()
            .map(one)
            .collect::<Result<_>>()?
    } else {
        (0..opts.replications).map(one).collect::<Result<_>>()?
    };
    let seconds = if opts.timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };

    let mut records = Vec::with_capacity(estimators.len() * truth.m);
    for (e, est) in estimators.iter().enumerate() {
        for j in 0..truth.m {
            let column: Vec<Option<f64>> = outcomes.iter().map(|o| o[e][j]).collect();
            let (mean_mse, stderr, invalid_count) = summarize(&column);
            records.push(BenchRecord {
                setting: spec.name().to_string(),
                d: spec.d(),
                n,
                replications: opts.replications,
                estimator: est.name(),
                param: est.param(),
                component: j + 1,
                mean_mse,
                stderr,
                invalid_count,
                seed: opts.seed,
                seconds,
            });
        }
    }
    Ok(records)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `(d, n)` cell under a sweep seed. Independent of grid order.
pub fn cell_seed(seed: u64, d: usize, n: usize) -> u64 {
    splitmix64(seed ^ splitmix64((d as u64) ^ splitmix64(n as u64).rotate_left(17)))
}

/// Runs every `(d, n)` cell of `grid` for one setting. Each cell uses
/// [`cell_seed`]; the records carry the derived seed.
pub fn sweep(
    setting: Setting,
    grid: &[(usize, usize)],
    estimators: &[&dyn Estimator],
    opts: RunOptions,
) -> Result<Vec<BenchRecord>> {
    if grid.is_empty() {
        return Err(invalid("sweep grid is empty"));
    }
    let mut out = Vec::new();
    for &(d, n) in grid {
        let spec = setting.spec(d)?;
        let cell = RunOptions {
            seed: cell_seed(opts.seed, d, n),
            ..opts
        };
        out.extend(run_experiment(&spec, n, estimators, cell)?);
    }
    Ok(out)
}

/// Grid pairing each `d` with `n = ⌈√d⌉`.
pub fn sqrt_grid(ds: &[usize]) -> Vec<(usize, usize)> {
    ds.iter().map(|&d| (d, crate::simgen::n_for_d(d))).collect()
}

/// `(d, mean_mse)` for one estimator and 1-based component, sorted by `d`.
pub fn trend(records: &[BenchRecord], estimator: &str, component: usize) -> Vec<(usize, f64)> {
    let mut t: Vec<(usize, f64)> = records
        .iter()
        .filter(|r| r.estimator == estimator && r.component == component)
        .map(|r| (r.d, r.mean_mse))
        .collect();
    t.sort_by_key(|p| p.0);
    t
}

pub fn strictly_decreasing(t: &[(usize, f64)]) -> bool {
    t.windows(2).all(|w| w[1].1 < w[0].1)
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

/// Writes the long-form CSV, preceded by a `#` metadata line.
pub fn write_csv<W: Write>(records: &[BenchRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "# design=paired; mean over valid replications; invalid NR components excluded and counted")?;
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.setting,
            r.d,
            r.n,
            r.replications,
            r.estimator,
            r.param.map(sci).unwrap_or_default(),
            r.component,
            sci(r.mean_mse),
            sci(r.stderr),
            r.invalid_count,
            r.seed,
            sci(r.seconds),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::setting_s1;
    use proptest::prelude::*;

    /// Reports a direction whose MSE encodes a checksum of the data.
    struct Checksum;

    impl Estimator for Checksum {
        fn name(&self) -> String {
            "checksum".into()
        }

        fn estimate(&self, rep: &Replicate<'_>, _j: usize) -> Result<Option<Vec<f64>>> {
            let x = rep.data().matrix().as_slice();
            let sum: f64 = x.iter().enumerate().map(|(i, v)| v * (1.0 + i as f64).sqrt()).sum();
            let mut h = vec![0.0; rep.data().d()];
            h[rep.data().d() - 1] = sum;
            Ok(Some(h))
        }
    }

    #[test]
    fn deterministic_rerun() {
        let spec = setting_s1(64).unwrap();
        let est: [&dyn Estimator; 1] = [&Builtin::Conventional];
        let opts = RunOptions::new(10, 99);
        let a = run_experiment(&spec, 8, &est, opts).unwrap();
        let b = run_experiment(&spec, 8, &est, opts).unwrap();
        assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean_mse.to_bits(), y.mean_mse.to_bits());
            assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        }
        assert!(a.iter().all(|r| r.mean_mse >= 0.0 && r.stderr >= 0.0));
    }

    #[test]
    fn parallel_matches_sequential() {
        let spec = setting_s1(64).unwrap();
        let est: [&dyn Estimator; 3] = [&Builtin::Conventional, &Builtin::Aspca, &Builtin::Tspca(0.01)];
        let par = run_experiment(&spec, 8, &est, RunOptions::new(12, 5)).unwrap();
        let seq = run_experiment(&spec, 8, &est, RunOptions { parallel: false, ..RunOptions::new(12, 5) }).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn single_replication_has_zero_stderr() {
        let spec = setting_s1(64).unwrap();
        let est: [&dyn Estimator; 1] = [&Builtin::Aspca];
        let r = run_experiment(&spec, 8, &est, RunOptions::new(1, 3)).unwrap();
        for rec in r.iter().filter(|r| r.invalid_count == 0) {
            assert_eq!(rec.stderr, 0.0);
        }
    }

    #[test]
    fn paired_design_checksum() {
        let spec = setting_s1(32).unwrap();
        let est: [&dyn Estimator; 2] = [&Checksum, &Checksum];
        let sampler = spec.sampler().unwrap();
        let truth = spec.truth();
        for rep in 0..5 {
            let out = replication_mse(&sampler, &truth, 6, &est, 17, rep).unwrap();
            assert_eq!(out[0], out[1]);
        }
        let recs = run_experiment(&spec, 6, &est, RunOptions::new(8, 17)).unwrap();
        assert_eq!(recs[0].mean_mse.to_bits(), recs[2].mean_mse.to_bits());
        // different replications must see different data
        let a = replication_mse(&sampler, &truth, 6, &est, 17, 0).unwrap();
        let b = replication_mse(&sampler, &truth, 6, &est, 17, 1).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn grid_cardinality() {
        let est: [&dyn Estimator; 2] = [&Builtin::Conventional, &Builtin::Aspca];
        let r = sweep(Setting::S1, &sqrt_grid(&[64, 128]), &est, RunOptions::new(3, 1)).unwrap();
        assert_eq!(r.len(), 2 * 2 * 2);
        assert_eq!(r[0].n, 8);
        assert_eq!(r[4].n, 12);
        assert_ne!(r[0].seed, r[4].seed);
        assert!(sweep(Setting::S1, &[], &est, RunOptions::new(3, 1)).is_err());
    }

    #[test]
    fn trend_extraction_hand_oracle() {
        let rec = |d, est: &str, c, m| BenchRecord {
            setting: "s4".into(),
            d,
            n: 8,
            replications: 1,
            estimator: est.into(),
            param: None,
            component: c,
            mean_mse: m,
            stderr: 0.0,
            invalid_count: 0,
            seed: 0,
            seconds: 0.0,
        };
        let records = vec![
            rec(256, "aspca", 1, 0.4),
            rec(64, "aspca", 1, 0.9),
            rec(64, "pca", 1, 0.1),
            rec(1024, "aspca", 1, 0.2),
            rec(64, "aspca", 2, 5.0),
        ];
        let t = trend(&records, "aspca", 1);
        assert_eq!(t, vec![(64, 0.9), (256, 0.4), (1024, 0.2)]);
        assert!(strictly_decreasing(&t));
        assert!(!strictly_decreasing(&[(1, 0.5), (2, 0.5)]));
    }

    #[test]
    fn parse_estimators() {
        assert_eq!(
            Builtin::parse_list("pca,aspca,tspca:0.01,shrink:0.5").unwrap(),
            vec![Builtin::Conventional, Builtin::Aspca, Builtin::Tspca(0.01), Builtin::Shrink(0.5)]
        );
        assert!(Builtin::parse("tspca").is_err());
        assert!(Builtin::parse("shrink:1.5").is_err());
        assert!(Builtin::parse("aspca:1").is_err());
        assert!(Builtin::parse("lasso").is_err());
        assert!(Builtin::parse_list(",").is_err());
    }

    #[test]
    fn validation() {
        let spec = setting_s1(64).unwrap();
        let est: [&dyn Estimator; 1] = [&Builtin::Conventional];
        assert!(run_experiment(&spec, 8, &[], RunOptions::new(2, 0)).is_err());
        assert!(run_experiment(&spec, 8, &est, RunOptions::new(0, 0)).is_err());
        // n = 4 leaves only two components, enough for m = 2
        assert!(run_experiment(&spec, 4, &est, RunOptions::new(2, 0)).is_ok());
    }

    #[test]
    fn csv_layout() {
        let spec = setting_s1(64).unwrap();
        let est: [&dyn Estimator; 1] = [&Builtin::Tspca(0.05)];
        let r = run_experiment(&spec, 8, &est, RunOptions::new(2, 4)).unwrap();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[1], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        let fields: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(fields.len(), 12);
        assert_eq!(&fields[..5], &["s1", "64", "8", "2", "tspca"]);
        assert_eq!(fields[5].parse::<f64>().unwrap(), 0.05);
    }

    proptest! {
        #[test]
        fn summary_is_order_independent(
            values in proptest::collection::vec(proptest::option::weighted(0.8, 0.0f64..10.0), 1..40),
            seed in any::<u64>(),
        ) {
            let mut shuffled = values.clone();
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = splitmix64(s);
                shuffled.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let (m1, e1, c1) = summarize(&values);
            let (m2, e2, c2) = summarize(&shuffled);
            prop_assert_eq!(m1.to_bits(), m2.to_bits());
            prop_assert_eq!(e1.to_bits(), e2.to_bits());
            prop_assert_eq!(c1, c2);
        }
    }
}
