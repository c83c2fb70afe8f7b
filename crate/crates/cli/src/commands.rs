use std::path::{Path, PathBuf};

use aspca_core::bench::{self, Builtin, Estimator, RunOptions};
use aspca_core::simgen::{self, ModelSpec, Setting};
use aspca_core::{
    cluster_by_sign, fit_nr, sparse_pc_scores, threshold_auto, threshold_omega, tspca, DataMatrix,
    NrFit,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};
use crate::io::{self, DirectionEntries, Orientation, ValueRow};
use crate::svg;

#[derive(Debug, Parser)]
#[command(name = "aspca", version, about = "Automatic sparse PCA for high-dimension, low-sample-size data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate eigenvalues and (sparse) PC directions of a data matrix.
    Fit(FitArgs),
    /// Project samples onto directions read from a triplet file.
    Scores(ScoresArgs),
    /// Two-group clustering by the sign of the first PC score.
    Cluster(ClusterArgs),
    /// Draw a synthetic data matrix from a reference setting or a model file.
    Simulate(SimulateArgs),
    /// Replicated MSE comparison of estimators over a dimension grid.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Conventional unit eigenvectors.
    Pca,
    /// Noise-reduction directions (not thresholded).
    Nr,
    /// Automatic thresholding of the NR directions.
    Aspca,
    /// Conventional directions thresholded at zeta and renormalized.
    Tspca,
    /// NR directions truncated at cumulative squared mass omega.
    Shrink,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Comma-separated numeric matrix.
    pub input: PathBuf,
    /// Layout of the input file.
    #[arg(long, value_enum, default_value_t = Orientation::VariablesInRows)]
    pub orientation: Orientation,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = Method::Aspca)]
    pub method: Method,
    /// Threshold for --method tspca.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Cumulative mass target in (0, 1] for --method shrink.
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of components m.
    #[arg(short = 'm', long, default_value_t = 1)]
    pub components: usize,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Output prefix; writes PREFIX_values.csv and PREFIX_directions.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoresArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Direction triplet file (component,index,value).
    pub directions: PathBuf,
    /// Scale each direction to unit length before projecting.
    #[arg(long)]
    pub normalized: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a scatter plot of the first two scores.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Number of score columns to report; labels use the first.
    #[arg(short = 'm', long, default_value_t = 1)]
    pub components: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Reference setting: s1, s2, s3 or s4.
    #[arg(long, value_parser = parse_setting, required_unless_present = "model", conflicts_with = "model")]
    pub setting: Option<Setting>,
    /// Model file in key=value form (as written next to simulated data).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dimension (required with --setting).
    #[arg(long)]
    pub d: Option<usize>,
    /// Sample size; defaults to ceil(sqrt(d)).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Orientation::VariablesInRows)]
    pub orientation: Orientation,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_setting)]
    pub setting: Setting,
    /// Colon-separated dimensions, e.g. 64:256:1024.
    #[arg(long)]
    pub d_grid: String,
    /// Colon-separated sample sizes matching --d-grid; defaults to ceil(sqrt(d)).
    #[arg(long)]
    pub n_grid: Option<String>,
    #[arg(long, default_value_t = bench::DEFAULT_REPLICATIONS)]
    pub reps: usize,
    /// Comma-separated: pca, aspca, tspca:ZETA, shrink:OMEGA.
    #[arg(long, default_value = "pca,aspca")]
    pub estimators: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write 0 in the seconds column so output is byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
    /// Run replications on one thread.
    #[arg(long)]
    pub sequential: bool,
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    s.parse().map_err(|e: aspca_core::Error| e.to_string())
}

fn parse_grid(s: &str, what: &str) -> CliResult<Vec<usize>> {
    let g: Vec<usize> = s
        .split(':')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad {what} entry {t:?}")))
        })
        .collect::<CliResult<_>>()?;
    if g.is_empty() {
        return Err(CliError::Usage(format!("{what} is empty")));
    }
    Ok(g)
}

fn check_method(m: &MethodArgs) -> CliResult<()> {
    match (m.method, m.zeta, m.omega) {
        (Method::Tspca, None, _) => Err(CliError::Usage("--method tspca needs --zeta".into())),
        (Method::Shrink, _, None) => Err(CliError::Usage("--method shrink needs --omega".into())),
        (Method::Tspca, _, Some(_)) | (Method::Shrink, Some(_), _) => Err(CliError::Usage(
            "--zeta applies only to tspca and --omega only to shrink".into(),
        )),
        (Method::Pca | Method::Nr | Method::Aspca, z, w) if z.is_some() || w.is_some() => Err(
            CliError::Usage("--zeta applies only to tspca and --omega only to shrink".into()),
        ),
        (_, Some(z), _) if !(z > 0.0 && z.is_finite()) => {
            Err(CliError::Usage(format!("--zeta must be positive, got {z}")))
        }
        (_, _, Some(w)) if !(w > 0.0 && w <= 1.0) => {
            Err(CliError::Usage(format!("--omega must lie in (0, 1], got {w}")))
        }
        _ => Ok(()),
    }
}

/// Directions of components `1..=m` under the chosen method.
pub fn estimate(
    x: &DataMatrix,
    method: &MethodArgs,
    m: usize,
) -> CliResult<(NrFit, Vec<DirectionEntries>, Vec<ValueRow>)> {
    check_method(method)?;
    let nr = fit_nr(x)?;
    if m == 0 || m > nr.components() {
        return Err(CliError::Usage(format!(
            "--components must lie in 1..={} for d = {}, n = {}",
            nr.components(),
            x.d(),
            x.n()
        )));
    }
    let dense = |h: &[f64]| h.iter().copied().enumerate().collect::<Vec<_>>();
    let mut dirs = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    for j in 0..m {
        let entries = match method.method {
            Method::Pca => dense(nr.base.direction(j)?),
            Method::Nr => dense(nr.direction(j)?),
            Method::Aspca => threshold_auto(&nr, j)?.entries().to_vec(),
            Method::Tspca => tspca(nr.base.direction(j)?, j, method.zeta.unwrap_or_default())?
                .entries()
                .to_vec(),
            Method::Shrink => threshold_omega(&nr, j, method.omega.unwrap_or(1.0))?
                .entries()
                .to_vec(),
        };
        values.push(ValueRow {
            component: j + 1,
            lambda_hat: nr.base.lambda_hat[j],
            lambda_tilde: nr.lambda_tilde[j],
            delta_hat: nr.delta_hat[j],
            k_support: entries.len(),
        });
        dirs.push(DirectionEntries {
            component: j + 1,
            entries,
        });
    }
    Ok((nr, dirs, values))
}

fn out_path(given: &Option<PathBuf>, default_name: &str) -> PathBuf {
    given
        .clone()
        .unwrap_or_else(|| io::default_out_dir().join(default_name))
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn sibling(p: &Path, name: String) -> PathBuf {
    p.with_file_name(name)
}

fn write_svg(path: &Path, scores: &[Vec<f64>], labels: Option<&[u8]>) -> CliResult<()> {
    let (points, xl, yl): (Vec<(f64, f64)>, _, _) = if scores.len() >= 2 {
        (
            scores[0].iter().copied().zip(scores[1].iter().copied()).collect(),
            "score 1",
            "score 2",
        )
    } else {
        (
            scores[0].iter().enumerate().map(|(i, &s)| ((i + 1) as f64, s)).collect(),
            "sample",
            "score 1",
        )
    };
    let text = svg::scatter(&points, labels, xl, yl);
    let mut w = io::create(path)?;
    std::io::Write::write_all(&mut w, text.as_bytes())
        .and_then(|_| std::io::Write::flush(&mut w))
        .map_err(|e| CliError::io(path, e))
}

fn fit(a: &FitArgs) -> CliResult<Vec<PathBuf>> {
    let x = io::read_matrix(&a.input.input, a.input.orientation)?;
    let (_, dirs, values) = estimate(&x, &a.method, a.components)?;
    let prefix = out_path(&a.out, &stem(&a.input.input));
    let vp = with_suffix(&prefix, "_values.csv");
    let dp = with_suffix(&prefix, "_directions.csv");
    io::write_values(&vp, &values)?;
    io::write_directions(&dp, &dirs)?;
    Ok(vec![vp, dp])
}

fn scores(a: &ScoresArgs) -> CliResult<Vec<PathBuf>> {
    let x = io::read_matrix(&a.input.input, a.input.orientation)?;
    let dirs = io::read_directions(&a.directions)?;
    let mut all = Vec::with_capacity(dirs.len());
    for dir in &dirs {
        if let Some(&(i, _)) = dir.entries.iter().find(|e| e.0 >= x.d()) {
            return Err(CliError::Parse(format!(
                "component {} uses variable {} but the data have d = {}",
                dir.component,
                i + 1,
                x.d()
            )));
        }
        let mut entries = dir.entries.clone();
        if a.normalized {
            let nrm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            if nrm == 0.0 {
                return Err(CliError::Numerical(format!(
                    "component {} has zero norm and cannot be normalized",
                    dir.component
                )));
            }
            entries.iter_mut().for_each(|e| e.1 /= nrm);
        }
        all.push(sparse_pc_scores(&x, &entries)?);
    }
    let out = out_path(&a.out, "scores.csv");
    io::write_scores(&out, &all, None)?;
    let mut written = vec![out];
    if let Some(p) = &a.svg {
        write_svg(p, &all, None)?;
        written.push(p.clone());
    }
    Ok(written)
}

fn cluster(a: &ClusterArgs) -> CliResult<Vec<PathBuf>> {
    let x = io::read_matrix(&a.input.input, a.input.orientation)?;
    let (_, dirs, _) = estimate(&x, &a.method, a.components)?;
    let all = dirs
        .iter()
        .map(|d| sparse_pc_scores(&x, &d.entries))
        .collect::<aspca_core::Result<Vec<_>>>()?;
    let labels = cluster_by_sign(&all[0]);
    let out = out_path(&a.out, "cluster.csv");
    io::write_scores(&out, &all, Some(&labels))?;
    let mut written = vec![out];
    if let Some(p) = &a.svg {
        write_svg(p, &all, Some(&labels))?;
        written.push(p.clone());
    }
    Ok(written)
}

fn simulate(a: &SimulateArgs) -> CliResult<Vec<PathBuf>> {
    let spec = match (&a.setting, &a.model) {
        (Some(s), None) => {
            let d = a.d.ok_or_else(|| CliError::Usage("--setting needs --d".into()))?;
            s.spec(d).map_err(|e| CliError::Usage(e.to_string()))?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let spec = ModelSpec::from_kv(&text)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            if a.d.is_some_and(|d| d != spec.d()) {
                return Err(CliError::Usage(format!(
                    "--d {} disagrees with the model file (d = {})",
                    a.d.unwrap_or_default(),
                    spec.d()
                )));
            }
            spec
        }
        _ => return Err(CliError::Usage("give exactly one of --setting and --model".into())),
    };
    let n = a.n.unwrap_or_else(|| simgen::n_for_d(spec.d()));
    let sample = spec
        .sampler()?
        .sample_replication(n, a.seed, 0)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let default = format!("{}_d{}_n{n}_seed{}.csv", spec.name(), spec.d(), a.seed);
    let out = out_path(&a.out, &default);
    io::write_matrix(&out, &sample.data, a.orientation)?;
    let mut written = vec![out.clone()];
    let base = stem(&out);
    if let Some(labels) = &sample.labels {
        let lp = sibling(&out, format!("{base}_labels.csv"));
        io::write_labels(&lp, labels)?;
        written.push(lp);
    }
    let mp = sibling(&out, format!("{base}_model.txt"));
    std::fs::write(&mp, spec.to_kv()).map_err(|e| CliError::io(&mp, e))?;
    written.push(mp);
    Ok(written)
}

fn run_bench(a: &BenchArgs) -> CliResult<Vec<PathBuf>> {
    let ds = parse_grid(&a.d_grid, "--d-grid")?;
    let grid: Vec<(usize, usize)> = match &a.n_grid {
        None => bench::sqrt_grid(&ds),
        Some(s) => {
            let ns = parse_grid(s, "--n-grid")?;
            if ns.len() != ds.len() {
                return Err(CliError::Usage(format!(
                    "--n-grid has {} entries but --d-grid has {}",
                    ns.len(),
                    ds.len()
                )));
            }
            ds.iter().copied().zip(ns).collect()
        }
    };
    let builtins = Builtin::parse_list(&a.estimators).map_err(|e| CliError::Usage(e.to_string()))?;
    let est: Vec<&dyn Estimator> = builtins.iter().map(|b| b as &dyn Estimator).collect();
    let opts = RunOptions {
        replications: a.reps,
        seed: a.seed,
        parallel: !a.sequential,
        timing: !a.no_timing,
    };
    for &(d, n) in &grid {
        a.setting.spec(d).map_err(|e| CliError::Usage(e.to_string()))?;
        if n < DataMatrix::MIN_SAMPLES || a.reps == 0 {
            return Err(CliError::Usage(format!(
                "cell d = {d}, n = {n}, R = {} is not runnable (need n >= {} and R >= 1)",
                a.reps,
                DataMatrix::MIN_SAMPLES
            )));
        }
    }
    let records = bench::sweep(a.setting, &grid, &est, opts)?;
    let out = out_path(&a.out, &format!("bench_{}.csv", a.setting));
    io::write_bench(&out, &records)?;
    for r in &records {
        let param = r.param.map(|p| format!(":{p}")).unwrap_or_default();
        println!(
            "{} d={:<6} n={:<4} {:>12} h{}  mse {:.5} ± {:.5}  invalid {}",
            r.setting,
            r.d,
            r.n,
            format!("{}{param}", r.estimator),
            r.component,
            r.mean_mse,
            r.stderr,
            r.invalid_count
        );
    }
    Ok(vec![out])
}

/// Executes a parsed command and returns the files written.
pub fn execute(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    match &cli.command {
        Command::Fit(a) => fit(a),
        Command::Scores(a) => scores(a),
        Command::Cluster(a) => cluster(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => run_bench(a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
