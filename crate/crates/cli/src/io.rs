//! CSV dialects read and written by the command-line tool.
//!
//! All files are comma separated with `.` decimals. Lines starting with `#`
//! are ignored on input. Floating-point output uses 17 significant digits so
//! every value round-trips exactly. Components, variable indices and sample
//! numbers are 1-based in files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use aspca_core::bench::{BenchRecord, CSV_HEADER};
use aspca_core::DataMatrix;
use clap::ValueEnum;

use crate::error::{CliError, CliResult};

/// Layout of a matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Orientation {
    /// One variable per line, samples across columns (`d` lines of `n` values).
    #[default]
    #[value(name = "variables")]
    VariablesInRows,
    /// One sample per line (`n` lines of `d` values).
    #[value(name = "samples")]
    SamplesInRows,
}

/// Value with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(r)
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn parse_err(path: &Path, line: Option<u64>, msg: impl std::fmt::Display) -> CliError {
    match line {
        Some(l) => CliError::Parse(format!("{}:{l}: {msg}", path.display())),
        None => CliError::Parse(format!("{}: {msg}", path.display())),
    }
}

/// Rows of a CSV file, with the 1-based source line of each.
fn records(path: &Path, r: impl Read) -> CliResult<Vec<(u64, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader(r).into_records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line());
            parse_err(path, line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: FromStr>(path: &Path, line: u64, rec: &csv::StringRecord, i: usize) -> CliResult<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| parse_err(path, Some(line), format!("cannot parse field {} ({raw:?})", i + 1)))
}

/// Drops a header row whose first field is the given name.
fn skip_header(recs: &mut Vec<(u64, csv::StringRecord)>, first: &str) {
    if recs.first().is_some_and(|(_, r)| r.get(0) == Some(first)) {
        recs.remove(0);
    }
}

pub fn read_matrix(path: &Path, orientation: Orientation) -> CliResult<DataMatrix> {
    read_matrix_from(path, open(path)?, orientation)
}

pub fn read_matrix_from(path: &Path, r: impl Read, orientation: Orientation) -> CliResult<DataMatrix> {
    let recs = records(path, r)?;
    if recs.is_empty() {
        return Err(parse_err(path, None, "no data rows"));
    }
    let rows = recs
        .iter()
        .map(|(line, rec)| (0..rec.len()).map(|i| field(path, *line, rec, i)).collect())
        .collect::<CliResult<Vec<Vec<f64>>>>()?;
    let m = match orientation {
        Orientation::VariablesInRows => DataMatrix::from_rows(&rows),
        Orientation::SamplesInRows => DataMatrix::from_observations(&rows),
    };
    m.map_err(|e| parse_err(path, None, e))
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, w: impl FnOnce() -> std::io::Result<()>) -> CliResult<()> {
    w().map_err(|e| CliError::io(path, e))
}

pub fn write_matrix(path: &Path, x: &DataMatrix, orientation: Orientation) -> CliResult<()> {
    let mut w = create(path)?;
    finish(path, || {
        let (label, lines, width) = match orientation {
            Orientation::VariablesInRows => ("variables", x.d(), x.n()),
            Orientation::SamplesInRows => ("samples", x.n(), x.d()),
        };
        writeln!(w, "# d={} n={} rows={label}", x.d(), x.n())?;
        for i in 0..lines {
            let row: Vec<String> = (0..width)
                .map(|j| match orientation {
                    Orientation::VariablesInRows => fmt_f64(x.get(i, j)),
                    Orientation::SamplesInRows => fmt_f64(x.get(j, i)),
                })
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    })
}

/// One line of the eigenvalue file.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueRow {
    pub component: usize,
    pub lambda_hat: f64,
    pub lambda_tilde: f64,
    pub delta_hat: f64,
    pub k_support: usize,
}

pub const VALUES_HEADER: &str = "component,lambda_hat,lambda_tilde,delta_hat,k_support";

pub fn write_values(path: &Path, rows: &[ValueRow]) -> CliResult<()> {
    let mut w = create(path)?;
    finish(path, || {
        writeln!(w, "{VALUES_HEADER}")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.component,
                fmt_f64(r.lambda_hat),
                fmt_f64(r.lambda_tilde),
                fmt_f64(r.delta_hat),
                r.k_support
            )?;
        }
        w.flush()
    })
}

pub fn read_values(path: &Path) -> CliResult<Vec<ValueRow>> {
    let mut recs = records(path, open(path)?)?;
    skip_header(&mut recs, "component");
    recs.iter()
        .map(|(l, r)| {
            Ok(ValueRow {
                component: field(path, *l, r, 0)?,
                lambda_hat: field(path, *l, r, 1)?,
                lambda_tilde: field(path, *l, r, 2)?,
                delta_hat: field(path, *l, r, 3)?,
                k_support: field(path, *l, r, 4)?,
            })
        })
        .collect()
}

/// A direction in triplet form: 1-based component and 0-based `(index, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionEntries {
    pub component: usize,
    pub entries: Vec<(usize, f64)>,
}

pub const DIRECTIONS_HEADER: &str = "component,index,value";

pub fn write_directions(path: &Path, dirs: &[DirectionEntries]) -> CliResult<()> {
    let mut w = create(path)?;
    finish(path, || {
        writeln!(w, "{DIRECTIONS_HEADER}")?;
        for d in dirs {
            for &(i, v) in &d.entries {
                writeln!(w, "{},{},{}", d.component, i + 1, fmt_f64(v))?;
            }
        }
        w.flush()
    })
}

/// Reads a triplet file, grouping by component in order of appearance.
pub fn read_directions(path: &Path) -> CliResult<Vec<DirectionEntries>> {
    let mut recs = records(path, open(path)?)?;
    skip_header(&mut recs, "component");
    let mut out: Vec<DirectionEntries> = Vec::new();
    for (l, r) in &recs {
        let component: usize = field(path, *l, r, 0)?;
        let index: usize = field(path, *l, r, 1)?;
        let value: f64 = field(path, *l, r, 2)?;
        if index == 0 || component == 0 {
            return Err(parse_err(path, Some(*l), "components and indices are 1-based"));
        }
        match out.iter_mut().find(|d| d.component == component) {
            Some(d) => d.entries.push((index - 1, value)),
            None => out.push(DirectionEntries {
                component,
                entries: vec![(index - 1, value)],
            }),
        }
    }
    if out.is_empty() {
        return Err(parse_err(path, None, "no direction entries"));
    }
    for d in &mut out {
        d.entries.sort_by_key(|e| e.0);
        if d.entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(parse_err(
                path,
                None,
                format!("component {} repeats an index", d.component),
            ));
        }
    }
    Ok(out)
}

/// Scores (`scores[c][i]` for component `c`, sample `i`) with optional labels.
pub fn write_scores(path: &Path, scores: &[Vec<f64>], labels: Option<&[u8]>) -> CliResult<()> {
    let mut w = create(path)?;
    let n = scores.first().map_or(0, Vec::len);
    finish(path, || {
        let mut header = vec!["sample".to_string()];
        header.extend((1..=scores.len()).map(|c| format!("score_{c}")));
        if labels.is_some() {
            header.push("label".into());
        }
        writeln!(w, "{}", header.join(","))?;
        for i in 0..n {
            let mut row = vec![(i + 1).to_string()];
            row.extend(scores.iter().map(|s| fmt_f64(s[i])));
            if let Some(l) = labels {
                row.push(l[i].to_string());
            }
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    })
}

/// Reads a scores file: per-component score columns and the label column if present.
pub fn read_scores(path: &Path) -> CliResult<(Vec<Vec<f64>>, Option<Vec<u8>>)> {
    let recs = records(path, open(path)?)?;
    let (_, header) = recs.first().ok_or_else(|| parse_err(path, None, "empty scores file"))?;
    let has_label = header.iter().next_back() == Some("label");
    let m = header.len() - 1 - has_label as usize;
    let mut scores = vec![Vec::new(); m];
    let mut labels = Vec::new();
    for (l, r) in &recs[1..] {
        for (c, s) in scores.iter_mut().enumerate() {
            s.push(field(path, *l, r, c + 1)?);
        }
        if has_label {
            labels.push(field(path, *l, r, m + 1)?);
        }
    }
    Ok((scores, has_label.then_some(labels)))
}

pub fn write_labels(path: &Path, labels: &[u8]) -> CliResult<()> {
    let mut w = create(path)?;
    finish(path, || {
        writeln!(w, "sample,label")?;
        for (i, l) in labels.iter().enumerate() {
            writeln!(w, "{},{l}", i + 1)?;
        }
        w.flush()
    })
}

pub fn read_labels(path: &Path) -> CliResult<Vec<u8>> {
    let mut recs = records(path, open(path)?)?;
    skip_header(&mut recs, "sample");
    recs.iter().map(|(l, r)| field(path, *l, r, 1)).collect()
}

pub fn write_bench(path: &Path, records: &[BenchRecord]) -> CliResult<()> {
    let mut w = create(path)?;
    finish(path, || {
        aspca_core::bench::write_csv(records, &mut w)?;
        w.flush()
    })
}

pub fn read_bench(path: &Path) -> CliResult<Vec<BenchRecord>> {
    let mut recs = records(path, open(path)?)?;
    match recs.first() {
        Some((_, r)) if r.iter().collect::<Vec<_>>().join(",") == CSV_HEADER => {
            recs.remove(0);
        }
        _ => return Err(parse_err(path, None, "missing bench header")),
    }
    recs.iter()
        .map(|(l, r)| {
            let param = r.get(5).unwrap_or("");
            Ok(BenchRecord {
                setting: field(path, *l, r, 0)?,
                d: field(path, *l, r, 1)?,
                n: field(path, *l, r, 2)?,
                replications: field(path, *l, r, 3)?,
                estimator: field(path, *l, r, 4)?,
                param: if param.is_empty() {
                    None
                } else {
                    Some(field(path, *l, r, 5)?)
                },
                component: field(path, *l, r, 6)?,
                mean_mse: field(path, *l, r, 7)?,
                stderr: field(path, *l, r, 8)?,
                invalid_count: field(path, *l, r, 9)?,
                seed: field(path, *l, r, 10)?,
                seconds: field(path, *l, r, 11)?,
            })
        })
        .collect()
}

/// Output directory: `ASPCA_OUT_DIR` when set, else the working directory.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("ASPCA_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}
