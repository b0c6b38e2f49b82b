//! Series files, the calibration cache and report CSVs.
//!
//! All formats are plain text. Floats that must round-trip are written with
//! 17 significant digits.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};

use crate::error::IoError;
use crate::experiments::ExperimentReport;
use crate::limitlaw::{calibrate, CalibrationResult, LimitFunctionalSpec};
use crate::scalar::Scalar;
use crate::stats::LagRule;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses one observation per line. Blank lines are skipped and a first
/// line reading `value` is treated as a header.
pub fn parse_series(text: &str, path: &Path) -> Result<Vec<f64>, IoError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (out.is_empty() && line.eq_ignore_ascii_case("value")) {
            continue;
        }
        let parse_error = |message: String| IoError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let v: f64 = line
            .parse()
            .map_err(|_| parse_error(format!("`{line}` is not a number")))?;
        if !v.is_finite() {
            return Err(parse_error(format!("non-finite value `{line}`")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(IoError::EmptyFile(path.to_path_buf()));
    }
    Ok(out)
}

pub fn read_series(path: &Path) -> Result<Vec<f64>, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_series(&text, path)
}

/// Writes `values` under a `value` header, one per line, in shortest
/// round-trip form.
pub fn write_series(path: &Path, values: &[f64]) -> Result<(), IoError> {
    let mut text = String::with_capacity(values.len() * 20 + 6);
    text.push_str("value\n");
    for v in values {
        text.push_str(&format!("{v:?}\n"));
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Everything that identifies a calibration run.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheKey {
    pub kind: String,
    pub zeta: f64,
    pub kernel: String,
    pub alpha: f64,
    pub kappa: f64,
    pub replications: usize,
    pub grid: usize,
    pub seed: u64,
}

impl CacheKey {
    pub fn new<T: Scalar>(
        spec: &LimitFunctionalSpec<T>,
        alpha: f64,
        kappa: f64,
        replications: usize,
        grid: usize,
        seed: u64,
    ) -> Self {
        Self {
            kind: spec.cache_kind(),
            zeta: spec.zeta.as_f64(),
            kernel: spec.kernel.name().to_string(),
            alpha,
            kappa,
            replications,
            grid,
            seed,
        }
    }

    /// Same functional, level and start, ignoring the Monte Carlo settings.
    pub fn same_target(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.kernel == other.kernel
            && close(self.zeta, other.zeta)
            && close(self.alpha, other.alpha)
            && close(self.kappa, other.kappa)
    }

    fn matches(&self, other: &Self) -> bool {
        self.same_target(other)
            && self.replications == other.replications
            && self.grid == other.grid
            && self.seed == other.seed
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheRow {
    pub key: CacheKey,
    pub control_limit: f64,
    pub std_error: f64,
}

const CACHE_HEADER: [&str; 10] = [
    "kind", "zeta", "kernel", "alpha", "kappa", "R", "G", "seed", "c", "se",
];

/// Calibration results persisted as CSV. A missing file is an empty cache.
#[derive(Debug, Clone)]
pub struct CalibrationCache {
    path: PathBuf,
    rows: Vec<CacheRow>,
}

impl CalibrationCache {
    pub fn open(path: &Path) -> Result<Self, IoError> {
        let mut cache = Self {
            path: path.to_path_buf(),
            rows: Vec::new(),
        };
        if !path.exists() {
            return Ok(cache);
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_path(path)?;
        let header = reader.headers()?.clone();
        if header
            .iter()
            .map(str::trim)
            .ne(CACHE_HEADER.iter().copied())
        {
            return Err(cache.corrupt(
                1,
                format!(
                    "unexpected header `{}`",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        for (i, record) in reader.records().enumerate() {
            // Row numbers count the header as row 1.
            let row = i + 2;
            let record = record.map_err(|e| cache.corrupt(row, e.to_string()))?;
            let parsed = parse_row(&record).map_err(|m| cache.corrupt(row, m))?;
            if cache.rows.iter().any(|r| r.key.matches(&parsed.key)) {
                return Err(cache.corrupt(row, "duplicate key".into()));
            }
            cache.rows.push(parsed);
        }
        Ok(cache)
    }

    fn corrupt(&self, row: usize, message: String) -> IoError {
        IoError::CorruptCache {
            path: self.path.clone(),
            row,
            message,
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn rows(&self) -> &[CacheRow] {
        &self.rows
    }

    pub fn get(&self, key: &CacheKey) -> Option<&CacheRow> {
        self.rows.iter().find(|r| r.key.matches(key))
    }

    /// The row for the same target with the most replications (ties go to
    /// the finer grid, then to the earlier row).
    pub fn best(&self, target: &CacheKey) -> Option<&CacheRow> {
        self.rows.iter().filter(|r| r.key.same_target(target)).fold(
            None,
            |best: Option<&CacheRow>, r| match best {
                Some(b) if (b.key.replications, b.key.grid) >= (r.key.replications, r.key.grid) => {
                    Some(b)
                }
                _ => Some(r),
            },
        )
    }

    /// Appends `row` to memory and to the file, writing the header first if
    /// the file is new or empty.
    pub fn insert(&mut self, row: CacheRow) -> Result<(), IoError> {
        if self.get(&row.key).is_some() {
            return Err(self.corrupt(self.rows.len() + 2, "duplicate key".into()));
        }
        let fresh = fs::metadata(&self.path)
            .map(|m| m.len() == 0)
            .unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(io_err(&self.path))?;
        let mut w = csv::Writer::from_writer(file);
        if fresh {
            w.write_record(CACHE_HEADER)?;
        }
        w.write_record(format_row(&row))?;
        w.flush().map_err(io_err(&self.path))?;
        self.rows.push(row);
        Ok(())
    }
}

/// The cache row as CSV fields.
pub fn format_row(row: &CacheRow) -> [String; 10] {
    let k = &row.key;
    [
        k.kind.clone(),
        format!("{:?}", k.zeta),
        k.kernel.clone(),
        format!("{:?}", k.alpha),
        format!("{:?}", k.kappa),
        k.replications.to_string(),
        k.grid.to_string(),
        k.seed.to_string(),
        format!("{:.16e}", row.control_limit),
        format!("{:.16e}", row.std_error),
    ]
}

fn parse_row(record: &csv::StringRecord) -> Result<CacheRow, String> {
    if record.len() != CACHE_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            CACHE_HEADER.len(),
            record.len()
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("").trim();
    fn num<V: std::str::FromStr>(s: &str, name: &str) -> Result<V, String> {
        s.parse()
            .map_err(|_| format!("{name} `{s}` does not parse"))
    }
    let key = CacheKey {
        kind: field(0).to_string(),
        zeta: num(field(1), "zeta")?,
        kernel: field(2).to_string(),
        alpha: num(field(3), "alpha")?,
        kappa: num(field(4), "kappa")?,
        replications: num(field(5), "R")?,
        grid: num(field(6), "G")?,
        seed: num(field(7), "seed")?,
    };
    if key.kind.is_empty() || key.kernel.is_empty() {
        return Err("empty kind or kernel".into());
    }
    let control_limit: f64 = num(field(8), "c")?;
    let std_error: f64 = num(field(9), "se")?;
    if !(control_limit.is_finite() && control_limit > 0.0) {
        return Err(format!("c = {control_limit} must be finite and positive"));
    }
    if !(std_error.is_finite() && std_error >= 0.0) {
        return Err(format!("se = {std_error} must be finite and non-negative"));
    }
    Ok(CacheRow {
        key,
        control_limit,
        std_error,
    })
}

/// Rebuilds a calibration result from a cached row.
pub fn result_from_row<T: Scalar>(
    spec: &LimitFunctionalSpec<T>,
    row: &CacheRow,
) -> CalibrationResult<T> {
    CalibrationResult {
        control_limit: T::of(row.control_limit),
        direction: spec.kind.natural_direction(),
        alpha: row.key.alpha,
        kappa: row.key.kappa,
        replications: row.key.replications,
        grid: row.key.grid,
        std_error: T::of(row.std_error),
        seed: row.key.seed,
    }
}

/// Returns the cached control limit for this exact key, or calibrates in
/// the functional's natural direction and appends the new row.
#[allow(clippy::too_many_arguments)]
pub fn load_or_calibrate<T>(
    cache: &mut CalibrationCache,
    spec: &LimitFunctionalSpec<T>,
    alpha: f64,
    kappa: f64,
    reps: usize,
    grid: usize,
    seed: u64,
) -> Result<(CalibrationResult<T>, bool), IoError>
where
    T: Scalar,
    StandardNormal: Distribution<T>,
{
    let key = CacheKey::new(spec, alpha, kappa, reps, grid, seed);
    if let Some(row) = cache.get(&key) {
        return Ok((result_from_row(spec, row), true));
    }
    let res = calibrate(
        spec,
        spec.kind.natural_direction(),
        alpha,
        kappa,
        reps,
        grid,
        seed,
    )?;
    cache.insert(CacheRow {
        key,
        control_limit: res.control_limit.as_f64(),
        std_error: res.std_error.as_f64(),
    })?;
    Ok((res, false))
}

/// Column names of [`write_reports`].
pub const REPORT_HEADER: [&str; 26] = [
    "dgp",
    "direction",
    "c",
    "N",
    "k",
    "kernel",
    "h",
    "lag",
    "scaling",
    "R",
    "seed",
    "signals",
    "rate",
    "rate_se",
    "arl",
    "arl_se",
    "carl",
    "carl_se",
    "rl_arl",
    "rl_carl",
    "change_point",
    "delay",
    "delay_se",
    "cond_delay",
    "post_change_delay",
    "post_change_delay_se",
];

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.6}"))
}

/// The report as CSV fields, in [`REPORT_HEADER`] order.
pub fn report_fields(r: &ExperimentReport) -> Vec<String> {
    let c = &r.config;
    vec![
        c.dgp.label(),
        c.direction.label().to_string(),
        format!("{:?}", c.control_limit),
        c.horizon.to_string(),
        c.start.to_string(),
        c.kernel.clone(),
        format!("{}", c.bandwidth),
        c.lag.map_or_else(String::new, LagRule::label),
        c.variance_scaling
            .map_or_else(String::new, |s| s.label().to_string()),
        c.replications.to_string(),
        c.seed.to_string(),
        r.signals.to_string(),
        format!("{:.6}", r.rejection_rate.value),
        format!("{:.6}", r.rejection_rate.std_error),
        format!("{:.6}", r.arl.value),
        format!("{:.6}", r.arl.std_error),
        opt(r.carl.map(|m| m.value)),
        opt(r.carl.map(|m| m.std_error)),
        format!("{:.6}", r.run_length_arl.value),
        opt(r.run_length_carl.map(|m| m.value)),
        r.change_point.map_or_else(String::new, |c| c.to_string()),
        opt(r.delay.map(|m| m.value)),
        opt(r.delay.map(|m| m.std_error)),
        opt(r.conditional_delay.map(|m| m.value)),
        opt(r.post_change_delay.map(|m| m.value)),
        opt(r.post_change_delay.map(|m| m.std_error)),
    ]
}

pub fn write_reports(path: &Path, reports: &[ExperimentReport]) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        w.write_record(report_fields(r))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes rows of already formatted fields under `header`.
pub fn write_csv<S: AsRef<[u8]>>(
    path: &Path,
    header: &[&str],
    rows: &[Vec<S>],
) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}
