//! The four published simulation tables: cell definitions, reference values
//! and the replication driver.
//!
//! All cells use `N = 250`, the Epanechnikov kernel and `α = 0.05`. Start of
//! monitoring is `k = min(⌊1.5h⌋, N/2)`; for `h ≤ 50` this is the usual
//! `⌊1.5h⌋` rule.
//!
//! Unit-root cells (Tables 2 and 4) normalise the Newey-West estimate by the
//! elapsed sample size. Table 2 takes its control limit from the `Ũ`
//! functional, Table 4 from the `s·Ũ(s)` functional that is the exact limit
//! of the elapsed-normalised statistic.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::dgp::{CpVariant, DgpKind, DgpSpec};
use crate::error::ExperimentError;
use crate::experiments::report::{run_changepoint, run_size_power, ExperimentReport};
use crate::io::{load_or_calibrate, CacheKey, CalibrationCache};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::limitlaw::{FunctionalKind, LimitFunctionalSpec};
use crate::stats::{LagRule, VarianceScaling};
use crate::stopping::{Direction, MonitorConfig};

/// Horizon shared by all tables.
pub const TABLE_HORIZON: usize = 250;
/// Significance level shared by all tables.
pub const TABLE_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableId {
    SizePowerI0,
    SizePowerI1,
    ChangeI1ToI0,
    ChangeI0ToI1,
}

impl TableId {
    pub const ALL: [TableId; 4] = [
        TableId::SizePowerI0,
        TableId::SizePowerI1,
        TableId::ChangeI1ToI0,
        TableId::ChangeI0ToI1,
    ];

    pub fn number(self) -> u8 {
        match self {
            TableId::SizePowerI0 => 1,
            TableId::SizePowerI1 => 2,
            TableId::ChangeI1ToI0 => 3,
            TableId::ChangeI0ToI1 => 4,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            TableId::SizePowerI0 => "Detecting stationarity (zeta = 5)",
            TableId::SizePowerI1 => "Detecting unit roots (zeta = 5)",
            TableId::ChangeI1ToI0 => "Change from I(1) to I(0)",
            TableId::ChangeI0ToI1 => "Change from I(0) to I(1)",
        }
    }

    fn is_changepoint(self) -> bool {
        matches!(self, TableId::ChangeI1ToI0 | TableId::ChangeI0ToI1)
    }

    /// Names of the parenthesised and bracketed metrics.
    pub fn metric_names(self) -> (&'static str, &'static str) {
        if self.is_changepoint() {
            ("cond_delay", "delay")
        } else {
            ("carl", "arl")
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for TableId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(TableId::SizePowerI0),
            "2" => Ok(TableId::SizePowerI1),
            "3" => Ok(TableId::ChangeI1ToI0),
            "4" => Ok(TableId::ChangeI0ToI1),
            other => Err(format!("unknown table `{other}` (1, 2, 3 or 4)")),
        }
    }
}

/// Published values of one cell. For Tables 1–2 `paren` is the CARL and
/// `bracket` the ARL, both as run lengths from `k`. For Tables 3–4 they are
/// the conditional (post-change) and unconditional delays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedCell {
    pub rate: f64,
    pub paren: Option<f64>,
    pub bracket: Option<f64>,
}

/// The limit functional and level a cell's control limit comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationTarget {
    #[serde(serialize_with = "as_label")]
    pub kind: FunctionalKind,
    pub scaling: VarianceScaling,
    pub zeta: f64,
    pub alpha: f64,
    pub kappa: f64,
}

impl CalibrationTarget {
    pub fn spec(&self) -> LimitFunctionalSpec<f64> {
        LimitFunctionalSpec::new(self.kind, self.zeta, KernelFamily::Epanechnikov)
            .and_then(|s| s.with_scaling(self.scaling))
            .expect("table targets are valid")
    }

    /// Cache key with placeholder Monte Carlo settings; compare with
    /// [`CacheKey::same_target`].
    pub fn key(&self) -> CacheKey {
        CacheKey::new(&self.spec(), self.alpha, self.kappa, 0, 0, 0)
    }

    /// The `calibrate` command that fills this target.
    pub fn hint(&self, reps: usize, grid: usize, seed: u64) -> String {
        let mut cmd = format!(
            "urmon calibrate --kind {} --zeta {} --kernel epanechnikov --alpha {} --kappa {} --reps {reps} --grid {grid} --seed {seed}",
            self.kind.name(),
            self.zeta,
            self.alpha,
            self.kappa
        );
        if self.scaling == VarianceScaling::Elapsed {
            cmd.push_str(" --scaling elapsed");
        }
        cmd
    }
}

/// One table cell: process, monitoring setup, calibration target and the
/// published reference values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSpec {
    pub table: TableId,
    pub row: String,
    pub column: String,
    pub dgp: DgpSpec,
    pub direction: Direction,
    pub bandwidth: f64,
    pub start: usize,
    pub lag: LagRule,
    pub scaling: VarianceScaling,
    pub target: CalibrationTarget,
    pub published: PublishedCell,
}

impl CellSpec {
    pub fn monitor_config(&self, control_limit: f64) -> MonitorConfig<f64> {
        MonitorConfig::new(
            self.direction,
            control_limit,
            TABLE_HORIZON,
            KernelSpec::epanechnikov(self.bandwidth).expect("positive bandwidth"),
        )
        .with_start(self.start)
        .with_lag(self.lag)
        .with_variance_scaling(self.scaling)
    }

    pub fn run(
        &self,
        control_limit: f64,
        reps: usize,
        seed: u64,
    ) -> Result<ExperimentReport, ExperimentError> {
        let cfg = self.monitor_config(control_limit);
        if self.table.is_changepoint() {
            run_changepoint(&self.dgp, &cfg, reps, seed)
        } else {
            run_size_power(&self.dgp, &cfg, reps, seed)
        }
    }
}

/// `min(⌊1.5h⌋, N/2)`.
pub fn table_start(bandwidth: f64, horizon: usize) -> usize {
    ((1.5 * bandwidth).floor() as usize).min(horizon / 2)
}

fn as_label<S: serde::Serializer>(kind: &FunctionalKind, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(kind)
}

fn target(
    kind: FunctionalKind,
    scaling: VarianceScaling,
    bandwidth: f64,
    start: usize,
) -> CalibrationTarget {
    CalibrationTarget {
        kind,
        scaling,
        zeta: TABLE_HORIZON as f64 / bandwidth,
        alpha: TABLE_ALPHA,
        kappa: start as f64 / TABLE_HORIZON as f64,
    }
}

fn dgp(kind: DgpKind) -> DgpSpec {
    DgpSpec::new(kind, TABLE_HORIZON).expect("table processes are valid")
}

fn cell(rate: f64, paren: Option<f64>, bracket: Option<f64>) -> PublishedCell {
    PublishedCell {
        rate,
        paren,
        bracket,
    }
}

const TABLE1_BETAS: [f64; 5] = [-0.8, -0.5, 0.0, 0.5, 0.8];
/// `(rate, paren, bracket)` as printed.
type Printed = (f64, Option<f64>, f64);
const TABLE1: [(f64, [Printed; 5]); 4] = [
    (
        1.0,
        [
            (0.04, None, 171.9),
            (0.04, None, 171.9),
            (0.042, None, 171.7),
            (0.051, None, 170.7),
            (0.097, None, 165.2),
        ],
    ),
    (
        0.95,
        [
            (0.228, Some(101.2), 158.2),
            (0.23, Some(101.2), 158.0),
            (0.236, Some(100.0), 157.3),
            (0.285, Some(92.6), 151.5),
            (0.462, Some(70.7), 126.9),
        ],
    ),
    (
        0.9,
        [
            (0.347, Some(92.2), 146.3),
            (0.352, Some(91.6), 145.6),
            (0.362, Some(90.2), 144.3),
            (0.443, Some(79.6), 132.7),
            (0.642, Some(52.2), 96.2),
        ],
    ),
    (
        0.7,
        [
            (0.557, Some(69.0), 116.0),
            (0.557, Some(68.5), 115.7),
            (0.589, Some(64.5), 109.9),
            (0.717, Some(46.3), 82.8),
            (0.931, Some(22.4), 33.0),
        ],
    ),
];

const TABLE2_BETAS: [f64; 4] = [-0.8, -0.5, 0.0, 0.5];
const TABLE2_SIZE: [(LagRule, [f64; 4]); 3] = [
    (LagRule::M3, [0.036, 0.035, 0.023, 0.001]),
    (LagRule::M4, [0.033, 0.031, 0.022, 0.002]),
    (LagRule::M12, [0.016, 0.017, 0.017, 0.005]),
];
const TABLE2_POWER: [(f64, [Printed; 4]); 4] = [
    (
        0.2,
        [
            (0.039, None, 173.2),
            (0.038, None, 173.3),
            (0.03, None, 173.7),
            (0.005, None, 174.8),
        ],
    ),
    (
        0.6,
        [
            (0.082, None, 170.4),
            (0.083, None, 170.3),
            (0.074, None, 171.0),
            (0.039, None, 173.2),
        ],
    ),
    (
        0.9,
        [
            (0.396, None, 140.0),
            (0.399, None, 139.7),
            (0.391, None, 140.6),
            (0.358, None, 144.9),
        ],
    ),
    (
        1.0,
        [
            (0.952, Some(51.3), 57.2),
            (0.953, Some(51.3), 57.1),
            (0.955, Some(51.3), 56.9),
            (0.951, Some(51.0), 57.1),
        ],
    ),
];

const CHANGE_THETAS: [f64; 3] = [0.1, 0.5, 0.75];
type ChangeRow = (f64, [(f64, f64, f64); 3]);
const TABLE3: [ChangeRow; 4] = [
    (
        125.0,
        [
            (0.385, 133.2, 189.7),
            (0.072, 54.6, 119.9),
            (0.066, 41.7, 60.3),
        ],
    ),
    (
        50.0,
        [
            (0.293, 112.6, 192.0),
            (0.051, 39.4, 120.2),
            (0.055, 21.7, 60.1),
        ],
    ),
    (
        25.0,
        [
            (0.247, 113.5, 197.4),
            (0.041, 37.4, 120.9),
            (0.046, 15.4, 60.4),
        ],
    ),
    (
        10.0,
        [
            (0.208, 117.3, 202.6),
            (0.031, 40.0, 121.9),
            (0.037, 13.8, 60.8),
        ],
    ),
];
const TABLE4: [ChangeRow; 4] = [
    (
        125.0,
        [
            (0.94, 123.7, 129.8),
            (0.744, 87.9, 97.4),
            (0.155, 49.7, 58.5),
        ],
    ),
    (
        50.0,
        [
            (0.966, 103.2, 107.4),
            (0.854, 74.0, 80.6),
            (0.468, 49.4, 53.7),
        ],
    ),
    (
        25.0,
        [
            (0.972, 94.8, 98.5),
            (0.895, 65.0, 70.4),
            (0.628, 44.3, 48.4),
        ],
    ),
    (
        10.0,
        [
            (0.974, 89.8, 93.4),
            (0.913, 58.2, 63.1),
            (0.702, 39.4, 43.8),
        ],
    ),
];

/// Every cell of table `id`, row by row.
pub fn table_cells(id: TableId) -> Vec<CellSpec> {
    let mut out = Vec::new();
    match id {
        TableId::SizePowerI0 => {
            let (h, k) = (50.0, table_start(50.0, TABLE_HORIZON));
            let t = target(FunctionalKind::U1, VarianceScaling::Horizon, h, k);
            for (phi, row) in TABLE1 {
                for (beta, (rate, carl, arl)) in TABLE1_BETAS.into_iter().zip(row) {
                    out.push(CellSpec {
                        table: id,
                        row: format!("phi={phi}"),
                        column: format!("beta={beta}"),
                        dgp: dgp(DgpKind::Arma11 { phi, beta }),
                        direction: Direction::DetectI0,
                        bandwidth: h,
                        start: k,
                        lag: LagRule::M4,
                        scaling: VarianceScaling::Horizon,
                        target: t,
                        published: cell(rate, carl, Some(arl)),
                    });
                }
            }
        }
        TableId::SizePowerI1 => {
            let (h, k) = (50.0, table_start(50.0, TABLE_HORIZON));
            let t = target(FunctionalKind::U2Tilde, VarianceScaling::Horizon, h, k);
            let mut push =
                |row: String, phi: f64, beta: f64, lag: LagRule, published: PublishedCell| {
                    out.push(CellSpec {
                        table: id,
                        row,
                        column: format!("beta={beta}"),
                        dgp: dgp(DgpKind::Arma11 { phi, beta }),
                        direction: Direction::DetectI1,
                        bandwidth: h,
                        start: k,
                        lag,
                        scaling: VarianceScaling::Elapsed,
                        target: t,
                        published,
                    })
                };
            for (lag, row) in TABLE2_SIZE {
                for (beta, rate) in TABLE2_BETAS.into_iter().zip(row) {
                    push(
                        format!("phi=0 [{}]", lag.label()),
                        0.0,
                        beta,
                        lag,
                        cell(rate, None, None),
                    );
                }
            }
            for (phi, row) in TABLE2_POWER {
                for (beta, (rate, carl, arl)) in TABLE2_BETAS.into_iter().zip(row) {
                    push(
                        format!("phi={phi}"),
                        phi,
                        beta,
                        LagRule::M4,
                        cell(rate, carl, Some(arl)),
                    );
                }
            }
        }
        TableId::ChangeI1ToI0 | TableId::ChangeI0ToI1 => {
            let (rows, direction, kind, scaling) = if id == TableId::ChangeI1ToI0 {
                (
                    &TABLE3,
                    Direction::DetectI0,
                    FunctionalKind::U1,
                    VarianceScaling::Horizon,
                )
            } else {
                (
                    &TABLE4,
                    Direction::DetectI1,
                    FunctionalKind::U2Tilde,
                    VarianceScaling::Elapsed,
                )
            };
            for &(h, row) in rows {
                let k = table_start(h, TABLE_HORIZON);
                for (theta, (rate, cd, d)) in CHANGE_THETAS.into_iter().zip(row) {
                    let kind_dgp = if id == TableId::ChangeI1ToI0 {
                        DgpKind::CpI1ToI0 {
                            theta,
                            phi_post: 0.5,
                            eta: 1.0,
                            variant: CpVariant::ArSwitch,
                        }
                    } else {
                        DgpKind::CpI0ToI1 {
                            theta,
                            phi_pre: 0.6,
                            variant: CpVariant::ArSwitch,
                        }
                    };
                    out.push(CellSpec {
                        table: id,
                        row: format!("h={h}"),
                        column: format!("theta={theta}"),
                        dgp: dgp(kind_dgp),
                        direction,
                        bandwidth: h,
                        start: k,
                        lag: LagRule::M4,
                        scaling,
                        target: target(kind, scaling, h, k),
                        published: cell(rate, Some(cd), Some(d)),
                    });
                }
            }
        }
    }
    out
}

/// Distinct calibration targets needed by table `id`.
pub fn required_calibrations(id: TableId) -> Vec<CalibrationTarget> {
    let mut out: Vec<CalibrationTarget> = Vec::new();
    for c in table_cells(id) {
        if !out.contains(&c.target) {
            out.push(c.target);
        }
    }
    out
}

/// Calibrates every target of `id` that has no cached row yet. Returns the
/// number of new calibrations.
pub fn calibrate_missing(
    id: TableId,
    cache: &mut CalibrationCache,
    reps: usize,
    grid: usize,
    seed: u64,
) -> Result<usize, ExperimentError> {
    let mut added = 0;
    for t in required_calibrations(id) {
        if cache.best(&t.key()).is_none() {
            load_or_calibrate(cache, &t.spec(), t.alpha, t.kappa, reps, grid, seed)?;
            added += 1;
        }
    }
    Ok(added)
}

/// Per-cell tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub rate: f64,
    pub length: f64,
}

impl Tolerance {
    /// `±0.02 / ±5` at 10⁴ replications or more, `±0.05 / ±10` below.
    pub fn for_replications(reps: usize) -> Self {
        if reps >= 10_000 {
            Self {
                rate: 0.02,
                length: 5.0,
            }
        } else {
            Self {
                rate: 0.05,
                length: 10.0,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub metric: &'static str,
    pub published: f64,
    /// `None` when the metric is undefined in the simulation (no signals).
    pub ours: Option<f64>,
    pub std_error: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Comparison {
    fn new(metric: &'static str, published: f64, ours: Option<(f64, f64)>, tolerance: f64) -> Self {
        let pass = ours.is_some_and(|(v, _)| (v - published).abs() <= tolerance);
        Self {
            metric,
            published,
            ours: ours.map(|o| o.0),
            std_error: ours.map(|o| o.1),
            tolerance,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellOutcome {
    pub spec: CellSpec,
    pub control_limit: f64,
    pub report: ExperimentReport,
    pub comparisons: Vec<Comparison>,
}

impl CellOutcome {
    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }

    /// The simulated value of `metric` with its standard error.
    pub fn metric(&self, metric: &str) -> Option<(f64, f64)> {
        let r = &self.report;
        let m = match metric {
            "rate" => Some(r.rejection_rate),
            "carl" => r.run_length_carl,
            "arl" => Some(r.run_length_arl),
            "cond_delay" => r.post_change_delay,
            "delay" => r.delay,
            _ => None,
        };
        m.map(|m| (m.value, m.std_error))
    }
}

/// Compares a simulated cell against the published values.
pub fn compare_cell(
    spec: CellSpec,
    control_limit: f64,
    report: ExperimentReport,
    tol: Tolerance,
) -> CellOutcome {
    let (paren, bracket) = spec.table.metric_names();
    let mut outcome = CellOutcome {
        spec,
        control_limit,
        report,
        comparisons: Vec::new(),
    };
    let p = outcome.spec.published;
    let mut comparisons = vec![Comparison::new(
        "rate",
        p.rate,
        outcome.metric("rate"),
        tol.rate,
    )];
    if let Some(v) = p.paren {
        comparisons.push(Comparison::new(paren, v, outcome.metric(paren), tol.length));
    }
    if let Some(v) = p.bracket {
        comparisons.push(Comparison::new(
            bracket,
            v,
            outcome.metric(bracket),
            tol.length,
        ));
    }
    outcome.comparisons = comparisons;
    outcome
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub table: TableId,
    pub replications: usize,
    pub seed: u64,
    pub tolerance: Tolerance,
    pub cells: Vec<CellOutcome>,
}

/// Column names of [`TableReport::csv_rows`].
pub const TABLE_CSV_HEADER: [&str; 14] = [
    "table",
    "row",
    "column",
    "h",
    "k",
    "c",
    "metric",
    "published",
    "ours",
    "se",
    "diff",
    "tolerance",
    "pass",
    "R",
];

impl TableReport {
    pub fn comparisons(&self) -> impl Iterator<Item = (&CellOutcome, &Comparison)> {
        self.cells
            .iter()
            .flat_map(|c| c.comparisons.iter().map(move |m| (c, m)))
    }

    /// `(passed, total)` over all comparisons.
    pub fn score(&self) -> (usize, usize) {
        let total = self.comparisons().count();
        (self.comparisons().filter(|(_, m)| m.pass).count(), total)
    }

    pub fn cell(&self, row: &str, column: &str) -> Option<&CellOutcome> {
        self.cells
            .iter()
            .find(|c| c.spec.row == row && c.spec.column == column)
    }

    /// One row per comparison, in [`TABLE_CSV_HEADER`] order.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.comparisons()
            .map(|(c, m)| {
                let f = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.6}"));
                vec![
                    self.table.to_string(),
                    c.spec.row.clone(),
                    c.spec.column.clone(),
                    c.spec.bandwidth.to_string(),
                    c.spec.start.to_string(),
                    format!("{:?}", c.control_limit),
                    m.metric.to_string(),
                    m.published.to_string(),
                    f(m.ours),
                    f(m.std_error),
                    f(m.ours.map(|o| o - m.published)),
                    m.tolerance.to_string(),
                    if m.pass { "pass" } else { "FAIL" }.to_string(),
                    self.replications.to_string(),
                ]
            })
            .collect()
    }

    /// Plain-text rendering: one line per cell, simulated value followed by
    /// the published one in braces.
    pub fn render(&self) -> String {
        let (paren, bracket) = self.table.metric_names();
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Table {}: {} (R = {}, seed = {}, tolerance ±{} rates / ±{} lengths)",
            self.table,
            self.table.title(),
            self.replications,
            self.seed,
            self.tolerance.rate,
            self.tolerance.length
        );
        let _ = writeln!(
            s,
            "{:<14} {:<11} {:>4} {:>12}  {:<20} {:<20} {:<20} status",
            "row", "column", "k", "c", "rate", paren, bracket
        );
        for c in &self.cells {
            let show = |name: &str| -> String {
                match c.comparisons.iter().find(|m| m.metric == name) {
                    Some(m) => match m.ours {
                        Some(v) if name == "rate" => format!("{v:.3} {{{}}}", m.published),
                        Some(v) => format!("{v:.1} {{{}}}", m.published),
                        None => format!("- {{{}}}", m.published),
                    },
                    None => match c.metric(name) {
                        Some((v, _)) if name == "rate" => format!("{v:.3}"),
                        Some((v, _)) => format!("{v:.1}"),
                        None => "-".into(),
                    },
                }
            };
            let failed: Vec<&str> = c
                .comparisons
                .iter()
                .filter(|m| !m.pass)
                .map(|m| m.metric)
                .collect();
            let status = if failed.is_empty() {
                "pass".to_string()
            } else {
                format!("FAIL({})", failed.join(","))
            };
            let _ = writeln!(
                s,
                "{:<14} {:<11} {:>4} {:>12.6} {:<20} {:<20} {:<20} {status}",
                c.spec.row,
                c.spec.column,
                c.spec.start,
                c.control_limit,
                show("rate"),
                show(paren),
                show(bracket),
            );
        }
        let (ok, total) = self.score();
        let _ = writeln!(s, "{ok}/{total} comparisons within tolerance");
        s
    }
}

/// Looks up the best cached control limit for `t`.
pub fn cached_limit(
    t: &CalibrationTarget,
    cache: &CalibrationCache,
) -> Result<f64, ExperimentError> {
    cache
        .best(&t.key())
        .map(|r| r.control_limit)
        .ok_or_else(|| ExperimentError::MissingCalibration {
            key: format!(
                "{} (zeta={}, kappa={}, alpha={})",
                t.spec().cache_kind(),
                t.zeta,
                t.kappa,
                t.alpha
            ),
            hint: t.hint(50_000, 1000, 42),
        })
}

/// Simulates every cell of table `id` with `reps` replications and compares
/// the result with the published values. Control limits come from the cache
/// (largest `R` per target). All cells share `seed`, so neighbouring cells
/// use common random numbers.
pub fn replicate_table(
    id: TableId,
    reps: usize,
    seed: u64,
    cache: &CalibrationCache,
) -> Result<TableReport, ExperimentError> {
    let cells = table_cells(id);
    let limits: Vec<f64> = cells
        .iter()
        .map(|c| cached_limit(&c.target, cache))
        .collect::<Result<_, _>>()?;
    let tolerance = Tolerance::for_replications(reps);
    let mut outcomes = Vec::with_capacity(cells.len());
    for (spec, c) in cells.into_iter().zip(limits) {
        let report = spec.run(c, reps, seed)?;
        outcomes.push(compare_cell(spec, c, report, tolerance));
    }
    Ok(TableReport {
        table: id,
        replications: reps,
        seed,
        tolerance,
        cells: outcomes,
    })
}
