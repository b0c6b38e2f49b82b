use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use unitroot_monitor::experiments::{calibrate_missing, replicate_table, TABLE_CSV_HEADER};
use unitroot_monitor::io::{
    format_row, report_fields, write_csv, write_reports, CacheKey, REPORT_HEADER,
};
use unitroot_monitor::stopping::default_start;
use unitroot_monitor::{
    load_or_calibrate, monitor_stream, read_series, run_changepoint, run_size_power,
    CalibrationCache, DgpKind, DgpSpec, Direction, ExperimentError, FunctionalKind, Innovation,
    KernelFamily, KernelSpec, LagRule, LimitFunctionalSpec, MonitorConfig, ResidualMode,
    ResidualWindow, TrendShape, VarianceScaling,
};

use crate::config::{CalibrationSettings, FileConfig};
use crate::{CalibrateArgs, CliError, MonitorArgs, MonitorOpts, ReplicateArgs, SimulateArgs};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let mut kind: FunctionalKind = a.kind.parse().map_err(|e| usage(format!("{e}")))?;
    match &mut kind {
        FunctionalKind::UZ { a: coef } => {
            *coef = a.a.ok_or_else(|| usage("--kind uz needs --a"))?
        }
        FunctionalKind::U01 { theta } | FunctionalKind::U10 { theta } => {
            if let Some(t) = a.theta {
                *theta = t;
            }
        }
        FunctionalKind::U2 { nuisance_ratio } => {
            if let Some(r) = a.ratio {
                *nuisance_ratio = r;
            }
        }
        _ => {}
    }
    let kernel: KernelFamily = a.kernel.parse().map_err(|e| usage(format!("{e}")))?;
    let spec = LimitFunctionalSpec::new(kind, a.zeta, kernel)
        .and_then(|s| s.with_residual(a.residual))
        .and_then(|s| s.with_scaling(a.scaling))
        .map_err(|e| usage(e.to_string()))?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage(format!(
            "--alpha must lie in (0, 1), got {}",
            a.alpha
        )));
    }
    if !(a.kappa > 0.0 && a.kappa < 1.0) {
        return Err(usage(format!(
            "--kappa must lie in (0, 1), got {}",
            a.kappa
        )));
    }
    if a.reps < 1000 || a.grid < 100 {
        return Err(usage(
            "--reps must be at least 1000 and --grid at least 100",
        ));
    }
    let mut cache = CalibrationCache::open(&a.cache)?;
    let (res, hit) =
        load_or_calibrate(&mut cache, &spec, a.alpha, a.kappa, a.reps, a.grid, a.seed)?;
    let key = CacheKey::new(&spec, a.alpha, a.kappa, a.reps, a.grid, a.seed);
    let row = cache.get(&key).expect("row was just stored");
    eprintln!(
        "{} c = {} (se {}) in {}",
        if hit { "cache hit:" } else { "calibrated:" },
        res.control_limit,
        res.std_error,
        cache.path().display()
    );
    println!("kind,zeta,kernel,alpha,kappa,R,G,seed,c,se");
    println!("{}", format_row(row).join(","));
    Ok(())
}

/// Monitoring settings after merging flags over the config file.
struct Resolved {
    direction: Direction,
    kernel: KernelFamily,
    bandwidth: f64,
    start: Option<usize>,
    kappa: Option<f64>,
    lag: LagRule,
    residual: ResidualMode,
    residual_window: ResidualWindow,
    scaling: VarianceScaling,
    control_limit: Option<f64>,
    zeta: Option<f64>,
    alpha: f64,
    cache: PathBuf,
    calibrate_missing: bool,
    calibration: CalibrationSettings,
}

fn resolve(o: &MonitorOpts, file: &FileConfig) -> Result<Resolved, CliError> {
    let direction = o
        .direction
        .or(file.direction)
        .ok_or_else(|| usage("--direction (i0 or i1) is required"))?;
    let bandwidth = o
        .bandwidth
        .or(file.bandwidth)
        .ok_or_else(|| usage("--h (bandwidth) is required"))?;
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(usage(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let kernel_name = o
        .kernel
        .clone()
        .or_else(|| file.kernel.clone())
        .unwrap_or_else(|| "epanechnikov".into());
    let kernel: KernelFamily = kernel_name.parse().map_err(|e| usage(format!("{e}")))?;
    let mut cal = file.calibration.unwrap_or_default();
    if let Some(r) = o.cal_reps {
        cal.reps = r;
    }
    if let Some(g) = o.cal_grid {
        cal.grid = g;
    }
    if let Some(s) = o.cal_seed {
        cal.seed = s;
    }
    let alpha = o.alpha.or(file.alpha).unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let (start, kappa) = match (o.start, o.kappa) {
        (Some(k), _) => (Some(k), None),
        (None, Some(kp)) => (None, Some(kp)),
        (None, None) => (file.start, file.kappa),
    };
    Ok(Resolved {
        direction,
        kernel,
        bandwidth,
        start,
        kappa,
        lag: o.lag.or(file.lag).unwrap_or(LagRule::M4),
        residual: o.residual.or(file.residual).unwrap_or_default(),
        residual_window: o
            .residual_window
            .or(file.residual_window)
            .unwrap_or_default(),
        scaling: o.scaling.or(file.variance_scaling).unwrap_or_default(),
        control_limit: o.control_limit.or(file.control_limit),
        zeta: o.zeta.or(file.zeta),
        alpha,
        cache: o
            .cache
            .clone()
            .or_else(|| file.cache.clone())
            .unwrap_or_else(|| PathBuf::from("calibration.csv")),
        calibrate_missing: o.calibrate_missing,
        calibration: cal,
    })
}

impl Resolved {
    fn start_for(&self, horizon: usize) -> Result<usize, CliError> {
        let k = match (self.start, self.kappa) {
            (Some(k), _) => k,
            (None, Some(kp)) => {
                if !(kp > 0.0 && kp <= 1.0) {
                    return Err(usage(format!("kappa must lie in (0, 1], got {kp}")));
                }
                ((kp * horizon as f64 - 1e-9).ceil() as usize).max(1)
            }
            (None, None) => default_start(self.bandwidth),
        };
        if k == 0 || k > horizon {
            return Err(usage(format!("start k = {k} outside 1..={horizon}")));
        }
        Ok(k)
    }

    /// The control limit: given explicitly, or the cached calibration of the
    /// limit law that matches the statistic.
    fn control_limit(&self, horizon: usize, start: usize) -> Result<f64, CliError> {
        if let Some(c) = self.control_limit {
            if !(c > 0.0 && c.is_finite()) {
                return Err(usage(format!("control limit must be positive, got {c}")));
            }
            return Ok(c);
        }
        let derived = horizon as f64 / self.bandwidth;
        let zeta = self.zeta.unwrap_or(derived);
        if (zeta - derived).abs() > 0.1 * derived {
            eprintln!("warning: zeta = {zeta} differs from N/h = {derived:.4} by more than 10%");
        }
        let kind = match self.direction {
            Direction::DetectI0 => FunctionalKind::U1,
            Direction::DetectI1 => FunctionalKind::U2Tilde,
        };
        let scaling = match self.direction {
            Direction::DetectI0 => VarianceScaling::Horizon,
            Direction::DetectI1 => self.scaling,
        };
        let spec = LimitFunctionalSpec::new(kind, zeta, self.kernel.clone())
            .and_then(|s| s.with_residual(self.residual))
            .and_then(|s| s.with_scaling(scaling))
            .map_err(|e| usage(e.to_string()))?;
        let kappa = start as f64 / horizon as f64;
        let mut cache = CalibrationCache::open(&self.cache)?;
        let cal = self.calibration;
        let key = CacheKey::new(&spec, self.alpha, kappa, cal.reps, cal.grid, cal.seed);
        if let Some(row) = cache.best(&key) {
            return Ok(row.control_limit);
        }
        if !self.calibrate_missing {
            let mut hint = format!(
                "urmon calibrate --kind {} --zeta {zeta} --kernel {} --alpha {} --kappa {kappa} --reps {} --grid {} --seed {} --cache {}",
                kind.name(),
                self.kernel.name(),
                self.alpha,
                cal.reps,
                cal.grid,
                cal.seed,
                self.cache.display()
            );
            if self.residual != ResidualMode::None {
                hint.push_str(&format!(" --residual {}", residual_label(self.residual)));
            }
            if scaling == VarianceScaling::Elapsed {
                hint.push_str(" --scaling elapsed");
            }
            return Err(ExperimentError::MissingCalibration {
                key: format!(
                    "{} (zeta={zeta}, kappa={kappa}, alpha={})",
                    spec.cache_kind(),
                    self.alpha
                ),
                hint: format!("{hint}` or pass `--calibrate-missing"),
            }
            .into());
        }
        eprintln!(
            "calibrating {} (zeta={zeta}, kappa={kappa})",
            spec.cache_kind()
        );
        let (res, _) = load_or_calibrate(
            &mut cache, &spec, self.alpha, kappa, cal.reps, cal.grid, cal.seed,
        )?;
        Ok(res.control_limit)
    }

    fn monitor_config(&self, horizon: usize) -> Result<MonitorConfig, CliError> {
        let start = self.start_for(horizon)?;
        let c = self.control_limit(horizon, start)?;
        let kernel = KernelSpec::new(self.kernel.clone(), self.bandwidth)
            .map_err(|e| usage(e.to_string()))?;
        let cfg = MonitorConfig::new(self.direction, c, horizon, kernel)
            .with_start(start)
            .with_lag(self.lag)
            .with_residual(self.residual, self.residual_window)
            .with_variance_scaling(self.scaling);
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

fn residual_label(m: ResidualMode) -> &'static str {
    match m {
        ResidualMode::None => "none",
        ResidualMode::Demeaned => "demeaned",
        ResidualMode::Detrended => "detrended",
    }
}

pub fn monitor(a: MonitorArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.opts.config.as_deref())?;
    let r = resolve(&a.opts, &file)?;
    let mut series = read_series(&a.series)?;
    let horizon = a.horizon.or(file.horizon).unwrap_or(series.len());
    if horizon < 2 {
        return Err(usage(format!("horizon N = {horizon} is too small")));
    }
    if series.len() > horizon {
        eprintln!(
            "warning: series has {} observations; monitoring the first N = {horizon}",
            series.len()
        );
        series.truncate(horizon);
    }
    let cfg = r.monitor_config(horizon)?;
    if cfg.residual != ResidualMode::None
        && cfg.residual_window == ResidualWindow::Full
        && series.len() < horizon
    {
        return Err(usage(
            "full-window residuals need the complete series of length N",
        ));
    }
    let result =
        if cfg.residual_window == ResidualWindow::Full && cfg.residual != ResidualMode::None {
            unitroot_monitor::run_monitor(&series, &cfg)?
        } else {
            monitor_stream(series.iter().copied(), &cfg)?
        };
    if let Some(path) = &a.trace {
        let rows: Vec<Vec<String>> = result
            .trace
            .iter()
            .map(|(n, v)| vec![n.to_string(), format!("{v:?}")])
            .collect();
        write_csv(path, &["n", "statistic"], &rows)?;
    }
    let relation = match cfg.direction {
        Direction::DetectI0 => "<",
        Direction::DetectI1 => ">",
    };
    if result.signaled {
        let value = result.trace.last().map(|t| t.1).unwrap_or(f64::NAN);
        println!("SIGNAL at n={}", result.stop_index);
        println!(
            "statistic {value} {relation} c = {} (direction {}, k = {}, N = {horizon})",
            cfg.control_limit,
            cfg.direction.label(),
            cfg.start
        );
    } else {
        if result.stop_index < horizon {
            println!(
                "NO SIGNAL (horizon N={horizon}, series ended at n={})",
                result.stop_index
            );
        } else {
            println!("NO SIGNAL (horizon N={horizon})");
        }
        println!(
            "c = {} (direction {}, k = {})",
            cfg.control_limit,
            cfg.direction.label(),
            cfg.start
        );
    }
    Ok(())
}

fn build_dgp(a: &SimulateArgs, file: &FileConfig) -> Result<DgpSpec, CliError> {
    let Some(name) = a.dgp.as_deref() else {
        let mut spec = file
            .dgp
            .ok_or_else(|| usage("--dgp or a `dgp` entry in --config is required"))?;
        if let Some(n) = a.n {
            spec.n = n;
        }
        spec.validate().map_err(|e| usage(e.to_string()))?;
        return Ok(spec);
    };
    let need =
        |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("--dgp {name} needs --{flag}")));
    let variant = a.variant.map(Into::into).unwrap_or_default();
    let kind = match name {
        "arma11" => DgpKind::Arma11 {
            phi: need(a.phi, "phi")?,
            beta: a.beta.unwrap_or(0.0),
        },
        "cp_i1_to_i0" => DgpKind::CpI1ToI0 {
            theta: need(a.theta, "theta")?,
            phi_post: need(a.phi_post, "phi-post")?,
            eta: a.eta.unwrap_or(1.0),
            variant,
        },
        "cp_i0_to_i1" => DgpKind::CpI0ToI1 {
            theta: need(a.theta, "theta")?,
            phi_pre: need(a.phi_pre, "phi-pre")?,
            variant,
        },
        "local_to_unity" => DgpKind::LocalToUnity { a: need(a.a, "a")? },
        "local_trend" => DgpKind::LocalTrend {
            trend: a
                .slope
                .map_or(TrendShape::Zero, |slope| TrendShape::TruncatedLinear {
                    slope,
                }),
            theta: need(a.theta, "theta")?,
        },
        other => return Err(usage(format!("unknown dgp `{other}`"))),
    };
    let n =
        a.n.or(file.dgp.map(|d| d.n))
            .or(file.horizon)
            .unwrap_or(250);
    let mut spec = DgpSpec::new(kind, n).map_err(|e| usage(e.to_string()))?;
    if let Some(df) = a.df {
        spec = spec
            .with_innovation(Innovation::StudentT { df })
            .map_err(|e| usage(e.to_string()))?;
    }
    Ok(spec)
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.opts.config.as_deref())?;
    let r = resolve(&a.opts, &file)?;
    let dgp = build_dgp(&a, &file)?;
    let reps = a.reps.or(file.replications).unwrap_or(10_000);
    if reps < 100 {
        return Err(usage(format!("--reps must be at least 100, got {reps}")));
    }
    let seed = a.seed.or(file.seed).unwrap_or(7);
    let cfg = r.monitor_config(dgp.n)?;
    let report = if dgp.change_point().is_some() {
        run_changepoint(&dgp, &cfg, reps, seed)?
    } else {
        run_size_power(&dgp, &cfg, reps, seed)?
    };
    if let Some(path) = &a.out {
        write_reports(path, std::slice::from_ref(&report))?;
    }
    let stdout = std::io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    let fields = report_fields(&report);
    for (name, value) in REPORT_HEADER.iter().zip(&fields) {
        if !value.is_empty() {
            writeln!(w, "{name:<22} {value}").context("writing to stdout")?;
        }
    }
    w.flush().context("writing to stdout")?;
    Ok(())
}

pub fn replicate(a: ReplicateArgs) -> Result<(), CliError> {
    if a.reps < 100 {
        return Err(usage(format!(
            "--reps must be at least 100, got {}",
            a.reps
        )));
    }
    let mut cache = CalibrationCache::open(&a.cache)?;
    if a.calibrate_missing {
        let added = calibrate_missing(a.table, &mut cache, a.cal_reps, a.cal_grid, a.cal_seed)?;
        if added > 0 {
            eprintln!(
                "calibrated {added} control limit(s) into {}",
                a.cache.display()
            );
        }
    }
    let report = replicate_table(a.table, a.reps, a.seed, &cache)?;
    print!("{}", report.render());
    if let Some(path) = &a.out {
        write_csv(path, &TABLE_CSV_HEADER, &report.csv_rows())?;
        write_text(&path.with_extension("txt"), &report.render())?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
