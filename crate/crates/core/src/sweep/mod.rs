//! Parameter sweeps over (T, flags, γ, δ2) with t0 averaging, persisted as
//! one CSV per observable power k.

mod config;
mod csvio;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{
    flags_label, parse_flags, Grid, InitialState, PropagatorOverrides, RunConfig, SweepPoint, DEFAULT_BUFFER,
    DEFAULT_JMAX, WORKERS_ENV,
};
pub use csvio::{
    fit_table, header_value, read_csv, read_sweep_csv, write_csv_atomic, write_csv_to, FitRow, Header, SweepRow, SweepTable,
    TraceRow, FIT_COLUMNS, SWEEP_COLUMNS, TRACE_COLUMNS,
};

use crate::error::{Error, Result};
use crate::observables::{t0_average, T0Average};
use crate::params::{au_to_fs, au_to_ps};

pub const SWEEP_UNITS: &str = "T_fs=fs gamma=1 delta1=rad delta2=rad t_ps=ps value=1 dt_fs=fs";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Recompute even when complete output for this config exists.
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub point: SweepPoint,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config_hash: String,
    pub files: Vec<PathBuf>,
    pub tables: Vec<SweepTable>,
    pub failures: Vec<PointFailure>,
    /// Existing output was reused.
    pub skipped: bool,
}

pub fn output_path(cfg: &RunConfig, k: u32) -> PathBuf {
    cfg.output.join(format!("cos{k}.csv"))
}

fn existing_complete(cfg: &RunConfig, hash: &str) -> Option<Vec<SweepTable>> {
    cfg.ks
        .iter()
        .map(|&k| {
            let t = read_sweep_csv(&output_path(cfg, k)).ok()?;
            let ok = header_value(&t.header, "config_sha256") == Some(hash)
                && header_value(&t.header, "failures") == Some("0")
                && t.k == k;
            ok.then_some(t)
        })
        .collect()
}

fn header(cfg: &RunConfig, hash: &str, k: u32, failures: usize) -> Header {
    let mut h: Header = vec![
        ("generator".into(), format!("bicolor-core {}", env!("CARGO_PKG_VERSION"))),
        ("config_sha256".into(), hash.to_string()),
        ("k".into(), k.to_string()),
        ("observable".into(), format!("t0-averaged <cos^{k} theta>")),
        ("units".into(), SWEEP_UNITS.into()),
        ("failures".into(), failures.to_string()),
    ];
    h.extend(cfg.canonical_toml().lines().map(|l| ("config".to_string(), l.to_string())));
    h
}

fn rows_for(point: &SweepPoint, cfg: &RunConfig, avg: &T0Average, k: u32) -> Result<Vec<SweepRow>> {
    let jmax = cfg.basis()?.jmax;
    Ok(avg
        .times
        .iter()
        .zip(avg.values(k)?)
        .map(|(&t, &value)| SweepRow {
            period_fs: point.period_fs,
            gamma: point.gamma,
            delta1: cfg.delta1,
            delta2: point.delta2,
            flags: point.flags.clone(),
            t_ps: au_to_ps(t),
            value,
            n_t0: avg.n_t0(),
            jmax,
            dt_fs: au_to_fs(avg.dt),
        })
        .collect())
}

/// Runs every grid point (each a t0 average) and writes `cos{k}.csv` into the
/// output directory. A failing point is recorded and skipped.
pub fn run_sweep(cfg: &RunConfig, opts: &SweepOptions) -> Result<SweepResult> {
    cfg.validate()?;
    let hash = cfg.hash();
    let files: Vec<PathBuf> = cfg.ks.iter().map(|&k| output_path(cfg, k)).collect();
    if !opts.force {
        if let Some(tables) = existing_complete(cfg, &hash) {
            return Ok(SweepResult {
                config_hash: hash,
                files,
                tables,
                failures: Vec::new(),
                skipped: true,
            });
        }
    }
    let points = cfg.points()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_workers()?)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<T0Average>> = pool.install(|| {
        points
            .par_iter()
            .map(|p| t0_average(&cfg.run_description(p)?, cfg.n_t0))
            .collect()
    });

    let mut failures = Vec::new();
    let mut done = Vec::new();
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(avg) => done.push((p, avg)),
            Err(e) => failures.push(PointFailure {
                point: p.clone(),
                error: e.to_string(),
            }),
        }
    }
    let mut tables = Vec::new();
    for (&k, path) in cfg.ks.iter().zip(&files) {
        let mut rows = Vec::new();
        for (p, avg) in &done {
            rows.extend(rows_for(p, cfg, avg, k)?);
        }
        let header = header(cfg, &hash, k, failures.len());
        write_csv_atomic(path, &header, &rows)?;
        tables.push(SweepTable { k, header, rows });
    }
    Ok(SweepResult {
        config_hash: hash,
        files,
        tables,
        failures,
        skipped: false,
    })
}

/// Path of the fit output next to a sweep file: `cos1.csv` → `cos1_fit.csv`.
pub fn fit_output_path(sweep_csv: &Path) -> PathBuf {
    let stem = sweep_csv.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    sweep_csv.with_file_name(format!("{stem}_fit.csv"))
}

/// The run configuration embedded in a sweep file header.
pub fn config_from_header(header: &Header) -> Result<RunConfig> {
    let text: Vec<&str> = header
        .iter()
        .filter(|(k, _)| k == "config")
        .map(|(_, v)| v.as_str())
        .collect();
    if text.is_empty() {
        return Err(Error::Config("header has no embedded config".into()));
    }
    RunConfig::from_toml(&text.join("\n"))
}

/// Fits a sweep file and writes `<stem>_fit.csv` beside it (or to `out`).
/// `q` defaults to the multipliers of the embedded config.
pub fn fit_sweep_file(
    path: &Path,
    q: Option<(u32, u32)>,
    opts: &crate::fourierfit::FitOptions,
    out: Option<&Path>,
) -> Result<(PathBuf, Vec<FitRow>)> {
    let table = read_sweep_csv(path)?;
    let (q1, q2) = match q {
        Some(q) => q,
        None => {
            let cfg = config_from_header(&table.header)?;
            (cfg.q1, cfg.q2)
        }
    };
    let rows = fit_table(&table, q1, q2, opts)?;
    let mut header: Header = vec![
        ("generator".into(), format!("bicolor-core {}", env!("CARGO_PKG_VERSION"))),
        ("source".into(), path.display().to_string()),
        ("k".into(), table.k.to_string()),
        ("q1".into(), q1.to_string()),
        ("q2".into(), q2.to_string()),
        ("fit_jmax".into(), opts.jmax.to_string()),
        ("units".into(), "T_fs=fs t=ps phi_j=rad".into()),
    ];
    if let Some(h) = header_value(&table.header, "config_sha256") {
        header.push(("config_sha256".into(), h.to_string()));
    }
    let target = out.map(Path::to_path_buf).unwrap_or_else(|| fit_output_path(path));
    write_csv_atomic(&target, &header, &rows)?;
    Ok((target, rows))
}
