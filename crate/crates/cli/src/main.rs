use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bicolor_core::field::{harmonic_catalog, harmonic_decomposition, CATALOG_EXPRESSIONS};
use bicolor_core::fourierfit::FitOptions;
use bicolor_core::observables::t0_nodes;
use bicolor_core::params::{au_to_fs, au_to_ps};
use bicolor_core::propagator::{converge, ConvergenceTargets, FieldTimeRule, PropagationMethod};
use bicolor_core::sweep::{
    fit_sweep_file, run_sweep, write_csv_atomic, write_csv_to, Grid, Header, RunConfig, SweepOptions, TraceRow,
};
use bicolor_core::symmetry::{catalog, symcheck};
use bicolor_core::{Error, FieldSpec, Result};

/// Rotational dynamics of a linear molecule in a two-color laser field.
#[derive(Parser)]
#[command(name = "bicolor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One trajectory at fixed t0 (or at each of --t0-nodes values).
    Propagate(PropagateArgs),
    /// Grid sweep with t0 averaging; writes cos{k}.csv.
    Sweep(SweepArgs),
    /// Fourier fit of a sweep file over delta2.
    Fit(FitArgs),
    /// Harmonic catalog of E^power.
    Harmonics(HarmonicsArgs),
    /// Check the symmetry identities at one grid point.
    Symcheck(SymcheckArgs),
    /// Probe Jmax and dt until the observables settle.
    Converge(ConvergeArgs),
}

/// Keys that override the config file (or the built-in single point).
#[derive(Args)]
struct Overrides {
    /// Peak intensity, W/cm².
    #[arg(long)]
    intensity: Option<f64>,
    /// Laser periods 2π/ω in fs, comma separated.
    #[arg(long = "period-fs", value_delimiter = ',')]
    period_fs: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// Radians; accepts forms like `pi/2` or `0.75pi`.
    #[arg(long, value_delimiter = ',', value_parser = parse_angle)]
    delta2: Vec<f64>,
    #[arg(long, value_parser = parse_angle)]
    delta1: Option<f64>,
    #[arg(long)]
    q1: Option<u32>,
    #[arg(long)]
    q2: Option<u32>,
    /// Interaction sets such as `mu`, `mu+alpha`, `avg:mu+alpha+beta`.
    #[arg(long, value_delimiter = ',')]
    flags: Vec<String>,
    #[arg(long)]
    t_end_ps: Option<f64>,
    #[arg(long)]
    sample_every_ps: Option<f64>,
    #[arg(long)]
    n_t0: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    ks: Vec<u32>,
    #[arg(long)]
    jmax: Option<u32>,
    #[arg(long)]
    dt_fs: Option<f64>,
    #[arg(long)]
    krylov_dim: Option<usize>,
    #[arg(long)]
    step_tolerance: Option<f64>,
    /// gauss-pair, step-average, midpoint or left-endpoint.
    #[arg(long)]
    field_time_rule: Option<String>,
    /// auto, direct or periodic.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    initial_j: Option<u32>,
    #[arg(long)]
    initial_m: Option<i32>,
}

#[derive(Args)]
struct PropagateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Fixed t0 in fs.
    #[arg(long, default_value_t = 0.0, conflicts_with = "t0_nodes")]
    t0_fs: f64,
    /// Propagate at each of N evenly spaced t0 values in one laser period.
    #[arg(long)]
    t0_nodes: Option<usize>,
    /// Trace CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Recompute even if complete output exists.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct FitArgs {
    /// A cos{k}.csv file written by `sweep`.
    input: PathBuf,
    /// Defaults to the values in the file's embedded config.
    #[arg(long, requires = "q2")]
    q1: Option<u32>,
    #[arg(long, requires = "q1")]
    q2: Option<u32>,
    /// Highest harmonic j.
    #[arg(long, default_value_t = FitOptions::default().jmax)]
    jmax: usize,
    #[arg(long, default_value_t = FitOptions::default().leakage_threshold)]
    leakage_threshold: f64,
    /// Defaults to <stem>_fit.csv beside the input.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HarmonicsArgs {
    #[arg(long, default_value_t = 1)]
    q1: u32,
    #[arg(long, default_value_t = 2)]
    q2: u32,
    #[arg(long)]
    power: u32,
    #[arg(long, default_value_t = 1.0)]
    eps1: f64,
    #[arg(long, default_value_t = 1.0)]
    eps2: f64,
    #[arg(long, default_value = "0", value_parser = parse_angle)]
    delta1: f64,
    #[arg(long, default_value = "0", value_parser = parse_angle)]
    delta2: f64,
    /// Print the folded and merged decomposition instead of the raw rows.
    #[arg(long)]
    merged: bool,
}

#[derive(Args)]
struct SymcheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,
    /// JSON report path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Largest accepted change of <cos> and <cos^2>.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 20.0)]
    probe_ps: f64,
    #[arg(long, default_value_t = 200)]
    jmax_limit: u32,
}

/// Used when no config file is given: one field-free point.
const SINGLE_POINT: &str = r#"
intensity = 0.0
gamma = [0.5]
delta2 = [0.0]
periods_fs = [400.0]
t_end_ps = 10.0
sample_every_ps = 0.1
"#;

fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let bad = || format!("cannot read angle '{s}'");
    let Some(pos) = t.find("pi") else {
        return t.parse().map_err(|_| bad());
    };
    let (head, tail) = (t[..pos].trim().trim_end_matches('*'), t[pos + 2..].trim());
    let scale = match head {
        "" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let div = match tail.strip_prefix('/') {
        Some(d) => d.trim().parse::<f64>().map_err(|_| bad())?,
        None if tail.is_empty() => 1.0,
        None => return Err(bad()),
    };
    Ok(scale * std::f64::consts::PI / div)
}

fn parse_kebab<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown {what} '{s}'")))
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(v) = self.intensity {
            cfg.intensity = v;
        }
        if !self.period_fs.is_empty() {
            cfg.periods_fs = self.period_fs.clone();
        }
        if !self.gamma.is_empty() {
            cfg.gamma = Grid::List(self.gamma.clone());
        }
        if !self.delta2.is_empty() {
            cfg.delta2 = Grid::List(self.delta2.clone());
        }
        if let Some(v) = self.delta1 {
            cfg.delta1 = v;
        }
        if let Some(v) = self.q1 {
            cfg.q1 = v;
        }
        if let Some(v) = self.q2 {
            cfg.q2 = v;
        }
        if !self.flags.is_empty() {
            cfg.flags = self.flags.clone();
        }
        if let Some(v) = self.t_end_ps {
            cfg.t_end_ps = v;
        }
        if let Some(v) = self.sample_every_ps {
            cfg.sample_every_ps = v;
        }
        if let Some(v) = self.n_t0 {
            cfg.n_t0 = v;
        }
        if !self.ks.is_empty() {
            cfg.ks = self.ks.clone();
        }
        if let Some(v) = self.initial_j {
            cfg.initial.j = v;
        }
        if let Some(v) = self.initial_m {
            cfg.initial.m = v;
        }
        let p = &mut cfg.propagator;
        if self.jmax.is_some() {
            p.jmax = self.jmax;
        }
        if self.dt_fs.is_some() {
            p.dt_fs = self.dt_fs;
        }
        if self.krylov_dim.is_some() {
            p.krylov_dim = self.krylov_dim;
        }
        if self.step_tolerance.is_some() {
            p.step_tolerance = self.step_tolerance;
        }
        if let Some(r) = &self.field_time_rule {
            p.field_time_rule = Some(parse_kebab::<FieldTimeRule>("field time rule", r)?);
        }
        if let Some(m) = &self.method {
            p.method = Some(parse_kebab::<PropagationMethod>("method", m)?);
        }
        cfg.validate()
    }
}

fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::from_toml(SINGLE_POINT)?,
    };
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn single_point(cfg: &RunConfig) -> Result<bicolor_core::RunDescription> {
    let points = cfg.points()?;
    match points.as_slice() {
        [p] => cfg.run_description(p),
        _ => Err(Error::Config(format!(
            "this command runs one grid point, the configuration has {}; narrow it with --period-fs, --flags, --gamma, --delta2",
            points.len()
        ))),
    }
}

fn propagate(args: &PropagateArgs) -> Result<ExitCode> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    let point = cfg.points()?.remove(0);
    let run = single_point(&cfg)?;
    let t0s = match args.t0_nodes {
        Some(0) => return Err(Error::Config("--t0-nodes must be >= 1".into())),
        Some(n) => t0_nodes(run.field.omega, n, 0.0),
        None => vec![bicolor_core::params::fs_to_au(args.t0_fs)],
    };
    let mut rows = Vec::new();
    for t0 in t0s {
        let mut r = run;
        r.field = r.field.with_t0(t0);
        let traj = r.propagate()?;
        for (i, &t) in traj.times.iter().enumerate() {
            rows.push(TraceRow {
                period_fs: point.period_fs,
                gamma: point.gamma,
                delta1: cfg.delta1,
                delta2: point.delta2,
                flags: point.flags.clone(),
                t0_fs: au_to_fs(t0),
                t_ps: au_to_ps(t),
                cos1: traj.cos[0][i],
                cos2: traj.cos[1][i],
                cos3: traj.cos[2][i],
            });
        }
    }
    let mut header: Header = vec![
        ("generator".into(), format!("bicolor {}", env!("CARGO_PKG_VERSION"))),
        ("units".into(), "T_fs=fs delta=rad t0_fs=fs t_ps=ps".into()),
    ];
    header.extend(cfg.canonical_toml().lines().map(|l| ("config".to_string(), l.to_string())));
    match &args.out {
        Some(path) => write_csv_atomic(path, &header, &rows)?,
        None => write_csv_to(std::io::stdout().lock(), &header, &rows)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(o) = &args.output {
        cfg.output = o.clone();
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    args.overrides.apply(&mut cfg)?;
    let res = run_sweep(&cfg, &SweepOptions { force: args.force })?;
    let verb = if res.skipped { "up to date" } else { "wrote" };
    for f in &res.files {
        println!("{verb} {}", f.display());
    }
    println!("config sha256 {}", res.config_hash);
    for f in &res.failures {
        eprintln!(
            "failed: T_fs={} gamma={} delta2={} flags={}: {}",
            f.point.period_fs, f.point.gamma, f.point.delta2, f.point.flags, f.error
        );
    }
    if res.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} grid point(s) failed", res.failures.len());
        Ok(ExitCode::from(1))
    }
}

fn fit(args: &FitArgs) -> Result<ExitCode> {
    let opts = FitOptions {
        jmax: args.jmax,
        leakage_threshold: args.leakage_threshold,
        ..FitOptions::default()
    };
    let q = args.q1.zip(args.q2);
    let (path, rows) = fit_sweep_file(&args.input, q, &opts, args.out.as_deref())?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(ExitCode::SUCCESS)
}

fn harmonics(args: &HarmonicsArgs) -> Result<ExitCode> {
    let spec = FieldSpec {
        eps1: args.eps1,
        eps2: args.eps2,
        q1: args.q1,
        q2: args.q2,
        omega: 1.0,
        delta1: args.delta1,
        delta2: args.delta2,
        t0: 0.0,
    };
    spec.validate()?;
    if args.merged {
        println!("q\tamplitude\tphase");
        for t in harmonic_decomposition(&spec, args.power)? {
            let q = if t.is_dc() { "DC".to_string() } else { t.q.to_string() };
            println!("{q}\t{:.15e}\t{:.15}", t.amplitude, t.phase);
        }
        return Ok(ExitCode::SUCCESS);
    }
    println!("row\tq\tq_value\tamplitude\tamplitude_value\tphase\tphase_value\tkind");
    let mut dc_expr = Vec::new();
    if args.power == 2 {
        dc_expr.push("(e1^2+e2^2)/2".to_string());
    }
    for r in harmonic_catalog(&spec, args.power)? {
        let (qe, ae, pe) = CATALOG_EXPRESSIONS[r.row - 1];
        let kind = if r.q == 0 { "dc" } else { "osc" };
        if r.q == 0 {
            dc_expr.push(format!("row{} cos({pe})", r.row));
        }
        println!(
            "{}\t{qe}\t{}\t{ae}\t{:.15e}\t{pe}\t{:.15}\t{kind}",
            r.row, r.q, r.amplitude, r.phase
        );
    }
    let dc = harmonic_decomposition(&spec, args.power)?
        .into_iter()
        .find(|t| t.is_dc())
        .map_or(0.0, |t| t.amplitude * t.phase.cos());
    let expr = if dc_expr.is_empty() { "0".to_string() } else { dc_expr.join(" + ") };
    println!("DC\t0\t0\t{expr}\t{dc:.15e}\t-\t0\tdc");
    Ok(ExitCode::SUCCESS)
}

fn symcheck_cmd(args: &SymcheckArgs) -> Result<ExitCode> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    let run = single_point(&cfg)?;
    let transforms = catalog(run.field.q1, run.field.q2, run.field.omega);
    let report = symcheck(&run, &transforms, &cfg.ks, cfg.n_t0, args.tolerance)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).map_err(|e| Error::InvalidInput(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
    }
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn converge_cmd(args: &ConvergeArgs) -> Result<ExitCode> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    let run = single_point(&cfg)?;
    let targets = ConvergenceTargets {
        probe_t_end: bicolor_core::params::ps_to_au(args.probe_ps),
        tolerance: args.tolerance,
        jmax_limit: args.jmax_limit,
        ..ConvergenceTargets::from_run(&run)
    };
    let report = converge(&run, &targets)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::InvalidInput(e.to_string()))?;
    println!("{json}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Propagate(a) => propagate(a),
        Command::Sweep(a) => sweep(a),
        Command::Fit(a) => fit(a),
        Command::Harmonics(a) => harmonics(a),
        Command::Symcheck(a) => symcheck_cmd(a),
        Command::Converge(a) => converge_cmd(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
