//! Sweep configuration file (TOML).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{gamma_split, FieldSpec};
use crate::params::{fs_to_au, intensity_to_field, ps_to_au, to_internal, MoleculeParams};
use crate::propagator::{FieldTimeRule, HamiltonianMode, PropagationMethod, PropagatorConfig, RunDescription};
use crate::rotor::{BasisSpec, InteractionFlags};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "BICOLOR_WORKERS";

pub const DEFAULT_JMAX: u32 = 40;
pub const DEFAULT_BUFFER: u32 = 3;

/// An explicit list of values or `n` evenly spaced ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Uniform {
        n: usize,
        start: f64,
        stop: f64,
        #[serde(default = "yes")]
        endpoint: bool,
        /// `start` and `stop` are in units of π.
        #[serde(default)]
        pi_units: bool,
    },
}

fn yes() -> bool {
    true
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Uniform { n, start, stop, endpoint, pi_units } => {
                if *n == 0 {
                    return Err(Error::Config("grid needs n >= 1".into()));
                }
                let scale = if *pi_units { PI } else { 1.0 };
                let (a, b) = (start * scale, stop * scale);
                let div = if *endpoint { n.saturating_sub(1).max(1) } else { *n } as f64;
                (0..*n).map(|i| a + (b - a) * i as f64 / div).collect()
            }
        };
        if v.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("grid values must be finite".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub j: u32,
    pub m: i32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorOverrides {
    pub jmax: Option<u32>,
    pub buffer: Option<u32>,
    pub dt_fs: Option<f64>,
    pub krylov_dim: Option<usize>,
    pub step_tolerance: Option<f64>,
    pub field_time_rule: Option<FieldTimeRule>,
    pub method: Option<PropagationMethod>,
}

/// A flag set such as `mu+alpha`, optionally prefixed `avg:` for the
/// cycle-averaged Hamiltonian.
pub fn parse_flags(s: &str) -> Result<(InteractionFlags, HamiltonianMode)> {
    let (mode, rest) = match s.trim().strip_prefix("avg:") {
        Some(r) => (HamiltonianMode::TimeAveraged, r),
        None => (HamiltonianMode::Full, s.trim()),
    };
    Ok((InteractionFlags::parse(rest)?, mode))
}

pub fn flags_label(flags: InteractionFlags, mode: HamiltonianMode) -> String {
    match mode {
        HamiltonianMode::Full => flags.label(),
        HamiltonianMode::TimeAveraged => format!("avg:{}", flags.label()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub molecule: MoleculeParams,
    /// Peak intensity, W/cm².
    pub intensity: f64,
    #[serde(default = "one")]
    pub q1: u32,
    #[serde(default = "two")]
    pub q2: u32,
    #[serde(default)]
    pub delta1: f64,
    pub gamma: Grid,
    pub delta2: Grid,
    pub periods_fs: Vec<f64>,
    #[serde(default = "default_flags")]
    pub flags: Vec<String>,
    pub t_end_ps: f64,
    pub sample_every_ps: f64,
    #[serde(default = "default_n_t0")]
    pub n_t0: usize,
    #[serde(default = "default_ks")]
    pub ks: Vec<u32>,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub propagator: PropagatorOverrides,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn one() -> u32 {
    1
}
fn two() -> u32 {
    2
}
fn default_flags() -> Vec<String> {
    vec!["mu".into()]
}
fn default_n_t0() -> usize {
    crate::observables::DEFAULT_N_T0
}
fn default_ks() -> Vec<u32> {
    vec![1, 2]
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub period_fs: f64,
    pub gamma: f64,
    pub delta2: f64,
    pub flags: String,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// TOML of everything that determines the numbers: `output` and
    /// `workers` are blanked.
    pub fn canonical_toml(&self) -> String {
        RunConfig {
            output: PathBuf::new(),
            workers: None,
            ..self.clone()
        }
        .to_toml()
    }

    /// SHA-256 of [`Self::canonical_toml`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.molecule.validate()?;
        if !(self.intensity >= 0.0) {
            return bad(format!("intensity must be non-negative, got {}", self.intensity));
        }
        if self.q1 == 0 || self.q2 == 0 {
            return bad("q1 and q2 must be >= 1".into());
        }
        for g in self.gamma.values()? {
            if !(0.0..=1.0).contains(&g) {
                return bad(format!("gamma {g} outside [0, 1]"));
            }
        }
        self.delta2.values()?;
        if self.periods_fs.is_empty() || self.periods_fs.iter().any(|t| !(*t > 0.0)) {
            return bad("periods_fs must be a nonempty list of positive values".into());
        }
        if self.flags.is_empty() {
            return bad("flags must not be empty".into());
        }
        for f in &self.flags {
            parse_flags(f)?;
        }
        if !(self.t_end_ps > 0.0) || !(self.sample_every_ps > 0.0) || self.sample_every_ps > self.t_end_ps {
            return bad("need 0 < sample_every_ps <= t_end_ps".into());
        }
        if self.n_t0 < 2 {
            return bad(format!("n_t0 must be >= 2, got {}", self.n_t0));
        }
        if self.ks.is_empty() || self.ks.iter().any(|k| !(1..=3).contains(k)) {
            return bad("ks must list values in 1..=3".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        let basis = self.basis()?;
        if basis.index_of(self.initial.j).is_none() {
            return bad(format!("initial J={} outside the basis", self.initial.j));
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        let b = BasisSpec {
            m: self.initial.m,
            jmax: self.propagator.jmax.unwrap_or(DEFAULT_JMAX),
            buffer: self.propagator.buffer.unwrap_or(DEFAULT_BUFFER),
        };
        b.validate()?;
        Ok(b)
    }

    /// Grid points in output order: period, flags, gamma, delta2.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let gammas = self.gamma.values()?;
        let deltas = self.delta2.values()?;
        let mut out = Vec::new();
        for &period_fs in &self.periods_fs {
            for flags in &self.flags {
                for &gamma in &gammas {
                    for &delta2 in &deltas {
                        out.push(SweepPoint {
                            period_fs,
                            gamma,
                            delta2,
                            flags: flags.clone(),
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn run_description(&self, point: &SweepPoint) -> Result<RunDescription> {
        let molecule = to_internal(&self.molecule)?;
        let e0 = intensity_to_field(self.intensity)?.au;
        let (eps1, eps2) = gamma_split(e0, point.gamma)?;
        let period = fs_to_au(point.period_fs);
        let mut field = FieldSpec::two_color(eps1, eps2, self.q1, self.q2, period, point.delta2);
        field.delta1 = self.delta1;
        let (flags, mode) = parse_flags(&point.flags)?;
        let mut config = PropagatorConfig::for_laser_period(period);
        let o = &self.propagator;
        if let Some(dt) = o.dt_fs {
            config.dt = fs_to_au(dt);
        }
        if let Some(m) = o.krylov_dim {
            config.krylov_dim = m;
        }
        if let Some(t) = o.step_tolerance {
            config.step_tolerance = t;
        }
        if let Some(r) = o.field_time_rule {
            config.field_time_rule = r;
        }
        config.validate()?;
        Ok(RunDescription {
            molecule,
            field,
            flags,
            mode,
            basis: self.basis()?,
            initial_j: self.initial.j,
            t_end: ps_to_au(self.t_end_ps),
            sample_every: ps_to_au(self.sample_every_ps),
            config,
            method: o.method.unwrap_or_default(),
        })
    }

    /// Worker count from the environment, then the file, then all cores.
    pub fn effective_workers(&self) -> Result<usize> {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            return v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| Error::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer")));
        }
        Ok(self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
    }
}
