//! CSV files with `#` header lines, written atomically.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourierfit::{fit_series, FitOptions};

pub const SWEEP_COLUMNS: [&str; 10] = [
    "T_fs", "gamma", "delta1", "delta2", "flags", "t_ps", "value", "n_t0", "Jmax", "dt_fs",
];

pub const FIT_COLUMNS: [&str; 10] = [
    "T_fs", "gamma", "flags", "delta1", "k", "t", "j", "C_j", "phi_j", "residual",
];

pub const TRACE_COLUMNS: [&str; 10] = [
    "T_fs", "gamma", "delta1", "delta2", "flags", "t0_fs", "t_ps", "cos1", "cos2", "cos3",
];

/// One t0-averaged sample ⟨⟨cos^kθ⟩⟩(t) at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T_fs")]
    pub period_fs: f64,
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub flags: String,
    pub t_ps: f64,
    pub value: f64,
    pub n_t0: usize,
    #[serde(rename = "Jmax")]
    pub jmax: u32,
    pub dt_fs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    #[serde(rename = "T_fs")]
    pub period_fs: f64,
    pub gamma: f64,
    pub flags: String,
    pub delta1: f64,
    pub k: u32,
    /// Time, ps.
    pub t: f64,
    pub j: usize,
    #[serde(rename = "C_j")]
    pub c: f64,
    #[serde(rename = "phi_j")]
    pub phi: f64,
    pub residual: f64,
}

/// ⟨cos^kθ⟩ at one fixed t0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    #[serde(rename = "T_fs")]
    pub period_fs: f64,
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub flags: String,
    pub t0_fs: f64,
    pub t_ps: f64,
    pub cos1: f64,
    pub cos2: f64,
    pub cos3: f64,
}

/// `# key: value` lines, in file order; keys may repeat.
pub type Header = Vec<(String, String)>;

pub fn header_value<'a>(header: &'a Header, key: &str) -> Option<&'a str> {
    header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

/// Writes `# key: value` header lines followed by the CSV body.
pub fn write_csv_to<W: Write, T: Serialize>(mut out: W, header: &Header, rows: &[T]) -> Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Csv { path: "<output>".into(), source: e })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes header and rows to a temporary file beside `path`, then renames it.
pub fn write_csv_atomic<T: Serialize>(path: &Path, header: &Header, rows: &[T]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_csv_to(&mut tmp, header, rows).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv { path: path.to_path_buf(), source },
        other => other,
    })?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Reads a header-prefixed CSV and checks its columns against `columns`.
pub fn read_csv<T: DeserializeOwned>(path: &Path, columns: &[&str]) -> Result<(Header, Vec<T>)> {
    let text = std::fs::read_to_string(path)?;
    let mut header = Header::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim_start();
        if let Some((k, v)) = body.split_once(": ") {
            header.push((k.to_string(), v.to_string()));
        } else if let Some(k) = body.strip_suffix(':') {
            header.push((k.to_string(), String::new()));
        }
    }
    let schema = |detail: String| Error::CsvSchema { path: path.to_path_buf(), detail };
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let found = rdr
        .headers()
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?
        .clone();
    for (i, want) in columns.iter().enumerate() {
        match found.get(i) {
            Some(got) if got == *want => {}
            Some(got) => return Err(schema(format!("column {} is '{got}', expected '{want}'", i + 1))),
            None => return Err(schema(format!("missing column '{want}'"))),
        }
    }
    if found.len() > columns.len() {
        return Err(schema(format!("unexpected extra column '{}'", &found[columns.len()])));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec.map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?);
    }
    Ok((header, rows))
}

/// Sweep output for one k.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub k: u32,
    pub header: Header,
    pub rows: Vec<SweepRow>,
}

pub fn read_sweep_csv(path: &Path) -> Result<SweepTable> {
    let (header, rows) = read_csv::<SweepRow>(path, &SWEEP_COLUMNS)?;
    let k = header_value(&header, "k")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::CsvSchema {
            path: path.to_path_buf(),
            detail: "header has no '# k: <power>' line".into(),
        })?;
    Ok(SweepTable { k, header, rows })
}

/// Fits the δ2 dependence of every (T, γ, flags, δ1, t) slice of a table.
pub fn fit_table(table: &SweepTable, q1: u32, q2: u32, opts: &FitOptions) -> Result<Vec<FitRow>> {
    type Key = (u64, u64, String, u64, u64);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: HashMap<Key, Vec<&SweepRow>> = HashMap::new();
    for r in &table.rows {
        let key = (r.period_fs.to_bits(), r.gamma.to_bits(), r.flags.clone(), r.delta1.to_bits(), r.t_ps.to_bits());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    let mut out = Vec::new();
    for key in order {
        let mut g = groups.remove(&key).expect("group exists");
        g.sort_by(|a, b| a.delta2.total_cmp(&b.delta2));
        let d2: Vec<f64> = g.iter().map(|r| r.delta2).collect();
        let v: Vec<f64> = g.iter().map(|r| r.value).collect();
        let first = g[0];
        let fit = fit_series(&d2, &v, table.k, q1, q2, first.delta1, opts)?;
        for j in 0..=fit.jmax {
            if !fit.parity.allows(j) {
                continue;
            }
            out.push(FitRow {
                period_fs: first.period_fs,
                gamma: first.gamma,
                flags: first.flags.clone(),
                delta1: first.delta1,
                k: table.k,
                t: first.t_ps,
                j,
                c: fit.coefficients[j],
                phi: fit.phases[j],
                residual: fit.residual,
            });
        }
    }
    Ok(out)
}
