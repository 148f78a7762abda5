use std::path::Path;

use bicolor_core::fourierfit::{FitOptions, Parity};
use bicolor_core::sweep::{
    fit_output_path, fit_table, header_value, output_path, read_csv, read_sweep_csv, run_sweep, write_csv_atomic,
    FitRow, Grid, RunConfig, SweepOptions, FIT_COLUMNS,
};
use bicolor_core::Error;

fn small_config(dir: &Path) -> RunConfig {
    let text = format!(
        r#"
intensity = 5e11
gamma = [0.5]
delta2 = {{ n = 2, start = 0.0, stop = 1.0, endpoint = false, pi_units = true }}
periods_fs = [400.0]
t_end_ps = 2.0
sample_every_ps = 0.5
n_t0 = 4
ks = [1, 2]
output = "{}"

[propagator]
jmax = 10
"#,
        dir.display()
    );
    RunConfig::from_toml(&text).unwrap()
}

#[test]
fn zero_intensity_point_stays_isotropic() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.intensity = 0.0;
    cfg.delta2 = Grid::List(vec![0.0]);
    let res = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert!(res.failures.is_empty());
    let c1 = read_sweep_csv(&output_path(&cfg, 1)).unwrap();
    let c2 = read_sweep_csv(&output_path(&cfg, 2)).unwrap();
    assert_eq!(c1.rows.len(), 5);
    for r in &c1.rows {
        assert!(r.value.abs() < 1e-14, "{}", r.value);
        assert_eq!(r.n_t0, 4);
        assert_eq!(r.jmax, 10);
    }
    for r in &c2.rows {
        assert!((r.value - 1.0 / 3.0).abs() < 1e-14, "{}", r.value);
    }
    assert_eq!(c1.rows.first().unwrap().t_ps, 0.0);
    assert!((c1.rows.last().unwrap().t_ps - 2.0).abs() < 1e-12);
}

#[test]
fn output_is_independent_of_worker_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = small_config(a.path());
    ca.workers = Some(1);
    let mut cb = small_config(b.path());
    cb.workers = Some(3);
    cb.gamma = Grid::List(vec![0.5]);
    run_sweep(&ca, &SweepOptions::default()).unwrap();
    run_sweep(&cb, &SweepOptions::default()).unwrap();
    assert_eq!(ca.hash(), cb.hash());
    for k in [1, 2] {
        let x = std::fs::read(output_path(&ca, k)).unwrap();
        let y = std::fs::read(output_path(&cb, k)).unwrap();
        assert_eq!(x, y, "cos{k}.csv differs");
    }
}

#[test]
fn rows_follow_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.gamma = Grid::List(vec![0.25, 0.75]);
    cfg.periods_fs = vec![400.0, 200.0];
    cfg.ks = vec![1];
    let res = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    let keys: Vec<(f64, f64, f64)> = res.tables[0]
        .rows
        .iter()
        .step_by(5)
        .map(|r| (r.period_fs, r.gamma, r.delta2))
        .collect();
    let want: Vec<(f64, f64, f64)> = cfg
        .points()
        .unwrap()
        .iter()
        .map(|p| (p.period_fs, p.gamma, p.delta2))
        .collect();
    assert_eq!(keys, want);
}

#[test]
fn complete_output_is_reused_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let first = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert!(!first.skipped);
    let path = output_path(&cfg, 1);
    let before = std::fs::read(&path).unwrap();
    let second = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert!(second.skipped);
    assert_eq!(second.tables, first.tables);
    let forced = run_sweep(&cfg, &SweepOptions { force: true }).unwrap();
    assert!(!forced.skipped);
    assert_eq!(std::fs::read(&path).unwrap(), before);

    let mut changed = cfg.clone();
    changed.n_t0 = 6;
    let third = run_sweep(&changed, &SweepOptions::default()).unwrap();
    assert!(!third.skipped);
    let t = read_sweep_csv(&path).unwrap();
    assert_eq!(header_value(&t.header, "config_sha256"), Some(changed.hash().as_str()));
}

#[test]
fn failing_points_are_isolated_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.flags = vec!["none".into(), "mu".into()];
    cfg.propagator.krylov_dim = Some(4);
    cfg.propagator.step_tolerance = Some(1e-300);
    cfg.ks = vec![2];
    let res = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert_eq!(res.failures.len(), 2);
    assert!(res.failures.iter().all(|f| f.point.flags == "mu"));
    let t = read_sweep_csv(&output_path(&cfg, 2)).unwrap();
    assert_eq!(header_value(&t.header, "failures"), Some("2"));
    assert_eq!(t.rows.len(), 10);
    assert!(t.rows.iter().all(|r| r.flags == "none"));
    // incomplete output is never reused
    assert!(!run_sweep(&cfg, &SweepOptions::default()).unwrap().skipped);
}

#[test]
fn schema_errors_name_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "# k: 1\nT_fs,gamma,delta1,delta_2,flags,t_ps,value,n_t0,Jmax,dt_fs\n").unwrap();
    let msg = read_sweep_csv(&p).unwrap_err().to_string();
    assert!(msg.contains("delta_2") && msg.contains("delta2"), "{msg}");

    std::fs::write(&p, "# k: 1\nT_fs,gamma,delta1,delta2,flags,t_ps,value,n_t0,Jmax\n").unwrap();
    let msg = read_sweep_csv(&p).unwrap_err().to_string();
    assert!(msg.contains("dt_fs"), "{msg}");

    std::fs::write(&p, "T_fs,gamma,delta1,delta2,flags,t_ps,value,n_t0,Jmax,dt_fs\n").unwrap();
    assert!(matches!(read_sweep_csv(&p), Err(Error::CsvSchema { .. })));
}

#[test]
fn atomic_write_round_trips_fit_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("nested").join("x_fit.csv");
    let rows = vec![FitRow {
        period_fs: 400.0,
        gamma: 0.5,
        flags: "mu".into(),
        delta1: 0.0,
        k: 1,
        t: 1.5,
        j: 1,
        c: 0.125,
        phi: -0.5,
        residual: 1e-9,
    }];
    let header = vec![("note".to_string(), "x".to_string())];
    write_csv_atomic(&p, &header, &rows).unwrap();
    let (h, back): (_, Vec<FitRow>) = read_csv(&p, &FIT_COLUMNS).unwrap();
    assert_eq!(h, header);
    assert_eq!(back, rows);
    let leftovers = std::fs::read_dir(p.parent().unwrap()).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn delta2_fit_of_a_sweep_keeps_odd_harmonics() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.delta2 = Grid::Uniform {
        n: 8,
        start: 0.0,
        stop: 2.0,
        endpoint: false,
        pi_units: true,
    };
    cfg.n_t0 = 8;
    cfg.ks = vec![1];
    let res = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    let opts = FitOptions {
        jmax: 3,
        ..FitOptions::default()
    };
    let rows = fit_table(&res.tables[0], cfg.q1, cfg.q2, &opts).unwrap();
    assert_eq!(Parity::for_observable(1, 1, 2), Parity::Odd);
    // 5 sample times, harmonics 1 and 3
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.j % 2 == 1));
    let t_last = rows.iter().map(|r| r.t).fold(0.0, f64::max);
    assert!((t_last - 2.0).abs() < 1e-12);
    let late = rows.iter().find(|r| r.t == t_last && r.j == 1).unwrap();
    assert!(late.c > 1e-4, "{}", late.c);
    for r in &rows {
        assert!(r.residual < 1e-8, "{r:?}");
    }
    assert_eq!(fit_output_path(&output_path(&cfg, 1)), dir.path().join("cos1_fit.csv"));
}

#[test]
fn cycle_averaged_flags_run_through_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.flags = vec!["avg:mu+alpha".into()];
    cfg.ks = vec![2];
    let res = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert!(res.failures.is_empty());
    let rows = &res.tables[0].rows;
    assert!(rows.iter().all(|r| r.flags == "avg:mu+alpha"));
    let last = rows.last().unwrap().value;
    assert!(last > 1.0 / 3.0 + 1e-4 && last < 1.0, "{last}");
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!cfg.points().unwrap().is_empty());
            n += 1;
        }
    }
    assert!(n >= 3);
}
