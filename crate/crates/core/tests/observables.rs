mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use bicolor_core::observables::{
    expectation_cos_k, one_color_halfperiod_check, t0_average, t0_average_from, ExpectationTrace, DEFAULT_N_T0,
};
use bicolor_core::{BasisSpec, Error, InteractionFlags, RotorOperators, WaveFunction};
use common::{max_diff, ocs_run};
use num_complex::Complex64;

#[test]
fn expectation_examples() {
    let basis = BasisSpec::new(0, 6).unwrap();
    let ops = RotorOperators::new(basis).unwrap();
    let y00 = WaveFunction::eigenstate(basis, 0).unwrap();
    assert!(expectation_cos_k(&ops, &y00, 1).unwrap().abs() < 1e-15);
    assert!((expectation_cos_k(&ops, &y00, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let mut mix = y00.clone();
    mix.coeffs[0] = Complex64::new(0.5f64.sqrt(), 0.0);
    mix.coeffs[1] = Complex64::new(0.5f64.sqrt(), 0.0);
    assert!((expectation_cos_k(&ops, &mix, 1).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    assert!(matches!(expectation_cos_k(&ops, &mix, 4), Err(Error::UnsupportedCosPower(4))));
    let other = WaveFunction::eigenstate(BasisSpec::new(0, 3).unwrap(), 0).unwrap();
    assert!(expectation_cos_k(&ops, &other, 1).is_err());
}

#[test]
fn one_color_field_does_not_orient_on_average() {
    for gamma in [0.0, 1.0] {
        let run = ocs_run(400.0, gamma, 0.4, InteractionFlags::ALL, 30, 20.0, 0.5);
        let avg = t0_average(&run, DEFAULT_N_T0).unwrap();
        let worst = avg.cos[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-6, "gamma={gamma}: {worst:e}");
    }
}

#[test]
fn doubling_n_t0_changes_averages_below_1e7() {
    for flags in [InteractionFlags::MU, InteractionFlags::ALL] {
        let run = ocs_run(400.0, 0.5, FRAC_PI_2, flags, 40, 100.0, 0.5);
        let a = t0_average(&run, DEFAULT_N_T0).unwrap();
        let b = t0_average(&run, 2 * DEFAULT_N_T0).unwrap();
        for k in 0..3 {
            let d = max_diff(&a.cos[k], &b.cos[k]);
            assert!(d < 1e-7, "{flags:?} k={}: {d:e}", k + 1);
        }
    }
}

#[test]
fn averaging_window_origin_is_irrelevant() {
    let run = ocs_run(400.0, 0.5, 1.0, InteractionFlags::MU_ALPHA, 24, 20.0, 0.5);
    let a = t0_average(&run, DEFAULT_N_T0).unwrap();
    let b = t0_average_from(&run, DEFAULT_N_T0, 0.37 * run.field.laser_period()).unwrap();
    for k in 0..3 {
        assert!(max_diff(&a.cos[k], &b.cos[k]) < 1e-10);
    }
    assert_eq!(a.n_t0(), DEFAULT_N_T0);
    assert!((b.t0_nodes[0] - 0.37 * run.field.laser_period()).abs() < 1e-9);
}

#[test]
fn values_respect_their_ranges() {
    let run = ocs_run(400.0, 0.5, 1.0, InteractionFlags::ALL, 30, 30.0, 0.25);
    let ops = run.operators().unwrap();
    for t0 in [0.0, 1000.0, 9000.0] {
        let traj = run.with_field(run.field.with_t0(t0)).propagate_with(&ops).unwrap();
        for i in 0..traj.times.len() {
            let (c1, c2, c3) = (traj.cos[0][i], traj.cos[1][i], traj.cos[2][i]);
            assert!(c1.abs() <= 1.0 && c3.abs() <= 1.0);
            assert!((0.0..=1.0).contains(&c2));
            assert!(c1 * c1 <= c2 + 1e-12);
        }
        let trace = ExpectationTrace::from_trajectory(&traj, 2).unwrap();
        assert_eq!(trace.values, traj.cos[1]);
    }
    let avg = t0_average(&run, 8).unwrap();
    let tr = avg.trace(1).unwrap();
    assert_eq!(tr.n_t0, 8);
    assert!(tr.values.iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn one_color_half_period_relation() {
    let run = ocs_run(400.0, 0.0, 0.0, InteractionFlags::ALL, 30, 30.0, 0.5);
    let run = run.with_field(run.field.with_t0(2345.0));
    let r = one_color_halfperiod_check(&run, 1).unwrap();
    assert!(r.max_deviation < 1e-8, "{r:?}");
    let run = ocs_run(400.0, 1.0, 0.3, InteractionFlags::ALL, 30, 30.0, 0.5);
    let r = one_color_halfperiod_check(&run, 2).unwrap();
    assert_eq!(r.sign, 1.0);
    assert!(r.max_deviation < 1e-8, "{r:?}");
    // the shift uses the multiplier of the color that is present
    assert!((r.shift - PI / (2.0 * run.field.omega)).abs() < 1e-9);
    let two = ocs_run(400.0, 0.5, 0.3, InteractionFlags::ALL, 10, 5.0, 0.5);
    assert!(matches!(one_color_halfperiod_check(&two, 1), Err(Error::InvalidUse(_))));
    let zero = two.with_field(bicolor_core::FieldSpec::zero(two.field.laser_period()));
    assert!(one_color_halfperiod_check(&zero, 1).unwrap().max_deviation < 1e-14);
}

#[test]
fn too_few_nodes_rejected() {
    let run = ocs_run(400.0, 0.5, 0.3, InteractionFlags::MU, 10, 5.0, 0.5);
    assert!(t0_average(&run, 1).is_err());
}
