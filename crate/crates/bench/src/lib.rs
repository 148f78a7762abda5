//! Shared setup for the criterion benchmarks in `benches/`.

use bicolor_core::field::gamma_split;
use bicolor_core::params::{fs_to_au, intensity_to_field, ps_to_au, to_internal};
use bicolor_core::propagator::{HamiltonianMode, PropagationMethod};
use bicolor_core::{BasisSpec, FieldSpec, InteractionFlags, MoleculeParams, PropagatorConfig, RunDescription};

/// OCS at 5e11 W/cm², T = 400 fs, γ = 0.5, δ2 = π/2.
pub fn ocs_run(flags: InteractionFlags, jmax: u32, t_end_ps: f64) -> RunDescription {
    let e0 = intensity_to_field(5e11).expect("valid intensity").au;
    let (eps1, eps2) = gamma_split(e0, 0.5).expect("valid gamma");
    let period = fs_to_au(400.0);
    RunDescription {
        molecule: to_internal(&MoleculeParams::OCS).expect("valid molecule"),
        field: FieldSpec::two_color(eps1, eps2, 1, 2, period, std::f64::consts::FRAC_PI_2),
        flags,
        mode: HamiltonianMode::Full,
        basis: BasisSpec::new(0, jmax).expect("valid basis"),
        initial_j: 0,
        t_end: ps_to_au(t_end_ps),
        sample_every: ps_to_au(0.5),
        config: PropagatorConfig::for_laser_period(period),
        method: PropagationMethod::Auto,
    }
}
