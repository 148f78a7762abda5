//! Rotational dynamics of a linear polar molecule in a two-color laser field.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diophantine;
pub mod error;
pub mod field;
pub mod fourierfit;
pub mod observables;
pub mod params;
pub mod propagator;
pub mod rotor;
pub mod sweep;
pub mod symmetry;

pub use error::{Error, Result};
pub use field::{FieldMoments, FieldSpec, HarmonicTerm};
pub use params::{InternalParams, MoleculeParams};
pub use propagator::{PropagatorConfig, RunDescription, Trajectory, WaveFunction};
pub use rotor::{BandedOperator, BasisSpec, InteractionFlags, RotorOperators};
