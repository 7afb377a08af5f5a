//! Quasi-static brittle fracture in anti-plane shear, approximated by an
//! Ambrosio–Tortorelli phase field on a uniform square grid.

pub mod config;
pub mod criteria;
pub mod elastic;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod k2;
pub mod linalg;
pub mod phase_field;
pub mod viscous;

pub use elastic::{
    dtn_pairing, elastic_energy, solve_equilibrium, stress_field, DirichletData, Material, SolveOptions,
};
pub use error::{Error, Result};
pub use grid::{
    build_grid, partition_boundary, BoundaryPartition, BoundarySpec, DamageField, Grid2, Label, ScalarField,
};
