//! Structure-preserving finite element discretization of compressible
//! magnetohydrodynamics on simplicial meshes.
//!
//! The scheme advances velocity, density, (optionally) entropy and magnetic
//! field with an implicit midpoint-type integrator whose discrete solution
//! conserves mass exactly, keeps the magnetic field divergence-free
//! cell by cell, and satisfies discrete energy and magnetic-helicity
//! balances up to the tolerance of the nonlinear solver.

pub mod app;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod forms;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod stepper;
pub mod vec3;
pub mod verify;

pub use error::{Error, Result};
