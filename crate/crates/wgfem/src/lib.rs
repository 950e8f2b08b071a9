//! Weak Galerkin finite elements for 2D linear elasticity on polygonal
//! meshes.
//!
//! The discretization approximates displacements by weak functions: an
//! interior polynomial per element paired with an independent, single-valued
//! trace polynomial per edge. Discrete weak gradient and divergence
//! operators are reconstructed element by element from integration-by-parts
//! identities, and a trace stabilizer ties the two parts together. The
//! resulting scheme is locking-free as the material approaches
//! incompressibility.
//!
//! All numerics are generic over the scalar type via [`real::Real`]
//! (`f32` or `f64`); the `*64` aliases below pick the usual double
//! precision instantiation.

pub mod analysis;
pub mod basis;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod quad;
pub mod real;
pub mod study;
pub mod system;
pub mod verify;
pub mod weak;

pub use error::{Result, WgError};
pub use real::{real, to_f64, Real};

/// Double-precision mesh.
pub type Mesh64 = mesh::Mesh<f64>;
/// Double-precision weak function (displacement field).
pub type WeakFunction64 = weak::WeakFunction<f64>;
/// Double-precision elementwise pressure field.
pub type PressureField64 = weak::PressureField<f64>;
/// Double-precision material parameters.
pub type MaterialParams64 = system::MaterialParams<f64>;
/// Double-precision error triple.
pub type ErrorTriple64 = analysis::ErrorTriple<f64>;
