//! Unsupervised co-segmentation of sets of triangle meshes.
//!
//! The pipeline has three stages:
//!
//! 1. each shape is pre-segmented independently by clustering a spectral
//!    embedding of the mesh Laplace eigenfunctions ([`preseg`]);
//! 2. a functional map from every shape to a reference shape is estimated from
//!    Heat Kernel Signature constraints ([`descriptors`], [`fmap`]);
//! 3. part indicator functions are pushed through the maps into the reference
//!    basis and clustered into a shared label set ([`coseg`]).
//!
//! Supporting modules build the Gaussian-kernel mesh Laplace operator
//! ([`laplace`]) and solve the generalized eigenproblem `A f = λ D f`
//! ([`spectral`], [`linalg`]).
//!
//! With the default `parallel` feature the data-parallel loops run on rayon;
//! without it the same code runs sequentially and produces bit-identical output.

mod error;
mod par;

pub mod config;
pub mod coseg;
pub mod descriptors;
pub mod fmap;
pub mod kmeans;
pub mod laplace;
pub mod linalg;
pub mod mesh;
pub mod preseg;
pub mod spectral;

pub use error::{CosegError, ErrorKind, Result};
pub use mesh::TriMesh;

/// Crate version, recorded in run manifests and basis caches.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
