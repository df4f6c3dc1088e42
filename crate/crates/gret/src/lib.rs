//! Global registration of point clouds from overlapping rigid patches.
//!
//! The input is a *patch framework*: a bipartite membership graph between
//! `N` points and `M` patches, plus the local coordinates of each point in
//! every patch that observed it. Each patch differs from the global frame
//! by an unknown rotation-or-reflection and translation; the library
//! recovers global coordinates (up to one rigid motion) by minimizing the
//! least-squares inconsistency of all measurements at once.
//!
//! Eliminating positions and translations reduces the problem to
//! minimizing `Tr(C O^T O)` over `M` orthogonal blocks, where `C` is the
//! positive semidefinite *patch-stress matrix* assembled from the graph
//! Laplacian. Three pipelines attack that core problem:
//!
//! - [`spectral::gret_spec`] relaxes the blocks to a row-orthogonal frame
//!   and reads the solution off the bottom eigenvectors of `C`;
//! - [`sdp::gret_sdp`] solves the tighter semidefinite relaxation with an
//!   operator-splitting solver, then rounds eigenvectors; when the solution
//!   has rank `d` the rounding is exact and the non-convex optimum is found;
//! - [`sdp::manifold_refine`] polishes any feasible starting point by
//!   Riemannian descent on the product of orthogonal groups.
//!
//! [`rigidity::gret_rrt`] certifies exact recovery from the graph alone by
//! a randomized rank test of the stress matrix, and [`harness`] provides
//! seeded generators, bounded noise, RMSD scoring, and reproducible
//! noise sweeps. The `gret` binary exposes all of it as `register`,
//! `rank-test`, `simulate`, and `sweep` subcommands; the `examples/`
//! directory demonstrates each capability in library form.

pub mod assembly;
pub mod error;
pub mod generate;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod model;
pub mod registration;
pub mod rigidity;
pub mod sdp;
pub mod seeding;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{Configuration, PatchFramework, RigidTransform};
pub use registration::{Method, RegistrationResult};
