//! Convex hulls of permutation- and sign-invariant sets.
//!
//! Majorization and sorting-network formulations, K-sparse norm balls with
//! separation, convex envelopes of products over boxes, transportation
//! bounds and sparse PCA relaxations, with in-repo LP and conic solvers.

pub mod envelope;
pub mod error;
pub mod ksupport;
pub mod linalg;
pub mod majorization;
pub mod matrixhull;
pub mod model;
pub mod solvers;
pub mod spca;
pub mod transport;

pub use error::{Error, Result};
pub use ksupport::{BaseNorm, Membership};
pub use linalg::Matrix;
pub use model::{ConicModel, LinExpr, MajorizationForm, SealedModel};
pub use solvers::{ConicSettings, SolveReport, Status};
pub use spca::{RelaxationKind, SpcaInstance};
