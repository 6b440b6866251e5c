//! Numerical toolkit for shift-invariant subspaces of weighted Bergman
//! spaces seen through output pairs (C, A): observability gramians and
//! shifted gramians, Stein equalities and inequalities, reproducing-kernel
//! grids, inner families and partially isometric multipliers, and the
//! associated discrete-time time-varying linear system.
//!
//! The library surface is organized by subject:
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigendecompositions,
//!   rank-revealing PSD factors.
//! - [`series`]: exact calculus of the series R_{n,k}(z) = (S*)^k (1-z)^{-n}
//!   and the weights mu_{n,j}.
//! - [`statespace`]: output pairs, gramians, Stein equations, metric
//!   constraints.
//! - [`bergman`]: the truncated weighted Bergman space, its shift, model
//!   operators, and kernel evaluation on grids.
//! - [`beurlinglax`]: the four representation constructions and their
//!   verification harnesses.
//! - [`tvsystem`]: simulation of the time-varying system realizing the
//!   representations, with closed-form oracles and energy audits.
//! - [`onezero`]: independent closed forms for the one-zero subspace,
//!   used as ground truth against the generic pipelines.
//! - [`driver`]: batch front-end behind the `blax` binary.

pub mod bergman;
pub mod beurlinglax;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod onezero;
pub mod report;
pub mod series;
pub mod statespace;
pub mod tol;
pub mod tvsystem;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CScalar};
