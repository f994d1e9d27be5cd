//! Exterior radial solutions of the `F_tau` family of fully nonlinear
//! elliptic equations, their expansions at infinity, and the oracles used to
//! check them.

pub mod cli;
pub mod error;
pub mod laplace;
pub mod operator;
pub mod oracle;
pub mod quadrature;
pub mod radial;
pub mod regression;
pub mod series;
pub mod transforms;

pub use error::{Error, Result};
pub use operator::{AdmissibilityReport, Case, ConditionId, Operator};
