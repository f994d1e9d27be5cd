//! Exterior radial solutions: first integrals, branches, solutions, expansions.

mod branch;
mod expansion;
mod first_integral;
mod solution;

pub use branch::{
    branch_catalog, measure_branch_exponent, Branch, Interval, Monotone, SERIES_ORDER,
};
pub use expansion::{expansion_coefficients, measure_remainder_slope, Expansion, RemainderFit};
pub use first_integral::{large_theta, shifted_arctan, FirstIntegral, Form};
pub use solution::{build_solution, RadialSolution, DEFAULT_R_MIN};

use crate::error::{Error, Result};
use crate::operator::Operator;

/// Shorthand for `FirstIntegral::new`.
pub fn build_first_integral(op: &Operator) -> Result<FirstIntegral> {
    FirstIntegral::new(op)
}

/// The branch selected by the admissibility condition of the case, or the
/// branch with index `p` when given.
pub fn select_branch(op: &Operator, p: Option<usize>) -> Result<Branch> {
    let fi = FirstIntegral::new(op)?;
    let cat = branch_catalog(&fi)?;
    let found = match p {
        Some(p) => cat.into_iter().find(|b| b.p == p),
        None => cat.into_iter().find(|b| b.tagged),
    };
    found.ok_or_else(|| match p {
        Some(p) => Error::NoSolution(format!("no branch p = {p} for these parameters")),
        None => Error::NoSolution("no admissible branch for these parameters".into()),
    })
}
