//! Expansion at infinity `u ~ c2 r^2 + c0 + r^2 sum_j c_{-j} (c r^{-n})^j`.

use serde::{Deserialize, Serialize};

use super::branch::{Branch, SERIES_ORDER};
use super::solution::RadialSolution;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::regression::{fit_loglog, logspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub n: usize,
    pub c: f64,
    pub c2: f64,
    pub c0: f64,
    /// `c_{-1}, ..., c_{-J}`.
    pub tail_coeffs: Vec<f64>,
    pub order: usize,
}

/// Tail coefficients from the inverse series `w(xi) = sum_j w_j xi^j`:
/// integrating `tau (W - w_0)` termwise gives `c_{-j} = -beta w_j / (n j - 2)`.
pub fn expansion_coefficients(
    branch: &Branch,
    op: &Operator,
    c: f64,
    order: usize,
) -> Result<Expansion> {
    if branch.first_integral().op() != op {
        return Err(Error::Contract(
            "branch belongs to a different operator".into(),
        ));
    }
    if order < 1 {
        return Err(Error::Contract("expansion order must be at least 1".into()));
    }
    if !branch.analytic_at_zero {
        return Err(Error::CriticalPoint(format!(
            "branch p = {} is not analytic at xi = 0",
            branch.p
        )));
    }
    let fi = branch.first_integral();
    let w0 = branch.w_at_zero.unwrap();
    let inverse = if order <= SERIES_ORDER {
        branch.inverse_series().unwrap().clone()
    } else {
        fi.taylor(w0, branch.upper_side, order)?
            .with_constant(0.0)
            .invert(order)?
    };
    let n = op.n();
    let beta = fi.beta();
    let tail_coeffs = (1..=order)
        .map(|j| {
            if c == 0.0 {
                0.0
            } else {
                -beta * inverse.coeffs()[j] / ((n * j) as f64 - 2.0)
            }
        })
        .collect();
    Ok(Expansion {
        n,
        c,
        c2: 0.5 * fi.y_of_w(w0),
        c0: 0.0,
        tail_coeffs,
        order,
    })
}

impl Expansion {
    pub fn with_c0(mut self, c0: f64) -> Expansion {
        self.c0 = c0;
        self
    }

    /// Truncated expansion at radius `r`.
    pub fn eval(&self, r: f64) -> f64 {
        self.c2 * r * r + self.c0 + r * r * self.tail_sum(r)
    }

    /// `sum_j c_{-j} (c r^{-n})^j`, Horner in `xi`.
    pub fn tail_sum(&self, r: f64) -> f64 {
        let xi = self.c * r.powf(-(self.n as f64));
        self.tail_coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &cj| (acc + cj) * xi)
    }

    /// A copy with one coefficient scaled by `1 + rel`. Index 0 is `c2`,
    /// index 1 is `c0`, index `j + 1` is `c_{-j}`.
    pub fn perturbed(&self, index: usize, rel: f64) -> Result<Expansion> {
        let mut e = self.clone();
        match index {
            0 => e.c2 = perturb(e.c2, rel),
            1 => e.c0 = perturb(e.c0, rel),
            j if j - 1 <= e.tail_coeffs.len() => {
                let v = &mut e.tail_coeffs[j - 2];
                *v = perturb(*v, rel);
            }
            _ => {
                return Err(Error::Contract(format!(
                    "no coefficient with index {index}"
                )))
            }
        }
        Ok(e)
    }
}

// a zero coefficient is shifted by `rel` in absolute terms so the control
// still bites
fn perturb(v: f64, rel: f64) -> f64 {
    if v == 0.0 {
        rel
    } else {
        v * (1.0 + rel)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RemainderFit {
    pub slope: f64,
    /// `2 - n m` where `c_{-m}` is the first non-vanishing coefficient past the
    /// truncation.
    pub expected: f64,
    pub xi_window: (f64, f64),
    pub radii: Vec<f64>,
    pub remainders: Vec<f64>,
}

/// Relative size of `u - u_J` against the leading tail term that still sits
/// clear of the rounding floor of the tail quadrature.
const REMAINDER_FLOOR: f64 = 1e-12;

/// Measures the log-log slope of `u - u_J` against `r`.
///
/// The window is chosen in `xi = c r^{-n}`: its top stays at a small fraction
/// of the series radius so the leading remainder term dominates, its bottom
/// keeps the remainder above the double-precision floor. The difference is
/// formed as `(c2 - c2') r^2 + (c0 - c0') + beta T(r) - r^2 sum_j c_{-j} xi^j`
/// so that the quadratic part never enters the cancellation.
pub fn measure_remainder_slope(sol: &RadialSolution, exp: &Expansion) -> Result<RemainderFit> {
    let branch = sol.branch();
    if !branch.analytic_at_zero {
        return Err(Error::CriticalPoint(
            "remainder slopes need an analytic branch".into(),
        ));
    }
    if sol.c() == 0.0 {
        return Err(Error::Contract(
            "c = 0: the remainder vanishes identically".into(),
        ));
    }
    let n = sol.op().n() as f64;
    let full = expansion_coefficients(branch, sol.op(), 1.0, SERIES_ORDER)?;
    let coeffs = &full.tail_coeffs;
    let scale = coeffs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let j = exp.order;
    let m = (j + 1..=SERIES_ORDER)
        .find(|&m| coeffs[m - 1].abs() > 1e-12 * scale)
        .ok_or_else(|| {
            Error::Numerical("no non-vanishing coefficient past the truncation".into())
        })?;
    let rho = branch.series_radius();
    let xi_cap = sol.c().abs() * sol.r_min().powf(-n);
    let xi_hi = (0.01 * rho).min(0.999 * xi_cap);
    let ratio = (coeffs[0] / coeffs[m - 1]).abs();
    let xi_floor = (REMAINDER_FLOOR * ratio).powf(1.0 / (m as f64 - 1.0));
    if xi_floor > 0.5 * xi_hi {
        return Err(Error::Numerical(format!(
            "remainder past J = {j} sits at the rounding floor for r >= r_min \
             (usable xi starts at {xi_floor:.3e}, reachable xi ends at {xi_hi:.3e}); increase |c|"
        )));
    }
    let xi_lo = xi_floor.max(1e-4 * xi_hi);
    let beta = branch.first_integral().beta();
    let mut radii = Vec::new();
    let mut rem = Vec::new();
    for xi in logspace(xi_lo, xi_hi, 24) {
        let r = (sol.c().abs() / xi).powf(1.0 / n);
        let quad = (sol.c2() - exp.c2) * r * r + (sol.c0() - exp.c0);
        let value = quad + beta * sol.tail(r)? - r * r * exp.tail_sum(r);
        radii.push(r);
        rem.push(value);
    }
    let fit = fit_loglog(&radii, &rem)?;
    Ok(RemainderFit {
        slope: fit.slope,
        expected: 2.0 - n * m as f64,
        xi_window: (xi_lo, xi_hi),
        radii,
        remainders: rem,
    })
}
