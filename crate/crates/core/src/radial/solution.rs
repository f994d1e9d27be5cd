//! Radial solutions `u(r)` assembled from a branch of the first integral.
//!
//! With `W(r) = w(c r^{-n})`, `u'(r) = r (alpha + beta W)` and
//!
//! ```text
//! u(r) = c2 r^2 + c0 + beta * T(r),   T(r) = int_inf^r tau (W(tau) - w(0)) dtau
//! ```
//!
//! on analytic branches. On the non-analytic inverse-case branches the tail
//! integral diverges, so `T` is anchored at `r_min` instead.

use std::cell::RefCell;

use serde::Serialize;

use super::branch::Branch;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::quadrature::{adaptive, on_partition, uniform_partition};

#[derive(Debug, Clone, Serialize)]
enum Tail {
    Zero,
    /// `T(r) = -r^2 g int_0^1 s^{-2g-1} d(xi_r s^{n g}) ds` on a fixed partition.
    Infinite {
        gamma: f64,
        partition: Vec<(f64, f64)>,
    },
    /// `T(r) = int_{r_min}^r`, in `t = ln tau`, on a fixed panel count.
    Anchored {
        panels: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialSolution {
    op: Operator,
    branch: Branch,
    c: f64,
    c0: f64,
    r_min: f64,
    c2: f64,
    #[serde(skip)]
    tail: Tail,
}

pub const DEFAULT_R_MIN: f64 = 1.25;

/// Builds the exterior solution on `[r_min, inf)` with first-integral constant
/// `c` and additive constant `c0`.
pub fn build_solution(
    branch: &Branch,
    op: &Operator,
    c: f64,
    c0: f64,
    r_min: f64,
) -> Result<RadialSolution> {
    if branch.first_integral().op() != op {
        return Err(Error::Contract(
            "branch belongs to a different operator".into(),
        ));
    }
    if !(r_min >= 1.0 && r_min.is_finite()) {
        return Err(Error::Domain(format!("r_min = {r_min} must be >= 1")));
    }
    if !c.is_finite() || !c0.is_finite() {
        return Err(Error::Domain("c and c0 must be finite".into()));
    }
    let Some(w0) = branch.w_at_zero else {
        return Err(Error::Contract(format!(
            "branch p = {} has no limit at infinity",
            branch.p
        )));
    };
    let n = op.n() as f64;
    let fi = branch.first_integral();
    let xi_min = c * r_min.powf(-n);
    // range check with the branch's own endpoint names
    branch.invert(xi_min)?;
    if c == 0.0 {
        let (l1, l2) = branch.eigenvalues_at(w0);
        let mut lam = vec![l2; op.n()];
        lam[0] = l1;
        op.evaluate(&lam).map_err(|e| {
            Error::Domain(format!(
                "c = 0 gives a singular constant solution on branch p = {}: {e}",
                branch.p
            ))
        })?;
    }
    let c2 = 0.5 * fi.y_of_w(w0);
    let mut sol = RadialSolution {
        op: *op,
        branch: branch.clone(),
        c,
        c0,
        r_min,
        c2,
        tail: Tail::Zero,
    };
    if c != 0.0 {
        sol.tail = if branch.analytic_at_zero {
            let gamma = 2.0 / (n - 2.0);
            let err = RefCell::new(None);
            let f = |s: f64| sol.tail_integrand(s, r_min, gamma, &err);
            let est = adaptive(f, 0.0, 1.0, 1e-300, 1e-14, 2000)?;
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            Tail::Infinite {
                gamma,
                partition: est.partition,
            }
        } else {
            Tail::Anchored { panels: 24 }
        };
    }
    Ok(sol)
}

impl RadialSolution {
    pub fn op(&self) -> &Operator {
        &self.op
    }
    pub fn branch(&self) -> &Branch {
        &self.branch
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn r_min(&self) -> f64 {
        self.r_min
    }
    /// Coefficient of `r^2`, i.e. half the limiting eigenvalue `u'/r`.
    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn xi(&self, r: f64) -> f64 {
        self.c * r.powf(-(self.op.n() as f64))
    }

    /// `W(r) - w(0)`.
    pub fn w_offset(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::Domain(format!("r = {r} must be positive")));
        }
        self.branch.invert_offset(self.xi(r))
    }

    /// `W(r)` in the normalized variable of the first integral.
    pub fn w(&self, r: f64) -> Result<f64> {
        Ok(self.w_offset(r)? + self.branch.w_at_zero.unwrap_or(0.0))
    }

    /// `u'(r) / r`.
    pub fn slope_ratio(&self, r: f64) -> Result<f64> {
        let beta = self.branch.first_integral().beta();
        Ok(2.0 * self.c2 + beta * self.w_offset(r)?)
    }

    pub fn du(&self, r: f64) -> Result<f64> {
        Ok(r * self.slope_ratio(r)?)
    }

    pub fn d2u(&self, r: f64) -> Result<f64> {
        Ok(self.eigenvalues(r)?.0)
    }

    /// `(u''(r), u'(r)/r)`.
    pub fn eigenvalues(&self, r: f64) -> Result<(f64, f64)> {
        let w = self.w(r)?;
        let (l1, _) = self.branch.eigenvalues_at(w);
        Ok((l1, self.slope_ratio(r)?))
    }

    /// Full Hessian spectrum at radius `r`: `u''` once, `u'/r` with
    /// multiplicity `n - 1`.
    pub fn spectrum(&self, r: f64) -> Result<Vec<f64>> {
        let (l1, l2) = self.eigenvalues(r)?;
        let mut v = vec![l2; self.op.n()];
        v[0] = l1;
        Ok(v)
    }

    fn tail_integrand(&self, s: f64, r: f64, gamma: f64, err: &RefCell<Option<Error>>) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let n = self.op.n() as f64;
        let xi = self.xi(r) * s.powf(n * gamma);
        match self.branch.invert_offset(xi) {
            Ok(d) => s.powf(-2.0 * gamma - 1.0) * d,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    }

    /// `T(r)`; see the module docs.
    pub fn tail(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::Domain(format!("r = {r} must be positive")));
        }
        let err = RefCell::new(None);
        let value = match &self.tail {
            Tail::Zero => 0.0,
            Tail::Infinite { gamma, partition } => {
                let g = *gamma;
                -r * r * g * on_partition(|s| self.tail_integrand(s, r, g, &err), partition)
            }
            Tail::Anchored { panels } => {
                let (a, b) = (self.r_min.ln(), r.ln());
                let part = uniform_partition(a, b, *panels);
                on_partition(
                    |t| {
                        let tau = t.exp();
                        match self.w_offset(tau) {
                            Ok(d) => tau * tau * d,
                            Err(e) => {
                                err.borrow_mut().get_or_insert(e);
                                0.0
                            }
                        }
                    },
                    &part,
                )
            }
        };
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(value)
    }

    pub fn u(&self, r: f64) -> Result<f64> {
        let beta = self.branch.first_integral().beta();
        Ok(self.c2 * r * r + self.c0 + beta * self.tail(r)?)
    }

    /// `u(|x|)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.op.n() {
            return Err(Error::Contract(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.op.n()
            )));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.u(r)
    }

    /// `|G(W(r)) r^n / c - 1|`.
    pub fn first_integral_defect(&self, r: f64) -> Result<f64> {
        let d = self.w_offset(r)?;
        let n = self.op.n() as f64;
        if self.c == 0.0 {
            return Ok(self.branch.g_offset(d).abs());
        }
        Ok((self.branch.g_offset(d) * r.powf(n) / self.c - 1.0).abs())
    }

    /// `F_tau` of the exact radial spectrum minus `C0`.
    pub fn radial_residual(&self, r: f64) -> Result<f64> {
        Ok(self.op.evaluate(&self.spectrum(r)?)? - self.op.c0())
    }
}
