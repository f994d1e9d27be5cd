//! Truncated power series `sum_j c_j (x - x0)^j` and their inversion.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    base_point: f64,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Arctan,
    Sin,
    Cos,
    Ln1p,
    /// `(1 + x)^alpha`.
    PowAlpha,
}

impl Series {
    /// Series with the given coefficients; the order is `coeffs.len() - 1`.
    pub fn new(base_point: f64, coeffs: Vec<f64>) -> Result<Series> {
        if coeffs.is_empty() {
            return Err(Error::Contract(
                "a series needs at least one coefficient".into(),
            ));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Contract(format!("coefficient {i} is not finite")));
        }
        if !base_point.is_finite() {
            return Err(Error::Contract("base point is not finite".into()));
        }
        Ok(Series { base_point, coeffs })
    }

    fn raw(base_point: f64, coeffs: Vec<f64>) -> Series {
        Series { base_point, coeffs }
    }

    pub fn constant(base_point: f64, value: f64, order: usize) -> Series {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Series::raw(base_point, c)
    }

    /// The series of `x` itself about `base_point`: `x0 + (x - x0)`.
    pub fn variable(base_point: f64, order: usize) -> Series {
        let mut c = vec![0.0; order + 1];
        c[0] = base_point;
        if order >= 1 {
            c[1] = 1.0;
        }
        Series::raw(base_point, c)
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluates the truncated polynomial at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let t = x - self.base_point;
        self.eval_offset(t)
    }

    /// Evaluates at `base_point + t` without forming the sum.
    pub fn eval_offset(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// Same coefficients with the constant term replaced.
    pub fn with_constant(&self, c0: f64) -> Series {
        let mut c = self.coeffs.clone();
        c[0] = c0;
        Series::raw(self.base_point, c)
    }

    pub fn scale(&self, k: f64) -> Series {
        Series::raw(self.base_point, self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn truncate(&self, order: usize) -> Series {
        let mut c = self.coeffs.clone();
        c.resize(order + 1, 0.0);
        Series::raw(self.base_point, c)
    }

    fn check_compatible(&self, other: &Series) -> Result<()> {
        if self.base_point != other.base_point || self.order() != other.order() {
            return Err(Error::Contract(format!(
                "series mismatch: base {} order {} vs base {} order {}",
                self.base_point,
                self.order(),
                other.base_point,
                other.order()
            )));
        }
        Ok(())
    }

    pub fn arith(&self, other: &Series, op: ArithOp) -> Result<Series> {
        self.check_compatible(other)?;
        match op {
            ArithOp::Add => Ok(self.zip(other, |a, b| a + b)),
            ArithOp::Sub => Ok(self.zip(other, |a, b| a - b)),
            ArithOp::Mul => Ok(self.mul_unchecked(other)),
            ArithOp::Div => self.div_unchecked(other),
        }
    }

    fn zip(&self, other: &Series, f: impl Fn(f64, f64) -> f64) -> Series {
        let c = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Series::raw(self.base_point, c)
    }

    fn mul_unchecked(&self, other: &Series) -> Series {
        let n = self.coeffs.len();
        let mut c = vec![0.0; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs[..n - i].iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Series::raw(self.base_point, c)
    }

    fn div_unchecked(&self, other: &Series) -> Result<Series> {
        let b0 = other.coeffs[0];
        if b0 == 0.0 {
            return Err(Error::SingularSeries);
        }
        let n = self.coeffs.len();
        let mut q = vec![0.0; n];
        for k in 0..n {
            let s: f64 = (1..=k).map(|j| other.coeffs[j] * q[k - j]).sum();
            q[k] = (self.coeffs[k] - s) / b0;
        }
        Ok(Series::raw(self.base_point, q))
    }

    pub fn div(&self, other: &Series) -> Result<Series> {
        self.arith(other, ArithOp::Div)
    }

    pub fn derivative(&self) -> Series {
        let mut c: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &v)| j as f64 * v)
            .collect();
        c.push(0.0);
        Series::raw(self.base_point, c)
    }

    /// Antiderivative with constant term `c0`; the top coefficient is dropped
    /// to keep the order.
    pub fn integral(&self, c0: f64) -> Series {
        let n = self.coeffs.len();
        let mut c = vec![c0; n];
        for j in 1..n {
            c[j] = self.coeffs[j - 1] / j as f64;
        }
        Series::raw(self.base_point, c)
    }

    /// `outer(inner(x))`, requiring `inner(x0) = outer`'s base point.
    pub fn compose(outer: &Series, inner: &Series) -> Result<Series> {
        let c0 = inner.coeffs[0];
        let tol = 1e-12 * outer.base_point.abs().max(1.0);
        if (c0 - outer.base_point).abs() > tol {
            return Err(Error::Contract(format!(
                "composition center mismatch: inner(x0) = {c0}, outer base = {}",
                outer.base_point
            )));
        }
        let order = inner.order().min(outer.order());
        let inner = inner.truncate(order);
        let shifted = inner.with_constant(0.0);
        let mut acc = Series::constant(inner.base_point, 0.0, order);
        for &o in outer.coeffs[..=order].iter().rev() {
            acc = acc.mul_unchecked(&shifted);
            acc.coeffs[0] += o;
        }
        Ok(acc)
    }

    /// Taylor series of an elementary function about `center`.
    pub fn elementary(
        f: Elementary,
        center: f64,
        order: usize,
        alpha: Option<f64>,
    ) -> Result<Series> {
        let mut c = vec![0.0; order + 1];
        match f {
            Elementary::Sin | Elementary::Cos => {
                let (s, co) = center.sin_cos();
                // d^k/dx^k sin = sin(x + k pi/2)
                let cycle = if f == Elementary::Sin {
                    [s, co, -s, -co]
                } else {
                    [co, -s, -co, s]
                };
                let mut fact = 1.0;
                for (k, ck) in c.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *ck = cycle[k % 4] / fact;
                }
            }
            Elementary::Arctan => {
                let x = Series::variable(center, order);
                let one_plus_sq = (&x * &x) + 1.0;
                let d = Series::constant(center, 1.0, order).div_unchecked(&one_plus_sq)?;
                return Ok(d.integral(center.atan()));
            }
            Elementary::Ln1p => {
                if center <= -1.0 {
                    return Err(Error::Domain(format!(
                        "ln1p is singular at center {center}"
                    )));
                }
                let base = 1.0 + center;
                c[0] = center.ln_1p();
                let mut p = 1.0;
                for (k, ck) in c.iter_mut().enumerate().skip(1) {
                    p /= base;
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    *ck = sign * p / k as f64;
                }
            }
            Elementary::PowAlpha => {
                let alpha = alpha.ok_or_else(|| Error::Contract("pow_alpha needs alpha".into()))?;
                let base = 1.0 + center;
                if base <= 0.0 {
                    return Err(Error::Domain(format!(
                        "(1+x)^alpha is singular or complex at center {center}"
                    )));
                }
                // (1+c)^alpha (1 + t/(1+c))^alpha, binomial in t
                c[0] = base.powf(alpha);
                for k in 1..=order {
                    c[k] = c[k - 1] * (alpha - (k as f64 - 1.0)) / (k as f64 * base);
                }
            }
        }
        Ok(Series::raw(center, c))
    }

    /// `self^alpha` for a series with positive constant term.
    pub fn powf(&self, alpha: f64) -> Result<Series> {
        let a0 = self.coeffs[0];
        if a0 <= 0.0 {
            return Err(Error::Domain(format!(
                "real power of a series needs a positive constant term, got {a0}"
            )));
        }
        // Miller recurrence: k a0 p_k = sum_{j=1}^k ((alpha+1) j - k) a_j p_{k-j}
        let n = self.coeffs.len();
        let mut p = vec![0.0; n];
        p[0] = a0.powf(alpha);
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += ((alpha + 1.0) * j as f64 - k as f64) * self.coeffs[j] * p[k - j];
            }
            p[k] = s / (k as f64 * a0);
        }
        Ok(Series::raw(self.base_point, p))
    }

    /// Integer power by repeated multiplication (valid for any sign).
    pub fn powi(&self, k: u32) -> Series {
        let mut acc = Series::constant(self.base_point, 1.0, self.order());
        for _ in 0..k {
            acc = acc.mul_unchecked(self);
        }
        acc
    }

    /// `atan(self)`.
    pub fn atan(&self) -> Result<Series> {
        let one_plus_sq = self.mul_unchecked(self) + 1.0;
        let d = self.derivative().div_unchecked(&one_plus_sq)?;
        Ok(d.integral(self.coeffs[0].atan()))
    }

    /// `(sin(self), cos(self))`.
    pub fn sin_cos(&self) -> (Series, Series) {
        let order = self.order();
        let psi = self.with_constant(0.0);
        let s0 = Series::elementary(Elementary::Sin, 0.0, order, None).unwrap();
        let c0 = Series::elementary(Elementary::Cos, 0.0, order, None).unwrap();
        let sin_psi = Series::compose(&s0, &psi).unwrap();
        let cos_psi = Series::compose(&c0, &psi).unwrap();
        let (sa, ca) = self.coeffs[0].sin_cos();
        let sin = &(&sin_psi * ca) + &(&cos_psi * sa);
        let cos = &(&cos_psi * ca) - &(&sin_psi * sa);
        (sin, cos)
    }

    /// Formal inverse of `self` about its constant term: the series `w(xi)`
    /// about `xi0 = self(x0)` with `self(w(xi)) = xi` to the truncation order.
    ///
    /// Fixed-point substitution `d <- (t - h_{>=2}(d)) / g1`, each pass fixing one
    /// more coefficient.
    pub fn invert(&self, order: usize) -> Result<Series> {
        let g = self.truncate(order);
        let g1 = if order >= 1 { g.coeffs[1] } else { 0.0 };
        let scale = g
            .coeffs
            .iter()
            .map(|c| c.abs())
            .fold(0.0, f64::max)
            .max(1.0);
        if g1.abs() <= 1e-14 * scale {
            return Err(Error::CriticalPoint(format!(
                "derivative vanishes at w0 = {}; inverse is not analytic",
                self.base_point
            )));
        }
        let xi0 = g.coeffs[0];
        // nonlinear part about 0 in the increment
        let mut nonlin = g.coeffs.clone();
        nonlin[0] = 0.0;
        nonlin[1] = 0.0;
        let nonlin = Series::raw(0.0, nonlin);
        let mut d = Series::raw(xi0, vec![0.0; order + 1]);
        d.coeffs[1] = 1.0 / g1;
        for _ in 1..order {
            let h = Series::compose(&nonlin, &d)?;
            let mut next = h.scale(-1.0 / g1);
            next.coeffs[1] += 1.0 / g1;
            next.base_point = xi0;
            d = next;
        }
        d.coeffs[0] = self.base_point;
        Ok(d)
    }
}

impl Add<f64> for Series {
    type Output = Series;
    fn add(mut self, rhs: f64) -> Series {
        self.coeffs[0] += rhs;
        self
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        self.arith(rhs, ArithOp::Add).expect("incompatible series")
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        self.arith(rhs, ArithOp::Sub).expect("incompatible series")
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        self.arith(rhs, ArithOp::Mul).expect("incompatible series")
    }
}

impl Mul<f64> for &Series {
    type Output = Series;
    fn mul(self, rhs: f64) -> Series {
        self.scale(rhs)
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: &[f64]) -> Series {
        Series::new(0.0, c.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn product_and_quotient() {
        let p = &s(&[1.0, 1.0, 0.0]) * &s(&[1.0, -1.0, 0.0]);
        close(p.coeffs(), &[1.0, 0.0, -1.0], 0.0);
        let q = s(&[1.0, 0.0, 0.0, 0.0])
            .div(&s(&[1.0, -1.0, 0.0, 0.0]))
            .unwrap();
        close(q.coeffs(), &[1.0; 4], 0.0);
        assert_eq!(
            s(&[1.0, 2.0]).div(&s(&[0.0, 1.0])),
            Err(Error::SingularSeries)
        );
        assert!(s(&[1.0]).arith(&s(&[1.0, 2.0]), ArithOp::Add).is_err());
    }

    #[test]
    fn elementary_tables() {
        let at = Series::elementary(Elementary::Arctan, 0.0, 5, None).unwrap();
        close(at.coeffs(), &[0.0, 1.0, 0.0, -1.0 / 3.0, 0.0, 0.2], 1e-15);
        let c = Series::elementary(Elementary::Cos, 0.0, 4, None).unwrap();
        close(c.coeffs(), &[1.0, 0.0, -0.5, 0.0, 1.0 / 24.0], 1e-15);
        let p = Series::elementary(Elementary::PowAlpha, 0.0, 2, Some(1.0 / 3.0)).unwrap();
        close(p.coeffs(), &[1.0, 1.0 / 3.0, -1.0 / 9.0], 1e-15);
        let l = Series::elementary(Elementary::Ln1p, 0.0, 3, None).unwrap();
        close(l.coeffs(), &[0.0, 1.0, -0.5, 1.0 / 3.0], 1e-15);
        assert!(Series::elementary(Elementary::Ln1p, -1.0, 3, None).is_err());
    }

    #[test]
    fn elementary_off_center_matches_function() {
        for &(f, x0) in &[
            (Elementary::Arctan, 0.7),
            (Elementary::Sin, 1.1),
            (Elementary::Cos, -0.4),
            (Elementary::Ln1p, 0.5),
        ] {
            let ser = Series::elementary(f, x0, 20, None).unwrap();
            let x = x0 + 0.05;
            let exact = match f {
                Elementary::Arctan => x.atan(),
                Elementary::Sin => x.sin(),
                Elementary::Cos => x.cos(),
                Elementary::Ln1p => x.ln_1p(),
                Elementary::PowAlpha => unreachable!(),
            };
            assert!((ser.eval(x) - exact).abs() < 1e-14, "{f:?}");
        }
    }

    #[test]
    fn compose_substitution() {
        let at = Series::elementary(Elementary::Arctan, 0.0, 7, None).unwrap();
        let two_x = s(&[0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let c = Series::compose(&at, &two_x).unwrap();
        for (j, (&a, &b)) in c.coeffs().iter().zip(at.coeffs()).enumerate() {
            assert!((a - 2f64.powi(j as i32) * b).abs() < 1e-13);
        }
        let id = Series::variable(0.0, 7);
        assert_eq!(Series::compose(&id, &at).unwrap(), at);
        assert!(Series::compose(&Series::variable(1.0, 3), &s(&[0.0, 1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn powf_and_trig_of_series() {
        let x = Series::variable(0.3, 12);
        let q = ((&x * &x) + 1.0).powf(1.5).unwrap();
        let t = 0.32;
        assert!((q.eval(t) - (1.0 + t * t).powf(1.5)).abs() < 1e-14);
        let (sn, cs) = x.atan().unwrap().sin_cos();
        assert!((sn.eval(t) - t.atan().sin()).abs() < 1e-14);
        assert!((cs.eval(t) - t.atan().cos()).abs() < 1e-14);
    }

    #[test]
    fn invert_binomial_root() {
        // G(w) = w^3 - 1 at w0 = 1; inverse is (1 + xi)^(1/3)
        let order = 6;
        let w = Series::variable(1.0, order);
        let g = w.powi(3) + -1.0;
        let inv = g.invert(order).unwrap();
        let bin = Series::elementary(Elementary::PowAlpha, 0.0, order, Some(1.0 / 3.0)).unwrap();
        close(inv.coeffs(), bin.coeffs(), 1e-14);
        assert_eq!(inv.base_point(), 0.0);
    }

    #[test]
    fn invert_rejects_critical_point() {
        let w = Series::variable(0.0, 5);
        let g = w.powi(2);
        assert!(matches!(g.invert(5), Err(Error::CriticalPoint(_))));
    }
}
