//! Algebraic first integrals `G(W(r)) = c r^{-n}` of the radial equation.
//!
//! Every case is written in a normalized variable `w` with
//! `u'(r) / r = alpha + beta * w`; the radial eigenvalue `u''` is
//! `alpha + beta * P(w)` where `P(W) = W + r W'` follows from the first
//! integral.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{Case, Operator};
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    /// `w^n - k`.
    Power,
    /// `k w^n - (w - 1)^n`, `0 < k < 1`.
    Ratio,
    /// `w^n - n w^{n-1}`.
    Inverse,
    /// `w^{n-1}`: the inverse-Hessian case with `C' = 0`.
    InverseDegenerate,
    /// `(w^2+1)^{(n-1)/2} (w cos phi - sin phi)`, `phi = pi/4 + Theta`.
    Phase,
    /// Same shape with `phi = Theta = C0 - (n-1) atan w`.
    SpecialLagrangian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstIntegral {
    op: Operator,
    form: Form,
    /// The constant entering `G`; see [`Form`].
    k: f64,
    alpha: f64,
    beta: f64,
    /// Small case with `C0 > 0`, solved through `u -> -u - a|x|^2`.
    reflected: bool,
}

impl FirstIntegral {
    pub fn new(op: &Operator) -> Result<FirstIntegral> {
        let cp = op.cprime();
        let (form, k, alpha, beta, reflected) = match op.case() {
            Case::MongeAmpere => (Form::Power, cp, 0.0, 1.0, false),
            Case::Small => {
                let a = op.a().unwrap();
                let b = op.b().unwrap();
                if op.c0() == 0.0 || (cp - 1.0).abs() < 1e-15 {
                    return Err(Error::NoSolution(
                        "C0 = 0 in the Small case: no exterior radial solution".into(),
                    ));
                }
                if cp < 1.0 {
                    (Form::Ratio, cp, -(a + b), 2.0 * b, false)
                } else {
                    (Form::Ratio, 1.0 / cp, b - a, -2.0 * b, true)
                }
            }
            Case::Inverse => {
                if cp == 0.0 {
                    (Form::InverseDegenerate, 0.0, -1.0, 1.0, false)
                } else {
                    // w = C' (u'/r + 1)
                    (Form::Inverse, 1.0, -1.0, 1.0 / cp, false)
                }
            }
            Case::Large => (Form::Phase, cp, -op.a().unwrap(), op.b().unwrap(), false),
            Case::SpecialLagrangian => (Form::SpecialLagrangian, cp, 0.0, 1.0, false),
        };
        Ok(FirstIntegral {
            op: *op,
            form,
            k,
            alpha,
            beta,
            reflected,
        })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }
    pub fn form(&self) -> Form {
        self.form
    }
    pub fn constant(&self) -> f64 {
        self.k
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn reflected(&self) -> bool {
        self.reflected
    }
    fn nf(&self) -> f64 {
        self.op.n() as f64
    }
    fn ni(&self) -> i32 {
        self.op.n() as i32
    }

    /// `u'/r` for a given `w`.
    pub fn y_of_w(&self, w: f64) -> f64 {
        self.alpha + self.beta * w
    }

    pub fn w_of_y(&self, y: f64) -> f64 {
        (y - self.alpha) / self.beta
    }

    /// Points where `G` or the eigenvalue map is singular.
    pub fn singularities(&self) -> Vec<f64> {
        match self.form {
            Form::Power => vec![0.0],
            Form::Ratio => vec![0.0, 1.0],
            Form::Inverse | Form::InverseDegenerate => vec![0.0],
            Form::Phase => vec![-1.0],
            Form::SpecialLagrangian => vec![],
        }
    }

    /// Phase angle on the given side of `w = -1` (Large case) or `Theta`
    /// (SPL case).
    pub fn phi_side(&self, w: f64, upper: bool) -> f64 {
        let n = self.nf();
        match self.form {
            Form::Phase => {
                if upper {
                    self.k + n * FRAC_PI_4 - (n - 1.0) * w.atan()
                } else {
                    self.k - (3.0 * n - 4.0) * FRAC_PI_4 - (n - 1.0) * w.atan()
                }
            }
            Form::SpecialLagrangian => self.k - (n - 1.0) * w.atan(),
            _ => f64::NAN,
        }
    }

    pub fn phi(&self, w: f64) -> f64 {
        self.phi_side(w, w >= -1.0)
    }

    pub fn g(&self, w: f64) -> f64 {
        self.g_side(w, w >= -1.0)
    }

    /// `G(w)`, using the given branch of the phase for the Large case.
    pub fn g_side(&self, w: f64, upper: bool) -> f64 {
        let n = self.ni();
        match self.form {
            Form::Power => w.powi(n) - self.k,
            Form::Ratio => self.k * w.powi(n) - (w - 1.0).powi(n),
            Form::Inverse => w.powi(n - 1) * (w - n as f64),
            Form::InverseDegenerate => w.powi(n - 1),
            Form::Phase | Form::SpecialLagrangian => {
                let phi = self.phi_side(w, upper);
                let q = (w * w + 1.0).powf(0.5 * (n as f64 - 1.0));
                q * (w * phi.cos() - phi.sin())
            }
        }
    }

    pub fn dg(&self, w: f64) -> f64 {
        self.dg_side(w, w >= -1.0)
    }

    pub fn dg_side(&self, w: f64, upper: bool) -> f64 {
        let n = self.ni();
        let nf = n as f64;
        match self.form {
            Form::Power => nf * w.powi(n - 1),
            Form::Ratio => nf * (self.k * w.powi(n - 1) - (w - 1.0).powi(n - 1)),
            Form::Inverse => nf * w.powi(n - 2) * (w - (nf - 1.0)),
            Form::InverseDegenerate => (nf - 1.0) * w.powi(n - 2),
            Form::Phase | Form::SpecialLagrangian => {
                let q = (w * w + 1.0).powf(0.5 * (nf - 1.0));
                nf * q * self.phi_side(w, upper).cos()
            }
        }
    }

    /// `P(w) = W + r W'` along a solution, written in closed form.
    pub fn p_of_w(&self, w: f64) -> f64 {
        self.p_side(w, w >= -1.0)
    }

    pub fn p_side(&self, w: f64, upper: bool) -> f64 {
        let n = self.ni();
        let nf = n as f64;
        match self.form {
            Form::Power => self.k / w.powi(n - 1),
            Form::Ratio => 1.0 / (1.0 - self.k * (w / (w - 1.0)).powi(n - 1)),
            Form::Inverse => w / (w - (nf - 1.0)),
            Form::InverseDegenerate => -w / (nf - 1.0),
            Form::Phase | Form::SpecialLagrangian => self.phi_side(w, upper).tan(),
        }
    }

    /// The two distinct radial Hessian eigenvalues `(u'', u'/r)` at `w`.
    pub fn eigenvalues_at(&self, w: f64, upper: bool) -> (f64, f64) {
        (
            self.alpha + self.beta * self.p_side(w, upper),
            self.y_of_w(w),
        )
    }

    /// Taylor series of `G` about `w0` (on the given side of `w = -1`).
    pub fn taylor(&self, w0: f64, upper: bool, order: usize) -> Result<Series> {
        let n = self.op.n() as u32;
        let w = Series::variable(w0, order);
        Ok(match self.form {
            Form::Power => w.powi(n) + -self.k,
            Form::Ratio => {
                let wm1 = w.clone() + -1.0;
                &w.powi(n).scale(self.k) - &wm1.powi(n)
            }
            Form::Inverse => {
                let wn = w.clone() + -(n as f64);
                &w.powi(n - 1) * &wn
            }
            Form::InverseDegenerate => w.powi(n - 1),
            Form::Phase | Form::SpecialLagrangian => {
                let nf = n as f64;
                let q = ((&w * &w) + 1.0).powf(0.5 * (nf - 1.0))?;
                let at = w.atan()?;
                let phi =
                    at.scale(-(nf - 1.0)) + (self.phi_side(w0, upper) + (nf - 1.0) * w0.atan());
                let (s, c) = phi.sin_cos();
                let inner = &(&w * &c) - &s;
                &q * &inner
            }
        })
    }

    /// Distance from `w0` to the nearest complex singularity of `G`; `inf` for
    /// polynomial forms.
    pub fn taylor_radius(&self, w0: f64) -> f64 {
        match self.form {
            Form::Phase | Form::SpecialLagrangian => (1.0 + w0 * w0).sqrt(),
            _ => f64::INFINITY,
        }
    }
}

/// `arctan((w-1)/(w+1))` written through `arctan w`, valid off `w = -1`.
pub fn shifted_arctan(w: f64) -> f64 {
    if w > -1.0 {
        w.atan() - FRAC_PI_4
    } else {
        w.atan() + 3.0 * FRAC_PI_4
    }
}

/// `Theta` of the Large case in its original form.
pub fn large_theta(cprime: f64, n: usize, w: f64) -> f64 {
    cprime - (n as f64 - 1.0) * ((w - 1.0) / (w + 1.0)).atan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5 * (1.0 + x.abs());
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    fn all_forms() -> Vec<FirstIntegral> {
        let ops = [
            Operator::new(0.0, 3, 0.2).unwrap(),
            Operator::new(0.4, 4, -0.7).unwrap(),
            Operator::new(0.4, 3, 0.7).unwrap(),
            Operator::new(FRAC_PI_4, 3, -1.3).unwrap(),
            Operator::new(FRAC_PI_4, 5, 0.0).unwrap(),
            Operator::new(FRAC_PI_3, 3, 0.8).unwrap(),
            Operator::new(FRAC_PI_2, 4, 0.5).unwrap(),
        ];
        ops.iter().map(|o| FirstIntegral::new(o).unwrap()).collect()
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for fi in all_forms() {
            for &w in &[-3.7, -0.6, 0.3, 1.7, 2.9, 6.0] {
                if fi.singularities().iter().any(|s| (w - s).abs() < 0.2) {
                    continue;
                }
                let d = fi.dg(w);
                let e = fd(|x| fi.g(x), w);
                assert!(
                    (d - e).abs() < 1e-8 * (1.0 + d.abs()),
                    "{:?} w={w}: {d} vs {e}",
                    fi.form()
                );
            }
        }
    }

    #[test]
    fn p_matches_generic_identity() {
        // P = W - n G / G'
        for fi in all_forms() {
            let n = fi.op().n() as f64;
            for &w in &[-3.7, 0.3, 2.9, 6.0] {
                if fi.singularities().iter().any(|s| (w - s).abs() < 0.2) {
                    continue;
                }
                let generic = w - n * fi.g(w) / fi.dg(w);
                let p = fi.p_of_w(w);
                if generic.is_finite() && generic.abs() < 1e8 {
                    assert!(
                        (p - generic).abs() < 1e-9 * (1.0 + p.abs()),
                        "{:?} {w}",
                        fi.form()
                    );
                }
            }
        }
    }

    #[test]
    fn taylor_reproduces_g() {
        for fi in all_forms() {
            let w0 = 1.6;
            let t = fi.taylor(w0, true, 24).unwrap();
            for &d in &[-0.3, 0.05, 0.2] {
                let e = fi.g(w0 + d);
                assert!(
                    (t.eval(w0 + d) - e).abs() < 1e-12 * (1.0 + e.abs()),
                    "{:?}",
                    fi.form()
                );
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let op = Operator::new(FRAC_PI_4, 3, -SQRT2).unwrap();
        let fi = FirstIntegral::new(&op).unwrap();
        assert_eq!(fi.g(2.0), -4.0);
        assert_eq!(fi.g(3.0), 0.0);
        let spl = FirstIntegral::new(&Operator::new(FRAC_PI_2, 3, 0.0).unwrap()).unwrap();
        assert_eq!(spl.g(0.0), 0.0);
    }

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn small_zero_phase_has_no_solution() {
        let op = Operator::new(0.4, 3, 0.0).unwrap();
        assert!(matches!(FirstIntegral::new(&op), Err(Error::NoSolution(_))));
    }

    #[test]
    fn large_phase_matches_original_theta() {
        let op = Operator::new(1.1, 4, 0.9).unwrap();
        let fi = FirstIntegral::new(&op).unwrap();
        for &w in &[-7.0, -1.3, -0.8, 0.0, 2.5, 40.0] {
            let phi = FRAC_PI_4 + large_theta(op.cprime(), 4, w);
            assert!((fi.phi(w) - phi).abs() < 1e-12, "w={w}");
        }
    }
}
