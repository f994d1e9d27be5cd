//! Monotone branches of the first integral and their inversion.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::first_integral::{FirstIntegral, Form};
use crate::error::{Error, Result};
use crate::regression::fit_loglog;
use crate::series::Series;

/// Order of the Taylor/inverse series kept with every analytic branch.
pub const SERIES_ORDER: usize = 24;

const TIE_TOL: f64 = 1e-10;

/// Open interval, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
    pub fn contains_closed(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotone {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub p: usize,
    pub w_interval: Interval,
    pub xi_interval: Interval,
    /// Names of the two `xi` endpoints, e.g. `("Xi_1", "Xi_2")`.
    pub xi_names: (String, String),
    pub w_at_zero: Option<f64>,
    pub analytic_at_zero: bool,
    pub monotone: Monotone,
    /// Branch singled out by the admissibility condition of the case.
    pub tagged: bool,
    /// Side of `w = -1` the branch lives on (only meaningful for the Large case).
    pub upper_side: bool,
    fi: FirstIntegral,
    /// Taylor series of `G` about `w_at_zero`, constant term forced to zero.
    taylor: Option<Series>,
    /// Inverse series `w(xi)` about `xi = 0` (analytic branches only).
    inverse: Option<Series>,
    /// Taylor-usable radius around `w_at_zero`.
    taylor_radius: f64,
    rho: f64,
}

impl Branch {
    #[allow(clippy::too_many_arguments)]
    fn new(
        fi: &FirstIntegral,
        p: usize,
        w_interval: Interval,
        xi_interval: Interval,
        xi_names: (&str, &str),
        w_at_zero: Option<f64>,
        monotone: Monotone,
        upper_side: bool,
        tagged: bool,
    ) -> Result<Branch> {
        let mut analytic = false;
        let mut taylor = None;
        let mut inverse = None;
        let mut taylor_radius = 0.0;
        if let Some(w0) = w_at_zero {
            let t = fi.taylor(w0, upper_side, SERIES_ORDER)?.with_constant(0.0);
            let d = t.coeffs()[1];
            let scale = t
                .coeffs()
                .iter()
                .take(4)
                .map(|c| c.abs())
                .fold(0.0, f64::max)
                .max(1e-300);
            analytic = d.abs() > 1e-12 * scale;
            taylor_radius = 0.25 * fi.taylor_radius(w0);
            if analytic {
                inverse = Some(t.invert(SERIES_ORDER)?);
            }
            taylor = Some(t);
        }
        let mut br = Branch {
            p,
            w_interval,
            xi_interval,
            xi_names: (xi_names.0.to_string(), xi_names.1.to_string()),
            w_at_zero,
            analytic_at_zero: analytic,
            monotone,
            tagged,
            upper_side,
            fi: *fi,
            taylor,
            inverse,
            taylor_radius,
            rho: 0.0,
        };
        br.rho = br.compute_radius();
        Ok(br)
    }

    pub fn first_integral(&self) -> &FirstIntegral {
        &self.fi
    }

    /// Inverse series `w(xi) = sum_j w_j xi^j` (analytic branches).
    pub fn inverse_series(&self) -> Option<&Series> {
        self.inverse.as_ref()
    }

    /// `G` on this branch's side.
    pub fn g(&self, w: f64) -> f64 {
        self.fi.g_side(w, self.upper_side)
    }

    pub fn dg(&self, w: f64) -> f64 {
        self.fi.dg_side(w, self.upper_side)
    }

    /// Radial eigenvalues `(u'', u'/r)` at `w`.
    pub fn eigenvalues_at(&self, w: f64) -> (f64, f64) {
        self.fi.eigenvalues_at(w, self.upper_side)
    }

    /// `G(w0 + d) - G(w0)` computed without cancellation for small `d`.
    pub fn g_offset(&self, d: f64) -> f64 {
        match (&self.taylor, self.w_at_zero) {
            (Some(t), Some(w0)) => {
                if d.abs() <= self.taylor_radius {
                    t.eval_offset(d)
                } else {
                    self.g(w0 + d)
                }
            }
            _ => self.g(d),
        }
    }

    fn dh(&self, d: f64) -> f64 {
        self.dg(self.w_at_zero.unwrap_or(0.0) + d)
    }

    /// Estimated convergence radius of the inverse series in `xi`: root test
    /// on the tail coefficients, capped by the finite branch endpoints.
    pub fn series_radius(&self) -> f64 {
        self.rho
    }

    fn compute_radius(&self) -> f64 {
        let Some(inv) = &self.inverse else { return 0.0 };
        let c = inv.coeffs();
        let mut rho = f64::INFINITY;
        for (k, &ck) in c.iter().enumerate().skip(8) {
            if ck != 0.0 {
                rho = rho.min(ck.abs().powf(-1.0 / k as f64));
            }
        }
        for end in [self.xi_interval.lo, self.xi_interval.hi] {
            if end.is_finite() && end != 0.0 {
                rho = rho.min(end.abs());
            }
        }
        rho
    }

    fn check_range(&self, xi: f64) -> Result<()> {
        if !xi.is_finite() {
            return Err(Error::Domain(format!("xi = {xi} is not finite")));
        }
        let zero_ok = xi == 0.0 && self.w_at_zero.is_some();
        if self.xi_interval.contains(xi) || zero_ok {
            return Ok(());
        }
        if xi <= self.xi_interval.lo {
            Err(Error::range(
                format!("xi = {xi} at or below the branch range (p = {})", self.p),
                self.xi_names.0.clone(),
                self.xi_interval.lo,
            ))
        } else {
            Err(Error::range(
                format!("xi = {xi} at or above the branch range (p = {})", self.p),
                self.xi_names.1.clone(),
                self.xi_interval.hi,
            ))
        }
    }

    /// The `w` on this branch with `G(w) = xi`.
    pub fn invert(&self, xi: f64) -> Result<f64> {
        Ok(self.invert_offset(xi)? + self.w_at_zero.unwrap_or(0.0))
    }

    /// `w(xi) - w_at_zero` to full relative precision.
    pub fn invert_offset(&self, xi: f64) -> Result<f64> {
        self.check_range(xi)?;
        let w0 = self.w_at_zero.unwrap_or(0.0);
        if xi == 0.0 {
            return Ok(0.0);
        }
        let lo = self.w_interval.lo - w0;
        let hi = self.w_interval.hi - w0;
        let sign = match self.monotone {
            Monotone::Increasing => 1.0,
            Monotone::Decreasing => -1.0,
        };
        // f is increasing in d
        let f = |d: f64| sign * (self.g_offset(d) - xi);
        let df = |d: f64| sign * self.dh(d);

        let guess = match &self.inverse {
            Some(inv) if xi.abs() < 0.5 * self.series_radius() => {
                let x = xi - inv.base_point();
                inv.coeffs()[1..]
                    .iter()
                    .rev()
                    .fold(0.0, |acc, &c| acc * x + c)
                    * x
            }
            _ => f64::NAN,
        };
        let tol_f = 1e-15 * xi.abs().max(1e-300);
        if guess.is_finite() && guess > lo && guess < hi {
            let mut d = guess;
            let mut fd = f(d);
            for _ in 0..6 {
                if fd.abs() <= tol_f {
                    return Ok(d);
                }
                let step = fd / df(d);
                let next = d - step;
                if !(next > lo && next < hi) || !step.is_finite() {
                    break;
                }
                let fn_ = f(next);
                if fn_.abs() >= fd.abs() {
                    if step.abs() <= 4.0 * f64::EPSILON * d.abs() {
                        return Ok(next);
                    }
                    break;
                }
                d = next;
                fd = fn_;
            }
        }
        self.bracketed(&f, &df, lo, hi, guess, xi)
    }

    fn bracketed(
        &self,
        f: &dyn Fn(f64) -> f64,
        df: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        guess: f64,
        xi: f64,
    ) -> Result<f64> {
        // f(lo) < 0 < f(hi) by monotonicity; find finite stand-ins
        let start = if guess.is_finite() && guess > lo && guess < hi {
            guess
        } else if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if lo.is_finite() {
            lo + 1.0
        } else if hi.is_finite() {
            hi - 1.0
        } else {
            0.0
        };
        let (mut a, mut b);
        if f(start) < 0.0 {
            a = start;
            let mut step = 1.0f64.max(start.abs());
            loop {
                let cand = if hi.is_finite() {
                    hi.min(a + step)
                } else {
                    a + step
                };
                if cand >= hi || f(cand) >= 0.0 {
                    b = cand;
                    break;
                }
                a = cand;
                step *= 2.0;
                if step > 1e300 {
                    return Err(Error::Numerical(format!("no bracket for xi = {xi}")));
                }
            }
        } else {
            b = start;
            let mut step = 1.0f64.max(start.abs());
            loop {
                let cand = if lo.is_finite() {
                    lo.max(b - step)
                } else {
                    b - step
                };
                if cand <= lo || f(cand) <= 0.0 {
                    a = cand;
                    break;
                }
                b = cand;
                step *= 2.0;
                if step > 1e300 {
                    return Err(Error::Numerical(format!("no bracket for xi = {xi}")));
                }
            }
        }
        // bisection to a coarse bracket, geometric when the bracket touches 0
        for _ in 0..2000 {
            let width = b - a;
            let scale = a.abs().max(b.abs());
            if width <= 1e-3 * scale.max(1e-300) {
                break;
            }
            let m = if a == 0.0 && b > 0.0 && b > 1e-200 {
                b * 1e-3
            } else if b == 0.0 && a < 0.0 && a < -1e-200 {
                a * 1e-3
            } else if a > 0.0 && b / a > 8.0 {
                (a * b).sqrt()
            } else if b < 0.0 && a / b > 8.0 {
                -(a * b).sqrt()
            } else {
                0.5 * (a + b)
            };
            if f(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        // safeguarded Newton
        let mut x = 0.5 * (a + b);
        let tol_f = 1e-15 * xi.abs().max(1e-300);
        for _ in 0..200 {
            let fx = f(x);
            if fx == 0.0 || fx.abs() <= tol_f {
                return Ok(x);
            }
            if fx < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let d = df(x);
            let mut next = x - fx / d;
            if !(next > a && next < b) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1e-300)
                || b - a <= 2.0 * f64::EPSILON * x.abs()
            {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}

fn tie(x: f64, y: f64) -> bool {
    (x - y).abs() <= TIE_TOL * (1.0 + y.abs())
}

/// Every branch the analysis names for this first integral.
pub fn branch_catalog(fi: &FirstIntegral) -> Result<Vec<Branch>> {
    let n = fi.op().n();
    let nf = n as f64;
    let k = fi.constant();
    let inc = Monotone::Increasing;
    let dec = Monotone::Decreasing;
    let inf = f64::INFINITY;
    let mut out = Vec::new();
    match fi.form() {
        Form::Power => {
            out.push(Branch::new(
                fi,
                1,
                Interval::new(0.0, inf),
                Interval::new(-k, inf),
                ("Xi_1", "Xi_2"),
                Some(k.powf(1.0 / nf)),
                inc,
                true,
                true,
            )?);
        }
        Form::Ratio => {
            let w_crit = 1.0 / (1.0 - k.powf(1.0 / (nf - 1.0)));
            let xi_top = k * w_crit.powi(n as i32 - 1);
            out.push(Branch::new(
                fi,
                1,
                Interval::new(w_crit, inf),
                Interval::new(-inf, xi_top),
                ("Xi_1", "Xi_2"),
                Some(1.0 / (1.0 - k.powf(1.0 / nf))),
                dec,
                true,
                true,
            )?);
        }
        Form::Inverse => {
            let crit = -(nf - 1.0).powi(n as i32 - 1);
            out.push(Branch::new(
                fi,
                1,
                Interval::new(nf - 1.0, inf),
                Interval::new(crit, inf),
                ("Xi_1", "Xi_2"),
                Some(nf),
                inc,
                true,
                true,
            )?);
            out.push(Branch::new(
                fi,
                2,
                Interval::new(0.0, nf - 1.0),
                Interval::new(crit, 0.0),
                ("Xi_1", "0"),
                Some(0.0),
                dec,
                true,
                false,
            )?);
            let (xi3, names3, mono3) = if n % 2 == 1 {
                (Interval::new(-inf, 0.0), ("Xi_1", "0"), inc)
            } else {
                (Interval::new(0.0, inf), ("0", "Xi_2"), dec)
            };
            out.push(Branch::new(
                fi,
                3,
                Interval::new(-inf, 0.0),
                xi3,
                names3,
                Some(0.0),
                mono3,
                true,
                false,
            )?);
        }
        Form::InverseDegenerate => {
            out.push(Branch::new(
                fi,
                1,
                Interval::new(0.0, inf),
                Interval::new(0.0, inf),
                ("0", "Xi_2"),
                Some(0.0),
                inc,
                true,
                true,
            )?);
            let (xi2, names2, mono2) = if n % 2 == 1 {
                (Interval::new(0.0, inf), ("0", "Xi_2"), dec)
            } else {
                (Interval::new(-inf, 0.0), ("Xi_1", "0"), inc)
            };
            out.push(Branch::new(
                fi,
                2,
                Interval::new(-inf, 0.0),
                xi2,
                names2,
                Some(0.0),
                mono2,
                true,
                false,
            )?);
        }
        Form::SpecialLagrangian => {
            let tlo = ((k - FRAC_PI_2) / (nf - 1.0)).max(-FRAC_PI_2);
            let thi = ((k + FRAC_PI_2) / (nf - 1.0)).min(FRAC_PI_2);
            let wlo = if tlo <= -FRAC_PI_2 { -inf } else { tlo.tan() };
            let whi = if thi >= FRAC_PI_2 { inf } else { thi.tan() };
            let xi1 = if wlo.is_finite() {
                -sec_pow(tlo, n)
            } else {
                -inf
            };
            let xi2 = if whi.is_finite() {
                sec_pow(thi, n)
            } else {
                inf
            };
            out.push(Branch::new(
                fi,
                1,
                Interval::new(wlo, whi),
                Interval::new(xi1, xi2),
                ("Xi_1", "Xi_2"),
                Some((k / nf).tan()),
                inc,
                true,
                true,
            )?);
        }
        Form::Phase => large_catalog(fi, &mut out)?,
    }
    Ok(out)
}

/// `|sec t|^{n-1}`.
fn sec_pow(t: f64, n: usize) -> f64 {
    (1.0 / t.cos()).abs().powi(n as i32 - 1)
}

/// `G` at a branch endpoint given by `theta = atan w` on the given side,
/// including the limits at `w = -1` and `w = +-inf`.
fn phase_endpoint(fi: &FirstIntegral, theta: f64, upper: bool, towards_plus: bool) -> f64 {
    let n = fi.op().n();
    if theta >= FRAC_PI_2 || theta <= -FRAC_PI_2 {
        return if towards_plus {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    let w = theta.tan();
    let phi = fi.phi_side(w, upper);
    if tie(phi, FRAC_PI_2) {
        return -sec_pow(theta, n);
    }
    if tie(theta, -FRAC_PI_4) {
        // w = -1: (w^2+1)^{(n-1)/2} (w cos phi - sin phi) = -2^{n/2} sin(phi + pi/4)
        return -(2f64).powf(n as f64 / 2.0) * (phi + FRAC_PI_4).sin();
    }
    fi.g_side(w, upper)
}

fn large_catalog(fi: &FirstIntegral, out: &mut Vec<Branch>) -> Result<()> {
    let n = fi.op().n();
    let nf = n as f64;
    let cp = fi.constant();
    let inf = f64::INFINITY;
    let q = FRAC_PI_4;

    // p = 1: the branch through the constant solution w = tan(pi/4 + C'/n)
    let theta0 = q + cp / nf;
    if !tie(cp, nf * q) {
        if theta0 < FRAC_PI_2 {
            // w > -1, phi in (-pi/4, pi/2), G increasing
            let tlo = ((cp + (nf - 2.0) * q) / (nf - 1.0)).max(-q);
            let thi = ((cp + (nf + 1.0) * q) / (nf - 1.0)).min(FRAC_PI_2);
            let wlo = if tlo <= -q { -1.0 } else { tlo.tan() };
            let whi = if thi >= FRAC_PI_2 { inf } else { thi.tan() };
            let xi1 = phase_endpoint(fi, tlo, true, false);
            let xi2 = phase_endpoint(fi, thi, true, true);
            out.push(Branch::new(
                fi,
                1,
                Interval::new(wlo, whi),
                Interval::new(xi1, xi2),
                ("Xi_1", "Xi_2"),
                Some(theta0.tan()),
                Monotone::Increasing,
                true,
                true,
            )?);
        } else {
            // w < -1, phi in (pi/2, 3pi/4), G decreasing
            let tlo = ((cp - (3.0 * nf - 1.0) * q) / (nf - 1.0)).max(-FRAC_PI_2);
            let thi = ((cp - (3.0 * nf - 2.0) * q) / (nf - 1.0)).min(-q);
            let wlo = if tlo <= -FRAC_PI_2 { -inf } else { tlo.tan() };
            let whi = if thi >= -q { -1.0 } else { thi.tan() };
            let xi_at_lo = phase_endpoint(fi, tlo, false, true);
            let xi_at_hi = phase_endpoint(fi, thi, false, false);
            out.push(Branch::new(
                fi,
                1,
                Interval::new(wlo, whi),
                Interval::new(xi_at_hi, xi_at_lo),
                ("Xi_1", "Xi_2"),
                Some(theta0.tan()),
                Monotone::Decreasing,
                false,
                true,
            )?);
        }
    }

    // p = 2: solutions tending to the singular value w = -1
    let crit = (nf - 2.0) * FRAC_PI_2;
    if tie(cp, -crit) {
        // w in (-1, w_end), phi in (pi/2, 3pi/4): decreasing from G(-1) = 0
        let thi = (cp + nf * q - FRAC_PI_2) / (nf - 1.0);
        let whi = thi.tan();
        out.push(Branch::new(
            fi,
            2,
            Interval::new(-1.0, whi),
            Interval::new(-sec_pow(thi, n), 0.0),
            ("Xi_3", "0"),
            Some(-1.0),
            Monotone::Decreasing,
            true,
            false,
        )?);
    } else if tie(cp, crit) {
        // w in (w_end, -1), phi in (-pi/4, pi/2): increasing up to G(-1) = 0
        let tlo = ((cp - (3.0 * nf - 4.0) * q - FRAC_PI_2) / (nf - 1.0)).max(-FRAC_PI_2);
        let (wlo, xi_lo) = if tlo <= -FRAC_PI_2 {
            (-inf, -inf)
        } else {
            (tlo.tan(), -sec_pow(tlo, n))
        };
        out.push(Branch::new(
            fi,
            2,
            Interval::new(wlo, -1.0),
            Interval::new(xi_lo, 0.0),
            ("Xi_4", "0"),
            Some(-1.0),
            Monotone::Increasing,
            false,
            false,
        )?);
    }
    Ok(())
}

/// Log-log slope of `|w(xi) - w(0)|` against `|xi|` for `|xi|` in
/// `[1e-8, 1e-4]`; analytic branches report exactly 1.
pub fn measure_branch_exponent(branch: &Branch) -> Result<f64> {
    if branch.analytic_at_zero {
        return Ok(1.0);
    }
    if branch.w_at_zero.is_none() {
        return Err(Error::Contract("branch has no limit at xi = 0".into()));
    }
    let sign = if branch.xi_interval.hi > 0.0 {
        1.0
    } else {
        -1.0
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..25 {
        let t = -8.0 + 4.0 * i as f64 / 24.0;
        let xi = sign * 10f64.powf(t);
        let d = branch.invert_offset(xi)?;
        xs.push(xi.abs());
        ys.push(d.abs());
    }
    Ok(fit_loglog(&xs, &ys)?.slope)
}
