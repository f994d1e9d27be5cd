//! Independent checks: direct integration of the radial flow, signed tail
//! quadrature, finite-difference Hessians.
//!
//! The flow never touches the first integral. With `t = ln r` and
//! `y = u'/r`, the equation `f(u'') + (n-1) f(u'/r) = C0` gives
//!
//! ```text
//! dy/dt = f^{-1}(C0 - (n-1) f(y)) - y
//! ```
//!
//! which is integrated in the normalized variable `W = (y - alpha) / beta`
//! of the case, as an offset from the fixed point `f^{-1}(C0/n)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::quadrature::{gauss_legendre, tail_integral};
use crate::radial::FirstIntegral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Dormand–Prince 5(4), PI step control.
    Dopri5,
    /// The fifth-order Dormand–Prince stage set on a uniform grid in `ln r`.
    FixedRk5,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeTrace {
    pub r_grid: Vec<f64>,
    pub w_values: Vec<f64>,
    /// `W - w_ref`, carried separately so small offsets keep their digits.
    pub w_offsets: Vec<f64>,
    pub w_ref: f64,
    pub tolerance: f64,
    pub method: Method,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Right-hand side of the flow in the offset `d = W - w_ref`.
struct Flow {
    op: Operator,
    beta: f64,
    y_ref: f64,
    w_ref: f64,
    /// Gauss nodes on `[0, 1]` for the difference quotients.
    nodes: Vec<(f64, f64)>,
}

/// Offsets `|beta d|` below this (relative to `1 + |y_ref|`) take the
/// difference-quotient path.
const SMALL_OFFSET: f64 = 1e-6;

impl Flow {
    fn new(op: &Operator) -> Result<Flow> {
        let fi = FirstIntegral::new(op)?;
        let nf = op.n() as f64;
        let y_ref = op.term_inverse(op.c0() / nf)?;
        let (t, w) = gauss_legendre(8);
        Ok(Flow {
            op: *op,
            beta: fi.beta(),
            y_ref,
            w_ref: fi.w_of_y(y_ref),
            nodes: t
                .iter()
                .zip(&w)
                .map(|(t, w)| (0.5 * (t + 1.0), 0.5 * w))
                .collect(),
        })
    }

    fn rhs(&self, d: f64, t: f64) -> Result<f64> {
        let sing = |e: Error| Error::Singularity {
            radius: t.exp(),
            message: e.to_string(),
        };
        let nf = self.op.n() as f64;
        let dy = self.beta * d;
        let l1_off = if dy.abs() <= SMALL_OFFSET * (1.0 + self.y_ref.abs()) {
            // f(y) - f(y_ref) and the matching inverse difference as mean
            // derivatives, so the offset keeps its relative accuracy
            let mut df = 0.0;
            for &(s, w) in &self.nodes {
                df += w * self.op.term_derivative(self.y_ref + s * dy).map_err(sing)?;
            }
            let dv = -(nf - 1.0) * dy * df;
            let v_ref = self.op.c0() / nf;
            let mut di = 0.0;
            for &(s, w) in &self.nodes {
                let l = self.op.term_inverse(v_ref + s * dv).map_err(sing)?;
                di += w / self.op.term_derivative(l).map_err(sing)?;
            }
            dv * di
        } else {
            let f = self.op.term(self.y_ref + dy).map_err(sing)?;
            self.op
                .term_inverse(self.op.c0() - (nf - 1.0) * f)
                .map_err(sing)?
                - self.y_ref
        };
        let v = (l1_off - dy) / self.beta;
        if !v.is_finite() || v.abs() > 1e12 {
            return Err(Error::Singularity {
                radius: t.exp(),
                message: format!("flow speed {v:e} blew up"),
            });
        }
        Ok(v)
    }

    /// One Dormand–Prince step: fifth-order value, error estimate, and the
    /// last stage (FSAL).
    fn step(&self, t: f64, d: f64, h: f64, k1: f64) -> Result<(f64, f64, f64)> {
        let k2 = self.rhs(d + h * A21 * k1, t + C2 * h)?;
        let k3 = self.rhs(d + h * (A31 * k1 + A32 * k2), t + C3 * h)?;
        let k4 = self.rhs(d + h * (A41 * k1 + A42 * k2 + A43 * k3), t + C4 * h)?;
        let k5 = self.rhs(
            d + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
            t + C5 * h,
        )?;
        let k6 = self.rhs(
            d + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
            t + h,
        )?;
        let next = d + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = self.rhs(next, t + h)?;
        let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        Ok((next, err, k7))
    }
}

fn check_interval(r0: f64, r1: f64) -> Result<()> {
    if !(r0 >= 1.0 && r1 > r0 && r1.is_finite()) {
        return Err(Error::Contract(format!(
            "need 1 <= r0 < r1, got [{r0}, {r1}]"
        )));
    }
    Ok(())
}

/// Adaptive solution of `r W' = Phi(W)` from `W(r0) = w_init` to `r1`.
///
/// The step control is relative to the offset from the fixed point. Near the
/// fixed point the flow is linear in the offset, which keeps its sign, so no
/// absolute floor is needed beyond guarding against a zero offset.
pub fn integrate_flow(op: &Operator, w_init: f64, r0: f64, r1: f64, tol: f64) -> Result<OdeTrace> {
    check_interval(r0, r1)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Contract(format!(
            "tolerance {tol} must lie in (0, 1)"
        )));
    }
    let flow = Flow::new(op)?;
    let floor = 1e-280;
    let (t0, t1) = (r0.ln(), r1.ln());
    let mut t = t0;
    let mut d = w_init - flow.w_ref;
    let mut k1 = flow.rhs(d, t)?;
    let mut trace = OdeTrace {
        r_grid: vec![r0],
        w_values: vec![w_init],
        w_offsets: vec![d],
        w_ref: flow.w_ref,
        tolerance: tol,
        method: Method::Dopri5,
    };
    // sitting on the fixed point: nothing moves beyond rounding
    if d.abs() <= 1e-14 * (1.0 + flow.w_ref.abs()) && k1.abs() <= 1e-13 * (1.0 + flow.w_ref.abs()) {
        trace.r_grid.push(r1);
        trace.w_values.push(w_init);
        trace.w_offsets.push(d);
        return Ok(trace);
    }
    let mut h = {
        let scale = d.abs().max(floor) / k1.abs().max(1e-300);
        (0.01 * scale).min(0.1 * (t1 - t0)).max(1e-6 * (t1 - t0))
    };
    let mut err_prev: f64 = 1e-4;
    let mut rejects = 0usize;
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let (next, err, k7) = flow.step(t, d, h, k1)?;
        let sc = tol * d.abs().max(next.abs()) + floor;
        let e = (err.abs() / sc).max(1e-10);
        if e <= 1.0 {
            t = if t + h >= t1 { t1 } else { t + h };
            d = next;
            k1 = k7;
            trace.r_grid.push(t.exp());
            trace.w_offsets.push(d);
            trace.w_values.push(flow.w_ref + d);
            let fac = (0.9 * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0);
            err_prev = e;
            h *= fac;
            rejects = 0;
        } else {
            rejects += 1;
            h *= (0.9 * e.powf(-0.2)).max(0.1);
            if h < 1e-13 * t.abs().max(1.0) || rejects > 60 {
                return Err(Error::Singularity {
                    radius: t.exp(),
                    message: "step size underflow".into(),
                });
            }
        }
    }
    // the last push used exp(ln r1), pin the endpoint exactly
    *trace.r_grid.last_mut().unwrap() = r1;
    Ok(trace)
}

/// The same stage set on `steps` uniform steps in `ln r`; used for order
/// checks, where step halving should cut the error by about 32.
pub fn integrate_flow_fixed(
    op: &Operator,
    w_init: f64,
    r0: f64,
    r1: f64,
    steps: usize,
) -> Result<OdeTrace> {
    check_interval(r0, r1)?;
    if steps == 0 {
        return Err(Error::Contract("need at least one step".into()));
    }
    let flow = Flow::new(op)?;
    let (t0, t1) = (r0.ln(), r1.ln());
    let h = (t1 - t0) / steps as f64;
    let mut d = w_init - flow.w_ref;
    let mut k1 = flow.rhs(d, t0)?;
    let mut trace = OdeTrace {
        r_grid: vec![r0],
        w_values: vec![w_init],
        w_offsets: vec![d],
        w_ref: flow.w_ref,
        tolerance: h,
        method: Method::FixedRk5,
    };
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let (next, _, k7) = flow.step(t, d, h, k1)?;
        d = next;
        k1 = k7;
        trace
            .r_grid
            .push(if i + 1 == steps { r1 } else { (t + h).exp() });
        trace.w_offsets.push(d);
        trace.w_values.push(flow.w_ref + d);
    }
    Ok(trace)
}

/// Signed `int_{+inf}^r f(tau) dtau`, i.e. `-int_r^inf f`, for
/// `|f(tau)| <~ tau^decay_hint` with `decay_hint < -1`.
pub fn tail_quadrature<F: FnMut(f64) -> f64>(f: F, r: f64, decay_hint: f64) -> Result<f64> {
    Ok(-tail_integral(f, r, decay_hint, 1e-13)?)
}

/// Central-difference Hessian with step `h`; symmetric by construction.
pub fn hessian_fd<U: Fn(&[f64]) -> f64>(u: U, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut p = x.to_vec();
    let mut eval = |shifts: &[(usize, f64)]| {
        p.copy_from_slice(x);
        for &(i, s) in shifts {
            p[i] += s;
        }
        u(&p)
    };
    let center = eval(&[]);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let fp = eval(&[(i, h)]);
        let fm = eval(&[(i, -h)]);
        m[(i, i)] = (fp - 2.0 * center + fm) / (h * h);
        for j in 0..i {
            let v = (eval(&[(i, h), (j, h)]) - eval(&[(i, h), (j, -h)]) - eval(&[(i, -h), (j, h)])
                + eval(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// `F_tau(lambda(D^2 u(x))) - C0` with a finite-difference Hessian.
pub fn pde_residual<U: Fn(&[f64]) -> f64>(op: &Operator, u: U, x: &[f64], h: f64) -> Result<f64> {
    if x.len() != op.n() {
        return Err(Error::Contract(format!(
            "point has dimension {}, expected {}",
            x.len(),
            op.n()
        )));
    }
    let hess = hessian_fd(u, x, h);
    let lam = Operator::spectrum(&hess);
    Ok(op.evaluate(&lam)? - op.c0())
}
