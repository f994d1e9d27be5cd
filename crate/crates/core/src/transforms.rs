//! Legendre-transform reductions on radial profiles.
//!
//! For a radial `U(r)` with `Ubar = U + shift r^2 / 2`, the conjugate in the
//! radial variable `s = Ubar'(r)` is `v(s) = s r - Ubar(r)`, with `v'(s) = r`
//! and `v''(s) = 1 / Ubar''(r)`. The Hessian eigenvalues of the transformed
//! function are therefore `(1/Ubar'', r/s)`.

use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{Case, Operator};
use crate::radial::{branch_catalog, build_solution, FirstIntegral, RadialSolution};
use crate::regression::logspace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub r_grid: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub d2u: Vec<f64>,
}

impl RadialProfile {
    pub fn new(
        r_grid: Vec<f64>,
        u: Vec<f64>,
        du: Vec<f64>,
        d2u: Vec<f64>,
    ) -> Result<RadialProfile> {
        let n = r_grid.len();
        if n < 5 || u.len() != n || du.len() != n || d2u.len() != n {
            return Err(Error::Contract(
                "profile needs at least 5 points and equal lengths".into(),
            ));
        }
        if r_grid.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Contract(
                "profile grid must be strictly increasing".into(),
            ));
        }
        if u.iter().chain(&du).chain(&d2u).any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "profile contains non-finite values".into(),
            ));
        }
        Ok(RadialProfile { r_grid, u, du, d2u })
    }

    /// Samples a radial solution.
    pub fn from_solution(sol: &RadialSolution, radii: &[f64]) -> Result<RadialProfile> {
        let mut u = Vec::with_capacity(radii.len());
        let mut du = Vec::with_capacity(radii.len());
        let mut d2u = Vec::with_capacity(radii.len());
        for &r in radii {
            u.push(sol.u(r)?);
            du.push(sol.du(r)?);
            d2u.push(sol.d2u(r)?);
        }
        RadialProfile::new(radii.to_vec(), u, du, d2u)
    }

    pub fn from_fn<F: Fn(f64) -> (f64, f64, f64)>(radii: &[f64], f: F) -> Result<RadialProfile> {
        let vals: Vec<_> = radii.iter().map(|&r| f(r)).collect();
        RadialProfile::new(
            radii.to_vec(),
            vals.iter().map(|v| v.0).collect(),
            vals.iter().map(|v| v.1).collect(),
            vals.iter().map(|v| v.2).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.r_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_grid.is_empty()
    }

    /// Largest relative mismatch between `U(r_{i+1}) - U(r_i)` and the
    /// corrected trapezoid integral of `U'` (exact for cubics).
    pub fn consistency(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() - 1 {
            let h = self.r_grid[i + 1] - self.r_grid[i];
            let q = 0.5 * h * (self.du[i] + self.du[i + 1])
                + h * h / 12.0 * (self.d2u[i] - self.d2u[i + 1]);
            let d = self.u[i + 1] - self.u[i];
            let scale = d.abs().max(self.u[i].abs() * 1e-8).max(1e-300);
            worst = worst.max((q - d).abs() / scale);
        }
        worst
    }

    /// Cubic Hermite value at `r` inside the grid (bisection on the grid).
    pub fn interpolate(&self, r: f64) -> Result<f64> {
        let g = &self.r_grid;
        if r < g[0] || r > g[g.len() - 1] {
            return Err(Error::Domain(format!("r = {r} outside the profile grid")));
        }
        let i = match g.partition_point(|&x| x <= r) {
            0 => 0,
            k if k >= g.len() => g.len() - 2,
            k => k - 1,
        };
        let h = g[i + 1] - g[i];
        let t = (r - g[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        Ok(h00 * self.u[i] + h10 * h * self.du[i] + h01 * self.u[i + 1] + h11 * h * self.du[i + 1])
    }

    /// `U''` recomputed from the `U'` column by five-point finite differences
    /// on the (non-uniform) grid.
    pub fn numeric_second_derivative(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(2).min(n - 5);
                let xs = &self.r_grid[lo..lo + 5];
                let w = fornberg(self.r_grid[i], xs, 1);
                w.iter().zip(&self.du[lo..lo + 5]).map(|(w, f)| w * f).sum()
            })
            .collect()
    }
}

/// Finite-difference weights for the `m`-th derivative at `x0` on nodes `xs`.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Conjugate of the strictly convex `U + shift r^2 / 2`, as a profile in `s`.
pub fn legendre_radial(p: &RadialProfile, shift: f64) -> Result<RadialProfile> {
    for i in 0..p.len() {
        let r = p.r_grid[i];
        if !(p.d2u[i] + shift > 0.0 && p.du[i] / r + shift > 0.0) {
            return Err(Error::Convexity { radius: r });
        }
    }
    transform(p, shift)
}

/// Local variant for profiles whose shifted gradient map is only monotone:
/// `Ubar'' != 0` of one sign and `Ubar'/r > 0`. The result is sorted by `s`.
pub fn legendre_radial_local(p: &RadialProfile, shift: f64) -> Result<RadialProfile> {
    let sign = (p.d2u[0] + shift).signum();
    for i in 0..p.len() {
        let r = p.r_grid[i];
        let d2 = p.d2u[i] + shift;
        if d2 == 0.0 || d2.signum() != sign || p.du[i] / r + shift <= 0.0 {
            return Err(Error::Convexity { radius: r });
        }
    }
    transform(p, shift)
}

fn transform(p: &RadialProfile, shift: f64) -> Result<RadialProfile> {
    let mut rows: Vec<(f64, f64, f64, f64)> = (0..p.len())
        .map(|i| {
            let r = p.r_grid[i];
            let ubar = p.u[i] + 0.5 * shift * r * r;
            let s = p.du[i] + shift * r;
            (s, s * r - ubar, r, 1.0 / (p.d2u[i] + shift))
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    RadialProfile::new(
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
        rows.iter().map(|r| r.2).collect(),
        rows.iter().map(|r| r.3).collect(),
    )
}

/// `(lambda + a - b) / (lambda + a + b)`, in `(0, 1)` for `lambda > b - a`.
pub fn eigenvalue_map_small(lambda: f64, a: f64, b: f64) -> Result<f64> {
    if !(lambda > b - a) {
        return Err(Error::range(
            format!("lambda = {lambda} must exceed -a+b"),
            "-a+b".to_string(),
            b - a,
        ));
    }
    let v = 1.0 - 2.0 * b / (lambda + a + b);
    debug_assert!(v > 0.0 && v < 1.0 || !v.is_finite() || lambda.is_infinite());
    Ok(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub name: String,
    pub radii: Vec<f64>,
    /// Residual of the reduced equation, from finite differences of the
    /// transformed profile.
    pub residuals: Vec<f64>,
    pub residual_max: f64,
    /// The same residual with the exact transformed second derivative.
    pub algebraic_residual_max: f64,
    pub tolerance: f64,
    /// Eigenvalue range / Hessian bound assertions.
    pub range_ok: bool,
    pub range_margin: f64,
    pub bound_ok: bool,
    pub bound_margin: f64,
    pub flags: Vec<String>,
    pub pass: bool,
}

/// Tolerance of the reduction residuals.
pub const REDUCTION_TOL: f64 = 1e-6;
const GRID_POINTS: usize = 400;

fn default_grid(sol: &RadialSolution) -> Vec<f64> {
    let lo = sol.r_min().max(2.0);
    logspace(lo, 50.0 * lo, GRID_POINTS)
}

/// Case (ii): `u~ = |x~|^2/2 - 2b v` solves `sum ln lambda~ = ln C'`.
pub fn verify_ma_reduction(op: &Operator, sol: &RadialSolution) -> Result<ReductionReport> {
    verify_ma_reduction_on(op, sol, &default_grid(sol))
}

pub fn verify_ma_reduction_on(
    op: &Operator,
    sol: &RadialSolution,
    radii: &[f64],
) -> Result<ReductionReport> {
    if op.case() != Case::Small {
        return Err(Error::Contract(format!(
            "{} operator given, Small expected",
            op.case().name()
        )));
    }
    if sol.op() != op {
        return Err(Error::Contract(
            "solution belongs to a different operator".into(),
        ));
    }
    let (a, b) = (op.a().unwrap(), op.b().unwrap());
    let cp = op.cprime();
    let nf = op.n() as f64;
    let target = cp.ln();
    let prof = RadialProfile::from_solution(sol, radii)?;
    let conj = legendre_radial(&prof, a + b)?;
    let v2_num = conj.numeric_second_derivative();
    let mut residuals = Vec::new();
    let mut alg = 0.0f64;
    let mut range_margin = f64::INFINITY;
    let mut bound_margin = f64::INFINITY;
    let lower = 2.0 * b / (1.0 - cp) - a - b;
    for i in 0..conj.len() {
        let s = conj.r_grid[i];
        let r = conj.du[i];
        // angular: 1 - 2b v'(s)/s, radial: 1 - 2b v''(s)
        let ang = 1.0 - 2.0 * b * r / s;
        let rad = 1.0 - 2.0 * b * v2_num[i];
        let rad_exact = 1.0 - 2.0 * b * conj.d2u[i];
        let res = if rad > 0.0 && ang > 0.0 {
            rad.ln() + (nf - 1.0) * ang.ln() - target
        } else {
            f64::INFINITY
        };
        residuals.push(res);
        alg = alg.max((rad_exact.ln() + (nf - 1.0) * ang.ln() - target).abs());
        for l in [rad_exact, ang] {
            range_margin = range_margin.min(l - cp).min(1.0 - l);
        }
        let (l1, l2) = sol.eigenvalues(conj.du[i])?;
        bound_margin = bound_margin.min(l1.min(l2) - lower);
    }
    let mut flags = Vec::new();
    if cp >= 1.0 {
        flags.push("C' >= 1: condition (ii) cannot hold".into());
    }
    finish(
        "ma_reduction",
        conj.du.clone(),
        residuals,
        alg,
        range_margin >= -1e-12,
        range_margin,
        bound_margin > 0.0,
        bound_margin,
        flags,
        true,
    )
}

/// Case (iii): the conjugate of `U + r^2/2` has constant Laplacian `-C0/sqrt 2`.
pub fn verify_poisson_reduction(op: &Operator, sol: &RadialSolution) -> Result<ReductionReport> {
    verify_poisson_reduction_on(op, sol, &default_grid(sol))
}

pub fn verify_poisson_reduction_on(
    op: &Operator,
    sol: &RadialSolution,
    radii: &[f64],
) -> Result<ReductionReport> {
    if op.case() != Case::Inverse {
        return Err(Error::Contract(format!(
            "{} operator given, Inverse expected",
            op.case().name()
        )));
    }
    if sol.op() != op {
        return Err(Error::Contract(
            "solution belongs to a different operator".into(),
        ));
    }
    let nf = op.n() as f64;
    let target = -op.c0() / std::f64::consts::SQRT_2;
    let prof = RadialProfile::from_solution(sol, radii)?;
    let mut flags = Vec::new();
    let conj = match legendre_radial(&prof, 1.0) {
        Ok(c) => c,
        Err(Error::Convexity { radius }) => {
            flags.push(format!(
                "D^2u > -I fails at r = {radius}; local Legendre transform used"
            ));
            legendre_radial_local(&prof, 1.0)?
        }
        Err(e) => return Err(e),
    };
    if op.c0() >= 0.0 {
        flags.push("C0 >= 0: the Hessian bound is reported but not enforced".into());
    }
    let v2_num = conj.numeric_second_derivative();
    let mut residuals = Vec::new();
    let mut alg = 0.0f64;
    let mut bound_margin = f64::INFINITY;
    for i in 0..conj.len() {
        let ang = conj.du[i] / conj.r_grid[i];
        // relative to the size of the individual terms
        let scale = conj.d2u[i].abs() + (nf - 1.0) * ang.abs() + target.abs().max(1e-300);
        residuals.push((v2_num[i] + (nf - 1.0) * ang - target) / scale);
        alg = alg.max(((conj.d2u[i] + (nf - 1.0) * ang - target) / scale).abs());
        bound_margin = bound_margin.min(target - conj.d2u[i].max(ang));
    }
    let bound_ok = bound_margin >= -1e-12;
    let enforce = op.c0() < 0.0;
    finish(
        "poisson_reduction",
        conj.du.clone(),
        residuals,
        alg,
        true,
        0.0,
        bound_ok,
        bound_margin,
        flags,
        enforce,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    name: &str,
    radii: Vec<f64>,
    residuals: Vec<f64>,
    alg: f64,
    range_ok: bool,
    range_margin: f64,
    bound_ok: bool,
    bound_margin: f64,
    flags: Vec<String>,
    enforce_bound: bool,
) -> Result<ReductionReport> {
    let residual_max = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let pass = residual_max <= REDUCTION_TOL && range_ok && (bound_ok || !enforce_bound);
    Ok(ReductionReport {
        name: name.into(),
        radii,
        residuals,
        residual_max,
        algebraic_residual_max: alg,
        tolerance: REDUCTION_TOL,
        range_ok,
        range_margin,
        bound_ok,
        bound_margin,
        flags,
        pass,
    })
}

/// Substitution `v = u/b + (a/2b)|x|^2` taking a Large-case equation to the
/// special Lagrangian one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CaseIvShift {
    pub a: f64,
    pub b: f64,
    pub c0_spl: f64,
    /// `|C0_spl| > (n-2) pi / 2`.
    pub supercritical: bool,
}

impl CaseIvShift {
    /// `lambda(D^2 v) = (lambda(D^2 u) + a) / b`.
    pub fn map_eigenvalue(&self, lambda: f64) -> f64 {
        (lambda + self.a) / self.b
    }

    pub fn map_value(&self, u: f64, r: f64) -> f64 {
        u / self.b + self.a / (2.0 * self.b) * r * r
    }
}

/// `sum arctan lambda(D^2 v) = C' + n pi/4` with `C' = b C0 / sqrt(a^2+1)`.
pub fn reduce_case_iv(op: &Operator) -> Result<(Operator, CaseIvShift)> {
    if op.case() != Case::Large {
        return Err(Error::Contract(format!(
            "{} operator given, Large expected",
            op.case().name()
        )));
    }
    let (a, b) = (op.a().unwrap(), op.b().unwrap());
    let nf = op.n() as f64;
    let c0_spl = op.cprime() + nf * FRAC_PI_4;
    let spl = Operator::new(std::f64::consts::FRAC_PI_2, op.n(), c0_spl).map_err(|e| {
        Error::range(
            format!("reduced phase {c0_spl} leaves (-n pi/2, n pi/2): {e}"),
            "n*pi/2".to_string(),
            nf * std::f64::consts::FRAC_PI_2,
        )
    })?;
    Ok((
        spl,
        CaseIvShift {
            a,
            b,
            c0_spl,
            supercritical: c0_spl.abs() > (nf - 2.0) * std::f64::consts::FRAC_PI_2,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseIvReport {
    pub c0_spl: f64,
    pub supercritical: bool,
    /// Eigenvalues below `-a-b`; each shifts the phase by `-pi`.
    pub phase_shift: i64,
    /// `max |sum arctan lambda(D^2 v) - C0_spl + k pi|` on the radial spectrum.
    pub spectral_residual: f64,
    /// Largest gap between `v'/r` of the substituted solution and of the SPL
    /// solution built from the matched first-integral constant.
    pub composition_error: f64,
    pub c_spl: f64,
    pub pass: bool,
}

/// Checks the substitution on a radial Large-case solution, and rebuilds the
/// same profile from the reduced equation.
pub fn verify_case_iv(op: &Operator, sol: &RadialSolution, radii: &[f64]) -> Result<CaseIvReport> {
    let (spl, shift) = reduce_case_iv(op)?;
    if sol.op() != op {
        return Err(Error::Contract(
            "solution belongs to a different operator".into(),
        ));
    }
    let nf = op.n() as f64;
    let (a, b) = (shift.a, shift.b);
    let mut phase_shift = 0i64;
    let mut spectral = 0.0f64;
    for &r in radii {
        let (l1, l2) = sol.eigenvalues(r)?;
        let below = [l1, l2]
            .iter()
            .zip([1.0, nf - 1.0])
            .map(|(l, m)| if *l < -a - b { m } else { 0.0 })
            .sum::<f64>();
        phase_shift = below.round() as i64;
        let total = shift.map_eigenvalue(l1).atan() + (nf - 1.0) * shift.map_eigenvalue(l2).atan();
        spectral =
            spectral.max((total - shift.c0_spl + phase_shift as f64 * std::f64::consts::PI).abs());
    }
    // rebuild from the reduced equation when the phase is principal
    let mut composition_error = f64::NAN;
    let mut c_spl = f64::NAN;
    if phase_shift == 0 {
        let r0 = radii[0];
        let y0 = shift.map_eigenvalue(sol.slope_ratio(r0)?);
        let fi = FirstIntegral::new(&spl)?;
        let w0 = fi.w_of_y(y0);
        let cat = branch_catalog(&fi)?;
        let br = cat
            .iter()
            .find(|br| br.w_interval.contains(w0))
            .ok_or_else(|| Error::NoSolution("no SPL branch through the mapped slope".into()))?;
        c_spl = br.g(w0) * r0.powf(nf);
        let rebuilt = build_solution(br, &spl, c_spl, 0.0, r0.min(sol.r_min()).max(1.0))?;
        let mut worst = 0.0f64;
        for &r in radii {
            let mapped = shift.map_eigenvalue(sol.slope_ratio(r)?);
            worst = worst.max((rebuilt.slope_ratio(r)? - mapped).abs());
        }
        composition_error = worst;
    }
    let pass = spectral <= 1e-10 && (composition_error.is_nan() || composition_error <= 1e-7);
    Ok(CaseIvReport {
        c0_spl: shift.c0_spl,
        supercritical: shift.supercritical,
        phase_shift,
        spectral_residual: spectral,
        composition_error,
        c_spl,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::select_branch;

    fn grid() -> Vec<f64> {
        logspace(1.0, 30.0, 200)
    }

    #[test]
    fn quadratic_conjugate_and_involution() {
        let p = RadialProfile::from_fn(&grid(), |r| (r * r, 2.0 * r, 2.0)).unwrap();
        let q = legendre_radial(&p, 0.0).unwrap();
        for (s, v) in q.r_grid.iter().zip(&q.u) {
            assert!((v - s * s / 4.0).abs() < 1e-12 * s * s);
        }
        let back = legendre_radial(&q, 0.0).unwrap();
        for i in 0..p.len() {
            assert!((back.u[i] - p.u[i]).abs() < 1e-8 * p.u[i].abs());
            assert!((back.r_grid[i] - p.r_grid[i]).abs() < 1e-12 * p.r_grid[i]);
        }
        assert!(p.consistency() < 1e-12);
        assert!((p.interpolate(2.5).unwrap() - 6.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_convex() {
        let p = RadialProfile::from_fn(&grid(), |r| (-r * r, -2.0 * r, -2.0)).unwrap();
        assert!(matches!(
            legendre_radial(&p, 0.0),
            Err(Error::Convexity { .. })
        ));
    }

    #[test]
    fn small_eigenvalue_map() {
        assert!((eigenvalue_map_small(1.0, 1.0, 0.5).unwrap() - 0.6).abs() < 1e-15);
        assert!(eigenvalue_map_small(-0.5 + 1e-12, 1.0, 0.5).unwrap() < 1e-11);
        assert!(eigenvalue_map_small(1e12, 1.0, 0.5).unwrap() > 1.0 - 1e-11);
        assert!(matches!(
            eigenvalue_map_small(-0.6, 1.0, 0.5),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn fornberg_weights() {
        let xs = [0.0, 0.1, 0.25, 0.5, 0.8];
        let w = fornberg(0.25, &xs, 1);
        let d: f64 = w.iter().zip(&xs).map(|(w, x)| w * x.powi(4)).sum();
        assert!((d - 4.0 * 0.25f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn case_iv_arithmetic() {
        // a = 1/sqrt 3 means tau = pi/3
        let op = Operator::new(std::f64::consts::FRAC_PI_3, 3, 0.0).unwrap();
        let (spl, shift) = reduce_case_iv(&op).unwrap();
        assert!((shift.c0_spl - 3.0 * FRAC_PI_4).abs() < 1e-14);
        assert!(shift.supercritical);
        assert!((spl.c0() - 3.0 * FRAC_PI_4).abs() < 1e-14);
        assert!((shift.a - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((shift.b - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ma_reduction_on_radial_solution() {
        let op = Operator::new(0.4, 3, -0.6).unwrap();
        let br = select_branch(&op, None).unwrap();
        let sol = build_solution(&br, &op, 0.5, 0.0, 1.25).unwrap();
        let rep = verify_ma_reduction(&op, &sol).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.algebraic_residual_max < 1e-12);
    }

    #[test]
    fn poisson_reduction_on_radial_solution() {
        let op = Operator::new(FRAC_PI_4, 3, -1.0).unwrap();
        let br = select_branch(&op, None).unwrap();
        let sol = build_solution(&br, &op, 1.0, 0.0, 1.25).unwrap();
        let rep = verify_poisson_reduction(&op, &sol).unwrap();
        assert!(rep.pass, "{rep:?}");
        // C0 = 0 closed form: Laplacian of the conjugate vanishes
        let op0 = Operator::new(FRAC_PI_4, 3, 0.0).unwrap();
        let sol0 =
            build_solution(&select_branch(&op0, None).unwrap(), &op0, 1.0, 0.0, 1.25).unwrap();
        let rep0 = verify_poisson_reduction(&op0, &sol0).unwrap();
        assert!(
            rep0.residual_max < 1e-6 && rep0.algebraic_residual_max < 1e-8,
            "{rep0:?}"
        );
    }

    #[test]
    fn case_iv_on_radial_solution() {
        let op = Operator::new(1.1, 3, 0.4).unwrap();
        let sol = build_solution(&select_branch(&op, None).unwrap(), &op, 0.7, 0.0, 1.25).unwrap();
        let rep = verify_case_iv(&op, &sol, &logspace(1.5, 200.0, 30)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
