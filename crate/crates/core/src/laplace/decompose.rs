//! Harmonic tails: `v = const + sum c_{k,m} r^{2-n-k} Y_m^(k) + O(r^{2-k1})`,
//! recovered from sphere projections at two radii.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector2};
use serde::Serialize;

use super::harmonics::HarmonicBasis;
use super::modes::laplacian_fd;
use crate::error::{Error, Result};
use crate::regression::{fit_loglog, logspace, LineFit};

#[derive(Debug, Clone, Serialize)]
pub struct TailCoefficient {
    pub k: usize,
    pub m: i64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicTail {
    pub n: usize,
    pub k_lo: usize,
    pub k_hi: usize,
    /// Decaying amplitudes `c_{k,m}` of `r^{2-n-k} Y_m^(k)`.
    pub coefficients: Vec<TailCoefficient>,
    /// Amplitudes of the growing partners `r^k Y_m^(k)`, `k >= 1`.
    pub growing: Vec<TailCoefficient>,
    /// The `k = 0` growing partner, i.e. an additive constant.
    pub constant: f64,
    pub radii: (f64, f64),
    /// Fit of `sup |v - const - tail|` on the remainder window, if the
    /// remainder stands above rounding.
    pub remainder: Option<LineFit>,
    pub remainder_max: f64,
    /// Power of `ln r` allowed in the remainder bound.
    pub remainder_log_power: f64,
    /// `2 - k1`.
    pub remainder_bound_slope: f64,
}

impl HarmonicTail {
    pub fn coefficient(&self, k: usize, m: i64) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|c| c.k == k && c.m == m)
            .map(|c| c.value)
    }

    pub fn max_growing(&self) -> f64 {
        self.growing.iter().fold(0.0, |a, c| a.max(c.value.abs()))
    }

    /// `const + sum c r^{2-n-k} Y` at `x` (`n = 3`).
    pub fn eval(&self, basis: &HarmonicBasis, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dir: Vec<f64> = x.iter().map(|v| v / r).collect();
        let y = basis.eval_all(&dir);
        let n = self.n as f64;
        self.constant
            + self
                .coefficients
                .iter()
                .map(|c| c.value * r.powf(2.0 - n - c.k as f64) * y[HarmonicBasis::index(c.k, c.m)])
                .sum::<f64>()
    }

    /// Sum of `|c_{k,m}|^2` per degree.
    pub fn degree_energy(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.k_hi + 1];
        for c in &self.coefficients {
            e[c.k] += c.value * c.value;
        }
        e
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TailOptions {
    /// Projection radii.
    pub radii: (f64, f64),
    /// Accept a constant (`k = 0` growing mode) instead of rejecting it.
    pub allow_constant: bool,
    pub growth_tol: f64,
    /// Relative tolerance of the sampled harmonicity check.
    pub harmonic_tol: f64,
    /// Radii for the remainder fit; `None` skips the fit.
    pub remainder_window: Option<(f64, f64)>,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            radii: (4.0, 8.0),
            allow_constant: false,
            growth_tol: 1e-8,
            harmonic_tol: 1e-6,
            remainder_window: Some((2.0, 20.0)),
        }
    }
}

/// Degrees `k3 - n ..= k1 - n - 1`, clamped at zero.
fn degree_range(n: usize, k3: i64, k1: i64) -> Result<(usize, usize)> {
    let lo = (k3 - n as i64).max(0) as usize;
    let hi = k1 - n as i64 - 1;
    if hi < lo as i64 {
        return Err(Error::Contract(format!(
            "empty degree range for k3 = {k3}, k1 = {k1}, n = {n}"
        )));
    }
    Ok((lo, hi as usize))
}

pub fn harmonic_tail_decompose<V: Fn(&[f64]) -> f64>(
    v: V,
    k3: i64,
    k1: i64,
    basis: &HarmonicBasis,
) -> Result<HarmonicTail> {
    harmonic_tail_decompose_with(v, k3, k1, basis, &TailOptions::default())
}

pub fn harmonic_tail_decompose_with<V: Fn(&[f64]) -> f64>(
    v: V,
    k3: i64,
    k1: i64,
    basis: &HarmonicBasis,
    opts: &TailOptions,
) -> Result<HarmonicTail> {
    let n = basis.n();
    if n != 3 {
        return Err(Error::Contract(
            "harmonic tails need the explicit n = 3 basis".into(),
        ));
    }
    let (k_lo, k_hi) = degree_range(n, k3, k1)?;
    if k_hi > basis.k_max() {
        return Err(Error::Contract(format!(
            "degree {k_hi} exceeds the basis K_max = {}",
            basis.k_max()
        )));
    }
    let (r1, r2) = opts.radii;
    if !(r1 > 1.0 && r2 > r1) {
        return Err(Error::Contract(format!(
            "projection radii ({r1}, {r2}) must satisfy 1 < r1 < r2"
        )));
    }
    check_harmonic(&v, r1, opts.harmonic_tol)?;
    let b1 = basis.project(&v, r1)?;
    let b2 = basis.project(&v, r2)?;
    let nf = n as f64;
    let mut coefficients = Vec::new();
    let mut growing = Vec::new();
    let mut constant = 0.0;
    for idx in 0..basis.len() {
        let (k, m) = HarmonicBasis::degree_order(idx);
        if k > k_hi {
            break;
        }
        let kf = k as f64;
        let mat = Matrix2::new(
            r1.powf(kf),
            r1.powf(2.0 - nf - kf),
            r2.powf(kf),
            r2.powf(2.0 - nf - kf),
        );
        let sol = mat
            .lu()
            .solve(&Vector2::new(b1[idx], b2[idx]))
            .ok_or_else(|| Error::Numerical("singular two-radius system".into()))?;
        let (grow, decay) = (sol[0], sol[1]);
        if k == 0 && opts.allow_constant {
            constant = grow;
        } else {
            if grow.abs() > opts.growth_tol {
                return Err(Error::NotDecaying {
                    degree: k,
                    amplitude: grow,
                });
            }
            growing.push(TailCoefficient { k, m, value: grow });
        }
        if k >= k_lo {
            coefficients.push(TailCoefficient { k, m, value: decay });
        }
    }
    let mut tail = HarmonicTail {
        n,
        k_lo,
        k_hi,
        coefficients,
        growing,
        constant,
        radii: (r1, r2),
        remainder: None,
        remainder_max: 0.0,
        remainder_log_power: 0.0,
        remainder_bound_slope: 2.0 - k1 as f64,
    };
    if let Some((a, b)) = opts.remainder_window {
        let (fit, max) = remainder_decay(&v, &tail, basis, a, b, 24)?;
        tail.remainder = fit;
        tail.remainder_max = max;
    }
    Ok(tail)
}

/// Sup of `|v - tail|` over the quadrature sphere at log-spaced radii and its
/// log-log fit; `None` when the remainder sits at rounding level.
pub fn remainder_decay<V: Fn(&[f64]) -> f64>(
    v: &V,
    tail: &HarmonicTail,
    basis: &HarmonicBasis,
    r_lo: f64,
    r_hi: f64,
    count: usize,
) -> Result<(Option<LineFit>, f64)> {
    let quad = basis.quadrature()?;
    let radii = logspace(r_lo, r_hi, count);
    let mut sup = Vec::with_capacity(count);
    let mut scale = 0.0f64;
    for &r in &radii {
        let mut s = 0.0f64;
        for p in &quad.points {
            let x = [r * p[0], r * p[1], r * p[2]];
            let vx = v(&x);
            scale = scale.max(vx.abs());
            s = s.max((vx - tail.eval(basis, &x)).abs());
        }
        sup.push(s);
    }
    let max = sup.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-13 * scale.max(1e-300);
    if sup.iter().any(|s| *s <= floor) {
        return Ok((None, max));
    }
    Ok((Some(fit_loglog(&radii, &sup)?), max))
}

fn check_harmonic<V: Fn(&[f64]) -> f64>(v: &V, r: f64, tol: f64) -> Result<()> {
    let probes = [
        [0.0, 0.0, 1.0],
        [0.6, 0.8, 0.0],
        [-0.48, 0.6, 0.64],
        [0.36, -0.48, -0.8],
    ];
    let points: Vec<[f64; 3]> = probes
        .iter()
        .map(|d| [r * d[0], r * d[1], r * d[2]])
        .collect();
    let scale = points.iter().map(|x| v(x).abs()).fold(0.0, f64::max) / (r * r);
    for x in &points {
        let lap = laplacian_fd(|p| Ok(v(p)), x, 2e-3 * r)?;
        if lap.abs() > tol * scale.max(1e-300) {
            return Err(Error::Contract(format!(
                "v is not harmonic near |x| = {r}: Laplacian {lap:e}"
            )));
        }
    }
    Ok(())
}

/// Principal square root of a symmetric positive definite matrix.
pub fn matrix_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::Domain("matrix is not square".into()));
    }
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * m.abs().max().max(1.0) {
        return Err(Error::Domain(format!(
            "matrix is not symmetric (asymmetry {asym:e})"
        )));
    }
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    if let Some(l) = eig.eigenvalues.iter().find(|l| **l <= 0.0) {
        return Err(Error::Domain(format!(
            "matrix is not positive definite (eigenvalue {l:e})"
        )));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let q = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    Ok((&q + q.transpose()) * 0.5)
}

/// Tail of `v` for a constant-coefficient operator `a_ij D_ij`: decomposes
/// `V(x) = v(Q x)`, `Q = a_inf^{1/2}`, so the coefficients are those of
/// `(x^T a_inf^{-1} x)^{(2-n-k)/2} Y(a_inf^{-1/2} x / |a_inf^{-1/2} x|)`.
pub fn affine_decompose<V: Fn(&[f64]) -> f64>(
    v: V,
    a_inf: &DMatrix<f64>,
    k3: i64,
    k1: i64,
    basis: &HarmonicBasis,
) -> Result<HarmonicTail> {
    affine_decompose_with(v, a_inf, k3, k1, basis, &TailOptions::default())
}

pub fn affine_decompose_with<V: Fn(&[f64]) -> f64>(
    v: V,
    a_inf: &DMatrix<f64>,
    k3: i64,
    k1: i64,
    basis: &HarmonicBasis,
    opts: &TailOptions,
) -> Result<HarmonicTail> {
    if a_inf.nrows() != basis.n() {
        return Err(Error::Contract(format!(
            "a_inf is {}x{}, expected n = {}",
            a_inf.nrows(),
            a_inf.ncols(),
            basis.n()
        )));
    }
    let q = matrix_sqrt(a_inf)?;
    let stretched = |y: &[f64]| {
        let x: Vec<f64> = (0..y.len())
            .map(|i| (0..y.len()).map(|j| q[(i, j)] * y[j]).sum())
            .collect();
        v(&x)
    };
    harmonic_tail_decompose_with(stretched, k3, k1, basis, opts)
}

/// Planted normal-form tail `sum c (x^T a^{-1} x)^{(2-n-k)/2} Y(a^{-1/2}x/...)`
/// (`n = 3`), used by plant-and-recover checks.
pub fn normal_form_tail(
    basis: &HarmonicBasis,
    a_inf: &DMatrix<f64>,
    coeffs: &[TailCoefficient],
) -> Result<impl Fn(&[f64]) -> f64> {
    let q_inv = matrix_sqrt(a_inf)?
        .try_inverse()
        .ok_or_else(|| Error::Domain("a_inf is singular".into()))?;
    let basis = basis.clone();
    let coeffs = coeffs.to_vec();
    Ok(move |x: &[f64]| {
        let y: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| q_inv[(i, j)] * x[j]).sum())
            .collect();
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dir: Vec<f64> = y.iter().map(|v| v / r).collect();
        let yv = basis.eval_all(&dir);
        coeffs
            .iter()
            .map(|c| c.value * r.powf(-1.0 - c.k as f64) * yv[HarmonicBasis::index(c.k, c.m)])
            .sum()
    })
}
