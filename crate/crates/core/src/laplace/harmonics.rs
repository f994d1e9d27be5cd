//! Real spherical harmonics and sphere quadrature.
//!
//! The basis is orthonormal for the *normalized* surface measure, so
//! `Y_0 = 1` and a projection is a sphere average. Only `n = 3` carries an
//! explicit basis; other dimensions get the eigenvalue ladder and the
//! multiplicities.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Tensor rule on `S^2`: Gauss–Legendre in `cos(theta)`, uniform in `phi`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub points: Vec<[f64; 3]>,
    /// Sum to one.
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    /// `polar` Gauss nodes times `2 polar` azimuthal nodes; exact for
    /// polynomials of degree `2 polar - 1`.
    pub fn new(polar: usize) -> SphereQuadrature {
        let (z, wz) = gauss_legendre(polar);
        let naz = 2 * polar;
        let mut points = Vec::with_capacity(polar * naz);
        let mut weights = Vec::with_capacity(polar * naz);
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).max(0.0).sqrt();
            for j in 0..naz {
                let phi = 2.0 * PI * (j as f64 + 0.5) / naz as f64;
                points.push([s * phi.cos(), s * phi.sin(), *zi]);
                weights.push(0.5 * wi / naz as f64);
            }
        }
        SphereQuadrature { points, weights }
    }
}

#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    n: usize,
    k_max: usize,
    quad: Option<SphereQuadrature>,
    /// Basis values at the quadrature points, row-major.
    table: Vec<f64>,
}

/// Extra polar nodes beyond what the basis itself needs; projections of
/// non-polynomial data alias less with them.
pub const DEFAULT_OVERSAMPLE: usize = 12;

impl HarmonicBasis {
    pub fn new(n: usize, k_max: usize) -> Result<HarmonicBasis> {
        HarmonicBasis::with_polar_nodes(n, k_max, k_max + 1 + DEFAULT_OVERSAMPLE)
    }

    pub fn with_polar_nodes(n: usize, k_max: usize, polar: usize) -> Result<HarmonicBasis> {
        if n < 3 {
            return Err(Error::Domain(format!(
                "dimension n = {n} must be at least 3"
            )));
        }
        if n == 3 && polar < k_max + 1 {
            return Err(Error::Contract(format!(
                "{polar} polar nodes cannot integrate degree {} exactly",
                2 * k_max
            )));
        }
        let quad = (n == 3).then(|| SphereQuadrature::new(polar));
        let table = quad
            .as_ref()
            .map(|q| {
                q.points
                    .iter()
                    .flat_map(|p| eval_real_harmonics(k_max, p))
                    .collect()
            })
            .unwrap_or_default();
        Ok(HarmonicBasis {
            n,
            k_max,
            quad,
            table,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `Lambda_k = k (k + n - 2)`.
    pub fn lambda(&self, k: usize) -> f64 {
        (k * (k + self.n - 2)) as f64
    }

    /// Dimension of the degree-`k` harmonics on `S^{n-1}`.
    pub fn multiplicity(&self, k: usize) -> usize {
        let choose = |a: usize, b: usize| -> usize {
            if b > a {
                return 0;
            }
            (0..b).fold(1u128, |acc, i| acc * (a - i) as u128 / (i + 1) as u128) as usize
        };
        let n = self.n;
        if k < 2 {
            return if k == 0 { 1 } else { n };
        }
        choose(k + n - 1, n - 1) - choose(k + n - 3, n - 1)
    }

    fn full(&self) -> Result<&SphereQuadrature> {
        self.quad.as_ref().ok_or_else(|| {
            Error::Contract(format!(
                "explicit harmonics are only available for n = 3 (n = {})",
                self.n
            ))
        })
    }

    /// Number of basis functions up to `k_max` (`n = 3`).
    pub fn len(&self) -> usize {
        (self.k_max + 1) * (self.k_max + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of `(k, m)`, `-k <= m <= k`.
    pub fn index(k: usize, m: i64) -> usize {
        k * k + (m + k as i64) as usize
    }

    /// Inverse of [`HarmonicBasis::index`].
    pub fn degree_order(idx: usize) -> (usize, i64) {
        let k = (idx as f64).sqrt() as usize;
        let k = if (k + 1) * (k + 1) <= idx { k + 1 } else { k };
        (k, idx as i64 - (k * k) as i64 - k as i64)
    }

    pub fn quadrature(&self) -> Result<&SphereQuadrature> {
        self.full()
    }

    /// All basis values at a unit vector.
    pub fn eval_all(&self, dir: &[f64]) -> Vec<f64> {
        eval_real_harmonics(self.k_max, dir)
    }

    /// `Y_m^(k)` at a unit vector.
    pub fn eval(&self, k: usize, m: i64, dir: &[f64]) -> f64 {
        eval_real_harmonics(k, dir)[HarmonicBasis::index(k, m)]
    }

    /// Sphere averages `b_{k,m}(r) = mean(v(r theta) Y_m^(k)(theta))`.
    pub fn project<V: FnMut(&[f64]) -> f64>(&self, mut v: V, r: f64) -> Result<Vec<f64>> {
        let quad = self.full()?;
        let mut out = vec![0.0; self.len()];
        let mut x = [0.0; 3];
        for (j, (p, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
            for i in 0..3 {
                x[i] = r * p[i];
            }
            let val = v(&x) * w;
            for (o, y) in out.iter_mut().zip(self.table_row(j)) {
                *o += val * y;
            }
        }
        Ok(out)
    }

    /// Basis values at the `j`-th quadrature point.
    pub(crate) fn table_row(&self, j: usize) -> &[f64] {
        let m = self.len();
        &self.table[j * m..(j + 1) * m]
    }

    /// Gram matrix of the basis under the quadrature.
    pub fn gram(&self) -> Result<DMatrix<f64>> {
        let quad = self.full()?;
        let m = self.len();
        let mut g = DMatrix::zeros(m, m);
        for (p, w) in quad.points.iter().zip(&quad.weights) {
            let y = eval_real_harmonics(self.k_max, p);
            for i in 0..m {
                for j in 0..m {
                    g[(i, j)] += w * y[i] * y[j];
                }
            }
        }
        Ok(g)
    }
}

/// Real harmonics up to degree `k_max` at a unit vector in `R^3`, ordered by
/// [`HarmonicBasis::index`]. `m > 0` takes `cos(m phi)`, `m < 0` takes
/// `sin(|m| phi)`; no Condon–Shortley phase.
pub fn eval_real_harmonics(k_max: usize, dir: &[f64]) -> Vec<f64> {
    let z = dir[2].clamp(-1.0, 1.0);
    let rho = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    let (c, s) = if rho > 0.0 {
        (dir[0] / rho, dir[1] / rho)
    } else {
        (1.0, 0.0)
    };
    // cos(m phi), sin(m phi) by recurrence
    let mut cm = vec![1.0; k_max + 1];
    let mut sm = vec![0.0; k_max + 1];
    for m in 1..=k_max {
        cm[m] = cm[m - 1] * c - sm[m - 1] * s;
        sm[m] = sm[m - 1] * c + cm[m - 1] * s;
    }
    let mut out = vec![0.0; (k_max + 1) * (k_max + 1)];
    // normalized P_k^m: q(k, m) = sqrt((2k+1)(k-m)!/(k+m)!) P_k^m, built by
    // the stable recurrences in k at fixed m
    let mut qmm = 1.0;
    for m in 0..=k_max {
        if m > 0 {
            qmm *= rho * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        }
        let base = if m == 0 {
            1.0
        } else {
            std::f64::consts::SQRT_2
        };
        let mut q_prev = 0.0;
        let mut q = qmm;
        for k in m..=k_max {
            if k > m {
                let kf = k as f64;
                let mf = m as f64;
                let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
                let b = (((2.0 * kf + 1.0) * ((kf - 1.0).powi(2) - mf * mf))
                    / ((2.0 * kf - 3.0) * (kf * kf - mf * mf)))
                    .sqrt();
                let next = a * z * q - b * q_prev;
                q_prev = q;
                q = next;
            }
            let y = base * q;
            if m == 0 {
                out[HarmonicBasis::index(k, 0)] = y;
            } else {
                out[HarmonicBasis::index(k, m as i64)] = y * cm[m];
                out[HarmonicBasis::index(k, -(m as i64))] = y * sm[m];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_closed_forms() {
        let d = [0.36, 0.48, 0.8];
        let y = eval_real_harmonics(2, &d);
        assert!((y[0] - 1.0).abs() < 1e-15);
        let s3 = 3f64.sqrt();
        assert!((y[HarmonicBasis::index(1, 0)] - s3 * d[2]).abs() < 1e-14);
        assert!((y[HarmonicBasis::index(1, 1)] - s3 * d[0]).abs() < 1e-14);
        assert!((y[HarmonicBasis::index(1, -1)] - s3 * d[1]).abs() < 1e-14);
        let y20 = 5f64.sqrt() * 0.5 * (3.0 * d[2] * d[2] - 1.0);
        assert!((y[HarmonicBasis::index(2, 0)] - y20).abs() < 1e-14);
        let y22 = 15f64.sqrt() * 0.5 * (d[0] * d[0] - d[1] * d[1]);
        assert!((y[HarmonicBasis::index(2, 2)] - y22).abs() < 1e-14);
    }

    #[test]
    fn gram_is_identity() {
        let b = HarmonicBasis::with_polar_nodes(3, 8, 9).unwrap();
        let g = b.gram().unwrap();
        let dev = (g - DMatrix::identity(81, 81)).abs().max();
        assert!(dev < 1e-12, "{dev}");
    }

    #[test]
    fn multiplicities_and_ladder() {
        let b3 = HarmonicBasis::new(3, 4).unwrap();
        for k in 0..6 {
            assert_eq!(b3.multiplicity(k), 2 * k + 1);
        }
        let b4 = HarmonicBasis::new(4, 4).unwrap();
        assert_eq!(b4.multiplicity(2), 9);
        assert_eq!(b4.lambda(3), 15.0);
        assert!(b4.project(|_| 1.0, 1.0).is_err());
    }

    #[test]
    fn index_round_trip() {
        for idx in 0..100 {
            let (k, m) = HarmonicBasis::degree_order(idx);
            assert_eq!(HarmonicBasis::index(k, m), idx);
        }
    }

    #[test]
    fn projections() {
        let b = HarmonicBasis::new(3, 3).unwrap();
        let c = b.project(|x| b.eval(2, -1, &unit(x)), 1.7).unwrap();
        for (i, v) in c.iter().enumerate() {
            let want = if i == HarmonicBasis::index(2, -1) {
                1.0
            } else {
                0.0
            };
            assert!((v - want).abs() < 1e-12);
        }
        let c = b.project(|x| 1.0 / norm(x), 2.0).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-14);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-14));
    }

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
    fn unit(x: &[f64]) -> Vec<f64> {
        let r = norm(x);
        x.iter().map(|v| v / r).collect()
    }
}
