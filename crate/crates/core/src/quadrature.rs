//! Gauss-Kronrod and Gauss-Legendre quadrature.
//!
//! Besides plain adaptive integration, the adaptive driver can hand back the
//! partition it settled on. Re-using a frozen partition makes an integral a
//! smooth function of any parameter the integrand depends on, which matters
//! when the result is later finite-differenced.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 21-point Kronrod nodes and weights as tabulated
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_067_036,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// 21-point Kronrod estimate and |Kronrod - Gauss| on `[a, b]`.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = WGK[10] * fc;
    let mut rg = 0.0;
    for i in 0..10 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        rk += WGK[i] * s;
        if i % 2 == 1 {
            rg += WG[i / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Vector-valued variant: `f` writes `dim` values into its output slice.
pub fn gk21_vec<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, out: &mut [f64]) {
    let dim = out.len();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut buf = vec![0.0; dim];
    f(c, &mut buf);
    for (o, v) in out.iter_mut().zip(&buf) {
        *o += h * WGK[10] * v;
    }
    for i in 0..10 {
        let x = h * XGK[i];
        for &t in &[c - x, c + x] {
            f(t, &mut buf);
            for (o, v) in out.iter_mut().zip(&buf) {
                *o += h * WGK[i] * v;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// Panels sorted left to right.
    pub partition: Vec<(f64, f64)>,
}

/// Globally adaptive GK21 on a finite interval: the panel with the largest
/// error estimate is bisected until the total estimate meets
/// `max(abs_tol, rel_tol * |I|)` or `max_panels` is reached.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Contract(
            "adaptive quadrature needs finite limits".into(),
        ));
    }
    let (value, error) = gk21(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    while total_err > abs_tol.max(rel_tol * total.abs()) && heap.len() < max_panels {
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk21(&mut f, p.a, m);
        let (v2, e2) = gk21(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    // re-sum to shed accumulated cancellation in the running total
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(Error::Numerical(
            "quadrature produced a non-finite value".into(),
        ));
    }
    Ok(Estimate {
        value,
        error,
        partition: panels.iter().map(|p| (p.a, p.b)).collect(),
    })
}

/// Kronrod sum over a fixed partition.
pub fn on_partition<F: FnMut(f64) -> f64>(mut f: F, partition: &[(f64, f64)]) -> f64 {
    partition.iter().map(|&(a, b)| gk21(&mut f, a, b).0).sum()
}

/// `n` equal panels on `[a, b]`.
pub fn uniform_partition(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            (
                a + i as f64 * h,
                if i + 1 == n {
                    b
                } else {
                    a + (i + 1) as f64 * h
                },
            )
        })
        .collect()
}

/// Panels `[0, 2^-levels], ..., [1/4, 1/2], [1/2, 1]`, refined toward zero to
/// absorb algebraic endpoint behaviour.
pub fn graded_partition(levels: usize) -> Vec<(f64, f64)> {
    let mut p = vec![(0.0, 0.5f64.powi(levels as i32))];
    for k in (1..=levels).rev() {
        p.push((0.5f64.powi(k as i32), 0.5f64.powi(k as i32 - 1)));
    }
    p
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 0 {
                break;
            }
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `int_r^infinity f(tau) dtau` for `|f| <~ tau^decay`, `decay < -1`, via
/// `tau = r s^{-g}`, `g = 2 / (-decay - 1)`, which turns the leading power
/// into `s^1` on `(0, 1]`.
pub fn tail_integral<F: FnMut(f64) -> f64>(
    mut f: F,
    r: f64,
    decay: f64,
    abs_tol: f64,
) -> Result<f64> {
    if decay >= -1.0 || !decay.is_finite() {
        return Err(Error::Contract(format!(
            "decay exponent {decay} is not integrable at infinity"
        )));
    }
    if r <= 0.0 {
        return Err(Error::Contract("tail integral needs r > 0".into()));
    }
    let g = 2.0 / (-decay - 1.0);
    let integrand = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let tau = r * s.powf(-g);
        f(tau) * r * g * s.powf(-g - 1.0)
    };
    let est = adaptive(integrand, 0.0, 1.0, abs_tol, 1e-15, 4000)?;
    Ok(est.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            let sw: f64 = w.iter().sum();
            assert!((sw - 2.0).abs() < 1e-14, "n={n}");
            let deg = 2 * n - 1;
            let m: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * x.powi(deg as i32 - 1))
                .sum();
            // deg-1 is even
            let exact = 2.0 / deg as f64;
            assert!((m - exact).abs() < 1e-13, "n={n}: {m} vs {exact}");
        }
    }

    #[test]
    fn adaptive_resolves_peaks() {
        let est = adaptive(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-13, 1e-14, 2000).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((est.value - exact).abs() < 1e-9 * exact);
        let frozen = on_partition(|x: f64| 1.0 / (1e-4 + x * x), &est.partition);
        assert!((frozen - est.value).abs() < 1e-12 * exact);
    }

    #[test]
    fn tail_examples() {
        let v = tail_integral(|t: f64| t.powi(-3), 1.0, -3.0, 1e-14).unwrap();
        assert!((v - 0.5).abs() < 1e-13);
        let e = std::f64::consts::E;
        let v = tail_integral(|t: f64| t.ln() / (t * t), e, -1.9, 1e-14).unwrap();
        assert!((v - 2.0 / e).abs() < 1e-12);
        assert!(tail_integral(|t: f64| 1.0 / t, 1.0, -1.0, 1e-12).is_err());
    }

    #[test]
    fn graded_partition_covers_unit_interval() {
        let p = graded_partition(10);
        assert_eq!(p[0].0, 0.0);
        assert_eq!(p.last().unwrap().1, 1.0);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }
}
