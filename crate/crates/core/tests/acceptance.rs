// Acceptance suite: one PASS/FAIL line per criterion.
//
// Run with `cargo test -p ftau --test acceptance`. Tolerances are pinned below
// and never read from the environment.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use ftau::cli::{self, JobConfig, Perturbation};
use ftau::laplace::{
    affine_decompose, fast_decay_poisson, normal_form_tail, HarmonicBasis, TailCoefficient,
};
use ftau::oracle::pde_residual;
use ftau::radial::{
    branch_catalog, build_solution, expansion_coefficients, measure_branch_exponent,
    measure_remainder_slope, select_branch, Branch, FirstIntegral, DEFAULT_R_MIN,
};
use ftau::regression::logspace;
use ftau::transforms::{verify_case_iv, verify_ma_reduction, verify_poisson_reduction};
use ftau::{Case, Operator, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const TOL_CLOSED_FORM: f64 = 1e-10;
const TOL_COEFF: f64 = 1e-12;
const TOL_CONSERVATION: f64 = 1e-8;
const TOL_PDE: f64 = 1e-6;
const TOL_SLOPE: f64 = 0.1;
const TOL_EXPONENT: f64 = 0.02;
const TOL_ENDPOINT: f64 = 1e-10;
const TOL_POISSON_RESIDUAL: f64 = 1e-8;
const TOL_RECOVER: f64 = 1e-6;
const TOL_GROWING: f64 = 1e-8;
const RESIDUAL_POINTS: usize = 100;
const R_RANGE: (f64, f64) = (2.0, 1e3);

type Outcome = Result<(bool, String)>;

/// Two sample points per case: (tau, n, C0, c).
fn sample_jobs() -> Vec<JobConfig> {
    [
        (0.0, 3, 0.0, 1.0),
        (0.0, 4, 0.3, 2.0),
        (0.4, 3, -0.6, 0.5),
        (0.6, 4, -0.3, -15.0),
        (FRAC_PI_4, 3, -1.0, 1.0),
        (FRAC_PI_4, 4, -0.5, 2.0),
        (1.1, 3, 0.4, 0.7),
        (1.3, 4, -0.2, 1.5),
        (FRAC_PI_2, 3, 0.0, 1.0),
        (FRAC_PI_2, 4, 0.5, 0.8),
    ]
    .into_iter()
    .map(|(tau, n, big_c0, c)| {
        let mut job = JobConfig::new(tau, n, big_c0, c);
        job.r_range = R_RANGE;
        job
    })
    .collect()
}

fn label(job: &JobConfig) -> String {
    format!(
        "tau={:.4} n={} C0={} c={}",
        job.tau, job.n, job.big_c0, job.c
    )
}

// 1. Monge-Ampere closed form u'/r = (c r^{-3} + 1)^{1/3}.
fn ma_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    for c in [-0.5, 1.0, 10.0] {
        let op = Operator::new(0.0, 3, 0.0)?;
        let br = select_branch(&op, None)?;
        let sol = build_solution(&br, &op, c, 0.0, DEFAULT_R_MIN)?;
        for r in logspace(2.0, 1e4, 200) {
            let exact = (c * r.powi(-3) + 1.0).cbrt();
            worst = worst.max((sol.slope_ratio(r)? - exact).abs());
        }
    }
    Ok((
        worst <= TOL_CLOSED_FORM,
        format!("max |W - W_exact| = {worst:.3e} (tol {TOL_CLOSED_FORM:.0e})"),
    ))
}

/// `binom(alpha, j)` by the product formula.
fn binom(alpha: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (alpha - i as f64) / (i as f64 + 1.0))
}

// 2. Monge-Ampere tail coefficients c_{-j} = -binom(1/3, j) / (3j - 2).
fn ma_coefficients() -> Outcome {
    let op = Operator::new(0.0, 3, 0.0)?;
    let br = select_branch(&op, None)?;
    let exp = expansion_coefficients(&br, &op, 1.0, 6)?;
    let mut worst = 0.0f64;
    for (j, got) in exp.tail_coeffs.iter().enumerate() {
        let j = j + 1;
        let want = -binom(1.0 / 3.0, j) / (3.0 * j as f64 - 2.0);
        worst = worst.max((got - want).abs());
    }
    Ok((
        worst <= TOL_COEFF,
        format!("j <= 6, max error {worst:.3e} (tol {TOL_COEFF:.0e})"),
    ))
}

// 3. First integral conserved along the independent ODE flow.
fn ode_conservation() -> Outcome {
    let mut worst = (0.0f64, String::new());
    for job in sample_jobs() {
        let (_, sol) = job.build()?;
        let (defect, gap) = cli::ode_conservation(&sol, job.r_range)?;
        let v = defect.max(gap);
        if v >= worst.0 {
            worst = (v, label(&job));
        }
    }
    Ok((
        worst.0 <= TOL_CONSERVATION,
        format!(
            "10 points, worst {:.3e} at {} (tol {TOL_CONSERVATION:.0e})",
            worst.0, worst.1
        ),
    ))
}

// 4. Pointwise PDE residual in R^n.
fn pde_residuals() -> Outcome {
    let mut worst = (0.0f64, String::new());
    for job in sample_jobs() {
        let (op, sol) = job.build()?;
        let pts = cli::sample_points(job.n, job.r_range, RESIDUAL_POINTS, 7);
        let v = cli::max_pde_residual(&op, &sol, &pts)?;
        if v >= worst.0 {
            worst = (v, label(&job));
        }
    }
    Ok((
        worst.0 <= TOL_PDE,
        format!(
            "{RESIDUAL_POINTS} points x 10 solutions, worst {:.3e} at {} (tol {TOL_PDE:.0e})",
            worst.0, worst.1
        ),
    ))
}

// 5. Remainder slopes of the truncated expansions.
fn remainder_slopes() -> Outcome {
    let mut cases: Vec<(String, Operator, Branch, f64)> = Vec::new();
    for job in sample_jobs() {
        let op = job.operator()?;
        let br = select_branch(&op, None)?;
        cases.push((label(&job), op, br, job.c));
    }
    // Large p = 2 at C' = -(n-2) pi/2; xi < 0 on this branch
    let tau: f64 = 1.1;
    let (a, b) = (1.0 / tau.tan(), (1.0 - 1.0 / tau.tan().powi(2)).sqrt());
    let op = Operator::new(tau, 3, -FRAC_PI_2 * (a * a + 1.0).sqrt() / b)?;
    let br = select_branch(&op, Some(2))?;
    cases.push(("Large p=2 C'=-pi/2".into(), op, br, -0.5));

    let mut worst = (0.0f64, String::new());
    let mut generic = Vec::new();
    for (name, op, br, c) in cases {
        if !br.analytic_at_zero {
            continue;
        }
        let sol = build_solution(&br, &op, c, 0.0, DEFAULT_R_MIN)?;
        let n = op.n() as f64;
        for j in 1..=3 {
            let exp = expansion_coefficients(&br, &op, c, j)?;
            let fit = measure_remainder_slope(&sol, &exp)
                .map_err(|e| ftau::Error::Numerical(format!("{name} J={j}: {e}")))?;
            let err = (fit.slope - fit.expected).abs();
            if err >= worst.0 {
                worst = (
                    err,
                    format!("{name} J={j} slope {:.4} vs {}", fit.slope, fit.expected),
                );
            }
            let nominal = 2.0 - n * (j as f64 + 1.0);
            if fit.expected != nominal {
                generic.push(format!(
                    "{name} J={j}: {} (2-n(J+1) = {nominal})",
                    fit.expected
                ));
            }
        }
    }
    let mut detail = format!(
        "worst |slope - expected| = {:.4} ({}) (tol {TOL_SLOPE})",
        worst.0, worst.1
    );
    if !generic.is_empty() {
        detail.push_str(&format!(
            "; vanishing-coefficient shifts: {}",
            generic.join(", ")
        ));
    }
    Ok((worst.0 <= TOL_SLOPE, detail))
}

// 6. Non-analytic Inverse branches behave like xi^{1/(n-1)}.
fn branch_exponents() -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut count = 0;
    for n in [3usize, 4] {
        let op = Operator::new(FRAC_PI_4, n, -1.0)?;
        let cat = branch_catalog(&FirstIntegral::new(&op)?)?;
        for p in [2usize, 3] {
            let br = cat
                .iter()
                .find(|b| b.p == p)
                .ok_or_else(|| ftau::Error::NoSolution(format!("no p = {p} branch")))?;
            let e = measure_branch_exponent(br)?;
            let err = (e - 1.0 / (n as f64 - 1.0)).abs();
            count += 1;
            if err >= worst.0 {
                worst = (err, format!("n={n} p={p} exponent {e:.4}"));
            }
        }
    }
    Ok((
        worst.0 <= TOL_EXPONENT && count == 4,
        format!(
            "4 branches, worst error {:.4} ({}) (tol {TOL_EXPONENT})",
            worst.0, worst.1
        ),
    ))
}

fn sec_pow(t: f64, n: usize) -> f64 {
    (1.0 / t.cos()).abs().powi(n as i32 - 1)
}

fn large_op(cprime: f64, n: usize) -> Result<Operator> {
    let tau: f64 = 1.1;
    let a = 1.0 / tau.tan();
    let b = (1.0 - a * a).sqrt();
    Operator::new(tau, n, cprime * (a * a + 1.0).sqrt() / b)
}

/// Tabulated endpoint values for a Large p = 1 sample, by regime:
/// `(Xi_1, Xi_2)` with `None` meaning infinite.
fn large_table(cp: f64, n: usize) -> (Option<f64>, Option<f64>) {
    let nf = n as f64;
    let s = 2f64.powf(nf / 2.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    if cp < nf * FRAC_PI_4 {
        let xi1 = if cp <= -(2.0 * nf - 3.0) * FRAC_PI_4 {
            -s * (nf * FRAC_PI_2 + cp).sin()
        } else {
            -sec_pow((nf - 2.0) * PI / (4.0 * (nf - 1.0)) + cp / (nf - 1.0), n)
        };
        let xi2 = if cp < (nf - 3.0) * FRAC_PI_4 {
            let t = (nf + 1.0) * PI / (4.0 * (nf - 1.0)) + cp / (nf - 1.0);
            Some(h * sec_pow(t, n) * (t.tan() + 1.0))
        } else {
            None
        };
        (Some(xi1), xi2)
    } else {
        let xi1 = if cp < (2.0 * nf - 1.0) * FRAC_PI_4 {
            -sec_pow(
                -(3.0 * nf - 2.0) * PI / (4.0 * (nf - 1.0)) + cp / (nf - 1.0),
                n,
            )
        } else {
            -s * (cp - (nf - 2.0) * FRAC_PI_2).sin()
        };
        let xi2 = if cp > (nf + 1.0) * FRAC_PI_4 {
            let t = -(3.0 * nf - 1.0) * PI / (4.0 * (nf - 1.0)) + cp / (nf - 1.0);
            Some(-h * sec_pow(t, n) * (t.tan() + 1.0))
        } else {
            None
        };
        (Some(xi1), xi2)
    }
}

fn endpoint_error(got: f64, want: Option<f64>) -> f64 {
    match want {
        Some(w) if got.is_finite() => (got - w).abs() / w.abs().max(1.0),
        None if got.is_infinite() => 0.0,
        _ => f64::INFINITY,
    }
}

/// Also evaluates `G` directly at a finite, non-singular `w` endpoint.
fn g_error(br: &Branch, w: f64, want: Option<f64>) -> f64 {
    match want {
        Some(x) if w.is_finite() && (w + 1.0).abs() > 1e-9 => {
            (br.first_integral().g_side(w, br.upper_side) - x).abs() / x.abs().max(1.0)
        }
        _ => 0.0,
    }
}

// 7. Branch endpoints against the tabulated closed forms.
fn branch_endpoints() -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut samples = 0;
    let mut record = |err: f64, what: String| {
        if err >= worst.0 {
            worst = (err, what);
        }
    };

    let large = [
        (3, -1.3 * PI),
        (3, -0.3 * PI),
        (3, 0.5 * PI),
        (3, 0.9 * PI),
        (3, 1.1 * PI),
        (3, 1.4 * PI),
        (4, -1.7 * PI),
    ];
    for (n, cp) in large {
        let op = large_op(cp, n)?;
        let cat = branch_catalog(&FirstIntegral::new(&op)?)?;
        let br = cat.iter().find(|b| b.p == 1).expect("Large p = 1 branch");
        let (xi1, xi2) = large_table(cp, n);
        let (w_at_xi1, w_at_xi2) = if br.upper_side {
            (br.w_interval.lo, br.w_interval.hi)
        } else {
            (br.w_interval.hi, br.w_interval.lo)
        };
        let e = endpoint_error(br.xi_interval.lo, xi1)
            .max(endpoint_error(br.xi_interval.hi, xi2))
            .max(g_error(br, w_at_xi1, xi1))
            .max(g_error(br, w_at_xi2, xi2));
        record(e, format!("Large n={n} C'={:.2}pi", cp / PI));
        samples += 1;
    }

    // p = 2 branches: Xi_3 at C' = -(n-2)pi/2, Xi_4 at C' = (n-2)pi/2
    for (n, sign) in [(3usize, -1.0), (5usize, 1.0)] {
        let nf = n as f64;
        let cp = sign * (nf - 2.0) * FRAC_PI_2;
        let op = large_op(cp, n)?;
        let cat = branch_catalog(&FirstIntegral::new(&op)?)?;
        let br = cat.iter().find(|b| b.p == 2).expect("Large p = 2 branch");
        let (want, w_end) = if sign < 0.0 {
            (
                -sec_pow((nf - 2.0) * PI / (4.0 * (nf - 1.0)), n),
                br.w_interval.hi,
            )
        } else {
            (
                -sec_pow((nf + 2.0) * PI / (4.0 * (nf - 1.0)), n),
                br.w_interval.lo,
            )
        };
        let e = endpoint_error(br.xi_interval.lo, Some(want)).max(g_error(br, w_end, Some(want)));
        record(e, format!("Large p=2 n={n} ({})", br.xi_names.0));
        samples += 1;
    }

    for (n, c0) in [(3usize, 0.0), (3, -0.8 * PI), (4, 1.2 * PI)] {
        let nf = n as f64;
        let op = Operator::new(FRAC_PI_2, n, c0)?;
        let cat = branch_catalog(&FirstIntegral::new(&op)?)?;
        let br = &cat[0];
        let t1 = (c0 - FRAC_PI_2) / (nf - 1.0);
        let t2 = (c0 + FRAC_PI_2) / (nf - 1.0);
        let xi1 = (t1 > -FRAC_PI_2).then(|| -sec_pow(t1, n));
        let xi2 = (t2 < FRAC_PI_2).then(|| sec_pow(t2, n));
        let e = endpoint_error(br.xi_interval.lo, xi1)
            .max(endpoint_error(br.xi_interval.hi, xi2))
            .max(g_error(br, br.w_interval.lo, xi1))
            .max(g_error(br, br.w_interval.hi, xi2));
        record(e, format!("SPL n={n} C0={:.2}pi", c0 / PI));
        samples += 1;
    }
    Ok((
        worst.0 <= TOL_ENDPOINT && samples == 12,
        format!(
            "{samples} samples, worst relative error {:.3e} ({}) (tol {TOL_ENDPOINT:.0e})",
            worst.0, worst.1
        ),
    ))
}

// 8. Fast-decay Poisson solutions.
fn fast_decay() -> Outcome {
    let basis = HarmonicBasis::new(3, 2)?;
    let mut worst_res = 0.0f64;
    let mut notes = Vec::new();
    let mut ok = true;
    for k1 in [5.0f64, 6.0] {
        for k in 0..=2usize {
            // zonal harmonics with mean-square one, written out
            let g = move |x: &[f64]| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                let r = r2.sqrt();
                let z = x[2] / r;
                let y = match k {
                    0 => 1.0,
                    1 => 3f64.sqrt() * z,
                    _ => 5f64.sqrt() * (1.5 * z * z - 0.5),
                };
                r.powf(-k1) * y
            };
            let sol = fast_decay_poisson(g, k1, 0.0, &basis)?;
            let probes: Vec<Vec<f64>> = [3.0, 10.0, 50.0]
                .iter()
                .flat_map(|r| {
                    [[0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [-0.48, 0.6, -0.64]]
                        .map(|d| d.iter().map(|v| r * v).collect())
                })
                .collect();
            let res = probes
                .par_iter()
                .map(|x| sol.laplacian_residual(x))
                .collect::<Result<Vec<f64>>>()?;
            worst_res = res.into_iter().fold(worst_res, f64::max);
            let rep = sol.measure_decay(1e2, 1e4, 40)?;
            let log_expected = k1 - 3.0 >= 0.0 && (k1 - 3.0).fract() == 0.0;
            if !rep.passes() || rep.log_allowed != log_expected {
                ok = false;
                notes.push(format!(
                    "k1={k1} k={k}: slope {:.3} vs {}",
                    rep.pure.slope, rep.expected
                ));
            } else if rep.needs_log() {
                notes.push(format!("k1={k1} k={k} needs ln r"));
            }
        }
    }
    let mut detail =
        format!("6 sources, max |Delta v - g| = {worst_res:.3e} (tol {TOL_POISSON_RESIDUAL:.0e})");
    if !notes.is_empty() {
        detail.push_str(&format!("; {}", notes.join(", ")));
    }
    Ok((ok && worst_res <= TOL_POISSON_RESIDUAL, detail))
}

fn random_spd(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(3, 3)
}

// 9. Plant-and-recover for the affine tail decomposition.
fn plant_and_recover() -> Outcome {
    let basis = HarmonicBasis::new(3, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut worst_growing = 0.0f64;
    let mut mats = vec![DMatrix::identity(3, 3) * 1.7];
    for _ in 0..3 {
        mats.push(random_spd(&mut rng));
    }
    for a in &mats {
        let mut planted = Vec::new();
        for k in 0..=2usize {
            for m in -(k as i64)..=(k as i64) {
                planted.push(TailCoefficient {
                    k,
                    m,
                    value: rng.gen_range(-2.0..2.0),
                });
            }
        }
        let v = normal_form_tail(&basis, a, &planted)?;
        let tail = affine_decompose(v, a, 3, 6, &basis)?;
        for p in &planted {
            let got = tail.coefficient(p.k, p.m).unwrap_or(f64::NAN);
            let err = (got - p.value).abs();
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        }
        worst_growing = worst_growing.max(tail.max_growing());
    }
    Ok((
        worst <= TOL_RECOVER && worst_growing <= TOL_GROWING,
        format!(
            "1 isotropic + 3 random SPD, coefficient error {worst:.3e} (tol {TOL_RECOVER:.0e}), growing {worst_growing:.3e} (tol {TOL_GROWING:.0e})"
        ),
    ))
}

// 10. Expansion of an entire special Lagrangian solution at infinity.
fn theorem2() -> Outcome {
    let job = JobConfig::new(FRAC_PI_2, 3, 0.0, 1.0);
    let rep = cli::run_theorem2(&job, 1.0)?;
    let failed: Vec<&str> = rep
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    Ok((
        rep.pass,
        format!(
            "amplitude error {:.3e}, off-mode {:.3e}, growing {:.3e}, remainder slope {}{}",
            rep.amplitude_error,
            rep.off_mode_max,
            rep.max_growing,
            rep.remainder_slope
                .map_or("n/a".into(), |s| format!("{s:.3}")),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failed.join(", "))
            }
        ),
    ))
}

// 11. Reductions to Monge-Ampere, Poisson and special Lagrangian equations.
fn reductions() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;

    let (op, sol) = JobConfig::new(0.4, 3, -0.6, 0.5).build()?;
    let ma = verify_ma_reduction(&op, &sol)?;
    ok &= ma.pass && ma.range_ok && ma.bound_ok;
    parts.push(format!("MA residual {:.2e}", ma.residual_max));

    let (op, sol) = JobConfig::new(FRAC_PI_4, 3, -1.0, 1.0).build()?;
    let po = verify_poisson_reduction(&op, &sol)?;
    ok &= po.pass && po.range_ok && po.bound_ok;
    parts.push(format!("Poisson residual {:.2e}", po.residual_max));

    let job = JobConfig::new(1.1, 3, 0.4, 0.7);
    let (op, sol) = job.build()?;
    let radii = logspace(2.0, 100.0, 40);
    let iv = verify_case_iv(&op, &sol, &radii)?;
    ok &= iv.pass;
    let (a, b) = (op.a().unwrap(), op.b().unwrap());
    let spl = Operator::new(FRAC_PI_2, 3, iv.c0_spl)?;
    debug_assert_eq!(spl.case(), Case::SpecialLagrangian);
    let mut worst = 0.0f64;
    for x in cli::sample_points(3, (2.0, 100.0), RESIDUAL_POINTS, 11) {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let v = |y: &[f64]| {
            let ry2: f64 = y.iter().map(|t| t * t).sum();
            sol.value(y).unwrap() / b + a / (2.0 * b) * ry2
        };
        worst = worst.max(pde_residual(&spl, v, &x, 1e-3 * r)?);
    }
    ok &= worst <= TOL_PDE;
    parts.push(format!(
        "case iv spectral {:.2e}, composition {:.2e}, substituted PDE residual {worst:.2e}",
        iv.spectral_residual, iv.composition_error
    ));
    Ok((ok, parts.join("; ")))
}

// 12. Perturbing any coefficient breaks the corresponding check.
fn negative_controls() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for base in [
        JobConfig::new(0.0, 3, 0.0, 1.0),
        JobConfig::new(1.1, 3, 0.4, 0.7),
    ] {
        let clean = cli::run_verify(&base, 1.0)?;
        if !clean.pass {
            ok = false;
            parts.push(format!(
                "{}: unperturbed run fails {:?}",
                label(&base),
                clean.failed
            ));
        }
        for target in ["c2", "c0", "c_-1", "c_-2", "c_-3", "C0"] {
            let mut job = base.clone();
            job.perturb = Some(Perturbation {
                target: target.into(),
                relative: 1e-3,
            });
            let s = cli::run_verify(&job, 1.0)?;
            let caught = if target == "C0" {
                s.check("pde_residual").is_some_and(|c| !c.pass)
            } else {
                s.failed.iter().any(|f| f.starts_with("remainder_slope"))
            };
            if !caught {
                ok = false;
                parts.push(format!("{}: {target} not detected", label(&base)));
            }
        }
    }
    if ok {
        parts.push("6 targets x 2 points all detected".into());
    }
    Ok((ok, parts.join("; ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("MA closed form", ma_closed_form),
        ("MA tail coefficients", ma_coefficients),
        ("ODE first-integral conservation", ode_conservation),
        ("PDE residual", pde_residuals),
        ("remainder slopes", remainder_slopes),
        ("non-analytic branch exponent", branch_exponents),
        ("branch endpoints", branch_endpoints),
        ("fast-decay Poisson", fast_decay),
        ("affine tail plant-and-recover", plant_and_recover),
        ("entire SPL expansion at infinity", theorem2),
        ("reductions", reductions),
        ("negative controls", negative_controls),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} / {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
