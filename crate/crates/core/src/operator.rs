//! The five-case operator family `F_tau(lambda(D^2 u)) = C0`.
//!
//! Every case is a sum of one scalar function applied to each Hessian
//! eigenvalue, so the operator, its gradient and its matrix derivative are all
//! assembled from the per-eigenvalue term `f` and its derivative `f'`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CASE_TOL: f64 = 1e-12;

/// Which member of the family a given `tau` selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `tau = 0`: Monge-Ampère, `(1/n) sum ln lambda_i`.
    MongeAmpere,
    /// `0 < tau < pi/4`: logarithmic ratio.
    Small,
    /// `tau = pi/4`: translated inverse harmonic Hessian.
    Inverse,
    /// `pi/4 < tau < pi/2`: arctangent ratio.
    Large,
    /// `tau = pi/2`: special Lagrangian.
    SpecialLagrangian,
}

impl Case {
    pub fn from_tau(tau: f64) -> Result<Case> {
        if !(-CASE_TOL..=FRAC_PI_2 + CASE_TOL).contains(&tau) {
            return Err(Error::Domain(format!("tau = {tau} outside [0, pi/2]")));
        }
        Ok(if tau.abs() <= CASE_TOL {
            Case::MongeAmpere
        } else if (tau - FRAC_PI_4).abs() <= CASE_TOL {
            Case::Inverse
        } else if (tau - FRAC_PI_2).abs() <= CASE_TOL {
            Case::SpecialLagrangian
        } else if tau < FRAC_PI_4 {
            Case::Small
        } else {
            Case::Large
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Case::MongeAmpere => "MA",
            Case::Small => "Small",
            Case::Inverse => "Inverse",
            Case::Large => "Large",
            Case::SpecialLagrangian => "SPL",
        }
    }
}

/// One operator of the family with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    tau: f64,
    n: usize,
    c0: f64,
    case: Case,
    a: Option<f64>,
    b: Option<f64>,
    cprime: f64,
}

impl Operator {
    /// Builds the operator for `(tau, n, C0)`, rejecting parameters for which
    /// the equation cannot hold.
    pub fn new(tau: f64, n: usize, c0: f64) -> Result<Operator> {
        if n < 3 {
            return Err(Error::Domain(format!(
                "dimension n = {n} must be at least 3"
            )));
        }
        if !c0.is_finite() {
            return Err(Error::Domain("C0 must be finite".into()));
        }
        let case = Case::from_tau(tau)?;
        let nf = n as f64;
        let half_range = nf * FRAC_PI_2;
        let (a, b) = match case {
            Case::Small | Case::Large => {
                let cot = 1.0 / tau.tan();
                (Some(cot), Some((cot * cot - 1.0).abs().sqrt()))
            }
            _ => (None, None),
        };
        let cprime = match case {
            Case::MongeAmpere => (nf * c0).exp(),
            Case::Small => {
                let (a, b) = (a.unwrap(), b.unwrap());
                (2.0 * b * c0 / (a * a + 1.0).sqrt()).exp()
            }
            Case::Inverse => -c0 / SQRT_2,
            Case::Large => {
                let (a, b) = (a.unwrap(), b.unwrap());
                let cp = b * c0 / (a * a + 1.0).sqrt();
                if cp.abs() >= half_range {
                    return Err(Error::Domain(format!(
                        "C' = b C0 / sqrt(a^2+1) = {cp} outside (-n pi/2, n pi/2) = ({}, {})",
                        -half_range, half_range
                    )));
                }
                cp
            }
            Case::SpecialLagrangian => {
                if c0.abs() >= half_range {
                    return Err(Error::Domain(format!(
                        "C0 = {c0} outside (-n pi/2, n pi/2) = ({}, {})",
                        -half_range, half_range
                    )));
                }
                c0
            }
        };
        Ok(Operator {
            tau,
            n,
            c0,
            case,
            a,
            b,
            cprime,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn case(&self) -> Case {
        self.case
    }
    /// `cot tau`, present only for the two interior cases.
    pub fn a(&self) -> Option<f64> {
        self.a
    }
    /// `sqrt(|cot^2 tau - 1|)`, present only for the two interior cases.
    pub fn b(&self) -> Option<f64> {
        self.b
    }
    /// The reduced constant `C'` of the radial analysis.
    pub fn cprime(&self) -> f64 {
        self.cprime
    }

    /// Same `tau` and `n` with a different right-hand side.
    pub fn with_c0(&self, c0: f64) -> Result<Operator> {
        Operator::new(self.tau, self.n, c0)
    }

    fn ab(&self) -> (f64, f64) {
        (self.a.unwrap_or(0.0), self.b.unwrap_or(0.0))
    }

    /// Per-eigenvalue term `f(lambda)`; `F = sum_i f(lambda_i)`.
    pub fn term(&self, lambda: f64) -> Result<f64> {
        let nf = self.n as f64;
        let (a, b) = self.ab();
        match self.case {
            Case::MongeAmpere => {
                if lambda > 0.0 {
                    Ok(lambda.ln() / nf)
                } else {
                    Err(Error::Domain(format!("lambda = {lambda} must be positive")))
                }
            }
            Case::Small => {
                let ratio = (lambda + a - b) / (lambda + a + b);
                if ratio > 0.0 && ratio.is_finite() {
                    Ok((a * a + 1.0).sqrt() / (2.0 * b) * ratio.ln())
                } else {
                    Err(Error::Domain(format!(
                        "lambda = {lambda} must avoid [-a-b, -a+b] = [{}, {}]",
                        -a - b,
                        -a + b
                    )))
                }
            }
            Case::Inverse => {
                if lambda != -1.0 {
                    Ok(-SQRT_2 / (1.0 + lambda))
                } else {
                    Err(Error::Domain("lambda = -1 is singular".into()))
                }
            }
            Case::Large => {
                let den = lambda + a + b;
                if den != 0.0 {
                    Ok((a * a + 1.0).sqrt() / b * ((lambda + a - b) / den).atan())
                } else {
                    Err(Error::Domain(format!(
                        "lambda = -a-b = {lambda} is singular"
                    )))
                }
            }
            Case::SpecialLagrangian => Ok(lambda.atan()),
        }
    }

    /// Derivative `f'(lambda)` of the per-eigenvalue term.
    pub fn term_derivative(&self, lambda: f64) -> Result<f64> {
        // validates the domain
        self.term(lambda)?;
        let nf = self.n as f64;
        let (a, b) = self.ab();
        let s = (a * a + 1.0).sqrt();
        Ok(match self.case {
            Case::MongeAmpere => 1.0 / (nf * lambda),
            Case::Small => s / ((lambda + a).powi(2) - b * b),
            Case::Inverse => SQRT_2 / (1.0 + lambda).powi(2),
            Case::Large => s / ((lambda + a).powi(2) + b * b),
            Case::SpecialLagrangian => 1.0 / (1.0 + lambda * lambda),
        })
    }

    /// Inverse of the per-eigenvalue term: the unique `lambda` with
    /// `f(lambda) = value`.
    pub fn term_inverse(&self, value: f64) -> Result<f64> {
        let nf = self.n as f64;
        let (a, b) = self.ab();
        let s = (a * a + 1.0).sqrt();
        let from_ratio = |ratio: f64| -> Result<f64> {
            if (ratio - 1.0).abs() < f64::EPSILON {
                return Err(Error::Domain(format!("term value {value} has no preimage")));
            }
            Ok((a - b - ratio * (a + b)) / (ratio - 1.0))
        };
        match self.case {
            Case::MongeAmpere => Ok((nf * value).exp()),
            Case::Small => from_ratio((value * 2.0 * b / s).exp()),
            Case::Inverse => {
                if value == 0.0 {
                    Err(Error::Domain("term value 0 has no preimage".into()))
                } else {
                    Ok(-SQRT_2 / value - 1.0)
                }
            }
            Case::Large => {
                let angle = value * b / s;
                if angle.abs() >= FRAC_PI_2 {
                    Err(Error::Domain(format!(
                        "term value {value} outside the arctan range"
                    )))
                } else {
                    from_ratio(angle.tan())
                }
            }
            Case::SpecialLagrangian => {
                if value.abs() >= FRAC_PI_2 {
                    Err(Error::Domain(format!(
                        "term value {value} outside (-pi/2, pi/2)"
                    )))
                } else {
                    Ok(value.tan())
                }
            }
        }
    }

    fn check_len(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.n {
            return Err(Error::Contract(format!(
                "expected {} eigenvalues, got {}",
                self.n,
                lambda.len()
            )));
        }
        Ok(())
    }

    /// `F_tau(lambda)`.
    pub fn evaluate(&self, lambda: &[f64]) -> Result<f64> {
        self.check_len(lambda)?;
        lambda.iter().enumerate().try_fold(0.0, |acc, (i, &l)| {
            self.term(l)
                .map(|t| acc + t)
                .map_err(|e| Error::Domain(format!("eigenvalue index {i}: {e}")))
        })
    }

    /// `dF_tau / d lambda_i` for every `i`.
    pub fn gradient(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.check_len(lambda)?;
        lambda
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                self.term_derivative(l)
                    .map_err(|e| Error::Domain(format!("eigenvalue index {i}: {e}")))
            })
            .collect()
    }

    /// Matrix derivative of `M -> F_tau(lambda(M))` at a symmetric `A`,
    /// assembled spectrally as `sum_i f'(lambda_i) P_i`.
    pub fn df_matrix(&self, a_mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_symmetric(a_mat, self.n)?;
        let eig = SymmetricEigen::new(a_mat.clone());
        let grads = self.gradient(eig.eigenvalues.as_slice())?;
        let v = &eig.eigenvectors;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(grads));
        let m = v * d * v.transpose();
        Ok((&m + m.transpose()) * 0.5)
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn spectrum(a_mat: &DMatrix<f64>) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(a_mat.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    /// Evaluates the hypothesis on the Hessian spectrum (and on `C0`) that
    /// matches this operator's case.
    ///
    /// `big_k` and `eps_n` are the free constants of the semi-convexity
    /// conditions. When both disjuncts of condition (iv) or (v) hold, the
    /// phase disjunct is reported since it does not depend on `lambda`.
    pub fn check_admissibility(
        &self,
        lambda: &[f64],
        big_k: f64,
        eps_n: f64,
    ) -> AdmissibilityReport {
        let min_l = lambda.iter().copied().fold(f64::INFINITY, f64::min);
        let nf = self.n as f64;
        let (a, b) = self.ab();
        let semiconvex_bound = |scale: f64| -> f64 {
            if self.n <= 4 {
                big_k * scale
            } else {
                (1.0 / 3f64.sqrt() + eps_n) * scale
            }
        };
        let phase_gap = |phase: f64| phase.abs() - (nf - 2.0) * FRAC_PI_2;
        let pick = |first: (ConditionId, f64), second: (ConditionId, f64)| {
            let (id, margin) = if first.1 > 0.0 {
                first
            } else if second.1 > 0.0 {
                second
            } else if first.1 >= second.1 {
                first
            } else {
                second
            };
            AdmissibilityReport {
                satisfied: margin > 0.0,
                condition: id,
                margin,
            }
        };
        let single = |id: ConditionId, margin: f64| AdmissibilityReport {
            satisfied: margin > 0.0,
            condition: id,
            margin,
        };
        match self.case {
            Case::MongeAmpere => single(ConditionId::I, min_l),
            Case::Small => single(ConditionId::Ii, min_l - (b - a)),
            Case::Inverse => single(ConditionId::Iii, min_l + 1.0),
            Case::Large => {
                let strict = min_l + a + b;
                let lower = a + b * semiconvex_bound(1.0);
                let iv_a = strict.min(min_l + lower);
                let iv_b = strict.min(phase_gap(self.cprime + nf * PI / 4.0));
                pick((ConditionId::IvB, iv_b), (ConditionId::IvA, iv_a))
            }
            Case::SpecialLagrangian => {
                let v_a = min_l + semiconvex_bound(1.0);
                let v_b = phase_gap(self.c0);
                pick((ConditionId::VB, v_b), (ConditionId::VA, v_a))
            }
        }
    }
}

/// Rejects non-square, wrongly sized or non-symmetric matrices.
pub fn check_symmetric(m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Contract(format!(
            "expected a {n}x{n} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::Contract(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok(())
}

/// Label of the hypothesis that was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionId {
    I,
    Ii,
    Iii,
    /// Semi-convexity form of condition (iv).
    IvA,
    /// Phase form of condition (iv).
    IvB,
    /// Semi-convexity form of condition (v).
    VA,
    /// Supercritical phase `|C0| > (n-2) pi / 2`.
    VB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub satisfied: bool,
    pub condition: ConditionId,
    /// Signed distance to the constraint boundary; positive iff satisfied.
    pub margin: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn constants_for_pi_over_three() {
        let op = Operator::new(FRAC_PI_3, 3, 1.0).unwrap();
        assert_eq!(op.case(), Case::Large);
        let cot = FRAC_PI_3.cos() / FRAC_PI_3.sin();
        assert!((op.a().unwrap() - cot).abs() < 1e-15);
        assert!((op.a().unwrap() - 0.577_350_269_189_625_8).abs() < 1e-12);
        assert!((op.b().unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn inverse_case_cprime() {
        let op = Operator::new(FRAC_PI_4, 3, -3.0 * SQRT_2).unwrap();
        assert_eq!(op.case(), Case::Inverse);
        assert!((op.cprime() - 3.0).abs() < 1e-14);
        assert!(op.a().is_none() && op.b().is_none());
    }

    #[test]
    fn spl_rejects_phase_out_of_range() {
        let err = Operator::new(FRAC_PI_2, 3, 6.0 * PI).unwrap_err();
        match err {
            Error::Domain(msg) => assert!(msg.contains("outside")),
            e => panic!("unexpected {e:?}"),
        }
        assert!(Operator::new(2.0, 3, 0.0).is_err());
        assert!(Operator::new(0.3, 2, 0.0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let spl = Operator::new(FRAC_PI_2, 3, 0.0).unwrap();
        assert!((spl.evaluate(&[1.0, 1.0, 1.0]).unwrap() - 3.0 * FRAC_PI_4).abs() < 1e-15);
        let ma = Operator::new(0.0, 3, 0.0).unwrap();
        assert_eq!(ma.evaluate(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        let inv = Operator::new(FRAC_PI_4, 3, -1.0).unwrap();
        assert!((inv.evaluate(&[0.0, 0.0, 0.0]).unwrap() + 3.0 * SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn evaluate_reports_singular_index() {
        let op = Operator::new(1.2, 3, 0.0).unwrap();
        let (a, b) = (op.a().unwrap(), op.b().unwrap());
        let err = op.evaluate(&[0.0, -a - b, 1.0]).unwrap_err();
        assert!(err.to_string().contains("index 1"));
        let ma = Operator::new(0.0, 3, 0.0).unwrap();
        assert!(ma.evaluate(&[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let spl = Operator::new(FRAC_PI_2, 3, 0.0).unwrap();
        assert_eq!(spl.gradient(&[0.0; 3]).unwrap(), vec![1.0; 3]);
        let ma = Operator::new(0.0, 3, 0.0).unwrap();
        for g in ma.gradient(&[1.0; 3]).unwrap() {
            assert!((g - 1.0 / 3.0).abs() < 1e-16);
        }
    }

    #[test]
    fn term_inverse_round_trips() {
        let cases = [
            (0.0, 0.3, vec![0.5, 2.0]),
            (0.4, -0.5, vec![1.0, 3.0, -5.0]),
            (FRAC_PI_4, -1.0, vec![0.5, -3.0]),
            (1.2, 0.5, vec![0.1, 4.0, -10.0]),
            (FRAC_PI_2, 0.5, vec![-2.0, 0.0, 7.0]),
        ];
        for (tau, c0, lams) in cases {
            let op = Operator::new(tau, 4, c0).unwrap();
            for l in lams {
                let v = op.term(l).unwrap();
                let back = op.term_inverse(v).unwrap();
                assert!(
                    (back - l).abs() < 1e-9 * (1.0 + l.abs()),
                    "{tau} {l} {back}"
                );
            }
        }
    }

    #[test]
    fn df_matrix_isotropic_and_diagonal() {
        let op = Operator::new(0.3, 3, -0.5).unwrap();
        let a = DMatrix::<f64>::identity(3, 3) * 2.0;
        let df = op.df_matrix(&a).unwrap();
        let g = op.term_derivative(2.0).unwrap();
        assert!((df - DMatrix::identity(3, 3) * g).amax() < 1e-14);

        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 5.0]));
        let df = op.df_matrix(&d).unwrap();
        for (i, l) in [1.0, 2.0, 5.0].iter().enumerate() {
            assert!((df[(i, i)] - op.term_derivative(*l).unwrap()).abs() < 1e-14);
        }
        assert!(df[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn df_matrix_rejects_asymmetric() {
        let op = Operator::new(FRAC_PI_2, 3, 0.0).unwrap();
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = 0.5;
        assert!(matches!(op.df_matrix(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn admissibility_examples() {
        let ma = Operator::new(0.0, 3, 0.0).unwrap();
        let rep = ma.check_admissibility(&[1.0, 2.0, 3.0], 1e6, 0.0);
        assert!(rep.satisfied);
        assert_eq!(rep.condition, ConditionId::I);
        assert!((rep.margin - 1.0).abs() < 1e-15);

        let spl = Operator::new(FRAC_PI_2, 3, 0.6 * PI).unwrap();
        let rep = spl.check_admissibility(&[-1e9, 0.0, 2.0], 1e6, 0.0);
        assert!(rep.satisfied);
        assert_eq!(rep.condition, ConditionId::VB);
        assert!((rep.margin - 0.1 * PI).abs() < 1e-12);
    }

    #[test]
    fn large_case_fails_both_disjuncts() {
        // n = 5 so the semi-convexity bound -(a + b/sqrt3) sits above -a-b.
        let tau = 1.2;
        let n = 5;
        let probe = Operator::new(tau, n, 0.0).unwrap();
        let (a, b) = (probe.a().unwrap(), probe.b().unwrap());
        let s = (a * a + 1.0).sqrt();
        // choose C' with |C' + n pi/4| <= (n-2) pi/2
        let cprime = -(n as f64) * PI / 4.0 + 0.5;
        let op = Operator::new(tau, n, cprime * s / b).unwrap();
        assert!((op.cprime() - cprime).abs() < 1e-12);
        let lam = vec![-a - b + 1e-3, 1.0, 1.0, 1.0, 1.0];
        let rep = op.check_admissibility(&lam, 1e6, 0.0);
        assert!(!rep.satisfied);
        assert!(rep.margin < 0.0);
        // direct evaluation of both disjuncts
        let iv_a = (lam[0] + a + b).min(lam[0] + a + b / 3f64.sqrt());
        let iv_b = (lam[0] + a + b).min((cprime + n as f64 * PI / 4.0).abs() - 1.5 * PI);
        assert!((rep.margin - iv_a.max(iv_b)).abs() < 1e-14);
    }
}
