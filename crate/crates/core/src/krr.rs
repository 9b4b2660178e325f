//! Kernel ridge regression in representer form.
//!
//! For a sample `(x_i, y_i)`, `i = 1..N`, and `λ > 0` the minimizer of
//! `(1/N) Σ (f(x_i) − y_i)² + λ‖f‖²` is `f = Σ a_i k(·, x_i)` with
//! `a = (K + λN I)⁻¹ y`, and its loss equals `λ yᵀ(K + λN I)⁻¹ y`.
//! The truncated Neumann expansion
//! `(1/N) yᵀ Σ_{j=0}^{L} (−1)^j (λN)^{−j} K^j y` approximates the same
//! value when `λN > ‖K‖`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::{gram, read_theta, GramMatrix, ThetaParams};
use crate::linalg::{dot, power_iteration_norm, symmetric_eigen, HouseholderQr, Matrix};
use crate::record::{header_fields, parse_field, RecordCursor};

/// Relative threshold on `|R_kk|` (against `‖K_λ‖_F`) below which the
/// regularized system is reported singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-14;

/// Relative convergence tolerance of [`spectral_norm`].
pub const SPECTRAL_NORM_RTOL: f64 = 1e-13;

/// `(K, y, λ)` of one regularized least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedProblem {
    k: GramMatrix,
    y: Vec<f64>,
    lambda: f64,
}

impl RegularizedProblem {
    pub fn new(k: GramMatrix, y: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::input(format!("lambda must be positive, got {lambda}")));
        }
        if y.len() != k.n() {
            return Err(Error::DimensionMismatch {
                expected: k.n(),
                found: y.len(),
            });
        }
        Ok(RegularizedProblem { k, y, lambda })
    }

    pub fn from_sample<P: AsRef<[f64]>>(theta: &ThetaParams, points: &[P], y: &[f64], lambda: f64) -> Result<Self> {
        RegularizedProblem::new(gram(theta, points)?, y.to_vec(), lambda)
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.k
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// `λN`.
    pub fn lambda_n(&self) -> f64 {
        self.lambda * self.n() as f64
    }

    /// Solves `(K + λN I) a = y` by Householder QR.
    pub fn solve(&self) -> Result<Vec<f64>> {
        solve_shifted(self.k.matrix(), self.lambda_n(), &self.y)
    }
}

fn solve_shifted(k: &Matrix, shift: f64, y: &[f64]) -> Result<Vec<f64>> {
    let k_lambda = k.add_diagonal(shift);
    let threshold = SINGULAR_PIVOT_RTOL * k_lambda.frobenius_norm();
    HouseholderQr::new(&k_lambda)?.solve(y, threshold)
}

/// Representer expansion `f(x) = Σ a_i k(x, x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    theta: ThetaParams,
    support: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    lambda: f64,
}

impl FittedModel {
    pub fn new(theta: ThetaParams, support: Vec<Vec<f64>>, coefficients: Vec<f64>, lambda: f64) -> Result<Self> {
        if support.len() != coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                found: coefficients.len(),
            });
        }
        if let Some(p) = support.iter().find(|p| p.len() != theta.d()) {
            return Err(Error::DimensionMismatch {
                expected: theta.d(),
                found: p.len(),
            });
        }
        if !(lambda > 0.0) {
            return Err(Error::input(format!("lambda must be positive, got {lambda}")));
        }
        Ok(FittedModel {
            theta,
            support,
            coefficients,
            lambda,
        })
    }

    pub fn theta(&self) -> &ThetaParams {
        &self.theta
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        predict(self, x)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        text.parse()
    }
}

impl fmt::Display for FittedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fitted-model n={} lambda={}", self.support.len(), self.lambda)?;
        write!(f, "{}", self.theta)?;
        writeln!(f, "support")?;
        for p in &self.support {
            let row: Vec<String> = p.iter().map(f64::to_string).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        writeln!(f, "coefficients")?;
        for a in &self.coefficients {
            writeln!(f, "{a}")?;
        }
        Ok(())
    }
}

impl FromStr for FittedModel {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cursor = RecordCursor::new(text);
        let model = read_fitted_model(&mut cursor)?;
        cursor.expect_end()?;
        Ok(model)
    }
}

pub(crate) fn read_fitted_model(cursor: &mut RecordCursor<'_>) -> Result<FittedModel> {
    let (ln, line) = cursor.expect_line("fitted-model header")?;
    let fields = header_fields(line, ln, "fitted-model")?;
    let n: usize = parse_field(&fields, "n", ln)?;
    let lambda: f64 = parse_field(&fields, "lambda", ln)?;
    let theta = read_theta(cursor)?;
    cursor.expect_keyword("support")?;
    let support = (0..n)
        .map(|_| cursor.floats("support point", theta.d()))
        .collect::<Result<Vec<_>>>()?;
    cursor.expect_keyword("coefficients")?;
    let coefficients = (0..n)
        .map(|_| cursor.floats("coefficient", 1).map(|v| v[0]))
        .collect::<Result<Vec<_>>>()?;
    FittedModel::new(theta, support, coefficients, lambda)
}

/// Fits the representer coefficients `a = (K + λN I)⁻¹ y` via QR.
pub fn fit<P: AsRef<[f64]>>(theta: &ThetaParams, points: &[P], y: &[f64], lambda: f64) -> Result<FittedModel> {
    let problem = RegularizedProblem::from_sample(theta, points, y, lambda)?;
    let a = problem.solve()?;
    FittedModel::new(
        theta.clone(),
        points.iter().map(|p| p.as_ref().to_vec()).collect(),
        a,
        lambda,
    )
}

/// `f(x) = Σ a_i k(x, x_i)`.
pub fn predict(model: &FittedModel, x: &[f64]) -> Result<f64> {
    let fx = model.theta.features(x)?;
    let c = model.theta.weights();
    let mut acc = 0.0;
    for (p, a) in model.support.iter().zip(&model.coefficients) {
        let fp = model.theta.features(p)?;
        let mut k = 0.0;
        for j in 0..c.len() {
            k += c[j] * (fx[j] * fp[j]);
        }
        acc += a * k;
    }
    Ok(acc)
}

/// `λ yᵀ(K + λN I)⁻¹ y`, through the QR solve.
pub fn closed_form_loss(problem: &RegularizedProblem) -> Result<f64> {
    let a = problem.solve()?;
    Ok(problem.lambda * dot(&problem.y, &a))
}

/// `(1/N) yᵀ(I + K/(λN))⁻¹ y`: the normalization of the Neumann
/// criterion. Identical to [`closed_form_loss`] in exact arithmetic.
pub fn closed_form_loss_neumann_scaled(problem: &RegularizedProblem) -> Result<f64> {
    let n = problem.n() as f64;
    let scaled = problem.k.matrix().scale(1.0 / problem.lambda_n());
    let u = solve_shifted(&scaled, 1.0, &problem.y)?;
    Ok(dot(&problem.y, &u) / n)
}

/// `(1/N)‖K a − y‖² + λ aᵀ K a` for a model fitted on `(points, y)`.
pub fn direct_loss<P: AsRef<[f64]>>(model: &FittedModel, points: &[P], y: &[f64]) -> Result<f64> {
    if y.len() != points.len() || model.coefficients.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: y.len(),
        });
    }
    let k = gram(&model.theta, points)?;
    let ka = k.matrix().matvec(&model.coefficients);
    let n = y.len() as f64;
    let fit_term: f64 = ka.iter().zip(y).map(|(f, t)| (f - t).powi(2)).sum::<f64>() / n;
    Ok(fit_term + model.lambda * dot(&model.coefficients, &ka))
}

/// `‖K‖₂`, the largest absolute eigenvalue, by power iteration.
pub fn spectral_norm(k: &GramMatrix) -> f64 {
    power_iteration_norm(k.matrix(), SPECTRAL_NORM_RTOL)
}

/// Truncated Neumann criterion
/// `(1/N) yᵀ Σ_{j=0}^{L} (−1)^j (λN)^{−j} K^j y`, evaluated with the
/// recursion `r ← y − K r/(λN)` (L matrix-vector products).
///
/// Fails with [`Error::NeumannDivergence`] unless `λN > ‖K‖` strictly.
pub fn neumann_loss(problem: &RegularizedProblem, order: usize) -> Result<f64> {
    let norm = spectral_norm(&problem.k);
    neumann_loss_with_norm(problem, order, norm)
}

/// [`neumann_loss`] with a precomputed spectral norm.
pub fn neumann_loss_with_norm(problem: &RegularizedProblem, order: usize, spectral_norm: f64) -> Result<f64> {
    let lambda_n = problem.lambda_n();
    if !(lambda_n > spectral_norm) {
        return Err(Error::NeumannDivergence {
            spectral_norm,
            lambda_n,
        });
    }
    let k = problem.k.matrix();
    let y = &problem.y;
    let mut r = y.clone();
    for _ in 0..order {
        let kr = k.matvec(&r);
        for ((ri, yi), kri) in r.iter_mut().zip(y).zip(&kr) {
            *ri = yi - kri / lambda_n;
        }
    }
    Ok(dot(y, &r) / problem.n() as f64)
}

/// The same criterion through the spectral decomposition `K = U Λ Uᵀ`:
/// `(1/N) Σ_k (u_kᵀ y)² Σ_{j≤L} (−λ_k/(λN))^j`. A reference path for
/// small N; it does not enforce the divergence guard.
pub fn neumann_loss_spectral(problem: &RegularizedProblem, order: usize) -> Result<f64> {
    let eig = symmetric_eigen(problem.k.matrix())?;
    let lambda_n = problem.lambda_n();
    let mut total = 0.0;
    for (i, &ev) in eig.values.iter().enumerate() {
        let proj = dot(&eig.vector(i), &problem.y);
        let ratio = -ev / lambda_n;
        let mut term = 1.0;
        let mut series = 1.0;
        for _ in 0..order {
            term *= ratio;
            series += term;
        }
        total += proj * proj * series;
    }
    Ok(total / problem.n() as f64)
}

/// Geometric remainder bound
/// `ρ^{L+1} · yᵀy/N · (1 − ρ)⁻¹` with `ρ = ‖K‖/(λN) < 1`.
pub fn neumann_remainder_bound(problem: &RegularizedProblem, order: usize) -> Result<f64> {
    let norm = spectral_norm(&problem.k);
    let rho = norm / problem.lambda_n();
    if rho >= 1.0 {
        return Err(Error::NeumannDivergence {
            spectral_norm: norm,
            lambda_n: problem.lambda_n(),
        });
    }
    let yy = dot(&problem.y, &problem.y) / problem.n() as f64;
    Ok(rho.powi(order as i32 + 1) * yy / (1.0 - rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Activation;

    fn zero_theta(d: usize) -> ThetaParams {
        ThetaParams::new(d, vec![0.0], vec![0.0], vec![vec![0.3; d]], Activation::Cosine).unwrap()
    }

    fn const_theta(c: f64) -> ThetaParams {
        ThetaParams::new(1, vec![c], vec![0.0], vec![vec![0.0]], Activation::Cosine).unwrap()
    }

    #[test]
    fn zero_kernel_fit() {
        let m = fit(&zero_theta(2), &[[0.0, 1.0], [2.0, 3.0]], &[2.0, 4.0], 1.0).unwrap();
        assert_eq!(m.coefficients(), &[1.0, 2.0]);
        assert_eq!(predict(&m, &[5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(direct_loss(&m, &[[0.0, 1.0], [2.0, 3.0]], &[2.0, 4.0]).unwrap(), 10.0);
    }

    #[test]
    fn single_point_fit() {
        let m = fit(&const_theta(1.0), &[[0.7]], &[3.0], 1.0).unwrap();
        assert!((m.coefficients()[0] - 1.5).abs() < 1e-15);
        let two = FittedModel::new(const_theta(1.0), vec![vec![0.0]], vec![2.0], 1.0).unwrap();
        assert_eq!(predict(&two, &[9.0]).unwrap(), 2.0);
    }

    #[test]
    fn closed_form_small_cases() {
        let p = RegularizedProblem::from_sample(&zero_theta(1), &[[0.0], [1.0]], &[2.0, 4.0], 1.0).unwrap();
        assert!((closed_form_loss(&p).unwrap() - 10.0).abs() < 1e-14);

        let p = RegularizedProblem::from_sample(&const_theta(1.0), &[[0.0]], &[2.0], 1.0).unwrap();
        assert!((closed_form_loss(&p).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_neumann_series() {
        let p = RegularizedProblem::from_sample(&const_theta(1.0), &[[0.0]], &[1.0], 2.0).unwrap();
        assert!((neumann_loss(&p, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((neumann_loss(&p, 3).unwrap() - 0.625).abs() < 1e-15);
        assert!((closed_form_loss(&p).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((neumann_loss_spectral(&p, 3).unwrap() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn neumann_with_zero_kernel_is_exact() {
        let p = RegularizedProblem::from_sample(&zero_theta(1), &[[0.0], [1.0]], &[2.0, 4.0], 0.1).unwrap();
        for l in [0, 1, 5] {
            assert_eq!(neumann_loss(&p, l).unwrap(), 10.0);
        }
    }

    #[test]
    fn divergence_guard_is_strict() {
        // K = [1], λN = 1: borderline equality must fail
        let p = RegularizedProblem::from_sample(&const_theta(1.0), &[[0.0]], &[1.0], 1.0).unwrap();
        match neumann_loss(&p, 5) {
            Err(Error::NeumannDivergence {
                spectral_norm,
                lambda_n,
            }) => {
                assert!((spectral_norm - 1.0).abs() < 1e-12);
                assert_eq!(lambda_n, 1.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn spectral_norm_examples() {
        let eye = GramMatrix::from_matrix(Matrix::identity(4)).unwrap();
        assert!((spectral_norm(&eye) - 1.0).abs() < 1e-12);
        let ones = GramMatrix::from_matrix(Matrix::from_fn(3, 3, |_, _| 1.0)).unwrap();
        assert!((spectral_norm(&ones) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_lambda_rejected() {
        let k = GramMatrix::from_matrix(Matrix::identity(2)).unwrap();
        assert!(RegularizedProblem::new(k.clone(), vec![1.0, 2.0], 0.0).is_err());
        assert!(RegularizedProblem::new(k, vec![1.0], 1.0).is_err());
    }

    #[test]
    fn model_record_round_trips() {
        let theta = ThetaParams::new(
            2,
            vec![0.25, 1.0 / 7.0],
            vec![0.1, -2.0],
            vec![vec![1.0, 2.0], vec![-0.5, 1e-9]],
            Activation::Relu,
        )
        .unwrap();
        let pts = [[0.1, 0.2], [1.0 / 3.0, -4.0], [2.0, 2.5]];
        let m = fit(&theta, &pts, &[1.0, 0.0, 1.0], 0.01).unwrap();
        let back = FittedModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }
}
