//! Positive semidefiniteness certificates on finite samples.
//!
//! A signed feature sum `k = Σ_{j≤L} k_j − Σ_{j>L} k_j` with rank-one terms
//! `k_j(x_i, x_k) = v_j[i] v_j[k]` is a Mercer kernel on the sample iff
//! `Σ_{j≤L} ⟨v_j, a⟩² ≥ Σ_{j>L} ⟨v_j, a⟩²` for every unit vector `a`. The
//! minimum of that quadratic form over the sphere is the smallest
//! eigenvalue of `G = Σ_{j≤L} v_j v_jᵀ − Σ_{j>L} v_j v_jᵀ`, which is what
//! [`frame_condition`] decides.

use crate::error::{Error, Result};
use crate::kernels::{gram, ThetaParams};
use crate::linalg::{symmetric_eigen, Matrix};

/// Tolerance below zero still accepted as PSD by [`frame_condition`];
/// rank-deficient frames sit exactly at zero.
pub const FRAME_TOLERANCE: f64 = 1e-10;

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(a: &Matrix) -> Result<f64> {
    let eig = symmetric_eigen(a)?;
    Ok(eig.values[0])
}

/// Whether the Gram matrix of θ on `points` has minimum eigenvalue `≥ -tol`.
pub fn is_psd_on_sample<P: AsRef<[f64]>>(theta: &ThetaParams, points: &[P], tol: f64) -> Result<bool> {
    let k = gram(theta, points)?;
    Ok(min_eigenvalue_sym(k.matrix())? >= -tol)
}

/// Positive vectors `v_j, j ≤ L` and negative vectors `v_j, j > L`, all of
/// the sample size `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedFeatureModel {
    n: usize,
    plus: Vec<Vec<f64>>,
    minus: Vec<Vec<f64>>,
}

impl SignedFeatureModel {
    pub fn new(plus: Vec<Vec<f64>>, minus: Vec<Vec<f64>>) -> Result<Self> {
        let n = plus
            .first()
            .or_else(|| minus.first())
            .map(Vec::len)
            .ok_or_else(|| Error::input("signed feature model has no vectors"))?;
        if n == 0 {
            return Err(Error::input("feature vectors must have length >= 1"));
        }
        if let Some(v) = plus.iter().chain(&minus).find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        Ok(SignedFeatureModel { n, plus, minus })
    }

    /// Vectors `v_j = (f_j(⟨x_1, w_j⟩), …, f_j(⟨x_n, w_j⟩))` for ridge
    /// profiles `f_j` and directions `w_j`; the first `l` terms are positive.
    pub fn from_ridge_terms<P, F>(points: &[P], terms: &[(Vec<f64>, F)], l: usize) -> Result<Self>
    where
        P: AsRef<[f64]>,
        F: Fn(f64) -> f64,
    {
        if l > terms.len() {
            return Err(Error::input("positive term count exceeds number of terms"));
        }
        let mut vs = Vec::with_capacity(terms.len());
        for (w, f) in terms {
            let mut v = Vec::with_capacity(points.len());
            for p in points {
                let p = p.as_ref();
                if p.len() != w.len() {
                    return Err(Error::DimensionMismatch {
                        expected: w.len(),
                        found: p.len(),
                    });
                }
                v.push(f(crate::linalg::dot(p, w)));
            }
            vs.push(v);
        }
        let minus = vs.split_off(l);
        SignedFeatureModel::new(vs, minus)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn positive(&self) -> &[Vec<f64>] {
        &self.plus
    }

    pub fn negative(&self) -> &[Vec<f64>] {
        &self.minus
    }

    /// `G = Σ₊ v vᵀ − Σ₋ v vᵀ`, which is also the Gram matrix of the signed
    /// kernel on the sample.
    pub fn signed_gram(&self) -> Matrix {
        let n = self.n;
        let mut g = Matrix::zeros(n, n);
        let terms = self
            .plus
            .iter()
            .map(|v| (1.0, v))
            .chain(self.minus.iter().map(|v| (-1.0, v)));
        for (sign, v) in terms {
            for i in 0..n {
                let si = sign * v[i];
                for j in i..n {
                    g[(i, j)] += si * v[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    /// `Σ₊ ⟨v, a⟩² − Σ₋ ⟨v, a⟩²`.
    pub fn quadratic_form(&self, a: &[f64]) -> f64 {
        let pos: f64 = self.plus.iter().map(|v| crate::linalg::dot(v, a).powi(2)).sum();
        let neg: f64 = self.minus.iter().map(|v| crate::linalg::dot(v, a).powi(2)).sum();
        pos - neg
    }
}

/// Verdict of [`frame_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameVerdict {
    pub is_mercer: bool,
    pub min_eigenvalue: f64,
}

/// Decides the frame inequality and reports the minimum of the form.
pub fn frame_check(model: &SignedFeatureModel) -> Result<FrameVerdict> {
    let min_eigenvalue = min_eigenvalue_sym(&model.signed_gram())?;
    Ok(FrameVerdict {
        is_mercer: min_eigenvalue >= -FRAME_TOLERANCE,
        min_eigenvalue,
    })
}

pub fn frame_condition(model: &SignedFeatureModel) -> Result<bool> {
    Ok(frame_check(model)?.is_mercer)
}

/// Reads a signed feature model from CSV lines `sign,v_1,...,v_n` where
/// `sign` is `+` or `-`. Blank lines and `#` comments are skipped, and a
/// leading header line whose first field is not a sign is ignored.
pub fn parse_signed_vectors(text: &str) -> Result<SignedFeatureModel> {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let sign = fields.next().unwrap_or_default();
        let target = match sign {
            "+" => &mut plus,
            "-" => &mut minus,
            _ if !seen_data => {
                seen_data = true;
                continue;
            }
            other => return Err(Error::parse(idx + 1, format!("expected '+' or '-', found '{other}'"))),
        };
        seen_data = true;
        let v = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(idx + 1, format!("'{f}' is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        target.push(v);
    }
    SignedFeatureModel::new(plus, minus)
}
