//! Ridge kernels `k(x, y | θ) = Σ_j c_j σ(⟨w_j, x⟩ + b_j) σ(⟨w_j, y⟩ + b_j)`
//! and their Gram matrices.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::record::{field, header_fields, parse_field, RecordCursor};

/// Scalar activation σ applied to each ridge `⟨w_j, x⟩ + b_j`.
#[derive(Clone)]
pub enum Activation {
    Cosine,
    Relu,
    /// Caller-supplied continuous function. Non-polynomiality is the
    /// caller's claim; it is not checked.
    Custom(CustomActivation),
}

#[derive(Clone)]
pub struct CustomActivation {
    name: String,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomActivation {
    pub fn new(name: impl Into<String>, func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomActivation {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl Activation {
    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        match self {
            Activation::Cosine => t.cos(),
            Activation::Relu => t.max(0.0),
            Activation::Custom(c) => (c.func)(t),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Activation::Cosine => "cos",
            Activation::Relu => "relu",
            Activation::Custom(c) => &c.name,
        }
    }

    pub fn is_cosine(&self) -> bool {
        matches!(self, Activation::Cosine)
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cos" | "cosine" => Ok(Activation::Cosine),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::input(format!("unknown activation '{other}'"))),
        }
    }
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Activation::Cosine, Activation::Cosine) | (Activation::Relu, Activation::Relu) => true,
            (Activation::Custom(a), Activation::Custom(b)) => a.name == b.name && Arc::ptr_eq(&a.func, &b.func),
            _ => false,
        }
    }
}

/// Parameter bundle θ = (c, w, b, σ) of a ridge kernel with `m` terms on ℝᵈ.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaParams {
    d: usize,
    c: Vec<f64>,
    b: Vec<f64>,
    w: Vec<Vec<f64>>,
    activation: Activation,
    nonnegative: bool,
}

impl ThetaParams {
    pub fn new(d: usize, c: Vec<f64>, b: Vec<f64>, w: Vec<Vec<f64>>, activation: Activation) -> Result<Self> {
        let m = c.len();
        if b.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: b.len(),
            });
        }
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: w.len(),
            });
        }
        if let Some(bad) = w.iter().find(|wj| wj.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        if c.iter().chain(&b).chain(w.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::input("theta contains a non-finite value"));
        }
        Ok(ThetaParams {
            d,
            c,
            b,
            w,
            activation,
            nonnegative: false,
        })
    }

    /// Marks θ as restricted to nonnegative weights, failing if some `c_j < 0`.
    /// A zero weight is admissible: its term simply drops out.
    pub fn with_nonnegative_weights(mut self) -> Result<Self> {
        if let Some((j, c)) = self.c.iter().enumerate().find(|(_, c)| **c < 0.0) {
            return Err(Error::input(format!("weight c[{j}] = {c} is negative")));
        }
        self.nonnegative = true;
        Ok(self)
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn m(&self) -> usize {
        self.c.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.c
    }

    pub fn phases(&self) -> &[f64] {
        &self.b
    }

    pub fn frequency(&self, j: usize) -> &[f64] {
        &self.w[j]
    }

    pub fn frequencies(&self) -> &[Vec<f64>] {
        &self.w
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn has_nonnegative_weights(&self) -> bool {
        self.nonnegative
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Feature vector `(σ(⟨w_j, x⟩ + b_j))_j`.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.features_unchecked(x))
    }

    fn features_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.b)
            .map(|(wj, bj)| self.activation.apply(dot(wj, x) + bj))
            .collect()
    }

    /// `k(x, y | θ)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        let fx = self.features_unchecked(x);
        let fy = self.features_unchecked(y);
        Ok(combine(&self.c, &fx, &fy))
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        text.parse()
    }
}

// `c * (a * b)` is exactly symmetric in (a, b): IEEE products commute.
#[inline]
fn combine(c: &[f64], fx: &[f64], fy: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..c.len() {
        acc += c[j] * (fx[j] * fy[j]);
    }
    acc
}

/// Flat text record: a header line, then one `c b w_1 .. w_d` line per term.
impl fmt::Display for ThetaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "theta m={} d={} activation={} nonnegative={}",
            self.m(),
            self.d,
            self.activation.name(),
            u8::from(self.nonnegative)
        )?;
        for j in 0..self.m() {
            write!(f, "{} {}", self.c[j], self.b[j])?;
            for wji in &self.w[j] {
                write!(f, " {wji}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for ThetaParams {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cursor = RecordCursor::new(text);
        let theta = read_theta(&mut cursor)?;
        cursor.expect_end()?;
        Ok(theta)
    }
}

/// Reads one theta record (header plus `m` term lines) from the cursor.
pub(crate) fn read_theta(cursor: &mut RecordCursor<'_>) -> Result<ThetaParams> {
    let (ln, line) = cursor.expect_line("theta header")?;
    let fields = header_fields(line, ln, "theta")?;
    let m: usize = parse_field(&fields, "m", ln)?;
    let d: usize = parse_field(&fields, "d", ln)?;
    let activation: Activation = field(&fields, "activation", ln)?
        .parse()
        .map_err(|e: Error| Error::parse(ln, e.to_string()))?;
    let nonnegative = matches!(field(&fields, "nonnegative", ln), Ok("1") | Ok("true"));

    let mut c = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut w = Vec::with_capacity(m);
    for _ in 0..m {
        let vals = cursor.floats("theta term", d + 2)?;
        c.push(vals[0]);
        b.push(vals[1]);
        w.push(vals[2..].to_vec());
    }
    let theta = ThetaParams::new(d, c, b, w, activation)?;
    if nonnegative {
        theta.with_nonnegative_weights()
    } else {
        Ok(theta)
    }
}

pub(crate) fn parse_floats(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect()
}

/// Symmetric N×N Gram matrix `K[i][j] = k(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: Matrix,
}

impl GramMatrix {
    /// Wraps a matrix that is symmetric to 1e-12 (relative); the stored
    /// copy is mirrored from its upper triangle so symmetry is exact.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        m.check_symmetric(1e-12)?;
        let n = m.rows();
        if n == 0 {
            return Err(Error::input("empty Gram matrix"));
        }
        let entries = Matrix::from_fn(n, n, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] });
        Ok(GramMatrix { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_matrix(self) -> Matrix {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

/// `k(x, y | θ)` with dimension checks.
pub fn eval_kernel(theta: &ThetaParams, x: &[f64], y: &[f64]) -> Result<f64> {
    theta.eval(x, y)
}

/// Feature matrix `Φ[i][j] = σ(⟨w_j, x_i⟩ + b_j)`.
pub fn feature_matrix<P: AsRef<[f64]>>(theta: &ThetaParams, points: &[P]) -> Result<Matrix> {
    let mut data = Vec::with_capacity(points.len() * theta.m());
    for p in points {
        data.extend(theta.features(p.as_ref())?);
    }
    Matrix::from_row_major(points.len(), theta.m(), data)
}

/// Gram matrix of θ over a sample. Entries are computed on the upper
/// triangle with the same arithmetic as [`eval_kernel`] and mirrored.
pub fn gram<P: AsRef<[f64]>>(theta: &ThetaParams, points: &[P]) -> Result<GramMatrix> {
    if points.is_empty() {
        return Err(Error::input("Gram matrix of an empty sample"));
    }
    let phi = feature_matrix(theta, points)?;
    Ok(gram_from_features(theta.weights(), &phi))
}

pub(crate) fn gram_from_features(c: &[f64], phi: &Matrix) -> GramMatrix {
    let n = phi.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        let fi = phi.row(i);
        for j in i..n {
            let v = combine(c, fi, phi.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    GramMatrix { entries: k }
}
