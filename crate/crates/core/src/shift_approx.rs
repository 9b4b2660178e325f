//! Cosine ridge approximations of shift-invariant kernels.
//!
//! A shift-invariant kernel `k(x, y) = 𝔎(x − y)` is approximated by
//! `Σ_j c_j cos(⟨w_j, x⟩ + b_j) cos(⟨w_j, y⟩ + b_j)`. With random phases
//! `b_j` each term is an unbiased estimate of `(c_j/2) cos⟨w_j, x − y⟩`
//! plus a zero-mean `cos(⟨w_j, x + y⟩ + 2b_j)` fluctuation. Replacing the
//! random phase by the equispaced phases `t_k = 2πk/M₂` removes that
//! fluctuation exactly once `M₂ ≥ 3`.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kernels::{feature_matrix, Activation, ThetaParams};
use crate::linalg::dot;

/// Lattice points per axis used when none is given.
pub const DEFAULT_GRID_PER_DIM: usize = 17;

/// Smallest phase count for which the equispaced average is exact.
pub const MIN_PHASES: usize = 3;

#[derive(Clone)]
pub enum ShiftInvariantKernel {
    /// `𝔎(u) = exp(−γ uᵀu)`.
    Gaussian {
        gamma: f64,
    },
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl ShiftInvariantKernel {
    pub fn gaussian(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::input(format!("gamma must be positive, got {gamma}")));
        }
        Ok(ShiftInvariantKernel::Gaussian { gamma })
    }

    pub fn profile(&self, u: &[f64]) -> f64 {
        match self {
            ShiftInvariantKernel::Gaussian { gamma } => (-gamma * dot(u, u)).exp(),
            ShiftInvariantKernel::Custom(f) => f(u),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let u: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.profile(&u)
    }
}

impl fmt::Debug for ShiftInvariantKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShiftInvariantKernel::Gaussian { gamma } => write!(f, "Gaussian(gamma={gamma})"),
            ShiftInvariantKernel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Axis-aligned box `[lo_1, hi_1] × … × [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl CompactBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::input("box must have at least one dimension"));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::input("box bounds must be finite with lo <= hi"));
        }
        Ok(CompactBox { lo, hi })
    }

    /// The cube `[lo, hi]^d`.
    pub fn cube(lo: f64, hi: f64, d: usize) -> Result<Self> {
        CompactBox::new(vec![lo; d], vec![hi; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Tensor lattice with `per_dim` points per axis, corners included.
    pub fn lattice(&self, per_dim: usize) -> Result<Vec<Vec<f64>>> {
        if per_dim < 2 {
            return Err(Error::input("grid needs at least 2 points per dimension"));
        }
        let d = self.dim();
        let total = per_dim
            .checked_pow(d as u32)
            .ok_or_else(|| Error::input("lattice too large"))?;
        let axis = |i: usize, k: usize| {
            let t = k as f64 / (per_dim - 1) as f64;
            self.lo[i] + t * (self.hi[i] - self.lo[i])
        };
        let mut points = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut p = vec![0.0; d];
            for (i, pi) in p.iter_mut().enumerate() {
                *pi = axis(i, idx % per_dim);
                idx /= per_dim;
            }
            points.push(p);
        }
        Ok(points)
    }
}

/// Feature and phase counts of a discretized approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApproxConfig {
    pub m1: usize,
    pub m2: usize,
    pub seed: u64,
}

impl ApproxConfig {
    pub fn new(m1: usize, m2: usize, seed: u64) -> Result<Self> {
        if m1 < 1 {
            return Err(Error::input("M1 must be at least 1"));
        }
        if m2 < MIN_PHASES {
            return Err(Error::input(format!("M2 must be at least {MIN_PHASES}, got {m2}")));
        }
        Ok(ApproxConfig { m1, m2, seed })
    }
}

/// Random cosine features for the Gaussian kernel `exp(−γ‖x−y‖²)`:
/// `w_j ~ N(0, 2γ I)`, `b_j ~ U[0, 2π)`, `c_j = 2/M₁`.
pub fn sample_rr_theta(gamma: f64, m1: usize, d: usize, seed: u64) -> Result<ThetaParams> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::input(format!("gamma must be positive, got {gamma}")));
    }
    if m1 < 1 || d < 1 {
        return Err(Error::input("M1 and d must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (2.0 * gamma).sqrt()).map_err(|e| Error::input(e.to_string()))?;
    let mut w = Vec::with_capacity(m1);
    let mut b = Vec::with_capacity(m1);
    for _ in 0..m1 {
        w.push((0..d).map(|_| normal.sample(&mut rng)).collect());
        b.push(rng.random::<f64>() * TAU);
    }
    ThetaParams::new(d, vec![2.0 / m1 as f64; m1], b, w, Activation::Cosine)
}

/// `(1/M₂) Σ_{k=1}^{M₂} cos(α + t_k) cos(β + t_k)` with `t_k = 2πk/M₂`.
/// Equals `½ cos(α − β)` exactly (up to rounding) for `M₂ ≥ 3`.
pub fn phase_average(alpha: f64, beta: f64, m2: usize) -> Result<f64> {
    if m2 < MIN_PHASES {
        return Err(Error::input(format!("M2 must be at least {MIN_PHASES}, got {m2}")));
    }
    let sum: f64 = phase_nodes(m2).map(|t| (alpha + t).cos() * (beta + t).cos()).sum();
    Ok(sum / m2 as f64)
}

fn phase_nodes(m2: usize) -> impl Iterator<Item = f64> {
    (1..=m2).map(move |k| TAU * k as f64 / m2 as f64)
}

/// Expands each cosine term `(c_j, w_j, b_j)` into `M₂` terms
/// `(c_j/M₂, w_j, t_k)`; the original phases are discarded.
pub fn build_phase_discretized_kernel(base: &ThetaParams, m2: usize) -> Result<ThetaParams> {
    if !base.activation().is_cosine() {
        return Err(Error::input(format!(
            "phase discretization needs the cosine activation, got {}",
            base.activation()
        )));
    }
    if m2 < MIN_PHASES {
        return Err(Error::input(format!("M2 must be at least {MIN_PHASES}, got {m2}")));
    }
    let m = base.m();
    let mut c = Vec::with_capacity(m * m2);
    let mut b = Vec::with_capacity(m * m2);
    let mut w = Vec::with_capacity(m * m2);
    for j in 0..m {
        let cj = base.weights()[j] / m2 as f64;
        for t in phase_nodes(m2) {
            c.push(cj);
            b.push(t);
            w.push(base.frequency(j).to_vec());
        }
    }
    ThetaParams::new(base.d(), c, b, w, Activation::Cosine)
}

/// Random features followed by phase discretization.
pub fn approximate_gaussian(gamma: f64, d: usize, config: ApproxConfig) -> Result<ThetaParams> {
    let base = sample_rr_theta(gamma, config.m1, d, config.seed)?;
    build_phase_discretized_kernel(&base, config.m2)
}

/// `max |𝔎(x − y) − k(x, y | θ)|` over the tensor lattice of `(x, y)`
/// pairs in `box × box`.
pub fn sup_error(
    target: &ShiftInvariantKernel,
    theta: &ThetaParams,
    region: &CompactBox,
    grid_per_dim: usize,
) -> Result<f64> {
    if region.dim() != theta.d() {
        return Err(Error::DimensionMismatch {
            expected: theta.d(),
            found: region.dim(),
        });
    }
    let points = region.lattice(grid_per_dim)?;
    let phi = feature_matrix(theta, &points)?;
    let c = theta.weights();
    let mut worst = 0.0_f64;
    for (i, x) in points.iter().enumerate() {
        let fx = phi.row(i);
        for (j, y) in points.iter().enumerate() {
            let fy = phi.row(j);
            let mut approx = 0.0;
            for k in 0..c.len() {
                approx += c[k] * (fx[k] * fy[k]);
            }
            let err = (target.eval(x, y) - approx).abs();
            if err > worst || err.is_nan() {
                worst = err;
            }
        }
    }
    Ok(worst)
}

/// One row of an `approx-check` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxRow {
    pub m1: usize,
    pub seed: u64,
    pub sup_error: f64,
}

/// Sweep parameters for [`approx_sweep`].
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub gamma: f64,
    pub m1_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub region: CompactBox,
    pub grid_per_dim: usize,
    /// `None` keeps the random phases; `Some(M₂)` discretizes them.
    pub phases: Option<usize>,
}

/// Sup error of the Gaussian approximation for every `(M₁, seed)` pair.
pub fn approx_sweep(spec: &SweepSpec) -> Result<Vec<ApproxRow>> {
    let target = ShiftInvariantKernel::gaussian(spec.gamma)?;
    let d = spec.region.dim();
    let mut rows = Vec::with_capacity(spec.m1_list.len() * spec.seeds.len());
    for &m1 in &spec.m1_list {
        for &seed in &spec.seeds {
            let base = sample_rr_theta(spec.gamma, m1, d, seed)?;
            let theta = match spec.phases {
                Some(m2) => build_phase_discretized_kernel(&base, m2)?,
                None => base,
            };
            let sup_error = sup_error(&target, &theta, &spec.region, spec.grid_per_dim)?;
            rows.push(ApproxRow { m1, seed, sup_error });
        }
    }
    Ok(rows)
}

pub fn write_approx_csv<W: Write>(rows: &[ApproxRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "M1,seed,sup_error")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.m1, r.seed, r.sup_error)?;
    }
    Ok(())
}

/// Median of the sup errors recorded for `m1`.
pub fn median_sup_error(rows: &[ApproxRow], m1: usize) -> Option<f64> {
    let errs: Vec<f64> = rows.iter().filter(|r| r.m1 == m1).map(|r| r.sup_error).collect();
    crate::stats::median(&errs)
}
