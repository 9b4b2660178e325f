//! Training-loss minimization over θ.
//!
//! The search runs in a flat parameter vector `(c₁..c_m, b₁..b_m, w₁..w_m)`
//! with a two-loop limited-memory BFGS update, backtracking Armijo line
//! search and central finite-difference gradients. With positivity on, the
//! first block holds `ρ_j` and `c_j = ρ_j²`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernels::{feature_matrix, gram_from_features, Activation, ThetaParams};
use crate::krr::{closed_form_loss, neumann_loss_with_norm, RegularizedProblem};
use crate::linalg::{dot, symmetric_eigen, Matrix};

/// Loss evaluated by the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// `λ yᵀ(K + λN I)⁻¹ y` through the QR solve.
    ClosedFormQr,
    /// Neumann truncation of the given order.
    Neumann(usize),
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossMode::ClosedFormQr => write!(f, "qr"),
            LossMode::Neumann(l) => write!(f, "neumann(L={l})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimConfig {
    /// Number of ridge terms.
    pub m: usize,
    pub activation: Activation,
    pub max_iters: usize,
    /// Relative finite-difference step: `h = grad_eps · (1 + |p|)`.
    pub grad_eps: f64,
    /// Stop once an accepted step decreases the loss by less than this.
    pub tol: f64,
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub loss_mode: LossMode,
    /// Search over `ρ` with `c = ρ²`.
    pub positivity: bool,
    /// In Neumann mode, shrink the initial weights until `‖K‖ ≤ margin · λN`
    /// before starting, so that the search starts inside the convergence
    /// region. `None` starts from the raw draw.
    pub neumann_start_margin: Option<f64>,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            m: 2,
            activation: Activation::Cosine,
            max_iters: 100,
            grad_eps: 1e-6,
            tol: 1e-10,
            memory: 10,
            loss_mode: LossMode::ClosedFormQr,
            positivity: true,
            neumann_start_margin: Some(0.5),
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::input("m must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be at least 1"));
        }
        if !(self.grad_eps > 0.0) {
            return Err(Error::input("grad_eps must be positive"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::input("tol must be nonnegative"));
        }
        if self.memory == 0 {
            return Err(Error::input("memory must be at least 1"));
        }
        if let Some(margin) = self.neumann_start_margin {
            if !(margin > 0.0 && margin < 1.0) {
                return Err(Error::input("neumann_start_margin must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    fn lbfgs_settings(&self) -> LbfgsSettings {
        LbfgsSettings {
            max_iters: self.max_iters,
            grad_eps: self.grad_eps,
            tol: self.tol,
            memory: self.memory,
        }
    }
}

/// θ packed as `(c₁..c_m, b₁..b_m, w₁..w_m)`, length `m(2+d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatTheta {
    m: usize,
    d: usize,
    values: Vec<f64>,
}

impl FlatTheta {
    pub fn from_values(m: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != m * (2 + d) {
            return Err(Error::DimensionMismatch {
                expected: m * (2 + d),
                found: values.len(),
            });
        }
        Ok(FlatTheta { m, d, values })
    }

    pub fn pack(theta: &ThetaParams) -> Self {
        let mut values = Vec::with_capacity(theta.m() * (2 + theta.d()));
        values.extend_from_slice(theta.weights());
        values.extend_from_slice(theta.phases());
        for w in theta.frequencies() {
            values.extend_from_slice(w);
        }
        FlatTheta {
            m: theta.m(),
            d: theta.d(),
            values,
        }
    }

    pub fn unpack(&self, activation: Activation) -> Result<ThetaParams> {
        let (m, d) = (self.m, self.d);
        let c = self.values[..m].to_vec();
        let b = self.values[m..2 * m].to_vec();
        let w = self.values[2 * m..].chunks(d).map(<[f64]>::to_vec).collect();
        ThetaParams::new(d, c, b, w, activation)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.values[..self.m]
    }

    /// Optimizer coordinates: identical to the packing, except that the
    /// weights become `ρ_j = √c_j` when `positivity` is set.
    pub fn to_search(&self, positivity: bool) -> Result<Vec<f64>> {
        let mut v = self.values.clone();
        if positivity {
            for (j, c) in v[..self.m].iter_mut().enumerate() {
                if *c < 0.0 {
                    return Err(Error::input(format!("weight c[{j}] = {c} is negative")));
                }
                *c = c.sqrt();
            }
        }
        Ok(v)
    }

    pub fn from_search(m: usize, d: usize, v: &[f64], positivity: bool) -> Result<Self> {
        let mut flat = FlatTheta::from_values(m, d, v.to_vec())?;
        if positivity {
            for c in &mut flat.values[..m] {
                *c = *c * *c;
            }
        }
        Ok(flat)
    }
}

/// Random starting point: `c_j ~ U(0,1)` (open interval), `b_j ~ N(0,1)`,
/// `w_ij ~ N(0,1)`. The activation is not part of the draw.
pub fn init_theta(m: usize, d: usize, seed: u64) -> Result<FlatTheta> {
    if m == 0 || d == 0 {
        return Err(Error::input("init_theta needs m >= 1 and d >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(m * (2 + d));
    for _ in 0..m {
        let mut c: f64 = rng.random();
        while c == 0.0 {
            c = rng.random();
        }
        values.push(c);
    }
    for _ in 0..m * (1 + d) {
        values.push(StandardNormal.sample(&mut rng));
    }
    FlatTheta::from_values(m, d, values)
}

/// Training loss of θ on a fixed sample.
#[derive(Debug, Clone)]
pub struct Objective<'a, P> {
    points: &'a [P],
    y: &'a [f64],
    lambda: f64,
    activation: Activation,
    mode: LossMode,
}

impl<'a, P: AsRef<[f64]>> Objective<'a, P> {
    pub fn new(points: &'a [P], y: &'a [f64], lambda: f64, activation: Activation, mode: LossMode) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::input("objective needs a nonempty sample"));
        }
        if points.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: y.len(),
            });
        }
        if !(lambda > 0.0) {
            return Err(Error::input(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Objective {
            points,
            y,
            lambda,
            activation,
            mode,
        })
    }

    pub fn lambda_n(&self) -> f64 {
        self.lambda * self.y.len() as f64
    }

    /// Loss at θ. In Neumann mode a violated convergence condition is
    /// returned as [`Error::NeumannDivergence`].
    pub fn eval(&self, flat: &FlatTheta) -> Result<f64> {
        let theta = flat.unpack(self.activation.clone())?;
        let phi = feature_matrix(&theta, self.points)?;
        let k = gram_from_features(theta.weights(), &phi);
        let problem = RegularizedProblem::new(k, self.y.to_vec(), self.lambda)?;
        match self.mode {
            LossMode::ClosedFormQr => closed_form_loss(&problem),
            LossMode::Neumann(order) => {
                let norm = low_rank_spectral_norm(theta.weights(), &phi)?;
                neumann_loss_with_norm(&problem, order, norm)
            }
        }
    }

    /// `‖K‖` at θ.
    pub fn spectral_norm(&self, flat: &FlatTheta) -> Result<f64> {
        let theta = flat.unpack(self.activation.clone())?;
        let phi = feature_matrix(&theta, self.points)?;
        low_rank_spectral_norm(theta.weights(), &phi)
    }
}

/// Free-function form of [`Objective::eval`].
pub fn objective<P: AsRef<[f64]>>(
    flat: &FlatTheta,
    points: &[P],
    y: &[f64],
    lambda: f64,
    activation: Activation,
    mode: LossMode,
) -> Result<f64> {
    Objective::new(points, y, lambda, activation, mode)?.eval(flat)
}

/// `‖Φ C Φᵀ‖₂` from the m×m matrix `S^{1/2} C S^{1/2}`, `S = ΦᵀΦ`, which
/// carries the same nonzero spectrum as the N×N Gram matrix.
pub fn low_rank_spectral_norm(c: &[f64], phi: &Matrix) -> Result<f64> {
    let m = c.len();
    if phi.cols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: phi.cols(),
        });
    }
    let s = phi.transpose().matmul(phi);
    let eig = symmetric_eigen(&s)?;
    let mut root = Matrix::zeros(m, m);
    for (k, ev) in eig.values.iter().enumerate() {
        let u = eig.vector(k);
        let r = ev.max(0.0).sqrt();
        for i in 0..m {
            for j in 0..m {
                root[(i, j)] += r * u[i] * u[j];
            }
        }
    }
    let core = Matrix::from_fn(m, m, |i, j| (0..m).map(|k| root[(i, k)] * c[k] * root[(k, j)]).sum());
    // symmetrize rounding so the eigensolver accepts it
    let core = Matrix::from_fn(m, m, |i, j| 0.5 * (core[(i, j)] + core[(j, i)]));
    let eig = symmetric_eigen(&core)?;
    Ok(eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Termination state of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    /// An accepted step decreased the loss by less than `tol`.
    Converged,
    MaxIters,
    /// No step was ever accepted (or the start itself was infeasible).
    NoProgress,
    /// The line search ended because every trial point left the region
    /// where the loss is defined.
    Diverged,
    LineSearchFailed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIters => "max-iters",
            RunStatus::NoProgress => "no-progress",
            RunStatus::Diverged => "diverged",
            RunStatus::LineSearchFailed => "line-search-failed",
        }
    }

    /// Whether this is one of the failure states reported as a failed run.
    pub fn is_failure(self) -> bool {
        matches!(self, RunStatus::NoProgress | RunStatus::Diverged)
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "converged" => RunStatus::Converged,
            "max-iters" => RunStatus::MaxIters,
            "no-progress" => RunStatus::NoProgress,
            "diverged" => RunStatus::Diverged,
            "line-search-failed" => RunStatus::LineSearchFailed,
            other => return Err(Error::input(format!("unknown run status '{other}'"))),
        })
    }
}

/// One accepted iterate (iteration 0 is the start).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub loss: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsSettings {
    pub max_iters: usize,
    pub grad_eps: f64,
    pub tol: f64,
    pub memory: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        let c = OptimConfig::default();
        c.lbfgs_settings()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub loss: f64,
    pub initial_loss: f64,
    pub status: RunStatus,
    pub iterations: usize,
    pub evaluations: usize,
    /// Trial points rejected because the loss was undefined there.
    pub rejected: usize,
    pub trace: Vec<TraceRow>,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

/// Central finite-difference gradient with step `eps·(1+|x_i|)`. When one
/// side is undefined (non-finite), falls back to the one-sided quotient.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], fx: f64, eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = eps * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => 0.0,
        };
    }
    g
}

/// Limited-memory BFGS on a function that returns `+∞` (or NaN) where it
/// is undefined. Undefined trial points are rejected by the line search.
pub fn lbfgs<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], settings: &LbfgsSettings) -> LbfgsResult {
    let mut counted = Counted {
        f,
        evaluations: 0,
        rejected: 0,
    };

    let mut x = x0.to_vec();
    let mut fx = counted.call(&x);
    let initial_loss = fx;
    let mut trace = vec![TraceRow {
        iteration: 0,
        loss: fx,
        step: 0.0,
    }];
    if !fx.is_finite() {
        return LbfgsResult {
            x,
            loss: fx,
            initial_loss,
            status: RunStatus::NoProgress,
            iterations: 0,
            evaluations: counted.evaluations,
            rejected: counted.rejected,
            trace,
        };
    }

    let mut g = counted.gradient(&x, fx, settings.grad_eps);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut status = RunStatus::MaxIters;
    let mut accepted = 0usize;

    for iter in 1..=settings.max_iters {
        let mut dir = two_loop(&g, &s_hist, &y_hist);
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            if !(slope < 0.0) {
                status = RunStatus::Converged;
                break;
            }
        }

        let mut t = 1.0;
        let mut next = None;
        let mut saw_undefined = false;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let ft = counted.call(&trial);
            if !ft.is_finite() {
                saw_undefined = true;
            } else if ft <= fx + ARMIJO_C1 * t * slope {
                next = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_)) = next else {
            status = if saw_undefined {
                RunStatus::Diverged
            } else {
                RunStatus::LineSearchFailed
            };
            break;
        };

        let gn = counted.gradient(&xn, fn_, settings.grad_eps);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &yv) > 1e-12 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() {
            s_hist.push(s);
            y_hist.push(yv);
            if s_hist.len() > settings.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        } else {
            // negative curvature along the step: the stored pairs no longer
            // describe the local model, so start over from the gradient
            s_hist.clear();
            y_hist.clear();
        }
        let decrease = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        accepted += 1;
        trace.push(TraceRow {
            iteration: iter,
            loss: fx,
            step: t,
        });
        if decrease < settings.tol {
            status = RunStatus::Converged;
            break;
        }
    }
    if accepted == 0 && status != RunStatus::Diverged && status != RunStatus::Converged {
        status = RunStatus::NoProgress;
    }
    LbfgsResult {
        x,
        loss: fx,
        initial_loss,
        status,
        iterations: accepted,
        evaluations: counted.evaluations,
        rejected: counted.rejected,
        trace,
    }
}

struct Counted<F> {
    f: F,
    evaluations: usize,
    rejected: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            self.rejected += 1;
            f64::INFINITY
        }
    }

    fn gradient(&mut self, x: &[f64], fx: f64, eps: f64) -> Vec<f64> {
        fd_gradient(&mut |p: &[f64]| self.call(p), x, fx, eps)
    }
}

fn two_loop(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(s_hist.len());
    for (s, y) in s_hist.iter().zip(y_hist).rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push((a, rho));
    }
    if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y), (a, rho)) in s_hist.iter().zip(y_hist).zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += si * (a - b));
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Result of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimOutcome {
    pub seed: u64,
    pub theta: ThetaParams,
    pub loss: f64,
    pub initial_loss: f64,
    pub status: RunStatus,
    pub iterations: usize,
    pub evaluations: usize,
    /// Trial points rejected by the Neumann divergence guard.
    pub divergences: usize,
    pub trace: Vec<TraceRow>,
}

impl OptimOutcome {
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,loss,step,status")?;
        let last = self.trace.len().saturating_sub(1);
        for (i, row) in self.trace.iter().enumerate() {
            let status = if i == last { self.status.as_str() } else { "accepted" };
            writeln!(out, "{},{},{},{}", row.iteration, row.loss, row.step, status)?;
        }
        Ok(())
    }
}

/// Minimizes the training loss from the random start drawn with `seed`.
pub fn minimize<P: AsRef<[f64]>>(
    points: &[P],
    y: &[f64],
    lambda: f64,
    config: &OptimConfig,
    seed: u64,
) -> Result<OptimOutcome> {
    config.validate()?;
    let d = points
        .first()
        .map(|p| p.as_ref().len())
        .ok_or_else(|| Error::input("minimize needs a nonempty sample"))?;
    let obj = Objective::new(points, y, lambda, config.activation.clone(), config.loss_mode)?;
    let mut start = init_theta(config.m, d, seed)?;
    if let (LossMode::Neumann(_), Some(margin)) = (config.loss_mode, config.neumann_start_margin) {
        start = shrink_into_neumann_region(&obj, start, margin)?;
    }
    minimize_from(&obj, &start, config, seed)
}

/// Runs the search from a given starting θ.
pub fn minimize_from<P: AsRef<[f64]>>(
    obj: &Objective<'_, P>,
    start: &FlatTheta,
    config: &OptimConfig,
    seed: u64,
) -> Result<OptimOutcome> {
    config.validate()?;
    let (m, d) = (start.m(), start.d());
    let positivity = config.positivity;
    let mut divergences = 0usize;
    let mut hard_error = None;
    let x0 = start.to_search(positivity)?;
    let result = lbfgs(
        |v: &[f64]| {
            let flat = match FlatTheta::from_search(m, d, v, positivity) {
                Ok(f) => f,
                Err(e) => {
                    hard_error.get_or_insert(e);
                    return f64::INFINITY;
                }
            };
            match obj.eval(&flat) {
                Ok(l) => l,
                Err(Error::NeumannDivergence { .. }) => {
                    divergences += 1;
                    f64::INFINITY
                }
                // a singular system or non-finite θ is also a rejected trial
                Err(Error::SingularPivot { .. }) | Err(Error::InvalidInput(_)) => f64::INFINITY,
                Err(e) => {
                    hard_error.get_or_insert(e);
                    f64::INFINITY
                }
            }
        },
        &x0,
        &config.lbfgs_settings(),
    );
    if let Some(e) = hard_error {
        return Err(e);
    }
    let flat = FlatTheta::from_search(m, d, &result.x, positivity)?;
    let mut theta = flat.unpack(config.activation.clone())?;
    if positivity {
        theta = theta.with_nonnegative_weights()?;
    }
    Ok(OptimOutcome {
        seed,
        theta,
        loss: result.loss,
        initial_loss: result.initial_loss,
        status: result.status,
        iterations: result.iterations,
        evaluations: result.evaluations,
        divergences,
        trace: result.trace,
    })
}

const MAX_SHRINKS: usize = 200;

/// Halves the weights until `‖K‖ ≤ margin · λN`.
pub fn shrink_into_neumann_region<P: AsRef<[f64]>>(
    obj: &Objective<'_, P>,
    mut flat: FlatTheta,
    margin: f64,
) -> Result<FlatTheta> {
    let target = margin * obj.lambda_n();
    for _ in 0..MAX_SHRINKS {
        if obj.spectral_norm(&flat)? <= target {
            break;
        }
        for c in &mut flat.values[..flat.m] {
            *c *= 0.5;
        }
    }
    Ok(flat)
}

/// Independent runs over several seeds; the lowest finite loss wins, ties
/// going to the earlier seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartOutcome {
    pub runs: Vec<OptimOutcome>,
    pub best: usize,
}

impl MultiStartOutcome {
    pub fn best_run(&self) -> &OptimOutcome {
        &self.runs[self.best]
    }
}

pub fn minimize_multistart<P: AsRef<[f64]>>(
    points: &[P],
    y: &[f64],
    lambda: f64,
    config: &OptimConfig,
    seeds: &[u64],
) -> Result<MultiStartOutcome> {
    if seeds.is_empty() {
        return Err(Error::input("multi-start needs at least one seed"));
    }
    let runs = seeds
        .iter()
        .map(|&s| minimize(points, y, lambda, config, s))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        let b = &runs[best];
        if r.loss < b.loss || (!b.loss.is_finite() && r.loss.is_finite()) {
            best = i;
        }
    }
    Ok(MultiStartOutcome { runs, best })
}
