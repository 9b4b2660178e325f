//! Ridge-function kernel machines: cosine and ReLU ridge kernels, random
//! feature approximation of shift-invariant kernels, kernel ridge
//! regression with closed-form and Neumann-truncated losses, feature
//! parameter optimization, positive semidefiniteness checks, exact
//! polynomial membership tests and a one-vs-rest classification pipeline.

pub mod error;
pub mod kernels;
pub mod krr;
pub mod linalg;
pub mod mercer;
pub mod optim;
pub mod pipeline;
pub mod ridgepoly;
pub mod shift_approx;
pub mod stats;

mod record;

pub use error::{Error, Result};
pub use kernels::{eval_kernel, gram, Activation, CustomActivation, GramMatrix, ThetaParams};
pub use krr::{
    closed_form_loss, direct_loss, fit, neumann_loss, predict, spectral_norm, FittedModel, RegularizedProblem,
};
pub use linalg::Matrix;
pub use mercer::{frame_condition, SignedFeatureModel};
pub use optim::{init_theta, minimize, FlatTheta, LossMode, OptimConfig, OptimOutcome, RunStatus};
pub use pipeline::{Dataset, OvrModel, PcaResult, StandardizeStats};
pub use ridgepoly::{MPoly, MultiIndex};
pub use shift_approx::{ApproxConfig, CompactBox, ShiftInvariantKernel};
