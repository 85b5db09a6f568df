//! Fixed-budget streaming Gaussian-process models with deterministic error
//! bounds, and a closed-form control-barrier-function safety filter that
//! consumes them.
//!
//! Everything is generic over the scalar type (`f32` or `f64`). The aliases
//! at the crate root fix the common `f64` case.

pub mod blend;
pub mod cbf;
pub mod error;
pub mod gp_batch;
pub mod gp_stream;
pub mod kernel;
pub mod linalg;
pub mod scalar;
pub mod snapshot;

pub use blend::{xi, xi_derivative, BlendSchedule, BlendedModel, Estimator};
pub use cbf::{
    constraint_psi, filter, filter_terms, softmin, softmin_gradient, softmin_weights, AffineBarrier, Barrier,
    BarrierSpec, ClassK, ConstraintTerms, ControlAffine, CurvedBarrier, DriftJacobian, FilterParams, FilterResult,
    HocbfLift, SoftMin,
};
pub use error::{Error, Result};
pub use gp_batch::{BatchModel, BoundFactor, BoundedEstimate};
pub use gp_stream::{
    DirectState, ModelConfig, Partition, RecomputingModel, StreamingModel, UpdateReport, VarsigmaRule,
};
pub use kernel::{gram_matrix, kernel_eval, kernel_vector, regularized_gram, Kernel, KernelParams};
pub use linalg::{Cholesky, DenseMatrix};
pub use scalar::Scalar;

pub type Matrix = DenseMatrix<f64>;
pub type Model = StreamingModel<f64>;
pub type Batch = BatchModel<f64>;
pub type Config = ModelConfig<f64>;
pub type Estimate = BoundedEstimate<f64>;
pub type Kern = KernelParams<f64>;
pub type Filter = FilterParams<f64>;
pub type Blended = BlendedModel<f64, StreamingModel<f64>>;
