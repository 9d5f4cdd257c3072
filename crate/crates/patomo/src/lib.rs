//! 2D photoacoustic tomography reconstruction toolkit.
//!
//! The crate assembles the discretized circular-mean forward operator as
//! an explicit sparse matrix, reconstructs with a modular first-order
//! primal-dual solver (exchangeable TV / second-order TGV / dual-tree
//! complex wavelet regularizers), and provides filtered backprojection
//! and Tikhonov least-squares baselines, the full synthetic acquisition
//! and preprocessing chain, digital phantoms, and PSNR/ROC evaluation.

pub mod direct;
pub mod dtcwt;
pub mod error;
pub mod field;
pub mod geometry;
pub mod metrics;
pub mod operator;
pub mod phantom;
pub mod signal;
pub mod solver;
pub mod transforms;

pub use error::{PatError, Result};
pub use field::{Image, SymTensorField, VectorField};
pub use geometry::{
    apply_rotation_schedule, build_arc_detectors, AcousticConfig, ArcProvenance, DetectorSet,
    ImageGrid, TimeSampling,
};
pub use operator::{
    apply, apply_adjoint, assemble_k, assemble_k_with, estimate_norm, LinearOperator, Quadrature,
    SparseOperator,
};
