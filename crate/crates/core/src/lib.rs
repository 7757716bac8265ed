//! LP-based branch-and-bound for mixed-integer programs with conflict-graph
//! analysis, Farkas proof constraints and a conflict pool.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix the scalar to `f64`.

pub mod bench;
pub mod confgraph;
pub mod dualproof;
pub mod lp;
pub mod model;
pub mod pool;
pub mod propagate;
pub mod scalar;
pub mod search;

pub use scalar::Scalar;
pub use search::{solve, Mode, SolveStatus};

pub type Model = model::MipModel<f64>;
pub type Bounds = model::LocalBounds<f64>;
pub type Tolerances = scalar::Tolerances<f64>;
pub type Settings = search::Settings<f64>;
pub type SolveResult = search::SolveResult<f64>;
pub type FarkasRay = lp::FarkasRay<f64>;
pub type Journal = propagate::BoundJournal<f64>;
pub type ConflictConstraint = confgraph::ConflictConstraint<f64>;
pub type ProofConstraint = dualproof::ProofConstraint<f64>;
pub type ConflictPool = pool::ConflictPool<f64>;
