//! Tensor-train cross interpolation: maxvol, matrix skeletons, and greedy
//! TT cross builders with quasioptimality diagnostics.

pub mod cross;
pub mod dense;
pub mod error;
pub mod index;
pub mod lu;
pub mod maxvol;
pub mod oracle;
pub mod rng;
pub mod skeleton;
pub mod svd;
pub mod tt;

pub use cross::{
    check_nestedness, cross_evaluate, cross_to_tt, distinct_entries, greedy_global, greedy_restricted,
    interpolation_residual_on_blocks, measure_kappa, parameter_count, quasiopt_ratio, thm1_bound, CrossFactorization,
    GlobalConfig, NestedCrossSets, PivotStrategy, RestrictedConfig, StopReason, SupercoreUpdate, TraceEntry,
};
pub use dense::{DenseTensor, Unfolding, DEFAULT_DENSE_LIMIT};
pub use error::{Result, TtError};
pub use index::{MultiIndex, Shape};
pub use lu::{PivotedLu, MACHINE_NULL};
pub use maxvol::{maxvol_2d, maxvol_rows, IndexSet, DEFAULT_DELTA, DEFAULT_SWEEP_LIMIT};
pub use oracle::{
    estimate_chebyshev, estimate_frobenius, inverse_norm, residual_oracle, NoisyTTOracle, Oracle, OracleStats,
    Sampling, TensorOracle,
};
pub use skeleton::{
    matrix_cross_adaptive, skeleton_interpolate, AdaptiveCrossConfig, CrossSkeleton, EntryAccess, FnAccess,
};
pub use svd::{tt_svd, Truncation};
pub use tt::{Core, TensorTrain};
