//! TT cross interpolation on nested index sets.

mod factorization;
mod greedy;
mod quasiopt;
mod restricted;
mod sets;

pub use factorization::{
    cross_evaluate, cross_to_tt, distinct_entries, interpolation_residual_on_blocks, parameter_count,
    CrossFactorization, Direction, StopReason, TraceEntry,
};
pub use greedy::{greedy_global, GlobalConfig, PivotStrategy};
pub use quasiopt::{
    measure_kappa, quasiopt_ratio, quasiopt_ratio_noisy, quasiopt_ratio_sampled, thm1_bound, Thm1Bound,
};
pub use restricted::{greedy_restricted, RestrictedConfig, SupercoreUpdate};
pub use sets::{check_nestedness, NestedCrossSets, NestednessReport, Side, Violation};
