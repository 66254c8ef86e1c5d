//! Sketched CP-ALS and tensor-train rounding sketches.

pub mod cp;
pub mod tt;

pub use cp::{
    als_reference, cp_full, cp_iteration_model, cp_residual, cp_sketch_size, cp_subproblem_trees, cp_synthetic,
    exact_subproblem, least_squares, random_factors, sketched_cp_als, subproblem_residual, CpLedger, CpResult,
    CpSketch, CpState, SweepLedger,
};
pub use tt::{tt_add, tt_round_sketch, tt_round_svd, TensorTrain, TtLedger, TtRoundSketch, TtSketch};
