//! Exact real arithmetic: polynomial normalization and the three-valued
//! validity oracle used to close ℝ leaves of proofs.

pub mod decide;
pub mod poly;
pub mod solver;
