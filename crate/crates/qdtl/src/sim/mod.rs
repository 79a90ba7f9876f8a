//! Numeric trace simulator: an independent semantic oracle for the proof
//! calculus, plus the seeded random falsifier.

pub mod falsify;
pub mod integrate;
pub mod run;
pub mod state;
