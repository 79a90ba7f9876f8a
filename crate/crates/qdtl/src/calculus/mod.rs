//! The proof calculus: rule catalog, script replay, proof search, and the
//! supporting machinery (substitution, total derivations, ODE solutions,
//! the monitor transformation, and the arithmetic oracle).

pub mod check;
pub mod derive;
pub mod monitor;
pub mod oracle;
pub mod rules;
pub mod solution;
pub mod subst;
pub mod tactic;
