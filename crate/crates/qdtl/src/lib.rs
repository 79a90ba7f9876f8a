//! Proof checker and semi-automated prover for a quantified differential
//! temporal dynamic logic, with a numeric trace simulator serving as an
//! independent semantic test oracle.

pub mod arith;
pub mod calculus;
pub mod cli;
pub mod corpus;
pub mod parser;
pub mod printer;
pub mod sim;
pub mod syntax;

/// Run a map over items, in parallel when the `parallel` feature is enabled
/// and `jobs != 1`. Results always come back in input order.
pub fn par_map<T, U, F>(items: Vec<T>, jobs: usize, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if jobs != 1 {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
    }
    let _ = jobs;
    items.into_iter().map(f).collect()
}
