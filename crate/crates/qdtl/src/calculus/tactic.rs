//! A small deterministic proof search: repeatedly apply the first safe rule
//! that matches.  Safe rules are the ones that never lose provability and
//! need no arguments: propositional splitting, the program and temporal
//! equivalence rewrites, assignment and solvable-evolution elimination, and
//! the arithmetic oracle as a last resort.

use crate::calculus::rules::{apply_rule, Applied, ProofCtx};
use crate::parser::{Span, Step};
use crate::syntax::Sequent;

/// Rules tried by `auto`, in priority order.  Invariant/variant rules,
/// cuts, quantifier instantiations and the strengthening loop rules are
/// deliberately absent: they either need arguments or can lose provability.
pub const AUTO_RULES: &[&str] = &[
    "ax",
    "ex",
    "andl",
    "impr",
    "notr",
    "notl",
    "orr",
    "andr",
    "orl",
    "impl",
    "todebox",
    "todedia",
    "ttestbox",
    "ttestdia",
    "tassignbox",
    "tassigndia",
    "tseqbox",
    "tseqdia",
    "choicebox",
    "choicedia",
    "seqbox",
    "seqdia",
    "testbox",
    "testdia",
    "skip",
    "assignbox",
    "assigndia",
    "varassign",
    "odesolve",
    "oracle",
];

fn probe_step(rule: &str) -> Step {
    Step {
        rule: rule.to_string(),
        args: Vec::new(),
        pos: None,
        children: None,
        span: Span { start: 0, end: 0, line: 0, col: 0 },
    }
}

/// One step of proof search: the first applicable safe rule, or `None` when
/// the goal is stuck.
pub fn auto_step(ctx: &mut ProofCtx, goal: &Sequent) -> Option<(&'static str, Applied)> {
    for rule in AUTO_RULES {
        if let Ok(applied) = apply_rule(ctx, goal, &probe_step(rule)) {
            return Some((rule, applied));
        }
    }
    None
}

/// Catalog rules that would apply to a stuck goal; used for diagnostics.
pub fn suggestions(ctx: &ProofCtx, goal: &Sequent) -> Vec<String> {
    let mut out = Vec::new();
    for (rule, _) in crate::calculus::rules::CATALOG {
        if matches!(*rule, "oracle" | "iall" | "cut" | "iex") {
            continue;
        }
        let mut probe = ctx.clone();
        match apply_rule(&mut probe, goal, &probe_step(rule)) {
            Ok(Applied::OpenOracle(_)) => {}
            Ok(_) => out.push(rule.to_string()),
            Err(_) => {}
        }
        if out.len() >= 6 {
            break;
        }
    }
    out
}
