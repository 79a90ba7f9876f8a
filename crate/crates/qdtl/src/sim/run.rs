//! Trace-set sampler and reachability sampler for programs, plus formula
//! evaluation over simulation states and hybrid traces.
//!
//! Both program semantics are implemented as structurally mirrored
//! recursions that branch in the same order and draw from the random number
//! generator at exactly the same points, so their outcomes line up pairwise:
//! the k-th reachability outcome is the (first, last) state pair of the k-th
//! trace whenever that trace terminates. The samplers are deliberately
//! incomplete — they enumerate choices and loop unrollings up to a budget
//! and sample ODE durations — so a "no counterexample" answer is evidence,
//! not proof.

use super::integrate::{sample_ode, OdeOutcome};
use super::state::{FlowSegment, HybridTrace, SimState, Value};
use crate::syntax::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Debug)]
pub struct SimCfg {
    /// RK4 grid step.
    pub step: f64,
    /// Loop unrolling bound.
    pub loop_bound: usize,
    /// Randomly sampled durations per differential equation occurrence.
    pub ode_durations: usize,
    /// Upper bound for sampled ODE durations.
    pub max_duration: f64,
    /// Cap on enumerated traces / reachability outcomes per program.
    pub branch_budget: usize,
    /// Comparison tolerance for real equality and ≥.
    pub eps: f64,
}

impl Default for SimCfg {
    fn default() -> Self {
        SimCfg {
            step: 1e-3,
            loop_bound: 3,
            ode_durations: 3,
            max_duration: 2.0,
            branch_budget: 64,
            eps: 1e-9,
        }
    }
}

pub struct SimCtx<'a> {
    pub sig: &'a Signature,
    pub cfg: &'a SimCfg,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("cannot simulate: {0}")]
    Unsupported(String),
}

type SResult<T> = Result<T, SimError>;

fn unsupported<T>(msg: impl Into<String>) -> SResult<T> {
    Err(SimError::Unsupported(msg.into()))
}

/// Real-valued grid used to sample quantifiers over ℝ.
const REAL_GRID: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

// ---------------------------------------------------------------------------
// term and first-order formula evaluation

pub fn eval_term(ctx: &SimCtx<'_>, st: &SimState, t: &Term) -> SResult<Value> {
    match t {
        Term::Var(v) => st
            .vars
            .get(v)
            .copied()
            .ok_or_else(|| SimError::Unsupported(format!("unbound variable `{v}`"))),
        Term::Num(r) => {
            let n: f64 = rat_to_f64(r);
            Ok(Value::R(n))
        }
        Term::App(f, args) if is_builtin_arith(f) => {
            let vals: Vec<f64> = args
                .iter()
                .map(|a| eval_term(ctx, st, a).map(|v| v.as_f64()))
                .collect::<SResult<_>>()?;
            Ok(Value::R(match f.as_str() {
                "+" => vals[0] + vals[1],
                "-" => vals[0] - vals[1],
                "*" => vals[0] * vals[1],
                "neg" => -vals[0],
                _ => unreachable!(),
            }))
        }
        Term::App(f, args) => {
            let ids = object_args(ctx, st, f, args)?;
            Ok(st.get(ctx.sig, f, &ids))
        }
        Term::DiffApp(..) => unsupported("differential symbols have no value in discrete states"),
        Term::Cond(c, a, b) => {
            if eval_fo_formula(ctx, st, c)? {
                eval_term(ctx, st, a)
            } else {
                eval_term(ctx, st, b)
            }
        }
    }
}

/// Evaluate argument terms; interpretation tables are indexed by object
/// tuples, so real-valued arguments to user symbols are not simulable.
pub fn object_args(
    ctx: &SimCtx<'_>,
    st: &SimState,
    f: &str,
    args: &[Term],
) -> SResult<Vec<usize>> {
    args.iter()
        .map(|a| match eval_term(ctx, st, a)? {
            Value::Obj(o) => Ok(o),
            Value::R(_) => unsupported(format!("real-valued argument to `{f}`")),
        })
        .collect()
}

/// First-order (modality-free) formula evaluation.
pub fn eval_fo_formula(ctx: &SimCtx<'_>, st: &SimState, phi: &StateFormula) -> SResult<bool> {
    match phi {
        StateFormula::True => Ok(true),
        StateFormula::False => Ok(false),
        StateFormula::Eq(a, b) => {
            let (va, vb) = (eval_term(ctx, st, a)?, eval_term(ctx, st, b)?);
            Ok(match (va, vb) {
                (Value::R(x), Value::R(y)) => (x - y).abs() <= ctx.cfg.eps,
                (Value::Obj(x), Value::Obj(y)) => x == y,
                _ => return unsupported("equality across sorts"),
            })
        }
        StateFormula::Geq(a, b) => {
            let x = eval_term(ctx, st, a)?.as_f64();
            let y = eval_term(ctx, st, b)?.as_f64();
            Ok(x >= y - ctx.cfg.eps)
        }
        StateFormula::Not(a) => Ok(!eval_fo_formula(ctx, st, a)?),
        StateFormula::And(a, b) => {
            Ok(eval_fo_formula(ctx, st, a)? && eval_fo_formula(ctx, st, b)?)
        }
        StateFormula::Forall(b, body) => {
            for v in quantifier_range(ctx, st, &b.sort) {
                let mut st2 = st.clone();
                st2.vars.insert(b.var.clone(), v);
                if !eval_fo_formula(ctx, &st2, body)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        StateFormula::Exists(b, body) => {
            for v in quantifier_range(ctx, st, &b.sort) {
                let mut st2 = st.clone();
                st2.vars.insert(b.var.clone(), v);
                if eval_fo_formula(ctx, &st2, body)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        StateFormula::Box_(..) | StateFormula::Dia(..) => {
            unsupported("modality in a first-order position")
        }
    }
}

pub fn quantifier_range(_ctx: &SimCtx<'_>, st: &SimState, sort: &str) -> Vec<Value> {
    if sort == REAL {
        REAL_GRID.iter().map(|x| Value::R(*x)).collect()
    } else {
        (0..st.pool(sort)).map(Value::Obj).collect()
    }
}

// ---------------------------------------------------------------------------
// discrete transitions shared by both program semantics

/// New states reached by a (possibly quantified) simultaneous assignment.
/// Conflicting writes to one location enumerate the alternatives, capped by
/// the branch budget.
fn assign_states(
    ctx: &SimCtx<'_>,
    st: &SimState,
    binder: &Option<Binder>,
    items: &[AssignItem],
) -> SResult<Vec<SimState>> {
    use std::collections::BTreeMap;
    let mut writes: BTreeMap<(String, Vec<usize>), Vec<Value>> = BTreeMap::new();
    let insts: Vec<Option<Value>> = match binder {
        None => vec![None],
        Some(b) => {
            if b.sort == REAL {
                return unsupported("quantified assignment over ℝ");
            }
            (0..st.pool(&b.sort)).map(|o| Some(Value::Obj(o))).collect()
        }
    };
    for inst in &insts {
        let mut env = st.clone();
        if let (Some(b), Some(v)) = (binder, inst) {
            env.vars.insert(b.var.clone(), *v);
        }
        for it in items {
            if it.primed {
                return unsupported("differential assignment in an executed program");
            }
            let ids = object_args(ctx, &env, &it.func, &it.args)?;
            let val = eval_term(ctx, &env, &it.rhs)?;
            let slot = writes.entry((it.func.clone(), ids)).or_default();
            if !slot.iter().any(|v| sim_value_eq(v, &val, ctx.cfg.eps)) {
                slot.push(val);
            }
        }
    }
    // Cartesian product over per-location alternatives.
    let mut states = vec![st.clone()];
    for ((f, ids), vals) in &writes {
        let mut next = Vec::new();
        for s in &states {
            for v in vals {
                let mut s2 = s.clone();
                s2.set(f, ids.clone(), *v);
                next.push(s2);
                if next.len() >= ctx.cfg.branch_budget {
                    break;
                }
            }
            if next.len() >= ctx.cfg.branch_budget {
                break;
            }
        }
        states = next;
    }
    Ok(states)
}

fn sim_value_eq(a: &Value, b: &Value, eps: f64) -> bool {
    match (a, b) {
        (Value::R(x), Value::R(y)) => (x - y).abs() <= eps,
        (Value::Obj(x), Value::Obj(y)) => x == y,
        _ => false,
    }
}

/// New states for `forall j:A n := θ` — one per choice of `j`, deduplicated.
fn var_assign_states(
    ctx: &SimCtx<'_>,
    st: &SimState,
    binder: &Binder,
    var: &str,
    rhs: &Term,
) -> SResult<Vec<SimState>> {
    let mut out: Vec<SimState> = Vec::new();
    for v in quantifier_range(ctx, st, &binder.sort) {
        let mut env = st.clone();
        env.vars.insert(binder.var.clone(), v);
        let val = eval_term(ctx, &env, rhs)?;
        let mut s2 = st.clone();
        s2.vars.insert(var.to_string(), val);
        if !out.iter().any(|s| s == &s2) {
            out.push(s2);
        }
        if out.len() >= ctx.cfg.branch_budget {
            break;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// trace semantics

pub fn run_program(
    ctx: &SimCtx<'_>,
    st: &SimState,
    prog: &Program,
    rng: &mut ChaCha8Rng,
) -> SResult<Vec<HybridTrace>> {
    let mut out = match prog {
        Program::Assign { binder, items } => assign_states(ctx, st, binder, items)?
            .into_iter()
            .map(|tau| HybridTrace {
                segments: vec![FlowSegment::point(st.clone()), FlowSegment::point(tau)],
                aborted: false,
            })
            .collect(),
        Program::VarAssign { binder, var, rhs } => var_assign_states(ctx, st, binder, var, rhs)?
            .into_iter()
            .map(|tau| HybridTrace {
                segments: vec![FlowSegment::point(st.clone()), FlowSegment::point(tau)],
                aborted: false,
            })
            .collect(),
        Program::New { .. } => {
            return unsupported("`new` must be desugared before simulation");
        }
        Program::Ode { binder, items, domain } => {
            sample_ode(ctx, st, binder, items, domain, rng)?
                .into_iter()
                .map(|OdeOutcome { duration, samples, .. }| HybridTrace {
                    segments: vec![FlowSegment { duration, samples }],
                    aborted: false,
                })
                .collect()
        }
        Program::Test(chi) => {
            if eval_fo_formula(ctx, st, chi)? {
                vec![HybridTrace::point(st.clone())]
            } else {
                vec![HybridTrace { segments: vec![FlowSegment::point(st.clone())], aborted: true }]
            }
        }
        Program::Choice(a, b) => {
            let mut ts = run_program(ctx, st, a, rng)?;
            ts.extend(run_program(ctx, st, b, rng)?);
            ts
        }
        Program::Seq(a, b) => {
            let mut ts = Vec::new();
            for ta in run_program(ctx, st, a, rng)? {
                if !ta.terminates() {
                    ts.push(ta);
                    continue;
                }
                for tb in run_program(ctx, ta.last_state(), b, rng)? {
                    ts.push(ta.compose(&tb));
                }
            }
            ts
        }
        Program::Loop(a) => {
            let mut results: Vec<HybridTrace> = vec![HybridTrace::point(st.clone())];
            let mut frontier: Vec<HybridTrace> = vec![HybridTrace::point(st.clone())];
            for _ in 0..ctx.cfg.loop_bound {
                let mut next = Vec::new();
                for t in &frontier {
                    for tb in run_program(ctx, t.last_state(), a, rng)? {
                        let composed = t.compose(&tb);
                        if composed.terminates() {
                            next.push(composed.clone());
                        }
                        results.push(composed);
                        if results.len() >= ctx.cfg.branch_budget {
                            break;
                        }
                    }
                    if results.len() >= ctx.cfg.branch_budget {
                        break;
                    }
                }
                frontier = next;
                if results.len() >= ctx.cfg.branch_budget {
                    break;
                }
            }
            results
        }
    };
    out.truncate(ctx.cfg.branch_budget);
    Ok(out)
}

// ---------------------------------------------------------------------------
// reachability semantics

/// Reachability outcomes: `Some(τ)` for a terminating run ending in τ,
/// `None` for an aborted run (failed test).
pub fn reach_program(
    ctx: &SimCtx<'_>,
    st: &SimState,
    prog: &Program,
    rng: &mut ChaCha8Rng,
) -> SResult<Vec<Option<SimState>>> {
    let mut out = match prog {
        Program::Assign { binder, items } => {
            assign_states(ctx, st, binder, items)?.into_iter().map(Some).collect()
        }
        Program::VarAssign { binder, var, rhs } => {
            var_assign_states(ctx, st, binder, var, rhs)?.into_iter().map(Some).collect()
        }
        Program::New { .. } => {
            return unsupported("`new` must be desugared before simulation");
        }
        Program::Ode { binder, items, domain } => {
            sample_ode(ctx, st, binder, items, domain, rng)?
                .into_iter()
                .map(|o| Some(o.final_state))
                .collect()
        }
        Program::Test(chi) => {
            if eval_fo_formula(ctx, st, chi)? {
                vec![Some(st.clone())]
            } else {
                vec![None]
            }
        }
        Program::Choice(a, b) => {
            let mut rs = reach_program(ctx, st, a, rng)?;
            rs.extend(reach_program(ctx, st, b, rng)?);
            rs
        }
        Program::Seq(a, b) => {
            let mut rs = Vec::new();
            for ra in reach_program(ctx, st, a, rng)? {
                match ra {
                    None => rs.push(None),
                    Some(mid) => {
                        for rb in reach_program(ctx, &mid, b, rng)? {
                            rs.push(rb);
                        }
                    }
                }
            }
            rs
        }
        Program::Loop(a) => {
            let mut results: Vec<Option<SimState>> = vec![Some(st.clone())];
            let mut frontier: Vec<SimState> = vec![st.clone()];
            for _ in 0..ctx.cfg.loop_bound {
                let mut next = Vec::new();
                for s in &frontier {
                    for rb in reach_program(ctx, s, a, rng)? {
                        if let Some(tau) = &rb {
                            next.push(tau.clone());
                        }
                        results.push(rb);
                        if results.len() >= ctx.cfg.branch_budget {
                            break;
                        }
                    }
                    if results.len() >= ctx.cfg.branch_budget {
                        break;
                    }
                }
                frontier = next;
                if results.len() >= ctx.cfg.branch_budget {
                    break;
                }
            }
            results
        }
    };
    out.truncate(ctx.cfg.branch_budget);
    Ok(out)
}

// ---------------------------------------------------------------------------
// trace formulas and full formula evaluation

/// Three-valued trace-formula valuation: `None` when undefined (a plain
/// state formula on an aborted trace).
pub fn eval_trace_formula(
    ctx: &SimCtx<'_>,
    trace: &HybridTrace,
    pi: &TraceFormula,
    rng: &mut ChaCha8Rng,
) -> SResult<Option<bool>> {
    match pi {
        TraceFormula::State(f) => {
            if !trace.terminates() {
                return Ok(None);
            }
            Ok(Some(eval_formula(ctx, trace.last_state(), f, rng)?))
        }
        TraceFormula::Always(f) => {
            for st in trace.states() {
                if !eval_formula(ctx, st, f, rng)? {
                    return Ok(Some(false));
                }
            }
            Ok(Some(true))
        }
        TraceFormula::Eventually(f) => {
            for st in trace.states() {
                if eval_formula(ctx, st, f, rng)? {
                    return Ok(Some(true));
                }
            }
            Ok(Some(false))
        }
    }
}

/// Full formula evaluation, sampling program traces for modalities.
pub fn eval_formula(
    ctx: &SimCtx<'_>,
    st: &SimState,
    phi: &StateFormula,
    rng: &mut ChaCha8Rng,
) -> SResult<bool> {
    match phi {
        StateFormula::Box_(p, pi) => {
            for t in run_program(ctx, st, p, rng)? {
                if eval_trace_formula(ctx, &t, pi, rng)? == Some(false) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        StateFormula::Dia(p, pi) => {
            for t in run_program(ctx, st, p, rng)? {
                if eval_trace_formula(ctx, &t, pi, rng)? == Some(true) {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        StateFormula::Not(a) => Ok(!eval_formula(ctx, st, a, rng)?),
        StateFormula::And(a, b) => {
            Ok(eval_formula(ctx, st, a, rng)? && eval_formula(ctx, st, b, rng)?)
        }
        StateFormula::Forall(b, body) => {
            for v in quantifier_range(ctx, st, &b.sort) {
                let mut st2 = st.clone();
                st2.vars.insert(b.var.clone(), v);
                if !eval_formula(ctx, &st2, body, rng)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        StateFormula::Exists(b, body) => {
            for v in quantifier_range(ctx, st, &b.sort) {
                let mut st2 = st.clone();
                st2.vars.insert(b.var.clone(), v);
                if eval_formula(ctx, &st2, body, rng)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        _ => eval_fo_formula(ctx, st, phi),
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_program_str, parse_theory, Theory};
    use crate::sim::state::Value;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn th() -> Theory {
        parse_theory("func a : R\nfunc b : R\nconjecture dummy : true\n").unwrap()
    }

    fn eval(src: &str) -> bool {
        let th = th();
        let cfg = SimCfg::default();
        let ctx = SimCtx { sig: &th.sig, cfg: &cfg };
        let mut st = SimState::new(&th.sig, 0);
        st.set("a", vec![], Value::R(0.0));
        st.set("b", vec![], Value::R(0.0));
        let phi = parse_formula(src, &th).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        eval_formula(&ctx, &st, &phi, &mut rng).unwrap()
    }

    #[test]
    fn discrete_traces_are_deterministic() {
        let th = th();
        let cfg = SimCfg::default();
        let ctx = SimCtx { sig: &th.sig, cfg: &cfg };
        let mut st = SimState::new(&th.sig, 0);
        st.set("a", vec![], Value::R(0.0));
        st.set("b", vec![], Value::R(0.0));
        let p = parse_program_str("a := 1 ; ?a >= 0 ; a := a + 1", &th).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let traces = run_program(&ctx, &st, &p, &mut rng).unwrap();
        assert_eq!(traces.len(), 1);
        let t = &traces[0];
        assert!(t.terminates());
        assert_eq!(t.last_state().get(&th.sig, "a", &[]).as_f64(), 2.0);
        assert_eq!(t.first_state(), &st);
    }

    #[test]
    fn failed_tests_abort() {
        // a failed test yields an aborted trace: the state modality ignores
        // it, the temporal one still inspects the states before the abort
        assert!(eval("[?false] a = 1"));
        assert!(!eval("[?false] box a = 1"));
        assert!(eval("[?false] box a = 0"));
        // and a diamond finds no terminating trace
        assert!(!eval("<?false> a = 0"));
    }

    #[test]
    fn choice_explores_both_branches() {
        assert!(eval("[a := 1 ++ a := 2] a >= 1"));
        assert!(!eval("[a := 1 ++ a := 2] a = 1"));
        assert!(eval("<a := 1 ++ a := 2> a = 2"));
    }

    #[test]
    fn loops_unroll_to_the_bound() {
        // 0..=loop_bound iterations of a := a + 1 from 0
        assert!(eval("<(a := a + 1)*> a = 3"));
        assert!(!eval("<(a := a + 1)*> a = 4"));
        assert!(eval("[(a := a + 1)*] box a <= 3"));
    }

    #[test]
    fn evolution_respects_the_domain() {
        // a grows with unit slope but may not leave a <= 1
        assert!(eval("[a' = 1 & a <= 1] a <= 1"));
        assert!(eval("[a' = 1 & a <= 1] box a <= 1"));
        // some sampled duration reaches the boundary
        assert!(eval("<a' = 1 & a <= 1> a >= 1"));
        // an initially false domain admits no evolution at all
        assert!(eval("[a' = 1 & a >= 5] a = 77"));
    }

    #[test]
    fn temporal_always_vs_final_state() {
        // b transiently becomes -1 midway; the endpoint postcondition holds
        // while the invariant fails
        let src = "[b := 0 - 1 ; b := 1]";
        assert!(eval(&format!("{src} b >= 0")));
        assert!(!eval(&format!("{src} box b >= 0")));
    }
}
