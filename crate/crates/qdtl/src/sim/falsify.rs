//! Seeded random falsifier: sample initial states, evaluate the conjecture
//! under the trace sampler, and report the first counterexample with the
//! violating trace and the subformula path that failed.

use super::run::{eval_formula, eval_trace_formula, run_program, SimCfg, SimCtx, SimError};
use super::state::{HybridTrace, SimState, Value};
use crate::syntax::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct FalsifyCfg {
    pub samples: usize,
    pub seed: u64,
    pub jobs: usize,
    pub sim: SimCfg,
}

impl Default for FalsifyCfg {
    fn default() -> Self {
        FalsifyCfg { samples: 200, seed: 0, jobs: 1, sim: SimCfg::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub sample_index: usize,
    pub seed: u64,
    pub state: SimState,
    /// Human-readable chain from the root formula to the failing subformula.
    pub path: Vec<String>,
    /// Violating trace of the outermost refuted modality, when one exists.
    pub trace: Option<HybridTrace>,
}

/// Look for a state falsifying `phi`. Deterministic in (`seed`, `samples`):
/// sample k uses its own generator seeded from `seed + k`, so parallel and
/// sequential runs return the same verdict.
pub fn falsify(
    sig: &Signature,
    phi: &StateFormula,
    cfg: &FalsifyCfg,
) -> Result<Option<Counterexample>, SimError> {
    let indices: Vec<usize> = (0..cfg.samples).collect();
    let results = crate::par_map(indices, cfg.jobs, |k| check_sample(sig, phi, cfg, k));
    for r in results {
        match r {
            Ok(Some(cx)) => return Ok(Some(cx)),
            Ok(None) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

fn check_sample(
    sig: &Signature,
    phi: &StateFormula,
    cfg: &FalsifyCfg,
    k: usize,
) -> Result<Option<Counterexample>, SimError> {
    let sample_seed = cfg.seed.wrapping_add(k as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let state = random_state(sig, &mut rng);
    let ctx = SimCtx { sig, cfg: &cfg.sim };
    // The generator state after drawing the initial state is the anchor:
    // cloning it makes evaluation and explanation see identical traces.
    let mut eval_rng = rng.clone();
    if eval_formula(&ctx, &state, phi, &mut eval_rng)? {
        return Ok(None);
    }
    let mut explain_rng = rng.clone();
    let (path, trace) = explain(&ctx, &state, phi, &mut explain_rng)?;
    Ok(Some(Counterexample { sample_index: k, seed: sample_seed, state, path, trace }))
}

/// Random initial state: pools of 2–3 objects per sort, real interpretation
/// entries uniform in [-10, 10], the existence symbol Bernoulli over {0, 1}.
pub fn random_state(sig: &Signature, rng: &mut ChaCha8Rng) -> SimState {
    let mut st = SimState::new(sig, 0);
    for sort in sig.object_sorts() {
        st.pools.insert(sort.to_string(), rng.gen_range(2..=3usize));
    }
    let sorts: Vec<String> = st.pools.keys().cloned().collect();
    for decl in sig.funcs.values() {
        // Interpretation tables only cover object argument tuples.
        if decl.arg_sorts.iter().any(|s| s == REAL) {
            continue;
        }
        for args in tuples(&decl.arg_sorts, &st) {
            let v = if decl.result == REAL {
                Value::R(rng.gen_range(-10.0..10.0))
            } else {
                let pool = st.pool(&decl.result);
                Value::Obj(rng.gen_range(0..pool.max(1)))
            };
            st.set(&decl.name, args, v);
        }
    }
    for sort in &sorts {
        for o in 0..st.pool(sort) {
            let exists = if rng.gen_bool(0.75) { 1.0 } else { 0.0 };
            st.set(EXISTS_FN, vec![o], Value::R(exists));
        }
    }
    st
}

fn tuples(arg_sorts: &[String], st: &SimState) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for s in arg_sorts {
        let pool = st.pool(s);
        let mut next = Vec::new();
        for t in &out {
            for o in 0..pool {
                let mut t2 = t.clone();
                t2.push(o);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// Why is `phi` false at `st`? Pre: evaluation just returned false with an
/// identically seeded generator.
fn explain(
    ctx: &SimCtx<'_>,
    st: &SimState,
    phi: &StateFormula,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<String>, Option<HybridTrace>), SimError> {
    match phi {
        StateFormula::And(a, b) => {
            let mut probe = rng.clone();
            if !eval_formula(ctx, st, a, &mut probe)? {
                let (mut path, trace) = explain(ctx, st, a, rng)?;
                path.insert(0, "left conjunct fails".into());
                Ok((path, trace))
            } else {
                *rng = probe;
                let (mut path, trace) = explain(ctx, st, b, rng)?;
                path.insert(0, "right conjunct fails".into());
                Ok((path, trace))
            }
        }
        StateFormula::Not(a) => {
            Ok((vec![format!("negated formula holds: {a}")], None))
        }
        StateFormula::Forall(b, body) => {
            for v in super::run::quantifier_range(ctx, st, &b.sort) {
                let mut st2 = st.clone();
                st2.vars.insert(b.var.clone(), v);
                let mut probe = rng.clone();
                if !eval_formula(ctx, &st2, body, &mut probe)? {
                    let (mut path, trace) = explain(ctx, &st2, body, rng)?;
                    path.insert(0, format!("forall {}:{} fails at {:?}", b.var, b.sort, v));
                    return Ok((path, trace));
                }
                *rng = probe;
            }
            Ok((vec!["forall unexpectedly irrefutable on re-evaluation".into()], None))
        }
        StateFormula::Exists(b, _) => {
            Ok((vec![format!("no witness found for exists {}:{}", b.var, b.sort)], None))
        }
        StateFormula::Box_(p, pi) => {
            for t in run_program(ctx, st, p, rng)? {
                let mut probe = rng.clone();
                if eval_trace_formula(ctx, &t, pi, &mut probe)? == Some(false) {
                    let what = match pi.as_ref() {
                        TraceFormula::State(_) => "terminal state violates postcondition",
                        TraceFormula::Always(_) => "some sampled position violates the invariant",
                        TraceFormula::Eventually(_) => "no sampled position reaches the target",
                    };
                    return Ok((vec![format!("box modality refuted: {what}")], Some(t)));
                }
                *rng = probe;
            }
            Ok((vec!["box modality unexpectedly irrefutable on re-evaluation".into()], None))
        }
        StateFormula::Dia(_, _) => {
            Ok((vec!["diamond modality: no sampled trace satisfies the trace formula".into()], None))
        }
        _ => Ok((vec![format!("atom fails: {phi}")], None)),
    }
}
