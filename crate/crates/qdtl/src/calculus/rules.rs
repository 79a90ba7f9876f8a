//! The rule catalog and its application engine.
//!
//! Rules come in three shapes: sequent rules that rearrange top-level
//! formulas, rewrite rules that replace a matching subformula by an
//! equivalent (or, in marked cases, stronger) one, and closing rules that
//! discharge a goal outright.

use crate::calculus::derive::total_derivation;
use crate::calculus::monitor::transform_monitor;
use crate::calculus::oracle::{close_goal, OracleCtx, OracleResult};
use crate::calculus::solution::solve_ode;
use crate::calculus::subst::push_assignment;
use crate::parser::{Arg, Pos, Step};
use crate::syntax::*;
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;

/// Rule identifiers with one-line schema anchors, in catalog order.
pub const CATALOG: &[(&str, &str)] = &[
    ("ax", "close: shared formula, false antecedent, or true succedent"),
    ("notr", "negation right: move the negated formula to the antecedent"),
    ("notl", "negation left: move the negated formula to the succedent"),
    ("andr", "conjunction right: one premise per conjunct"),
    ("andl", "conjunction left: split the conjunction"),
    ("orr", "disjunction right: keep both disjuncts"),
    ("orl", "disjunction left: one premise per disjunct"),
    ("impr", "implication right: assume the premise"),
    ("impl", "implication left: prove the premise or use the conclusion"),
    ("cut", "cut with an explicit formula"),
    ("seqbox", "box of a sequential composition: nested boxes"),
    ("seqdia", "diamond of a sequential composition: nested diamonds"),
    ("choicebox", "box of a choice: conjunction (any trace formula)"),
    ("choicedia", "diamond of a choice: disjunction (any trace formula)"),
    ("testbox", "box of a test: implication"),
    ("testdia", "diamond of a test: conjunction"),
    ("assignbox", "box of a quantified assignment: substitute"),
    ("assigndia", "diamond of a quantified assignment: substitute"),
    ("skip", "vacuous assignment: drop the modality"),
    ("varassign", "nondeterministic object assignment: quantify"),
    ("ex", "close: a fresh object always exists"),
    ("odesolve", "solvable differential equation: parametric solution"),
    ("forallr", "universal right: Skolem function"),
    ("foralll", "universal left: instantiate, keep the quantifier"),
    ("existsr", "existential right: instantiate, keep the quantifier"),
    ("existsl", "existential left: Skolem function"),
    ("iall", "reintroduce and eliminate universal real quantifiers"),
    ("iex", "instantiate a free real variable, then decide"),
    ("gen", "generalization: prove the postcondition implication"),
    ("ind", "loop induction with the postcondition as invariant"),
    ("con", "loop convergence with a decreasing variant"),
    ("di", "differential invariant via the total derivation"),
    ("dc", "differential cut: strengthen the evolution domain"),
    ("tseqbox", "always after a composition: now and after the first part"),
    ("tseqdia", "eventually under a composition: in either part"),
    ("ttestbox", "always after a test: the formula itself"),
    ("ttestdia", "eventually under a test: the formula itself"),
    ("tassignbox", "always after an assignment: before and after"),
    ("tassigndia", "eventually under an assignment: before or after"),
    ("todebox", "always during an evolution: plain box"),
    ("todedia", "eventually during an evolution: plain diamond"),
    ("tunwind", "always after a loop: unwind one iteration"),
    ("tunwinddia", "eventually under a loop: unwind one iteration"),
    ("tloopbox", "always after a loop: inductive definition"),
    ("tloopdia", "eventually under a loop: inductive definition"),
    ("finseq", "finitary eventually after a composition"),
    ("monitor", "finitary eventually via the monitored program"),
    ("oracle", "close by real-arithmetic decision"),
];

pub fn rule_exists(name: &str) -> bool {
    name == "auto" || CATALOG.iter().any(|(id, _)| *id == name)
}

pub fn rule_anchor(name: &str) -> &'static str {
    CATALOG.iter().find(|(id, _)| *id == name).map(|(_, a)| *a).unwrap_or("")
}

/// Hash of the catalog (rule identifiers in order); embedded in reports so
/// that calculus changes are detectable.
pub fn catalog_hash() -> String {
    let ids: Vec<&str> = CATALOG.iter().map(|(id, _)| *id).collect();
    let mut h = Sha256::new();
    h.update(ids.join(";").as_bytes());
    format!("{:x}", h.finalize())
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur.push(sub.min(prev[j] + 1).min(cur[j - 1] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

pub fn nearest_rule(name: &str) -> &'static str {
    CATALOG
        .iter()
        .map(|(id, _)| (*id, edit_distance(name, id)))
        .min_by_key(|(_, d)| *d)
        .map(|(id, _)| id)
        .unwrap_or("ax")
}

// ---------------------------------------------------------------------------
// application context

#[derive(Clone, Debug)]
pub struct ProofCtx {
    pub sig: Signature,
    pub counter: u64,
    pub oracle: OracleCtx,
}

impl ProofCtx {
    pub fn new(sig: Signature, solver: Option<crate::arith::solver::SolverCfg>) -> ProofCtx {
        ProofCtx { sig, counter: 0, oracle: OracleCtx { stats: Default::default(), solver } }
    }

    /// A monotone fresh name, checked against the signature and the goal.
    fn fresh(&mut self, stem: &str, goal: &Sequent) -> String {
        let mut used: BTreeSet<String> = self.sig.funcs.keys().cloned().collect();
        used.extend(self.sig.vars.keys().cloned());
        for f in goal.ant.iter().chain(goal.suc.iter()) {
            used.extend(formula_fns(f));
            used.extend(formula_free_vars(f));
        }
        loop {
            let name = format!("{stem}{}", self.counter);
            self.counter += 1;
            if !used.contains(&name) {
                return name;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Applied {
    /// The goal is discharged; the label names the closing rule or oracle.
    Closed(String),
    Premises(Vec<Sequent>),
    /// The oracle could not decide; the goal stays open with a diagnostic.
    OpenOracle(String),
}

// ---------------------------------------------------------------------------
// rewrite engine

#[derive(Clone, Debug, PartialEq)]
enum Strength {
    /// Premise and conclusion are equivalent; applicable anywhere.
    Equiv,
    /// The premise implies the conclusion state-by-state; applicable in
    /// positive positions.
    Weaken,
    /// Validity-preserving only (an assignment was dropped); applicable at
    /// the top of a succedent formula when the named symbols occur nowhere
    /// else in the goal.
    Global(BTreeSet<String>),
}

type Rw<'a> = dyn FnMut(&StateFormula, bool, bool) -> Option<(StateFormula, Strength)> + 'a;

fn rewrite_in(
    f: &StateFormula,
    positive: bool,
    root: bool,
    rw: &mut Rw<'_>,
) -> Option<(StateFormula, Strength)> {
    if let Some((nf, s)) = rw(f, positive, root) {
        let ok = match &s {
            Strength::Equiv => true,
            Strength::Weaken => positive,
            Strength::Global(_) => positive && root,
        };
        if ok {
            return Some((nf, s));
        }
    }
    match f {
        StateFormula::Not(a) => rewrite_in(a, !positive, false, rw)
            .map(|(nf, s)| (StateFormula::not(nf), s)),
        StateFormula::And(a, b) => {
            if let Some((na, s)) = rewrite_in(a, positive, false, rw) {
                return Some((StateFormula::and(na, (**b).clone()), s));
            }
            rewrite_in(b, positive, false, rw)
                .map(|(nb, s)| (StateFormula::and((**a).clone(), nb), s))
        }
        StateFormula::Forall(bi, body) => rewrite_in(body, positive, false, rw)
            .map(|(nb, s)| (StateFormula::Forall(bi.clone(), Box::new(nb)), s)),
        StateFormula::Exists(bi, body) => rewrite_in(body, positive, false, rw)
            .map(|(nb, s)| (StateFormula::Exists(bi.clone(), Box::new(nb)), s)),
        StateFormula::Box_(p, pi) => rewrite_in_trace(pi, positive, rw)
            .map(|(np, s)| (StateFormula::Box_(p.clone(), Box::new(np)), s)),
        StateFormula::Dia(p, pi) => rewrite_in_trace(pi, positive, rw)
            .map(|(np, s)| (StateFormula::Dia(p.clone(), Box::new(np)), s)),
        _ => None,
    }
}

fn rewrite_in_trace(
    pi: &TraceFormula,
    positive: bool,
    rw: &mut Rw<'_>,
) -> Option<(TraceFormula, Strength)> {
    match pi {
        TraceFormula::State(f) => {
            rewrite_in(f, positive, false, rw).map(|(nf, s)| (TraceFormula::State(nf), s))
        }
        TraceFormula::Always(f) => {
            rewrite_in(f, positive, false, rw).map(|(nf, s)| (TraceFormula::Always(nf), s))
        }
        TraceFormula::Eventually(f) => {
            rewrite_in(f, positive, false, rw).map(|(nf, s)| (TraceFormula::Eventually(nf), s))
        }
    }
}

/// Apply a rewrite rule somewhere in the goal, preferring the succedent.
fn apply_rewrite(
    goal: &Sequent,
    pos: Option<Pos>,
    rule: &str,
    rw: &mut Rw<'_>,
) -> Result<Vec<Sequent>, String> {
    let mut try_at = |goal: &Sequent, p: Pos| -> Option<Result<Sequent, String>> {
        let (formula, positive) = match p {
            Pos::Suc(i) => (goal.suc.get(i)?, true),
            Pos::Ant(i) => (goal.ant.get(i)?, false),
        };
        let (nf, s) = rewrite_in(formula, positive, true, rw)?;
        if let Strength::Global(syms) = &s {
            let mut rest_fns = BTreeSet::new();
            for (j, f) in goal.ant.iter().enumerate() {
                if matches!(p, Pos::Ant(i) if i == j) {
                    continue;
                }
                rest_fns.extend(formula_fns(f));
            }
            for (j, f) in goal.suc.iter().enumerate() {
                if matches!(p, Pos::Suc(i) if i == j) {
                    continue;
                }
                rest_fns.extend(formula_fns(f));
            }
            if let Some(s) = syms.iter().find(|s| rest_fns.contains(*s)) {
                return Some(Err(format!(
                    "cannot drop assignment to {s}: the symbol occurs elsewhere in the goal"
                )));
            }
        }
        let mut ant = goal.ant.clone();
        let mut suc = goal.suc.clone();
        match p {
            Pos::Suc(i) => suc[i] = nf,
            Pos::Ant(i) => ant[i] = nf,
        }
        Some(Ok(Sequent::new(ant, suc)))
    };
    let positions: Vec<Pos> = match pos {
        Some(p) => vec![p],
        None => (0..goal.suc.len())
            .map(Pos::Suc)
            .chain((0..goal.ant.len()).map(Pos::Ant))
            .collect(),
    };
    for p in positions {
        if let Some(r) = try_at(goal, p) {
            return r.map(|s| vec![s]);
        }
    }
    Err(format!("rule {rule}: no matching formula in the goal"))
}

// ---------------------------------------------------------------------------
// helpers

fn arg_formula(step: &Step, k: usize) -> Result<StateFormula, String> {
    match step.args.get(k) {
        Some(Arg::Formula(f)) => Ok(f.clone()),
        Some(Arg::Term(Term::Var(_))) | Some(Arg::Name(_)) => {
            Err(format!("rule {}: argument {} must be a formula", step.rule, k + 1))
        }
        Some(Arg::Term(_)) => Err(format!("rule {}: argument {} must be a formula", step.rule, k + 1)),
        None => Err(format!("rule {} needs an explicit formula argument", step.rule)),
    }
}

fn arg_term(step: &Step, k: usize) -> Result<Term, String> {
    match step.args.get(k) {
        Some(Arg::Term(t)) => Ok(t.clone()),
        Some(Arg::Name(n)) => Ok(Term::Var(n.clone())),
        Some(Arg::Formula(_)) => {
            Err(format!("rule {}: argument {} must be a term", step.rule, k + 1))
        }
        None => Err(format!("rule {} needs an explicit term argument", step.rule)),
    }
}

fn arg_name(step: &Step, k: usize) -> Result<String, String> {
    match step.args.get(k) {
        Some(Arg::Name(n)) => Ok(n.clone()),
        Some(Arg::Term(Term::Var(v))) => Ok(v.clone()),
        _ => Err(format!("rule {} needs a variable name argument", step.rule)),
    }
}

fn suc_index(
    goal: &Sequent,
    pos: Option<Pos>,
    rule: &str,
    pred: impl Fn(&StateFormula) -> bool,
) -> Result<usize, String> {
    match pos {
        Some(Pos::Suc(i)) => {
            if goal.suc.get(i).map_or(false, &pred) {
                Ok(i)
            } else {
                Err(format!("rule {rule}: succedent position {i} does not match"))
            }
        }
        Some(Pos::Ant(_)) => Err(format!("rule {rule} applies to the succedent")),
        None => goal
            .suc
            .iter()
            .position(pred)
            .ok_or_else(|| format!("rule {rule}: no matching succedent formula")),
    }
}

fn ant_index(
    goal: &Sequent,
    pos: Option<Pos>,
    rule: &str,
    pred: impl Fn(&StateFormula) -> bool,
) -> Result<usize, String> {
    match pos {
        Some(Pos::Ant(i)) => {
            if goal.ant.get(i).map_or(false, &pred) {
                Ok(i)
            } else {
                Err(format!("rule {rule}: antecedent position {i} does not match"))
            }
        }
        Some(Pos::Suc(_)) => Err(format!("rule {rule} applies to the antecedent")),
        None => goal
            .ant
            .iter()
            .position(pred)
            .ok_or_else(|| format!("rule {rule}: no matching antecedent formula")),
    }
}

fn without(mut v: Vec<StateFormula>, i: usize) -> Vec<StateFormula> {
    v.remove(i);
    v
}

/// Is `needle` a conjunct (transitively) of some antecedent formula?
fn ant_contains(goal: &Sequent, needle: &StateFormula) -> bool {
    fn conj(hay: &StateFormula, needle: &StateFormula) -> bool {
        if hay == needle {
            return true;
        }
        match hay {
            StateFormula::And(a, b) => conj(a, needle) || conj(b, needle),
            _ => false,
        }
    }
    goal.ant.iter().any(|f| conj(f, needle))
}

fn trace_inner(pi: &TraceFormula) -> &StateFormula {
    match pi {
        TraceFormula::State(f) | TraceFormula::Always(f) | TraceFormula::Eventually(f) => f,
    }
}

fn assigned_funcs(items: &[AssignItem]) -> BTreeSet<String> {
    items.iter().map(|it| it.func.clone()).collect()
}

// ---------------------------------------------------------------------------
// the rules

pub fn apply_rule(ctx: &mut ProofCtx, goal: &Sequent, step: &Step) -> Result<Applied, String> {
    let pos = step.pos;
    let rule = step.rule.as_str();
    match rule {
        // -- closing ---------------------------------------------------------
        "ax" => {
            let shared = goal.ant.iter().any(|f| goal.suc.contains(f));
            if shared
                || goal.ant.contains(&StateFormula::False)
                || goal.suc.contains(&StateFormula::True)
            {
                Ok(Applied::Closed("ax".into()))
            } else {
                Err("rule ax: no shared formula".into())
            }
        }
        "ex" => {
            let matches_ex = |f: &StateFormula| {
                if let StateFormula::Exists(b, body) = f {
                    if b.sort != REAL {
                        let e = Term::App(EXISTS_FN.into(), vec![Term::Var(b.var.clone())]);
                        let zero = Term::num(0);
                        return **body == StateFormula::Eq(e.clone(), zero.clone())
                            || **body == StateFormula::Eq(zero, e);
                    }
                }
                false
            };
            if goal.suc.iter().any(matches_ex) {
                Ok(Applied::Closed("ex".into()))
            } else {
                Err("rule ex: succedent has no formula of the shape exists n:A E(n) = 0".into())
            }
        }
        "oracle" | "iall" => match close_goal(&mut ctx.oracle, &ctx.sig, goal) {
            OracleResult::Closed(methods) => {
                let label = if methods.is_empty() {
                    format!("{rule} (trivial)")
                } else {
                    let ms: Vec<String> =
                        methods.iter().map(|m| format!("{m:?}").to_lowercase()).collect();
                    format!("{rule} ({})", ms.join(", "))
                };
                Ok(Applied::Closed(label))
            }
            OracleResult::Open(d) => Ok(Applied::OpenOracle(d)),
        },

        // -- propositional ---------------------------------------------------
        "notr" => {
            let i = suc_index(goal, pos, rule, |f| matches!(f, StateFormula::Not(_)))?;
            let StateFormula::Not(a) = &goal.suc[i] else { unreachable!() };
            let mut ant = goal.ant.clone();
            ant.push((**a).clone());
            Ok(Applied::Premises(vec![Sequent::new(ant, without(goal.suc.clone(), i))]))
        }
        "notl" => {
            let i = ant_index(goal, pos, rule, |f| matches!(f, StateFormula::Not(_)))?;
            let StateFormula::Not(a) = &goal.ant[i] else { unreachable!() };
            let mut suc = goal.suc.clone();
            suc.push((**a).clone());
            Ok(Applied::Premises(vec![Sequent::new(without(goal.ant.clone(), i), suc)]))
        }
        "andr" => {
            let i = suc_index(goal, pos, rule, |f| matches!(f, StateFormula::And(..)))?;
            let StateFormula::And(a, b) = &goal.suc[i] else { unreachable!() };
            let base = without(goal.suc.clone(), i);
            let mut s1 = base.clone();
            s1.push((**a).clone());
            let mut s2 = base;
            s2.push((**b).clone());
            Ok(Applied::Premises(vec![
                Sequent::new(goal.ant.clone(), s1),
                Sequent::new(goal.ant.clone(), s2),
            ]))
        }
        "andl" => {
            let i = ant_index(goal, pos, rule, |f| matches!(f, StateFormula::And(..)))?;
            let StateFormula::And(a, b) = &goal.ant[i] else { unreachable!() };
            let mut ant = without(goal.ant.clone(), i);
            ant.push((**a).clone());
            ant.push((**b).clone());
            Ok(Applied::Premises(vec![Sequent::new(ant, goal.suc.clone())]))
        }
        "orr" => {
            let i = suc_index(goal, pos, rule, |f| f.as_or().is_some())?;
            let (a, b) = goal.suc[i].as_or().unwrap();
            let (a, b) = (a.clone(), b.clone());
            let mut suc = without(goal.suc.clone(), i);
            suc.push(a);
            suc.push(b);
            Ok(Applied::Premises(vec![Sequent::new(goal.ant.clone(), suc)]))
        }
        "orl" => {
            let i = ant_index(goal, pos, rule, |f| f.as_or().is_some())?;
            let (a, b) = goal.ant[i].as_or().unwrap();
            let (a, b) = (a.clone(), b.clone());
            let base = without(goal.ant.clone(), i);
            let mut a1 = base.clone();
            a1.push(a);
            let mut a2 = base;
            a2.push(b);
            Ok(Applied::Premises(vec![
                Sequent::new(a1, goal.suc.clone()),
                Sequent::new(a2, goal.suc.clone()),
            ]))
        }
        "impr" => {
            let i = suc_index(goal, pos, rule, |f| f.as_imp().is_some())?;
            let (a, b) = goal.suc[i].as_imp().unwrap();
            let (a, b) = (a.clone(), b.clone());
            let mut ant = goal.ant.clone();
            ant.push(a);
            let mut suc = without(goal.suc.clone(), i);
            suc.push(b);
            Ok(Applied::Premises(vec![Sequent::new(ant, suc)]))
        }
        "impl" => {
            let i = ant_index(goal, pos, rule, |f| f.as_imp().is_some())?;
            let (a, b) = goal.ant[i].as_imp().unwrap();
            let (a, b) = (a.clone(), b.clone());
            let base = without(goal.ant.clone(), i);
            let mut s1 = goal.suc.clone();
            s1.push(a);
            let mut a2 = base.clone();
            a2.push(b);
            Ok(Applied::Premises(vec![
                Sequent::new(base, s1),
                Sequent::new(a2, goal.suc.clone()),
            ]))
        }
        "cut" => {
            let phi = arg_formula(step, 0)?;
            well_typed_formula(&phi, &ctx.sig).map_err(|e| format!("cut formula ill-typed: {e}"))?;
            Ok(Applied::Premises(vec![goal.with_suc(phi.clone()), goal.with_ant(phi)]))
        }

        // -- program rewrites ------------------------------------------------
        "seqbox" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Box_(p, pi) => match (&**p, &**pi) {
                (Program::Seq(a, b), TraceFormula::State(phi)) => Some((
                    StateFormula::box_(
                        (**a).clone(),
                        TraceFormula::State(StateFormula::box_(
                            (**b).clone(),
                            TraceFormula::State(phi.clone()),
                        )),
                    ),
                    Strength::Equiv,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "seqdia" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Dia(p, pi) => match (&**p, &**pi) {
                (Program::Seq(a, b), TraceFormula::State(phi)) => Some((
                    StateFormula::dia(
                        (**a).clone(),
                        TraceFormula::State(StateFormula::dia(
                            (**b).clone(),
                            TraceFormula::State(phi.clone()),
                        )),
                    ),
                    Strength::Equiv,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "choicebox" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Box_(p, pi) => match &**p {
                Program::Choice(a, b) => Some((
                    StateFormula::and(
                        StateFormula::box_((**a).clone(), (**pi).clone()),
                        StateFormula::box_((**b).clone(), (**pi).clone()),
                    ),
                    Strength::Equiv,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "choicedia" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Dia(p, pi) => match &**p {
                Program::Choice(a, b) => Some((
                    StateFormula::or(
                        StateFormula::dia((**a).clone(), (**pi).clone()),
                        StateFormula::dia((**b).clone(), (**pi).clone()),
                    ),
                    Strength::Equiv,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "testbox" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Box_(p, pi) => match (&**p, &**pi) {
                (Program::Test(chi), TraceFormula::State(phi)) => {
                    Some((StateFormula::imp((**chi).clone(), phi.clone()), Strength::Equiv))
                }
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "testdia" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Dia(p, pi) => match (&**p, &**pi) {
                (Program::Test(chi), TraceFormula::State(phi)) => {
                    Some((StateFormula::and((**chi).clone(), phi.clone()), Strength::Equiv))
                }
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "assignbox" | "assigndia" => {
            let want_box = rule == "assignbox";
            apply_rewrite(goal, pos, rule, &mut |f, _, _| {
                let (p, pi) = match (want_box, f) {
                    (true, StateFormula::Box_(p, pi)) => (p, pi),
                    (false, StateFormula::Dia(p, pi)) => (p, pi),
                    _ => return None,
                };
                let (Program::Assign { binder, items }, TraceFormula::State(phi)) = (&**p, &**pi)
                else {
                    return None;
                };
                let pushed = push_assignment(binder, items, phi).ok()?;
                if pushed.dropped.is_empty() {
                    Some((pushed.result, Strength::Equiv))
                } else {
                    Some((pushed.result, Strength::Global(pushed.dropped)))
                }
            })
            .map(Applied::Premises)
        }
        "skip" => apply_rewrite(goal, pos, rule, &mut |f, _, _| {
            let (p, pi) = match f {
                StateFormula::Box_(p, pi) | StateFormula::Dia(p, pi) => (p, pi),
                _ => return None,
            };
            let Program::Assign { items, .. } = &**p else { return None };
            let inner = trace_inner(pi);
            let fns = formula_fns(inner);
            if assigned_funcs(items).iter().any(|f| fns.contains(f)) {
                return None;
            }
            Some((inner.clone(), Strength::Equiv))
        })
        .map(Applied::Premises),
        "varassign" => apply_rewrite(goal, pos, rule, &mut |f, _, _| {
            let (p, pi, is_box) = match f {
                StateFormula::Box_(p, pi) => (p, pi, true),
                StateFormula::Dia(p, pi) => (p, pi, false),
                _ => return None,
            };
            let (Program::VarAssign { binder, var, rhs }, TraceFormula::State(phi)) =
                (&**p, &**pi)
            else {
                return None;
            };
            // Alpha-rename the program binder if it is free in phi.
            let mut b = binder.clone();
            let mut rhs = rhs.clone();
            let free = formula_free_vars(phi);
            if free.contains(&b.var) {
                let mut avoid = free.clone();
                term_free_vars(&rhs, &mut avoid);
                let fresh = fresh_var(&b.var, &avoid, &BTreeSet::new());
                rhs = substitute_term(&rhs, &b.var, &Term::Var(fresh.clone())).ok()?;
                b = Binder { var: fresh, sort: b.sort };
            }
            let body = substitute_formula(phi, var, &rhs).ok()?;
            let out = if is_box {
                StateFormula::Forall(b, Box::new(body))
            } else {
                StateFormula::Exists(b, Box::new(body))
            };
            Some((out, Strength::Equiv))
        })
        .map(Applied::Premises),
        "odesolve" => {
            let tname = ctx.fresh("t", goal);
            let ttname = ctx.fresh("s", goal);
            let mut err: Option<String> = None;
            let out = apply_rewrite(goal, pos, rule, &mut |f, _, _| {
                let (p, pi, is_box) = match f {
                    StateFormula::Box_(p, pi) => (p, pi, true),
                    StateFormula::Dia(p, pi) => (p, pi, false),
                    _ => return None,
                };
                let (Program::Ode { binder, items, domain }, TraceFormula::State(phi)) =
                    (&**p, &**pi)
                else {
                    return None;
                };
                let solved = match solve_ode(binder, items, &tname) {
                    Ok(s) => s,
                    Err(e) => {
                        err = Some(e);
                        return None;
                    }
                };
                let t = Term::Var(tname.clone());
                let tt = Term::Var(ttname.clone());
                let at_t = match solved.at(&t) {
                    Ok(p) => p,
                    Err(e) => {
                        err = Some(e);
                        return None;
                    }
                };
                let at_tt = match solved.at(&tt) {
                    Ok(p) => p,
                    Err(e) => {
                        err = Some(e);
                        return None;
                    }
                };
                let guard = |val: StateFormula| {
                    StateFormula::Forall(
                        Binder { var: ttname.clone(), sort: REAL.into() },
                        Box::new(StateFormula::imp(
                            StateFormula::and(
                                StateFormula::leq(Term::num(0), tt.clone()),
                                StateFormula::leq(tt.clone(), t.clone()),
                            ),
                            val,
                        )),
                    )
                };
                let out = if is_box {
                    let post = StateFormula::box_(at_t, TraceFormula::State(phi.clone()));
                    let body = if **domain == StateFormula::True {
                        post
                    } else {
                        StateFormula::imp(
                            guard(StateFormula::box_(
                                at_tt,
                                TraceFormula::State((**domain).clone()),
                            )),
                            post,
                        )
                    };
                    StateFormula::Forall(
                        Binder { var: tname.clone(), sort: REAL.into() },
                        Box::new(StateFormula::imp(
                            StateFormula::Geq(t.clone(), Term::num(0)),
                            body,
                        )),
                    )
                } else {
                    let post = StateFormula::dia(at_t, TraceFormula::State(phi.clone()));
                    let body = if **domain == StateFormula::True {
                        post
                    } else {
                        StateFormula::and(
                            guard(StateFormula::dia(
                                at_tt,
                                TraceFormula::State((**domain).clone()),
                            )),
                            post,
                        )
                    };
                    StateFormula::Exists(
                        Binder { var: tname.clone(), sort: REAL.into() },
                        Box::new(StateFormula::and(
                            StateFormula::Geq(t.clone(), Term::num(0)),
                            body,
                        )),
                    )
                };
                Some((out, Strength::Equiv))
            });
            match (out, err) {
                (Ok(p), _) => Ok(Applied::Premises(p)),
                (Err(_), Some(e)) => Err(format!("rule odesolve: {e}")),
                (Err(e), None) => Err(e),
            }
        }

        // -- quantifiers -----------------------------------------------------
        "forallr" | "existsl" => {
            let is_forallr = rule == "forallr";
            let (i, formula) = if is_forallr {
                let i =
                    suc_index(goal, pos, rule, |f| matches!(f, StateFormula::Forall(..)))?;
                (i, goal.suc[i].clone())
            } else {
                let i = ant_index(goal, pos, rule, |f| matches!(f, StateFormula::Exists(..)))?;
                (i, goal.ant[i].clone())
            };
            let (b, body) = match &formula {
                StateFormula::Forall(b, body) | StateFormula::Exists(b, body) => (b, body),
                _ => unreachable!(),
            };
            let mut free: Vec<String> = formula_free_vars(&formula).into_iter().collect();
            free.sort();
            let mut arg_sorts = Vec::new();
            for v in &free {
                let s = ctx
                    .sig
                    .vars
                    .get(v)
                    .cloned()
                    .ok_or_else(|| format!("unknown sort of free variable {v}"))?;
                arg_sorts.push(s);
            }
            let name = ctx.fresh("sk", goal);
            let arg_sorts_ref: Vec<&str> = arg_sorts.iter().map(|s| s.as_str()).collect();
            ctx.sig.add_func(&name, &arg_sorts_ref, &b.sort, true);
            let witness = Term::App(name, free.iter().map(|v| Term::Var(v.clone())).collect());
            let inst = substitute_formula(body, &b.var, &witness)
                .map_err(|e| format!("Skolemization failed: {e}"))?;
            let seq = if is_forallr {
                let mut suc = goal.suc.clone();
                suc[i] = inst;
                Sequent::new(goal.ant.clone(), suc)
            } else {
                let mut ant = goal.ant.clone();
                ant[i] = inst;
                Sequent::new(ant, goal.suc.clone())
            };
            Ok(Applied::Premises(vec![seq]))
        }
        "foralll" | "existsr" => {
            let theta = arg_term(step, 0)?;
            let theta_sort = sort_of_term(&theta, &ctx.sig, &ctx.sig.vars).ok();
            let matches = |f: &StateFormula| {
                let b = match (rule, f) {
                    ("foralll", StateFormula::Forall(b, _)) => b,
                    ("existsr", StateFormula::Exists(b, _)) => b,
                    _ => return false,
                };
                match &theta_sort {
                    Some(s) => b.sort == *s,
                    None => true,
                }
            };
            let (i, formula) = if rule == "foralll" {
                let i = ant_index(goal, pos, rule, matches)?;
                (i, goal.ant[i].clone())
            } else {
                let i = suc_index(goal, pos, rule, matches)?;
                (i, goal.suc[i].clone())
            };
            let (b, body) = match &formula {
                StateFormula::Forall(b, body) | StateFormula::Exists(b, body) => (b, body),
                _ => unreachable!(),
            };
            let inst = substitute_formula(body, &b.var, &theta)
                .map_err(|e| format!("instantiation failed: {e}"))?;
            let seq = if rule == "foralll" {
                let mut ant = goal.ant.clone();
                ant.push(inst);
                Sequent::new(ant, goal.suc.clone())
            } else {
                let mut suc = goal.suc.clone();
                suc.push(inst);
                Sequent::new(goal.ant.clone(), suc)
            };
            let _ = i;
            Ok(Applied::Premises(vec![seq]))
        }
        "iex" => {
            let x = arg_name(step, 0)?;
            let theta = arg_term(step, 1)?;
            let map = |f: &StateFormula| {
                substitute_formula(f, &x, &theta)
                    .map_err(|e| format!("instantiation failed: {e}"))
            };
            let ant: Vec<StateFormula> =
                goal.ant.iter().map(|f| map(f)).collect::<Result<_, _>>()?;
            let suc: Vec<StateFormula> =
                goal.suc.iter().map(|f| map(f)).collect::<Result<_, _>>()?;
            Ok(Applied::Premises(vec![Sequent::new(ant, suc)]))
        }

        // -- global rules ----------------------------------------------------
        "gen" => {
            let i = suc_index(goal, pos, rule, |f| {
                matches!(
                    f,
                    StateFormula::Box_(_, pi) | StateFormula::Dia(_, pi)
                        if matches!(&**pi, TraceFormula::State(_))
                )
            })?;
            let (prog, psi, is_box) = match &goal.suc[i] {
                StateFormula::Box_(p, pi) => (p, trace_inner(pi), true),
                StateFormula::Dia(p, pi) => (p, trace_inner(pi), false),
                _ => unreachable!(),
            };
            let phi = goal.ant.iter().find_map(|f| match f {
                StateFormula::Box_(p, pi) if is_box && p == prog => {
                    match &**pi {
                        TraceFormula::State(phi) => Some(phi.clone()),
                        _ => None,
                    }
                }
                StateFormula::Dia(p, pi) if !is_box && p == prog => match &**pi {
                    TraceFormula::State(phi) => Some(phi.clone()),
                    _ => None,
                },
                _ => None,
            });
            let phi = phi.ok_or_else(|| {
                "rule gen: no antecedent modality over the same program".to_string()
            })?;
            Ok(Applied::Premises(vec![Sequent::new(vec![phi], vec![psi.clone()])]))
        }
        "ind" => {
            let i = suc_index(goal, pos, rule, |f| {
                matches!(f, StateFormula::Box_(p, pi)
                    if matches!(&**p, Program::Loop(_)) && matches!(&**pi, TraceFormula::State(_)))
            })?;
            let StateFormula::Box_(p, pi) = &goal.suc[i] else { unreachable!() };
            let Program::Loop(alpha) = &**p else { unreachable!() };
            let psi = trace_inner(pi).clone();
            if let Ok(inv) = arg_formula(step, 0) {
                if inv != psi {
                    return Err(
                        "rule ind: the invariant must be the loop postcondition; \
                         cut the invariant into the goal first"
                            .into(),
                    );
                }
            }
            if !ant_contains(goal, &psi) {
                return Err("rule ind: the invariant does not hold in the antecedent".into());
            }
            Ok(Applied::Premises(vec![Sequent::new(
                vec![psi.clone()],
                vec![StateFormula::box_((**alpha).clone(), TraceFormula::State(psi))],
            )]))
        }
        "con" => {
            let v = arg_name(step, 0)?;
            let phi = arg_formula(step, 1)?;
            let expected_post = StateFormula::Exists(
                Binder { var: v.clone(), sort: REAL.into() },
                Box::new(StateFormula::and(
                    StateFormula::leq(Term::Var(v.clone()), Term::num(0)),
                    phi.clone(),
                )),
            );
            let i = suc_index(goal, pos, rule, |f| {
                matches!(f, StateFormula::Dia(p, pi)
                    if matches!(&**p, Program::Loop(_))
                        && matches!(&**pi, TraceFormula::State(post) if *post == expected_post))
            })?;
            let StateFormula::Dia(p, _) = &goal.suc[i] else { unreachable!() };
            let Program::Loop(alpha) = &**p else { unreachable!() };
            let exists_phi = StateFormula::Exists(
                Binder { var: v.clone(), sort: REAL.into() },
                Box::new(phi.clone()),
            );
            if !ant_contains(goal, &exists_phi) {
                return Err("rule con: the antecedent does not contain the variant".into());
            }
            if program_free_vars(alpha).contains(&v) {
                return Err(format!("rule con: variant variable {v} occurs in the loop body"));
            }
            let decremented = substitute_formula(
                &phi,
                &v,
                &Term::sub(Term::Var(v.clone()), Term::num(1)),
            )
            .map_err(|e| format!("variant decrement failed: {e}"))?;
            Ok(Applied::Premises(vec![Sequent::new(
                vec![StateFormula::and(
                    StateFormula::gt(Term::Var(v.clone()), Term::num(0)),
                    phi,
                )],
                vec![StateFormula::dia((**alpha).clone(), TraceFormula::State(decremented))],
            )]))
        }
        "di" => {
            let i = suc_index(goal, pos, rule, |f| {
                matches!(f, StateFormula::Box_(p, pi)
                    if matches!(&**p, Program::Ode { .. })
                        && matches!(&**pi, TraceFormula::State(_)))
            })?;
            let StateFormula::Box_(p, pi) = &goal.suc[i] else { unreachable!() };
            let Program::Ode { binder, items, domain } = &**p else { unreachable!() };
            if !ode_injective(binder, items) {
                return Err("rule di: differential equation is not syntactically injective".into());
            }
            let phi = trace_inner(pi).clone();
            if !ant_contains(goal, &phi) {
                return Err(
                    "rule di: the invariant does not hold in the antecedent".into(),
                );
            }
            let d = total_derivation(&ctx.sig, &phi).map_err(|e| format!("rule di: {e}"))?;
            let assign = Program::Assign {
                binder: binder.clone(),
                items: items
                    .iter()
                    .map(|it| AssignItem {
                        func: it.func.clone(),
                        args: it.args.clone(),
                        primed: true,
                        rhs: it.rhs.clone(),
                    })
                    .collect(),
            };
            let ant = if **domain == StateFormula::True {
                Vec::new()
            } else {
                vec![(**domain).clone()]
            };
            Ok(Applied::Premises(vec![Sequent::new(
                ant,
                vec![StateFormula::box_(assign, TraceFormula::State(d))],
            )]))
        }
        "dc" => {
            let psi = arg_formula(step, 0)?;
            well_typed_formula(&psi, &ctx.sig)
                .map_err(|e| format!("dc formula ill-typed: {e}"))?;
            let i = suc_index(goal, pos, rule, |f| {
                matches!(f, StateFormula::Box_(p, pi)
                    if matches!(&**p, Program::Ode { .. })
                        && matches!(&**pi, TraceFormula::State(_)))
            })?;
            let StateFormula::Box_(p, pi) = &goal.suc[i] else { unreachable!() };
            let Program::Ode { binder, items, domain } = &**p else { unreachable!() };
            let phi = trace_inner(pi).clone();
            let mut suc1 = goal.suc.clone();
            suc1[i] = StateFormula::box_(
                Program::Ode {
                    binder: binder.clone(),
                    items: items.clone(),
                    domain: domain.clone(),
                },
                TraceFormula::State(psi.clone()),
            );
            let new_domain = if **domain == StateFormula::True {
                psi
            } else {
                StateFormula::and((**domain).clone(), psi)
            };
            let mut suc2 = goal.suc.clone();
            suc2[i] = StateFormula::box_(
                Program::Ode {
                    binder: binder.clone(),
                    items: items.clone(),
                    domain: Box::new(new_domain),
                },
                TraceFormula::State(phi),
            );
            Ok(Applied::Premises(vec![
                Sequent::new(goal.ant.clone(), suc1),
                Sequent::new(goal.ant.clone(), suc2),
            ]))
        }

        // -- temporal rewrites -----------------------------------------------
        "tseqbox" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Box_(p, pi) => match (&**p, &**pi) {
                (Program::Seq(a, b), TraceFormula::Always(phi)) => Some((
                    StateFormula::and(
                        StateFormula::box_((**a).clone(), TraceFormula::Always(phi.clone())),
                        StateFormula::box_(
                            (**a).clone(),
                            TraceFormula::State(StateFormula::box_(
                                (**b).clone(),
                                TraceFormula::Always(phi.clone()),
                            )),
                        ),
                    ),
                    Strength::Equiv,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "tseqdia" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Dia(p, pi) => match (&**p, &**pi) {
                (Program::Seq(a, b), TraceFormula::Eventually(phi)) => Some((
                    StateFormula::or(
                        StateFormula::dia((**a).clone(), TraceFormula::Eventually(phi.clone())),
                        StateFormula::dia(
                            (**a).clone(),
                            TraceFormula::State(StateFormula::dia(
                                (**b).clone(),
                                TraceFormula::Eventually(phi.clone()),
                            )),
                        ),
                    ),
                    Strength::Equiv,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "ttestbox" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Box_(p, pi) => match (&**p, &**pi) {
                (Program::Test(_), TraceFormula::Always(phi)) => {
                    Some((phi.clone(), Strength::Equiv))
                }
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "ttestdia" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Dia(p, pi) => match (&**p, &**pi) {
                (Program::Test(_), TraceFormula::Eventually(phi)) => {
                    Some((phi.clone(), Strength::Equiv))
                }
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "tassignbox" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Box_(p, pi) => match (&**p, &**pi) {
                (Program::Assign { .. } | Program::VarAssign { .. }, TraceFormula::Always(phi)) => {
                    Some((
                        StateFormula::and(
                            phi.clone(),
                            StateFormula::box_((**p).clone(), TraceFormula::State(phi.clone())),
                        ),
                        Strength::Equiv,
                    ))
                }
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "tassigndia" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Dia(p, pi) => match (&**p, &**pi) {
                (
                    Program::Assign { .. } | Program::VarAssign { .. },
                    TraceFormula::Eventually(phi),
                ) => Some((
                    StateFormula::or(
                        phi.clone(),
                        StateFormula::dia((**p).clone(), TraceFormula::State(phi.clone())),
                    ),
                    Strength::Equiv,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "todebox" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Box_(p, pi) => match (&**p, &**pi) {
                (Program::Ode { .. }, TraceFormula::Always(phi)) => Some((
                    StateFormula::box_((**p).clone(), TraceFormula::State(phi.clone())),
                    Strength::Equiv,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "todedia" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Dia(p, pi) => match (&**p, &**pi) {
                (Program::Ode { .. }, TraceFormula::Eventually(phi)) => Some((
                    StateFormula::dia((**p).clone(), TraceFormula::State(phi.clone())),
                    Strength::Equiv,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "tunwind" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Box_(p, pi) => match (&**p, &**pi) {
                (Program::Loop(a), TraceFormula::Always(_)) => Some((
                    StateFormula::Box_(
                        Box::new(Program::Seq(a.clone(), Box::new((**p).clone()))),
                        pi.clone(),
                    ),
                    Strength::Weaken,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "tunwinddia" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Dia(p, pi) => match (&**p, &**pi) {
                (Program::Loop(a), TraceFormula::Eventually(_)) => Some((
                    StateFormula::Dia(
                        Box::new(Program::Seq(a.clone(), Box::new((**p).clone()))),
                        pi.clone(),
                    ),
                    Strength::Weaken,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "tloopbox" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Box_(p, pi) => match (&**p, &**pi) {
                (Program::Loop(a), TraceFormula::Always(phi)) => Some((
                    StateFormula::box_(
                        (**p).clone(),
                        TraceFormula::State(StateFormula::box_(
                            (**a).clone(),
                            TraceFormula::Always(phi.clone()),
                        )),
                    ),
                    Strength::Weaken,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),
        "tloopdia" => apply_rewrite(goal, pos, rule, &mut |f, _, _| match f {
            StateFormula::Dia(p, pi) => match (&**p, &**pi) {
                (Program::Loop(a), TraceFormula::Eventually(phi)) => Some((
                    StateFormula::dia(
                        (**p).clone(),
                        TraceFormula::State(StateFormula::dia(
                            (**a).clone(),
                            TraceFormula::Eventually(phi.clone()),
                        )),
                    ),
                    Strength::Weaken,
                )),
                _ => None,
            },
            _ => None,
        })
        .map(Applied::Premises),

        // -- finitary liveness -----------------------------------------------
        "finseq" => {
            let i = suc_index(goal, pos, rule, |f| {
                matches!(f, StateFormula::Box_(p, pi)
                    if matches!(&**p, Program::Seq(..))
                        && matches!(&**pi, TraceFormula::Eventually(_)))
            })?;
            let StateFormula::Box_(p, pi) = &goal.suc[i] else { unreachable!() };
            let Program::Seq(a, b) = &**p else { unreachable!() };
            let TraceFormula::Eventually(phi) = &**pi else { unreachable!() };
            let mut suc = without(goal.suc.clone(), i);
            suc.push(StateFormula::box_((**a).clone(), TraceFormula::Eventually(phi.clone())));
            suc.push(StateFormula::box_(
                (**a).clone(),
                TraceFormula::State(StateFormula::box_(
                    (**b).clone(),
                    TraceFormula::Eventually(phi.clone()),
                )),
            ));
            Ok(Applied::Premises(vec![Sequent::new(goal.ant.clone(), suc)]))
        }
        "monitor" => {
            let i = suc_index(goal, pos, rule, |f| {
                matches!(f, StateFormula::Box_(_, pi)
                    if matches!(&**pi, TraceFormula::Eventually(_)))
            })?;
            let StateFormula::Box_(p, pi) = &goal.suc[i] else { unreachable!() };
            let TraceFormula::Eventually(phi) = &**pi else { unreachable!() };
            let tvar = ctx.fresh("t", goal);
            let monitored =
                transform_monitor(p, phi, &tvar).map_err(|e| format!("rule monitor: {e}"))?;
            let mut suc = goal.suc.clone();
            suc[i] = StateFormula::or(
                phi.clone(),
                StateFormula::Forall(
                    Binder { var: tvar.clone(), sort: REAL.into() },
                    Box::new(StateFormula::box_(
                        monitored,
                        TraceFormula::State(StateFormula::Eq(Term::Var(tvar), Term::num(1))),
                    )),
                ),
            );
            Ok(Applied::Premises(vec![Sequent::new(goal.ant.clone(), suc)]))
        }

        other => Err(format!(
            "unknown rule '{other}'; nearest catalog rule is '{}'",
            nearest_rule(other)
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_theory, Span, Step, Theory};
    use crate::printer::print_sequent;
    use std::collections::BTreeSet;

    fn th() -> Theory {
        parse_theory(
            "sort A\nfunc a : R\nfunc b : R\nfunc g : A -> R\nconjecture dummy : true\n",
        )
        .unwrap()
    }

    fn premises(src: &str, rule: &str) -> Vec<String> {
        let th = th();
        let phi = parse_formula(src, &th).unwrap();
        let goal = Sequent::new(vec![], vec![phi]);
        let mut ctx = ProofCtx::new(th.sig.clone(), None);
        let step = Step {
            rule: rule.into(),
            args: vec![],
            pos: None,
            children: None,
            span: Span { start: 0, end: 0, line: 0, col: 0 },
        };
        match apply_rule(&mut ctx, &goal, &step).unwrap() {
            Applied::Premises(ps) => ps.iter().map(|p| print_sequent(p).trim().to_string()).collect(),
            other => panic!("expected premises, got {other:?}"),
        }
    }

    #[test]
    fn catalog_is_well_formed() {
        assert_eq!(CATALOG.len(), 48);
        let ids: BTreeSet<&str> = CATALOG.iter().map(|(id, _)| *id).collect();
        assert_eq!(ids.len(), CATALOG.len(), "duplicate rule ids");
        let h = catalog_hash();
        assert_eq!(h.len(), 64);
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
        // box/diamond program rules come in dual pairs
        for pair in [
            ("seqbox", "seqdia"),
            ("choicebox", "choicedia"),
            ("testbox", "testdia"),
            ("assignbox", "assigndia"),
            ("tseqbox", "tseqdia"),
            ("ttestbox", "ttestdia"),
            ("tassignbox", "tassigndia"),
            ("todebox", "todedia"),
            ("tunwind", "tunwinddia"),
            ("tloopbox", "tloopdia"),
        ] {
            assert!(ids.contains(pair.0), "{} missing", pair.0);
            assert!(ids.contains(pair.1), "{} missing", pair.1);
        }
    }

    #[test]
    fn unknown_rules_get_a_suggestion() {
        let th = th();
        let phi = parse_formula("true", &th).unwrap();
        let goal = Sequent::new(vec![], vec![phi]);
        let mut ctx = ProofCtx::new(th.sig.clone(), None);
        let step = Step {
            rule: "seqbx".into(),
            args: vec![],
            pos: None,
            children: None,
            span: Span { start: 0, end: 0, line: 0, col: 0 },
        };
        let err = apply_rule(&mut ctx, &goal, &step).unwrap_err();
        assert!(err.contains("seqbox"), "suggestion missing from: {err}");
    }

    #[test]
    fn program_rule_schemata() {
        assert_eq!(premises("[a := 3] a = 3", "assignbox"), vec!["|- 3 = 3"]);
        assert_eq!(
            premises("[a := 1 ; b := a] b = 1", "seqbox"),
            vec!["|- [a := 1] [b := a] b = 1"]
        );
        assert_eq!(
            premises("[?a >= 0 ++ a := 1] a >= 0", "choicebox"),
            vec!["|- [?a >= 0] a >= 0 & [a := 1] a >= 0"]
        );
        assert_eq!(
            premises("<?a >= 0 ++ a := 1> a >= 0", "choicedia"),
            vec!["|- <?a >= 0> a >= 0 | <a := 1> a >= 0"]
        );
        assert_eq!(premises("<?a >= 0> a = b", "testdia"), vec!["|- a >= 0 & a = b"]);
    }

    #[test]
    fn temporal_rule_schemata() {
        // a test contributes no intermediate states
        assert_eq!(premises("[?a >= 0] box a = b", "ttestbox"), vec!["|- a = b"]);
        // an assignment's invariant covers both endpoint states
        assert_eq!(
            premises("[a := 3] box a >= 0", "tassignbox"),
            vec!["|- a >= 0 & [a := 3] a >= 0"]
        );
        // sequencing splits the invariant across both phases
        assert_eq!(
            premises("[a := 1 ; b := a] box b >= 0", "tseqbox"),
            vec!["|- [a := 1] box b >= 0 & [a := 1] [b := a] box b >= 0"]
        );
        // unwinding keeps the temporal modality
        assert_eq!(
            premises("[(a := a + 1)*] box a >= 0", "tunwind"),
            vec!["|- [a := a + 1 ; (a := a + 1)*] box a >= 0"]
        );
        assert_eq!(
            premises("[(a := a + 1)*] box a >= 0", "tloopbox"),
            vec!["|- [(a := a + 1)*] [a := a + 1] box a >= 0"]
        );
    }

    #[test]
    fn monitor_introduces_a_fresh_clock() {
        let ps = premises("[a := 1] dia a >= 0", "monitor");
        assert_eq!(
            ps,
            vec!["|- a >= 0 | forall t0:R [a := 1 ; ?a >= 0 -> t0 = 1] t0 = 1"]
        );
    }

    #[test]
    fn quantifier_rules_skolemize() {
        assert_eq!(premises("forall i:A g(i) >= 0", "forallr"), vec!["|- g(sk0) >= 0"]);
    }
}
