//! Bridge between sequent goals and the real-arithmetic decision layer:
//! Skolemize, instantiate, flatten to polynomial constraints, decide.

use crate::arith::decide::{decide_universal, Constraint, Method, RealVerdict, Rel};
use crate::arith::poly::normalize_diff;
use crate::arith::solver::SolverCfg;
use crate::calculus::subst::push_assignment;
use crate::syntax::*;
use std::collections::{BTreeMap, BTreeSet};

const BRANCH_CAP: usize = 64;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleStats {
    pub identity: usize,
    pub sign_cone: usize,
    pub linear_fm: usize,
    pub external: usize,
    pub unknown: usize,
}

#[derive(Clone, Debug, Default)]
pub struct OracleCtx {
    pub stats: OracleStats,
    pub solver: Option<SolverCfg>,
}

#[derive(Clone, Debug)]
pub enum OracleResult {
    Closed(Vec<Method>),
    Open(String),
}

struct Prep<'a> {
    sig: &'a Signature,
    counter: usize,
    /// Skolem constants introduced while preparing this goal, with sorts.
    consts: Vec<(String, String)>,
}

impl<'a> Prep<'a> {
    fn fresh_const(&mut self, sort: &str) -> Term {
        let name = format!("c!{}", self.counter);
        self.counter += 1;
        self.consts.push((name.clone(), sort.to_string()));
        Term::App(name, Vec::new())
    }

    fn fresh_real_var(&mut self) -> Term {
        let name = format!("r!{}", self.counter);
        self.counter += 1;
        Term::Var(name)
    }

    fn term_sort(&self, t: &Term) -> Option<String> {
        match t {
            Term::Num(_) | Term::DiffApp(..) => Some(REAL.to_string()),
            Term::Var(v) => self.sig.vars.get(v).cloned(),
            Term::App(f, _) => {
                if let Some((_, s)) = self.consts.iter().find(|(n, _)| n == f) {
                    return Some(s.clone());
                }
                if is_builtin_arith(f) {
                    return Some(REAL.to_string());
                }
                self.sig.funcs.get(f).map(|d| d.result.clone())
            }
            Term::Cond(..) => None,
        }
    }

    /// Ground object terms of the given sort available for instantiating
    /// universal hypotheses.
    fn instances(&self, sort: &str, goal_fns: &BTreeSet<String>) -> Vec<Term> {
        let mut out = Vec::new();
        for (n, s) in &self.consts {
            if s == sort {
                out.push(Term::App(n.clone(), Vec::new()));
            }
        }
        for f in goal_fns {
            if let Some(d) = self.sig.funcs.get(f) {
                if d.arg_sorts.is_empty() && d.result == *sort && d.rigid {
                    out.push(Term::App(f.clone(), Vec::new()));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Try to close a sequent goal by real-arithmetic reasoning.  Succeeds when
/// some succedent formula follows from the antecedent after Skolemization of
/// its quantifiers and instantiation of universal hypotheses.
pub fn close_goal(ctx: &mut OracleCtx, sig: &Signature, goal: &Sequent) -> OracleResult {
    let mut goal_fns = BTreeSet::new();
    for f in goal.ant.iter().chain(goal.suc.iter()) {
        goal_fns.extend(formula_fns(f));
    }
    let ant: Vec<StateFormula> = goal.ant.iter().map(|f| push_equiv_assignments(f)).collect();
    let suc: Vec<StateFormula> = goal.suc.iter().map(|f| push_equiv_assignments(f)).collect();

    let mut last_diag = "no succedent formula is arithmetic".to_string();
    for cand in &suc {
        let mut prep = Prep { sig, counter: 0, consts: Vec::new() };
        let obls = match obligations(&mut prep, cand, Vec::new()) {
            Ok(o) => o,
            Err(e) => {
                last_diag = e;
                continue;
            }
        };
        let mut base_branches: Vec<Vec<Constraint>> = vec![Vec::new()];
        for h in &ant {
            let dnf = conv(&mut prep, h, &goal_fns);
            base_branches = cross(base_branches, dnf);
            if base_branches.len() > BRANCH_CAP {
                // Too many case splits: keep only the hypotheses so far.
                base_branches.truncate(BRANCH_CAP);
            }
        }
        let mut methods = Vec::new();
        let mut failed: Option<String> = None;
        'obl: for (scoped, con) in &obls {
            let mut branches = base_branches.clone();
            for h in scoped {
                let dnf = conv(&mut prep, h, &goal_fns);
                branches = cross(branches, dnf);
                branches.truncate(BRANCH_CAP);
            }
            for branch in &branches {
                match decide_universal(branch, con, ctx.solver.as_ref()) {
                    RealVerdict::Valid(m) => methods.push(m),
                    RealVerdict::Invalid(w) => {
                        failed = Some(match w {
                            Some(w) => format!(
                                "counterexample to arithmetic goal: {}",
                                witness_string(&w)
                            ),
                            None => "solver reports the arithmetic goal satisfiably false"
                                .to_string(),
                        });
                        break 'obl;
                    }
                    RealVerdict::Unknown(d) => {
                        failed = Some(format!("arithmetic oracle undecided: {d}"));
                        break 'obl;
                    }
                }
            }
        }
        match failed {
            None => {
                for m in &methods {
                    match m {
                        Method::Identity => ctx.stats.identity += 1,
                        Method::SignCone => ctx.stats.sign_cone += 1,
                        Method::LinearFm => ctx.stats.linear_fm += 1,
                        Method::External => ctx.stats.external += 1,
                    }
                }
                return OracleResult::Closed(methods);
            }
            Some(d) => last_diag = d,
        }
    }
    ctx.stats.unknown += 1;
    OracleResult::Open(last_diag)
}

fn witness_string(w: &BTreeMap<Term, Rat>) -> String {
    w.iter().map(|(t, v)| format!("{t} = {v}")).collect::<Vec<_>>().join(", ")
}

/// Eliminate assignment modalities that push through completely; leave
/// everything else untouched.
pub fn push_equiv_assignments(phi: &StateFormula) -> StateFormula {
    let out = match phi {
        StateFormula::True | StateFormula::False | StateFormula::Eq(..) | StateFormula::Geq(..) => {
            phi.clone()
        }
        StateFormula::Not(a) => StateFormula::not(push_equiv_assignments(a)),
        StateFormula::And(a, b) => {
            StateFormula::and(push_equiv_assignments(a), push_equiv_assignments(b))
        }
        StateFormula::Forall(b, body) => {
            StateFormula::Forall(b.clone(), Box::new(push_equiv_assignments(body)))
        }
        StateFormula::Exists(b, body) => {
            StateFormula::Exists(b.clone(), Box::new(push_equiv_assignments(body)))
        }
        StateFormula::Box_(p, pi) | StateFormula::Dia(p, pi) => {
            if let (Program::Assign { binder, items }, TraceFormula::State(f)) = (&**p, &**pi) {
                if let Ok(pushed) = push_assignment(binder, items, f) {
                    if pushed.dropped.is_empty() {
                        return push_equiv_assignments(&pushed.result);
                    }
                }
            }
            phi.clone()
        }
    };
    out
}

/// Decompose a succedent formula into atomic proof obligations, each with
/// the hypotheses scoped over it by implications along the way.
fn obligations(
    prep: &mut Prep<'_>,
    phi: &StateFormula,
    hyps: Vec<StateFormula>,
) -> Result<Vec<(Vec<StateFormula>, Constraint)>, String> {
    if let Some((a, b)) = phi.as_lt() {
        let poly = normalize_diff(a, b).map_err(|e| format!("not polynomial: {e}"))?;
        return Ok(vec![(hyps, Constraint::new(poly.neg(), Rel::Gt))]);
    }
    if let Some((a, b)) = phi.as_imp() {
        let mut hyps = hyps;
        hyps.push(a.clone());
        return obligations(prep, b, hyps);
    }
    if let Some((a, b)) = phi.as_or() {
        let mut hyps = hyps;
        hyps.push(StateFormula::not(a.clone()));
        return obligations(prep, b, hyps);
    }
    match phi {
        StateFormula::True => Ok(Vec::new()),
        StateFormula::False => Err("goal reduces to false".into()),
        StateFormula::Eq(a, b) => {
            if prep.term_sort(a).map_or(false, |s| s != REAL) {
                return Err("equality between objects is not arithmetic".into());
            }
            let poly = normalize_diff(a, b).map_err(|e| format!("not polynomial: {e}"))?;
            Ok(vec![(hyps, Constraint::new(poly, Rel::Eq))])
        }
        StateFormula::Geq(a, b) => {
            let poly = normalize_diff(a, b).map_err(|e| format!("not polynomial: {e}"))?;
            Ok(vec![(hyps, Constraint::new(poly, Rel::Geq))])
        }
        StateFormula::Not(inner) => match &**inner {
            StateFormula::Eq(a, b) => {
                let poly = normalize_diff(a, b).map_err(|e| format!("not polynomial: {e}"))?;
                Ok(vec![(hyps, Constraint::new(poly, Rel::Neq))])
            }
            _ => Err("negation in the goal is not an arithmetic atom".into()),
        },
        StateFormula::And(a, b) => {
            let mut out = obligations(prep, a, hyps.clone())?;
            out.extend(obligations(prep, b, hyps)?);
            Ok(out)
        }
        StateFormula::Forall(b, body) => {
            let witness = if b.sort == REAL {
                prep.fresh_real_var()
            } else {
                prep.fresh_const(&b.sort)
            };
            let inst = substitute_formula(body, &b.var, &witness)
                .map_err(|e| format!("instantiation failed: {e}"))?;
            obligations(prep, &inst, hyps)
        }
        StateFormula::Exists(..) => {
            Err("existential goal needs an explicit witness (existsr)".into())
        }
        StateFormula::Box_(..) | StateFormula::Dia(..) => {
            Err("goal still contains a modality".into())
        }
    }
}

fn cross(a: Vec<Vec<Constraint>>, b: Vec<Vec<Constraint>>) -> Vec<Vec<Constraint>> {
    let mut out = Vec::new();
    for x in &a {
        for y in &b {
            let mut z = x.clone();
            z.extend(y.iter().cloned());
            out.push(z);
            if out.len() > BRANCH_CAP * 2 {
                return out;
            }
        }
    }
    out
}

fn atom_constraint(a: &Term, b: &Term, rel: Rel) -> Option<Vec<Vec<Constraint>>> {
    let poly = normalize_diff(a, b).ok()?;
    Some(vec![vec![Constraint::new(poly, rel)]])
}

/// Convert a hypothesis into disjunctive normal form over polynomial
/// constraints.  Anything unsupported is over-approximated by `true`, which
/// only ever weakens the hypothesis side and is therefore sound.
fn conv(
    prep: &mut Prep<'_>,
    phi: &StateFormula,
    goal_fns: &BTreeSet<String>,
) -> Vec<Vec<Constraint>> {
    let top = vec![Vec::new()];
    if let Some((a, b)) = phi.as_lt() {
        return atom_constraint(b, a, Rel::Gt).unwrap_or(top);
    }
    if let Some((a, b)) = phi.as_imp() {
        let mut out = conv_neg(prep, a, goal_fns);
        out.extend(conv(prep, b, goal_fns));
        return out;
    }
    if let Some((a, b)) = phi.as_or() {
        let mut out = conv(prep, a, goal_fns);
        out.extend(conv(prep, b, goal_fns));
        return out;
    }
    match phi {
        StateFormula::True => top,
        StateFormula::False => Vec::new(),
        StateFormula::Eq(a, b) => {
            if prep.term_sort(a).map_or(false, |s| s != REAL) {
                return top;
            }
            atom_constraint(a, b, Rel::Eq).unwrap_or(top)
        }
        StateFormula::Geq(a, b) => atom_constraint(a, b, Rel::Geq).unwrap_or(top),
        StateFormula::Not(inner) => conv_neg(prep, inner, goal_fns),
        StateFormula::And(a, b) => {
            let mut out = cross(conv(prep, a, goal_fns), conv(prep, b, goal_fns));
            out.truncate(BRANCH_CAP);
            out
        }
        StateFormula::Forall(b, body) => {
            if b.sort == REAL {
                let v = prep.fresh_real_var();
                match substitute_formula(body, &b.var, &v) {
                    Ok(inst) => conv(prep, &inst, goal_fns),
                    Err(_) => top,
                }
            } else {
                let mut out = vec![Vec::new()];
                for t in prep.instances(&b.sort, goal_fns) {
                    match substitute_formula(body, &b.var, &t) {
                        Ok(inst) => {
                            out = cross(out, conv(prep, &inst, goal_fns));
                            out.truncate(BRANCH_CAP);
                        }
                        Err(_) => {}
                    }
                }
                out
            }
        }
        StateFormula::Exists(b, body) => {
            let witness = if b.sort == REAL {
                prep.fresh_real_var()
            } else {
                prep.fresh_const(&b.sort)
            };
            match substitute_formula(body, &b.var, &witness) {
                Ok(inst) => conv(prep, &inst, goal_fns),
                Err(_) => top,
            }
        }
        StateFormula::Box_(..) | StateFormula::Dia(..) => top,
    }
}

fn conv_neg(
    prep: &mut Prep<'_>,
    phi: &StateFormula,
    goal_fns: &BTreeSet<String>,
) -> Vec<Vec<Constraint>> {
    let top = vec![Vec::new()];
    if let Some((a, b)) = phi.as_lt() {
        // not (a < b)  ==  a >= b
        return atom_constraint(a, b, Rel::Geq).unwrap_or(top);
    }
    if let Some((a, b)) = phi.as_imp() {
        // not (a -> b)  ==  a /\ not b
        let mut out = cross(conv(prep, a, goal_fns), conv_neg(prep, b, goal_fns));
        out.truncate(BRANCH_CAP);
        return out;
    }
    if let Some((a, b)) = phi.as_or() {
        let mut out = cross(conv_neg(prep, a, goal_fns), conv_neg(prep, b, goal_fns));
        out.truncate(BRANCH_CAP);
        return out;
    }
    match phi {
        StateFormula::True => Vec::new(),
        StateFormula::False => top,
        StateFormula::Eq(a, b) => {
            if prep.term_sort(a).map_or(false, |s| s != REAL) {
                return top;
            }
            atom_constraint(a, b, Rel::Neq).unwrap_or(top)
        }
        StateFormula::Geq(a, b) => atom_constraint(b, a, Rel::Gt).unwrap_or(top),
        StateFormula::Not(inner) => conv(prep, inner, goal_fns),
        StateFormula::And(a, b) => {
            let mut out = conv_neg(prep, a, goal_fns);
            out.extend(conv_neg(prep, b, goal_fns));
            out
        }
        StateFormula::Forall(b, body) => {
            // not forall == exists not: one Skolem witness.
            let witness = if b.sort == REAL {
                prep.fresh_real_var()
            } else {
                prep.fresh_const(&b.sort)
            };
            match substitute_formula(body, &b.var, &witness) {
                Ok(inst) => conv_neg(prep, &inst, goal_fns),
                Err(_) => top,
            }
        }
        StateFormula::Exists(b, body) => {
            // not exists == forall not: instantiate.
            if b.sort == REAL {
                let v = prep.fresh_real_var();
                match substitute_formula(body, &b.var, &v) {
                    Ok(inst) => conv_neg(prep, &inst, goal_fns),
                    Err(_) => top,
                }
            } else {
                let mut out = vec![Vec::new()];
                for t in prep.instances(&b.sort, goal_fns) {
                    if let Ok(inst) = substitute_formula(body, &b.var, &t) {
                        out = cross(out, conv_neg(prep, &inst, goal_fns));
                        out.truncate(BRANCH_CAP);
                    }
                }
                out
            }
        }
        StateFormula::Box_(..) | StateFormula::Dia(..) => top,
    }
}
