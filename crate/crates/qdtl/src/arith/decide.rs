//! Three-valued decision procedures for universal real-arithmetic goals:
//! hypothesis elimination by exact Gaussian substitution, polynomial identity
//! checking, a nonnegative-combination (sign cone) certificate search via
//! exact rational simplex, Fourier–Motzkin elimination for linear systems,
//! and an escape hatch to an external solver.

use super::poly::{Monomial, Polynomial};
use super::solver::{query_solver, SolverAnswer, SolverCfg};
use crate::syntax::{Rat, Term};
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Rel {
    /// poly = 0
    Eq,
    /// poly ≥ 0
    Geq,
    /// poly > 0
    Gt,
    /// poly ≠ 0
    Neq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub poly: Polynomial,
    pub rel: Rel,
}

impl Constraint {
    pub fn new(poly: Polynomial, rel: Rel) -> Constraint {
        Constraint { poly, rel }
    }

    /// Negation, as one or two constraints whose disjunction is equivalent.
    fn negations(&self) -> Vec<Constraint> {
        match self.rel {
            Rel::Eq => vec![
                Constraint::new(self.poly.clone(), Rel::Gt),
                Constraint::new(self.poly.neg(), Rel::Gt),
            ],
            Rel::Geq => vec![Constraint::new(self.poly.neg(), Rel::Gt)],
            Rel::Gt => vec![Constraint::new(self.poly.neg(), Rel::Geq)],
            Rel::Neq => vec![Constraint::new(self.poly.clone(), Rel::Eq)],
        }
    }

    pub fn holds_at(&self, assignment: &BTreeMap<Term, Rat>) -> Option<bool> {
        let v = self.poly.eval(assignment)?;
        Some(match self.rel {
            Rel::Eq => v.is_zero(),
            Rel::Geq => !v.is_negative(),
            Rel::Gt => v.is_positive(),
            Rel::Neq => !v.is_zero(),
        })
    }
}

/// Which internal procedure closed (or refuted) the goal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Method {
    Identity,
    SignCone,
    LinearFm,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealVerdict {
    Valid(Method),
    /// A witness satisfies the hypotheses but violates the goal; absent when
    /// only the external solver reported satisfiability.
    Invalid(Option<BTreeMap<Term, Rat>>),
    Unknown(String),
}

/// Decide validity of `hyps ⟹ goal` over the reals, atoms universally
/// quantified. Sound in both directions: `Valid` carries a checked
/// certificate path, `Invalid` a concrete rational witness (unless external).
pub fn decide_universal(
    hyps: &[Constraint],
    goal: &Constraint,
    solver: Option<&SolverCfg>,
) -> RealVerdict {
    let mut hyps: Vec<Constraint> = hyps.to_vec();
    let mut goal = goal.clone();
    // 1. Gaussian elimination of equality hypotheses linear in some atom
    //    with a rational coefficient. Record substitutions for witnesses.
    let mut pending = Vec::new();
    loop {
        let mut fired = false;
        for k in 0..hyps.len() {
            if hyps[k].rel != Rel::Eq {
                continue;
            }
            let atoms = hyps[k].poly.atoms();
            let Some((atom, coeff, rest)) = atoms
                .iter()
                .find_map(|a| hyps[k].poly.split_linear_in(a).map(|(c, r)| (a.clone(), c, r)))
            else {
                continue;
            };
            let replacement = rest.neg().scale(&(Rat::one() / coeff));
            pending.push((atom.clone(), replacement.clone()));
            let eliminated = hyps.remove(k);
            let _ = eliminated;
            for h in &mut hyps {
                h.poly = h.poly.substitute_atom(&atom, &replacement);
            }
            goal.poly = goal.poly.substitute_atom(&atom, &replacement);
            fired = true;
            break;
        }
        if !fired {
            break;
        }
    }

    // 2. Hypotheses with a contradictory constant part close the goal
    //    vacuously.
    for h in &hyps {
        if let Some(c) = h.poly.as_constant() {
            let sat = match h.rel {
                Rel::Eq => c.is_zero(),
                Rel::Geq => !c.is_negative(),
                Rel::Gt => c.is_positive(),
                Rel::Neq => !c.is_zero(),
            };
            if !sat {
                return RealVerdict::Valid(Method::Identity);
            }
        }
    }
    hyps.retain(|h| h.poly.as_constant().is_none());

    // 3. Constant goals.
    if let Some(c) = goal.poly.as_constant() {
        let sat = match goal.rel {
            Rel::Eq => c.is_zero(),
            Rel::Geq => !c.is_negative(),
            Rel::Gt => c.is_positive(),
            Rel::Neq => !c.is_zero(),
        };
        if sat {
            return RealVerdict::Valid(Method::Identity);
        }
        // Constant-false goal: any model of the hypotheses refutes it.
        if hyps.is_empty() {
            return RealVerdict::Invalid(Some(complete_witness(BTreeMap::new(), &pending)));
        }
    }

    // 4. Fully linear systems: complete via Fourier–Motzkin refutation of
    //    hyps ∧ ¬goal, branching over disequalities.
    let all_linear =
        hyps.iter().all(|h| h.poly.degree() <= 1) && goal.poly.degree() <= 1;
    if all_linear {
        match fm_refute(&hyps, &goal) {
            FmOutcome::AllUnsat => return RealVerdict::Valid(Method::LinearFm),
            FmOutcome::Witness(w) => {
                return RealVerdict::Invalid(Some(complete_witness(w, &pending)))
            }
            FmOutcome::TooManyBranches => {}
        }
    }

    // 4b. The goal also follows vacuously when the linear hypotheses alone
    //     are jointly unsatisfiable.
    let lin_hyps: Vec<Constraint> =
        hyps.iter().filter(|h| h.poly.degree() <= 1).cloned().collect();
    if !all_linear && !lin_hyps.is_empty() {
        if let Some(branches) = branch_neqs(&lin_hyps) {
            if branches.iter().all(|b| fm_sat(b).is_none()) {
                return RealVerdict::Valid(Method::LinearFm);
            }
        }
    }

    // 5. Sign-cone certificate for nonlinear goals.
    match goal.rel {
        Rel::Geq | Rel::Gt => {
            if cone_member(&hyps, &goal.poly) {
                // For strict goals the cone only proves ≥; require a strictly
                // positive constant slack as well.
                if goal.rel == Rel::Geq || cone_member_strict(&hyps, &goal.poly) {
                    return RealVerdict::Valid(Method::SignCone);
                }
            }
        }
        Rel::Eq => {
            if goal.poly.is_zero()
                || (cone_member(&hyps, &goal.poly) && cone_member(&hyps, &goal.poly.neg()))
            {
                return RealVerdict::Valid(if goal.poly.is_zero() {
                    Method::Identity
                } else {
                    Method::SignCone
                });
            }
        }
        Rel::Neq => {}
    }

    // 6. Witness search on a small rational grid.
    if let Some(w) = grid_witness(&hyps, &goal) {
        return RealVerdict::Invalid(Some(complete_witness(w, &pending)));
    }

    // 7. External solver, if configured.
    if let Some(cfg) = solver {
        let mut system = hyps.clone();
        // hyps ∧ ¬goal unsatisfiable ⟺ implication valid. A disjunctive
        // negation (equality goals) becomes two queries.
        let negs = goal.negations();
        let mut all_unsat = true;
        let mut any_sat = false;
        let mut unknown = false;
        for n in negs {
            system.push(n);
            match query_solver(cfg, &system) {
                SolverAnswer::Unsat => {}
                SolverAnswer::Sat => {
                    any_sat = true;
                    all_unsat = false;
                }
                SolverAnswer::Unknown(_) => {
                    all_unsat = false;
                    unknown = true;
                }
            }
            system.pop();
        }
        if all_unsat {
            return RealVerdict::Valid(Method::External);
        }
        if any_sat && !unknown {
            return RealVerdict::Invalid(None);
        }
    }

    RealVerdict::Unknown("no internal procedure applies; goal left open".into())
}

fn complete_witness(
    mut w: BTreeMap<Term, Rat>,
    pending: &[(Term, Polynomial)],
) -> BTreeMap<Term, Rat> {
    // Back-substitute eliminated atoms in reverse order; default any atom
    // still unassigned in a replacement to 0.
    for (atom, repl) in pending.iter().rev() {
        for a in repl.atoms() {
            w.entry(a).or_insert_with(Rat::zero);
        }
        let v = repl.eval(&w).expect("all atoms assigned");
        w.insert(atom.clone(), v);
    }
    w
}

// ---------------------------------------------------------------------------
// Fourier–Motzkin

enum FmOutcome {
    AllUnsat,
    Witness(BTreeMap<Term, Rat>),
    TooManyBranches,
}

/// Split every disequality into its two strict sides, producing the full set
/// of disequality-free branches; `None` when the branch count exceeds 64.
fn branch_neqs(cons: &[Constraint]) -> Option<Vec<Vec<Constraint>>> {
    let mut branch_sets: Vec<Vec<Constraint>> = vec![Vec::new()];
    for h in cons {
        let options = match h.rel {
            Rel::Neq => vec![
                Constraint::new(h.poly.clone(), Rel::Gt),
                Constraint::new(h.poly.neg(), Rel::Gt),
            ],
            _ => vec![h.clone()],
        };
        let mut out = Vec::new();
        for b in &branch_sets {
            for o in &options {
                let mut b2 = b.clone();
                b2.push(o.clone());
                out.push(b2);
            }
        }
        branch_sets = out;
        if branch_sets.len() > 64 {
            return None;
        }
    }
    Some(branch_sets)
}

/// Refute `hyps ∧ ¬goal`; complete for linear rational constraints.
fn fm_refute(hyps: &[Constraint], goal: &Constraint) -> FmOutcome {
    // Branch over every disequality (hypotheses and the goal negation).
    let Some(branch_sets) = branch_neqs(hyps) else {
        return FmOutcome::TooManyBranches;
    };
    // Each branch must additionally satisfy one disjunct of ¬goal; ¬goal is
    // a disjunction, so satisfiability of any (branch, disjunct) pair yields
    // a counterexample, and validity needs all pairs unsatisfiable.
    let neg_goal = goal.negations();
    for b in &branch_sets {
        for n in &neg_goal {
            let mut sys = b.clone();
            sys.push(n.clone());
            if let Some(w) = fm_sat(&sys) {
                return FmOutcome::Witness(w);
            }
        }
    }
    FmOutcome::AllUnsat
}

#[derive(Clone, Debug)]
struct LinCon {
    coeffs: BTreeMap<Term, Rat>,
    konst: Rat,
    strict: bool,
}

impl LinCon {
    fn coeff(&self, x: &Term) -> Rat {
        self.coeffs.get(x).cloned().unwrap_or_else(Rat::zero)
    }
}

/// Satisfiability of a conjunction of linear (in)equalities; returns a
/// witness when satisfiable. Equalities are split into two inequalities.
fn fm_sat(cons: &[Constraint]) -> Option<BTreeMap<Term, Rat>> {
    let mut lin: Vec<LinCon> = Vec::new();
    for c in cons {
        let (coeffs, konst) = c.poly.linear_form().expect("linear system");
        match c.rel {
            Rel::Geq => lin.push(LinCon { coeffs, konst, strict: false }),
            Rel::Gt => lin.push(LinCon { coeffs, konst, strict: true }),
            Rel::Eq => {
                lin.push(LinCon { coeffs: coeffs.clone(), konst: konst.clone(), strict: false });
                lin.push(LinCon {
                    coeffs: coeffs.iter().map(|(t, c)| (t.clone(), -c)).collect(),
                    konst: -konst,
                    strict: false,
                });
            }
            Rel::Neq => unreachable!("disequalities are branched before FM"),
        }
    }
    let mut vars: Vec<Term> = lin
        .iter()
        .flat_map(|c| c.coeffs.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // Eliminate variables one by one, remembering each elimination layer for
    // witness back-substitution.
    let mut layers: Vec<(Term, Vec<LinCon>)> = Vec::new();
    while let Some(x) = vars.pop() {
        let (with_x, without_x): (Vec<LinCon>, Vec<LinCon>) =
            lin.into_iter().partition(|c| !c.coeff(&x).is_zero());
        let mut next = without_x;
        let pos: Vec<&LinCon> = with_x.iter().filter(|c| c.coeff(&x).is_positive()).collect();
        let neg: Vec<&LinCon> = with_x.iter().filter(|c| c.coeff(&x).is_negative()).collect();
        for p in &pos {
            for n in &neg {
                // (-b)·p + a·n with a = p.coeff(x) > 0, b = n.coeff(x) < 0
                let a = p.coeff(&x);
                let b = n.coeff(&x);
                let mut coeffs: BTreeMap<Term, Rat> = BTreeMap::new();
                for (t, c) in p.coeffs.iter().chain(n.coeffs.iter()) {
                    coeffs.entry(t.clone()).or_insert_with(Rat::zero);
                    let _ = c;
                }
                for (t, v) in coeffs.iter_mut() {
                    *v = -&b * p.coeff(t) + &a * n.coeff(t);
                }
                coeffs.retain(|_, v| !v.is_zero());
                let konst = -&b * &p.konst + &a * &n.konst;
                next.push(LinCon { coeffs, konst, strict: p.strict || n.strict });
            }
        }
        layers.push((x, with_x));
        lin = next;
    }
    // Only constants remain.
    for c in &lin {
        let ok = if c.strict { c.konst.is_positive() } else { !c.konst.is_negative() };
        if !ok {
            return None;
        }
    }
    // Back-substitute a witness.
    let mut witness: BTreeMap<Term, Rat> = BTreeMap::new();
    for (x, cons) in layers.iter().rev() {
        let mut lower: Option<(Rat, bool)> = None; // value, strict
        let mut upper: Option<(Rat, bool)> = None;
        for c in cons {
            let a = c.coeff(x);
            let mut rest = c.konst.clone();
            for (t, v) in &c.coeffs {
                if t != x {
                    rest += v * witness.get(t).expect("assigned later variable");
                }
            }
            let bound = -rest / &a;
            if a.is_positive() {
                // x ≥ bound
                if lower.as_ref().map(|(b, _)| &bound > b).unwrap_or(true) {
                    lower = Some((bound, c.strict));
                } else if lower.as_ref().map(|(b, s)| &bound == b && !s).unwrap_or(false) && c.strict {
                    lower = Some((bound, true));
                }
            } else {
                // x ≤ bound
                if upper.as_ref().map(|(b, _)| &bound < b).unwrap_or(true) {
                    upper = Some((bound, c.strict));
                } else if upper.as_ref().map(|(b, s)| &bound == b && !s).unwrap_or(false) && c.strict {
                    upper = Some((bound, true));
                }
            }
        }
        let v = match (&lower, &upper) {
            (None, None) => Rat::zero(),
            (Some((lo, _)), None) => lo + Rat::one(),
            (None, Some((hi, _))) => hi - Rat::one(),
            (Some((lo, _)), Some((hi, _))) => (lo + hi) / Rat::from_integer(2.into()),
        };
        witness.insert(x.clone(), v);
    }
    Some(witness)
}

// ---------------------------------------------------------------------------
// sign cone

/// Search for λ ≥ 0 with `target = Σ λ_k G_k` where the generators are 1,
/// the nonnegative hypotheses, their pairwise products, and atom squares.
fn cone_member(hyps: &[Constraint], target: &Polynomial) -> bool {
    cone_member_with_slack(hyps, target, false)
}

/// As above but forcing a strictly positive coefficient on the generator 1,
/// which witnesses `target > 0`.
fn cone_member_strict(hyps: &[Constraint], target: &Polynomial) -> bool {
    cone_member_with_slack(hyps, target, true)
}

fn cone_member_with_slack(hyps: &[Constraint], target: &Polynomial, strict: bool) -> bool {
    let nonneg: Vec<&Polynomial> = hyps
        .iter()
        .filter(|h| matches!(h.rel, Rel::Geq | Rel::Gt))
        .map(|h| &h.poly)
        .collect();
    let mut generators: Vec<Polynomial> = Vec::new();
    generators.push(Polynomial::one());
    for g in &nonneg {
        generators.push((*g).clone());
    }
    for i in 0..nonneg.len() {
        for j in i..nonneg.len() {
            generators.push(nonneg[i].mul(nonneg[j]));
        }
    }
    let mut atoms: BTreeSet<Term> = target.atoms();
    for g in &nonneg {
        atoms.extend(g.atoms());
    }
    for a in &atoms {
        let p = Polynomial::atom(a.clone());
        generators.push(p.mul(&p));
    }
    if generators.len() > 400 {
        return false;
    }
    let mut target = target.clone();
    if strict {
        // target - ε·1 must stay in the cone for some ε > 0; approximate by
        // requiring membership of target - 1/1000000.
        target = target.sub(&Polynomial::constant(Rat::new(1.into(), 1_000_000.into())));
    }
    // Rows: monomials; columns: generators; solve A λ = b, λ ≥ 0.
    let mut monomials: BTreeSet<Monomial> = target.terms.keys().cloned().collect();
    for g in &generators {
        monomials.extend(g.terms.keys().cloned());
    }
    let monomials: Vec<Monomial> = monomials.into_iter().collect();
    let a: Vec<Vec<Rat>> = monomials
        .iter()
        .map(|m| {
            generators
                .iter()
                .map(|g| g.terms.get(m).cloned().unwrap_or_else(Rat::zero))
                .collect()
        })
        .collect();
    let b: Vec<Rat> = monomials
        .iter()
        .map(|m| target.terms.get(m).cloned().unwrap_or_else(Rat::zero))
        .collect();
    simplex_feasible(&a, &b)
}

/// Phase-1 simplex with Bland's rule: is there λ ≥ 0 with A λ = b?
fn simplex_feasible(a: &[Vec<Rat>], b: &[Rat]) -> bool {
    let m = a.len();
    if m == 0 {
        return true;
    }
    let n = a[0].len();
    // Tableau with artificial variables: columns 0..n real, n..n+m artificial,
    // last column RHS. Objective: minimize sum of artificials.
    let mut t: Vec<Vec<Rat>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row: Vec<Rat> = Vec::with_capacity(n + m + 1);
        let flip = b[i].is_negative();
        for j in 0..n {
            row.push(if flip { -&a[i][j] } else { a[i][j].clone() });
        }
        for k in 0..m {
            row.push(if k == i { Rat::one() } else { Rat::zero() });
        }
        row.push(if flip { -&b[i] } else { b[i].clone() });
        t.push(row);
    }
    // Objective row: z - Σ artificials = 0, expressed in terms of nonbasic
    // variables by subtracting all constraint rows.
    let mut obj: Vec<Rat> = vec![Rat::zero(); n + m + 1];
    for i in 0..m {
        for j in 0..n + m + 1 {
            obj[j] -= &t[i][j];
        }
    }
    // The artificials are basic, so their reduced costs start at zero (the
    // subtraction above left them at -1).
    for j in n..n + m {
        obj[j] = Rat::zero();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        // entering: first column with negative reduced cost (Bland)
        let Some(enter) = (0..n + m).find(|&j| obj[j].is_negative()) else {
            break;
        };
        // leaving: min ratio, tie-break smallest basis index (Bland)
        let mut leave: Option<usize> = None;
        let mut best: Option<Rat> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = &t[i][n + m] / &t[i][enter];
                let better = match &best {
                    None => true,
                    Some(r) => {
                        &ratio < r || (&ratio == r && basis[i] < basis[leave.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leave = Some(i);
                }
            }
        }
        let Some(li) = leave else {
            // Unbounded phase-1 objective cannot happen; treat as infeasible.
            return false;
        };
        // pivot
        let piv = t[li][enter].clone();
        for j in 0..n + m + 1 {
            t[li][j] = &t[li][j] / &piv;
        }
        for i in 0..m {
            if i != li && !t[i][enter].is_zero() {
                let f = t[i][enter].clone();
                for j in 0..n + m + 1 {
                    t[i][j] = &t[i][j] - &f * &t[li][j];
                }
            }
        }
        if !obj[enter].is_zero() {
            let f = obj[enter].clone();
            for j in 0..n + m + 1 {
                obj[j] = &obj[j] - &f * &t[li][j];
            }
        }
        basis[li] = enter;
    }
    // Feasible iff the phase-1 optimum is zero.
    obj[n + m].is_zero()
}

// ---------------------------------------------------------------------------
// grid witness search

fn grid_witness(hyps: &[Constraint], goal: &Constraint) -> Option<BTreeMap<Term, Rat>> {
    let mut atoms: BTreeSet<Term> = goal.poly.atoms();
    for h in hyps {
        atoms.extend(h.poly.atoms());
    }
    let atoms: Vec<Term> = atoms.into_iter().collect();
    if atoms.len() > 4 {
        return None;
    }
    let grid: Vec<Rat> = [-2i64, -1, 0, 1, 2]
        .iter()
        .map(|n| Rat::from_integer((*n).into()))
        .chain([Rat::new(1.into(), 2.into()), Rat::new((-1).into(), 2.into())])
        .collect();
    let mut idx = vec![0usize; atoms.len()];
    loop {
        let assignment: BTreeMap<Term, Rat> =
            atoms.iter().cloned().zip(idx.iter().map(|&i| grid[i].clone())).collect();
        let hyps_ok = hyps.iter().all(|h| h.holds_at(&assignment) == Some(true));
        if hyps_ok && goal.holds_at(&assignment) == Some(false) {
            return Some(assignment);
        }
        // advance odometer
        let mut k = 0;
        loop {
            if k == atoms.len() {
                return None;
            }
            idx[k] += 1;
            if idx[k] < grid.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if atoms.is_empty() {
            return None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::poly::normalize;
    use crate::parser::{parse_term_str, parse_theory, Theory};

    fn th() -> Theory {
        parse_theory(
            "func x : R\nfunc y : R\nfunc d1 : R\nfunc d2 : R\nconjecture dummy : true\n",
        )
        .unwrap()
    }

    fn con(src: &str, rel: Rel) -> Constraint {
        Constraint::new(normalize(&parse_term_str(src, &th()).unwrap()).unwrap(), rel)
    }

    #[test]
    fn linear_entailment() {
        let hyps = vec![con("x - 1", Rel::Geq), con("y - x", Rel::Geq)];
        let goal = con("y - 1", Rel::Geq);
        assert!(matches!(decide_universal(&hyps, &goal, None), RealVerdict::Valid(_)));
    }

    #[test]
    fn linear_refutation_has_witness() {
        let goal = con("x - 1", Rel::Geq);
        match decide_universal(&[], &goal, None) {
            RealVerdict::Invalid(Some(w)) => assert_eq!(goal.holds_at(&w), Some(false)),
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn disequality_branching() {
        let hyps = vec![con("x", Rel::Geq), con("x", Rel::Neq)];
        let goal = con("x", Rel::Gt);
        assert!(matches!(decide_universal(&hyps, &goal, None), RealVerdict::Valid(_)));
    }

    #[test]
    fn cone_certificates() {
        // products of nonnegative hypotheses
        let hyps = vec![con("x", Rel::Geq), con("y", Rel::Geq)];
        let goal = con("x * y", Rel::Geq);
        assert!(matches!(decide_universal(&hyps, &goal, None), RealVerdict::Valid(_)));
        // atom squares are nonnegative without hypotheses
        let goal = con("x * x + y * y", Rel::Geq);
        assert!(matches!(decide_universal(&[], &goal, None), RealVerdict::Valid(_)));
    }

    #[test]
    fn equational_elimination() {
        // y = x + 1 reduces a quadratic goal to an identity
        let hyps = vec![con("y - x - 1", Rel::Eq)];
        let goal = con("y * y - x * x - 2 * x - 1", Rel::Eq);
        assert_eq!(decide_universal(&hyps, &goal, None), RealVerdict::Valid(Method::Identity));
    }

    #[test]
    fn indefinite_quadratic_is_not_certified() {
        // An indefinite form must not get a cone certificate from no
        // hypotheses; a feasibility-phase bug once claimed exactly this.
        let goal = con("2 * x * d1 + 2 * y * d2", Rel::Geq);
        match decide_universal(&[], &goal, None) {
            RealVerdict::Valid(m) => panic!("unsound certificate {m:?}"),
            _ => {}
        }
    }

    #[test]
    fn vacuous_from_contradictory_linear_subset() {
        // The linear part alone is unsatisfiable even though a nonlinear
        // hypothesis is present.
        let hyps = vec![con("x - 1", Rel::Geq), con("0 - x", Rel::Geq), con("x * y", Rel::Geq)];
        let goal = con("y - 7", Rel::Geq);
        assert!(matches!(decide_universal(&hyps, &goal, None), RealVerdict::Valid(_)));
    }
}
