//! Syntactic total derivation of first-order formulas, used by the
//! differential-invariant rule.

use crate::syntax::*;

/// Total derivation D(phi): equalities and inequalities between real terms
/// become the corresponding relation between their formal total differentials;
/// conjunctions and quantifiers are mapped homomorphically.  A disjunction is
/// derived as the conjunction of the derivations of both disjuncts, and
/// equalities between objects (which cannot change during a flow) derive to
/// `true`.
pub fn total_derivation(sig: &Signature, phi: &StateFormula) -> Result<StateFormula, String> {
    if let Some((l, r)) = phi.as_or() {
        let dl = total_derivation(sig, l)?;
        let dr = total_derivation(sig, r)?;
        return Ok(and_pruned(dl, dr));
    }
    match phi {
        StateFormula::True | StateFormula::False => Ok(StateFormula::True),
        StateFormula::Eq(a, b) => {
            if term_sort(sig, a) != Some(REAL.to_string()) {
                // Object-valued terms are constant along flows.
                return Ok(StateFormula::True);
            }
            Ok(StateFormula::Eq(derive_term(sig, a)?, derive_term(sig, b)?))
        }
        StateFormula::Geq(a, b) => {
            Ok(StateFormula::Geq(derive_term(sig, a)?, derive_term(sig, b)?))
        }
        StateFormula::And(a, b) => {
            let da = total_derivation(sig, a)?;
            let db = total_derivation(sig, b)?;
            Ok(and_pruned(da, db))
        }
        StateFormula::Forall(b, body) => Ok(StateFormula::Forall(
            b.clone(),
            Box::new(total_derivation(sig, body)?),
        )),
        StateFormula::Not(_) => Err("total derivation is undefined for negations".into()),
        StateFormula::Exists(..) => {
            Err("total derivation is undefined for existential quantifiers".into())
        }
        StateFormula::Box_(..) | StateFormula::Dia(..) => {
            Err("total derivation is undefined for modalities".into())
        }
    }
}

fn and_pruned(a: StateFormula, b: StateFormula) -> StateFormula {
    match (a, b) {
        (StateFormula::True, b) => b,
        (a, StateFormula::True) => a,
        (a, b) => StateFormula::and(a, b),
    }
}

fn is_zero_term(t: &Term) -> bool {
    matches!(t, Term::Num(r) if rat_is_zero(r))
}

fn dadd(a: Term, b: Term) -> Term {
    if is_zero_term(&a) {
        b
    } else if is_zero_term(&b) {
        a
    } else {
        Term::add(a, b)
    }
}

fn dmul(a: Term, b: Term) -> Term {
    if is_zero_term(&a) || is_zero_term(&b) {
        Term::num(0)
    } else {
        Term::mul(a, b)
    }
}

fn term_sort(sig: &Signature, t: &Term) -> Option<String> {
    sort_of_term(t, sig, &Default::default()).ok()
}

/// Formal total differential of a real-valued term: rigid symbols, literals
/// and logical variables have derivative 0; a flexible symbol `f(s)` becomes
/// the differential symbol `f(s)'`; arithmetic follows the usual sum and
/// product rules.
pub fn derive_term(sig: &Signature, t: &Term) -> Result<Term, String> {
    Ok(match t {
        Term::Num(_) | Term::Var(_) => Term::num(0),
        Term::App(f, args) if is_builtin_arith(f) => match (f.as_str(), args.as_slice()) {
            ("+", [a, b]) => dadd(derive_term(sig, a)?, derive_term(sig, b)?),
            ("-", [a, b]) => {
                let da = derive_term(sig, a)?;
                let db = derive_term(sig, b)?;
                if is_zero_term(&db) {
                    da
                } else {
                    Term::sub(da, db)
                }
            }
            ("*", [a, b]) => {
                let da = derive_term(sig, a)?;
                let db = derive_term(sig, b)?;
                dadd(dmul(da, b.clone()), dmul(a.clone(), db))
            }
            ("neg", [a]) => {
                let da = derive_term(sig, a)?;
                if is_zero_term(&da) {
                    da
                } else {
                    Term::neg(da)
                }
            }
            _ => return Err(format!("malformed arithmetic term in derivation: {t}")),
        },
        Term::App(f, args) => {
            if sig.is_rigid(f) {
                Term::num(0)
            } else {
                for a in args {
                    if term_sort(sig, a) == Some(REAL.to_string()) {
                        return Err(format!(
                            "cannot derive flexible symbol {f} with real arguments"
                        ));
                    }
                }
                Term::DiffApp(f.clone(), args.clone())
            }
        }
        Term::DiffApp(..) => Err(format!("term {t} is already a differential symbol"))?,
        Term::Cond(..) => {
            return Err("total derivation is undefined for conditional terms".to_string())
        }
    })
}
