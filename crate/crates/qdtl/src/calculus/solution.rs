//! Symbolic solutions of solvable quantified differential equation systems.
//!
//! Supports the nilpotent-linear class whose solutions are polynomial in
//! time: constant right-hand sides, clocks, chained integrators.  Systems
//! with cyclic dependencies (e.g. rotational dynamics) are rejected with a
//! diagnostic pointing at the differential-invariant rules.

use crate::arith::poly::{normalize, Monomial, Polynomial};
use crate::syntax::*;
use num_traits::One;
use std::collections::{BTreeMap, BTreeSet};

/// A solved system: assignment items whose right-hand sides are polynomials
/// in the placeholder time variable `tvar`.
#[derive(Clone, Debug)]
pub struct SolvedOde {
    pub binder: Option<Binder>,
    pub tvar: String,
    pub items: Vec<AssignItem>,
}

impl SolvedOde {
    /// The parametric assignment with the time placeholder replaced by `t`.
    pub fn at(&self, t: &Term) -> Result<Program, String> {
        let items = self
            .items
            .iter()
            .map(|it| {
                Ok(AssignItem {
                    func: it.func.clone(),
                    args: it.args.clone(),
                    primed: false,
                    rhs: substitute_term(&it.rhs, &self.tvar, t)
                        .map_err(|e| format!("instantiating solution failed: {e}"))?,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(Program::Assign { binder: self.binder.clone(), items })
    }
}

pub fn solve_ode(
    binder: &Option<Binder>,
    items: &[OdeItem],
    tvar: &str,
) -> Result<SolvedOde, String> {
    if !ode_injective(binder, items) {
        return Err("differential equation is not syntactically injective".into());
    }
    let mut by_func: BTreeMap<String, &OdeItem> = BTreeMap::new();
    for it in items {
        if by_func.insert(it.func.clone(), it).is_some() {
            return Err(format!("symbol {} has two differential equations", it.func));
        }
    }

    // Dependency edges f -> g whenever the right-hand side of f' mentions the
    // co-evolving symbol g; a cycle means the solution is not polynomial.
    let assigned: BTreeSet<String> = by_func.keys().cloned().collect();
    let mut deps: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for it in items {
        let mut syms = BTreeSet::new();
        term_fns(&it.rhs, &mut syms);
        deps.insert(it.func.clone(), syms.intersection(&assigned).cloned().collect());
    }
    let order = topo_order(&deps).ok_or_else(|| {
        "differential equations have cyclic dependencies and no polynomial solution; \
         use DI/DC instead"
            .to_string()
    })?;

    // Every occurrence of a co-evolving symbol must be the symbol's own
    // left-hand side, so its solved polynomial can be substituted directly.
    for it in items {
        check_occurrences(&it.rhs, &by_func)?;
    }

    let t_atom = Term::Var(tvar.to_string());
    let mut solved: BTreeMap<String, Polynomial> = BTreeMap::new();
    for f in &order {
        let it = by_func[f];
        let mut rhs =
            normalize(&it.rhs).map_err(|e| format!("right-hand side of {f}' not polynomial: {e}"))?;
        for (g, sol) in &solved {
            let g_lhs = Term::App(g.clone(), by_func[g].args.clone());
            rhs = rhs.substitute_atom(&g_lhs, sol);
        }
        let mut sol = integrate(&rhs, &t_atom);
        sol = sol.add(&Polynomial::atom(Term::App(f.clone(), it.args.clone())));
        solved.insert(f.clone(), sol);
    }

    let out_items = items
        .iter()
        .map(|it| AssignItem {
            func: it.func.clone(),
            args: it.args.clone(),
            primed: false,
            rhs: poly_to_term(&solved[&it.func]),
        })
        .collect();
    Ok(SolvedOde { binder: binder.clone(), tvar: tvar.to_string(), items: out_items })
}

fn check_occurrences(t: &Term, by_func: &BTreeMap<String, &OdeItem>) -> Result<(), String> {
    match t {
        Term::Var(_) | Term::Num(_) => Ok(()),
        Term::App(f, args) => {
            if let Some(it) = by_func.get(f) {
                if args != &it.args {
                    return Err(format!(
                        "occurrence of co-evolving symbol {f} differs from its own \
                         left-hand side; use DI/DC instead"
                    ));
                }
            }
            for a in args {
                check_occurrences(a, by_func)?;
            }
            Ok(())
        }
        Term::DiffApp(..) => Err("differential symbol inside a differential equation".into()),
        Term::Cond(..) => Err("conditional term inside a differential equation".into()),
    }
}

fn topo_order(deps: &BTreeMap<String, BTreeSet<String>>) -> Option<Vec<String>> {
    let mut order = Vec::new();
    let mut state: BTreeMap<&str, u8> = BTreeMap::new(); // 0 unvisited, 1 active, 2 done
    fn visit<'a>(
        f: &'a str,
        deps: &'a BTreeMap<String, BTreeSet<String>>,
        state: &mut BTreeMap<&'a str, u8>,
        order: &mut Vec<String>,
    ) -> bool {
        match state.get(f) {
            Some(1) => return false,
            Some(2) => return true,
            _ => {}
        }
        state.insert(f, 1);
        for g in &deps[f] {
            if !visit(g, deps, state, order) {
                return false;
            }
        }
        state.insert(f, 2);
        order.push(f.to_string());
        true
    }
    for f in deps.keys() {
        if !visit(f, deps, &mut state, &mut order) {
            return None;
        }
    }
    Some(order)
}

/// Integrate a polynomial with respect to the time atom.
fn integrate(p: &Polynomial, t_atom: &Term) -> Polynomial {
    let mut out = Polynomial::zero();
    for (mono, coeff) in &p.terms {
        let k = mono.degree_in(t_atom);
        let scaled = coeff.clone() / Rat::from_integer((k as i64 + 1).into());
        let mono2 = mono.mul(&Monomial::atom(t_atom.clone()));
        let mut term = Polynomial::zero();
        term.terms.insert(mono2, scaled);
        out = out.add(&term);
    }
    out
}

/// Render a polynomial back into term syntax.
pub fn poly_to_term(p: &Polynomial) -> Term {
    if p.is_zero() {
        return Term::num(0);
    }
    let mut acc: Option<Term> = None;
    for (mono, coeff) in &p.terms {
        let mut factors: Vec<Term> = Vec::new();
        for (atom, pow) in &mono.0 {
            for _ in 0..*pow {
                factors.push(atom.clone());
            }
        }
        let mut term = if coeff.is_one() && !factors.is_empty() {
            None
        } else {
            Some(Term::Num(coeff.clone()))
        };
        for f in factors {
            term = Some(match term {
                None => f,
                Some(t) => Term::mul(t, f),
            });
        }
        let term = term.expect("nonzero coefficient");
        acc = Some(match acc {
            None => term,
            Some(a) => Term::add(a, term),
        });
    }
    acc.expect("nonzero polynomial")
}
