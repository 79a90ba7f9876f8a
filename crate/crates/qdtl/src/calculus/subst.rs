//! Pushing a quantified assignment into a formula: the substitution engine
//! behind the assignment rules.

use crate::syntax::*;
use std::collections::BTreeSet;

/// Result of pushing an assignment through a formula.  `dropped` collects
/// assigned symbols whose substitution stopped at a modality that rebinds
/// them; when nonempty the rewrite is a weakening, not an equivalence.
#[derive(Clone, Debug)]
pub struct Pushed {
    pub result: StateFormula,
    pub dropped: BTreeSet<String>,
}

struct Ctx<'a> {
    binder: Option<&'a Binder>,
    items: Vec<&'a AssignItem>,
}

/// Push the simultaneous quantified assignment `forall i:A items` through
/// `phi`, replacing each matched occurrence `f(u)` (or `f(u)'` for primed
/// items) by the corresponding right-hand side instantiated at `u`.
pub fn push_assignment(
    binder: &Option<Binder>,
    items: &[AssignItem],
    phi: &StateFormula,
) -> Result<Pushed, String> {
    if !assign_injective(binder, items) {
        return Err("assignment is not syntactically injective".into());
    }
    let mut seen = BTreeSet::new();
    for it in items {
        if !seen.insert((it.func.clone(), it.primed)) {
            return Err(format!("symbol {} assigned twice", it.func));
        }
    }
    let ctx = Ctx { binder: binder.as_ref(), items: items.iter().collect() };
    let mut dropped = BTreeSet::new();
    let result = push_f(&ctx, phi, &mut dropped)?;
    Ok(Pushed { result, dropped })
}

fn item_rhs_at(ctx: &Ctx<'_>, it: &AssignItem, occ_args: &[Term]) -> Result<Option<Term>, String> {
    if let Some(b) = ctx.binder {
        let is_binder_arg = it.args.len() == 1 && it.args[0] == Term::Var(b.var.clone());
        if is_binder_arg {
            if occ_args.len() != 1 {
                return Err(format!("arity mismatch on assigned symbol {}", it.func));
            }
            return Ok(Some(substitute_term(&it.rhs, &b.var, &occ_args[0]).map_err(
                |e| format!("substitution into assignment right-hand side failed: {e}"),
            )?));
        }
    }
    // Binder-independent item: arguments must match syntactically.
    if occ_args == it.args.as_slice() {
        return Ok(Some(it.rhs.clone()));
    }
    if it.args.is_empty() || occ_args.len() != it.args.len() {
        return Err(format!("arity mismatch on assigned symbol {}", it.func));
    }
    Err(format!(
        "cannot decide whether arguments of {} match the assignment target",
        it.func
    ))
}

fn push_t(ctx: &Ctx<'_>, t: &Term) -> Result<Term, String> {
    Ok(match t {
        Term::Var(_) | Term::Num(_) => t.clone(),
        Term::App(f, args) => {
            let args: Vec<Term> = args.iter().map(|a| push_t(ctx, a)).collect::<Result<_, _>>()?;
            for it in &ctx.items {
                if !it.primed && it.func == *f {
                    if let Some(rhs) = item_rhs_at(ctx, it, &args)? {
                        return Ok(rhs);
                    }
                }
            }
            Term::App(f.clone(), args)
        }
        Term::DiffApp(f, args) => {
            let args: Vec<Term> = args.iter().map(|a| push_t(ctx, a)).collect::<Result<_, _>>()?;
            for it in &ctx.items {
                if it.primed && it.func == *f {
                    if let Some(rhs) = item_rhs_at(ctx, it, &args)? {
                        return Ok(rhs);
                    }
                }
            }
            Term::DiffApp(f.clone(), args)
        }
        Term::Cond(c, a, b) => {
            let mut dropped = BTreeSet::new();
            let c2 = push_f(ctx, c, &mut dropped)?;
            if !dropped.is_empty() {
                return Err("assignment stops at a modality inside a conditional term".into());
            }
            Term::Cond(Box::new(c2), Box::new(push_t(ctx, a)?), Box::new(push_t(ctx, b)?))
        }
    })
}

fn rhs_vars(ctx: &Ctx<'_>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for it in &ctx.items {
        term_free_vars(&it.rhs, &mut out);
        for a in &it.args {
            term_free_vars(a, &mut out);
        }
    }
    if let Some(b) = ctx.binder {
        out.remove(&b.var);
    }
    out
}

fn push_f(
    ctx: &Ctx<'_>,
    phi: &StateFormula,
    dropped: &mut BTreeSet<String>,
) -> Result<StateFormula, String> {
    Ok(match phi {
        StateFormula::True | StateFormula::False => phi.clone(),
        StateFormula::Eq(a, b) => StateFormula::Eq(push_t(ctx, a)?, push_t(ctx, b)?),
        StateFormula::Geq(a, b) => StateFormula::Geq(push_t(ctx, a)?, push_t(ctx, b)?),
        StateFormula::Not(a) => StateFormula::not(push_f(ctx, a, dropped)?),
        StateFormula::And(a, b) => {
            StateFormula::and(push_f(ctx, a, dropped)?, push_f(ctx, b, dropped)?)
        }
        StateFormula::Forall(b, body) | StateFormula::Exists(b, body) => {
            if rhs_vars(ctx).contains(&b.var) {
                // Alpha-rename the quantifier away from the assignment.
                let mut avoid = formula_free_vars(body);
                avoid.extend(rhs_vars(ctx));
                let fresh = fresh_var(&b.var, &avoid, &BTreeSet::new());
                let renamed = substitute_formula(body, &b.var, &Term::Var(fresh.clone()))
                    .map_err(|e| format!("alpha renaming failed: {e}"))?;
                let nb = Binder { var: fresh, sort: b.sort.clone() };
                let inner = push_f(ctx, &renamed, dropped)?;
                match phi {
                    StateFormula::Forall(..) => StateFormula::Forall(nb, Box::new(inner)),
                    _ => StateFormula::Exists(nb, Box::new(inner)),
                }
            } else {
                let inner = push_f(ctx, body, dropped)?;
                match phi {
                    StateFormula::Forall(..) => StateFormula::Forall(b.clone(), Box::new(inner)),
                    _ => StateFormula::Exists(b.clone(), Box::new(inner)),
                }
            }
        }
        StateFormula::Box_(p, pi) | StateFormula::Dia(p, pi) => {
            let bound = bound_symbols(p);
            let (inside, stopped): (Vec<&AssignItem>, Vec<&AssignItem>) =
                ctx.items.iter().copied().partition(|it| !bound.contains(&it.func));
            for it in &inside {
                let mut syms = BTreeSet::new();
                term_fns(&it.rhs, &mut syms);
                if syms.iter().any(|s| bound.contains(s)) {
                    return Err(format!(
                        "substituting {} under a modality that rebinds its right-hand side",
                        it.func
                    ));
                }
            }
            if !stopped.is_empty() {
                for it in &stopped {
                    dropped.insert(it.func.clone());
                }
            }
            if inside.is_empty() {
                return Ok(phi.clone());
            }
            let sub = Ctx { binder: ctx.binder, items: inside };
            let p2 = push_p(&sub, p, dropped)?;
            let pi2 = match &**pi {
                TraceFormula::State(f) => TraceFormula::State(push_f(&sub, f, dropped)?),
                TraceFormula::Always(f) => TraceFormula::Always(push_f(&sub, f, dropped)?),
                TraceFormula::Eventually(f) => TraceFormula::Eventually(push_f(&sub, f, dropped)?),
            };
            match phi {
                StateFormula::Box_(..) => StateFormula::Box_(Box::new(p2), Box::new(pi2)),
                _ => StateFormula::Dia(Box::new(p2), Box::new(pi2)),
            }
        }
    })
}

fn push_p(
    ctx: &Ctx<'_>,
    p: &Program,
    dropped: &mut BTreeSet<String>,
) -> Result<Program, String> {
    Ok(match p {
        Program::Assign { binder, items } => {
            check_program_binder(ctx, binder)?;
            Program::Assign {
                binder: binder.clone(),
                items: items
                    .iter()
                    .map(|it| {
                        Ok(AssignItem {
                            func: it.func.clone(),
                            args: it
                                .args
                                .iter()
                                .map(|a| push_t(ctx, a))
                                .collect::<Result<_, String>>()?,
                            primed: it.primed,
                            rhs: push_t(ctx, &it.rhs)?,
                        })
                    })
                    .collect::<Result<_, String>>()?,
            }
        }
        Program::Ode { binder, items, domain } => {
            check_program_binder(ctx, binder)?;
            Program::Ode {
                binder: binder.clone(),
                items: items
                    .iter()
                    .map(|it| {
                        Ok(OdeItem {
                            func: it.func.clone(),
                            args: it
                                .args
                                .iter()
                                .map(|a| push_t(ctx, a))
                                .collect::<Result<_, String>>()?,
                            rhs: push_t(ctx, &it.rhs)?,
                        })
                    })
                    .collect::<Result<_, String>>()?,
                domain: Box::new(push_f(ctx, domain, dropped)?),
            }
        }
        Program::VarAssign { binder, var, rhs } => {
            check_program_binder(ctx, &Some(binder.clone()))?;
            if rhs_vars(ctx).contains(var) {
                return Err("variable capture while pushing an assignment".into());
            }
            Program::VarAssign {
                binder: binder.clone(),
                var: var.clone(),
                rhs: push_t(ctx, rhs)?,
            }
        }
        Program::New { .. } => p.clone(),
        Program::Test(f) => Program::Test(Box::new(push_f(ctx, f, dropped)?)),
        Program::Choice(a, b) => {
            Program::Choice(Box::new(push_p(ctx, a, dropped)?), Box::new(push_p(ctx, b, dropped)?))
        }
        Program::Seq(a, b) => {
            Program::Seq(Box::new(push_p(ctx, a, dropped)?), Box::new(push_p(ctx, b, dropped)?))
        }
        Program::Loop(a) => Program::Loop(Box::new(push_p(ctx, a, dropped)?)),
    })
}

fn check_program_binder(ctx: &Ctx<'_>, binder: &Option<Binder>) -> Result<(), String> {
    if let Some(b) = binder {
        if rhs_vars(ctx).contains(&b.var) {
            return Err("variable capture while pushing an assignment".into());
        }
    }
    Ok(())
}
