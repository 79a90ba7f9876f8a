//! Monitor transformation for the finitary liveness rule: every discrete
//! jump gains a checkpoint test and every evolution domain a checkpoint
//! constraint.

use crate::syntax::*;

/// Build the monitored program: each quantified assignment `A` becomes
/// `A; ?(phi -> t = 1)` and each evolution domain `chi` becomes
/// `chi /\ (phi -> t = 1)`.  `tvar` must not occur in the program or `phi`.
pub fn transform_monitor(p: &Program, phi: &StateFormula, tvar: &str) -> Result<Program, String> {
    if program_free_vars(p).contains(tvar) || formula_free_vars(phi).contains(tvar) {
        return Err(format!("monitor variable {tvar} is not fresh"));
    }
    Ok(go(p, &checkpoint(phi, tvar)))
}

fn checkpoint(phi: &StateFormula, tvar: &str) -> StateFormula {
    StateFormula::imp(phi.clone(), StateFormula::Eq(Term::Var(tvar.to_string()), Term::num(1)))
}

fn go(p: &Program, check: &StateFormula) -> Program {
    match p {
        Program::Assign { .. } | Program::VarAssign { .. } | Program::New { .. } => Program::Seq(
            Box::new(p.clone()),
            Box::new(Program::Test(Box::new(check.clone()))),
        ),
        Program::Ode { binder, items, domain } => Program::Ode {
            binder: binder.clone(),
            items: items.clone(),
            domain: Box::new(StateFormula::and((**domain).clone(), check.clone())),
        },
        Program::Test(f) => Program::Test(f.clone()),
        Program::Choice(a, b) => {
            Program::Choice(Box::new(go(a, check)), Box::new(go(b, check)))
        }
        Program::Seq(a, b) => Program::Seq(Box::new(go(a, check)), Box::new(go(b, check))),
        Program::Loop(a) => Program::Loop(Box::new(go(a, check))),
    }
}
