//! Precedence-aware pretty printer. Output re-parses to the identical AST:
//! the committed negation patterns for `|`, `->`, and `<` are recognized and
//! printed back in surface form.

use crate::syntax::*;

// term precedence: 0 additive, 1 multiplicative, 2 unary minus, 3 atom
fn term_prec(t: &Term) -> u8 {
    match t {
        Term::App(f, _) if f == "+" || f == "-" => 0,
        Term::App(f, _) if f == "*" => 1,
        Term::App(f, _) if f == "neg" => 2,
        _ => 3,
    }
}

pub fn print_term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.clone(),
        Term::Num(r) => {
            if r.is_integer() {
                r.numer().to_string()
            } else {
                format!("({} / {})", r.numer(), r.denom())
            }
        }
        Term::App(f, args) if f == "+" || f == "-" => {
            format!("{} {} {}", paren_term(&args[0], 0), f, paren_term(&args[1], 1))
        }
        Term::App(f, args) if f == "*" => {
            format!("{} * {}", paren_term(&args[0], 1), paren_term(&args[1], 2))
        }
        Term::App(f, args) if f == "neg" => format!("-{}", paren_term(&args[0], 2)),
        Term::App(f, args) => {
            if args.is_empty() {
                f.clone()
            } else {
                format!("{}({})", f, args.iter().map(print_term).collect::<Vec<_>>().join(", "))
            }
        }
        Term::DiffApp(f, args) => {
            if args.is_empty() {
                format!("{f}'")
            } else {
                format!("{}({})'", f, args.iter().map(print_term).collect::<Vec<_>>().join(", "))
            }
        }
        Term::Cond(c, a, b) => format!(
            "if {} then {} else {} fi",
            print_formula(c),
            print_term(a),
            print_term(b)
        ),
    }
}

fn paren_term(t: &Term, min: u8) -> String {
    let s = print_term(t);
    if term_prec(t) < min {
        format!("({s})")
    } else {
        s
    }
}

// formula precedence: 0 ->, 1 |, 2 &, 3 unary/atom
fn formula_prec(f: &StateFormula) -> u8 {
    if f.as_or().is_some() {
        return 1;
    }
    if f.as_imp().is_some() {
        return 0;
    }
    match f {
        StateFormula::And(..) => 2,
        _ => 3,
    }
}

pub fn print_formula(phi: &StateFormula) -> String {
    // Division by plain-number denominators prints as `( a / b )` literals
    // only; everything else uses the four operators.
    if let Some((a, b)) = phi.as_or() {
        return format!("{} | {}", paren_formula(a, 2), paren_formula(b, 1));
    }
    if let Some((a, b)) = phi.as_imp() {
        return format!("{} -> {}", paren_formula(a, 1), paren_formula(b, 0));
    }
    if let Some((a, b)) = phi.as_lt() {
        return format!("{} < {}", print_term(a), print_term(b));
    }
    match phi {
        StateFormula::True => "true".into(),
        StateFormula::False => "false".into(),
        StateFormula::Eq(a, b) => format!("{} = {}", print_term(a), print_term(b)),
        StateFormula::Geq(a, b) => format!("{} >= {}", print_term(a), print_term(b)),
        StateFormula::Not(a) => format!("!{}", paren_formula(a, 3)),
        StateFormula::And(a, b) => {
            format!("{} & {}", paren_formula(a, 3), paren_formula(b, 2))
        }
        StateFormula::Forall(b, body) => {
            format!("forall {}:{} {}", b.var, b.sort, paren_formula(body, 3))
        }
        StateFormula::Exists(b, body) => {
            format!("exists {}:{} {}", b.var, b.sort, paren_formula(body, 3))
        }
        StateFormula::Box_(p, pi) => format!("[{}] {}", print_program(p), print_trace(pi)),
        StateFormula::Dia(p, pi) => format!("<{}> {}", print_program(p), print_trace(pi)),
    }
}

fn paren_formula(f: &StateFormula, min: u8) -> String {
    let s = print_formula(f);
    if formula_prec(f) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_trace(pi: &TraceFormula) -> String {
    match pi {
        TraceFormula::State(f) => paren_formula(f, 3),
        TraceFormula::Always(f) => format!("box {}", paren_formula(f, 3)),
        TraceFormula::Eventually(f) => format!("dia {}", paren_formula(f, 3)),
    }
}

// program precedence: 0 ++, 1 ;, 2 postfix/atom
fn program_prec(p: &Program) -> u8 {
    match p {
        Program::Choice(..) => 0,
        Program::Seq(..) => 1,
        _ => 2,
    }
}

pub fn print_program(p: &Program) -> String {
    match p {
        Program::Assign { binder, items } => {
            let items = items
                .iter()
                .map(|it| {
                    let lhs = if it.args.is_empty() {
                        it.func.clone()
                    } else {
                        format!(
                            "{}({})",
                            it.func,
                            it.args.iter().map(print_term).collect::<Vec<_>>().join(", ")
                        )
                    };
                    let prime = if it.primed { "'" } else { "" };
                    format!("{lhs}{prime} := {}", print_term(&it.rhs))
                })
                .collect::<Vec<_>>()
                .join(", ");
            match binder {
                Some(b) => format!("forall {}:{} {}", b.var, b.sort, items),
                None => items,
            }
        }
        Program::Ode { binder, items, domain } => {
            let items = items
                .iter()
                .map(|it| {
                    let lhs = if it.args.is_empty() {
                        it.func.clone()
                    } else {
                        format!(
                            "{}({})",
                            it.func,
                            it.args.iter().map(print_term).collect::<Vec<_>>().join(", ")
                        )
                    };
                    format!("{lhs}' = {}", print_term(&it.rhs))
                })
                .collect::<Vec<_>>()
                .join(", ");
            let dom = if **domain == StateFormula::True {
                String::new()
            } else {
                format!(" & {}", print_formula(domain))
            };
            match binder {
                Some(b) => format!("forall {}:{} {}{}", b.var, b.sort, items, dom),
                None => format!("{items}{dom}"),
            }
        }
        Program::VarAssign { binder, var, rhs } => {
            format!("forall {}:{} {} := {}", binder.var, binder.sort, var, print_term(rhs))
        }
        Program::New { var, sort } => format!("{var} := new {sort}"),
        Program::Test(chi) => format!("?{}", print_formula(chi)),
        Program::Choice(a, b) => {
            format!("{} ++ {}", paren_program(a, 1), paren_program(b, 0))
        }
        Program::Seq(a, b) => format!("{} ; {}", paren_program(a, 2), paren_program(b, 1)),
        Program::Loop(a) => format!("({})*", print_program(a)),
    }
}

fn paren_program(p: &Program, min: u8) -> String {
    let s = print_program(p);
    if program_prec(p) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_sequent(s: &Sequent) -> String {
    let ant = s.ant.iter().map(print_formula).collect::<Vec<_>>().join(", ");
    let suc = s.suc.iter().map(print_formula).collect::<Vec<_>>().join(", ");
    format!("{ant} |- {suc}")
}
