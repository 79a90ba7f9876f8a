//! Lexer and recursive-descent parser for theory files (`.qdtl`) and proof
//! script files (`.qpf`), plus string-level helpers used by tests.
//!
//! Theories declare sorts, functions, named formula abbreviations (`def`),
//! ODE right-hand-side abbreviations (`flow`), assignment abbreviations
//! (`update`), and conjectures. Abbreviations are expanded at parse time, so
//! everything downstream operates on the core AST only.

use crate::syntax::*;
use num::BigRational;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub msg: String,
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rat),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: &[&str] = &[
    ":=", "++", "->", ">=", "<=", "(", ")", "{", "}", "[", "]", "<", ">", ",", ";", ":", "'",
    "?", "!", "&", "|", "=", "+", "-", "*", "^", "/",
];

const KEYWORDS: &[&str] = &[
    "sort", "func", "rigid", "def", "flow", "update", "conjecture", "forall", "exists", "box",
    "dia", "true", "false", "if", "then", "else", "fi", "new", "proof", "for", "at", "ant",
    "succ",
];

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1usize;
    let mut col = 1usize;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let span_start = i;
        let (sl, sc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < bytes.len() && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let word = &src[i..j];
            col += j - i;
            i = j;
            toks.push((
                Tok::Ident(word.to_string()),
                Span { start: span_start, end: j, line: sl, col: sc },
            ));
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                j += 1;
            }
            let mut num: BigRational = src[i..j].parse::<num::BigInt>().unwrap().into();
            if j < bytes.len() && bytes[j] == b'.' && j + 1 < bytes.len() && (bytes[j + 1] as char).is_ascii_digit() {
                let fs = j + 1;
                let mut k = fs;
                while k < bytes.len() && (bytes[k] as char).is_ascii_digit() {
                    k += 1;
                }
                let frac: num::BigInt = src[fs..k].parse().unwrap();
                let denom = num::BigInt::from(10u32).pow((k - fs) as u32);
                num += BigRational::new(frac, denom);
                j = k;
            }
            col += j - i;
            i = j;
            toks.push((Tok::Num(num), Span { start: span_start, end: j, line: sl, col: sc }));
            continue;
        }
        let mut matched = false;
        for sym in SYMBOLS {
            if src[i..].starts_with(sym) {
                toks.push((
                    Tok::Sym(sym),
                    Span { start: span_start, end: i + sym.len(), line: sl, col: sc },
                ));
                col += sym.len();
                i += sym.len();
                matched = true;
                break;
            }
        }
        if !matched {
            return Err(ParseError {
                msg: format!("unexpected character `{c}`"),
                line: sl,
                col: sc,
                start: span_start,
                end: span_start + 1,
            });
        }
    }
    toks.push((Tok::Eof, Span { start: src.len(), end: src.len(), line, col }));
    Ok(toks)
}

// ---------------------------------------------------------------------------
// theory representation

#[derive(Clone, Debug)]
pub struct Def {
    pub params: Vec<Binder>,
    pub body: StateFormula,
}

#[derive(Clone, Debug)]
pub struct OdeDef {
    pub params: Vec<Binder>,
    pub items: Vec<OdeItem>,
}

#[derive(Clone, Debug)]
pub struct UpdateDef {
    pub params: Vec<Binder>,
    pub items: Vec<AssignItem>,
}

#[derive(Clone, Debug, Default)]
pub struct Theory {
    pub sig: Signature,
    pub defs: BTreeMap<String, Def>,
    pub flows: BTreeMap<String, OdeDef>,
    pub updates: BTreeMap<String, UpdateDef>,
    /// Name → fully expanded, well-typed conjecture formula.
    pub conjectures: Vec<(String, StateFormula)>,
}

impl Theory {
    pub fn conjecture(&self, name: &str) -> Option<&StateFormula> {
        self.conjectures.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

// ---------------------------------------------------------------------------
// script representation

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Pos {
    Ant(usize),
    Suc(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Arg {
    Formula(StateFormula),
    Term(Term),
    Name(String),
}

#[derive(Clone, Debug)]
pub struct Step {
    pub rule: String,
    pub args: Vec<Arg>,
    pub pos: Option<Pos>,
    /// One block per premise when the script branches explicitly.
    pub children: Option<Vec<Vec<Step>>>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct Script {
    pub name: String,
    pub conjecture: String,
    pub steps: Vec<Step>,
}

// ---------------------------------------------------------------------------
// parser

struct Parser<'a> {
    toks: Vec<(Tok, Span)>,
    idx: usize,
    theory: &'a Theory,
    /// Variables bound by enclosing binders during formula parsing.
    scope: Vec<Binder>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(src: &str, theory: &'a Theory) -> PResult<Parser<'a>> {
        Ok(Parser { toks: lex(src)?, idx: 0, theory, scope: Vec::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn span(&self) -> Span {
        self.toks[self.idx].1
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let s = self.span();
        Err(ParseError { msg: msg.into(), line: s.line, col: s.col, start: s.start, end: s.end })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.peek() == &Tok::Sym(sym_static(s)) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if let Tok::Ident(w) = self.peek() {
            if w == kw {
                self.bump();
                return true;
            }
        }
        false
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(w) => {
                if KEYWORDS.contains(&w.as_str()) {
                    return self.err(format!("`{w}` is a reserved word"));
                }
                self.bump();
                Ok(w)
            }
            _ => self.err("expected identifier"),
        }
    }

    // -- terms --------------------------------------------------------------

    fn term(&mut self) -> PResult<Term> {
        let mut t = self.term_mul()?;
        loop {
            if self.eat_sym("+") {
                t = Term::add(t, self.term_mul()?);
            } else if self.eat_sym("-") {
                t = Term::sub(t, self.term_mul()?);
            } else {
                return Ok(t);
            }
        }
    }

    fn term_mul(&mut self) -> PResult<Term> {
        let mut t = self.term_unary()?;
        while self.eat_sym("*") {
            t = Term::mul(t, self.term_unary()?);
        }
        Ok(t)
    }

    fn term_unary(&mut self) -> PResult<Term> {
        if self.eat_sym("-") {
            return Ok(Term::neg(self.term_unary()?));
        }
        self.term_power()
    }

    fn term_power(&mut self) -> PResult<Term> {
        let base = self.term_atom()?;
        if self.eat_sym("^") {
            let n = match self.bump() {
                Tok::Num(r) if r.is_integer() => r.numer().clone(),
                _ => return self.err("exponent must be a nonnegative integer literal"),
            };
            let n: u32 = n.try_into().map_err(|_| self.mk_err("exponent must be a small nonnegative integer"))?;
            if n == 0 {
                return Ok(Term::num(1));
            }
            let mut t = base.clone();
            for _ in 1..n {
                t = Term::mul(t, base.clone());
            }
            return Ok(t);
        }
        Ok(base)
    }

    fn term_atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Num(r) => {
                self.bump();
                Ok(Term::Num(r))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.term()?;
                if self.eat_sym("/") {
                    let d = self.term()?;
                    let (Term::Num(n), Term::Num(dn)) = (&t, &d) else {
                        return self.err("`/` is only allowed between number literals");
                    };
                    if rat_is_zero(dn) {
                        return self.err("division by zero in literal");
                    }
                    self.expect_sym(")")?;
                    return Ok(Term::Num(n / dn));
                }
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Ident(w) if w == "if" => {
                self.bump();
                let c = self.formula()?;
                self.expect_kw("then")?;
                let a = self.term()?;
                self.expect_kw("else")?;
                let b = self.term()?;
                self.expect_kw("fi")?;
                Ok(Term::Cond(Box::new(c), Box::new(a), Box::new(b)))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                let in_scope = self.scope.iter().any(|b| b.var == name);
                if self.peek() == &Tok::Sym("(") && !in_scope {
                    self.bump();
                    let mut args = Vec::new();
                    if self.peek() != &Tok::Sym(")") {
                        loop {
                            args.push(self.term()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    self.expect_sym(")")?;
                    let t = Term::App(name, args);
                    if self.eat_sym("'") {
                        if let Term::App(f, a) = t {
                            return Ok(Term::DiffApp(f, a));
                        }
                        unreachable!();
                    }
                    return Ok(t);
                }
                if in_scope || self.theory.sig.vars.contains_key(&name) {
                    return Ok(Term::Var(name));
                }
                if self.theory.sig.funcs.contains_key(&name) || name == EXISTS_FN {
                    let t = Term::App(name, Vec::new());
                    if self.eat_sym("'") {
                        if let Term::App(f, a) = t {
                            return Ok(Term::DiffApp(f, a));
                        }
                    }
                    return Ok(t);
                }
                // Unknown names parse as variables; typing rejects later with
                // a precise message.
                Ok(Term::Var(name))
            }
            _ => self.err("expected term"),
        }
    }

    // -- formulas -----------------------------------------------------------

    fn formula(&mut self) -> PResult<StateFormula> {
        let a = self.formula_or()?;
        if self.eat_sym("->") {
            let b = self.formula()?;
            return Ok(StateFormula::imp(a, b));
        }
        Ok(a)
    }

    fn formula_or(&mut self) -> PResult<StateFormula> {
        let a = self.formula_and()?;
        if self.eat_sym("|") {
            let b = self.formula_or()?;
            return Ok(StateFormula::or(a, b));
        }
        Ok(a)
    }

    fn formula_and(&mut self) -> PResult<StateFormula> {
        let a = self.formula_unary()?;
        if self.eat_sym("&") {
            let b = self.formula_and()?;
            return Ok(StateFormula::and(a, b));
        }
        Ok(a)
    }

    fn binder(&mut self) -> PResult<Binder> {
        let var = self.ident()?;
        self.expect_sym(":")?;
        let sort = self.ident()?;
        if !self.theory.sig.has_sort(&sort) {
            return self.err(format!("unknown sort `{sort}`"));
        }
        Ok(Binder { var, sort })
    }

    fn formula_unary(&mut self) -> PResult<StateFormula> {
        match self.peek().clone() {
            Tok::Sym("!") => {
                self.bump();
                Ok(StateFormula::not(self.formula_unary()?))
            }
            Tok::Ident(w) if w == "forall" || w == "exists" => {
                self.bump();
                let b = self.binder()?;
                self.scope.push(b.clone());
                let body = self.formula_unary();
                self.scope.pop();
                let body = body?;
                Ok(if w == "forall" {
                    StateFormula::Forall(b, Box::new(body))
                } else {
                    StateFormula::Exists(b, Box::new(body))
                })
            }
            Tok::Ident(w) if w == "true" => {
                self.bump();
                Ok(StateFormula::True)
            }
            Tok::Ident(w) if w == "false" => {
                self.bump();
                Ok(StateFormula::False)
            }
            Tok::Sym("[") => {
                self.bump();
                let p = self.program()?;
                self.expect_sym("]")?;
                let pi = self.trace_formula()?;
                Ok(StateFormula::Box_(Box::new(p), Box::new(pi)))
            }
            Tok::Sym("<") => {
                self.bump();
                let p = self.program()?;
                self.expect_sym(">")?;
                let pi = self.trace_formula()?;
                Ok(StateFormula::Dia(Box::new(p), Box::new(pi)))
            }
            Tok::Ident(w)
                if self.theory.defs.contains_key(&w)
                    && !self.scope.iter().any(|b| b.var == w) =>
            {
                self.def_application(&w)
            }
            Tok::Sym("(") => {
                // Could open a grouped formula or a parenthesized term; try
                // the formula reading first and fall back on failure.
                let save = self.idx;
                self.bump();
                if let Ok(f) = self.formula() {
                    if self.eat_sym(")") {
                        return Ok(f);
                    }
                }
                self.idx = save;
                self.comparison()
            }
            _ => self.comparison(),
        }
    }

    fn trace_formula(&mut self) -> PResult<TraceFormula> {
        if self.eat_kw("box") {
            return Ok(TraceFormula::Always(self.formula_unary()?));
        }
        if self.eat_kw("dia") {
            return Ok(TraceFormula::Eventually(self.formula_unary()?));
        }
        Ok(TraceFormula::State(self.formula_unary()?))
    }

    fn def_application(&mut self, name: &str) -> PResult<StateFormula> {
        self.bump();
        let def = self.theory.defs.get(name).unwrap().clone();
        let mut args = Vec::new();
        if self.eat_sym("(") {
            if self.peek() != &Tok::Sym(")") {
                loop {
                    args.push(self.term()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        if args.len() != def.params.len() {
            return self.err(format!(
                "`{name}` takes {} argument(s), found {}",
                def.params.len(),
                args.len()
            ));
        }
        expand_def(&def, &args).map_err(|e| {
            let s = self.span();
            ParseError { msg: e.to_string(), line: s.line, col: s.col, start: s.start, end: s.end }
        })
    }

    fn comparison(&mut self) -> PResult<StateFormula> {
        let a = self.term()?;
        if self.eat_sym("=") {
            return Ok(StateFormula::Eq(a, self.term()?));
        }
        if self.eat_sym(">=") {
            return Ok(StateFormula::Geq(a, self.term()?));
        }
        if self.eat_sym("<=") {
            return Ok(StateFormula::leq(a, self.term()?));
        }
        if self.eat_sym("<") {
            return Ok(StateFormula::lt(a, self.term()?));
        }
        if self.eat_sym(">") {
            return Ok(StateFormula::gt(a, self.term()?));
        }
        self.err("expected comparison operator")
    }

    // -- programs -----------------------------------------------------------

    fn program(&mut self) -> PResult<Program> {
        let a = self.program_seq()?;
        if self.eat_sym("++") {
            let b = self.program()?;
            return Ok(Program::Choice(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn program_seq(&mut self) -> PResult<Program> {
        let a = self.program_postfix()?;
        if self.eat_sym(";") {
            let b = self.program_seq()?;
            return Ok(Program::Seq(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn program_postfix(&mut self) -> PResult<Program> {
        let mut p = self.program_primary()?;
        while self.eat_sym("*") {
            p = Program::Loop(Box::new(p));
        }
        Ok(p)
    }

    fn program_primary(&mut self) -> PResult<Program> {
        match self.peek().clone() {
            Tok::Sym("?") => {
                self.bump();
                Ok(Program::Test(Box::new(self.formula()?)))
            }
            Tok::Sym("(") => {
                self.bump();
                let p = self.program()?;
                self.expect_sym(")")?;
                Ok(p)
            }
            Tok::Sym("{") => {
                self.bump();
                let p = self.program()?;
                self.expect_sym("}")?;
                Ok(p)
            }
            Tok::Ident(w) if w == "forall" => {
                self.bump();
                let b = self.binder()?;
                self.scope.push(b.clone());
                let r = self.quantified_body(b.clone());
                self.scope.pop();
                r
            }
            Tok::Ident(_) => self.items_program(None),
            _ => self.err("expected program"),
        }
    }

    fn quantified_body(&mut self, b: Binder) -> PResult<Program> {
        // `forall j:A n := theta` when the target is a plain variable.
        if let Tok::Ident(name) = self.peek().clone() {
            let is_plain_var = !self.theory.sig.funcs.contains_key(&name)
                && name != EXISTS_FN
                && !self.theory.flows.contains_key(&name)
                && !self.theory.updates.contains_key(&name)
                && !self.scope.iter().any(|sb| sb.var == name);
            if is_plain_var {
                self.bump();
                self.expect_sym(":=")?;
                let rhs = self.term()?;
                return Ok(Program::VarAssign { binder: b, var: name, rhs });
            }
        }
        self.items_program(Some(b))
    }

    /// Comma-separated assignment items or ODE items, with optional `& chi`
    /// evolution domain for the latter.
    fn items_program(&mut self, binder: Option<Binder>) -> PResult<Program> {
        let mut assigns: Vec<AssignItem> = Vec::new();
        let mut odes: Vec<OdeItem> = Vec::new();
        loop {
            let name = self.ident()?;
            if let Some(flow) = self.theory.flows.get(&name).cloned() {
                let args = self.abbrev_args(&name, flow.params.len())?;
                for it in &flow.items {
                    odes.push(instantiate_ode_item(it, &flow.params, &args).map_err(|e| self.mk_err(e))?);
                }
            } else if let Some(upd) = self.theory.updates.get(&name).cloned() {
                let args = self.abbrev_args(&name, upd.params.len())?;
                for it in &upd.items {
                    assigns
                        .push(instantiate_assign_item(it, &upd.params, &args).map_err(|e| self.mk_err(e))?);
                }
            } else {
                let mut args = Vec::new();
                if self.eat_sym("(") {
                    if self.peek() != &Tok::Sym(")") {
                        loop {
                            args.push(self.term()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    self.expect_sym(")")?;
                }
                let primed = self.eat_sym("'");
                if self.eat_sym(":=") {
                    if self.eat_kw("new") {
                        if primed || !args.is_empty() || binder.is_some() {
                            return self.err("`new` only applies to a plain name");
                        }
                        let sort = self.ident()?;
                        return Ok(Program::New { var: name, sort });
                    }
                    let rhs = self.term()?;
                    assigns.push(AssignItem { func: name, args, primed, rhs });
                } else if primed && self.eat_sym("=") {
                    let rhs = self.term()?;
                    odes.push(OdeItem { func: name, args, rhs });
                } else {
                    return self.err("expected `:=` or `' =` in program item");
                }
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        if !assigns.is_empty() && !odes.is_empty() {
            return self.err("cannot mix discrete assignments and differential equations in one item list");
        }
        if !odes.is_empty() {
            let domain = if self.eat_sym("&") { self.formula()? } else { StateFormula::True };
            return Ok(Program::Ode { binder, items: odes, domain: Box::new(domain) });
        }
        Ok(Program::Assign { binder, items: assigns })
    }

    fn abbrev_args(&mut self, name: &str, arity: usize) -> PResult<Vec<Term>> {
        let mut args = Vec::new();
        if self.eat_sym("(") {
            if self.peek() != &Tok::Sym(")") {
                loop {
                    args.push(self.term()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        if args.len() != arity {
            return self.err(format!("`{name}` takes {arity} argument(s), found {}", args.len()));
        }
        Ok(args)
    }

    fn mk_err(&self, e: impl std::fmt::Display) -> ParseError {
        let s = self.span();
        ParseError { msg: e.to_string(), line: s.line, col: s.col, start: s.start, end: s.end }
    }
}

fn sym_static(s: &str) -> &'static str {
    SYMBOLS.iter().find(|k| **k == s).expect("known symbol")
}

// ---------------------------------------------------------------------------
// abbreviation expansion

fn expand_def(def: &Def, args: &[Term]) -> Result<StateFormula, SubstError> {
    // Simultaneous substitution: rename parameters to fresh intermediates
    // first so arguments can mention parameter names.
    let mut body = def.body.clone();
    let fresh: Vec<String> =
        (0..def.params.len()).map(|k| format!("__param_{k}")).collect();
    for (p, f) in def.params.iter().zip(&fresh) {
        body = substitute_formula(&body, &p.var, &Term::Var(f.clone()))?;
    }
    for (f, a) in fresh.iter().zip(args) {
        body = substitute_formula(&body, f, a)?;
    }
    Ok(body)
}

fn instantiate_ode_item(
    it: &OdeItem,
    params: &[Binder],
    args: &[Term],
) -> Result<OdeItem, SubstError> {
    let subst = |t: &Term| -> Result<Term, SubstError> {
        let mut t = t.clone();
        let fresh: Vec<String> = (0..params.len()).map(|k| format!("__param_{k}")).collect();
        for (p, f) in params.iter().zip(&fresh) {
            t = substitute_term(&t, &p.var, &Term::Var(f.clone()))?;
        }
        for (f, a) in fresh.iter().zip(args) {
            t = substitute_term(&t, f, a)?;
        }
        Ok(t)
    };
    Ok(OdeItem {
        func: it.func.clone(),
        args: it.args.iter().map(&subst).collect::<Result<_, _>>()?,
        rhs: subst(&it.rhs)?,
    })
}

fn instantiate_assign_item(
    it: &AssignItem,
    params: &[Binder],
    args: &[Term],
) -> Result<AssignItem, SubstError> {
    let ode = OdeItem { func: it.func.clone(), args: it.args.clone(), rhs: it.rhs.clone() };
    let out = instantiate_ode_item(&ode, params, args)?;
    Ok(AssignItem { func: out.func, args: out.args, primed: it.primed, rhs: out.rhs })
}

// ---------------------------------------------------------------------------
// top-level entry points

/// Parse a theory file: declarations, abbreviations, conjectures. Every
/// conjecture is abbreviation-expanded, `new`-desugared, and type-checked.
/// Declarations must precede their uses.
pub fn parse_theory(src: &str) -> Result<Theory, ParseError> {
    let mut theory = Theory { sig: Signature::new(), ..Default::default() };
    let toks = lex(src)?;
    let mut idx = 0usize;
    while toks[idx].0 != Tok::Eof {
        // Each declaration parses against a snapshot of the theory so far.
        let snapshot = theory.clone();
        let mut p = Parser { toks: toks.clone(), idx, theory: &snapshot, scope: Vec::new() };
        parse_decl(&mut p, &mut theory)?;
        idx = p.idx;
    }
    Ok(theory)
}

fn parse_decl(p: &mut Parser<'_>, theory: &mut Theory) -> PResult<()> {
    if p.eat_kw("sort") {
        let name = p.ident()?;
        theory.sig.add_sort(&name);
    } else if p.eat_kw("var") {
        let name = p.ident()?;
        p.expect_sym(":")?;
        let sort = p.ident()?;
        if !theory.sig.has_sort(&sort) {
            return p.err(format!("unknown sort `{sort}`"));
        }
        theory.sig.vars.insert(name, sort);
    } else if matches!(p.peek(), Tok::Ident(w) if w == "rigid" || w == "func") {
        let rigid = p.eat_kw("rigid");
        p.expect_kw("func")?;
        let name = p.ident()?;
        p.expect_sym(":")?;
        let mut sorts = vec![p.ident()?];
        while p.eat_sym("*") {
            sorts.push(p.ident()?);
        }
        let (arg_sorts, result) = if p.eat_sym("->") {
            (sorts, p.ident()?)
        } else if sorts.len() == 1 {
            (Vec::new(), sorts.pop().unwrap())
        } else {
            return p.err("nullary function declares a single result sort");
        };
        for s in arg_sorts.iter().chain(std::iter::once(&result)) {
            if !theory.sig.has_sort(s) {
                return p.err(format!("unknown sort `{s}`"));
            }
        }
        let refs: Vec<&str> = arg_sorts.iter().map(|s| s.as_str()).collect();
        theory.sig.add_func(&name, &refs, &result, rigid);
    } else if p.eat_kw("def") {
        let name = p.ident()?;
        let params = parse_params(p)?;
        p.expect_sym(":=")?;
        p.scope = params.clone();
        let body = p.formula()?;
        p.scope.clear();
        check_def_body(p, theory, &params, &body)?;
        theory.defs.insert(name, Def { params, body });
    } else if p.eat_kw("flow") {
        let name = p.ident()?;
        let params = parse_params(p)?;
        p.expect_sym(":=")?;
        p.scope = params.clone();
        let prog = p.items_program(None)?;
        p.scope.clear();
        let Program::Ode { items, domain, .. } = prog else {
            return p.err("`flow` body must be a list of differential equations");
        };
        if *domain != StateFormula::True {
            return p.err("`flow` bodies carry no evolution domain; attach it at the use site");
        }
        theory.flows.insert(name, OdeDef { params, items });
    } else if p.eat_kw("update") {
        let name = p.ident()?;
        let params = parse_params(p)?;
        p.expect_sym(":=")?;
        p.scope = params.clone();
        let prog = p.items_program(None)?;
        p.scope.clear();
        let Program::Assign { items, .. } = prog else {
            return p.err("`update` body must be a list of assignments");
        };
        theory.updates.insert(name, UpdateDef { params, items });
    } else if p.eat_kw("conjecture") {
        let name = p.ident()?;
        p.expect_sym(":")?;
        let phi = p.formula()?;
        let phi = desugar_news_in_formula(&phi).map_err(|e| p.mk_err(e))?;
        if let Err(e) = well_typed_formula(&phi, &theory.sig) {
            return p.err(format!("conjecture `{name}` ill-typed: {e}"));
        }
        theory.conjectures.push((name, phi));
    } else {
        return p.err("expected declaration (sort, func, var, def, flow, update, conjecture)");
    }
    Ok(())
}


fn parse_params(p: &mut Parser<'_>) -> PResult<Vec<Binder>> {
    let mut params = Vec::new();
    if p.eat_sym("(") {
        if p.peek() != &Tok::Sym(")") {
            loop {
                params.push(p.binder()?);
                if !p.eat_sym(",") {
                    break;
                }
            }
        }
        p.expect_sym(")")?;
    }
    Ok(params)
}

fn check_def_body(
    p: &Parser<'_>,
    theory: &Theory,
    params: &[Binder],
    body: &StateFormula,
) -> PResult<()> {
    let mut sig = theory.sig.clone();
    for b in params {
        sig.vars.insert(b.var.clone(), b.sort.clone());
    }
    if let Err(e) = well_typed_formula(body, &sig) {
        return p.err(format!("definition body ill-typed: {e}"));
    }
    Ok(())
}

/// Apply `desugar_new` to every program inside a formula.
pub fn desugar_news_in_formula(phi: &StateFormula) -> Result<StateFormula, DesugarError> {
    Ok(match phi {
        StateFormula::True
        | StateFormula::False
        | StateFormula::Eq(..)
        | StateFormula::Geq(..) => phi.clone(),
        StateFormula::Not(a) => StateFormula::not(desugar_news_in_formula(a)?),
        StateFormula::And(a, b) => {
            StateFormula::and(desugar_news_in_formula(a)?, desugar_news_in_formula(b)?)
        }
        StateFormula::Forall(b, a) => {
            StateFormula::Forall(b.clone(), Box::new(desugar_news_in_formula(a)?))
        }
        StateFormula::Exists(b, a) => {
            StateFormula::Exists(b.clone(), Box::new(desugar_news_in_formula(a)?))
        }
        StateFormula::Box_(p, pi) | StateFormula::Dia(p, pi) => {
            let p2 = desugar_new(p)?;
            let pi2 = match pi.as_ref() {
                TraceFormula::State(f) => TraceFormula::State(desugar_news_in_formula(f)?),
                TraceFormula::Always(f) => TraceFormula::Always(desugar_news_in_formula(f)?),
                TraceFormula::Eventually(f) => {
                    TraceFormula::Eventually(desugar_news_in_formula(f)?)
                }
            };
            if matches!(phi, StateFormula::Box_(..)) {
                StateFormula::Box_(Box::new(p2), Box::new(pi2))
            } else {
                StateFormula::Dia(Box::new(p2), Box::new(pi2))
            }
        }
    })
}

/// Parse one formula against an existing theory (used by tests and script
/// arguments).
pub fn parse_formula(src: &str, theory: &Theory) -> Result<StateFormula, ParseError> {
    let mut p = Parser::new(src, theory)?;
    let f = p.formula()?;
    if p.peek() != &Tok::Eof {
        return p.err("trailing input after formula");
    }
    desugar_news_in_formula(&f).map_err(|e| p.mk_err(e))
}

pub fn parse_term_str(src: &str, theory: &Theory) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, theory)?;
    let t = p.term()?;
    if p.peek() != &Tok::Eof {
        return p.err("trailing input after term");
    }
    Ok(t)
}

pub fn parse_program_str(src: &str, theory: &Theory) -> Result<Program, ParseError> {
    let mut p = Parser::new(src, theory)?;
    let prog = p.program()?;
    if p.peek() != &Tok::Eof {
        return p.err("trailing input after program");
    }
    desugar_new(&prog).map_err(|e| p.mk_err(e))
}

/// Parse a script file holding one or more named proofs.
pub fn parse_scripts(src: &str, theory: &Theory) -> Result<Vec<Script>, ParseError> {
    let mut p = Parser::new(src, theory)?;
    let mut scripts = Vec::new();
    while p.peek() != &Tok::Eof {
        p.expect_kw("proof")?;
        let name = p.ident()?;
        p.expect_kw("for")?;
        let conjecture = p.ident()?;
        p.expect_sym("{")?;
        let steps = parse_steps(&mut p)?;
        p.expect_sym("}")?;
        scripts.push(Script { name, conjecture, steps });
    }
    Ok(scripts)
}

fn parse_steps(p: &mut Parser<'_>) -> PResult<Vec<Step>> {
    let mut steps = Vec::new();
    loop {
        match p.peek() {
            Tok::Sym("}") | Tok::Eof => return Ok(steps),
            _ => {}
        }
        let span = p.span();
        let rule = p.ident()?;
        let mut args = Vec::new();
        if p.eat_sym("(") {
            if p.peek() != &Tok::Sym(")") {
                loop {
                    args.push(parse_arg(p)?);
                    if !p.eat_sym(",") {
                        break;
                    }
                }
            }
            p.expect_sym(")")?;
        }
        let mut pos = None;
        if p.eat_kw("at") {
            let side_ant = if p.eat_kw("ant") {
                true
            } else {
                p.expect_kw("succ")?;
                false
            };
            p.expect_sym(":")?;
            let n = match p.bump() {
                Tok::Num(r) if r.is_integer() => {
                    let v: i64 = r.numer().try_into().map_err(|_| p.mk_err("index too large"))?;
                    v as usize
                }
                _ => return p.err("expected index"),
            };
            pos = Some(if side_ant { Pos::Ant(n) } else { Pos::Suc(n) });
        }
        let mut children = None;
        if p.eat_sym("{") {
            let mut blocks = Vec::new();
            while p.eat_sym("{") {
                blocks.push(parse_steps(p)?);
                p.expect_sym("}")?;
            }
            p.expect_sym("}")?;
            children = Some(blocks);
        }
        p.eat_sym(";");
        steps.push(Step { rule, args, pos, children, span });
    }
}

fn parse_arg(p: &mut Parser<'_>) -> PResult<Arg> {
    // Try a formula first; fall back to a bare term, then to a raw name.
    let save = p.idx;
    if let Ok(f) = p.formula() {
        if matches!(p.peek(), Tok::Sym(",") | Tok::Sym(")")) {
            return Ok(Arg::Formula(f));
        }
    }
    p.idx = save;
    if let Ok(t) = p.term() {
        if matches!(p.peek(), Tok::Sym(",") | Tok::Sym(")")) {
            return Ok(Arg::Term(t));
        }
    }
    p.idx = save;
    let name = p.ident()?;
    Ok(Arg::Name(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::printer::print_formula;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn theory() -> Theory {
        parse_theory(
            "sort A\n\
             func a : R\n\
             func b : R\n\
             func g : A -> R\n\
             conjecture dummy : true\n",
        )
        .unwrap()
    }

    fn rand_term(rng: &mut ChaCha8Rng, depth: usize, bound: Option<&str>) -> Term {
        if depth == 0 {
            return match rng.gen_range(0..5) {
                0 => Term::num(rng.gen_range(0i64..=9)),
                1 => Term::App("a".into(), vec![]),
                2 => Term::App("b".into(), vec![]),
                3 => match bound {
                    Some(v) => Term::App("g".into(), vec![Term::Var(v.into())]),
                    None => Term::App("a".into(), vec![]),
                },
                _ => Term::Num(Rat::new(1.into(), 2.into())),
            };
        }
        match rng.gen_range(0..5) {
            0 => Term::App(
                "+".into(),
                vec![rand_term(rng, depth - 1, bound), rand_term(rng, depth - 1, bound)],
            ),
            1 => Term::App(
                "-".into(),
                vec![rand_term(rng, depth - 1, bound), rand_term(rng, depth - 1, bound)],
            ),
            2 => Term::App(
                "*".into(),
                vec![rand_term(rng, depth - 1, bound), rand_term(rng, depth - 1, bound)],
            ),
            // `-` applied to a numeral lexes back as a negative literal, so
            // only negate symbolic atoms.
            3 => Term::neg(Term::App("a".into(), vec![])),
            _ => rand_term(rng, 0, bound),
        }
    }

    fn rand_atom(rng: &mut ChaCha8Rng, bound: Option<&str>) -> StateFormula {
        let a = rand_term(rng, 1, bound);
        let b = rand_term(rng, 1, bound);
        match rng.gen_range(0..5) {
            0 => StateFormula::Eq(a, b),
            1 => StateFormula::lt(a, b),
            2 => StateFormula::True,
            _ => StateFormula::Geq(a, b),
        }
    }

    fn rand_program(rng: &mut ChaCha8Rng, depth: usize) -> Program {
        if depth == 0 {
            return match rng.gen_range(0..3) {
                0 => Program::Assign {
                    binder: None,
                    items: vec![AssignItem {
                        func: "a".into(),
                        args: vec![],
                        primed: false,
                        rhs: rand_term(rng, 1, None),
                    }],
                },
                1 => Program::Test(Box::new(rand_atom(rng, None))),
                _ => Program::Ode {
                    binder: None,
                    items: vec![OdeItem {
                        func: "a".into(),
                        args: vec![],
                        rhs: rand_term(rng, 1, None),
                    }],
                    domain: Box::new(if rng.gen_bool(0.5) {
                        StateFormula::True
                    } else {
                        rand_atom(rng, None)
                    }),
                },
            };
        }
        match rng.gen_range(0..4) {
            0 => Program::Seq(
                Box::new(rand_program(rng, depth - 1)),
                Box::new(rand_program(rng, depth - 1)),
            ),
            1 => Program::Choice(
                Box::new(rand_program(rng, depth - 1)),
                Box::new(rand_program(rng, depth - 1)),
            ),
            2 => Program::Loop(Box::new(rand_program(rng, depth - 1))),
            _ => rand_program(rng, 0),
        }
    }

    fn rand_formula(rng: &mut ChaCha8Rng, depth: usize) -> StateFormula {
        if depth == 0 {
            return rand_atom(rng, None);
        }
        match rng.gen_range(0..8) {
            0 => StateFormula::not(rand_formula(rng, depth - 1)),
            1 => StateFormula::and(rand_formula(rng, depth - 1), rand_formula(rng, depth - 1)),
            2 => StateFormula::or(rand_formula(rng, depth - 1), rand_formula(rng, depth - 1)),
            3 => StateFormula::imp(rand_formula(rng, depth - 1), rand_formula(rng, depth - 1)),
            4 => {
                let b = Binder { var: "i".into(), sort: "A".into() };
                let body = rand_atom(rng, Some("i"));
                if rng.gen_bool(0.5) {
                    StateFormula::Forall(b, Box::new(body))
                } else {
                    StateFormula::Exists(b, Box::new(body))
                }
            }
            _ => {
                let p = rand_program(rng, 2);
                let inner = rand_formula(rng, depth - 1);
                let pi = match rng.gen_range(0..3) {
                    0 => TraceFormula::State(inner),
                    1 => TraceFormula::Always(inner),
                    _ => TraceFormula::Eventually(inner),
                };
                if rng.gen_bool(0.5) {
                    StateFormula::box_(p, pi)
                } else {
                    StateFormula::dia(p, pi)
                }
            }
        }
    }

    #[test]
    fn print_parse_round_trip_fuzz() {
        let th = theory();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for k in 0..1000 {
            let phi = rand_formula(&mut rng, 3);
            let printed = print_formula(&phi);
            let reparsed = parse_formula(&printed, &th)
                .unwrap_or_else(|e| panic!("case {k}: `{printed}` does not re-parse: {e}"));
            assert_eq!(reparsed, phi, "case {k}: `{printed}` re-parses differently");
        }
    }

    #[test]
    fn quantifier_binds_tighter_than_conjunction() {
        let th = theory();
        let phi = parse_formula("forall i:A g(i) >= 0 & a = 1", &th).unwrap();
        match phi {
            StateFormula::And(l, _) => assert!(matches!(*l, StateFormula::Forall(..))),
            other => panic!("expected conjunction at the root, got {other}"),
        }
    }

    #[test]
    fn grouped_formula_vs_parenthesized_term() {
        let th = theory();
        let f = parse_formula("(a >= 0 | b >= 0) & a = 1", &th).unwrap();
        assert!(matches!(f, StateFormula::And(..)));
        let t = parse_term_str("(a + 1) * 2", &th).unwrap();
        assert_eq!(normalize_ok(&t), normalize_ok(&parse_term_str("2 * a + 2", &th).unwrap()));
    }

    fn normalize_ok(t: &Term) -> crate::arith::poly::Polynomial {
        crate::arith::poly::normalize(t).unwrap()
    }

    #[test]
    fn var_declarations_enter_the_signature() {
        let th = parse_theory("sort A\nvar n : A\nconjecture dummy : true\n").unwrap();
        assert_eq!(th.sig.vars.get("n").map(String::as_str), Some("A"));
        assert!(parse_theory("var n : B\nconjecture dummy : true\n").is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_theory("sort A\nconjecture bad : a >= >= 0\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.to_string().contains("line 2"));
    }
}
