//! Sorts, terms, programs, formulas, and sequents, together with
//! well-typedness, admissible substitution, and the desugaring passes
//! shared by every other module.
//!
//! ASTs are immutable after construction; all operations here are pure.

use num::BigRational;
use num::Zero;
use serde::Serialize;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Name of the distinguished real sort.
pub const REAL: &str = "R";
/// The existence function symbol: flexible, unary over each object sort.
pub const EXISTS_FN: &str = "E";

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    BigRational::from_integer(n.into())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SortDecl {
    pub name: String,
    pub is_real: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FuncDecl {
    pub name: String,
    pub arg_sorts: Vec<String>,
    pub result: String,
    pub rigid: bool,
}

/// Function-symbol table. `0, 1, +, -, *, neg` are implicit rigid
/// real-arithmetic symbols and never appear in `funcs`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub sorts: Vec<SortDecl>,
    pub funcs: BTreeMap<String, FuncDecl>,
    /// Sorts of free logical variables (Skolem-era or declared).
    pub vars: BTreeMap<String, String>,
}

impl Signature {
    pub fn new() -> Self {
        let mut sig = Signature::default();
        sig.sorts.push(SortDecl { name: REAL.into(), is_real: true });
        sig
    }

    pub fn add_sort(&mut self, name: &str) {
        if self.sorts.iter().all(|s| s.name != name) {
            self.sorts.push(SortDecl { name: name.into(), is_real: false });
        }
    }

    pub fn has_sort(&self, name: &str) -> bool {
        self.sorts.iter().any(|s| s.name == name)
    }

    pub fn object_sorts(&self) -> impl Iterator<Item = &str> {
        self.sorts.iter().filter(|s| !s.is_real).map(|s| s.name.as_str())
    }

    pub fn add_func(&mut self, name: &str, arg_sorts: &[&str], result: &str, rigid: bool) {
        self.funcs.insert(
            name.into(),
            FuncDecl {
                name: name.into(),
                arg_sorts: arg_sorts.iter().map(|s| s.to_string()).collect(),
                result: result.into(),
                rigid,
            },
        );
    }

    pub fn is_rigid(&self, name: &str) -> bool {
        if is_builtin_arith(name) {
            return true;
        }
        if name == EXISTS_FN {
            return false;
        }
        self.funcs.get(name).map(|f| f.rigid).unwrap_or(false)
    }

    /// A name unused by any declared symbol or variable.
    pub fn fresh_name(&self, stem: &str, avoid: &BTreeSet<String>) -> String {
        let mut k = 0usize;
        loop {
            let cand = if k == 0 { stem.to_string() } else { format!("{stem}{k}") };
            if !self.funcs.contains_key(&cand)
                && !self.vars.contains_key(&cand)
                && !avoid.contains(&cand)
            {
                return cand;
            }
            k += 1;
        }
    }
}

pub fn is_builtin_arith(name: &str) -> bool {
    matches!(name, "+" | "-" | "*" | "neg")
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Term {
    Var(String),
    Num(Rat),
    /// Function application, including the builtin arithmetic symbols.
    App(String, Vec<Term>),
    /// Differential symbol application `f(s)'`; only legal inside ODE
    /// contexts and derivative-generated formulas.
    DiffApp(String, Vec<Term>),
    /// `if cond then a else b fi`
    Cond(Box<StateFormula>, Box<Term>, Box<Term>),
}

impl Term {
    pub fn num(n: i64) -> Term {
        Term::Num(rat(n))
    }
    pub fn add(a: Term, b: Term) -> Term {
        Term::App("+".into(), vec![a, b])
    }
    pub fn sub(a: Term, b: Term) -> Term {
        Term::App("-".into(), vec![a, b])
    }
    pub fn mul(a: Term, b: Term) -> Term {
        Term::App("*".into(), vec![a, b])
    }
    pub fn neg(a: Term) -> Term {
        Term::App("neg".into(), vec![a])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Binder {
    pub var: String,
    pub sort: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AssignItem {
    pub func: String,
    pub args: Vec<Term>,
    /// Assignment to the differential symbol `f(s)'` rather than `f(s)`.
    pub primed: bool,
    pub rhs: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct OdeItem {
    pub func: String,
    pub args: Vec<Term>,
    pub rhs: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Program {
    /// Simultaneous quantified assignment `forall i:A f(s) := theta, ...`.
    /// The binder is absent for unquantified assignments like `t := 0`.
    Assign { binder: Option<Binder>, items: Vec<AssignItem> },
    /// Quantified differential equation system with evolution domain.
    Ode { binder: Option<Binder>, items: Vec<OdeItem>, domain: Box<StateFormula> },
    /// Nondeterministic object assignment `forall j:A n := theta`.
    VarAssign { binder: Binder, var: String, rhs: Term },
    /// `n := new A`; sugar eliminated by [`desugar_new`].
    New { var: String, sort: String },
    Test(Box<StateFormula>),
    Choice(Box<Program>, Box<Program>),
    Seq(Box<Program>, Box<Program>),
    Loop(Box<Program>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StateFormula {
    True,
    False,
    Eq(Term, Term),
    Geq(Term, Term),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Forall(Binder, Box<StateFormula>),
    Exists(Binder, Box<StateFormula>),
    Box_(Box<Program>, Box<TraceFormula>),
    Dia(Box<Program>, Box<TraceFormula>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TraceFormula {
    State(StateFormula),
    Always(StateFormula),
    Eventually(StateFormula),
}

impl StateFormula {
    pub fn not(a: StateFormula) -> StateFormula {
        StateFormula::Not(Box::new(a))
    }
    pub fn and(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::And(Box::new(a), Box::new(b))
    }
    /// `a | b` as the committed `!(!a & !b)` form.
    pub fn or(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::not(StateFormula::and(StateFormula::not(a), StateFormula::not(b)))
    }
    /// `a -> b` as the committed `!(a & !b)` form.
    pub fn imp(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::not(StateFormula::and(a, StateFormula::not(b)))
    }
    pub fn leq(a: Term, b: Term) -> StateFormula {
        StateFormula::Geq(b, a)
    }
    pub fn lt(a: Term, b: Term) -> StateFormula {
        StateFormula::not(StateFormula::Geq(a, b))
    }
    pub fn gt(a: Term, b: Term) -> StateFormula {
        StateFormula::lt(b, a)
    }
    pub fn forall(var: &str, sort: &str, body: StateFormula) -> StateFormula {
        StateFormula::Forall(Binder { var: var.into(), sort: sort.into() }, Box::new(body))
    }
    pub fn exists(var: &str, sort: &str, body: StateFormula) -> StateFormula {
        StateFormula::Exists(Binder { var: var.into(), sort: sort.into() }, Box::new(body))
    }
    pub fn box_(p: Program, pi: TraceFormula) -> StateFormula {
        StateFormula::Box_(Box::new(p), Box::new(pi))
    }
    pub fn dia(p: Program, pi: TraceFormula) -> StateFormula {
        StateFormula::Dia(Box::new(p), Box::new(pi))
    }

    /// Recognize the committed or-pattern `!(!a & !b)`.
    pub fn as_or(&self) -> Option<(&StateFormula, &StateFormula)> {
        if let StateFormula::Not(inner) = self {
            if let StateFormula::And(l, r) = inner.as_ref() {
                if let (StateFormula::Not(a), StateFormula::Not(b)) = (l.as_ref(), r.as_ref()) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Recognize the committed implication pattern `!(a & !b)`.
    pub fn as_imp(&self) -> Option<(&StateFormula, &StateFormula)> {
        if let StateFormula::Not(inner) = self {
            if let StateFormula::And(l, r) = inner.as_ref() {
                if let StateFormula::Not(b) = r.as_ref() {
                    return Some((l, b));
                }
            }
        }
        None
    }

    /// Recognize `a < b`, committed as `!(a >= b)`.
    pub fn as_lt(&self) -> Option<(&Term, &Term)> {
        if let StateFormula::Not(inner) = self {
            if let StateFormula::Geq(a, b) = inner.as_ref() {
                return Some((a, b));
            }
        }
        None
    }
}

/// Antecedent and succedent, kept as canonically ordered duplicate-free sets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Sequent {
    pub ant: Vec<StateFormula>,
    pub suc: Vec<StateFormula>,
}

impl Sequent {
    pub fn new(ant: Vec<StateFormula>, suc: Vec<StateFormula>) -> Sequent {
        let mut s = Sequent { ant, suc };
        s.canonicalize();
        s
    }

    pub fn canonicalize(&mut self) {
        self.ant.sort();
        self.ant.dedup();
        self.suc.sort();
        self.suc.dedup();
    }

    pub fn with_ant(&self, f: StateFormula) -> Sequent {
        let mut ant = self.ant.clone();
        ant.push(f);
        Sequent::new(ant, self.suc.clone())
    }

    pub fn with_suc(&self, f: StateFormula) -> Sequent {
        let mut suc = self.suc.clone();
        suc.push(f);
        Sequent::new(self.ant.clone(), suc)
    }
}

// ---------------------------------------------------------------------------
// errors

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("unknown symbol `{name}` at {path}")]
    UnknownSymbol { name: String, path: String },
    #[error("sort mismatch at {path}: expected {expected}, found {found}")]
    SortMismatch { path: String, expected: String, found: String },
    #[error("sort `{sort}` has no ordering at {path}")]
    NoOrdering { sort: String, path: String },
    #[error("differential application of non-real symbol `{name}` at {path}")]
    DiffNotReal { name: String, path: String },
    #[error("differential application outside an ODE context at {path}")]
    DiffOutsideOde { path: String },
    #[error("assigned symbol `{name}` must be flexible at {path}")]
    RigidAssigned { name: String, path: String },
    #[error("ODE-evolved symbol `{name}` must be real-valued at {path}")]
    OdeNotReal { name: String, path: String },
    #[error("symbol `{name}` occurs in its own argument vector at {path}")]
    SelfArgument { name: String, path: String },
    #[error("test/evolution domain must be first-order at {path}")]
    NotFirstOrder { path: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("substitution not admissible: variable occurs under a modality binding `{symbol}`")]
    NotAdmissible { symbol: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DesugarError {
    #[error("conditional term under a modality writing `{symbol}`, which its condition mentions")]
    ConditionalUnderModality { symbol: String },
    #[error("`new` target `{var}` must have an object sort, not the real sort")]
    NewOnReal { var: String },
}

// ---------------------------------------------------------------------------
// typing

struct TypeCk<'a> {
    sig: &'a Signature,
    /// Whether differential applications are currently admissible.
    allow_diff: bool,
}

pub fn sort_of_term(
    t: &Term,
    sig: &Signature,
    env: &BTreeMap<String, String>,
) -> Result<String, TypeError> {
    TypeCk { sig, allow_diff: true }.term(t, env, "")
}

impl<'a> TypeCk<'a> {
    fn term(&self, t: &Term, env: &BTreeMap<String, String>, path: &str) -> Result<String, TypeError> {
        match t {
            Term::Var(v) => env
                .get(v)
                .or_else(|| self.sig.vars.get(v))
                .cloned()
                .ok_or_else(|| TypeError::UnknownSymbol { name: v.clone(), path: path.into() }),
            Term::Num(_) => Ok(REAL.into()),
            Term::App(f, args) => self.app(f, args, false, env, path),
            Term::DiffApp(f, args) => {
                if !self.allow_diff {
                    return Err(TypeError::DiffOutsideOde { path: path.into() });
                }
                self.app(f, args, true, env, path)
            }
            Term::Cond(c, a, b) => {
                self.formula(c, env, &format!("{path}.cond"))?;
                let sa = self.term(a, env, &format!("{path}.then"))?;
                let sb = self.term(b, env, &format!("{path}.else"))?;
                if sa != sb {
                    return Err(TypeError::SortMismatch { path: path.into(), expected: sa, found: sb });
                }
                Ok(sa)
            }
        }
    }

    fn app(
        &self,
        f: &str,
        args: &[Term],
        primed: bool,
        env: &BTreeMap<String, String>,
        path: &str,
    ) -> Result<String, TypeError> {
        if is_builtin_arith(f) {
            let arity = if f == "neg" { 1 } else { 2 };
            if args.len() != arity {
                return Err(TypeError::SortMismatch {
                    path: path.into(),
                    expected: format!("{arity} argument(s)"),
                    found: format!("{}", args.len()),
                });
            }
            for (k, a) in args.iter().enumerate() {
                let s = self.term(a, env, &format!("{path}.{k}"))?;
                if s != REAL {
                    return Err(TypeError::SortMismatch { path: format!("{path}.{k}"), expected: REAL.into(), found: s });
                }
            }
            return Ok(REAL.into());
        }
        if f == EXISTS_FN {
            if args.len() != 1 {
                return Err(TypeError::SortMismatch {
                    path: path.into(),
                    expected: "1 argument".into(),
                    found: format!("{}", args.len()),
                });
            }
            let s = self.term(&args[0], env, &format!("{path}.0"))?;
            if s == REAL {
                return Err(TypeError::SortMismatch { path: path.into(), expected: "object sort".into(), found: s });
            }
            return Ok(REAL.into());
        }
        let decl = self
            .sig
            .funcs
            .get(f)
            .ok_or_else(|| TypeError::UnknownSymbol { name: f.into(), path: path.into() })?;
        if decl.arg_sorts.len() != args.len() {
            return Err(TypeError::SortMismatch {
                path: path.into(),
                expected: format!("{} argument(s)", decl.arg_sorts.len()),
                found: format!("{}", args.len()),
            });
        }
        for (k, (a, want)) in args.iter().zip(&decl.arg_sorts).enumerate() {
            let s = self.term(a, env, &format!("{path}.{k}"))?;
            if &s != want {
                return Err(TypeError::SortMismatch { path: format!("{path}.{k}"), expected: want.clone(), found: s });
            }
        }
        if primed && decl.result != REAL {
            return Err(TypeError::DiffNotReal { name: f.into(), path: path.into() });
        }
        Ok(decl.result.clone())
    }

    fn formula(&self, phi: &StateFormula, env: &BTreeMap<String, String>, path: &str) -> Result<(), TypeError> {
        match phi {
            StateFormula::True | StateFormula::False => Ok(()),
            StateFormula::Eq(a, b) => {
                let sa = self.term(a, env, &format!("{path}.lhs"))?;
                let sb = self.term(b, env, &format!("{path}.rhs"))?;
                if sa != sb {
                    return Err(TypeError::SortMismatch { path: path.into(), expected: sa, found: sb });
                }
                Ok(())
            }
            StateFormula::Geq(a, b) => {
                let sa = self.term(a, env, &format!("{path}.lhs"))?;
                let sb = self.term(b, env, &format!("{path}.rhs"))?;
                if sa != REAL {
                    return Err(TypeError::NoOrdering { sort: sa, path: path.into() });
                }
                if sb != REAL {
                    return Err(TypeError::NoOrdering { sort: sb, path: path.into() });
                }
                Ok(())
            }
            StateFormula::Not(a) => self.formula(a, env, &format!("{path}.not")),
            StateFormula::And(a, b) => {
                self.formula(a, env, &format!("{path}.l"))?;
                self.formula(b, env, &format!("{path}.r"))
            }
            StateFormula::Forall(b, body) | StateFormula::Exists(b, body) => {
                if !self.sig.has_sort(&b.sort) {
                    return Err(TypeError::UnknownSymbol { name: b.sort.clone(), path: path.into() });
                }
                let mut env2 = env.clone();
                env2.insert(b.var.clone(), b.sort.clone());
                self.formula(body, &env2, &format!("{path}.body"))
            }
            StateFormula::Box_(p, pi) | StateFormula::Dia(p, pi) => {
                self.program(p, env, &format!("{path}.prog"))?;
                match pi.as_ref() {
                    TraceFormula::State(f)
                    | TraceFormula::Always(f)
                    | TraceFormula::Eventually(f) => self.formula(f, env, &format!("{path}.post")),
                }
            }
        }
    }

    fn program(&self, p: &Program, env: &BTreeMap<String, String>, path: &str) -> Result<(), TypeError> {
        match p {
            Program::Assign { binder, items } => {
                let env2 = extend_env(env, binder);
                for (k, it) in items.iter().enumerate() {
                    let ipath = format!("{path}.item{k}");
                    if self.sig.is_rigid(&it.func) {
                        return Err(TypeError::RigidAssigned { name: it.func.clone(), path: ipath });
                    }
                    let lhs = if it.primed {
                        Term::DiffApp(it.func.clone(), it.args.clone())
                    } else {
                        Term::App(it.func.clone(), it.args.clone())
                    };
                    let ls = self.term(&lhs, &env2, &ipath)?;
                    let rs = self.term(&it.rhs, &env2, &format!("{ipath}.rhs"))?;
                    if ls != rs {
                        return Err(TypeError::SortMismatch { path: ipath, expected: ls, found: rs });
                    }
                    if it.args.iter().any(|a| term_mentions_fn(a, &it.func)) {
                        return Err(TypeError::SelfArgument { name: it.func.clone(), path: format!("{path}.item{k}") });
                    }
                }
                Ok(())
            }
            Program::Ode { binder, items, domain } => {
                let env2 = extend_env(env, binder);
                for (k, it) in items.iter().enumerate() {
                    let ipath = format!("{path}.ode{k}");
                    if self.sig.is_rigid(&it.func) {
                        return Err(TypeError::RigidAssigned { name: it.func.clone(), path: ipath });
                    }
                    let ls = self.term(&Term::App(it.func.clone(), it.args.clone()), &env2, &ipath)?;
                    if ls != REAL {
                        return Err(TypeError::OdeNotReal { name: it.func.clone(), path: ipath });
                    }
                    let rs = self.term(&it.rhs, &env2, &format!("{ipath}.rhs"))?;
                    if rs != REAL {
                        return Err(TypeError::SortMismatch { path: format!("{ipath}.rhs"), expected: REAL.into(), found: rs });
                    }
                    if it.args.iter().any(|a| term_mentions_fn(a, &it.func)) {
                        return Err(TypeError::SelfArgument { name: it.func.clone(), path: ipath });
                    }
                }
                if !is_first_order(domain) {
                    return Err(TypeError::NotFirstOrder { path: format!("{path}.domain") });
                }
                self.formula(domain, &env2, &format!("{path}.domain"))
            }
            Program::VarAssign { binder, var: _, rhs } => {
                let env2 = extend_env(env, &Some(binder.clone()));
                self.term(rhs, &env2, &format!("{path}.rhs"))?;
                Ok(())
            }
            Program::New { var: _, sort } => {
                if sort == REAL || !self.sig.has_sort(sort) {
                    return Err(TypeError::UnknownSymbol { name: sort.clone(), path: path.into() });
                }
                Ok(())
            }
            Program::Test(chi) => {
                if !is_first_order(chi) {
                    return Err(TypeError::NotFirstOrder { path: path.into() });
                }
                self.formula(chi, env, &format!("{path}.test"))
            }
            Program::Choice(a, b) | Program::Seq(a, b) => {
                self.program(a, env, &format!("{path}.l"))?;
                self.program(b, env, &format!("{path}.r"))
            }
            Program::Loop(a) => self.program(a, env, &format!("{path}.loop")),
        }
    }
}

fn extend_env(env: &BTreeMap<String, String>, binder: &Option<Binder>) -> BTreeMap<String, String> {
    match binder {
        None => env.clone(),
        Some(b) => {
            let mut e = env.clone();
            e.insert(b.var.clone(), b.sort.clone());
            e
        }
    }
}

/// Tests and evolution domains must stay modality-free.
pub fn is_first_order(phi: &StateFormula) -> bool {
    match phi {
        StateFormula::True | StateFormula::False | StateFormula::Eq(..) | StateFormula::Geq(..) => true,
        StateFormula::Not(a) => is_first_order(a),
        StateFormula::And(a, b) => is_first_order(a) && is_first_order(b),
        StateFormula::Forall(_, a) | StateFormula::Exists(_, a) => is_first_order(a),
        StateFormula::Box_(..) | StateFormula::Dia(..) => false,
    }
}

/// Deterministic sort-constraint check for formulas.
pub fn well_typed_formula(phi: &StateFormula, sig: &Signature) -> Result<(), TypeError> {
    TypeCk { sig, allow_diff: false }.formula(phi, &sig.vars, "")
}

/// Variant used internally for derivative-generated formulas, where
/// differential applications are legal.
pub fn well_typed_formula_diff(phi: &StateFormula, sig: &Signature) -> Result<(), TypeError> {
    TypeCk { sig, allow_diff: true }.formula(phi, &sig.vars, "")
}

pub fn well_typed_program(p: &Program, sig: &Signature) -> Result<(), TypeError> {
    TypeCk { sig, allow_diff: false }.program(p, &sig.vars, "")
}

pub fn well_typed_term(t: &Term, sig: &Signature) -> Result<(), TypeError> {
    TypeCk { sig, allow_diff: false }.term(t, &sig.vars, "").map(|_| ())
}

// ---------------------------------------------------------------------------
// syntactic inspection helpers

pub fn term_mentions_fn(t: &Term, f: &str) -> bool {
    match t {
        Term::Var(_) | Term::Num(_) => false,
        Term::App(g, args) | Term::DiffApp(g, args) => g == f || args.iter().any(|a| term_mentions_fn(a, f)),
        Term::Cond(c, a, b) => {
            formula_fns(c).contains(f) || term_mentions_fn(a, f) || term_mentions_fn(b, f)
        }
    }
}

pub fn term_fns(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(_) | Term::Num(_) => {}
        Term::App(g, args) | Term::DiffApp(g, args) => {
            if !is_builtin_arith(g) {
                out.insert(g.clone());
            }
            for a in args {
                term_fns(a, out);
            }
        }
        Term::Cond(c, a, b) => {
            out.extend(formula_fns(c));
            term_fns(a, out);
            term_fns(b, out);
        }
    }
}

pub fn formula_fns(phi: &StateFormula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_formula_fns(phi, &mut out);
    out
}

fn collect_formula_fns(phi: &StateFormula, out: &mut BTreeSet<String>) {
    match phi {
        StateFormula::True | StateFormula::False => {}
        StateFormula::Eq(a, b) | StateFormula::Geq(a, b) => {
            term_fns(a, out);
            term_fns(b, out);
        }
        StateFormula::Not(a) => collect_formula_fns(a, out),
        StateFormula::And(a, b) => {
            collect_formula_fns(a, out);
            collect_formula_fns(b, out);
        }
        StateFormula::Forall(_, a) | StateFormula::Exists(_, a) => collect_formula_fns(a, out),
        StateFormula::Box_(p, pi) | StateFormula::Dia(p, pi) => {
            out.extend(program_fns(p));
            match pi.as_ref() {
                TraceFormula::State(f) | TraceFormula::Always(f) | TraceFormula::Eventually(f) => {
                    collect_formula_fns(f, out)
                }
            }
        }
    }
}

fn program_fns(p: &Program) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_program_fns(p, &mut out);
    out
}

fn collect_program_fns(p: &Program, out: &mut BTreeSet<String>) {
    match p {
        Program::Assign { items, .. } => {
            for it in items {
                out.insert(it.func.clone());
                for a in &it.args {
                    term_fns(a, out);
                }
                term_fns(&it.rhs, out);
            }
        }
        Program::Ode { items, domain, .. } => {
            for it in items {
                out.insert(it.func.clone());
                for a in &it.args {
                    term_fns(a, out);
                }
                term_fns(&it.rhs, out);
            }
            collect_formula_fns(domain, out);
        }
        Program::VarAssign { rhs, .. } => term_fns(rhs, out),
        Program::New { .. } => {
            out.insert(EXISTS_FN.into());
        }
        Program::Test(chi) => collect_formula_fns(chi, out),
        Program::Choice(a, b) | Program::Seq(a, b) => {
            collect_program_fns(a, out);
            collect_program_fns(b, out);
        }
        Program::Loop(a) => collect_program_fns(a, out),
    }
}

/// Function symbols (and variables, for `VarAssign`) a program may write.
pub fn bound_symbols(p: &Program) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_bound_symbols(p, &mut out);
    out
}

fn collect_bound_symbols(p: &Program, out: &mut BTreeSet<String>) {
    match p {
        Program::Assign { items, .. } => {
            for it in items {
                out.insert(it.func.clone());
            }
        }
        Program::Ode { items, .. } => {
            for it in items {
                out.insert(it.func.clone());
            }
        }
        Program::VarAssign { var, .. } => {
            out.insert(var.clone());
        }
        Program::New { var, .. } => {
            out.insert(var.clone());
            out.insert(EXISTS_FN.into());
        }
        Program::Test(_) => {}
        Program::Choice(a, b) | Program::Seq(a, b) => {
            collect_bound_symbols(a, out);
            collect_bound_symbols(b, out);
        }
        Program::Loop(a) => collect_bound_symbols(a, out),
    }
}

pub fn term_free_vars(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(v) => {
            out.insert(v.clone());
        }
        Term::Num(_) => {}
        Term::App(_, args) | Term::DiffApp(_, args) => {
            for a in args {
                term_free_vars(a, out);
            }
        }
        Term::Cond(c, a, b) => {
            out.extend(formula_free_vars(c));
            term_free_vars(a, out);
            term_free_vars(b, out);
        }
    }
}

pub fn formula_free_vars(phi: &StateFormula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_formula_free_vars(phi, &mut out);
    out
}

fn collect_formula_free_vars(phi: &StateFormula, out: &mut BTreeSet<String>) {
    match phi {
        StateFormula::True | StateFormula::False => {}
        StateFormula::Eq(a, b) | StateFormula::Geq(a, b) => {
            term_free_vars(a, out);
            term_free_vars(b, out);
        }
        StateFormula::Not(a) => collect_formula_free_vars(a, out),
        StateFormula::And(a, b) => {
            collect_formula_free_vars(a, out);
            collect_formula_free_vars(b, out);
        }
        StateFormula::Forall(b, body) | StateFormula::Exists(b, body) => {
            let mut inner = BTreeSet::new();
            collect_formula_free_vars(body, &mut inner);
            inner.remove(&b.var);
            out.extend(inner);
        }
        StateFormula::Box_(p, pi) | StateFormula::Dia(p, pi) => {
            out.extend(program_free_vars(p));
            match pi.as_ref() {
                TraceFormula::State(f) | TraceFormula::Always(f) | TraceFormula::Eventually(f) => {
                    collect_formula_free_vars(f, out)
                }
            }
        }
    }
}

pub fn program_free_vars(p: &Program) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match p {
        Program::Assign { binder, items } => {
            for it in items {
                for a in &it.args {
                    term_free_vars(a, &mut out);
                }
                term_free_vars(&it.rhs, &mut out);
            }
            if let Some(b) = binder {
                out.remove(&b.var);
            }
        }
        Program::Ode { binder, items, domain } => {
            for it in items {
                for a in &it.args {
                    term_free_vars(a, &mut out);
                }
                term_free_vars(&it.rhs, &mut out);
            }
            out.extend(formula_free_vars(domain));
            if let Some(b) = binder {
                out.remove(&b.var);
            }
        }
        Program::VarAssign { binder, var, rhs } => {
            term_free_vars(rhs, &mut out);
            out.remove(&binder.var);
            out.insert(var.clone());
        }
        Program::New { var, .. } => {
            out.insert(var.clone());
        }
        Program::Test(chi) => out.extend(formula_free_vars(chi)),
        Program::Choice(a, b) | Program::Seq(a, b) => {
            out.extend(program_free_vars(a));
            out.extend(program_free_vars(b));
        }
        Program::Loop(a) => out.extend(program_free_vars(a)),
    }
    out
}

/// Conservative syntactic injectivity: the argument vector is exactly the
/// bound variable, or neither arguments nor right-hand sides depend on it.
pub fn assign_injective(binder: &Option<Binder>, items: &[AssignItem]) -> bool {
    items_injective(binder, items.iter().map(|it| (&it.args, &it.rhs)))
}

pub fn ode_injective(binder: &Option<Binder>, items: &[OdeItem]) -> bool {
    items_injective(binder, items.iter().map(|it| (&it.args, &it.rhs)))
}

fn items_injective<'a>(
    binder: &Option<Binder>,
    items: impl Iterator<Item = (&'a Vec<Term>, &'a Term)>,
) -> bool {
    let Some(b) = binder else { return true };
    for (args, rhs) in items {
        let arg_is_i = args.len() == 1 && args[0] == Term::Var(b.var.clone());
        if arg_is_i {
            continue;
        }
        let mut fv = BTreeSet::new();
        for a in args {
            term_free_vars(a, &mut fv);
        }
        term_free_vars(rhs, &mut fv);
        if fv.contains(&b.var) {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// substitution

/// Capture-avoiding substitution of `var := theta` in a formula. Errors out
/// instead of silently rewriting when the variable occurs under a modality
/// that writes a symbol of `theta`.
pub fn substitute_formula(
    phi: &StateFormula,
    var: &str,
    theta: &Term,
) -> Result<StateFormula, SubstError> {
    let mut theta_syms = BTreeSet::new();
    term_fns(theta, &mut theta_syms);
    let mut theta_vars = BTreeSet::new();
    term_free_vars(theta, &mut theta_vars);
    subst_f(phi, var, theta, &theta_syms, &theta_vars)
}

pub fn substitute_term(t: &Term, var: &str, theta: &Term) -> Result<Term, SubstError> {
    let mut theta_syms = BTreeSet::new();
    term_fns(theta, &mut theta_syms);
    let mut theta_vars = BTreeSet::new();
    term_free_vars(theta, &mut theta_vars);
    subst_t(t, var, theta, &theta_syms, &theta_vars)
}

fn subst_t(
    t: &Term,
    var: &str,
    theta: &Term,
    syms: &BTreeSet<String>,
    tvars: &BTreeSet<String>,
) -> Result<Term, SubstError> {
    Ok(match t {
        Term::Var(v) if v == var => theta.clone(),
        Term::Var(_) | Term::Num(_) => t.clone(),
        Term::App(f, args) => Term::App(
            f.clone(),
            args.iter().map(|a| subst_t(a, var, theta, syms, tvars)).collect::<Result<_, _>>()?,
        ),
        Term::DiffApp(f, args) => Term::DiffApp(
            f.clone(),
            args.iter().map(|a| subst_t(a, var, theta, syms, tvars)).collect::<Result<_, _>>()?,
        ),
        Term::Cond(c, a, b) => Term::Cond(
            Box::new(subst_f(c, var, theta, syms, tvars)?),
            Box::new(subst_t(a, var, theta, syms, tvars)?),
            Box::new(subst_t(b, var, theta, syms, tvars)?),
        ),
    })
}

fn subst_f(
    phi: &StateFormula,
    var: &str,
    theta: &Term,
    syms: &BTreeSet<String>,
    tvars: &BTreeSet<String>,
) -> Result<StateFormula, SubstError> {
    Ok(match phi {
        StateFormula::True | StateFormula::False => phi.clone(),
        StateFormula::Eq(a, b) => {
            StateFormula::Eq(subst_t(a, var, theta, syms, tvars)?, subst_t(b, var, theta, syms, tvars)?)
        }
        StateFormula::Geq(a, b) => {
            StateFormula::Geq(subst_t(a, var, theta, syms, tvars)?, subst_t(b, var, theta, syms, tvars)?)
        }
        StateFormula::Not(a) => StateFormula::not(subst_f(a, var, theta, syms, tvars)?),
        StateFormula::And(a, b) => StateFormula::and(
            subst_f(a, var, theta, syms, tvars)?,
            subst_f(b, var, theta, syms, tvars)?,
        ),
        StateFormula::Forall(b, body) | StateFormula::Exists(b, body) => {
            let is_forall = matches!(phi, StateFormula::Forall(..));
            if b.var == var {
                return Ok(phi.clone());
            }
            let (binder, body) = if tvars.contains(&b.var) {
                // bound renaming to avoid capture
                let fresh = fresh_var(&b.var, &formula_free_vars(body), tvars);
                let renamed = subst_f(body, &b.var, &Term::Var(fresh.clone()), &BTreeSet::new(), &BTreeSet::new())?;
                (Binder { var: fresh, sort: b.sort.clone() }, renamed)
            } else {
                (b.clone(), body.as_ref().clone())
            };
            let body = subst_f(&body, var, theta, syms, tvars)?;
            if is_forall {
                StateFormula::Forall(binder, Box::new(body))
            } else {
                StateFormula::Exists(binder, Box::new(body))
            }
        }
        StateFormula::Box_(p, pi) | StateFormula::Dia(p, pi) => {
            let is_box = matches!(phi, StateFormula::Box_(..));
            let post_vars = match pi.as_ref() {
                TraceFormula::State(f) | TraceFormula::Always(f) | TraceFormula::Eventually(f) => {
                    formula_free_vars(f)
                }
            };
            let prog_vars = program_free_vars(p);
            if post_vars.contains(var) || prog_vars.contains(var) {
                let written = bound_symbols(p);
                if let Some(clash) = written.intersection(syms).next() {
                    return Err(SubstError::NotAdmissible { symbol: clash.clone() });
                }
            }
            let p2 = subst_prog(p, var, theta, syms, tvars)?;
            let pi2 = match pi.as_ref() {
                TraceFormula::State(f) => TraceFormula::State(subst_f(f, var, theta, syms, tvars)?),
                TraceFormula::Always(f) => TraceFormula::Always(subst_f(f, var, theta, syms, tvars)?),
                TraceFormula::Eventually(f) => {
                    TraceFormula::Eventually(subst_f(f, var, theta, syms, tvars)?)
                }
            };
            if is_box {
                StateFormula::Box_(Box::new(p2), Box::new(pi2))
            } else {
                StateFormula::Dia(Box::new(p2), Box::new(pi2))
            }
        }
    })
}

fn subst_prog(
    p: &Program,
    var: &str,
    theta: &Term,
    syms: &BTreeSet<String>,
    tvars: &BTreeSet<String>,
) -> Result<Program, SubstError> {
    Ok(match p {
        Program::Assign { binder, items } => {
            if binder.as_ref().map(|b| b.var == var).unwrap_or(false) {
                return Ok(p.clone());
            }
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
                                .map(|a| subst_t(a, var, theta, syms, tvars))
                                .collect::<Result<_, _>>()?,
                            primed: it.primed,
                            rhs: subst_t(&it.rhs, var, theta, syms, tvars)?,
                        })
                    })
                    .collect::<Result<_, SubstError>>()?,
            }
        }
        Program::Ode { binder, items, domain } => {
            if binder.as_ref().map(|b| b.var == var).unwrap_or(false) {
                return Ok(p.clone());
            }
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
                                .map(|a| subst_t(a, var, theta, syms, tvars))
                                .collect::<Result<_, _>>()?,
                            rhs: subst_t(&it.rhs, var, theta, syms, tvars)?,
                        })
                    })
                    .collect::<Result<_, SubstError>>()?,
                domain: Box::new(subst_f(domain, var, theta, syms, tvars)?),
            }
        }
        Program::VarAssign { binder, var: n, rhs } => {
            if binder.var == var || n == var {
                return Ok(p.clone());
            }
            Program::VarAssign {
                binder: binder.clone(),
                var: n.clone(),
                rhs: subst_t(rhs, var, theta, syms, tvars)?,
            }
        }
        Program::New { .. } => p.clone(),
        Program::Test(chi) => Program::Test(Box::new(subst_f(chi, var, theta, syms, tvars)?)),
        Program::Choice(a, b) => Program::Choice(
            Box::new(subst_prog(a, var, theta, syms, tvars)?),
            Box::new(subst_prog(b, var, theta, syms, tvars)?),
        ),
        Program::Seq(a, b) => Program::Seq(
            Box::new(subst_prog(a, var, theta, syms, tvars)?),
            Box::new(subst_prog(b, var, theta, syms, tvars)?),
        ),
        Program::Loop(a) => Program::Loop(Box::new(subst_prog(a, var, theta, syms, tvars)?)),
    })
}

pub fn fresh_var(stem: &str, avoid1: &BTreeSet<String>, avoid2: &BTreeSet<String>) -> String {
    let mut k = 1usize;
    loop {
        let cand = format!("{stem}_{k}");
        if !avoid1.contains(&cand) && !avoid2.contains(&cand) {
            return cand;
        }
        k += 1;
    }
}

// ---------------------------------------------------------------------------
// desugaring

/// Expand every conditional term at its enclosing atom:
/// `psi(if p then a else b)  ~>  (p -> psi(a)) & (!p -> psi(b))`.
/// Idempotent; rejects conditionals whose condition mentions symbols
/// written by an enclosing modality.
pub fn desugar_conditional(phi: &StateFormula) -> Result<StateFormula, DesugarError> {
    desugar_cond_inner(phi, &BTreeSet::new())
}

fn desugar_cond_inner(
    phi: &StateFormula,
    enclosing_writes: &BTreeSet<String>,
) -> Result<StateFormula, DesugarError> {
    Ok(match phi {
        StateFormula::True | StateFormula::False => phi.clone(),
        StateFormula::Eq(..) | StateFormula::Geq(..) => expand_atom(phi, enclosing_writes)?,
        StateFormula::Not(a) => StateFormula::not(desugar_cond_inner(a, enclosing_writes)?),
        StateFormula::And(a, b) => StateFormula::and(
            desugar_cond_inner(a, enclosing_writes)?,
            desugar_cond_inner(b, enclosing_writes)?,
        ),
        StateFormula::Forall(b, body) => {
            StateFormula::Forall(b.clone(), Box::new(desugar_cond_inner(body, enclosing_writes)?))
        }
        StateFormula::Exists(b, body) => {
            StateFormula::Exists(b.clone(), Box::new(desugar_cond_inner(body, enclosing_writes)?))
        }
        StateFormula::Box_(p, pi) | StateFormula::Dia(p, pi) => {
            let mut writes = enclosing_writes.clone();
            writes.extend(bound_symbols(p));
            let pi2 = match pi.as_ref() {
                TraceFormula::State(f) => TraceFormula::State(desugar_cond_inner(f, &writes)?),
                TraceFormula::Always(f) => TraceFormula::Always(desugar_cond_inner(f, &writes)?),
                TraceFormula::Eventually(f) => {
                    TraceFormula::Eventually(desugar_cond_inner(f, &writes)?)
                }
            };
            if matches!(phi, StateFormula::Box_(..)) {
                StateFormula::Box_(p.clone(), Box::new(pi2))
            } else {
                StateFormula::Dia(p.clone(), Box::new(pi2))
            }
        }
    })
}

/// Replace the first conditional in an atom and recurse until none remain.
fn expand_atom(
    atom: &StateFormula,
    enclosing_writes: &BTreeSet<String>,
) -> Result<StateFormula, DesugarError> {
    let (a, b) = match atom {
        StateFormula::Eq(a, b) | StateFormula::Geq(a, b) => (a, b),
        _ => unreachable!(),
    };
    let cond = find_cond(a).or_else(|| find_cond(b));
    let Some(cond) = cond else { return Ok(atom.clone()) };
    let (c, t1, t2) = cond;
    if let Some(clash) = formula_fns(&c).intersection(enclosing_writes).next() {
        return Err(DesugarError::ConditionalUnderModality { symbol: clash.clone() });
    }
    let then_atom = replace_cond_in_atom(atom, &c, &t1, &t2, true);
    let else_atom = replace_cond_in_atom(atom, &c, &t1, &t2, false);
    let then_atom = expand_atom(&then_atom, enclosing_writes)?;
    let else_atom = expand_atom(&else_atom, enclosing_writes)?;
    let c = desugar_cond_inner(&c, enclosing_writes)?;
    Ok(StateFormula::and(
        StateFormula::imp(c.clone(), then_atom),
        StateFormula::imp(StateFormula::not(c), else_atom),
    ))
}

fn find_cond(t: &Term) -> Option<(StateFormula, Term, Term)> {
    match t {
        Term::Var(_) | Term::Num(_) => None,
        Term::App(_, args) | Term::DiffApp(_, args) => args.iter().find_map(find_cond),
        Term::Cond(c, a, b) => Some((c.as_ref().clone(), a.as_ref().clone(), b.as_ref().clone())),
    }
}

fn replace_cond_in_atom(
    atom: &StateFormula,
    c: &StateFormula,
    t1: &Term,
    t2: &Term,
    take_then: bool,
) -> StateFormula {
    let go = |t: &Term| replace_cond_in_term(t, c, t1, t2, take_then);
    match atom {
        StateFormula::Eq(a, b) => StateFormula::Eq(go(a), go(b)),
        StateFormula::Geq(a, b) => StateFormula::Geq(go(a), go(b)),
        _ => unreachable!(),
    }
}

fn replace_cond_in_term(t: &Term, c: &StateFormula, t1: &Term, t2: &Term, take_then: bool) -> Term {
    match t {
        Term::Var(_) | Term::Num(_) => t.clone(),
        Term::App(f, args) => Term::App(
            f.clone(),
            args.iter().map(|a| replace_cond_in_term(a, c, t1, t2, take_then)).collect(),
        ),
        Term::DiffApp(f, args) => Term::DiffApp(
            f.clone(),
            args.iter().map(|a| replace_cond_in_term(a, c, t1, t2, take_then)).collect(),
        ),
        Term::Cond(cc, a, b) => {
            if cc.as_ref() == c && a.as_ref() == t1 && b.as_ref() == t2 {
                if take_then {
                    t1.clone()
                } else {
                    t2.clone()
                }
            } else {
                t.clone()
            }
        }
    }
}

/// Rewrite every `n := new A` to its committed encoding: choose any object,
/// require it not to exist yet, then mark it existing.
pub fn desugar_new(p: &Program) -> Result<Program, DesugarError> {
    Ok(match p {
        Program::New { var, sort } => {
            if sort == REAL {
                return Err(DesugarError::NewOnReal { var: var.clone() });
            }
            let pick = Program::VarAssign {
                binder: Binder { var: format!("{var}_pick"), sort: sort.clone() },
                var: var.clone(),
                rhs: Term::Var(format!("{var}_pick")),
            };
            let check = Program::Test(Box::new(StateFormula::Eq(
                Term::App(EXISTS_FN.into(), vec![Term::Var(var.clone())]),
                Term::num(0),
            )));
            let upd_var = format!("{var}_upd");
            let mark = Program::Assign {
                binder: Some(Binder { var: upd_var.clone(), sort: sort.clone() }),
                items: vec![AssignItem {
                    func: EXISTS_FN.into(),
                    args: vec![Term::Var(upd_var.clone())],
                    primed: false,
                    rhs: Term::Cond(
                        Box::new(StateFormula::Eq(Term::Var(upd_var), Term::Var(var.clone()))),
                        Box::new(Term::num(1)),
                        Box::new(Term::App(
                            EXISTS_FN.into(),
                            vec![Term::Var(format!("{var}_upd"))],
                        )),
                    ),
                }],
            };
            Program::Seq(
                Box::new(pick),
                Box::new(Program::Seq(Box::new(check), Box::new(mark))),
            )
        }
        Program::Assign { .. } | Program::Ode { .. } | Program::VarAssign { .. } | Program::Test(_) => {
            p.clone()
        }
        Program::Choice(a, b) => {
            Program::Choice(Box::new(desugar_new(a)?), Box::new(desugar_new(b)?))
        }
        Program::Seq(a, b) => Program::Seq(Box::new(desugar_new(a)?), Box::new(desugar_new(b)?)),
        Program::Loop(a) => Program::Loop(Box::new(desugar_new(a)?)),
    })
}

/// Number of conditional terms in a formula; zero after desugaring.
pub fn conditional_count(phi: &StateFormula) -> usize {
    fn in_term(t: &Term) -> usize {
        match t {
            Term::Var(_) | Term::Num(_) => 0,
            Term::App(_, args) | Term::DiffApp(_, args) => args.iter().map(in_term).sum(),
            Term::Cond(c, a, b) => 1 + conditional_count(c) + in_term(a) + in_term(b),
        }
    }
    match phi {
        StateFormula::True | StateFormula::False => 0,
        StateFormula::Eq(a, b) | StateFormula::Geq(a, b) => in_term(a) + in_term(b),
        StateFormula::Not(a) => conditional_count(a),
        StateFormula::And(a, b) => conditional_count(a) + conditional_count(b),
        StateFormula::Forall(_, a) | StateFormula::Exists(_, a) => conditional_count(a),
        StateFormula::Box_(_, pi) | StateFormula::Dia(_, pi) => match pi.as_ref() {
            TraceFormula::State(f) | TraceFormula::Always(f) | TraceFormula::Eventually(f) => {
                conditional_count(f)
            }
        },
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::printer::print_term(self))
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::printer::print_formula(self))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::printer::print_program(self))
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::printer::print_sequent(self))
    }
}

/// Zero is the only rational whose numerator is zero; convenience used all
/// over the arithmetic modules.
pub fn rat_is_zero(r: &Rat) -> bool {
    r.numer().is_zero()
}
