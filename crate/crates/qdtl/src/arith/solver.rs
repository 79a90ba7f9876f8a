//! SMT-LIB 2 export for constraint systems, external solver invocation, and
//! a content-addressed verdict cache so repeated runs never re-query.

use super::decide::{Constraint, Rel};
use super::poly::Polynomial;
use crate::syntax::Term;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

#[derive(Clone, Debug)]
pub struct SolverCfg {
    /// Command invoked as `cmd <file.smt2>`.
    pub cmd: String,
    pub timeout_ms: u64,
    /// Directory holding cached verdicts keyed by query hash; `None`
    /// disables caching.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat,
    Unsat,
    Unknown(String),
}

/// Render a satisfiability query for the conjunction of the constraints,
/// atoms declared as free real constants.
pub fn to_smt(cons: &[Constraint]) -> String {
    let mut atoms: Vec<Term> = Vec::new();
    for c in cons {
        for a in c.poly.atoms() {
            if !atoms.contains(&a) {
                atoms.push(a);
            }
        }
    }
    atoms.sort();
    let names: BTreeMap<Term, String> =
        atoms.iter().enumerate().map(|(k, a)| (a.clone(), format!("a{k}"))).collect();
    let mut out = String::from("(set-logic QF_NRA)\n");
    for a in &atoms {
        out += &format!("(declare-const {} Real)\n", names[a]);
    }
    for c in cons {
        let p = smt_poly(&c.poly, &names);
        let assert = match c.rel {
            Rel::Eq => format!("(= {p} 0)"),
            Rel::Geq => format!("(>= {p} 0)"),
            Rel::Gt => format!("(> {p} 0)"),
            Rel::Neq => format!("(not (= {p} 0))"),
        };
        out += &format!("(assert {assert})\n");
    }
    out += "(check-sat)\n";
    out
}

fn smt_poly(p: &Polynomial, names: &BTreeMap<Term, String>) -> String {
    if p.terms.is_empty() {
        return "0".into();
    }
    let monos: Vec<String> = p
        .terms
        .iter()
        .map(|(m, c)| {
            let mut factors = vec![smt_rat(c)];
            for (a, e) in &m.0 {
                for _ in 0..*e {
                    factors.push(names[a].clone());
                }
            }
            if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                format!("(* {})", factors.join(" "))
            }
        })
        .collect();
    if monos.len() == 1 {
        monos.into_iter().next().unwrap()
    } else {
        format!("(+ {})", monos.join(" "))
    }
}

fn smt_rat(r: &crate::syntax::Rat) -> String {
    let (n, d) = (r.numer(), r.denom());
    let core = if d == &num::BigInt::from(1) {
        format!("{}", n.magnitude())
    } else {
        format!("(/ {} {})", n.magnitude(), d)
    };
    if n.sign() == num::bigint::Sign::Minus {
        format!("(- {core})")
    } else {
        core
    }
}

/// Check satisfiability of the conjunction via the configured external
/// solver, consulting the cache first.
pub fn query_solver(cfg: &SolverCfg, cons: &[Constraint]) -> SolverAnswer {
    let query = to_smt(cons);
    let key = {
        let mut h = Sha256::new();
        h.update(query.as_bytes());
        format!("{:x}", h.finalize())
    };
    if let Some(dir) = &cfg.cache_dir {
        let path = dir.join(format!("{key}.verdict"));
        if let Ok(text) = std::fs::read_to_string(&path) {
            match text.trim() {
                "sat" => return SolverAnswer::Sat,
                "unsat" => return SolverAnswer::Unsat,
                _ => {}
            }
        }
    }
    let answer = run_solver(cfg, &query);
    if let (Some(dir), SolverAnswer::Sat | SolverAnswer::Unsat) = (&cfg.cache_dir, &answer) {
        let _ = std::fs::create_dir_all(dir);
        let word = if answer == SolverAnswer::Sat { "sat" } else { "unsat" };
        let _ = std::fs::write(dir.join(format!("{key}.verdict")), word);
    }
    answer
}

fn run_solver(cfg: &SolverCfg, query: &str) -> SolverAnswer {
    let dir = std::env::temp_dir();
    let file = dir.join(format!("qdtl-query-{}.smt2", std::process::id()));
    if let Err(e) = std::fs::File::create(&file).and_then(|mut f| f.write_all(query.as_bytes())) {
        return SolverAnswer::Unknown(format!("cannot write query file: {e}"));
    }
    let mut parts = cfg.cmd.split_whitespace();
    let Some(bin) = parts.next() else {
        return SolverAnswer::Unknown("empty solver command".into());
    };
    let child = Command::new(bin)
        .args(parts)
        .arg(&file)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn();
    let mut child = match child {
        Ok(c) => c,
        Err(e) => return SolverAnswer::Unknown(format!("cannot start solver: {e}")),
    };
    let deadline = std::time::Instant::now() + Duration::from_millis(cfg.timeout_ms);
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) => {
                if std::time::Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    let _ = std::fs::remove_file(&file);
                    return SolverAnswer::Unknown("solver timeout".into());
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => {
                let _ = std::fs::remove_file(&file);
                return SolverAnswer::Unknown(format!("solver wait failed: {e}"));
            }
        }
    }
    let mut out = String::new();
    if let Some(mut stdout) = child.stdout.take() {
        use std::io::Read;
        let _ = stdout.read_to_string(&mut out);
    }
    let _ = std::fs::remove_file(&file);
    match out.split_whitespace().next() {
        Some("sat") => SolverAnswer::Sat,
        Some("unsat") => SolverAnswer::Unsat,
        Some(word) => SolverAnswer::Unknown(format!("solver answered `{word}`")),
        None => SolverAnswer::Unknown("solver produced no output".into()),
    }
}
