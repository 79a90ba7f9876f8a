//! Command-line front end: proof checking, random falsification, and plain
//! parsing, with text or JSON reports.

use crate::arith::solver::SolverCfg;
use crate::calculus::check::{check, render_tree, Outcome, Verdict};
use crate::calculus::rules::{catalog_hash, ProofCtx};
use crate::parser::{parse_scripts, parse_theory, ParseError, Theory};
use crate::sim::falsify::{falsify, FalsifyCfg};
use crate::sim::run::SimCfg;
use clap::{Parser, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OPEN: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_COUNTEREXAMPLE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Replay proof scripts against their conjectures.
    Check,
    /// Search for a counterexample by random simulation.
    Falsify,
    /// Parse the inputs and report success.
    ParseOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "qdtl", version, about = "Proof checker and falsifier for a quantified differential temporal dynamic logic")]
struct Args {
    /// Theory file (.qdtl).
    theory: PathBuf,
    /// Proof script file (.qpf); required in check mode.
    script: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Check)]
    mode: Mode,
    /// Conjecture to falsify (falsify mode).
    #[arg(long)]
    conjecture: Option<String>,
    /// Only replay the named proof (check mode).
    #[arg(long)]
    proof: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// RK4 integration step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Loop unrolling bound for the simulator.
    #[arg(long, default_value_t = 3)]
    loop_bound: usize,
    /// Random initial states per falsification run.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// External arithmetic solver command (default: $QDTL_SOLVER).
    #[arg(long)]
    solver: Option<String>,
    /// External solver timeout.
    #[arg(long, default_value_t = 5000)]
    timeout_ms: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Parallelism degree (1 = sequential).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Serialize)]
struct CheckReport {
    catalog: String,
    results: Vec<ProofResult>,
}

#[derive(Serialize)]
struct ProofResult {
    proof: String,
    conjecture: String,
    verdict: Verdict,
    applications: usize,
    open_goals: Vec<crate::calculus::check::OpenGoal>,
    oracle: OracleReport,
}

#[derive(Serialize)]
struct OracleReport {
    identity: usize,
    sign_cone: usize,
    linear_fm: usize,
    external: usize,
    unknown: usize,
}

#[derive(Serialize)]
struct FalsifyReport {
    catalog: String,
    conjecture: String,
    seed: u64,
    samples: usize,
    counterexample: Option<crate::sim::falsify::Counterexample>,
}

pub fn run() -> i32 {
    let args = Args::parse();
    match run_args(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn parse_err(path: &PathBuf, e: &ParseError) -> String {
    format!("{}:{}:{}: {}", path.display(), e.line, e.col, e.msg)
}

fn run_args(args: &Args) -> Result<i32, String> {
    let theory_src = std::fs::read_to_string(&args.theory)
        .map_err(|e| format!("{}: {e}", args.theory.display()))?;
    let theory = parse_theory(&theory_src).map_err(|e| parse_err(&args.theory, &e))?;
    let scripts = match &args.script {
        Some(path) => {
            let src = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            parse_scripts(&src, &theory).map_err(|e| parse_err(path, &e))?
        }
        None => Vec::new(),
    };
    match args.mode {
        Mode::ParseOnly => {
            if args.format == Format::Text {
                println!(
                    "parsed {} conjecture(s), {} proof script(s)",
                    theory.conjectures.len(),
                    scripts.len()
                );
            } else {
                println!(
                    "{}",
                    serde_json::json!({
                        "catalog": catalog_hash(),
                        "conjectures": theory.conjectures.iter().map(|(n, _)| n).collect::<Vec<_>>(),
                        "proofs": scripts.iter().map(|s| &s.name).collect::<Vec<_>>(),
                    })
                );
            }
            Ok(EXIT_OK)
        }
        Mode::Check => cmd_check(args, &theory, scripts),
        Mode::Falsify => cmd_falsify(args, &theory),
    }
}

fn solver_cfg(args: &Args) -> Option<SolverCfg> {
    let cmd = args.solver.clone().or_else(|| std::env::var("QDTL_SOLVER").ok())?;
    Some(SolverCfg { cmd, timeout_ms: args.timeout_ms, cache_dir: None })
}

fn cmd_check(args: &Args, theory: &Theory, scripts: Vec<crate::parser::Script>) -> Result<i32, String> {
    if args.script.is_none() {
        return Err("check mode needs a proof script file".into());
    }
    let selected: Vec<_> = match &args.proof {
        Some(name) => {
            let s = scripts
                .into_iter()
                .find(|s| &s.name == name)
                .ok_or_else(|| format!("no proof named `{name}` in the script file"))?;
            vec![s]
        }
        None => scripts,
    };
    if selected.is_empty() {
        return Err("the script file contains no proofs".into());
    }
    let mut results = Vec::new();
    let mut trees: Vec<(String, Outcome)> = Vec::new();
    for script in &selected {
        let phi = theory
            .conjecture(&script.conjecture)
            .ok_or_else(|| format!("proof `{}` is for unknown conjecture `{}`", script.name, script.conjecture))?;
        let mut ctx = ProofCtx::new(theory.sig.clone(), solver_cfg(args));
        let outcome = check(&mut ctx, phi, &script.steps)
            .map_err(|e| format!("proof `{}`: {e}", script.name))?;
        results.push(ProofResult {
            proof: script.name.clone(),
            conjecture: script.conjecture.clone(),
            verdict: outcome.verdict,
            applications: outcome.applications,
            open_goals: outcome.open_goals.clone(),
            oracle: OracleReport {
                identity: outcome.oracle_stats.identity,
                sign_cone: outcome.oracle_stats.sign_cone,
                linear_fm: outcome.oracle_stats.linear_fm,
                external: outcome.oracle_stats.external,
                unknown: outcome.oracle_stats.unknown,
            },
        });
        trees.push((script.name.clone(), outcome));
    }
    let all_proved = results.iter().all(|r| r.verdict == Verdict::Proved);
    match args.format {
        Format::Json => {
            let report = CheckReport { catalog: catalog_hash(), results };
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
        }
        Format::Text => {
            println!("catalog {}", catalog_hash());
            for (name, outcome) in &trees {
                let verdict = match outcome.verdict {
                    Verdict::Proved => "proved",
                    Verdict::Open => "open",
                };
                println!(
                    "proof {name}: {verdict} ({} rule applications)",
                    outcome.applications
                );
                print!("{}", render_tree(&outcome.tree));
                for og in &outcome.open_goals {
                    println!("open goal: {}", og.sequent);
                    if let Some(d) = &og.diagnostic {
                        println!("  diagnostic: {d}");
                    }
                    if !og.suggestions.is_empty() {
                        println!("  applicable rules: {}", og.suggestions.join(", "));
                    }
                }
            }
        }
    }
    Ok(if all_proved { EXIT_OK } else { EXIT_OPEN })
}

fn cmd_falsify(args: &Args, theory: &Theory) -> Result<i32, String> {
    let name = args
        .conjecture
        .as_ref()
        .ok_or_else(|| "falsify mode needs --conjecture".to_string())?;
    let phi = theory
        .conjecture(name)
        .ok_or_else(|| format!("no conjecture named `{name}`"))?;
    if args.step <= 0.0 || !args.step.is_finite() {
        return Err("--step must be positive and finite".into());
    }
    if args.samples == 0 {
        return Err("--samples must be positive".into());
    }
    let cfg = FalsifyCfg {
        samples: args.samples,
        seed: args.seed,
        jobs: args.jobs,
        sim: SimCfg { step: args.step, loop_bound: args.loop_bound, ..SimCfg::default() },
    };
    let cx = falsify(&theory.sig, phi, &cfg).map_err(|e| format!("simulation failed: {e:?}"))?;
    let found = cx.is_some();
    match args.format {
        Format::Json => {
            let report = FalsifyReport {
                catalog: catalog_hash(),
                conjecture: name.clone(),
                seed: args.seed,
                samples: args.samples,
                counterexample: cx,
            };
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
        }
        Format::Text => match &cx {
            None => println!("no counterexample in {} samples (seed {})", args.samples, args.seed),
            Some(c) => {
                println!("counterexample at sample {} (seed {})", c.sample_index, c.seed);
                println!("{}", serde_json::to_string_pretty(c).map_err(|e| e.to_string())?);
            }
        },
    }
    Ok(if found { EXIT_COUNTEREXAMPLE } else { EXIT_OK })
}
