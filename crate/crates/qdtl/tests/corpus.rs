//! Replay every proof script in the bundled corpus and compare the outcome
//! with the manifest's expectation.

use qdtl::calculus::check::{check, Verdict};
use qdtl::calculus::rules::ProofCtx;
use qdtl::corpus::{corpus_dir, load_manifest, Expected};
use qdtl::parser::{parse_scripts, parse_theory};
use qdtl::sim::falsify::{falsify, FalsifyCfg};
use std::time::Instant;

#[test]
fn corpus_matches_manifest() {
    let dir = corpus_dir();
    let manifest = load_manifest(&dir).expect("manifest");
    for entry in &manifest.entries {
        let theory_src = std::fs::read_to_string(dir.join(&entry.theory)).unwrap();
        let theory = parse_theory(&theory_src)
            .unwrap_or_else(|e| panic!("{}: {e}", entry.theory));
        let phi = theory
            .conjecture(&entry.conjecture)
            .unwrap_or_else(|| panic!("{}: no conjecture {}", entry.name, entry.conjecture));
        match entry.expected {
            Expected::Proved | Expected::Open => {
                let scripts_file = entry.scripts.as_ref().expect("scripts file");
                let scripts_src = std::fs::read_to_string(dir.join(scripts_file)).unwrap();
                let scripts = parse_scripts(&scripts_src, &theory)
                    .unwrap_or_else(|e| panic!("{scripts_file}: {e}"));
                let proof_name = entry.proof.as_ref().expect("proof name");
                let script = scripts
                    .iter()
                    .find(|s| &s.name == proof_name)
                    .unwrap_or_else(|| panic!("{scripts_file}: no proof {proof_name}"));
                assert_eq!(script.conjecture, entry.conjecture, "{}", entry.name);
                let mut ctx = ProofCtx::new(theory.sig.clone(), None);
                let start = Instant::now();
                let outcome = check(&mut ctx, phi, &script.steps)
                    .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
                let elapsed = start.elapsed().as_millis() as u64;
                assert!(
                    elapsed <= entry.budget_ms,
                    "{}: took {elapsed}ms, budget {}ms",
                    entry.name,
                    entry.budget_ms
                );
                let want = match entry.expected {
                    Expected::Proved => Verdict::Proved,
                    _ => Verdict::Open,
                };
                assert_eq!(
                    outcome.verdict, want,
                    "{}: open goals: {:#?}",
                    entry.name, outcome.open_goals
                );
            }
            Expected::Counterexample => {
                let cfg = FalsifyCfg { samples: 100, ..FalsifyCfg::default() };
                let cx = falsify(&theory.sig, phi, &cfg)
                    .unwrap_or_else(|e| panic!("{}: {e:?}", entry.name));
                assert!(cx.is_some(), "{}: expected a counterexample", entry.name);
            }
        }
    }
}
