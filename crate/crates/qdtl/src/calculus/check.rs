//! Proof script replay: apply each step to the current goal, following
//! explicit premise blocks when the script branches and the step order
//! depth-first when it does not.  Goals the oracle cannot close stay open
//! with a diagnostic; replay continues on the remaining goals.

use crate::calculus::oracle::OracleStats;
use crate::calculus::rules::{apply_rule, nearest_rule, rule_exists, Applied, ProofCtx};
use crate::calculus::tactic::{auto_step, suggestions};
use crate::parser::Step;
use crate::syntax::{Sequent, StateFormula};

pub const DEFAULT_AUTO_BUDGET: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Proved,
    Open,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct OpenGoal {
    pub sequent: String,
    pub diagnostic: Option<String>,
    pub suggestions: Vec<String>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ProofNode {
    pub rule: String,
    pub goal: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed: Option<String>,
    pub open: bool,
    pub children: Vec<ProofNode>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub applications: usize,
    pub open_goals: Vec<OpenGoal>,
    pub oracle_stats: OracleStats,
    pub tree: ProofNode,
}

struct Replay<'a> {
    ctx: &'a mut ProofCtx,
    applications: usize,
    open_goals: Vec<OpenGoal>,
    auto_budget: usize,
}

fn err_at(step: &Step, msg: &str) -> String {
    format!("line {}, col {}: {}", step.span.line, step.span.col, msg)
}

impl<'a> Replay<'a> {
    fn open(&mut self, goal: &Sequent, diagnostic: Option<String>, rule: &str) -> ProofNode {
        self.open_goals.push(OpenGoal {
            sequent: goal.to_string(),
            diagnostic,
            suggestions: suggestions(self.ctx, goal),
        });
        ProofNode {
            rule: rule.to_string(),
            goal: goal.to_string(),
            closed: None,
            open: true,
            children: Vec::new(),
        }
    }

    fn run<'s>(
        &mut self,
        goal: &Sequent,
        steps: &'s [Step],
    ) -> Result<(ProofNode, &'s [Step]), String> {
        let Some(step) = steps.first() else {
            return Ok((self.open(goal, None, "(no step)"), steps));
        };
        let rest = &steps[1..];
        if step.rule == "auto" {
            if let Some(children) = &step.children {
                if !children.is_empty() {
                    return Err(err_at(step, "auto takes no premise blocks"));
                }
            }
            let node = self.auto(goal);
            return Ok((node, rest));
        }
        if !rule_exists(&step.rule) {
            return Err(err_at(
                step,
                &format!(
                    "unknown rule '{}'; nearest catalog rule is '{}'",
                    step.rule,
                    nearest_rule(&step.rule)
                ),
            ));
        }
        let applied =
            apply_rule(self.ctx, goal, step).map_err(|e| err_at(step, &e))?;
        self.applications += 1;
        match applied {
            Applied::Closed(label) => {
                if step.children.as_ref().is_some_and(|c| !c.is_empty()) {
                    return Err(err_at(step, "closing rule takes no premise blocks"));
                }
                Ok((
                    ProofNode {
                        rule: step.rule.clone(),
                        goal: goal.to_string(),
                        closed: Some(label),
                        open: false,
                        children: Vec::new(),
                    },
                    rest,
                ))
            }
            Applied::OpenOracle(diag) => Ok((self.open(goal, Some(diag), &step.rule), rest)),
            Applied::Premises(premises) => {
                let mut children = Vec::new();
                let mut cursor = rest;
                match &step.children {
                    Some(blocks) => {
                        if blocks.len() != premises.len() {
                            return Err(err_at(
                                step,
                                &format!(
                                    "rule {} produces {} premise(s) but the script \
                                     provides {} block(s)",
                                    step.rule,
                                    premises.len(),
                                    blocks.len()
                                ),
                            ));
                        }
                        for (premise, block) in premises.iter().zip(blocks) {
                            let (node, leftover) = self.run(premise, block)?;
                            if let Some(extra) = leftover.first() {
                                return Err(err_at(
                                    extra,
                                    "unused steps after the premise is handled",
                                ));
                            }
                            children.push(node);
                        }
                    }
                    None => {
                        for premise in &premises {
                            let (node, leftover) = self.run(premise, cursor)?;
                            cursor = leftover;
                            children.push(node);
                        }
                    }
                }
                Ok((
                    ProofNode {
                        rule: step.rule.clone(),
                        goal: goal.to_string(),
                        closed: None,
                        open: false,
                        children,
                    },
                    cursor,
                ))
            }
        }
    }

    fn auto(&mut self, goal: &Sequent) -> ProofNode {
        if self.auto_budget == 0 {
            return self.open(goal, Some("auto: step budget exhausted".into()), "auto");
        }
        self.auto_budget -= 1;
        match auto_step(self.ctx, goal) {
            None => self.open(goal, Some("auto: no safe rule applies".into()), "auto"),
            Some((rule, applied)) => {
                self.applications += 1;
                match applied {
                    Applied::Closed(label) => ProofNode {
                        rule: rule.to_string(),
                        goal: goal.to_string(),
                        closed: Some(label),
                        open: false,
                        children: Vec::new(),
                    },
                    Applied::OpenOracle(diag) => self.open(goal, Some(diag), rule),
                    Applied::Premises(premises) => {
                        let children =
                            premises.iter().map(|p| self.auto(p)).collect();
                        ProofNode {
                            rule: rule.to_string(),
                            goal: goal.to_string(),
                            closed: None,
                            open: false,
                            children,
                        }
                    }
                }
            }
        }
    }
}

/// Replay a proof script against a conjecture.
pub fn check(
    ctx: &mut ProofCtx,
    conjecture: &StateFormula,
    steps: &[Step],
) -> Result<Outcome, String> {
    check_with_budget(ctx, conjecture, steps, DEFAULT_AUTO_BUDGET)
}

pub fn check_with_budget(
    ctx: &mut ProofCtx,
    conjecture: &StateFormula,
    steps: &[Step],
    auto_budget: usize,
) -> Result<Outcome, String> {
    let root = Sequent::new(Vec::new(), vec![conjecture.clone()]);
    let mut replay =
        Replay { ctx, applications: 0, open_goals: Vec::new(), auto_budget };
    let (tree, leftover) = replay.run(&root, steps)?;
    if let Some(extra) = leftover.first() {
        return Err(err_at(extra, "steps remain after the proof tree is complete"));
    }
    let verdict = if replay.open_goals.is_empty() { Verdict::Proved } else { Verdict::Open };
    Ok(Outcome {
        verdict,
        applications: replay.applications,
        open_goals: replay.open_goals,
        oracle_stats: replay.ctx.oracle.stats.clone(),
        tree,
    })
}

/// Render the proof tree as an indented text listing.
pub fn render_tree(node: &ProofNode) -> String {
    let mut out = String::new();
    fn go(n: &ProofNode, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let status = if let Some(label) = &n.closed {
            format!("closed by {label}")
        } else if n.open {
            "OPEN".to_string()
        } else {
            n.rule.clone()
        };
        out.push_str(&format!("{pad}{status}  {}\n", n.goal));
        for c in &n.children {
            go(c, depth + 1, out);
        }
    }
    go(node, 0, &mut out);
    out
}
