//! Concept hierarchy, rewrite rules and the summarization fixpoint.
//!
//! A rule's left-hand side is a small pattern graph. When it embeds in a
//! CDG, the matched nodes (except those marked `keep`) are folded into one
//! new node named by the right-hand side. Rules are tried by descending
//! priority, then by id; among the embeddings of a rule the one with the
//! lexicographically least sorted node-id list wins.

mod collapse;
mod pattern;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdg::{Cdg, CdgDelta, NodeId};
use crate::frontend::ExecKind;
use crate::term::Term;

pub use pattern::{find_least_match, RuleMatch};

pub const RULE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SummarizerError {
    #[error("malformed rule document at line {line}, column {column}: {message}")]
    MalformedDocument { line: usize, column: usize, message: String },
    #[error("unsupported rule schema version {0}")]
    SchemaVersionMismatch(u32),
    #[error("rule `{rule_id}` is invalid: {reason}")]
    RuleSetInvalid { rule_id: String, reason: String },
    #[error("summarization exceeded its iteration bound of {0}")]
    GuardExceeded(usize),
}

/// Ranks of concept names and which concepts each can compose into.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConceptHierarchy {
    pub ranks: BTreeMap<String, u32>,
    pub parents: BTreeMap<String, BTreeSet<String>>,
}

impl ConceptHierarchy {
    /// Base statement kinds and `declaration`, all at rank 0.
    pub fn base() -> Self {
        let mut ranks: BTreeMap<String, u32> = ExecKind::ALL.iter().map(|k| (k.name().to_string(), 0)).collect();
        ranks.insert("declaration".into(), 0);
        ConceptHierarchy { ranks, parents: BTreeMap::new() }
    }

    pub fn rank(&self, name: &str) -> Option<u32> {
        self.ranks.get(name).copied()
    }

    pub fn max_rank(&self) -> u32 {
        self.ranks.values().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternNode {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub params: Vec<Term>,
    /// Context node: must be present but is not folded into the result.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub keep: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub any_order: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulePattern {
    pub nodes: Vec<PatternNode>,
    #[serde(default)]
    pub prec: Vec<(String, String)>,
    /// `[child, parent]`: the child's direct container is the parent.
    #[serde(default)]
    pub membership: Vec<(String, String)>,
    /// Variables and meta-variables that must bind to pairwise distinct terms.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distinct: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleRhs {
    pub name: String,
    #[serde(default)]
    pub params: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptRule {
    pub rule_id: String,
    #[serde(default)]
    pub priority: i64,
    pub lhs: RulePattern,
    pub rhs: RuleRhs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDocument {
    version: u32,
    #[serde(default)]
    hierarchy: BTreeMap<String, u32>,
    #[serde(default)]
    rules: Vec<ConceptRule>,
}

/// A validated hierarchy and its rules, kept in application order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleSet {
    pub hierarchy: ConceptHierarchy,
    pub rules: Vec<ConceptRule>,
}

fn invalid(rule_id: &str, reason: impl Into<String>) -> SummarizerError {
    SummarizerError::RuleSetInvalid { rule_id: rule_id.to_string(), reason: reason.into() }
}

impl RuleSet {
    /// Build a rule set from explicit ranks (merged over the base kinds) and
    /// rules, validating every rule.
    pub fn new(ranks: BTreeMap<String, u32>, rules: Vec<ConceptRule>) -> Result<RuleSet, SummarizerError> {
        let mut hierarchy = ConceptHierarchy::base();
        for (name, rank) in ranks {
            if hierarchy.rank(&name).is_some_and(|r| r != rank) {
                return Err(invalid("", format!("base concept `{name}` must have rank 0")));
            }
            hierarchy.ranks.insert(name, rank);
        }
        let mut seen = BTreeSet::new();
        let mut rules = rules;
        for r in &mut rules {
            if !seen.insert(r.rule_id.clone()) {
                return Err(invalid(&r.rule_id, "duplicate rule id"));
            }
            for n in &mut r.lhs.nodes {
                n.params = n.params.iter().map(Term::normalize).collect();
            }
            r.rhs.params = r.rhs.params.iter().map(Term::normalize).collect();
            validate_rule(r, &hierarchy)?;
            for n in &r.lhs.nodes {
                hierarchy.parents.entry(n.name.clone()).or_default().insert(r.rhs.name.clone());
            }
        }
        rules.sort_by(|a, b| b.priority.cmp(&a.priority).then_with(|| a.rule_id.cmp(&b.rule_id)));
        Ok(RuleSet { hierarchy, rules })
    }

    /// Ranks as written in a rule file: everything except the implicit
    /// rank-0 base kinds.
    pub fn declared_ranks(&self) -> BTreeMap<String, u32> {
        let base = ConceptHierarchy::base();
        self.hierarchy.ranks.iter().filter(|(n, _)| base.rank(n).is_none()).map(|(n, r)| (n.clone(), *r)).collect()
    }

    pub fn rule(&self, id: &str) -> Option<&ConceptRule> {
        self.rules.iter().find(|r| r.rule_id == id)
    }

    /// Add one more rule, keeping application order.
    pub fn with_rule(&self, rule: ConceptRule) -> Result<RuleSet, SummarizerError> {
        let mut rules = self.rules.clone();
        rules.push(rule);
        RuleSet::new(self.declared_ranks(), rules)
    }
}

fn validate_rule(r: &ConceptRule, h: &ConceptHierarchy) -> Result<(), SummarizerError> {
    let id = r.rule_id.as_str();
    if id.is_empty() {
        return Err(invalid(id, "empty rule id"));
    }
    let mut ids = BTreeSet::new();
    for n in &r.lhs.nodes {
        if !ids.insert(n.id.as_str()) {
            return Err(invalid(id, format!("duplicate pattern node `{}`", n.id)));
        }
        if h.rank(&n.name).is_none() {
            return Err(invalid(id, format!("unknown concept `{}`", n.name)));
        }
        if n.any_order && n.params.len() > 4 {
            return Err(invalid(id, "any_order supports at most four parameters"));
        }
    }
    for (a, b) in r.lhs.prec.iter().chain(&r.lhs.membership) {
        for x in [a, b] {
            if !ids.contains(x.as_str()) {
                return Err(invalid(id, format!("edge names unknown pattern node `{x}`")));
            }
        }
        if a == b {
            return Err(invalid(id, format!("pattern node `{a}` is related to itself")));
        }
    }
    let consumed: Vec<&PatternNode> = r.lhs.nodes.iter().filter(|n| !n.keep).collect();
    if consumed.is_empty() {
        return Err(invalid(id, "every pattern node is marked keep"));
    }
    let Some(rhs_rank) = h.rank(&r.rhs.name) else {
        return Err(invalid(id, format!("unknown concept `{}`", r.rhs.name)));
    };
    let lhs_max = consumed.iter().filter_map(|n| h.rank(&n.name)).max().unwrap_or(0);
    if rhs_rank <= lhs_max {
        return Err(invalid(
            id,
            format!("rank of `{}` ({rhs_rank}) does not exceed the consumed ranks ({lhs_max})", r.rhs.name),
        ));
    }
    let mut vars = BTreeSet::new();
    let mut metas = BTreeSet::new();
    for t in r.lhs.nodes.iter().flat_map(|n| &n.params) {
        vars.extend(t.variables());
        metas.extend(t.metas());
    }
    for t in r.rhs.params.iter().chain(&r.lhs.distinct) {
        if let Some(v) = t.variables().into_iter().find(|v| !vars.contains(v)) {
            return Err(invalid(id, format!("variable `{v}` is not bound by the left-hand side")));
        }
        if let Some(m) = t.metas().into_iter().find(|m| !metas.contains(m)) {
            return Err(invalid(id, format!("meta-variable `?{m}` is not bound by the left-hand side")));
        }
    }
    for t in &r.lhs.distinct {
        if !matches!(t, Term::Var(_) | Term::Meta(_)) {
            return Err(invalid(id, format!("distinct entry `{t}` is not a variable")));
        }
    }
    Ok(())
}

pub fn load_rules(text: &str) -> Result<RuleSet, SummarizerError> {
    let doc: RuleDocument = serde_json::from_str(text).map_err(|e| SummarizerError::MalformedDocument {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.version != RULE_SCHEMA_VERSION {
        return Err(SummarizerError::SchemaVersionMismatch(doc.version));
    }
    RuleSet::new(doc.hierarchy, doc.rules)
}

pub fn save_rules(rules: &RuleSet) -> String {
    let doc =
        RuleDocument { version: RULE_SCHEMA_VERSION, hierarchy: rules.declared_ranks(), rules: rules.rules.clone() };
    serde_json::to_string_pretty(&doc).expect("rule documents always serialize")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub rule_id: String,
    pub matched: Vec<NodeId>,
    pub delta: CdgDelta,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SummarizationTrace {
    pub steps: Vec<TraceStep>,
}

impl SummarizationTrace {
    pub fn replay(&self, base: &Cdg) -> Cdg {
        self.steps.iter().fold(base.clone(), |g, s| g.apply_delta(&s.delta))
    }
}

/// Termination measure: sum over active nodes of `max_rank + 1 - level`.
pub fn measure(g: &Cdg, h: &ConceptHierarchy) -> u64 {
    let top = u64::from(h.max_rank().max(g.nodes.values().map(|n| n.level).max().unwrap_or(0))) + 1;
    g.active_nodes().map(|n| top - u64::from(n.level).min(top)).sum()
}

/// Apply `rule` at its least embedding in `g`, if any.
pub fn apply_rule_once(g: &Cdg, rule: &ConceptRule, h: &ConceptHierarchy) -> Option<(Cdg, CdgDelta)> {
    let m = find_least_match(g, rule)?;
    let level = h.rank(&rule.rhs.name)?;
    Some(collapse::collapse(g, rule, &m, level))
}

/// Rewrite `g` until no rule applies.
pub fn summarize_lfp(g: &Cdg, rules: &RuleSet) -> Result<(Cdg, SummarizationTrace), SummarizerError> {
    let h = &rules.hierarchy;
    for r in &rules.rules {
        validate_rule(r, h)?;
    }
    let guard = (g.len() + 1) * (h.max_rank() as usize + 1);
    let mut cur = g.clone();
    let mut trace = SummarizationTrace::default();
    'outer: loop {
        for rule in &rules.rules {
            if let Some(m) = find_least_match(&cur, rule) {
                if trace.steps.len() >= guard {
                    return Err(SummarizerError::GuardExceeded(guard));
                }
                let level = h.rank(&rule.rhs.name).unwrap_or(0);
                let (next, delta) = collapse::collapse(&cur, rule, &m, level);
                trace.steps.push(TraceStep { rule_id: rule.rule_id.clone(), matched: m.sorted_ids(), delta });
                cur = next;
                continue 'outer;
            }
        }
        return Ok((cur, trace));
    }
}

#[cfg(test)]
mod tests;
