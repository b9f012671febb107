use std::collections::{BTreeMap, BTreeSet};

use super::ConceptRule;
use crate::cdg::{unify_params, Cdg, NodeId};
use crate::term::{Bindings, Term};

/// An embedding of a rule's left-hand side: `nodes[i]` is the graph node
/// matched by pattern node `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleMatch {
    pub nodes: Vec<NodeId>,
    pub bindings: Bindings,
}

impl RuleMatch {
    pub fn sorted_ids(&self) -> Vec<NodeId> {
        let mut ids = self.nodes.clone();
        ids.sort();
        ids
    }
}

struct Search<'a> {
    g: &'a Cdg,
    rule: &'a ConceptRule,
    closure: BTreeMap<NodeId, BTreeSet<NodeId>>,
    /// pattern index -> direct pattern parent index
    parent: Vec<Option<usize>>,
    best: Option<(Vec<NodeId>, RuleMatch)>,
}

/// The embedding whose sorted node ids are lexicographically least.
pub fn find_least_match(g: &Cdg, rule: &ConceptRule) -> Option<RuleMatch> {
    let idx: BTreeMap<&str, usize> = rule.lhs.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut parent = vec![None; rule.lhs.nodes.len()];
    for (c, p) in &rule.lhs.membership {
        parent[idx[c.as_str()]] = Some(idx[p.as_str()]);
    }
    let closure = if rule.lhs.prec.is_empty() { BTreeMap::new() } else { g.prec_closure() };
    let mut s = Search { g, rule, closure, parent, best: None };
    let mut assigned = Vec::new();
    s.extend(&mut assigned, &Bindings::new());
    s.best.map(|(_, m)| m)
}

impl Search<'_> {
    fn consistent(&self, assigned: &[NodeId], cand: &NodeId) -> bool {
        let i = assigned.len();
        let node = &self.g.nodes[cand];
        for (j, a) in assigned.iter().enumerate() {
            if self.parent[i] == Some(j) && node.member_of.as_ref() != Some(a) {
                return false;
            }
            if self.parent[j] == Some(i) && self.g.nodes[a].member_of.as_ref() != Some(cand) {
                return false;
            }
        }
        let pid = |k: usize| self.rule.lhs.nodes[k].id.as_str();
        for (a, b) in &self.rule.lhs.prec {
            let (x, y) = if a == pid(i) {
                match assigned.iter().enumerate().find(|(j, _)| pid(*j) == b) {
                    Some((_, y)) => (cand, y),
                    None => continue,
                }
            } else if b == pid(i) {
                match assigned.iter().enumerate().find(|(j, _)| pid(*j) == a) {
                    Some((_, x)) => (x, cand),
                    None => continue,
                }
            } else {
                continue;
            };
            if !self.closure.get(x).is_some_and(|s| s.contains(y)) {
                return false;
            }
        }
        true
    }

    fn extend(&mut self, assigned: &mut Vec<NodeId>, b: &Bindings) {
        let i = assigned.len();
        if i == self.rule.lhs.nodes.len() {
            if !distinct_ok(&self.rule.lhs.distinct, b) {
                return;
            }
            let mut key = assigned.clone();
            key.sort();
            if self.best.as_ref().is_none_or(|(k, _)| key < *k) {
                self.best = Some((key, RuleMatch { nodes: assigned.clone(), bindings: b.clone() }));
            }
            return;
        }
        let pat = &self.rule.lhs.nodes[i];
        let cands: Vec<NodeId> = self
            .g
            .active_nodes()
            .filter(|n| n.name == pat.name && !assigned.contains(&n.id))
            .map(|n| n.id.clone())
            .collect();
        for c in cands {
            if !self.consistent(assigned, &c) {
                continue;
            }
            let params = &self.g.nodes[&c].params;
            for nb in unify_params(&pat.name, &pat.params, params, pat.any_order, b) {
                assigned.push(c.clone());
                self.extend(assigned, &nb);
                assigned.pop();
            }
        }
    }
}

fn distinct_ok(names: &[Term], b: &Bindings) -> bool {
    let vals: Vec<Option<Term>> = names
        .iter()
        .map(|t| match t {
            Term::Var(v) => b.lookup(v),
            Term::Meta(m) => b.lookup(&format!("?{m}")),
            _ => None,
        })
        .collect();
    for (i, a) in vals.iter().enumerate() {
        for c in &vals[i + 1..] {
            if a.is_some() && a == c {
                return false;
            }
        }
    }
    true
}
