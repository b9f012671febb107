//! Substitution-aware matching of a template CDG against a summarized
//! student CDG.
//!
//! Every combination of replacement alternatives is expanded into a simple
//! template; each is embedded into the candidate by a backtracking search
//! that may leave template nodes unmatched. The score of an embedding is
//! the fraction of matched template nodes times the fraction of satisfied
//! template precedences among those whose endpoints both matched.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdg::{unify_params, Cdg, NodeId, ReplGroup};
use crate::knowledgebase::AlgorithmTemplate;
use crate::term::{Bindings, Term};

pub const DEFAULT_ALTERNATIVE_CAP: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("template expands into {count} alternatives, more than the cap of {cap}")]
    AlternativeExplosion { count: u128, cap: usize },
    #[error("no templates to match against")]
    NoTemplates,
}

/// Which side of a replacement group a variant uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lhs,
    Rhs,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Substitution {
    pub var_map: BTreeMap<String, String>,
    pub node_map: BTreeMap<NodeId, NodeId>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta_map: BTreeMap<String, Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub score: f64,
    pub matched: usize,
    pub total: usize,
    pub prec_satisfied: usize,
    pub prec_checked: usize,
    pub substitution: Substitution,
    pub unmatched_template_nodes: Vec<NodeId>,
    pub violated_precedences: Vec<(NodeId, NodeId)>,
    pub variant_used: Vec<Side>,
}

impl MatchResult {
    fn ratio(&self) -> (u128, u128) {
        if self.total == 0 {
            return (1, 1);
        }
        let (ps, pc) = if self.prec_checked == 0 { (1, 1) } else { (self.prec_satisfied, self.prec_checked) };
        ((self.matched * ps) as u128, (self.total * pc) as u128)
    }

    /// Exact comparison of scores.
    pub fn cmp_score(&self, other: &MatchResult) -> Ordering {
        let (a, b) = self.ratio();
        let (c, d) = other.ratio();
        (a * d).cmp(&(c * b))
    }

    pub fn is_full(&self) -> bool {
        self.unmatched_template_nodes.is_empty() && self.violated_precedences.is_empty()
    }
}

fn score_of(matched: usize, total: usize, ps: usize, pc: usize) -> f64 {
    if total == 0 {
        return 1.0;
    }
    let prec = if pc == 0 { 1.0 } else { ps as f64 / pc as f64 };
    matched as f64 / total as f64 * prec
}

/// Every simple template obtained by choosing one side of each replacement
/// group, in lexicographic order of choices (left-hand sides first).
pub fn expand_alternatives(template: &Cdg, cap: usize) -> Result<Vec<(Vec<Side>, Cdg)>, MatchError> {
    let groups = template.repl.len();
    let count = 1u128.checked_shl(groups as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(MatchError::AlternativeExplosion { count, cap });
    }
    let mut out = Vec::new();
    for bits in 0..(1usize << groups) {
        let choice: Vec<Side> =
            (0..groups).map(|i| if bits >> (groups - 1 - i) & 1 == 1 { Side::Rhs } else { Side::Lhs }).collect();
        let mut g = template.clone();
        g.repl.clear();
        for (grp, side) in template.repl.iter().zip(&choice) {
            drop_side(&mut g, grp, *side);
        }
        out.push((choice, g));
    }
    Ok(out)
}

fn drop_side(g: &mut Cdg, grp: &ReplGroup, keep: Side) {
    let (kept, removed) = match keep {
        Side::Lhs => (&grp.lhs, &grp.rhs),
        Side::Rhs => (&grp.rhs, &grp.lhs),
    };
    let removed: BTreeSet<&NodeId> = removed.iter().filter(|id| !kept.contains(id)).collect();
    let (Some(first), Some(last)) = (kept.first(), kept.last()) else { return };
    let kept_set: BTreeSet<&NodeId> = kept.iter().collect();
    let mut prec = BTreeSet::new();
    for (a, b) in &g.prec {
        let edge = match (removed.contains(a), removed.contains(b)) {
            (false, false) => Some((a.clone(), b.clone())),
            (true, true) => None,
            (true, false) if !kept_set.contains(b) => Some((last.clone(), b.clone())),
            (false, true) if !kept_set.contains(a) => Some((a.clone(), first.clone())),
            _ => None,
        };
        prec.extend(edge.filter(|(a, b)| a != b));
    }
    g.prec = prec;
    for n in g.nodes.values_mut() {
        if !removed.contains(&n.id) && n.member_of.as_ref().is_some_and(|p| removed.contains(p)) {
            n.member_of = Some(first.clone());
        }
    }
    g.nodes.retain(|id, _| !removed.contains(id));
}

/// Best embedding of `template` (over all its alternatives) into `candidate`.
pub fn match_template(template: &Cdg, candidate: &Cdg) -> Result<MatchResult, MatchError> {
    match_template_with_cap(template, candidate, DEFAULT_ALTERNATIVE_CAP)
}

pub fn match_template_with_cap(template: &Cdg, candidate: &Cdg, cap: usize) -> Result<MatchResult, MatchError> {
    let mut best: Option<MatchResult> = None;
    for (variant, t) in expand_alternatives(template, cap)? {
        let r = match_simple(&t, candidate, variant);
        if best.as_ref().is_none_or(|b| r.cmp_score(b) == Ordering::Greater) {
            let full = r.is_full();
            best = Some(r);
            if full {
                break;
            }
        }
    }
    Ok(best.expect("expansion yields at least one variant"))
}

/// Highest-scoring template; ties go to the smaller template id.
pub fn best_match<'a>(
    templates: &'a [AlgorithmTemplate],
    candidate: &Cdg,
) -> Result<(&'a AlgorithmTemplate, MatchResult), MatchError> {
    let mut sorted: Vec<&AlgorithmTemplate> = templates.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut best: Option<(&AlgorithmTemplate, MatchResult)> = None;
    for t in sorted {
        let r = match_template(&t.cdg, candidate)?;
        if best.as_ref().is_none_or(|(_, b)| r.cmp_score(b) == Ordering::Greater) {
            best = Some((t, r));
        }
    }
    best.ok_or(MatchError::NoTemplates)
}

/// Matched nodes, satisfied and checked precedences, node map, bindings.
type Best = (usize, usize, usize, BTreeMap<NodeId, NodeId>, Bindings);

struct Search<'a> {
    t: &'a Cdg,
    c: &'a Cdg,
    order: Vec<NodeId>,
    /// per template node: its template ancestors
    t_anc: BTreeMap<NodeId, BTreeSet<NodeId>>,
    c_anc: BTreeMap<NodeId, BTreeSet<NodeId>>,
    c_closure: BTreeMap<NodeId, BTreeSet<NodeId>>,
    cands: BTreeMap<NodeId, Vec<NodeId>>,
    best: Option<Best>,
}

fn match_simple(t: &Cdg, c: &Cdg, variant: Vec<Side>) -> MatchResult {
    let cands: BTreeMap<NodeId, Vec<NodeId>> = t
        .nodes
        .values()
        .map(|tn| {
            let list = c
                .nodes
                .values()
                .filter(|cn| cn.name == tn.name && cn.kind == tn.kind && cn.absorbed == tn.absorbed)
                .map(|cn| cn.id.clone())
                .collect();
            (tn.id.clone(), list)
        })
        .collect();
    let mut order: Vec<NodeId> = t.nodes.keys().cloned().collect();
    order.sort_by(|a, b| cands[a].len().cmp(&cands[b].len()).then_with(|| a.cmp(b)));
    let t_anc = t.nodes.keys().map(|id| (id.clone(), t.ancestors(id).into_iter().collect())).collect();
    let c_anc = c.nodes.keys().map(|id| (id.clone(), c.ancestors(id).into_iter().collect())).collect();
    let mut s = Search { t, c, order, t_anc, c_anc, c_closure: c.prec_closure(), cands, best: None };
    s.go(0, &mut BTreeMap::new(), &mut BTreeSet::new(), &Bindings::injective());
    let (matched, ps, pc, node_map, b) = s.best.take().unwrap_or_default();
    let unmatched: Vec<NodeId> = t.nodes.keys().filter(|id| !node_map.contains_key(*id)).cloned().collect();
    let violated = violated(t, &node_map, &s.c_closure);
    MatchResult {
        score: score_of(matched, t.len(), ps, pc),
        matched,
        total: t.len(),
        prec_satisfied: ps,
        prec_checked: pc,
        substitution: Substitution { var_map: b.vars.clone(), node_map, meta_map: b.metas.clone() },
        unmatched_template_nodes: unmatched,
        violated_precedences: violated,
        variant_used: variant,
    }
}

fn violated(
    t: &Cdg,
    map: &BTreeMap<NodeId, NodeId>,
    closure: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> Vec<(NodeId, NodeId)> {
    t.prec
        .iter()
        .filter(|(a, b)| match (map.get(a), map.get(b)) {
            (Some(x), Some(y)) => !closure.get(x).is_some_and(|s| s.contains(y)),
            _ => false,
        })
        .cloned()
        .collect()
}

fn prec_stats(t: &Cdg, map: &BTreeMap<NodeId, NodeId>, closure: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> (usize, usize) {
    let mut ok = 0;
    let mut checked = 0;
    for (a, b) in &t.prec {
        if let (Some(x), Some(y)) = (map.get(a), map.get(b)) {
            checked += 1;
            if closure.get(x).is_some_and(|s| s.contains(y)) {
                ok += 1;
            }
        }
    }
    (ok, checked)
}

impl Search<'_> {
    fn best_ratio(&self) -> Option<(u128, u128)> {
        self.best.as_ref().map(|(m, ps, pc, _, _)| {
            let total = self.t.len();
            if pc == &0 {
                (*m as u128, total as u128)
            } else {
                ((m * ps) as u128, (total * pc) as u128)
            }
        })
    }

    fn done(&self) -> bool {
        self.best_ratio().is_some_and(|(a, b)| a == b)
    }

    fn compatible(&self, tid: &NodeId, cid: &NodeId, map: &BTreeMap<NodeId, NodeId>) -> bool {
        for (t2, c2) in map {
            if self.t_anc[tid].contains(t2) && !self.c_anc[cid].contains(c2) {
                return false;
            }
            if self.t_anc[t2].contains(tid) && !self.c_anc[c2].contains(cid) {
                return false;
            }
        }
        true
    }

    fn go(&mut self, depth: usize, map: &mut BTreeMap<NodeId, NodeId>, used: &mut BTreeSet<NodeId>, b: &Bindings) {
        if self.done() {
            return;
        }
        let total = self.t.len();
        if let Some((a, d)) = self.best_ratio() {
            let upper = (map.len() + self.order.len() - depth) as u128;
            if upper * d <= a * total as u128 {
                return;
            }
        }
        if depth == self.order.len() {
            let (ps, pc) = prec_stats(self.t, map, &self.c_closure);
            let m = map.len();
            let better = match self.best_ratio() {
                None => true,
                Some((a, d)) => {
                    let (x, y) =
                        if pc == 0 { (m as u128, total as u128) } else { ((m * ps) as u128, (total * pc) as u128) };
                    x * d > a * y
                }
            };
            if better {
                self.best = Some((m, ps, pc, map.clone(), b.clone()));
            }
            return;
        }
        let tid = self.order[depth].clone();
        let tn = &self.t.nodes[&tid];
        for cid in self.cands[&tid].clone() {
            if used.contains(&cid) || !self.compatible(&tid, &cid, map) {
                continue;
            }
            let cn = &self.c.nodes[&cid];
            for nb in unify_params(&tn.name, &tn.params, &cn.params, false, b) {
                map.insert(tid.clone(), cid.clone());
                used.insert(cid.clone());
                self.go(depth + 1, map, used, &nb);
                map.remove(&tid);
                used.remove(&cid);
                if self.done() {
                    return;
                }
            }
        }
        self.go(depth + 1, map, used, b);
    }
}
