//! Concept dependence graphs.
//!
//! Each [`ConceptNode`] carries the four quadrants of a concept: its name,
//! contextual parameters, id and membership. Solid precedence edges order
//! sibling concepts; dashed replacement groups (templates only) list
//! alternative node sequences that implement the same concept.
//!
//! Summarization keeps the nodes it folds into a higher concept as
//! *absorbed* members of that concept. Absorbed nodes are inert for further
//! rewriting but stay visible to template matching, which is how a template
//! can tell a `for` implementation of a counter loop from a `while` one.

mod dot;
mod json;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{AbstractProgram, AbstractStatement, StmtNo};
use crate::term::{unify, unify_list, Bindings, Term};

pub use dot::to_dot;
pub use json::{deserialize, serialize, CdgDocument, CDG_SCHEMA_VERSION};

/// Node identifier: `s<stmt_no>` for base nodes, `c<counter>` for
/// summarized ones. Ordered naturally (`s2 < s10`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn stmt(n: StmtNo) -> NodeId {
        NodeId(format!("s{n}"))
    }

    pub fn new(s: impl Into<String>) -> NodeId {
        NodeId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn split(&self) -> (&str, Option<u64>) {
        let digits = self.0.len() - self.0.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (prefix, num) = self.0.split_at(self.0.len() - digits);
        (prefix, num.parse().ok())
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        let (pa, na) = self.split();
        let (pb, nb) = other.split();
        pa.cmp(pb).then(na.cmp(&nb)).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Declaration,
    Computable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptNode {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub level: u32,
    pub params: Vec<Term>,
    pub member_of: Option<NodeId>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub absorbed: bool,
}

impl ConceptNode {
    pub fn computable(id: impl Into<String>, name: &str, level: u32, params: Vec<Term>) -> Self {
        ConceptNode {
            id: NodeId(id.into()),
            name: name.to_string(),
            kind: NodeKind::Computable,
            level,
            params,
            member_of: None,
            absorbed: false,
        }
    }

    pub fn member_of(mut self, parent: &str) -> Self {
        self.member_of = Some(NodeId::new(parent));
        self
    }

    pub fn absorbed(mut self) -> Self {
        self.absorbed = true;
        self
    }
}

/// A dashed replacement: the `lhs` node sequence may be implemented by the
/// `rhs` sequence instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplGroup {
    pub lhs: Vec<NodeId>,
    pub rhs: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cdg {
    pub nodes: BTreeMap<NodeId, ConceptNode>,
    pub prec: BTreeSet<(NodeId, NodeId)>,
    pub repl: Vec<ReplGroup>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CdgError {
    #[error("invalid abstract program: {0}")]
    InvalidAbstractProgram(String),
    #[error("malformed CDG document at line {line}, column {column}: {message}")]
    MalformedDocument { line: usize, column: usize, message: String },
    #[error("unsupported CDG schema version {0}")]
    SchemaVersionMismatch(u32),
}

impl Cdg {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: ConceptNode) {
        self.nodes.insert(node.id.clone(), node);
    }

    pub fn add_prec(&mut self, a: &str, b: &str) {
        self.prec.insert((NodeId::new(a), NodeId::new(b)));
    }

    pub fn node(&self, id: &NodeId) -> Option<&ConceptNode> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = &ConceptNode> {
        self.nodes.values().filter(|n| !n.absorbed)
    }

    pub fn nodes_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a ConceptNode> + 'a {
        self.nodes.values().filter(move |n| n.name == name)
    }

    /// Base graph: one node per abstract statement, precedence and
    /// membership copied from the program, every node at level 0.
    pub fn from_abstract_program(ap: &AbstractProgram) -> Result<Cdg, CdgError> {
        ap.check().map_err(CdgError::InvalidAbstractProgram)?;
        let mut g = Cdg::new();
        for s in &ap.statements {
            let node = match s {
                AbstractStatement::Declaration { n, vars, c } => ConceptNode {
                    id: NodeId::stmt(*n),
                    name: "declaration".into(),
                    kind: NodeKind::Declaration,
                    level: 0,
                    params: vars
                        .iter()
                        .map(|v| {
                            let mut args = vec![Term::Var(v.name.clone())];
                            args.extend(v.init.clone());
                            Term::tag(v.class.as_str(), args)
                        })
                        .collect(),
                    member_of: c.map(NodeId::stmt),
                    absorbed: false,
                },
                AbstractStatement::Computational { n, e, p, c } => ConceptNode {
                    id: NodeId::stmt(*n),
                    name: e.name().into(),
                    kind: NodeKind::Computable,
                    level: 0,
                    params: p.clone(),
                    member_of: c.map(NodeId::stmt),
                    absorbed: false,
                },
            };
            g.insert(node);
        }
        g.prec = ap.precedence.iter().map(|(a, b)| (NodeId::stmt(*a), NodeId::stmt(*b))).collect();
        Ok(g)
    }

    /// Strict ancestors of `id` along `member_of`, nearest first.
    pub fn ancestors(&self, id: &NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(id).and_then(|n| n.member_of.clone());
        while let Some(p) = cur {
            if out.contains(&p) || !self.nodes.contains_key(&p) {
                break;
            }
            cur = self.nodes[&p].member_of.clone();
            out.push(p);
        }
        out
    }

    /// Transitive closure of the precedence relation.
    pub fn prec_closure(&self) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        let mut succ: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
        for (a, b) in &self.prec {
            succ.entry(a).or_default().push(b);
        }
        let mut out = BTreeMap::new();
        for id in self.nodes.keys() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&NodeId> = succ.get(id).cloned().unwrap_or_default();
            while let Some(n) = stack.pop() {
                if seen.insert(n.clone()) {
                    stack.extend(succ.get(n).cloned().unwrap_or_default());
                }
            }
            out.insert(id.clone(), seen);
        }
        out
    }

    /// Smallest unused `c<k>` id.
    pub fn fresh_concept_id(&self) -> NodeId {
        let max = self
            .nodes
            .keys()
            .filter_map(|id| id.0.strip_prefix('c').and_then(|d| d.parse::<u64>().ok()))
            .max()
            .unwrap_or(0);
        NodeId(format!("c{}", max + 1))
    }

    /// Apply a recorded summarization step.
    pub fn apply_delta(&self, d: &CdgDelta) -> Cdg {
        let mut g = self.clone();
        g.insert(d.added.clone());
        for id in &d.absorbed {
            if let Some(n) = g.nodes.get_mut(id) {
                n.absorbed = true;
            }
        }
        for (id, parent) in &d.reparented {
            if let Some(n) = g.nodes.get_mut(id) {
                n.member_of = Some(parent.clone());
            }
        }
        for e in &d.prec_removed {
            g.prec.remove(e);
        }
        for e in &d.prec_added {
            g.prec.insert(e.clone());
        }
        g
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

/// One summarization step: which nodes were absorbed into which new node,
/// and how membership and precedence were rewired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdgDelta {
    pub absorbed: Vec<NodeId>,
    pub added: ConceptNode,
    pub reparented: Vec<(NodeId, NodeId)>,
    pub prec_removed: Vec<(NodeId, NodeId)>,
    pub prec_added: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Issue {
    KeyMismatch { key: NodeId, id: NodeId },
    DanglingPrec { from: NodeId, to: NodeId },
    SelfPrec(NodeId),
    PrecCycle(Vec<NodeId>),
    DanglingMember { node: NodeId, parent: NodeId },
    MemberCycle(Vec<NodeId>),
    DeclarationLevel(NodeId),
    AbsorbedWithoutParent(NodeId),
    DanglingRepl(NodeId),
    EmptyReplSide(usize),
    OverlappingRepl(NodeId),
    SimpleNotConnected(Vec<NodeId>),
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids = |v: &[NodeId]| v.iter().map(|i| i.0.as_str()).collect::<Vec<_>>().join(" -> ");
        match self {
            Issue::KeyMismatch { key, id } => write!(f, "node stored under {key} has id {id}"),
            Issue::DanglingPrec { from, to } => write!(f, "precedence {from} -> {to} names a missing node"),
            Issue::SelfPrec(n) => write!(f, "node {n} precedes itself"),
            Issue::PrecCycle(c) => write!(f, "precedence cycle {}", ids(c)),
            Issue::DanglingMember { node, parent } => write!(f, "node {node} is a member of missing node {parent}"),
            Issue::MemberCycle(c) => write!(f, "membership cycle {}", ids(c)),
            Issue::DeclarationLevel(n) => write!(f, "declaration node {n} has a nonzero level"),
            Issue::AbsorbedWithoutParent(n) => write!(f, "absorbed node {n} has no containing concept"),
            Issue::DanglingRepl(n) => write!(f, "replacement group names missing node {n}"),
            Issue::EmptyReplSide(g) => write!(f, "replacement group {g} has an empty side"),
            Issue::OverlappingRepl(n) => write!(f, "node {n} appears in more than one replacement group"),
            Issue::SimpleNotConnected(c) => write!(f, "simple CDG is disconnected; component {}", ids(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

fn validate(g: &Cdg) -> ValidationReport {
    let mut issues = Vec::new();
    for (k, n) in &g.nodes {
        if *k != n.id {
            issues.push(Issue::KeyMismatch { key: k.clone(), id: n.id.clone() });
        }
        if n.kind == NodeKind::Declaration && n.level != 0 {
            issues.push(Issue::DeclarationLevel(n.id.clone()));
        }
        match &n.member_of {
            Some(p) if !g.nodes.contains_key(p) => {
                issues.push(Issue::DanglingMember { node: n.id.clone(), parent: p.clone() })
            }
            None if n.absorbed => issues.push(Issue::AbsorbedWithoutParent(n.id.clone())),
            _ => {}
        }
    }

    // membership cycles
    let mut reported: BTreeSet<NodeId> = BTreeSet::new();
    for id in g.nodes.keys() {
        let mut path = vec![id.clone()];
        let mut cur = g.nodes[id].member_of.clone();
        while let Some(p) = cur {
            if let Some(pos) = path.iter().position(|x| *x == p) {
                let cycle = path[pos..].to_vec();
                if cycle.iter().all(|c| !reported.contains(c)) {
                    reported.extend(cycle.iter().cloned());
                    issues.push(Issue::MemberCycle(cycle));
                }
                break;
            }
            path.push(p.clone());
            cur = g.nodes.get(&p).and_then(|n| n.member_of.clone());
        }
    }

    let mut succ: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (a, b) in &g.prec {
        if !g.nodes.contains_key(a) || !g.nodes.contains_key(b) {
            issues.push(Issue::DanglingPrec { from: a.clone(), to: b.clone() });
        } else if a == b {
            issues.push(Issue::SelfPrec(a.clone()));
        } else {
            succ.entry(a).or_default().push(b);
        }
    }
    if let Some(cycle) = find_cycle(g.nodes.keys(), &succ) {
        issues.push(Issue::PrecCycle(cycle));
    }

    let mut in_group: BTreeSet<&NodeId> = BTreeSet::new();
    for (i, grp) in g.repl.iter().enumerate() {
        if grp.lhs.is_empty() || grp.rhs.is_empty() {
            issues.push(Issue::EmptyReplSide(i));
        }
        for id in grp.lhs.iter().chain(&grp.rhs) {
            if !g.nodes.contains_key(id) {
                issues.push(Issue::DanglingRepl(id.clone()));
            } else if !in_group.insert(id) {
                issues.push(Issue::OverlappingRepl(id.clone()));
            }
        }
    }

    let simple = g.repl.is_empty() && g.nodes.values().all(|n| n.level == 0);
    if simple && !g.nodes.is_empty() {
        let comps = components(g);
        if comps.len() > 1 {
            issues.push(Issue::SimpleNotConnected(comps[1].clone()));
        }
    }
    ValidationReport { issues }
}

fn find_cycle<'a>(
    nodes: impl Iterator<Item = &'a NodeId>,
    succ: &BTreeMap<&'a NodeId, Vec<&'a NodeId>>,
) -> Option<Vec<NodeId>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<&NodeId, u8> = BTreeMap::new();
    fn dfs<'a>(
        n: &'a NodeId,
        succ: &BTreeMap<&'a NodeId, Vec<&'a NodeId>>,
        state: &mut BTreeMap<&'a NodeId, u8>,
        stack: &mut Vec<&'a NodeId>,
    ) -> Option<Vec<NodeId>> {
        state.insert(n, 1);
        stack.push(n);
        for m in succ.get(n).into_iter().flatten() {
            match state.get(m).copied().unwrap_or(0) {
                1 => {
                    let pos = stack.iter().position(|x| x == m).unwrap();
                    return Some(stack[pos..].iter().map(|x| (*x).clone()).collect());
                }
                0 => {
                    if let Some(c) = dfs(m, succ, state, stack) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        stack.pop();
        state.insert(n, 2);
        None
    }
    for n in nodes {
        if state.get(n).copied().unwrap_or(0) == 0 {
            if let Some(c) = dfs(n, succ, &mut state, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

/// Connected components over the undirected union of precedence and
/// membership edges, each sorted, ordered by smallest member.
fn components(g: &Cdg) -> Vec<Vec<NodeId>> {
    let mut adj: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (a, b) in &g.prec {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    for n in g.nodes.values() {
        if let Some(p) = &n.member_of {
            if let Some((pk, _)) = g.nodes.get_key_value(p) {
                adj.entry(&n.id).or_default().push(pk);
                adj.entry(pk).or_default().push(&n.id);
            }
        }
    }
    let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
    let mut out = Vec::new();
    for id in g.nodes.keys() {
        if seen.contains(id) {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![id];
        seen.insert(id);
        while let Some(n) = stack.pop() {
            comp.push(n.clone());
            for m in adj.get(n).into_iter().flatten() {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

/// Unify the parameters of a pattern node with those of a graph node.
///
/// Declaration parameters are an unordered set of declared variables, so a
/// declaration pattern matches any node declaring (at least) the listed
/// variables. Other parameters match position by position; with
/// `any_order` every permutation of the pattern parameters is tried.
pub fn unify_params(name: &str, pattern: &[Term], target: &[Term], any_order: bool, b: &Bindings) -> Vec<Bindings> {
    if name == "declaration" {
        let mut out = Vec::new();
        subset(pattern, target, &mut vec![false; target.len()], b, &mut out);
        return out;
    }
    if !any_order {
        return unify_list(pattern, target, b);
    }
    let mut out: Vec<Bindings> = Vec::new();
    for perm in permutations(pattern.len()) {
        let p: Vec<Term> = perm.iter().map(|&i| pattern[i].clone()).collect();
        for nb in unify_list(&p, target, b) {
            if !out.contains(&nb) {
                out.push(nb);
            }
        }
    }
    out
}

fn subset(pattern: &[Term], target: &[Term], used: &mut Vec<bool>, b: &Bindings, out: &mut Vec<Bindings>) {
    let Some((first, rest)) = pattern.split_first() else {
        if !out.contains(b) {
            out.push(b.clone());
        }
        return;
    };
    for i in 0..target.len() {
        if used[i] {
            continue;
        }
        for nb in unify(first, &target[i], b) {
            used[i] = true;
            subset(rest, target, used, &nb, out);
            used[i] = false;
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{abstract_program, SourceProgram};

    #[test]
    fn declaration_params_match_as_subset() {
        let t = |s: &str| Term::parse(s).unwrap();
        let target = vec![t("scalar(k, 0)"), t("scalar(total)"), t("list(xs)")];
        let got = unify_params("declaration", &[t("scalar(?c, 0)")], &target, false, &Bindings::new());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].lookup("?c"), Some(t("k")));
        assert!(unify_params("declaration", &[t("boolean(?c)")], &target, false, &Bindings::new()).is_empty());
    }

    #[test]
    fn any_order_tries_swapped_params() {
        let t = |s: &str| Term::parse(s).unwrap();
        let pat = [t("?l[?i]"), t("?l[?i + 1]")];
        let target = [t("a[j + 1]"), t("a[j]")];
        assert!(unify_params("swap", &pat, &target, false, &Bindings::new()).is_empty());
        assert_eq!(unify_params("swap", &pat, &target, true, &Bindings::new()).len(), 1);
    }

    #[test]
    fn node_ids_order_naturally() {
        let mut ids = [NodeId::new("s10"), NodeId::new("s2"), NodeId::new("c1"), NodeId::new("s1")];
        ids.sort();
        let s: Vec<_> = ids.iter().map(|i| i.as_str()).collect();
        assert_eq!(s, ["c1", "s1", "s2", "s10"]);
    }

    #[test]
    fn empty_program_gives_empty_cdg() {
        let g = Cdg::from_abstract_program(&AbstractProgram::default()).unwrap();
        assert!(g.is_empty());
        assert!(g.validate().is_valid());
    }

    #[test]
    fn base_cdg_mirrors_program() {
        let (_, ap) =
            abstract_program(&SourceProgram::new("t", "void main() {\n int a;\n a = 1;\n print a;\n}")).unwrap();
        let g = Cdg::from_abstract_program(&ap).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.nodes[&NodeId::new("s1")].name, "funcDef");
        assert_eq!(g.nodes[&NodeId::new("s2")].kind, NodeKind::Declaration);
        assert_eq!(g.nodes[&NodeId::new("s3")].member_of, Some(NodeId::new("s1")));
        assert!(g.prec.contains(&(NodeId::new("s2"), NodeId::new("s3"))));
        assert!(g.validate().is_valid());
    }

    #[test]
    fn prec_two_cycle_is_reported() {
        let mut g = Cdg::new();
        g.insert(ConceptNode::computable("a", "assign", 0, vec![]));
        g.insert(ConceptNode::computable("b", "assign", 0, vec![]));
        g.add_prec("a", "b");
        g.add_prec("b", "a");
        let r = g.validate();
        let cycle = r.issues.iter().find_map(|i| match i {
            Issue::PrecCycle(c) => Some(c.clone()),
            _ => None,
        });
        assert_eq!(cycle, Some(vec![NodeId::new("a"), NodeId::new("b")]));
    }

    #[test]
    fn dangling_repl_id_is_reported() {
        let mut g = Cdg::new();
        g.insert(ConceptNode::computable("a", "forLoop", 0, vec![]));
        g.repl.push(ReplGroup { lhs: vec![NodeId::new("a")], rhs: vec![NodeId::new("ghost")] });
        assert!(g.validate().issues.contains(&Issue::DanglingRepl(NodeId::new("ghost"))));
    }

    #[test]
    fn disconnected_simple_cdg_is_reported() {
        let mut g = Cdg::new();
        g.insert(ConceptNode::computable("a", "assign", 0, vec![]));
        g.insert(ConceptNode::computable("b", "assign", 0, vec![]));
        assert!(matches!(g.validate().issues[..], [Issue::SimpleNotConnected(_)]));
    }
}
