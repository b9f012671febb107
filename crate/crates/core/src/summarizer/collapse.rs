use std::collections::{BTreeMap, BTreeSet};

use super::{ConceptRule, RuleMatch};
use crate::cdg::{Cdg, CdgDelta, ConceptNode, NodeId, NodeKind};

/// Fold the consumed nodes of `m` into one new node.
///
/// The new node takes the place of the last consumed top-level node in the
/// precedence order; other consumed top-level nodes are bypassed. Edges
/// among consumed nodes are kept so templates can inspect the shape of
/// what was absorbed.
pub(super) fn collapse(g: &Cdg, rule: &ConceptRule, m: &RuleMatch, level: u32) -> (Cdg, CdgDelta) {
    let consumed: BTreeSet<NodeId> =
        m.nodes.iter().zip(&rule.lhs.nodes).filter(|(_, p)| !p.keep).map(|(id, _)| id.clone()).collect();
    let parent = |id: &NodeId| g.nodes[id].member_of.clone();
    let top: BTreeSet<NodeId> =
        consumed.iter().filter(|c| parent(c).is_none_or(|p| !consumed.contains(&p))).cloned().collect();
    let closure = g.prec_closure();
    let anchor = top
        .iter()
        .filter(|t| !top.iter().any(|u| u != *t && closure[*t].contains(u)))
        .max()
        .or_else(|| top.iter().max())
        .expect("a rule always consumes at least one node")
        .clone();

    let r = g.fresh_concept_id();
    let added = ConceptNode {
        id: r.clone(),
        name: rule.rhs.name.clone(),
        kind: NodeKind::Computable,
        level,
        params: rule.rhs.params.iter().map(|t| t.substitute(&m.bindings)).collect(),
        member_of: parent(&anchor),
        absorbed: false,
    };

    let mut reparented = Vec::new();
    let mut new_parent: BTreeMap<NodeId, Option<NodeId>> = BTreeMap::new();
    for n in g.nodes.values() {
        let moves = match &n.member_of {
            None => false,
            Some(p) if consumed.contains(&n.id) => !consumed.contains(p),
            Some(p) => consumed.contains(p) && !n.absorbed,
        };
        if moves {
            reparented.push((n.id.clone(), r.clone()));
            new_parent.insert(n.id.clone(), Some(r.clone()));
        } else {
            new_parent.insert(n.id.clone(), n.member_of.clone());
        }
    }

    let mut prec: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for (a, b) in &g.prec {
        match (consumed.contains(a), consumed.contains(b)) {
            (false, false) | (true, true) => {
                prec.insert((a.clone(), b.clone()));
            }
            (ca, _) => {
                let (x, y) = if ca { (a, b) } else { (b, a) };
                let edge = if *x == anchor {
                    Some(if ca { (r.clone(), b.clone()) } else { (a.clone(), r.clone()) })
                } else if top.contains(x) {
                    None
                } else if new_parent[x] == new_parent[y] {
                    Some((a.clone(), b.clone()))
                } else {
                    None
                };
                prec.extend(edge);
            }
        }
    }

    for a in &top {
        for b in &top {
            let between = top.iter().any(|c| closure[a].contains(c) && closure[c].contains(b));
            if closure[a].contains(b) && !between {
                prec.insert((a.clone(), b.clone()));
            }
        }
    }

    let mut succ: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (a, b) in &g.prec {
        succ.entry(a).or_default().push(b);
    }
    let mut bypass = BTreeSet::new();
    for (p, t) in &g.prec {
        if consumed.contains(p) || !top.contains(t) || *t == anchor {
            continue;
        }
        let mut stack = vec![t];
        let mut seen = BTreeSet::new();
        while let Some(u) = stack.pop() {
            if !seen.insert(u) {
                continue;
            }
            for v in succ.get(u).into_iter().flatten() {
                if **v == anchor {
                    bypass.insert((p.clone(), r.clone()));
                } else if top.contains(*v) {
                    stack.push(v);
                } else if !consumed.contains(*v) && *v != p {
                    bypass.insert((p.clone(), (*v).clone()));
                }
            }
        }
    }
    for (a, b) in bypass {
        if !reaches(&prec, &b, &a) {
            prec.insert((a, b));
        }
    }
    prec.retain(|(a, b)| a != b);

    let prec_removed: Vec<_> = g.prec.difference(&prec).cloned().collect();
    let prec_added: Vec<_> = prec.difference(&g.prec).cloned().collect();
    let delta = CdgDelta { absorbed: consumed.into_iter().collect(), added, reparented, prec_removed, prec_added };
    (g.apply_delta(&delta), delta)
}

fn reaches(prec: &BTreeSet<(NodeId, NodeId)>, from: &NodeId, to: &NodeId) -> bool {
    let mut stack = vec![from];
    let mut seen = BTreeSet::new();
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        if seen.insert(u) {
            stack.extend(prec.iter().filter(|(a, _)| a == u).map(|(_, b)| b));
        }
    }
    false
}
