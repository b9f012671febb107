use std::collections::{BTreeMap, BTreeSet};

use crate::cdg::{Cdg, CdgDocument, ConceptNode, NodeId, NodeKind, ReplGroup};
use crate::matcher::{expand_alternatives, match_template, MatchResult, DEFAULT_ALTERNATIVE_CAP};

use super::{AlgorithmTemplate, KbError, Proposal};

/// Knowledge that would let `template` recognise `student` fully.
///
/// The unmatched part of the template variant that scored best is paired
/// with the corresponding part of the student graph as a new replacement
/// group. When no such region exists, or the extended template still falls
/// short, the whole student solution becomes a sibling template.
pub fn propose_delta(
    template: &AlgorithmTemplate,
    student: &Cdg,
    result: &MatchResult,
    sibling_id: &str,
) -> Result<Proposal, KbError> {
    if let Some((lhs, nodes, prec)) = alternative(&template.cdg, student, result)? {
        let mut extended = template.cdg.clone();
        install_alternative(&mut extended, &lhs, &nodes, &prec);
        if extended.validate().is_valid() && match_template(&extended, student)?.is_full() {
            return Ok(Proposal::ReplAlternative { lhs, nodes, prec });
        }
    }
    let cdg = skeleton_template(template, student, result);
    Ok(Proposal::SiblingTemplate { template_id: sibling_id.to_string(), cdg: CdgDocument::from(&cdg) })
}

type Alternative = (Vec<NodeId>, Vec<ConceptNode>, Vec<(NodeId, NodeId)>);

fn alternative(template: &Cdg, student: &Cdg, result: &MatchResult) -> Result<Option<Alternative>, KbError> {
    let Some((_, variant)) = expand_alternatives(template, DEFAULT_ALTERNATIVE_CAP)?
        .into_iter()
        .find(|(sides, _)| *sides == result.variant_used)
    else {
        return Ok(None);
    };
    if result.unmatched_template_nodes.is_empty() {
        return Ok(None);
    }
    let mut region: BTreeSet<NodeId> = result.unmatched_template_nodes.iter().cloned().collect();
    loop {
        let before = region.len();
        for n in variant.nodes.values() {
            if n.member_of.as_ref().is_some_and(|p| region.contains(p)) {
                region.insert(n.id.clone());
            }
        }
        if region.len() == before {
            break;
        }
    }
    let grouped: BTreeSet<&NodeId> = template.repl.iter().flat_map(|g| g.lhs.iter().chain(&g.rhs)).collect();
    if region.iter().any(|id| grouped.contains(id)) {
        return Ok(None);
    }
    let tops: Vec<&ConceptNode> = region
        .iter()
        .map(|id| &variant.nodes[id])
        .filter(|n| n.member_of.as_ref().is_none_or(|p| !region.contains(p)))
        .collect();
    let parent = tops[0].member_of.clone();
    if tops.iter().any(|n| n.member_of != parent) || !connected(&variant, &region) {
        return Ok(None);
    }

    let map = &result.substitution.node_map;
    let anchor = match &parent {
        Some(p) => match map.get(p) {
            Some(a) => Some(a.clone()),
            None => return Ok(None),
        },
        None => None,
    };
    let excluded: BTreeSet<&NodeId> = map.iter().filter(|(t, _)| !region.contains(*t)).map(|(_, s)| s).collect();
    let root = |id: &NodeId| student.ancestors(id).pop().unwrap_or_else(|| id.clone());
    // with no enclosing template node, stay inside the top-level nodes
    // holding the images of matched region nodes
    let roots: BTreeSet<NodeId> = map.iter().filter(|(t, _)| region.contains(*t)).map(|(_, s)| root(s)).collect();
    let chosen: BTreeSet<NodeId> = student
        .nodes
        .values()
        .filter(|n| n.kind != NodeKind::Declaration && n.name != "funcDef")
        .filter(|n| {
            let anc = student.ancestors(&n.id);
            let under = match &anchor {
                Some(a) => anc.contains(a),
                None => roots.is_empty() || roots.contains(&root(&n.id)),
            };
            under
                && !excluded.contains(&n.id)
                && !anc.iter().any(|a| excluded.contains(a) && Some(a) != anchor.as_ref())
        })
        .map(|n| n.id.clone())
        .collect();
    if chosen.is_empty() {
        return Ok(None);
    }

    let rename = inverse_vars(template, student, result);
    let taken: BTreeSet<&NodeId> = template.nodes.keys().collect();
    let mut fresh = (1..).map(|k| NodeId(format!("l{k}"))).filter(|id| !taken.contains(id));
    let ids: BTreeMap<NodeId, NodeId> =
        chosen.iter().map(|id| (id.clone(), fresh.next().expect("unbounded"))).collect();
    let nodes: Vec<ConceptNode> = order(student, &chosen)
        .into_iter()
        .map(|id| {
            let n = &student.nodes[&id];
            ConceptNode {
                id: ids[&id].clone(),
                params: n.params.iter().map(|p| p.rename_vars(&rename).normalize()).collect(),
                member_of: match &n.member_of {
                    Some(p) if chosen.contains(p) => Some(ids[p].clone()),
                    _ => parent.clone(),
                },
                ..n.clone()
            }
        })
        .collect();
    let prec = student
        .prec
        .iter()
        .filter(|(a, b)| chosen.contains(a) && chosen.contains(b))
        .map(|(a, b)| (ids[a].clone(), ids[b].clone()))
        .collect();
    Ok(Some((order(&variant, &region), nodes, prec)))
}

/// `region` is connected through membership and precedence edges.
fn connected(g: &Cdg, region: &BTreeSet<NodeId>) -> bool {
    let mut adj: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    let mut link = |a: &'_ NodeId, b: &'_ NodeId| {
        if let (Some(a), Some(b)) = (region.get(a), region.get(b)) {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    };
    for n in g.nodes.values() {
        if let Some(p) = &n.member_of {
            link(&n.id, p);
        }
    }
    for (a, b) in &g.prec {
        link(a, b);
    }
    let tops: Vec<&NodeId> =
        region.iter().filter(|id| g.nodes[*id].member_of.as_ref().is_none_or(|p| !region.contains(p))).collect();
    if tops.len() == 1 {
        return true;
    }
    let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
    let mut stack = vec![tops[0]];
    while let Some(id) = stack.pop() {
        if seen.insert(id) {
            stack.extend(adj.get(id).into_iter().flatten().copied());
        }
    }
    seen.len() == region.len()
}

/// Node ids of `set` in precedence order, ties by id.
fn order(g: &Cdg, set: &BTreeSet<NodeId>) -> Vec<NodeId> {
    let closure = g.prec_closure();
    let mut out: Vec<NodeId> = Vec::new();
    let mut left: BTreeSet<NodeId> = set.clone();
    while !left.is_empty() {
        let next = left
            .iter()
            .find(|id| !left.iter().any(|o| o != *id && closure.get(o).is_some_and(|s| s.contains(*id))))
            .unwrap_or_else(|| left.iter().next().expect("non-empty"))
            .clone();
        left.remove(&next);
        out.push(next);
    }
    out
}

/// Student variable name to template variable name. Student variables the
/// match did not bind keep their name unless it clashes with a template
/// variable.
fn inverse_vars(template: &Cdg, student: &Cdg, result: &MatchResult) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> =
        result.substitution.var_map.iter().map(|(t, s)| (s.clone(), t.clone())).collect();
    let template_vars: BTreeSet<String> =
        template.nodes.values().flat_map(|n| n.params.iter().flat_map(|p| p.variables())).collect();
    let student_vars: BTreeSet<String> =
        student.nodes.values().flat_map(|n| n.params.iter().flat_map(|p| p.variables())).collect();
    let mut used: BTreeSet<String> = template_vars.iter().chain(&student_vars).cloned().collect();
    for v in &student_vars {
        if out.contains_key(v) || !template_vars.contains(v) {
            continue;
        }
        let name = (1..).map(|k| format!("{v}_{k}")).find(|n| !used.contains(n)).expect("unbounded");
        used.insert(name.clone());
        out.insert(v.clone(), name);
    }
    out
}

/// Add a replacement group whose right-hand side is `nodes`, renaming any
/// id that collides with an existing template node.
pub(super) fn install_alternative(g: &mut Cdg, lhs: &[NodeId], nodes: &[ConceptNode], prec: &[(NodeId, NodeId)]) {
    let local: BTreeSet<&NodeId> = nodes.iter().map(|n| &n.id).collect();
    let mut taken: BTreeSet<NodeId> = g.nodes.keys().cloned().collect();
    let mut ids: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for n in nodes {
        let id = if taken.contains(&n.id) {
            (1..)
                .map(|k| NodeId(format!("l{k}")))
                .find(|id| !taken.contains(id) && !local.contains(id))
                .expect("unbounded")
        } else {
            n.id.clone()
        };
        taken.insert(id.clone());
        ids.insert(n.id.clone(), id);
    }
    for n in nodes {
        let member_of = n.member_of.as_ref().map(|p| ids.get(p).cloned().unwrap_or_else(|| p.clone()));
        g.insert(ConceptNode { id: ids[&n.id].clone(), member_of, ..n.clone() });
    }
    for (a, b) in prec {
        g.prec.insert((ids[a].clone(), ids[b].clone()));
    }
    g.repl.push(ReplGroup { lhs: lhs.to_vec(), rhs: nodes.iter().map(|n| ids[&n.id].clone()).collect() });
}

/// The student solution itself, in template vocabulary, as a template.
/// Declarations are dropped and their members lifted to the enclosing node.
pub(super) fn skeleton_template(template: &AlgorithmTemplate, student: &Cdg, result: &MatchResult) -> Cdg {
    let rename = inverse_vars(&template.cdg, student, result);
    let kept: BTreeSet<&NodeId> =
        student.nodes.values().filter(|n| n.kind != NodeKind::Declaration).map(|n| &n.id).collect();
    let lift = |mut p: Option<NodeId>| {
        while let Some(id) = p.as_ref().filter(|id| !kept.contains(id)) {
            p = student.nodes.get(id).and_then(|n| n.member_of.clone());
        }
        p
    };
    let mut g = Cdg::new();
    for n in student.nodes.values().filter(|n| kept.contains(&n.id)) {
        g.insert(ConceptNode {
            params: n.params.iter().map(|p| p.rename_vars(&rename).normalize()).collect(),
            member_of: lift(n.member_of.clone()),
            ..n.clone()
        });
    }
    g.prec = student.prec.iter().filter(|(a, b)| kept.contains(a) && kept.contains(b)).cloned().collect();
    g
}
