use std::fmt::Write;

use super::{Cdg, NodeKind};

const PREAMBLE: &str = "  rankdir=TB;\n  node [fontname=\"Helvetica\"];\n";

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering. Declarations are boxes and computables ellipses;
/// precedence edges are solid, replacement edges dashed and membership
/// edges dotted. Absorbed nodes are drawn gray.
pub fn to_dot(g: &Cdg) -> String {
    let mut out = String::from("digraph cdg {\n");
    out.push_str(PREAMBLE);
    for n in g.nodes.values() {
        let params: Vec<String> = n.params.iter().map(ToString::to_string).collect();
        let label = format!("{}: {}({})", n.id, n.name, params.join(", "));
        let shape = match n.kind {
            NodeKind::Declaration => "box",
            NodeKind::Computable => "ellipse",
        };
        let color = if n.absorbed { ", color=gray, fontcolor=gray" } else { "" };
        let _ = writeln!(out, "  {} [label={}, shape={shape}{color}];", quote(n.id.as_str()), quote(&label));
    }
    for (a, b) in &g.prec {
        let _ = writeln!(out, "  {} -> {} [style=solid];", quote(a.as_str()), quote(b.as_str()));
    }
    for n in g.nodes.values() {
        if let Some(p) = &n.member_of {
            let _ =
                writeln!(out, "  {} -> {} [style=dotted, arrowhead=none];", quote(p.as_str()), quote(n.id.as_str()));
        }
    }
    for grp in &g.repl {
        if let (Some(a), Some(b)) = (grp.lhs.first(), grp.rhs.first()) {
            let _ = writeln!(out, "  {} -> {} [style=dashed, dir=both];", quote(a.as_str()), quote(b.as_str()));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdg::ConceptNode;

    #[test]
    fn empty_graph() {
        assert_eq!(to_dot(&Cdg::new()), format!("digraph cdg {{\n{PREAMBLE}}}\n"));
    }

    #[test]
    fn edge_styles() {
        let mut g = Cdg::new();
        g.insert(ConceptNode::computable("s1", "funcDef", 0, vec![]));
        g.insert(ConceptNode::computable("s2", "assign", 0, vec![]).member_of("s1"));
        g.insert(ConceptNode::computable("s3", "assign", 0, vec![]).member_of("s1"));
        g.add_prec("s2", "s3");
        let dot = to_dot(&g);
        assert!(dot.contains("\"s2\" -> \"s3\" [style=solid]"));
        assert!(dot.contains("\"s1\" -> \"s2\" [style=dotted"));
        assert!(dot.contains("shape=ellipse"));
    }
}
