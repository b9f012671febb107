mod common;

use mindreader::cdg::{deserialize, serialize, to_dot, Cdg, CdgError, NodeId, NodeKind};
use mindreader::frontend::{abstract_program, SourceProgram};
use proptest::prelude::*;

#[test]
fn empty_main_gives_a_single_funcdef() {
    let g = common::base_cdg("void main() { }");
    assert_eq!(g.len(), 1);
    assert_eq!(g.nodes[&NodeId::new("s1")].name, "funcDef");
}

#[test]
fn malformed_documents_report_position() {
    match deserialize("{\n  \"version\": 1,\n  \"nodes\": [,]\n}") {
        Err(CdgError::MalformedDocument { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(deserialize(r#"{"version": 9, "nodes": []}"#), Err(CdgError::SchemaVersionMismatch(9))));
}

#[test]
fn dot_uses_distinct_edge_styles() {
    let kb = common::shipped_kb();
    let dot = to_dot(&kb.templates["average"].cdg);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("style=solid"));
    assert!(dot.contains("style=dotted"));
    assert!(dot.contains("style=dashed"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn json_round_trip(g in common::arb_cdg(10, true)) {
        let text = serialize(&g);
        prop_assert_eq!(deserialize(&text).unwrap(), g.clone());
        prop_assert_eq!(serialize(&deserialize(&text).unwrap()), text);
    }

    #[test]
    fn generated_graphs_validate(g in common::arb_cdg(10, true)) {
        let report = g.validate();
        prop_assert!(
            report.issues.iter().all(|i| matches!(i, mindreader::cdg::Issue::SimpleNotConnected(_))),
            "{:?}", report.issues
        );
    }

    #[test]
    fn base_graph_mirrors_the_abstract_program(text in common::arb_program()) {
        let (_, ap) = abstract_program(&SourceProgram::new("p", text)).unwrap();
        let g = Cdg::from_abstract_program(&ap).unwrap();
        prop_assert_eq!(g.len(), ap.statements.len());
        prop_assert!(g.validate().is_valid());
        for s in &ap.statements {
            let n = &g.nodes[&NodeId::stmt(s.number())];
            prop_assert_eq!(n.member_of.clone(), s.container().map(NodeId::stmt));
            prop_assert_eq!(n.level, 0);
            prop_assert!(!n.absorbed);
            prop_assert_eq!(n.kind == NodeKind::Declaration, n.name == "declaration");
        }
        let prec: Vec<(NodeId, NodeId)> =
            ap.precedence.iter().map(|(a, b)| (NodeId::stmt(*a), NodeId::stmt(*b))).collect();
        prop_assert_eq!(g.prec.iter().cloned().collect::<Vec<_>>(), prec);
    }
}
