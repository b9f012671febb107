use super::*;
use crate::frontend::{abstract_program, SourceProgram};

const COUNTER_RULE: &str = r#"{
  "version": 1,
  "hierarchy": {"counterLoop": 1},
  "rules": [{
    "rule_id": "counterLoop-from-while",
    "priority": 1,
    "lhs": {
      "nodes": [
        {"id": "i", "name": "assign", "params": ["k", "?s"]},
        {"id": "w", "name": "whileLoop", "params": ["cond(?c)"]},
        {"id": "u", "name": "increment", "params": ["k", "?u"]}
      ],
      "prec": [["i", "w"]],
      "membership": [["u", "w"]]
    },
    "rhs": {"name": "counterLoop", "params": ["k", "?s", "cond(?c)", "?u"]}
  }]
}"#;

fn base(src: &str) -> Cdg {
    let (_, ap) = abstract_program(&SourceProgram::new("t", src)).unwrap();
    Cdg::from_abstract_program(&ap).unwrap()
}

fn rule_error(text: &str) -> String {
    match load_rules(text) {
        Err(SummarizerError::RuleSetInvalid { rule_id, .. }) => rule_id,
        other => panic!("expected RuleSetInvalid, got {other:?}"),
    }
}

#[test]
fn counter_loop_collapses() {
    let rules = load_rules(COUNTER_RULE).unwrap();
    let g = base("void main() {\n int k, s;\n k = 0;\n while (k < 10) {\n s = k;\n k++;\n }\n}");
    let (g2, delta) = apply_rule_once(&g, &rules.rules[0], &rules.hierarchy).unwrap();
    assert_eq!(delta.added.name, "counterLoop");
    assert_eq!(delta.added.params[2].to_string(), "cond(k < 10)");
    assert_eq!(delta.added.member_of, Some(NodeId::new("s1")));
    let absorbed: Vec<&str> = delta.absorbed.iter().map(NodeId::as_str).collect();
    assert_eq!(absorbed, ["s3", "s4", "s6"]);
    assert_eq!(g2.nodes[&NodeId::new("s5")].member_of, Some(delta.added.id.clone()));
    assert!(g2.prec.contains(&(NodeId::new("s2"), delta.added.id.clone())));
}

#[test]
fn no_loop_no_application() {
    let rules = load_rules(COUNTER_RULE).unwrap();
    let g = base("void main() {\n int k;\n k = 0;\n print k;\n}");
    assert!(apply_rule_once(&g, &rules.rules[0], &rules.hierarchy).is_none());
}

#[test]
fn smaller_ids_collapse_first() {
    let rules = load_rules(COUNTER_RULE).unwrap();
    let g = base(
        "void main() {\n int a, b;\n a = 0;\n while (a < 3) {\n a++;\n }\n b = 0;\n while (b < 3) {\n b++;\n }\n}",
    );
    let (_, delta) = apply_rule_once(&g, &rules.rules[0], &rules.hierarchy).unwrap();
    assert_eq!(delta.added.params[0], Term::var("a"));
    let (fix, trace) = summarize_lfp(&g, &rules).unwrap();
    assert_eq!(trace.steps.len(), 2);
    assert_eq!(trace.steps[0].matched.iter().map(NodeId::as_str).collect::<Vec<_>>(), ["s3", "s4", "s5"]);
    assert_eq!(trace.replay(&g), fix);
}

#[test]
fn empty_rule_file_is_identity() {
    let rules = load_rules(r#"{"version": 1, "hierarchy": {}, "rules": []}"#).unwrap();
    let g = base("void main() {\n int k;\n k = 0;\n while (k < 3) {\n k++;\n }\n}");
    let (fix, trace) = summarize_lfp(&g, &rules).unwrap();
    assert_eq!(fix, g);
    assert!(trace.steps.is_empty());
}

#[test]
fn fixpoint_is_idempotent() {
    let rules = load_rules(COUNTER_RULE).unwrap();
    let g = base("void main() {\n int k;\n k = 0;\n while (k < 3) {\n k++;\n }\n}");
    let (fix, _) = summarize_lfp(&g, &rules).unwrap();
    let (again, trace) = summarize_lfp(&fix, &rules).unwrap();
    assert_eq!(again, fix);
    assert!(trace.steps.is_empty());
}

#[test]
fn measure_drops_on_each_step() {
    let rules = load_rules(COUNTER_RULE).unwrap();
    let g = base("void main() {\n int k;\n k = 0;\n while (k < 3) {\n k++;\n }\n}");
    let (fix, _) = summarize_lfp(&g, &rules).unwrap();
    assert!(measure(&fix, &rules.hierarchy) < measure(&g, &rules.hierarchy));
}

#[test]
fn rank_violation_is_rejected() {
    let text = COUNTER_RULE.replace("\"counterLoop\": 1", "\"counterLoop\": 0");
    assert_eq!(rule_error(&text), "counterLoop-from-while");
}

#[test]
fn unbound_meta_is_rejected() {
    let text = COUNTER_RULE.replace("\"cond(?c)\", \"?u\"]", "\"cond(?c)\", \"?z\"]");
    assert_eq!(rule_error(&text), "counterLoop-from-while");
}

#[test]
fn all_keep_is_rejected() {
    let text = r#"{"version": 1, "hierarchy": {"x": 1}, "rules": [{"rule_id": "r", "lhs": {"nodes": [
        {"id": "a", "name": "assign", "keep": true}]}, "rhs": {"name": "x"}}]}"#;
    assert_eq!(rule_error(text), "r");
}

#[test]
fn malformed_rule_document() {
    assert!(matches!(load_rules("{\"version\": 1,"), Err(SummarizerError::MalformedDocument { line: 1, .. })));
    assert_eq!(load_rules(r#"{"version": 7}"#), Err(SummarizerError::SchemaVersionMismatch(7)));
}

#[test]
fn rules_round_trip() {
    let rules = load_rules(COUNTER_RULE).unwrap();
    assert_eq!(load_rules(&save_rules(&rules)).unwrap(), rules);
}
