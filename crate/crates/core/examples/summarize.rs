//! Rewrite a program's CDG with the shipped concept rules until no rule
//! applies, printing each step and the resulting fixpoint.
//!
//! cargo run --example summarize [file.ml1]

use std::path::Path;

use mindreader::cdg::Cdg;
use mindreader::frontend::{abstract_program, SourceProgram};
use mindreader::summarizer::{load_rules, measure, summarize_lfp};

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let rules = load_rules(&std::fs::read_to_string(root.join("kb/rules/core.json")).expect("rule file"))
        .expect("valid rule file");
    let path = std::env::args().nth(1).unwrap_or_else(|| root.join("corpus/average_while.ml1").display().to_string());
    let text = std::fs::read_to_string(&path).expect("readable source file");
    let (_, ap) = abstract_program(&SourceProgram::new(&path, text)).expect("program parses");
    let base = Cdg::from_abstract_program(&ap).expect("well-formed abstract program");

    let (fixpoint, trace) = summarize_lfp(&base, &rules).expect("summarization terminates");
    println!("measure {} -> {}", measure(&base, &rules.hierarchy), measure(&fixpoint, &rules.hierarchy));
    for step in &trace.steps {
        let ids: Vec<&str> = step.matched.iter().map(|id| id.as_str()).collect();
        let n = &step.delta.added;
        let params: Vec<String> = n.params.iter().map(ToString::to_string).collect();
        println!("{:<28} [{}] => {} {}({})", step.rule_id, ids.join(" "), n.id, n.name, params.join(", "));
    }
    println!();
    for n in fixpoint.active_nodes() {
        let params: Vec<String> = n.params.iter().map(ToString::to_string).collect();
        let parent = n.member_of.as_ref().map_or("-", |p| p.as_str());
        println!("{:>4} {}({})  in {parent}", n.id, n.name, params.join(", "));
    }
    assert_eq!(trace.replay(&base), fixpoint);
}
