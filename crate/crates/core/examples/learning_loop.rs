//! Grade an unfamiliar bubble sort, accept the queued proposal, and grade
//! it again. Works on a temporary copy of the shipped knowledgebase.
//!
//! cargo run --example learning_loop

use std::path::Path;

use mindreader::grader::{grade, GraderConfig};
use mindreader::knowledgebase::{Decision, Knowledgebase, Proposal};

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut kb = Knowledgebase::load(&root.join("kb")).expect("knowledgebase loads");
    let source = std::fs::read_to_string(root.join("corpus/bubble_q.ml1")).expect("corpus file");
    let cfg = GraderConfig::default();

    let first = grade(&mut kb, "bubble_q.ml1", &source, "bubbleSort", &cfg);
    print!("{}", first.to_text());
    let entry = first.queue_entry.clone().expect("a behavioural pass is queued");
    match &kb.queue[&entry].proposal {
        Proposal::ReplAlternative { lhs, nodes, .. } => {
            let names: Vec<&str> = nodes.iter().filter(|n| !n.absorbed).map(|n| n.name.as_str()).collect();
            println!("proposal: replace {} template nodes by {}", lhs.len(), names.join(", "));
        }
        Proposal::SiblingTemplate { template_id, .. } => println!("proposal: new template {template_id}"),
    }

    kb.curate(&entry, Decision::Accept).expect("pending entry");
    let dir = std::env::temp_dir().join(format!("mindreader-learning-{}", std::process::id()));
    kb.save(&dir).expect("writable temp dir");
    let mut reloaded = Knowledgebase::load(&dir).expect("saved knowledgebase loads");
    let second = grade(&mut reloaded, "bubble_q.ml1", &source, "bubbleSort", &cfg);
    print!("{}", second.to_text());
    println!("knowledgebase version {} -> {}", kb.version - 2, reloaded.version);
    std::fs::remove_dir_all(&dir).ok();
}
