//! Match corpus fixpoints against the knowledgebase templates and show
//! scores, variable substitutions and the replacement sides used.
//!
//! cargo run --example match_templates

use std::path::Path;

use mindreader::cdg::Cdg;
use mindreader::frontend::{abstract_program, SourceProgram};
use mindreader::knowledgebase::Knowledgebase;
use mindreader::matcher::best_match;
use mindreader::summarizer::summarize_lfp;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let kb = Knowledgebase::load(&root.join("kb")).expect("knowledgebase loads");
    let templates: Vec<_> = kb.templates.values().cloned().collect();
    for file in [
        "swap_inline.ml1",
        "swap_function.ml1",
        "average_while.ml1",
        "average_for.ml1",
        "average_verbatim.ml1",
        "bubble_sentinel.ml1",
        "bubble_q.ml1",
    ] {
        let text = std::fs::read_to_string(root.join("corpus").join(file)).expect("corpus file");
        let (_, ap) = abstract_program(&SourceProgram::new(file, text)).expect("corpus parses");
        let base = Cdg::from_abstract_program(&ap).expect("well-formed");
        let (fixpoint, _) = summarize_lfp(&base, &kb.rules).expect("terminates");
        let (t, r) = best_match(&templates, &fixpoint).expect("templates present");
        let vars: Vec<String> = r.substitution.var_map.iter().map(|(a, b)| format!("{a}={b}")).collect();
        println!("{file:<22} {:<11} score {:.3}  sides {:?}  {{{}}}", t.id, r.score, r.variant_used, vars.join(", "));
        for id in &r.unmatched_template_nodes {
            println!("{:>24} missing {}", "", t.cdg.nodes[id].name);
        }
    }
}
