//! Grade a submission and print the JSON report.
//!
//! cargo run --example grade_submission [file.ml1 template_id]

use std::path::Path;

use mindreader::grader::{grade, GraderConfig};
use mindreader::knowledgebase::Knowledgebase;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut args = std::env::args().skip(1);
    let file = args.next().unwrap_or_else(|| root.join("corpus/average_off_by_one.ml1").display().to_string());
    let template = args.next().unwrap_or_else(|| "average".to_string());
    let mut kb = Knowledgebase::load(&root.join("kb")).expect("knowledgebase loads");
    let source = std::fs::read_to_string(&file).expect("readable source file");
    let report =
        grade(&mut kb, &file, &source, &template, &GraderConfig { tests: 30, seed: 7, ..GraderConfig::default() });
    println!("{}", report.to_json());
}
