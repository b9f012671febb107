//! Build the base concept dependence graph of a program and print it as
//! Graphviz and as JSON.
//!
//! cargo run --example build_cdg | dot -Tsvg > base.svg

use mindreader::cdg::{serialize, to_dot, Cdg};
use mindreader::frontend::{abstract_program, SourceProgram};

const PROGRAM: &str = "void main() {
  int k, total, elements[];
  read elements;
  k = 0;
  total = 0;
  while (k < elements.length) {
    total = total + elements[k];
    k++;
  }
  print total;
}
";

fn main() {
    let (_, ap) = abstract_program(&SourceProgram::new("sum", PROGRAM)).expect("program parses");
    let g = Cdg::from_abstract_program(&ap).expect("well-formed abstract program");
    let report = g.validate();
    assert!(report.is_valid(), "{:?}", report.issues);
    print!("{}", to_dot(&g));
    eprintln!("{}", serialize(&g));
}
