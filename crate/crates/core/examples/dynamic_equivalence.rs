//! Run two averaging programs on generated tests and report the first
//! input on which they disagree.
//!
//! cargo run --example dynamic_equivalence

use mindreader::dynamic::{dynamic_equiv, generate_tests, interpret, ComparePolicy, InputSpec, DEFAULT_STEP_LIMIT};
use mindreader::frontend::{parse, SourceProgram, VarClass};

const REFERENCE: &str = "void main() {
  int n, sum, xs[];
  read xs;
  n = xs.length;
  sum = 0;
  for (int i = 0; i < n; i++) { sum = sum + xs[i]; }
  print sum / n;
}
";

const STUDENT: &str = "void main() {
  int n, sum, xs[];
  read xs;
  n = xs.length;
  sum = 0;
  for (int i = 0; i < n; i++) { sum = sum + xs[i]; }
  print sum / (n - 1);
}
";

fn main() {
    let reference = parse(&SourceProgram::new("reference", REFERENCE)).expect("parses");
    let student = parse(&SourceProgram::new("student", STUDENT)).expect("parses");
    let mut spec = InputSpec::new(&[("xs", VarClass::List)]);
    spec.list_len = (2, 8);
    spec.int_range = (-50, 50);
    let tests = generate_tests(&spec, 10, 42).expect("valid spec");
    for (i, t) in tests.iter().enumerate() {
        let trace = interpret(&reference, t, DEFAULT_STEP_LIMIT);
        println!("test {i}: stdin {:?} -> {:?} in {} steps", t.stdin, trace.stdout, trace.steps);
    }
    let verdict = dynamic_equiv(&reference, &student, &tests, &ComparePolicy::default(), DEFAULT_STEP_LIMIT);
    match verdict.first_divergence {
        None => println!("equivalent on {} tests", verdict.tests_run),
        Some(d) => println!(
            "diverged after {} tests on stdin {:?}: reference {:?}, student {:?} ({:?})",
            verdict.tests_run, d.test.stdin, d.reference.stdout, d.student.stdout, d.kind
        ),
    }
}
