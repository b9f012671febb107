mod common;

use mindreader::dynamic::{
    compare_traces, dynamic_equiv, generate_tests, interpret, ComparePolicy, DivergenceKind, ErrorKind, ExecutionTrace,
    InputSpec, Outcome, TestCase, TestGenError, TestSuite, Value, DEFAULT_STEP_LIMIT,
};
use mindreader::frontend::{parse, Ast, SourceProgram, VarClass};
use proptest::prelude::*;

const GOLDEN: &str = "tests/golden/testgen_list_n8_seed7.json";

fn ast(text: &str) -> Ast {
    parse(&SourceProgram::new("p", text)).unwrap()
}

fn run(text: &str, stdin: Vec<i64>) -> ExecutionTrace {
    interpret(&ast(text), &TestCase { stdin, ..TestCase::default() }, DEFAULT_STEP_LIMIT)
}

fn list_spec() -> InputSpec {
    InputSpec::new(&[("l", VarClass::List)])
}

#[test]
fn swap_reference_golden_trace() {
    let t = run(&common::corpus("swap_inline.ml1"), vec![]);
    assert_eq!(t.outcome, Outcome::Completed);
    assert_eq!(t.stdout, ["Before", "27", "43", "After", "43", "27"]);
    assert_eq!(t.final_store["a"], Value::int(43));
    assert_eq!(t.final_store["b"], Value::int(27));
}

#[test]
fn swap_function_behaves_like_the_reference() {
    let a = run(&common::corpus("swap_inline.ml1"), vec![]);
    let b = run(&common::corpus("swap_function.ml1"), vec![]);
    assert_eq!(compare_traces(&a, &b, &ComparePolicy::default()), None);
}

#[test]
fn verbatim_average_reads_uninitialized_total() {
    let t = run(&common::corpus("average_verbatim.ml1"), vec![]);
    assert_eq!(t.outcome, Outcome::RuntimeError { kind: ErrorKind::Uninitialized, stmt_no: 5 });
}

#[test]
fn infinite_loop_stops_at_the_limit() {
    let t = interpret(&ast("void main() { while (true) { } }"), &TestCase::default(), 10_000);
    assert_eq!(t.outcome, Outcome::StepLimit);
    assert!(t.steps <= 10_000);
}

#[test]
fn reversed_output_diverges_at_the_first_token() {
    let r = run("void main() { print 43, 27; }", vec![]);
    let s = run("void main() { print 27, 43; }", vec![]);
    assert_eq!(compare_traces(&r, &s, &ComparePolicy::default()), Some(DivergenceKind::Stdout { index: 0 }));
    let crash = run("void main() { int x; print x; }", vec![]);
    assert_eq!(compare_traces(&r, &crash, &ComparePolicy::default()), Some(DivergenceKind::Crash));
}

#[test]
fn store_policy_compares_through_the_variable_map() {
    let r = run("void main() { int total; total = 5; }", vec![]);
    let s = run("void main() { int sum; sum = 5; }", vec![]);
    let mut policy = ComparePolicy { store_vars: vec!["total".into()], ..ComparePolicy::default() };
    assert!(matches!(compare_traces(&r, &s, &policy), Some(DivergenceKind::Store { .. })));
    policy.var_map.insert("total".into(), "sum".into());
    assert_eq!(compare_traces(&r, &s, &policy), None);
}

#[test]
fn sorting_programs_agree_on_generated_lists() {
    let tests = generate_tests(&list_spec(), 20, 3).unwrap();
    let v = dynamic_equiv(
        &ast(&common::corpus("bubble_sentinel.ml1")),
        &ast(&common::corpus("bubble_q.ml1")),
        &tests,
        &ComparePolicy::default(),
        DEFAULT_STEP_LIMIT,
    );
    assert!(v.equivalent, "{:?}", v.first_divergence);
    let reference = interpret(&ast(&common::corpus("bubble_sentinel.ml1")), &tests[5], DEFAULT_STEP_LIMIT);
    assert_eq!(reference.outcome, Outcome::Completed);
    assert_eq!(v.tests_run, 20);
}

#[test]
fn sorted_output_is_sorted() {
    for t in generate_tests(&list_spec(), 12, 11).unwrap() {
        let Value::List(items) = &t.input_bindings["l"] else { panic!() };
        let mut expected: Vec<String> = items.iter().map(|x| x.unwrap().to_string()).collect();
        expected.sort_by_key(|s| s.parse::<i64>().unwrap());
        let trace = interpret(&ast(&common::corpus("bubble_q.ml1")), &t, DEFAULT_STEP_LIMIT);
        assert_eq!(trace.stdout, [format!("[{}]", expected.join(","))]);
    }
}

#[test]
fn list_edge_cases_come_first() {
    let cases = generate_tests(&list_spec(), 8, 7).unwrap();
    assert_eq!(cases.len(), 8);
    let lens: Vec<usize> = cases.iter().map(|c| c.stdin[0] as usize).collect();
    assert_eq!(&lens[..4], [0, 1, 4, 5]);
    let all_equal = &cases[2].stdin[1..];
    assert!(all_equal.iter().all(|x| *x == all_equal[0]));
    let reversed = &cases[3].stdin[1..];
    assert!(reversed.windows(2).all(|w| w[0] >= w[1]));
    for c in &cases {
        assert_eq!(c.stdin.len(), c.stdin[0] as usize + 1);
        assert!(c.stdin[1..].iter().all(|x| (-1000..=1000).contains(x)));
    }
}

#[test]
fn list_generation_matches_golden_file() {
    let suite = TestSuite { spec: list_spec(), seed: 7, cases: generate_tests(&list_spec(), 8, 7).unwrap() };
    let text = serde_json::to_string_pretty(&suite).unwrap() + "\n";
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn single_test_is_the_first_edge_case() {
    let cases = generate_tests(&list_spec(), 1, 99).unwrap();
    assert_eq!(cases.len(), 1);
    assert_eq!(cases[0].stdin, [0]);
    assert_eq!(generate_tests(&list_spec(), 0, 1), Err(TestGenError::NoTests));
}

proptest! {
    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), n in 1usize..30, lo in 0usize..4) {
        let mut spec = InputSpec::new(&[("l", VarClass::List), ("k", VarClass::Scalar), ("f", VarClass::Boolean)]);
        spec.list_len = (lo, lo + 6);
        spec.int_range = (-5, 5);
        let a = generate_tests(&spec, n, seed).unwrap();
        prop_assert_eq!(&a, &generate_tests(&spec, n, seed).unwrap());
        for c in &a {
            let Value::List(items) = &c.input_bindings["l"] else { panic!() };
            prop_assert!((lo..=lo + 6).contains(&items.len()));
        }
    }

    #[test]
    fn interpretation_is_deterministic(text in common::arb_program(), stdin in prop::collection::vec(-9i64..9, 0..6)) {
        let a = run(&text, stdin.clone());
        prop_assert!(a.steps <= DEFAULT_STEP_LIMIT);
        prop_assert_eq!(run(&text, stdin), a);
    }
}
