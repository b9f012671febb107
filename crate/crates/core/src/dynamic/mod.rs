//! Behavioural comparison of a reference and a student program: a
//! tree-walking interpreter, a seeded test generator and trace comparison.

mod interp;
mod testgen;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{Ast, BaseType};
use crate::frontend::StmtNo;

pub use interp::{interpret, DEFAULT_STEP_LIMIT, MAX_CALL_DEPTH};
pub use testgen::{generate_tests, InputSpec, InputVar, TestGenError, TestSuite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Bool(bool),
}

impl Scalar {
    pub fn base_type(self) -> BaseType {
        match self {
            Scalar::Int(_) => BaseType::Int,
            Scalar::Bool(_) => BaseType::Bool,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// A variable's value. List elements may be uninitialized (`null`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(Scalar),
    List(Vec<Option<Scalar>>),
}

impl Value {
    pub fn int(v: i64) -> Value {
        Value::Scalar(Scalar::Int(v))
    }

    pub fn ints(v: &[i64]) -> Value {
        Value::List(v.iter().map(|x| Some(Scalar::Int(*x))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TestCase {
    /// Initial values for matching uninitialized declarations in `main`
    /// or at the top level.
    pub input_bindings: BTreeMap<String, Value>,
    /// Consumed by `read`; a list reads as its length followed by its items.
    pub stdin: Vec<i64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Uninitialized,
    Undeclared,
    DivisionByZero,
    Overflow,
    IndexOutOfBounds,
    InputExhausted,
    TypeMismatch,
    StackOverflow,
    MissingReturn,
    UnknownFunction,
    ArityMismatch,
    UnsupportedReference,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Uninitialized => "uninitialized",
            ErrorKind::Undeclared => "undeclared",
            ErrorKind::DivisionByZero => "division_by_zero",
            ErrorKind::Overflow => "overflow",
            ErrorKind::IndexOutOfBounds => "index_out_of_bounds",
            ErrorKind::InputExhausted => "input_exhausted",
            ErrorKind::TypeMismatch => "type_mismatch",
            ErrorKind::StackOverflow => "stack_overflow",
            ErrorKind::MissingReturn => "missing_return",
            ErrorKind::UnknownFunction => "unknown_function",
            ErrorKind::ArityMismatch => "arity_mismatch",
            ErrorKind::UnsupportedReference => "unsupported_reference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    StepLimit,
    RuntimeError { kind: ErrorKind, stmt_no: StmtNo },
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Completed => f.write_str("completed"),
            Outcome::StepLimit => f.write_str("step limit reached"),
            Outcome::RuntimeError { kind, stmt_no } => {
                write!(f, "runtime error ({}) at statement {stmt_no}", kind.as_str())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub stdout: Vec<String>,
    pub final_store: BTreeMap<String, Value>,
    pub steps: u64,
    pub outcome: Outcome,
}

/// What counts as observable behaviour.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComparePolicy {
    /// Reference-side variables whose final values must also agree.
    #[serde(default)]
    pub store_vars: Vec<String>,
    /// Reference variable name to student variable name.
    #[serde(default)]
    pub var_map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivergenceKind {
    /// The programs ended differently (one crashed, hit the step limit, or
    /// they crashed with different error kinds).
    Crash,
    Stdout {
        index: usize,
    },
    Store {
        variable: String,
    },
}

pub fn compare_traces(
    reference: &ExecutionTrace,
    student: &ExecutionTrace,
    policy: &ComparePolicy,
) -> Option<DivergenceKind> {
    let same_end = match (&reference.outcome, &student.outcome) {
        (Outcome::RuntimeError { kind: a, .. }, Outcome::RuntimeError { kind: b, .. }) => a == b,
        (a, b) => a == b,
    };
    if !same_end {
        return Some(DivergenceKind::Crash);
    }
    let (r, s) = (&reference.stdout, &student.stdout);
    if let Some(i) = (0..r.len().max(s.len())).find(|&i| r.get(i) != s.get(i)) {
        return Some(DivergenceKind::Stdout { index: i });
    }
    for var in &policy.store_vars {
        let stu = policy.var_map.get(var).unwrap_or(var);
        if reference.final_store.get(var) != student.final_store.get(stu) {
            return Some(DivergenceKind::Store { variable: var.clone() });
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub test: TestCase,
    pub reference: ExecutionTrace,
    pub student: ExecutionTrace,
    pub kind: DivergenceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub tests_run: usize,
    pub first_divergence: Option<Divergence>,
}

/// Run every test on both programs, stopping at the first divergence.
pub fn dynamic_equiv(
    reference: &Ast,
    student: &Ast,
    tests: &[TestCase],
    policy: &ComparePolicy,
    step_limit: u64,
) -> EquivalenceVerdict {
    for (i, t) in tests.iter().enumerate() {
        let r = interpret(reference, t, step_limit);
        let s = interpret(student, t, step_limit);
        if let Some(kind) = compare_traces(&r, &s, policy) {
            return EquivalenceVerdict {
                equivalent: false,
                tests_run: i + 1,
                first_divergence: Some(Divergence { test: t.clone(), reference: r, student: s, kind }),
            };
        }
    }
    EquivalenceVerdict { equivalent: true, tests_run: tests.len(), first_divergence: None }
}
