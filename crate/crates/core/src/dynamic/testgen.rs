use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Scalar, TestCase, Value};
use crate::frontend::VarClass;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputVar {
    pub name: String,
    pub class: VarClass,
}

/// Shape and bounds of a program's inputs, in the order they are read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    #[serde(default)]
    pub inputs: Vec<InputVar>,
    #[serde(default = "default_int_range")]
    pub int_range: (i64, i64),
    #[serde(default = "default_list_len")]
    pub list_len: (usize, usize),
}

fn default_int_range() -> (i64, i64) {
    (-1000, 1000)
}

fn default_list_len() -> (usize, usize) {
    (0, 32)
}

impl Default for InputSpec {
    fn default() -> Self {
        InputSpec { inputs: Vec::new(), int_range: default_int_range(), list_len: default_list_len() }
    }
}

impl InputSpec {
    pub fn new(inputs: &[(&str, VarClass)]) -> Self {
        InputSpec {
            inputs: inputs.iter().map(|(n, c)| InputVar { name: n.to_string(), class: *c }).collect(),
            ..InputSpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), TestGenError> {
        let (lo, hi) = self.int_range;
        if lo > hi {
            return Err(TestGenError::InvalidSpec(format!("integer range {lo}..{hi} is empty")));
        }
        let (a, b) = self.list_len;
        if a > b || b > 100_000 {
            return Err(TestGenError::InvalidSpec(format!("list length range {a}..{b} is invalid")));
        }
        let mut seen = BTreeSet::new();
        for i in &self.inputs {
            if i.name.is_empty() || !seen.insert(&i.name) {
                return Err(TestGenError::InvalidSpec(format!("input name `{}` is empty or repeated", i.name)));
            }
        }
        Ok(())
    }

    fn has(&self, class: VarClass) -> bool {
        self.inputs.iter().any(|i| i.class == class)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TestGenError {
    #[error("invalid input specification: {0}")]
    InvalidSpec(String),
    #[error("test count must be at least 1")]
    NoTests,
}

/// Serializable test suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub spec: InputSpec,
    pub seed: u64,
    pub cases: Vec<TestCase>,
}

#[derive(Debug, Clone, Copy)]
enum Edge {
    EmptyList,
    Singleton,
    AllEqual,
    ReverseSorted,
    ScalarMin,
    ScalarMax,
}

fn edge_cases(spec: &InputSpec) -> Vec<Edge> {
    let mut out = Vec::new();
    let (lo, hi) = spec.list_len;
    if spec.has(VarClass::List) {
        if lo == 0 {
            out.push(Edge::EmptyList);
        }
        if lo <= 1 && hi >= 1 {
            out.push(Edge::Singleton);
        }
        out.push(Edge::AllEqual);
        out.push(Edge::ReverseSorted);
    }
    if spec.has(VarClass::Scalar) {
        out.push(Edge::ScalarMin);
        out.push(Edge::ScalarMax);
    }
    out
}

/// `n` test cases: the applicable edge cases first, then uniform random
/// cases. Deterministic in `seed` (ChaCha8 stream).
pub fn generate_tests(spec: &InputSpec, n: usize, seed: u64) -> Result<Vec<TestCase>, TestGenError> {
    spec.validate()?;
    if n == 0 {
        return Err(TestGenError::NoTests);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = edge_cases(spec);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let edge = edges.get(i).copied();
        let mut bindings = BTreeMap::new();
        let mut stdin = Vec::new();
        for input in &spec.inputs {
            let value = gen_value(spec, input.class, edge, &mut rng);
            match &value {
                Value::Scalar(Scalar::Int(v)) => stdin.push(*v),
                Value::Scalar(Scalar::Bool(b)) => stdin.push(i64::from(*b)),
                Value::List(items) => {
                    stdin.push(items.len() as i64);
                    stdin.extend(items.iter().map(|x| match x {
                        Some(Scalar::Int(v)) => *v,
                        Some(Scalar::Bool(b)) => i64::from(*b),
                        None => 0,
                    }));
                }
            }
            bindings.insert(input.name.clone(), value);
        }
        out.push(TestCase { input_bindings: bindings, stdin, seed });
    }
    Ok(out)
}

fn gen_value(spec: &InputSpec, class: VarClass, edge: Option<Edge>, rng: &mut ChaCha8Rng) -> Value {
    let (lo, hi) = spec.int_range;
    let (llo, lhi) = spec.list_len;
    let clamp = |n: usize| n.clamp(llo, lhi);
    match class {
        VarClass::Scalar => match edge {
            Some(Edge::ScalarMin) => Value::int(lo),
            Some(Edge::ScalarMax) => Value::int(hi),
            _ => Value::int(rng.random_range(lo..=hi)),
        },
        VarClass::Boolean => match edge {
            Some(Edge::ScalarMin) => Value::Scalar(Scalar::Bool(false)),
            Some(Edge::ScalarMax) => Value::Scalar(Scalar::Bool(true)),
            _ => Value::Scalar(Scalar::Bool(rng.random_bool(0.5))),
        },
        VarClass::List => {
            let items: Vec<i64> = match edge {
                Some(Edge::EmptyList) => Vec::new(),
                Some(Edge::Singleton) => vec![rng.random_range(lo..=hi)],
                Some(Edge::AllEqual) => {
                    let v = rng.random_range(lo..=hi);
                    vec![v; clamp(4)]
                }
                Some(Edge::ReverseSorted) => {
                    let mut v: Vec<i64> = (0..clamp(5)).map(|_| rng.random_range(lo..=hi)).collect();
                    v.sort_unstable_by(|a, b| b.cmp(a));
                    v
                }
                _ => {
                    let len = rng.random_range(llo..=lhi);
                    (0..len).map(|_| rng.random_range(lo..=hi)).collect()
                }
            };
            Value::ints(&items)
        }
    }
}
