//! One test per acceptance criterion. Each prints a single verdict line to
//! the process stdout (bypassing libtest capture) before asserting.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use mindreader::cdg::{deserialize, serialize, Cdg};
use mindreader::dynamic::{interpret, ErrorKind, Outcome, TestCase, DEFAULT_STEP_LIMIT};
use mindreader::frontend::{parse, SourceProgram};
use mindreader::grader::{grade, GradeReport, GradeStatus, GraderConfig};
use mindreader::knowledgebase::{AlgorithmTemplate, Decision, EntryStatus, Knowledgebase};
use mindreader::matcher::match_template;
use mindreader::summarizer::{load_rules, measure, save_rules, summarize_lfp, RuleSet};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SWAP_LIMIT: Duration = Duration::from_secs(1);
const LEARN_LIMIT: Duration = Duration::from_secs(5);
const ORACLE_LIMIT: Duration = Duration::from_secs(60);
const ORACLE_PAIRS: usize = 500;
const RANDOM_CDGS: usize = 1000;
const ROUND_TRIPS: usize = 1000;

fn verdict(n: u32, title: &str, pass: bool, detail: String) {
    let line = format!("criterion {n} {title}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{}", line.trim_end());
}

fn samples<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::deterministic();
    (0..n).map(|_| strategy.new_tree(&mut runner).unwrap().current()).collect()
}

fn grade_file(kb: &mut Knowledgebase, file: &str, template: &str) -> GradeReport {
    grade(kb, file, &common::corpus(file), template, &GraderConfig::default())
}

#[test]
fn criterion_1_swap_equivalence() {
    let mut kb = common::shipped_kb();
    let mut ok = true;
    let mut detail = Vec::new();
    for file in ["swap_inline.ml1", "swap_function.ml1"] {
        let start = Instant::now();
        let r = grade_file(&mut kb, file, "swap");
        let took = start.elapsed();
        ok &= r.status == GradeStatus::ConceptVerified && r.score == Some(1.0) && took < SWAP_LIMIT;
        detail.push(format!("{file} {} score {:?} in {} ms", r.status.as_str(), r.score, took.as_millis()));
    }
    detail.push(format!("limit {} ms each", SWAP_LIMIT.as_millis()));
    verdict(1, "swap equivalence", ok, detail.join(", "));
}

#[test]
fn criterion_2_average_equivalence() {
    let mut kb = common::shipped_kb();
    let mut ok = true;
    let mut variants = Vec::new();
    for file in ["average_while.ml1", "average_for.ml1"] {
        let (_, fx, _) = common::fixpoint(&common::corpus(file), &kb.rules);
        let has_average = common::active_names(&fx).iter().any(|n| n == "average");
        let r = grade_file(&mut kb, file, "average");
        ok &= has_average && r.status == GradeStatus::ConceptVerified && r.score == Some(1.0);
        variants.push(r.variant_used);
    }
    ok &= variants[0] != variants[1];
    verdict(2, "average equivalence", ok, format!("variants {:?} vs {:?}", variants[0], variants[1]));
}

#[test]
fn criterion_3_bubble_sort_learning_loop() {
    let dir = common::kb_copy();
    let start = Instant::now();
    let mut kb = Knowledgebase::load(dir.path()).unwrap();
    let cfg = GraderConfig { tests: 20, ..GraderConfig::default() };
    let src = common::corpus("bubble_q.ml1");
    let first = grade(&mut kb, "bubble_q.ml1", &src, "bubbleSort", &cfg);
    let entry = first.queue_entry.clone().unwrap_or_default();
    let accepted = kb.curate(&entry, Decision::Accept).is_ok();
    kb.save(dir.path()).unwrap();
    let mut kb = Knowledgebase::load(dir.path()).unwrap();
    let second = grade(&mut kb, "bubble_q.ml1", &src, "bubbleSort", &cfg);
    let took = start.elapsed();
    let ok = first.status == GradeStatus::BehaviourVerifiedPendingCuration
        && first.score.is_some_and(|s| s < 1.0)
        && first.tests_run == 20
        && accepted
        && kb.queue[&entry].status == EntryStatus::Accepted
        && second.status == GradeStatus::ConceptVerified
        && took < LEARN_LIMIT;
    verdict(
        3,
        "bubble sort learning loop",
        ok,
        format!(
            "before {} score {:?}, after {} score {:?}, {} ms, limit {} ms",
            first.status.as_str(),
            first.score,
            second.status.as_str(),
            second.score,
            took.as_millis(),
            LEARN_LIMIT.as_millis()
        ),
    );
}

#[test]
fn criterion_4_rejection_with_witness() {
    let mut kb = common::shipped_kb();
    let r = grade_file(&mut kb, "average_off_by_one.ml1", "average");
    let w = r.witness.as_ref();
    let differs = w.is_some_and(|w| !w.stdin.is_empty() && w.expected_stdout != w.actual_stdout);
    let shown = r.diagnostics.iter().any(|d| d.contains("with input") && d.contains("expected output"));
    let ok = r.status == GradeStatus::Rejected && differs && shown;
    let detail = match w {
        Some(w) => format!("stdin {:?}, expected {:?}, got {:?}", w.stdin, w.expected_stdout, w.actual_stdout),
        None => format!("status {}, no witness", r.status.as_str()),
    };
    verdict(4, "rejection path", ok, detail);
}

#[test]
fn criterion_5_matcher_oracle() {
    let start = Instant::now();
    let pairs = samples(common::arb_match_pair(), ORACLE_PAIRS);
    let mut agree = 0;
    let mut full = 0;
    for (t, c) in &pairs {
        let mine = match_template(t, c).unwrap().score == 1.0;
        let oracle = common::oracle_full_match(t, c);
        agree += usize::from(mine == oracle);
        full += usize::from(oracle);
    }
    let took = start.elapsed();
    let ok = pairs.len() >= ORACLE_PAIRS && agree == pairs.len() && took < ORACLE_LIMIT;
    verdict(
        5,
        "matcher oracle equivalence",
        ok,
        format!(
            "{agree}/{} agree, {full} full embeddings, {} ms, limit {} s",
            pairs.len(),
            took.as_millis(),
            ORACLE_LIMIT.as_secs()
        ),
    );
}

#[test]
fn criterion_6_fixpoint_properties() {
    let rules = common::shipped_kb().rules;
    let mut graphs: Vec<Cdg> = common::CORPUS.iter().map(|f| common::base_cdg(&common::corpus(f))).collect();
    graphs.extend(samples(common::arb_program(), RANDOM_CDGS).iter().map(|p| common::base_cdg(p)));
    let mut failures = Vec::new();
    let mut steps = 0;
    for (i, base) in graphs.iter().enumerate() {
        let (fx, trace) = summarize_lfp(base, &rules).unwrap();
        let (fx2, trace2) = summarize_lfp(base, &rules).unwrap();
        let (again, more) = summarize_lfp(&fx, &rules).unwrap();
        let bound = measure(base, &rules.hierarchy);
        let mut g = base.clone();
        let mut decreasing = true;
        for step in &trace.steps {
            let next = g.apply_delta(&step.delta);
            decreasing &= measure(&next, &rules.hierarchy) < measure(&g, &rules.hierarchy);
            g = next;
        }
        steps += trace.steps.len();
        let ok = trace.steps.len() as u64 <= bound
            && decreasing
            && g == fx
            && more.steps.is_empty()
            && again == fx
            && serialize(&fx2) == serialize(&fx)
            && trace2 == trace;
        if !ok {
            failures.push(i);
        }
    }
    verdict(
        6,
        "fixpoint properties",
        failures.is_empty(),
        format!("{} graphs, {steps} rewrite steps, failing {:?}", graphs.len(), failures),
    );
}

#[test]
fn criterion_7_interpreter_golden_traces() {
    let run = |file: &str| {
        let ast = parse(&SourceProgram::new(file, common::corpus(file))).unwrap();
        interpret(&ast, &TestCase::default(), DEFAULT_STEP_LIMIT)
    };
    let swap = run("swap_inline.ml1");
    let verbatim = run("average_verbatim.ml1");
    let ok = swap.outcome == Outcome::Completed
        && swap.stdout == ["Before", "27", "43", "After", "43", "27"]
        && verbatim.outcome == Outcome::RuntimeError { kind: ErrorKind::Uninitialized, stmt_no: 5 };
    verdict(7, "interpreter golden traces", ok, format!("swap {:?}, verbatim {:?}", swap.stdout, verbatim.outcome));
}

#[test]
fn criterion_8_batch_determinism() {
    let batch = |kb: &std::path::Path| {
        let out = Command::new(env!("CARGO_BIN_EXE_mindreader"))
            .arg("--kb")
            .arg(kb)
            .args(["batch", "corpus/manifest.tsv", "--json", "--seed", "0"])
            .current_dir(common::root())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let (a, b) = (common::kb_copy(), common::kb_copy());
    let first = batch(a.path());
    let second = batch(a.path());
    let fresh = batch(b.path());
    let ok = !first.is_empty() && first == second && first == fresh;
    verdict(8, "batch determinism", ok, format!("{} bytes per run, 3 runs", first.len()));
}

fn random_rules(base: &RuleSet, rng: &mut ChaCha8Rng) -> RuleSet {
    let mut rules: Vec<_> = base.rules.iter().filter(|_| rng.random_bool(0.7)).cloned().collect();
    rules.shuffle(rng);
    for r in &mut rules {
        r.priority = rng.random_range(-5..=5);
    }
    RuleSet::new(base.declared_ranks(), rules).unwrap()
}

#[test]
fn criterion_9_serialization_round_trips() {
    let shipped = common::shipped_kb();
    let mut seeded = shipped.clone();
    grade_file(&mut seeded, "bubble_q.ml1", "bubbleSort");
    let entry = seeded.queue.values().next().unwrap().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    let cdgs = samples(common::arb_cdg(10, true), ROUND_TRIPS);
    let cdg_ok = cdgs.iter().filter(|g| deserialize(&serialize(g)).as_ref() == Ok(*g)).count();

    let rule_sets: Vec<RuleSet> = (0..ROUND_TRIPS).map(|_| random_rules(&shipped.rules, &mut rng)).collect();
    let rules_ok = rule_sets.iter().filter(|r| load_rules(&save_rules(r)).as_ref() == Ok(*r)).count();

    let valid = common::arb_cdg(8, true).prop_filter("valid", |g| g.validate().is_valid());
    let template_cdgs = samples(valid, ROUND_TRIPS);
    let base_template = shipped.template("average").unwrap().clone();
    let templates: Vec<AlgorithmTemplate> = template_cdgs
        .into_iter()
        .enumerate()
        .map(|(i, cdg)| AlgorithmTemplate { id: format!("t{i:04}"), cdg, ..base_template.clone() })
        .collect();
    let path = std::path::Path::new("template.json");
    let templates_ok =
        templates.iter().filter(|t| AlgorithmTemplate::from_json(&t.to_json(), path).as_ref() == Ok(*t)).count();

    let mut kbs_ok = 0;
    for rules in &rule_sets {
        let mut kb = Knowledgebase::new(rules.clone());
        kb.version = rng.random_range(0..1000);
        let picks = rng.random_range(0..4);
        for t in templates.choose_multiple(&mut rng, picks) {
            kb.templates.insert(t.id.clone(), t.clone());
        }
        if rng.random_bool(0.5) {
            kb.templates.insert("bubbleSort".into(), shipped.template("bubbleSort").unwrap().clone());
            let mut e = entry.clone();
            e.entry_id = format!("q{:04}", rng.random_range(1..10_000));
            e.status = *[EntryStatus::Pending, EntryStatus::Accepted, EntryStatus::Rejected].choose(&mut rng).unwrap();
            kb.queue.insert(e.entry_id.clone(), e);
        }
        let dir = tempfile::tempdir().unwrap();
        kb.save(dir.path()).unwrap();
        kbs_ok += usize::from(Knowledgebase::load(dir.path()).as_ref() == Ok(&kb));
    }

    let counts = BTreeMap::from([("cdg", cdg_ok), ("rules", rules_ok), ("template", templates_ok), ("kb", kbs_ok)]);
    let ok = counts.values().all(|c| *c == ROUND_TRIPS);
    let detail = counts.iter().map(|(k, v)| format!("{k} {v}/{ROUND_TRIPS}")).collect::<Vec<_>>().join(", ");
    verdict(9, "serialization round-trips", ok, detail);
}
