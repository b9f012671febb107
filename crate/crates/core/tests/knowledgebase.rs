mod common;

use mindreader::dynamic::EquivalenceVerdict;
use mindreader::grader::{grade, GradeStatus, GraderConfig};
use mindreader::knowledgebase::{
    AlgorithmTemplate, Decision, EntryStatus, KbError, Knowledgebase, Proposal, Provenance,
};
use mindreader::matcher::match_template;
use proptest::prelude::*;

fn grade_q(kb: &mut Knowledgebase) -> mindreader::grader::GradeReport {
    grade(kb, "bubble_q.ml1", &common::corpus("bubble_q.ml1"), "bubbleSort", &GraderConfig::default())
}

fn score(kb: &Knowledgebase, template: &str, program: &str) -> f64 {
    let (_, fx, _) = common::fixpoint(&common::corpus(program), &kb.rules);
    match_template(&kb.template(template).unwrap().cdg, &fx).unwrap().score
}

#[test]
fn empty_directory_is_not_a_knowledgebase() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(Knowledgebase::load(dir.path()), Err(KbError::MissingKnowledgebase(_))));
}

#[test]
fn shipped_knowledgebase_round_trips() {
    let kb = common::shipped_kb();
    assert_eq!(kb.templates.keys().collect::<Vec<_>>(), ["average", "bubbleSort", "swap"]);
    assert!(kb.templates.values().all(|t| t.provenance == Provenance::Authored));
    let dir = common::kb_copy();
    assert_eq!(Knowledgebase::load(dir.path()).unwrap(), kb);
}

#[test]
fn unknown_template_is_reported() {
    let kb = common::shipped_kb();
    assert_eq!(kb.family("quickSort").unwrap_err(), KbError::UnknownTemplate("quickSort".into()));
}

#[test]
fn pending_entries_are_reused_and_do_not_change_matching() {
    let mut kb = common::shipped_kb();
    let before = kb.clone();
    let first = grade_q(&mut kb);
    assert_eq!(first.status, GradeStatus::BehaviourVerifiedPendingCuration);
    assert_eq!(first.queue_entry.as_deref(), Some("q0001"));
    assert_eq!(kb.version, before.version + 1);
    assert_eq!(kb.templates, before.templates);

    let second = grade_q(&mut kb);
    assert_eq!(second.queue_entry.as_deref(), Some("q0001"));
    assert_eq!(second.score, first.score);
    assert_eq!(kb.version, before.version + 1);
    assert_eq!(kb.queue.len(), 1);
}

#[test]
fn accepted_alternative_recognises_the_submission() {
    let mut kb = common::shipped_kb();
    let entry = grade_q(&mut kb).queue_entry.unwrap();
    assert!(score(&kb, "bubbleSort", "bubble_q.ml1") < 1.0);
    let Proposal::ReplAlternative { lhs, .. } = &kb.queue[&entry].proposal else { panic!("expected an alternative") };
    assert_eq!(lhs.len(), 4);

    let v = kb.version;
    kb.curate(&entry, Decision::Accept).unwrap();
    assert!(kb.version > v);
    assert_eq!(kb.queue[&entry].status, EntryStatus::Accepted);
    let t = kb.template("bubbleSort").unwrap();
    assert_eq!(t.curated_entries, std::slice::from_ref(&entry));
    assert_eq!(t.cdg.repl.len(), 1);
    assert_eq!(score(&kb, "bubbleSort", "bubble_q.ml1"), 1.0);
    assert_eq!(score(&kb, "bubbleSort", "bubble_sentinel.ml1"), 1.0);

    assert_eq!(kb.curate(&entry, Decision::Reject), Err(KbError::AlreadyDecided(entry.clone())));
    let report = grade_q(&mut kb);
    assert_eq!(report.status, GradeStatus::ConceptVerified);

    let (_, fx, _) = common::fixpoint(&common::corpus("bubble_q.ml1"), &kb.rules);
    let r = match_template(&kb.template("bubbleSort").unwrap().cdg, &fx).unwrap();
    let verdict = EquivalenceVerdict { equivalent: true, tests_run: 1, first_divergence: None };
    assert_eq!(
        kb.propose("bubbleSort", "again", &fx, &r, &verdict),
        Err(KbError::DuplicateKnowledge("bubbleSort".into()))
    );

    let dir = tempfile::tempdir().unwrap();
    kb.save(dir.path()).unwrap();
    assert_eq!(Knowledgebase::load(dir.path()).unwrap(), kb);
}

#[test]
fn rejected_entry_leaves_templates_alone() {
    let mut kb = common::shipped_kb();
    let entry = grade_q(&mut kb).queue_entry.unwrap();
    let templates = kb.templates.clone();
    kb.curate(&entry, Decision::Reject).unwrap();
    assert_eq!(kb.queue[&entry].status, EntryStatus::Rejected);
    assert_eq!(kb.templates, templates);
    assert_eq!(kb.curate("q0042", Decision::Accept), Err(KbError::UnknownEntry("q0042".into())));
    let again = grade_q(&mut kb);
    assert_eq!(again.queue_entry.as_deref(), Some("q0002"));
}

#[test]
fn only_equivalent_submissions_are_queued() {
    let mut kb = common::shipped_kb();
    let (_, fx, _) = common::fixpoint(&common::corpus("bubble_q.ml1"), &kb.rules);
    let r = match_template(&kb.template("bubbleSort").unwrap().cdg, &fx).unwrap();
    let verdict = EquivalenceVerdict { equivalent: false, tests_run: 3, first_divergence: None };
    assert_eq!(kb.propose("bubbleSort", "q", &fx, &r, &verdict), Err(KbError::NotEquivalent));
    assert!(kb.queue.is_empty());
}

#[test]
fn dangling_queue_entry_fails_to_load() {
    let mut kb = common::shipped_kb();
    grade_q(&mut kb);
    let dir = tempfile::tempdir().unwrap();
    kb.save(dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("templates/bubbleSort.json")).unwrap();
    assert!(matches!(Knowledgebase::load(dir.path()), Err(KbError::Invalid(_))));
}

#[test]
fn malformed_template_reports_its_position() {
    let dir = common::kb_copy();
    let path = dir.path().join("templates/swap.json");
    std::fs::write(&path, "{\n  \"version\": 1,\n  oops\n}\n").unwrap();
    match Knowledgebase::load(dir.path()) {
        Err(KbError::MalformedDocument { path: p, line, .. }) => {
            assert_eq!(p, path);
            assert_eq!(line, 3);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn future_schema_version_is_refused() {
    let dir = common::kb_copy();
    let path = dir.path().join("templates/swap.json");
    let text = std::fs::read_to_string(&path).unwrap().replacen("\"version\": 1", "\"version\": 9", 1);
    std::fs::write(&path, text).unwrap();
    assert!(matches!(Knowledgebase::load(dir.path()), Err(KbError::SchemaVersionMismatch { version: 9, .. })));
}

#[test]
fn save_drops_files_of_removed_templates() {
    let dir = common::kb_copy();
    let mut kb = Knowledgebase::load(dir.path()).unwrap();
    kb.templates.remove("swap");
    kb.save(dir.path()).unwrap();
    assert!(!dir.path().join("templates/swap.json").exists());
    assert_eq!(Knowledgebase::load(dir.path()).unwrap(), kb);
}

fn valid_cdg() -> impl Strategy<Value = mindreader::cdg::Cdg> {
    common::arb_cdg(8, true).prop_filter("templates are valid CDGs", |g| g.validate().is_valid())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_templates_round_trip(cdgs in prop::collection::vec(valid_cdg(), 1..4)) {
        let shipped = common::shipped_kb();
        let mut kb = Knowledgebase::new(shipped.rules.clone());
        kb.version = cdgs.len() as u64;
        for (i, cdg) in cdgs.into_iter().enumerate() {
            let t = AlgorithmTemplate { id: format!("t{i}"), cdg, ..shipped.template("average").unwrap().clone() };
            let path = std::path::PathBuf::from(format!("t{i}.json"));
            prop_assert_eq!(&AlgorithmTemplate::from_json(&t.to_json(), &path).unwrap(), &t);
            kb.templates.insert(t.id.clone(), t);
        }
        let dir = tempfile::tempdir().unwrap();
        kb.save(dir.path()).unwrap();
        prop_assert_eq!(Knowledgebase::load(dir.path()).unwrap(), kb);
    }
}
