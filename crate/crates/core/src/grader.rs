//! The grading pipeline: parse, summarize, match against the knowledgebase,
//! fall back to behavioural comparison, report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdg::{self, Cdg, NodeId};
use crate::dynamic::{
    dynamic_equiv, generate_tests, Divergence, DivergenceKind, EquivalenceVerdict, Outcome, DEFAULT_STEP_LIMIT,
};
use crate::frontend::{abstract_program, Ast, SourceProgram};
use crate::knowledgebase::{AlgorithmTemplate, KbError, Knowledgebase};
use crate::matcher::{match_template, MatchResult, Side};
use crate::summarizer::summarize_lfp;

pub const REPORT_SCHEMA: &str = "mindreader.grade-report/1";
pub const BATCH_SCHEMA: &str = "mindreader.batch-report/1";

#[derive(Debug, Clone, PartialEq)]
pub struct GraderConfig {
    pub theta: f64,
    pub tests: usize,
    pub seed: u64,
    pub step_limit: u64,
    /// Queue behaviourally verified submissions for curation.
    pub learn: bool,
}

impl Default for GraderConfig {
    fn default() -> Self {
        GraderConfig { theta: 1.0, tests: 20, seed: 0, step_limit: DEFAULT_STEP_LIMIT, learn: true }
    }
}

impl GraderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(format!("threshold {} is outside (0, 1]", self.theta));
        }
        if self.tests == 0 {
            return Err("at least one test is required".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeStatus {
    ConceptVerified,
    BehaviourVerifiedPendingCuration,
    Rejected,
    Error,
}

impl GradeStatus {
    pub const ALL: [GradeStatus; 4] = [
        GradeStatus::ConceptVerified,
        GradeStatus::BehaviourVerifiedPendingCuration,
        GradeStatus::Rejected,
        GradeStatus::Error,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GradeStatus::ConceptVerified => "concept_verified",
            GradeStatus::BehaviourVerifiedPendingCuration => "behaviour_verified_pending_curation",
            GradeStatus::Rejected => "rejected",
            GradeStatus::Error => "error",
        }
    }
}

impl fmt::Display for GradeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a report has status `error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Input,
    Knowledgebase,
}

/// Concrete input on which reference and submission disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub test_index: usize,
    pub stdin: Vec<i64>,
    pub expected_stdout: Vec<String>,
    pub actual_stdout: Vec<String>,
    pub expected_outcome: Outcome,
    pub actual_outcome: Outcome,
    pub kind: DivergenceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeReport {
    pub schema: String,
    pub submission: String,
    pub template_id: String,
    pub status: GradeStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorClass>,
    pub score: Option<f64>,
    pub matched_template: Option<String>,
    pub substitution: BTreeMap<String, String>,
    pub variant_used: Vec<Side>,
    pub tests_run: usize,
    pub witness: Option<Witness>,
    pub queue_entry: Option<String>,
    pub diagnostics: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl GradeReport {
    fn new(submission: &str, template_id: &str) -> Self {
        GradeReport {
            schema: REPORT_SCHEMA.to_string(),
            submission: submission.to_string(),
            template_id: template_id.to_string(),
            status: GradeStatus::Error,
            error: None,
            score: None,
            matched_template: None,
            substitution: BTreeMap::new(),
            variant_used: Vec::new(),
            tests_run: 0,
            witness: None,
            queue_entry: None,
            diagnostics: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn fail(mut self, class: ErrorClass, diagnostics: Vec<String>) -> Self {
        self.status = GradeStatus::Error;
        self.error = Some(class);
        self.diagnostics = diagnostics;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}: {}", self.submission, self.status);
        if let Some(s) = self.score {
            out += &format!(" (template {}, score {:.3})", self.matched_template.as_deref().unwrap_or("?"), s);
        }
        out.push('\n');
        if !self.substitution.is_empty() {
            let pairs: Vec<String> = self.substitution.iter().map(|(t, s)| format!("{t} -> {s}")).collect();
            out += &format!("  variables: {}\n", pairs.join(", "));
        }
        if self.tests_run > 0 {
            out += &format!("  tests run: {}\n", self.tests_run);
        }
        if let Some(q) = &self.queue_entry {
            out += &format!("  queued for curation as {q}\n");
        }
        for d in &self.diagnostics {
            out += &format!("  - {d}\n");
        }
        for a in &self.artifacts {
            out += &format!("  wrote {}\n", a.display());
        }
        out
    }
}

/// Didactic phrase for a concept that the submission lacks.
pub fn concept_phrase(name: &str) -> &'static str {
    match name {
        "swap" => "expected the two values to be exchanged through a temporary; found no exchange",
        "counterLoop" => "expected a counter loop over the list; found none",
        "sentinelLoop" => "expected a loop controlled by a flag that records whether work remains; found none",
        "compareAndSwapAdjacent" => "expected neighbouring elements to be compared and exchanged when out of order",
        "aggregate" => "expected the elements to be accumulated into a running total",
        "average" => "expected the total to be divided by the number of elements",
        "assign" => "expected an assignment that the reference solution performs",
        "forLoop" | "whileLoop" => "expected a loop here",
        "increment" | "decrement" => "expected the loop counter to be stepped",
        "print" => "expected the result to be printed",
        "read" => "expected the input to be read",
        "decide" => "expected a comparison here",
        "funcDef" => "expected a function with this role",
        "call" | "swapCall" => "expected a call here",
        _ => "expected a concept of the reference solution; found none",
    }
}

fn describe(g: &Cdg, id: &NodeId) -> String {
    match g.node(id) {
        Some(n) => {
            let params: Vec<String> = n.params.iter().map(ToString::to_string).collect();
            format!("{}({})", n.name, params.join(", "))
        }
        None => id.to_string(),
    }
}

fn match_diagnostics(t: &AlgorithmTemplate, r: &MatchResult) -> Vec<String> {
    let mut out = Vec::new();
    for id in &r.unmatched_template_nodes {
        let name = t.cdg.node(id).map(|n| n.name.as_str()).unwrap_or_default();
        out.push(format!("missing concept {}: {}", describe(&t.cdg, id), concept_phrase(name)));
    }
    for (a, b) in &r.violated_precedences {
        out.push(format!("concept {} should come before {}", describe(&t.cdg, a), describe(&t.cdg, b)));
    }
    out
}

fn witness(index: usize, d: &Divergence) -> Witness {
    Witness {
        test_index: index,
        stdin: d.test.stdin.clone(),
        expected_stdout: d.reference.stdout.clone(),
        actual_stdout: d.student.stdout.clone(),
        expected_outcome: d.reference.outcome.clone(),
        actual_outcome: d.student.outcome.clone(),
        kind: d.kind.clone(),
    }
}

fn tokens(v: &[String]) -> String {
    format!("[{}]", v.join(", "))
}

fn divergence_text(w: &Witness) -> String {
    let input = format!("on test {} with input {:?}", w.test_index, w.stdin);
    match &w.kind {
        DivergenceKind::Crash => format!(
            "{input}: the reference solution ended with {}, the submission with {}",
            w.expected_outcome, w.actual_outcome
        ),
        DivergenceKind::Stdout { index } => format!(
            "{input}: expected output {}, got {} (first difference at token {index})",
            tokens(&w.expected_stdout),
            tokens(&w.actual_stdout)
        ),
        DivergenceKind::Store { variable } => {
            format!("{input}: final value of `{variable}` differs from the reference solution")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Base,
    Fixpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DumpFormat {
    Dot,
    Json,
}

impl DumpFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DumpFormat::Dot => "dot",
            DumpFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DumpError {
    #[error("{}", .0.join("\n"))]
    Frontend(Vec<String>),
    #[error("{0}")]
    Summarize(String),
}

fn fixpoint(g: &Cdg, kb: &Knowledgebase) -> Result<Cdg, String> {
    summarize_lfp(g, &kb.rules).map(|(g, _)| g).map_err(|e| e.to_string())
}

/// Render the base or fixpoint CDG of `source`.
pub fn dump_cdg(
    source: &SourceProgram,
    kb: &Knowledgebase,
    stage: Stage,
    format: DumpFormat,
) -> Result<String, DumpError> {
    let (_, ap) = abstract_program(source).map_err(|e| DumpError::Frontend(e.diagnostics()))?;
    let base = Cdg::from_abstract_program(&ap).map_err(|e| DumpError::Frontend(vec![e.to_string()]))?;
    let g = match stage {
        Stage::Base => base,
        Stage::Fixpoint => fixpoint(&base, kb).map_err(DumpError::Summarize)?,
    };
    Ok(match format {
        DumpFormat::Dot => cdg::to_dot(&g),
        DumpFormat::Json => cdg::serialize(&g) + "\n",
    })
}

fn parse_reference(t: &AlgorithmTemplate) -> Result<Ast, String> {
    abstract_program(&SourceProgram::new(&t.id, &t.reference_source))
        .map(|(ast, _)| ast)
        .map_err(|e| format!("reference solution of template {} does not parse: {e}", t.id))
}

/// Grade one submission against the template family of `template_id`.
///
/// Matching considers every template sharing the requested template's
/// name; the best score wins, ties going to the smaller id. Below the
/// threshold the submission is run against the winning template's
/// reference solution. When learning is enabled, a behavioural pass is
/// queued in `kb` for curation.
pub fn grade(
    kb: &mut Knowledgebase,
    submission: &str,
    source: &str,
    template_id: &str,
    cfg: &GraderConfig,
) -> GradeReport {
    let report = GradeReport::new(submission, template_id);
    if let Err(e) = cfg.validate() {
        return report.fail(ErrorClass::Input, vec![e]);
    }
    let family: Vec<AlgorithmTemplate> = match kb.family(template_id) {
        Ok(f) => f.into_iter().cloned().collect(),
        Err(e) => return report.fail(ErrorClass::Knowledgebase, vec![e.to_string()]),
    };
    let (ast, ap) = match abstract_program(&SourceProgram::new(submission, source)) {
        Ok(x) => x,
        Err(e) => return report.fail(ErrorClass::Input, e.diagnostics()),
    };
    let student = match Cdg::from_abstract_program(&ap).map_err(|e| e.to_string()).and_then(|g| fixpoint(&g, kb)) {
        Ok(g) => g,
        Err(e) => return report.fail(ErrorClass::Input, vec![e]),
    };

    let mut best: Option<(&AlgorithmTemplate, MatchResult)> = None;
    for t in &family {
        let r = match match_template(&t.cdg, &student) {
            Ok(r) => r,
            Err(e) => return report.fail(ErrorClass::Knowledgebase, vec![format!("template {}: {e}", t.id)]),
        };
        if best.as_ref().is_none_or(|(_, b)| r.cmp_score(b).is_gt()) {
            best = Some((t, r));
        }
    }
    let Some((t, r)) = best else {
        return report
            .fail(ErrorClass::Knowledgebase, vec![KbError::UnknownTemplate(template_id.to_string()).to_string()]);
    };
    let mut report = GradeReport {
        score: Some(r.score),
        matched_template: Some(t.id.clone()),
        substitution: r.substitution.var_map.clone(),
        variant_used: r.variant_used.clone(),
        ..report
    };
    if r.score >= cfg.theta {
        report.status = GradeStatus::ConceptVerified;
        return report;
    }

    let reference = match parse_reference(t) {
        Ok(a) => a,
        Err(e) => return report.fail(ErrorClass::Knowledgebase, vec![e]),
    };
    let tests = match generate_tests(&t.input_spec, cfg.tests, cfg.seed) {
        Ok(ts) => ts,
        Err(e) => return report.fail(ErrorClass::Knowledgebase, vec![format!("template {}: {e}", t.id)]),
    };
    let policy = t.output_policy.compare_policy(&r.substitution.var_map);
    let verdict: EquivalenceVerdict = dynamic_equiv(&reference, &ast, &tests, &policy, cfg.step_limit);
    report.tests_run = verdict.tests_run;
    report.diagnostics = match_diagnostics(t, &r);
    match &verdict.first_divergence {
        Some(d) => {
            let w = witness(verdict.tests_run - 1, d);
            report.diagnostics.push(divergence_text(&w));
            report.witness = Some(w);
            report.status = GradeStatus::Rejected;
        }
        None => {
            report.status = GradeStatus::BehaviourVerifiedPendingCuration;
            report.diagnostics.push(format!(
                "behaves like the reference solution on {} tests but uses concepts the template does not know",
                verdict.tests_run
            ));
            if cfg.learn {
                match kb.propose(&t.id, submission, &student, &r, &verdict) {
                    Ok(id) => report.queue_entry = Some(id),
                    Err(e) => report.diagnostics.push(format!("not queued for curation: {e}")),
                }
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub template_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("manifest line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

/// `path<TAB>template_id` rows; blank lines and `#` comments are skipped.
/// Relative paths are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestRow>, ManifestError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |m: &str| ManifestError { line: i + 1, message: m.to_string() };
        let mut cols = line.split('\t');
        let (Some(path), Some(template), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(err("expected `path<TAB>template_id`"));
        };
        let (path, template) = (path.trim(), template.trim());
        if path.is_empty() || template.is_empty() {
            return Err(err("empty path or template id"));
        }
        rows.push(ManifestRow { path: base.join(path), template_id: template.to_string() });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema: String,
    pub summary: BTreeMap<GradeStatus, usize>,
    pub reports: Vec<GradeReport>,
}

impl BatchReport {
    pub fn count(&self, s: GradeStatus) -> usize {
        self.summary.get(&s).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        for s in GradeStatus::ALL {
            out += &format!("{:<36} {}\n", s.as_str(), self.count(s));
        }
        out
    }
}

/// Grade every row in order. Unreadable files become `error` rows.
pub fn grade_batch(kb: &mut Knowledgebase, rows: &[ManifestRow], cfg: &GraderConfig) -> BatchReport {
    let mut reports = Vec::new();
    for row in rows {
        let name = row.path.display().to_string();
        let r = match std::fs::read_to_string(&row.path) {
            Ok(src) => grade(kb, &name, &src, &row.template_id, cfg),
            Err(e) => GradeReport::new(&name, &row.template_id).fail(ErrorClass::Input, vec![format!("{name}: {e}")]),
        };
        reports.push(r);
    }
    let mut summary: BTreeMap<GradeStatus, usize> = GradeStatus::ALL.iter().map(|s| (*s, 0)).collect();
    for r in &reports {
        *summary.entry(r.status).or_default() += 1;
    }
    BatchReport { schema: BATCH_SCHEMA.to_string(), summary, reports }
}
