//! File-backed knowledgebase: algorithm templates, the concept rule file,
//! the curation queue and a version counter.
//!
//! Layout of a knowledgebase directory:
//!
//! ```text
//! VERSION              decimal counter
//! rules/core.json      hierarchy and rules
//! templates/<id>.json  one algorithm template per file
//! queue/<entry>.json   one curation entry per file
//! ```

mod learn;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdg::{Cdg, CdgDocument, ConceptNode, NodeId};
use crate::dynamic::{ComparePolicy, EquivalenceVerdict, InputSpec};
use crate::matcher::{match_template, MatchError, MatchResult};
use crate::summarizer::{load_rules, save_rules, RuleSet, SummarizerError};

pub use learn::propose_delta;

pub const KB_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Authored,
    LearnedCurated,
    LearnedPending,
}

/// What has to agree between reference and student runs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputPolicy {
    #[default]
    Stdout,
    StdoutAndStore {
        variables: Vec<String>,
    },
}

impl OutputPolicy {
    /// Comparison policy with template variables translated through the
    /// matcher's variable map.
    pub fn compare_policy(&self, var_map: &BTreeMap<String, String>) -> ComparePolicy {
        match self {
            OutputPolicy::Stdout => ComparePolicy::default(),
            OutputPolicy::StdoutAndStore { variables } => {
                ComparePolicy { store_vars: variables.clone(), var_map: var_map.clone() }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmTemplate {
    pub id: String,
    pub name: String,
    pub cdg: Cdg,
    pub input_spec: InputSpec,
    pub output_policy: OutputPolicy,
    pub provenance: Provenance,
    /// MiniLang reference implementation, run against student programs when
    /// matching falls short.
    pub reference_source: String,
    /// Curation entries whose knowledge was installed in this template.
    pub curated_entries: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateFile {
    version: u32,
    template_id: String,
    name: String,
    provenance: Provenance,
    input_spec: InputSpec,
    #[serde(default)]
    output_policy: OutputPolicy,
    reference_source: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    curated_entries: Vec<String>,
    cdg: CdgDocument,
}

impl AlgorithmTemplate {
    pub fn to_json(&self) -> String {
        let f = TemplateFile {
            version: KB_SCHEMA_VERSION,
            template_id: self.id.clone(),
            name: self.name.clone(),
            provenance: self.provenance,
            input_spec: self.input_spec.clone(),
            output_policy: self.output_policy.clone(),
            reference_source: self.reference_source.clone(),
            curated_entries: self.curated_entries.clone(),
            cdg: CdgDocument::from(&self.cdg),
        };
        serde_json::to_string_pretty(&f).expect("templates always serialize")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<AlgorithmTemplate, KbError> {
        let f: TemplateFile = parse_json(text, path)?;
        if f.version != KB_SCHEMA_VERSION {
            return Err(KbError::SchemaVersionMismatch { path: path.to_path_buf(), version: f.version });
        }
        let cdg = f.cdg.into_cdg().map_err(|e| KbError::Invalid(format!("{}: {e}", path.display())))?;
        let report = cdg.validate();
        if let Some(issue) = report.issues.first() {
            return Err(KbError::Invalid(format!("{}: {issue}", path.display())));
        }
        f.input_spec.validate().map_err(|e| KbError::Invalid(format!("{}: {e}", path.display())))?;
        Ok(AlgorithmTemplate {
            id: f.template_id,
            name: f.name,
            cdg,
            input_spec: f.input_spec,
            output_policy: f.output_policy,
            provenance: f.provenance,
            reference_source: f.reference_source,
            curated_entries: f.curated_entries,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Pending,
    Accepted,
    Rejected,
}

/// Knowledge a curation entry would add once accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Proposal {
    /// New replacement group in an existing template: `lhs` are existing
    /// template nodes, `nodes` the alternative (ids are local to the
    /// proposal and renamed on installation).
    ReplAlternative { lhs: Vec<NodeId>, nodes: Vec<ConceptNode>, prec: Vec<(NodeId, NodeId)> },
    /// A separate template under the same algorithm name.
    SiblingTemplate { template_id: String, cdg: CdgDocument },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurationEntry {
    pub version: u32,
    pub entry_id: String,
    pub template_id: String,
    pub submission: String,
    pub student_fixpoint: CdgDocument,
    pub match_result: MatchResult,
    pub verdict: EquivalenceVerdict,
    pub proposal: Proposal,
    pub status: EntryStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("no knowledgebase at {0}")]
    MissingKnowledgebase(PathBuf),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    MalformedDocument { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: unsupported schema version {version}")]
    SchemaVersionMismatch { path: PathBuf, version: u32 },
    #[error("rule file: {0}")]
    Rules(#[from] SummarizerError),
    #[error("inconsistent knowledgebase: {0}")]
    Invalid(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{0}` already matches this solution")]
    DuplicateKnowledge(String),
    #[error("only behaviourally equivalent submissions can be queued")]
    NotEquivalent,
    #[error("unknown curation entry `{0}`")]
    UnknownEntry(String),
    #[error("curation entry `{0}` was already decided")]
    AlreadyDecided(String),
    #[error(transparent)]
    Match(#[from] MatchError),
}

fn io_err(path: &Path, e: std::io::Error) -> KbError {
    KbError::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, KbError> {
    serde_json::from_str(text).map_err(|e| KbError::MalformedDocument {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn read(path: &Path) -> Result<String, KbError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, KbError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Knowledgebase {
    pub templates: BTreeMap<String, AlgorithmTemplate>,
    pub rules: RuleSet,
    pub queue: BTreeMap<String, CurationEntry>,
    pub version: u64,
}

/// Exclusive lock on a knowledgebase directory, released on drop.
pub struct KbLock {
    _file: File,
}

impl Knowledgebase {
    pub fn new(rules: RuleSet) -> Self {
        Knowledgebase { templates: BTreeMap::new(), rules, queue: BTreeMap::new(), version: 0 }
    }

    /// Block until this process holds the directory's writer lock.
    pub fn lock(dir: &Path) -> Result<KbLock, KbError> {
        let path = dir.join(".lock");
        let file =
            File::options().create(true).truncate(false).write(true).open(&path).map_err(|e| io_err(&path, e))?;
        file.lock().map_err(|e| io_err(&path, e))?;
        Ok(KbLock { _file: file })
    }

    pub fn load(dir: &Path) -> Result<Knowledgebase, KbError> {
        let version_path = dir.join("VERSION");
        let rules_path = dir.join("rules").join("core.json");
        if !version_path.is_file() || !rules_path.is_file() {
            return Err(KbError::MissingKnowledgebase(dir.to_path_buf()));
        }
        let version_text = read(&version_path)?;
        let version: u64 = version_text.trim().parse().map_err(|_| KbError::MalformedDocument {
            path: version_path.clone(),
            line: 1,
            column: 1,
            message: format!("expected a decimal counter, found {:?}", version_text.trim()),
        })?;
        let rules = load_rules(&read(&rules_path)?).map_err(|e| match e {
            SummarizerError::MalformedDocument { line, column, message } => {
                KbError::MalformedDocument { path: rules_path.clone(), line, column, message }
            }
            SummarizerError::SchemaVersionMismatch(v) => {
                KbError::SchemaVersionMismatch { path: rules_path.clone(), version: v }
            }
            other => KbError::Rules(other),
        })?;
        let mut kb = Knowledgebase::new(rules);
        kb.version = version;
        for path in json_files(&dir.join("templates"))? {
            let t = AlgorithmTemplate::from_json(&read(&path)?, &path)?;
            if kb.templates.insert(t.id.clone(), t).is_some() {
                return Err(KbError::Invalid(format!("{}: duplicate template id", path.display())));
            }
        }
        for path in json_files(&dir.join("queue"))? {
            let e: CurationEntry = parse_json(&read(&path)?, &path)?;
            if e.version != KB_SCHEMA_VERSION {
                return Err(KbError::SchemaVersionMismatch { path, version: e.version });
            }
            kb.queue.insert(e.entry_id.clone(), e);
        }
        kb.check()?;
        Ok(kb)
    }

    /// Referential integrity between queue entries and templates.
    pub fn check(&self) -> Result<(), KbError> {
        for e in self.queue.values() {
            if !self.templates.contains_key(&e.template_id) {
                return Err(KbError::Invalid(format!(
                    "entry {} references unknown template {}",
                    e.entry_id, e.template_id
                )));
            }
            if !e.verdict.equivalent {
                return Err(KbError::Invalid(format!("entry {} has a non-equivalent verdict", e.entry_id)));
            }
        }
        for t in self.templates.values() {
            if let Some(missing) = t.curated_entries.iter().find(|id| !self.queue.contains_key(*id)) {
                return Err(KbError::Invalid(format!("template {} names unknown entry {missing}", t.id)));
            }
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<(), KbError> {
        let mkdir = |p: &Path| fs::create_dir_all(p).map_err(|e| io_err(p, e));
        let write = |p: &Path, s: &str| fs::write(p, s).map_err(|e| io_err(p, e));
        let (tdir, rdir, qdir) = (dir.join("templates"), dir.join("rules"), dir.join("queue"));
        for d in [&tdir, &rdir, &qdir] {
            mkdir(d)?;
        }
        write(&rdir.join("core.json"), &(save_rules(&self.rules) + "\n"))?;
        for old in json_files(&tdir)?.into_iter().chain(json_files(&qdir)?) {
            let stem = old.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let keep = if old.parent() == Some(tdir.as_path()) {
                self.templates.contains_key(&stem)
            } else {
                self.queue.contains_key(&stem)
            };
            if !keep {
                fs::remove_file(&old).map_err(|e| io_err(&old, e))?;
            }
        }
        for t in self.templates.values() {
            write(&tdir.join(format!("{}.json", t.id)), &(t.to_json() + "\n"))?;
        }
        for e in self.queue.values() {
            let text = serde_json::to_string_pretty(e).expect("entries always serialize");
            write(&qdir.join(format!("{}.json", e.entry_id)), &(text + "\n"))?;
        }
        write(&dir.join("VERSION"), &format!("{}\n", self.version))
    }

    pub fn template(&self, id: &str) -> Result<&AlgorithmTemplate, KbError> {
        self.templates.get(id).ok_or_else(|| KbError::UnknownTemplate(id.to_string()))
    }

    /// Templates sharing the algorithm name of `id`, smallest id first.
    pub fn family(&self, id: &str) -> Result<Vec<&AlgorithmTemplate>, KbError> {
        let name = &self.template(id)?.name;
        Ok(self.templates.values().filter(|t| &t.name == name).collect())
    }

    /// Queue a behaviourally verified submission for curation. Returns the
    /// entry id; an identical pending proposal is reused.
    pub fn propose(
        &mut self,
        template_id: &str,
        submission: &str,
        fixpoint: &Cdg,
        result: &MatchResult,
        verdict: &EquivalenceVerdict,
    ) -> Result<String, KbError> {
        if !verdict.equivalent {
            return Err(KbError::NotEquivalent);
        }
        for t in self.family(template_id)? {
            if match_template(&t.cdg, fixpoint)?.is_full() {
                return Err(KbError::DuplicateKnowledge(t.id.clone()));
            }
        }
        let doc = CdgDocument::from(fixpoint);
        if let Some(e) = self
            .queue
            .values()
            .find(|e| e.status == EntryStatus::Pending && e.template_id == template_id && e.student_fixpoint == doc)
        {
            return Ok(e.entry_id.clone());
        }
        let template = self.template(template_id)?;
        let sibling_id = self.fresh_sibling_id(template_id);
        let proposal = propose_delta(template, fixpoint, result, &sibling_id)?;
        let entry_id = self.fresh_entry_id();
        self.queue.insert(
            entry_id.clone(),
            CurationEntry {
                version: KB_SCHEMA_VERSION,
                entry_id: entry_id.clone(),
                template_id: template_id.to_string(),
                submission: submission.to_string(),
                student_fixpoint: doc,
                match_result: result.clone(),
                verdict: verdict.clone(),
                proposal,
                status: EntryStatus::Pending,
            },
        );
        self.version += 1;
        Ok(entry_id)
    }

    fn fresh_entry_id(&self) -> String {
        let next = self
            .queue
            .keys()
            .filter_map(|k| k.strip_prefix('q').and_then(|n| n.parse::<u64>().ok()))
            .max()
            .unwrap_or(0)
            + 1;
        format!("q{next:04}")
    }

    fn fresh_sibling_id(&self, base: &str) -> String {
        (1..)
            .map(|n| format!("{base}-learned-{n}"))
            .find(|id| {
                !self.templates.contains_key(id)
                    && !self.queue.values().any(
                        |e| matches!(&e.proposal, Proposal::SiblingTemplate { template_id, .. } if template_id == id),
                    )
            })
            .expect("unbounded id space")
    }

    pub fn curate(&mut self, entry_id: &str, decision: Decision) -> Result<(), KbError> {
        let entry = self.queue.get(entry_id).ok_or_else(|| KbError::UnknownEntry(entry_id.to_string()))?;
        if entry.status != EntryStatus::Pending {
            return Err(KbError::AlreadyDecided(entry_id.to_string()));
        }
        let entry = entry.clone();
        if decision == Decision::Accept {
            self.install(&entry)?;
        }
        let e = self.queue.get_mut(entry_id).expect("checked above");
        e.status = match decision {
            Decision::Accept => EntryStatus::Accepted,
            Decision::Reject => EntryStatus::Rejected,
        };
        self.version += 1;
        Ok(())
    }

    fn install(&mut self, entry: &CurationEntry) -> Result<(), KbError> {
        let fixpoint = entry.student_fixpoint.clone().into_cdg().map_err(|e| KbError::Invalid(e.to_string()))?;
        let base = self.template(&entry.template_id)?.clone();
        if let Proposal::ReplAlternative { lhs, nodes, prec } = &entry.proposal {
            let mut t = base.clone();
            learn::install_alternative(&mut t.cdg, lhs, nodes, prec);
            if t.cdg.validate().is_valid() && match_template(&t.cdg, &fixpoint)?.is_full() {
                t.curated_entries.push(entry.entry_id.clone());
                self.templates.insert(t.id.clone(), t);
                return Ok(());
            }
        }
        let (id, cdg) = match &entry.proposal {
            Proposal::SiblingTemplate { template_id, cdg } if !self.templates.contains_key(template_id) => {
                (template_id.clone(), cdg.clone().into_cdg().map_err(|e| KbError::Invalid(e.to_string()))?)
            }
            _ => (self.fresh_sibling_id(&base.id), learn::skeleton_template(&base, &fixpoint, &entry.match_result)),
        };
        let sibling = AlgorithmTemplate {
            id: id.clone(),
            cdg,
            provenance: Provenance::LearnedCurated,
            curated_entries: vec![entry.entry_id.clone()],
            ..base
        };
        self.templates.insert(id, sibling);
        Ok(())
    }
}
