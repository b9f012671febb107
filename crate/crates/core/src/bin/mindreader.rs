use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mindreader::frontend::SourceProgram;
use mindreader::grader::{
    dump_cdg, grade, grade_batch, parse_manifest, DumpFormat, ErrorClass, GradeReport, GradeStatus, GraderConfig, Stage,
};
use mindreader::knowledgebase::{Decision, EntryStatus, KbError, Knowledgebase, Proposal};

const EXIT_REJECTED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_KB: u8 = 3;

#[derive(Parser)]
#[command(name = "mindreader", version, about = "Grade MiniLang submissions against algorithm templates")]
struct Cli {
    /// Knowledgebase directory.
    #[arg(long, global = true, env = "MINDREADER_KB", default_value = "kb")]
    kb: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Base,
    Fixpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Dot,
    Json,
}

#[derive(clap::Args)]
struct GradeOpts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of generated tests for the behavioural fallback.
    #[arg(long, default_value_t = 20)]
    tests: usize,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = mindreader::dynamic::DEFAULT_STEP_LIMIT)]
    step_limit: u64,
    /// Do not queue behaviourally verified submissions for curation.
    #[arg(long)]
    no_learn: bool,
    #[arg(long)]
    json: bool,
}

impl GradeOpts {
    fn config(&self) -> GraderConfig {
        GraderConfig {
            theta: self.theta,
            tests: self.tests,
            seed: self.seed,
            step_limit: self.step_limit,
            learn: !self.no_learn,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Grade one submission.
    Grade {
        file: PathBuf,
        #[arg(long)]
        template: String,
        #[command(flatten)]
        opts: GradeOpts,
        /// Also write the CDG of this stage.
        #[arg(long)]
        dump: Option<StageArg>,
        #[arg(long, value_enum, default_value = "dot")]
        format: FormatArg,
        #[arg(long, default_value = ".")]
        dump_dir: PathBuf,
    },
    /// Grade every row of a `path<TAB>template_id` manifest.
    Batch {
        manifest: PathBuf,
        #[command(flatten)]
        opts: GradeOpts,
        /// Exit with status 1 when any submission is rejected.
        #[arg(long)]
        fail_on_reject: bool,
    },
    /// Inspect and decide the curation queue.
    Learn {
        #[command(subcommand)]
        action: LearnAction,
    },
    /// Inspect templates.
    Templates {
        #[command(subcommand)]
        action: TemplatesAction,
    },
    /// Write the base or fixpoint CDG of a program.
    Dump {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "fixpoint")]
        stage: StageArg,
        #[arg(long, value_enum, default_value = "dot")]
        format: FormatArg,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LearnAction {
    List,
    Accept { entry: String },
    Reject { entry: String },
}

#[derive(Subcommand)]
enum TemplatesAction {
    List,
}

struct Failure(u8, String);

impl From<KbError> for Failure {
    fn from(e: KbError) -> Self {
        Failure(EXIT_KB, e.to_string())
    }
}

fn stage(s: StageArg) -> Stage {
    match s {
        StageArg::Base => Stage::Base,
        StageArg::Fixpoint => Stage::Fixpoint,
    }
}

fn format(f: FormatArg) -> DumpFormat {
    match f {
        FormatArg::Dot => DumpFormat::Dot,
        FormatArg::Json => DumpFormat::Json,
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", path.display())))
}

/// Load under the writer lock, run `f`, and save if it changed anything.
fn with_kb<T>(dir: &Path, f: impl FnOnce(&mut Knowledgebase) -> Result<T, Failure>) -> Result<T, Failure> {
    if !dir.join("VERSION").is_file() {
        return Err(KbError::MissingKnowledgebase(dir.to_path_buf()).into());
    }
    let _lock = Knowledgebase::lock(dir)?;
    let mut kb = Knowledgebase::load(dir)?;
    let version = kb.version;
    let out = f(&mut kb)?;
    if kb.version != version {
        kb.save(dir)?;
    }
    Ok(out)
}

fn exit_for(report: &GradeReport) -> u8 {
    match (report.status, report.error) {
        (GradeStatus::Error, Some(ErrorClass::Knowledgebase)) => EXIT_KB,
        (GradeStatus::Error, _) => EXIT_INPUT,
        (GradeStatus::Rejected, _) => EXIT_REJECTED,
        _ => 0,
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Grade { file, template, opts, dump, format: fmt, dump_dir } => {
            let source = read_input(&file)?;
            let name = file.display().to_string();
            let mut report = with_kb(&cli.kb, |kb| {
                let mut report = grade(kb, &name, &source, &template, &opts.config());
                if let Some(st) = dump.filter(|_| report.error != Some(ErrorClass::Input)) {
                    let text = dump_cdg(&SourceProgram::new(&name, &source), kb, stage(st), format(fmt))
                        .map_err(|e| Failure(EXIT_INPUT, e.to_string()))?;
                    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("submission");
                    let st_name = match st {
                        StageArg::Base => "base",
                        StageArg::Fixpoint => "fixpoint",
                    };
                    let path = dump_dir.join(format!("{stem}.{st_name}.{}", format(fmt).extension()));
                    write_output(&path, &text)?;
                    report.artifacts.push(path);
                }
                Ok(report)
            })?;
            report.artifacts.sort();
            if opts.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            Ok(exit_for(&report))
        }
        Command::Batch { manifest, opts, fail_on_reject } => {
            let text = read_input(&manifest)?;
            let base = manifest.parent().unwrap_or(Path::new(""));
            let rows = parse_manifest(&text, base).map_err(|e| Failure(EXIT_INPUT, e.to_string()))?;
            let batch = with_kb(&cli.kb, |kb| Ok(grade_batch(kb, &rows, &opts.config())))?;
            if opts.json {
                println!("{}", batch.to_json());
            } else {
                for r in &batch.reports {
                    print!("{}", r.to_text());
                }
                print!("{}", batch.summary_table());
            }
            let worst = batch.reports.iter().map(exit_for).filter(|c| *c != EXIT_REJECTED).max().unwrap_or(0);
            if worst != 0 {
                Ok(worst)
            } else if fail_on_reject && batch.count(GradeStatus::Rejected) > 0 {
                Ok(EXIT_REJECTED)
            } else {
                Ok(0)
            }
        }
        Command::Learn { action: LearnAction::List } => {
            let kb = Knowledgebase::load(&cli.kb)?;
            for e in kb.queue.values() {
                let status = match e.status {
                    EntryStatus::Pending => "pending",
                    EntryStatus::Accepted => "accepted",
                    EntryStatus::Rejected => "rejected",
                };
                let kind = match &e.proposal {
                    Proposal::ReplAlternative { lhs, nodes, .. } => {
                        format!("alternative for {} template nodes ({} new)", lhs.len(), nodes.len())
                    }
                    Proposal::SiblingTemplate { template_id, .. } => format!("sibling template {template_id}"),
                };
                println!("{}\t{}\t{}\t{}\t{}", e.entry_id, status, e.template_id, e.submission, kind);
            }
            Ok(0)
        }
        Command::Learn { action: LearnAction::Accept { entry } } => decide(&cli.kb, &entry, Decision::Accept),
        Command::Learn { action: LearnAction::Reject { entry } } => decide(&cli.kb, &entry, Decision::Reject),
        Command::Templates { action: TemplatesAction::List } => {
            let kb = Knowledgebase::load(&cli.kb)?;
            for t in kb.templates.values() {
                let provenance = serde_json::to_value(t.provenance).ok();
                let provenance = provenance.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
                println!(
                    "{}\t{}\t{}\t{} nodes\t{} alternatives\t{} curated",
                    t.id,
                    t.name,
                    provenance,
                    t.cdg.len(),
                    t.cdg.repl.len(),
                    t.curated_entries.len()
                );
            }
            Ok(0)
        }
        Command::Dump { file, stage: st, format: fmt, output } => {
            let kb = Knowledgebase::load(&cli.kb)?;
            let source = read_input(&file)?;
            let text = dump_cdg(&SourceProgram::new(file.display().to_string(), source), &kb, stage(st), format(fmt))
                .map_err(|e| Failure(EXIT_INPUT, e.to_string()))?;
            match output {
                Some(path) => write_output(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
    }
}

fn decide(dir: &Path, entry: &str, decision: Decision) -> Result<u8, Failure> {
    with_kb(dir, |kb| kb.curate(entry, decision).map_err(Failure::from))?;
    let word = match decision {
        Decision::Accept => "accepted",
        Decision::Reject => "rejected",
    };
    println!("{entry} {word}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, message)) => {
            eprintln!("mindreader: {message}");
            ExitCode::from(code)
        }
    }
}
