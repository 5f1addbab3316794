//! Batch CLI for the dialogue pipeline.
//!
//! Each stage can run on its own against the artifacts of the previous one,
//! or `run` drives them all. Exit codes: 0 on success, 2 when inputs fail
//! validation, 3 when a stage fails. Progress goes to stderr; artifacts go
//! to the output directory.

use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bridgekit::bridging::BridgingError;
use bridgekit::completion::{holdout_accuracy, CompletionError};
use bridgekit::distill::StubMode;
use bridgekit::model::{load_bundle, save_bundle, validate_bundle, BundleError, StatementId};
use bridgekit::pipeline::{
    apply_decisions, read_json_artifact, render_report, run_pipeline, stage_bridge,
    stage_complete, stage_distill, stage_tally, BackendChoice, PipelineConfig, PipelineError,
    ReportBundle, ReportFormat, APPROVED_FILE, BRIDGING_FILE, COMPLETE_VOTES_FILE, DRAFTS_FILE,
    IDEAS_FILE, REPORT_JSON_FILE, TALLY_FILE, TRANSCRIPT_FILE,
};
use bridgekit::synth::{generate_synthetic_dialogue, SynthError, SyntheticSpec, MANIFEST_FILE};
use bridgekit::{canonical, distill, model, tally as tally_mod};

#[derive(Parser)]
#[command(
    name = "bridgekit",
    version,
    about = "Completes sparse dialogue votes, selects bridging statements, distills them into collective statements, and tallies final votes with equal-power metrics."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every stage command. Values from `--config` are the
/// base; explicit flags override them.
#[derive(Args)]
struct CommonOpts {
    /// Pipeline config file (JSON).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Dialogue bundle directory.
    #[arg(long, value_name = "DIR")]
    bundle: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Top-level seed; per-stage seeds are derived from it.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Stub,
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum StubModeArg {
    Exact,
    NormalizedTokens,
}

impl From<StubModeArg> for StubMode {
    fn from(mode: StubModeArg) -> Self {
        match mode {
            StubModeArg::Exact => StubMode::Exact,
            StubModeArg::NormalizedTokens => StubMode::NormalizedTokens,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Markdown,
}

impl From<FormatArg> for ReportFormat {
    fn from(format: FormatArg) -> Self {
        match format {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check that a bundle directory is well-formed and consistent.
    Validate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Complete the sparse vote matrix; optionally score held-out accuracy.
    Complete {
        #[command(flatten)]
        common: CommonOpts,
        /// Hold out this fraction of votes and report prediction accuracy.
        #[arg(long, value_name = "FRACTION")]
        holdout: Option<f64>,
    },
    /// Select the bridging set from the completed votes.
    Bridge {
        #[command(flatten)]
        common: CommonOpts,
        /// Minimum per-group agreement for selection.
        #[arg(long, value_name = "FRACTION")]
        amin_threshold: Option<f64>,
        /// Maximum distance to the bridging target for selection.
        #[arg(long, value_name = "DISTANCE")]
        distance_threshold: Option<f64>,
        /// Dimension of the factor vectors.
        #[arg(long, value_name = "N")]
        factor_dim: Option<usize>,
        /// Use stated votes only, ignoring inferred ones.
        #[arg(long)]
        stated_only: bool,
    },
    /// Distill the bridging set into drafted collective statements.
    Distill {
        #[command(flatten)]
        common: CommonOpts,
        /// Which text-generation backend to use.
        #[arg(long, value_enum)]
        backend: Option<BackendKind>,
        /// Dedup mode for the stub backend.
        #[arg(long, value_enum)]
        stub_mode: Option<StubModeArg>,
        /// Directory of prompt template files.
        #[arg(long, value_name = "DIR")]
        prompts: Option<PathBuf>,
    },
    /// Apply review decisions to the drafted statements.
    Approve {
        #[command(flatten)]
        common: CommonOpts,
        /// Decisions file: {"<id>": {"action": "approve" | "reject"} or
        /// {"action": "edit", "text": "..."}}.
        #[arg(long, value_name = "FILE")]
        decisions: PathBuf,
    },
    /// Tally the final votes over the approved statements.
    Tally {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run every stage in order.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        /// Approve every draft unchanged instead of pausing for review.
        #[arg(long)]
        auto_approve: bool,
        /// Review decisions to apply at the approval checkpoint.
        #[arg(long, value_name = "FILE")]
        decisions: Option<PathBuf>,
    },
    /// Generate a synthetic bundle with planted ground truth.
    Synth {
        #[command(flatten)]
        common: CommonOpts,
        /// Synthetic spec file (JSON); defaults describe a three-group
        /// dialogue with 50 statements.
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
    },
    /// Render a persisted report.
    Report {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
    },
}

/// Failure classified by exit code.
enum CliError {
    /// Bad inputs: malformed bundle, config, or spec. Exit code 2.
    Validation(String),
    /// A stage failed while running. Exit code 3.
    Stage(String),
}

fn chain(err: &dyn Error) -> String {
    let mut text = err.to_string();
    let mut source = err.source();
    while let Some(cause) = source {
        text.push_str(": ");
        text.push_str(&cause.to_string());
        source = cause.source();
    }
    text
}

fn classify(err: PipelineError) -> CliError {
    let validation = matches!(
        &err,
        PipelineError::Bundle(BundleError::Invalid { .. })
            | PipelineError::Bundle(BundleError::Malformed { .. })
            | PipelineError::Completion(CompletionError::InvalidConfig(_))
            | PipelineError::Completion(CompletionError::HoldoutFraction(_))
            | PipelineError::Bridging(BridgingError::InvalidConfig(_))
            | PipelineError::MalformedArtifact { .. }
    );
    if validation {
        CliError::Validation(chain(&err))
    } else {
        CliError::Stage(chain(&err))
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        classify(err)
    }
}

impl From<BundleError> for CliError {
    fn from(err: BundleError) -> Self {
        classify(PipelineError::Bundle(err))
    }
}

impl From<SynthError> for CliError {
    fn from(err: SynthError) -> Self {
        match err {
            SynthError::InvalidSpec(_) => CliError::Validation(chain(&err)),
            SynthError::Preview(inner) => classify(inner),
        }
    }
}

/// Builds the effective config: file values under CLI overrides.
fn resolve_config(common: &CommonOpts) -> Result<PipelineConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig {
            bundle_dir: PathBuf::from("."),
            out_dir: PathBuf::from("out"),
            seed: 0,
            completion: Default::default(),
            bridging: Default::default(),
            distill: Default::default(),
            auto_approve: false,
            decisions_path: None,
        },
    };
    if let Some(bundle) = &common.bundle {
        config.bundle_dir = bundle.clone();
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write_artifact<T: serde::Serialize>(
    config: &PipelineConfig,
    file: &str,
    value: &T,
) -> Result<(), CliError> {
    let path = config.out_dir.join(file);
    canonical::write_canonical_json(&path, value)
        .map_err(|e| CliError::Stage(format!("writing {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run_command(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { common } => {
            let config = resolve_config(&common)?;
            let bundle = model::read_bundle(&config.bundle_dir)?;
            let report = validate_bundle(&bundle);
            if !report.is_valid() {
                return Err(CliError::Validation(format!(
                    "bundle {} is invalid:\n{report}",
                    config.bundle_dir.display()
                )));
            }
            println!(
                "bundle OK: {} participants in {} groups, {} statements, {} votes{}",
                bundle.participants.len(),
                bundle.partition.groups.len(),
                bundle.statements.len(),
                bundle.votes.entries.len(),
                if bundle.final_votes.is_some() {
                    ", final votes present"
                } else {
                    ""
                }
            );
            Ok(())
        }
        Command::Complete { common, holdout } => {
            let config = resolve_config(&common)?;
            let bundle = load_bundle(&config.bundle_dir)?;
            let completion_cfg = config.completion_config();
            if let Some(fraction) = holdout {
                let accuracy = holdout_accuracy(&bundle.votes, &bundle, &completion_cfg, fraction)
                    .map_err(|e| classify(e.into()))?;
                write_artifact(&config, "accuracy.json", &accuracy)?;
                println!(
                    "held-out accuracy {:.3} ({}/{} correct)",
                    accuracy.accuracy, accuracy.correct, accuracy.held_out
                );
            }
            let complete = stage_complete(&bundle, &completion_cfg)?;
            write_artifact(&config, COMPLETE_VOTES_FILE, &complete)?;
            Ok(())
        }
        Command::Bridge {
            common,
            amin_threshold,
            distance_threshold,
            factor_dim,
            stated_only,
        } => {
            let mut config = resolve_config(&common)?;
            if let Some(t) = amin_threshold {
                config.bridging.amin_threshold = t;
            }
            if let Some(t) = distance_threshold {
                config.bridging.distance_threshold = t;
            }
            if let Some(d) = factor_dim {
                config.bridging.factor_dim = d;
            }
            if stated_only {
                config.bridging.stated_only = true;
            }
            let bundle = load_bundle(&config.bundle_dir)?;
            let complete = read_json_artifact(&config.out_dir.join(COMPLETE_VOTES_FILE))?;
            let bridging = stage_bridge(&bundle, &complete, &config.bridging_config())?;
            write_artifact(&config, BRIDGING_FILE, &bridging)?;
            println!(
                "selected {} of {} statements",
                bridging.selected.len(),
                bridging.diagnostics.len()
            );
            Ok(())
        }
        Command::Distill {
            common,
            backend,
            stub_mode,
            prompts,
        } => {
            let mut config = resolve_config(&common)?;
            match backend {
                Some(BackendKind::Stub) => {
                    let mode = stub_mode.map(StubMode::from).unwrap_or_default();
                    config.distill.backend = BackendChoice::Stub { mode };
                }
                Some(BackendKind::Http) => {
                    if !matches!(config.distill.backend, BackendChoice::Http { .. }) {
                        return Err(CliError::Validation(
                            "--backend http needs base_url and model in the config file's \
                             distill.backend section"
                                .to_owned(),
                        ));
                    }
                }
                None => {
                    if let (BackendChoice::Stub { mode }, Some(arg)) =
                        (&mut config.distill.backend, stub_mode)
                    {
                        *mode = arg.into();
                    }
                }
            }
            if let Some(dir) = prompts {
                config.distill.prompts_dir = Some(dir);
            }
            let bundle = load_bundle(&config.bundle_dir)?;
            let bridging: bridgekit::bridging::BridgingSet =
                read_json_artifact(&config.out_dir.join(BRIDGING_FILE))?;
            let mut transcript = distill::Transcript::default();
            let result = stage_distill(&bundle, &bridging.selected, &config.distill, &mut transcript);
            let transcript_path = config.out_dir.join(TRANSCRIPT_FILE);
            std::fs::write(&transcript_path, transcript.to_jsonl())
                .map_err(|e| CliError::Stage(format!("writing {}: {e}", transcript_path.display())))?;
            eprintln!("wrote {}", transcript_path.display());
            let (ideas, drafts) = result?;
            write_artifact(&config, IDEAS_FILE, &ideas)?;
            write_artifact(&config, DRAFTS_FILE, &drafts)?;
            println!(
                "distilled {} ideas into {} drafts awaiting review",
                ideas.ideas.len(),
                drafts.len()
            );
            Ok(())
        }
        Command::Approve { common, decisions } => {
            let config = resolve_config(&common)?;
            let (approved, log, all_rejected) = apply_decisions(&config.out_dir, &decisions)?;
            eprintln!("wrote {}", config.out_dir.join(APPROVED_FILE).display());
            if all_rejected {
                eprintln!("warning: every draft was rejected; nothing to tally");
            }
            println!(
                "{} of {} drafts approved",
                approved.len(),
                log.len()
            );
            Ok(())
        }
        Command::Tally { common } => {
            let config = resolve_config(&common)?;
            let bundle = load_bundle(&config.bundle_dir)?;
            let final_votes = bundle.final_votes.as_ref().ok_or_else(|| {
                CliError::Stage("bundle has no final votes to tally".to_owned())
            })?;
            let approved: Vec<distill::CollectiveStatement> =
                read_json_artifact(&config.out_dir.join(APPROVED_FILE))?;
            let ids: Vec<StatementId> = approved.iter().map(|s| s.id.clone()).collect();
            let result: tally_mod::TallyResult = stage_tally(&bundle, final_votes, &ids)?;
            write_artifact(&config, TALLY_FILE, &result)?;
            for row in &result.statements {
                println!(
                    "{}\tmin agreement {:.3}\tdowdall {:.4}\tirv rank {}",
                    row.statement_id, row.final_max_min, row.dowdall_equal_power, row.irv_rank
                );
            }
            Ok(())
        }
        Command::Run {
            common,
            auto_approve,
            decisions,
        } => {
            let mut config = resolve_config(&common)?;
            if auto_approve {
                config.auto_approve = true;
            }
            if decisions.is_some() {
                config.decisions_path = decisions;
            }
            let report = run_pipeline(&config)?;
            println!(
                "pipeline {}: {} bridging statements, {} collective statements, artifacts in {}",
                report.status,
                report.bridging.selected.len(),
                report.collective.len(),
                config.out_dir.display()
            );
            Ok(())
        }
        Command::Synth { common, spec } => {
            let config = resolve_config(&common)?;
            let mut spec: SyntheticSpec = match spec {
                Some(path) => read_json_artifact(&path)?,
                None => SyntheticSpec::default(),
            };
            if let Some(seed) = common.seed {
                spec.seed = seed;
            }
            let (bundle, manifest) = generate_synthetic_dialogue(&spec)?;
            save_bundle(&bundle, &config.out_dir)?;
            write_artifact(&config, MANIFEST_FILE, &manifest)?;
            println!(
                "synthesized {} participants, {} statements, {} votes into {}",
                bundle.participants.len(),
                bundle.statements.len(),
                bundle.votes.entries.len(),
                config.out_dir.display()
            );
            Ok(())
        }
        Command::Report { common, format } => {
            let config = resolve_config(&common)?;
            let report: ReportBundle =
                read_json_artifact(&config.out_dir.join(REPORT_JSON_FILE))?;
            let rendered = render_report(&report, format.into())?;
            print!("{rendered}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Stage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(3)
        }
    }
}
