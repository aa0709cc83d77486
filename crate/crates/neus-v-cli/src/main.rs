//! Command-line front end for the temporal-logic video alignment scorer.
//!
//! Exit codes: 0 on success, 2 when some (but not all) evaluation modes
//! failed, 1 on hard failure. Every flag can also be set through the
//! environment variable named in its help text (prefix `NEUSV_`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use neus_v::automaton::build_automaton;
use neus_v::checker::satisfaction_probability;
use neus_v::formats::{
    load_annotations, load_prompt_suite, to_canonical_json, CalibrationProfile, SpecFile, TraceFile,
};
use neus_v::perception::{
    find_optimal_threshold, load_samples_csv, roc_curve, score_matrix, write_roc_csv, VlmClient,
    VlmConfig,
};
use neus_v::pipeline::{
    benchmark, benchmark_details_csv, evaluate, window_frames, EvaluationConfig, EvaluationInput,
    EvaluationReport,
};
use neus_v::puls::{translate_all_modes, HttpTextGenClient, LlmConfig, PulsStores};
use neus_v::scoring::{ecdf_map, EvaluationMode};
use neus_v::tl::{Proposition, PropositionSet};

#[derive(Parser)]
#[command(
    name = "neusv",
    version,
    about = "Score text-to-video alignment with temporal-logic verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate a prompt into per-mode specifications via an LLM.
    Translate(TranslateArgs),
    /// Score propositions against frame windows, producing a trace file.
    Perceive(PerceiveArgs),
    /// Compute satisfaction probabilities for a trace against a spec.
    Score(ScoreArgs),
    /// Run the full pipeline and write an evaluation report.
    Evaluate(EvaluateArgs),
    /// Find the accuracy-maximizing false-positive threshold.
    CalibrateThreshold(CalibrateArgs),
    /// Build a calibration profile from score outputs.
    BuildEcdf(BuildEcdfArgs),
    /// Aggregate per-video reports into a benchmark summary.
    Benchmark(BenchmarkArgs),
    /// Export the video automaton as a plain-text DTMC listing.
    ExportAutomaton(ExportArgs),
}

#[derive(Args)]
struct LlmFlags {
    /// Chat-completions endpoint for prompt translation.
    #[arg(long, env = "NEUSV_LLM_ENDPOINT")]
    llm_endpoint: String,
    /// Model identifier for prompt translation.
    #[arg(long, env = "NEUSV_LLM_MODEL", default_value = "gpt-4o")]
    llm_model: String,
    /// Environment variable holding the LLM API key.
    #[arg(long, env = "NEUSV_LLM_API_KEY_ENV")]
    llm_api_key_env: Option<String>,
    /// Request timeout in seconds.
    #[arg(long, env = "NEUSV_LLM_TIMEOUT", default_value_t = 120)]
    llm_timeout: u64,
}

#[derive(Args)]
struct TranslateArgs {
    /// The text prompt the video was generated from.
    #[arg(long, env = "NEUSV_PROMPT")]
    prompt: String,
    /// Directory with custom few-shot stores (t2p/<mode>.json, t2tl/<mode>.json).
    #[arg(long, env = "NEUSV_FEWSHOT_DIR")]
    fewshot_dir: Option<PathBuf>,
    /// Comma-separated evaluation modes (default: all four).
    #[arg(long, env = "NEUSV_MODES", value_delimiter = ',')]
    modes: Vec<EvaluationMode>,
    #[command(flatten)]
    llm: LlmFlags,
    /// Output spec file path.
    #[arg(long, env = "NEUSV_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct PerceiveArgs {
    /// Directory of frame images, consumed in lexicographic filename order.
    #[arg(long, env = "NEUSV_FRAMES")]
    frames: PathBuf,
    /// Spec file whose propositions get scored (union over modes).
    #[arg(long, env = "NEUSV_SPEC")]
    spec: Option<PathBuf>,
    /// Extra propositions to score, comma-separated display phrases.
    #[arg(long, env = "NEUSV_PROPS", value_delimiter = ',')]
    props: Vec<String>,
    /// Frames per window.
    #[arg(long, env = "NEUSV_WINDOW_SIZE", default_value_t = 3)]
    window_size: usize,
    /// Chat-completions endpoint of the vision-language model.
    #[arg(long, env = "NEUSV_VLM_ENDPOINT")]
    vlm_endpoint: String,
    /// Vision-language model identifier.
    #[arg(long, env = "NEUSV_VLM_MODEL", default_value = "internvl2-8b")]
    vlm_model: String,
    /// Environment variable holding the VLM API key.
    #[arg(long, env = "NEUSV_VLM_API_KEY_ENV")]
    vlm_api_key_env: Option<String>,
    /// Request timeout in seconds.
    #[arg(long, env = "NEUSV_VLM_TIMEOUT", default_value_t = 60)]
    vlm_timeout: u64,
    /// Concurrent request cap.
    #[arg(long, env = "NEUSV_PARALLELISM", default_value_t = 4)]
    parallelism: usize,
    /// Output trace file path.
    #[arg(long, env = "NEUSV_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Trace file with per-window confidences.
    #[arg(long, env = "NEUSV_TRACE")]
    trace: PathBuf,
    /// Spec file to check against.
    #[arg(long, env = "NEUSV_SPEC")]
    spec: PathBuf,
    /// Calibration profile; enables calibrated scores.
    #[arg(long, env = "NEUSV_PROFILE")]
    profile: Option<PathBuf>,
    /// False-positive threshold override for uncalibrated traces.
    #[arg(long, env = "NEUSV_GAMMA")]
    gamma: Option<f64>,
    /// Comma-separated evaluation modes (default: those in the spec).
    #[arg(long, env = "NEUSV_MODES", value_delimiter = ',')]
    modes: Vec<EvaluationMode>,
    /// Output path (stdout when omitted).
    #[arg(long, env = "NEUSV_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Spec file; takes precedence over prompt translation.
    #[arg(long, env = "NEUSV_SPEC")]
    spec: Option<PathBuf>,
    /// Prompt to translate when no spec file is given.
    #[arg(long, env = "NEUSV_PROMPT")]
    prompt: Option<String>,
    /// Directory with custom few-shot stores for translation.
    #[arg(long, env = "NEUSV_FEWSHOT_DIR")]
    fewshot_dir: Option<PathBuf>,
    /// Chat-completions endpoint for prompt translation.
    #[arg(long, env = "NEUSV_LLM_ENDPOINT")]
    llm_endpoint: Option<String>,
    /// Model identifier for prompt translation.
    #[arg(long, env = "NEUSV_LLM_MODEL", default_value = "gpt-4o")]
    llm_model: String,
    /// Environment variable holding the LLM API key.
    #[arg(long, env = "NEUSV_LLM_API_KEY_ENV")]
    llm_api_key_env: Option<String>,
    /// Trace file input (offline path).
    #[arg(long, env = "NEUSV_TRACE")]
    trace: Option<PathBuf>,
    /// Frame directory input (perception path).
    #[arg(long, env = "NEUSV_FRAMES")]
    frames: Option<PathBuf>,
    /// Chat-completions endpoint of the vision-language model.
    #[arg(long, env = "NEUSV_VLM_ENDPOINT")]
    vlm_endpoint: Option<String>,
    /// Vision-language model identifier.
    #[arg(long, env = "NEUSV_VLM_MODEL", default_value = "internvl2-8b")]
    vlm_model: String,
    /// Environment variable holding the VLM API key.
    #[arg(long, env = "NEUSV_VLM_API_KEY_ENV")]
    vlm_api_key_env: Option<String>,
    /// Calibration profile path (bundled profile when omitted).
    #[arg(long, env = "NEUSV_PROFILE")]
    profile: Option<PathBuf>,
    /// False-positive threshold override.
    #[arg(long, env = "NEUSV_GAMMA")]
    gamma: Option<f64>,
    /// Frames per window.
    #[arg(long, env = "NEUSV_WINDOW_SIZE", default_value_t = 3)]
    window_size: usize,
    /// Comma-separated evaluation modes (default: all four).
    #[arg(long, env = "NEUSV_MODES", value_delimiter = ',')]
    modes: Vec<EvaluationMode>,
    /// Video identifier recorded in the report.
    #[arg(long, env = "NEUSV_VIDEO_ID")]
    video_id: Option<String>,
    /// Timestamp recorded in provenance; omitted (deterministic) by default.
    #[arg(long, env = "NEUSV_TIMESTAMP")]
    timestamp: Option<String>,
    /// Concurrent perception request cap.
    #[arg(long, env = "NEUSV_PARALLELISM", default_value_t = 4)]
    parallelism: usize,
    /// Output report path (stdout when omitted).
    #[arg(long, env = "NEUSV_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// CSV of calibration samples with columns score,label.
    #[arg(long, env = "NEUSV_SAMPLES")]
    samples: PathBuf,
    /// Also write the ROC curve to this CSV path.
    #[arg(long, env = "NEUSV_ROC_OUT")]
    roc_out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildEcdfArgs {
    /// Directory of `score` outputs to aggregate.
    #[arg(long, env = "NEUSV_SCORES")]
    scores: PathBuf,
    /// False-positive threshold stored in the profile.
    #[arg(long, env = "NEUSV_GAMMA")]
    gamma: f64,
    /// Profile version string.
    #[arg(long, env = "NEUSV_PROFILE_VERSION")]
    version: String,
    /// Provenance note describing how the samples were produced.
    #[arg(long, env = "NEUSV_PROVENANCE")]
    provenance: String,
    /// Output profile path.
    #[arg(long, env = "NEUSV_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Prompt suite (JSON Lines: id, theme, complexity, prompt).
    #[arg(long, env = "NEUSV_SUITE")]
    suite: PathBuf,
    /// Directory of evaluation reports named `<prompt_id>__<model>.json`.
    #[arg(long, env = "NEUSV_REPORTS")]
    reports: PathBuf,
    /// Human annotations CSV (video_id, alignment_score on 1-5).
    #[arg(long, env = "NEUSV_ANNOTATIONS")]
    annotations: PathBuf,
    /// Output directory for summary.json, summary.csv, details.csv.
    #[arg(long, env = "NEUSV_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Trace file to build the automaton from.
    #[arg(long, env = "NEUSV_TRACE")]
    trace: PathBuf,
    /// False-positive threshold applied when the trace is uncalibrated.
    #[arg(long, env = "NEUSV_GAMMA")]
    gamma: Option<f64>,
    /// Restrict to one mode's propositions from this spec file.
    #[arg(long, env = "NEUSV_SPEC", requires = "mode")]
    spec: Option<PathBuf>,
    /// Mode whose propositions to project onto.
    #[arg(long, env = "NEUSV_MODE", requires = "spec")]
    mode: Option<EvaluationMode>,
    /// Output path (stdout when omitted).
    #[arg(long, env = "NEUSV_OUT")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Translate(args) => cmd_translate(args),
        Command::Perceive(args) => cmd_perceive(args),
        Command::Score(args) => cmd_score(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::CalibrateThreshold(args) => cmd_calibrate(args),
        Command::BuildEcdf(args) => cmd_build_ecdf(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::ExportAutomaton(args) => cmd_export(args),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn load_stores(dir: Option<&Path>) -> Result<PulsStores> {
    Ok(match dir {
        Some(dir) => PulsStores::load_dir(dir)?,
        None => PulsStores::bundled(),
    })
}

fn requested_modes(modes: &[EvaluationMode]) -> Vec<EvaluationMode> {
    if modes.is_empty() {
        EvaluationMode::ALL.to_vec()
    } else {
        modes.to_vec()
    }
}

fn cmd_translate(args: TranslateArgs) -> Result<ExitCode> {
    let stores = load_stores(args.fewshot_dir.as_deref())?;
    let client = HttpTextGenClient::new(LlmConfig {
        endpoint: args.llm.llm_endpoint,
        model: args.llm.llm_model,
        api_key_env: args.llm.llm_api_key_env,
        timeout_secs: args.llm.llm_timeout,
        ..LlmConfig::default()
    })?;
    let modes = requested_modes(&args.modes);
    let outcome = translate_all_modes(&client, &stores, &args.prompt, &modes)?;
    let spec = outcome.to_spec_file(&args.prompt);
    spec.save(&args.out)?;
    for (mode, error) in &outcome.failures {
        eprintln!("warning: mode {mode} failed: {error}");
    }
    eprintln!(
        "wrote {} with {} mode(s)",
        args.out.display(),
        outcome.specs.len()
    );
    Ok(if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

/// Frames are consumed in lexicographic filename order.
fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut frames: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading frame directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("jpg" | "jpeg" | "png" | "webp")
            )
        })
        .collect();
    frames.sort();
    if frames.is_empty() {
        bail!("no frames (jpg/jpeg/png/webp) found in {}", dir.display());
    }
    Ok(frames)
}

/// Union of every mode's propositions, in first-appearance order.
fn spec_proposition_union(spec: &SpecFile) -> Result<PropositionSet> {
    let mut props = PropositionSet::empty();
    for mode in EvaluationMode::ALL {
        if let Some(compiled) = spec.mode(mode) {
            let (mode_props, _) = compiled?;
            for prop in mode_props.iter() {
                props.push_dedup(prop.clone());
            }
        }
    }
    Ok(props)
}

fn cmd_perceive(args: PerceiveArgs) -> Result<ExitCode> {
    let mut props = PropositionSet::empty();
    if let Some(spec_path) = &args.spec {
        let spec = SpecFile::load(spec_path)?;
        props = spec_proposition_union(&spec)?;
    }
    for phrase in &args.props {
        props.push_dedup(Proposition::new(phrase)?);
    }
    if props.is_empty() {
        bail!("nothing to score: pass --spec and/or --props");
    }

    let frames = list_frames(&args.frames)?;
    let windows = window_frames(&frames, args.window_size)?;
    let client = VlmClient::new(VlmConfig {
        endpoint: args.vlm_endpoint,
        model: args.vlm_model,
        api_key_env: args.vlm_api_key_env,
        timeout_secs: args.vlm_timeout,
        max_frames: args.window_size.max(3),
        parallelism: args.parallelism,
        ..VlmConfig::default()
    })?;

    let prop_vec: Vec<Proposition> = props.iter().cloned().collect();
    let matrix = score_matrix(&client, &prop_vec, &windows, args.parallelism)?;
    let trace = TraceFile {
        propositions: props.ids().map(str::to_string).collect(),
        window_size: args.window_size,
        calibrated: false,
        windows: matrix,
    };
    trace.save(&args.out)?;
    eprintln!(
        "wrote {} ({} windows x {} propositions)",
        args.out.display(),
        trace.windows.len(),
        trace.propositions.len()
    );
    Ok(ExitCode::SUCCESS)
}

/// Projects the trace's columns onto one mode's propositions.
fn project_mode_trace(
    trace_file: &TraceFile,
    props: &PropositionSet,
) -> Result<neus_v::automaton::ConfidenceTrace> {
    let columns: Vec<usize> = props
        .iter()
        .map(|p| {
            trace_file
                .propositions
                .iter()
                .position(|id| id == p.id())
                .with_context(|| format!("proposition {:?} is not in the trace", p.id()))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = trace_file
        .windows
        .iter()
        .map(|row| columns.iter().map(|&c| row[c]).collect())
        .collect();
    Ok(neus_v::automaton::ConfidenceTrace::new(
        props.clone(),
        trace_file.window_size,
        rows,
        trace_file.calibrated,
    )?)
}

fn cmd_score(args: ScoreArgs) -> Result<ExitCode> {
    let trace_file = TraceFile::load(&args.trace)?;
    let spec = SpecFile::load(&args.spec)?;
    let profile = args
        .profile
        .as_deref()
        .map(CalibrationProfile::load)
        .transpose()?;

    let modes = if args.modes.is_empty() {
        spec.modes.keys().copied().collect()
    } else {
        args.modes.clone()
    };
    let gamma = args.gamma.or(profile.as_ref().map(|p| p.gamma_fp));

    let mut modes_out = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for mode in modes {
        match score_one_mode(&trace_file, &spec, mode, gamma, profile.as_ref()) {
            Ok(value) => {
                modes_out.insert(mode.key().to_string(), value);
            }
            Err(e) => {
                failures.insert(mode.key().to_string(), format!("{e:#}"));
            }
        }
    }
    if modes_out.is_empty() {
        bail!(
            "all modes failed: {}",
            failures
                .iter()
                .map(|(m, e)| format!("{m}: {e}"))
                .collect::<Vec<_>>()
                .join("; ")
        );
    }

    let output = serde_json::json!({
        "prompt": spec.prompt,
        "modes": modes_out,
        "failures": failures,
    });
    write_output(args.out.as_deref(), &to_canonical_json(&output)?)?;
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn score_one_mode(
    trace_file: &TraceFile,
    spec: &SpecFile,
    mode: EvaluationMode,
    gamma: Option<f64>,
    profile: Option<&CalibrationProfile>,
) -> Result<serde_json::Value> {
    let (props, formula) = spec
        .mode(mode)
        .with_context(|| format!("mode {mode} is not present in the spec"))??;

    let raw = project_mode_trace(trace_file, &props)?;
    let calibrated = if raw.is_calibrated() {
        raw
    } else {
        let gamma = gamma
            .context("trace is uncalibrated: pass --gamma or --profile to supply the threshold")?;
        raw.calibrate(gamma)?
    };
    let automaton = build_automaton(&calibrated)?;
    let result = satisfaction_probability(&automaton, &formula)?;

    let mut entry = serde_json::json!({
        "satisfaction_probability": result.probability,
    });
    if let Some(profile) = profile {
        if let Some(distribution) = profile.distribution(mode) {
            let score = ecdf_map(result.probability, &distribution)?;
            entry["score"] = serde_json::json!(score);
        }
    }
    Ok(entry)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let profile = match &args.profile {
        Some(path) => CalibrationProfile::load(path)?,
        None => CalibrationProfile::bundled(),
    };

    // Spec source precedence: an explicit spec file beats prompt translation.
    let spec = match (&args.spec, &args.prompt) {
        (Some(path), _) => SpecFile::load(path)?,
        (None, Some(prompt)) => {
            let endpoint = args
                .llm_endpoint
                .clone()
                .context("--llm-endpoint is required to translate a prompt")?;
            let stores = load_stores(args.fewshot_dir.as_deref())?;
            let client = HttpTextGenClient::new(LlmConfig {
                endpoint,
                model: args.llm_model.clone(),
                api_key_env: args.llm_api_key_env.clone(),
                ..LlmConfig::default()
            })?;
            let modes = requested_modes(&args.modes);
            translate_all_modes(&client, &stores, prompt, &modes)?.to_spec_file(prompt)
        }
        (None, None) => bail!("pass --spec or --prompt"),
    };

    let mut config = EvaluationConfig::new(profile);
    config.window_size = args.window_size;
    config.gamma_fp = args.gamma;
    config.modes = requested_modes(&args.modes)
        .into_iter()
        .filter(|mode| spec.modes.contains_key(mode))
        .collect();
    if config.modes.is_empty() {
        bail!("the spec contains none of the requested modes");
    }
    config.video_id = args.video_id.clone();
    config.timestamp = args.timestamp.clone();

    let report = match (&args.trace, &args.frames) {
        (Some(trace_path), None) => {
            let trace = TraceFile::load(trace_path)?;
            evaluate(&config, &spec, &EvaluationInput::Trace(&trace))?
        }
        (None, Some(frames_dir)) => {
            let endpoint = args
                .vlm_endpoint
                .clone()
                .context("--vlm-endpoint is required to score frames")?;
            let client = VlmClient::new(VlmConfig {
                endpoint,
                model: args.vlm_model.clone(),
                api_key_env: args.vlm_api_key_env.clone(),
                max_frames: args.window_size.max(3),
                parallelism: args.parallelism,
                ..VlmConfig::default()
            })?;
            let frames = list_frames(frames_dir)?;
            evaluate(
                &config,
                &spec,
                &EvaluationInput::Frames {
                    frames: &frames,
                    client: &client,
                    parallelism: args.parallelism,
                },
            )?
        }
        _ => bail!("pass exactly one of --trace or --frames"),
    };

    write_output(args.out.as_deref(), &report.to_canonical_json()?)?;
    Ok(if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<ExitCode> {
    let samples = load_samples_csv(&args.samples)?;
    let result = find_optimal_threshold(&samples)?;
    if let Some(roc_path) = &args.roc_out {
        let points = roc_curve(&samples)?;
        write_roc_csv(roc_path, &points)?;
        eprintln!("wrote ROC curve to {}", roc_path.display());
    }
    let output = serde_json::json!({
        "gamma_fp": result.gamma_fp,
        "accuracy": result.accuracy,
        "samples": samples.len(),
    });
    print!("{}", to_canonical_json(&output)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_build_ecdf(args: BuildEcdfArgs) -> Result<ExitCode> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&args.scores)
        .with_context(|| format!("reading {}", args.scores.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no score files (*.json) in {}", args.scores.display());
    }

    let mut per_mode: BTreeMap<EvaluationMode, Vec<f64>> = BTreeMap::new();
    for file in &files {
        let text =
            std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
        let modes = value
            .get("modes")
            .and_then(|m| m.as_object())
            .with_context(|| format!("{} has no modes object", file.display()))?;
        for (key, entry) in modes {
            let mode: EvaluationMode = key
                .parse()
                .map_err(|e: String| anyhow::anyhow!("{}: {e}", file.display()))?;
            let p = entry
                .get("satisfaction_probability")
                .and_then(|v| v.as_f64())
                .with_context(|| format!("{}: mode {key} has no probability", file.display()))?;
            per_mode.entry(mode).or_default().push(p);
        }
    }
    for samples in per_mode.values_mut() {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let profile = CalibrationProfile {
        version: args.version,
        gamma_fp: args.gamma,
        provenance: args.provenance,
        ecdf: per_mode,
    };
    profile
        .validate()
        .map_err(|message| anyhow::anyhow!("profile invalid: {message}"))?;
    profile.save(&args.out)?;
    eprintln!(
        "wrote {} from {} score file(s)",
        args.out.display(),
        files.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<ExitCode> {
    let suite = load_prompt_suite(&args.suite)?;
    let annotations = load_annotations(&args.annotations)?;

    let mut entries: Vec<PathBuf> = std::fs::read_dir(&args.reports)
        .with_context(|| format!("reading {}", args.reports.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    entries.sort();
    let mut reports = BTreeMap::new();
    for path in &entries {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let report = EvaluationReport::from_json(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        let video_id = report
            .video_id
            .clone()
            .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .context("report has no video id and no file stem")?;
        reports.insert(video_id, report);
    }
    if reports.is_empty() {
        bail!("no reports (*.json) in {}", args.reports.display());
    }

    let summary = benchmark(&suite, &reports, &annotations);
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    std::fs::write(args.out.join("summary.json"), to_canonical_json(&summary)?)?;
    std::fs::write(args.out.join("summary.csv"), summary.to_csv())?;
    std::fs::write(
        args.out.join("details.csv"),
        benchmark_details_csv(&reports, &annotations),
    )?;
    for warning in &summary.warnings {
        eprintln!("warning: {warning}");
    }
    eprintln!(
        "wrote summary.json, summary.csv, details.csv to {}",
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(args: ExportArgs) -> Result<ExitCode> {
    let trace_file = TraceFile::load(&args.trace)?;

    let confidence_trace = match (&args.spec, args.mode) {
        (Some(spec_path), Some(mode)) => {
            let spec = SpecFile::load(spec_path)?;
            let (props, _) = spec
                .mode(mode)
                .with_context(|| format!("mode {mode} is not present in the spec"))??;
            project_mode_trace(&trace_file, &props)?
        }
        _ => trace_file.to_confidence_trace()?,
    };

    let calibrated = if confidence_trace.is_calibrated() {
        confidence_trace
    } else {
        let gamma = args
            .gamma
            .context("trace is uncalibrated: pass --gamma to supply the threshold")?;
        confidence_trace.calibrate(gamma)?
    };
    let automaton = build_automaton(&calibrated)?;
    write_output(args.out.as_deref(), &automaton.export_dtmc())?;
    Ok(ExitCode::SUCCESS)
}
