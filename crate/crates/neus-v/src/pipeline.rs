//! End-to-end evaluation: windowing, per-mode scoring of a video against its
//! specification, report assembly, and batch benchmarking against human
//! annotations.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{build_automaton, ConfidenceTrace};
use crate::checker::satisfaction_probability;
use crate::formats::{
    to_canonical_json, CalibrationProfile, FormatError, PromptSuiteEntry, SpecFile,
    SpecProposition, TraceFile,
};
use crate::perception::{score_matrix, ClientIdentity, PerceptionClient};
use crate::scoring::{aggregate, ecdf_map, pearson, EvaluationMode, ModeScore};
use crate::tl::PropositionSet;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("window size must be at least 1")]
    ZeroWindowSize,
    #[error("{frames} frames cannot fill one window of size {window}")]
    TooFewFrames { frames: usize, window: usize },
    #[error("calibration profile has no reference distribution for mode {mode}")]
    MissingEcdf { mode: EvaluationMode },
    #[error("all requested modes failed: {summary}")]
    AllModesFailed { summary: String },
    #[error("no modes requested")]
    NoModesRequested,
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

/// Settings for one evaluation run.
#[derive(Debug, Clone)]
pub struct EvaluationConfig {
    pub window_size: usize,
    /// Overrides the profile's threshold when set.
    pub gamma_fp: Option<f64>,
    pub profile: CalibrationProfile,
    pub modes: Vec<EvaluationMode>,
    pub video_id: Option<String>,
    /// Emitted verbatim into provenance when set; omitted otherwise so that
    /// identical runs produce identical bytes.
    pub timestamp: Option<String>,
}

impl EvaluationConfig {
    pub fn new(profile: CalibrationProfile) -> Self {
        EvaluationConfig {
            window_size: 3,
            gamma_fp: None,
            profile,
            modes: EvaluationMode::ALL.to_vec(),
            video_id: None,
            timestamp: None,
        }
    }

    pub fn effective_gamma(&self) -> f64 {
        self.gamma_fp.unwrap_or(self.profile.gamma_fp)
    }
}

/// What the confidences come from: a stored trace or frames plus a client.
pub enum EvaluationInput<'a> {
    Trace(&'a TraceFile),
    Frames {
        frames: &'a [PathBuf],
        client: &'a dyn PerceptionClient,
        parallelism: usize,
    },
}

/// Splits frames into consecutive non-overlapping windows of size `w`;
/// a trailing remainder shorter than `w` is dropped.
pub fn window_frames<T: Clone>(frames: &[T], w: usize) -> Result<Vec<Vec<T>>, PipelineError> {
    if w == 0 {
        return Err(PipelineError::ZeroWindowSize);
    }
    if frames.len() < w {
        return Err(PipelineError::TooFewFrames {
            frames: frames.len(),
            window: w,
        });
    }
    Ok(frames.chunks_exact(w).map(<[T]>::to_vec).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub propositions: Vec<SpecProposition>,
    pub specification: String,
    pub satisfaction_probability: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub perception_client: String,
    pub perception_model: String,
    pub profile_version: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

/// The evaluation report written as JSON. Canonical serialization keeps it
/// byte-identical across runs and platforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_id: Option<String>,
    pub prompt: String,
    pub modes: BTreeMap<EvaluationMode, ModeReport>,
    /// Modes that were requested but could not be evaluated, with the reason.
    pub failures: BTreeMap<EvaluationMode, String>,
    pub final_score: f64,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

impl EvaluationReport {
    pub fn to_canonical_json(&self) -> Result<String, serde_json::Error> {
        to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Runs the full pipeline for one video: per requested mode, resolve the
/// specification, gather confidences, calibrate, build the automaton, check,
/// and map through the mode's reference distribution; then average.
pub fn evaluate(
    config: &EvaluationConfig,
    spec: &SpecFile,
    input: &EvaluationInput<'_>,
) -> Result<EvaluationReport, PipelineError> {
    if config.modes.is_empty() {
        return Err(PipelineError::NoModesRequested);
    }
    for &mode in &config.modes {
        if config.profile.distribution(mode).is_none() {
            return Err(PipelineError::MissingEcdf { mode });
        }
    }

    let mut warnings = Vec::new();
    let windows = match input {
        EvaluationInput::Trace(_) => Vec::new(),
        EvaluationInput::Frames { frames, .. } => {
            let windows = window_frames(frames, config.window_size)?;
            let dropped = frames.len() - windows.len() * config.window_size;
            if dropped > 0 {
                warnings.push(format!(
                    "dropped {dropped} trailing frame(s) that do not fill a window of {}",
                    config.window_size
                ));
            }
            windows
        }
    };

    let mut mode_reports = BTreeMap::new();
    let mut failures = BTreeMap::new();
    let mut per_mode_scores = BTreeMap::new();

    for &mode in &config.modes {
        match evaluate_mode(config, spec, input, &windows, mode) {
            Ok((report, score)) => {
                mode_reports.insert(mode, report);
                per_mode_scores.insert(mode, score);
            }
            Err(message) => {
                failures.insert(mode, message);
            }
        }
    }

    if mode_reports.is_empty() {
        let summary = failures
            .iter()
            .map(|(mode, error)| format!("{mode}: {error}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(PipelineError::AllModesFailed { summary });
    }

    let aggregated = aggregate(&per_mode_scores).expect("at least one mode present");

    let identity = match input {
        EvaluationInput::Trace(_) => ClientIdentity {
            name: "trace-file".into(),
            model: "recorded".into(),
        },
        EvaluationInput::Frames { client, .. } => (*client).identity().clone(),
    };

    Ok(EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        video_id: config.video_id.clone(),
        prompt: spec.prompt.clone(),
        modes: mode_reports,
        failures,
        final_score: aggregated.final_score,
        warnings,
        provenance: Provenance {
            perception_client: identity.name,
            perception_model: identity.model,
            profile_version: config.profile.version.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timestamp: config.timestamp.clone(),
        },
    })
}

fn evaluate_mode(
    config: &EvaluationConfig,
    spec: &SpecFile,
    input: &EvaluationInput<'_>,
    windows: &[Vec<PathBuf>],
    mode: EvaluationMode,
) -> Result<(ModeReport, ModeScore), String> {
    let (props, formula) = spec
        .mode(mode)
        .ok_or_else(|| format!("mode {mode} is not present in the specification"))?
        .map_err(|e| format!("specification for {mode} does not compile: {e}"))?;

    let raw = gather_confidences(config, input, windows, &props, mode)?;
    let calibrated = if raw.is_calibrated() {
        raw
    } else {
        raw.calibrate(config.effective_gamma())
            .map_err(|e| format!("mode {mode}: {e}"))?
    };

    let automaton = build_automaton(&calibrated).map_err(|e| format!("mode {mode}: {e}"))?;
    let result =
        satisfaction_probability(&automaton, &formula).map_err(|e| format!("mode {mode}: {e}"))?;

    let distribution = config
        .profile
        .distribution(mode)
        .expect("checked before the mode loop");
    let score =
        ecdf_map(result.probability, &distribution).map_err(|e| format!("mode {mode}: {e}"))?;

    Ok((
        ModeReport {
            propositions: props
                .iter()
                .map(SpecProposition::from_proposition)
                .collect(),
            specification: formula.to_string(),
            satisfaction_probability: result.probability,
            score,
        },
        ModeScore {
            probability: result.probability,
            score,
        },
    ))
}

/// Assembles the per-window confidence matrix for one mode's propositions.
fn gather_confidences(
    config: &EvaluationConfig,
    input: &EvaluationInput<'_>,
    windows: &[Vec<PathBuf>],
    props: &PropositionSet,
    mode: EvaluationMode,
) -> Result<ConfidenceTrace, String> {
    match input {
        EvaluationInput::Trace(trace) => {
            // Project the stored columns onto this mode's propositions.
            let columns: Vec<usize> = props
                .iter()
                .map(|p| {
                    trace
                        .propositions
                        .iter()
                        .position(|id| id == p.id())
                        .ok_or_else(|| {
                            format!("mode {mode}: proposition {:?} is not in the trace", p.id())
                        })
                })
                .collect::<Result<_, _>>()?;
            let rows: Vec<Vec<f64>> = trace
                .windows
                .iter()
                .map(|row| columns.iter().map(|&c| row[c]).collect())
                .collect();
            ConfidenceTrace::new(props.clone(), trace.window_size, rows, trace.calibrated)
                .map_err(|e| format!("mode {mode}: {e}"))
        }
        EvaluationInput::Frames {
            client,
            parallelism,
            ..
        } => {
            let prop_vec: Vec<_> = props.iter().cloned().collect();
            let matrix = score_matrix(*client, &prop_vec, windows, *parallelism)
                .map_err(|e| format!("mode {mode}: {e}"))?;
            ConfidenceTrace::new(props.clone(), config.window_size, matrix, false)
                .map_err(|e| format!("mode {mode}: {e}"))
        }
    }
}

/// Per-group benchmark statistics for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub mean_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pearson: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pearson_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    /// "theme", "complexity", or "overall".
    pub kind: String,
    pub name: String,
    pub per_model: BTreeMap<String, GroupStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub models: Vec<String>,
    pub groups: Vec<GroupSummary>,
    pub warnings: Vec<String>,
}

/// One evaluated video: suite prompt id, model, final score, and the
/// normalized human score when available.
#[derive(Debug, Clone)]
struct BenchmarkRow {
    theme: String,
    complexity: String,
    model: String,
    score: f64,
    human: Option<f64>,
}

/// Splits a video id of the form `<prompt_id>__<model>`; a bare id maps to
/// the "default" model.
pub fn split_video_id(video_id: &str) -> (&str, &str) {
    match video_id.rsplit_once("__") {
        Some((prompt_id, model)) => (prompt_id, model),
        None => (video_id, "default"),
    }
}

/// Aggregates per-video reports into per-theme / per-complexity / overall
/// means with Pearson correlation against human annotations.
///
/// `reports` is keyed by video id; `annotations` holds normalized human
/// scores keyed the same way.
pub fn benchmark(
    suite: &[PromptSuiteEntry],
    reports: &BTreeMap<String, EvaluationReport>,
    annotations: &BTreeMap<String, f64>,
) -> BenchmarkSummary {
    let mut warnings = Vec::new();
    let suite_by_id: BTreeMap<&str, &PromptSuiteEntry> =
        suite.iter().map(|e| (e.id.as_str(), e)).collect();

    let mut rows = Vec::new();
    let mut seen: BTreeMap<(String, String), ()> = BTreeMap::new();
    for (video_id, report) in reports {
        let (prompt_id, model) = split_video_id(video_id);
        let Some(entry) = suite_by_id.get(prompt_id) else {
            warnings.push(format!(
                "report {video_id} does not match any suite prompt; skipped"
            ));
            continue;
        };
        let human = annotations.get(video_id).copied();
        if human.is_none() {
            warnings.push(format!("no annotation for {video_id}"));
        }
        seen.insert((prompt_id.to_string(), model.to_string()), ());
        rows.push(BenchmarkRow {
            theme: entry.theme.clone(),
            complexity: entry.complexity.clone(),
            model: model.to_string(),
            score: report.final_score,
            human,
        });
    }
    let models: Vec<String> = {
        let mut models: Vec<String> = rows.iter().map(|r| r.model.clone()).collect();
        models.sort();
        models.dedup();
        models
    };
    for entry in suite {
        for model in &models {
            if !seen.contains_key(&(entry.id.clone(), model.clone())) {
                warnings.push(format!("missing report for {}__{model}", entry.id));
            }
        }
    }

    let mut groups = Vec::new();
    let mut themes: Vec<String> = suite.iter().map(|e| e.theme.clone()).collect();
    themes.sort();
    themes.dedup();
    for theme in themes {
        groups.push(summarize_group(
            "theme",
            &theme,
            &models,
            rows.iter().filter(|r| r.theme == theme),
        ));
    }
    let mut complexities: Vec<String> = suite.iter().map(|e| e.complexity.clone()).collect();
    complexities.sort();
    complexities.dedup();
    for complexity in complexities {
        groups.push(summarize_group(
            "complexity",
            &complexity,
            &models,
            rows.iter().filter(|r| r.complexity == complexity),
        ));
    }
    groups.push(summarize_group("overall", "overall", &models, rows.iter()));

    BenchmarkSummary {
        models,
        groups,
        warnings,
    }
}

fn summarize_group<'a>(
    kind: &str,
    name: &str,
    models: &[String],
    rows: impl Iterator<Item = &'a BenchmarkRow>,
) -> GroupSummary {
    let rows: Vec<&BenchmarkRow> = rows.collect();
    let mut per_model = BTreeMap::new();
    for model in models {
        let model_rows: Vec<&&BenchmarkRow> = rows.iter().filter(|r| &r.model == model).collect();
        if model_rows.is_empty() {
            continue;
        }
        let mean_score = model_rows.iter().map(|r| r.score).sum::<f64>() / model_rows.len() as f64;
        let paired: (Vec<f64>, Vec<f64>) = model_rows
            .iter()
            .filter_map(|r| r.human.map(|h| (r.score, h)))
            .unzip();
        let (pearson_value, pearson_error) = match pearson(&paired.0, &paired.1) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        per_model.insert(
            model.clone(),
            GroupStats {
                n: model_rows.len(),
                mean_score,
                pearson: pearson_value,
                pearson_error,
            },
        );
    }
    GroupSummary {
        kind: kind.to_string(),
        name: name.to_string(),
        per_model,
    }
}

impl BenchmarkSummary {
    /// CSV rows: group_kind, group_name, model, n, mean_score, pearson.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group_kind,group_name,model,n,mean_score,pearson\n");
        for group in &self.groups {
            for (model, stats) in &group.per_model {
                let pearson = stats.pearson.map(|r| r.to_string()).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    group.kind, group.name, model, stats.n, stats.mean_score, pearson
                ));
            }
        }
        out
    }
}

/// Per-video per-mode detail rows for a benchmark run:
/// video_id, mode, satisfaction_probability, score, human_score.
pub fn benchmark_details_csv(
    reports: &BTreeMap<String, EvaluationReport>,
    annotations: &BTreeMap<String, f64>,
) -> String {
    let mut out = String::from("video_id,mode,satisfaction_probability,score,human_score\n");
    for (video_id, report) in reports {
        let human = annotations
            .get(video_id)
            .map(|h| h.to_string())
            .unwrap_or_default();
        for (mode, mode_report) in &report.modes {
            out.push_str(&format!(
                "{video_id},{mode},{},{},{human}\n",
                mode_report.satisfaction_probability, mode_report.score
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::SpecFileMode;

    #[test]
    fn windows_divide_exactly() {
        let frames: Vec<u32> = (0..9).collect();
        let windows = window_frames(&frames, 3).unwrap();
        assert_eq!(windows.len(), 3);
        assert_eq!(windows[0], vec![0, 1, 2]);
        assert_eq!(windows[2], vec![6, 7, 8]);
    }

    #[test]
    fn trailing_remainder_is_dropped() {
        let frames: Vec<u32> = (0..10).collect();
        let windows = window_frames(&frames, 3).unwrap();
        assert_eq!(windows.len(), 3);
        assert!(!windows.iter().flatten().any(|&f| f == 9));
    }

    #[test]
    fn too_few_frames_is_an_error() {
        let frames: Vec<u32> = vec![0, 1];
        assert!(matches!(
            window_frames(&frames, 3),
            Err(PipelineError::TooFewFrames {
                frames: 2,
                window: 3
            })
        ));
        assert!(matches!(
            window_frames(&frames, 0),
            Err(PipelineError::ZeroWindowSize)
        ));
    }

    fn profile_all_modes(samples: Vec<f64>) -> CalibrationProfile {
        CalibrationProfile {
            version: "test".into(),
            gamma_fp: 0.5,
            provenance: "unit test".into(),
            ecdf: EvaluationMode::ALL
                .into_iter()
                .map(|m| (m, samples.clone()))
                .collect(),
        }
    }

    fn one_mode_spec(formula: &str, props: &[(&str, &str)]) -> SpecFile {
        SpecFile {
            prompt: "test prompt".into(),
            modes: [(
                EvaluationMode::OverallConsistency,
                SpecFileMode {
                    propositions: props
                        .iter()
                        .map(|(id, display)| SpecProposition {
                            id: id.to_string(),
                            display: display.to_string(),
                        })
                        .collect(),
                    formula: formula.into(),
                },
            )]
            .into_iter()
            .collect(),
        }
    }

    #[test]
    fn certainty_chain_scores_one() {
        // All confidences 1.0, spec ALWAYS p, profile samples all <= 1.0.
        let trace = TraceFile {
            propositions: vec!["p".into()],
            window_size: 1,
            calibrated: true,
            windows: vec![vec![1.0], vec![1.0], vec![1.0]],
        };
        let spec = one_mode_spec("ALWAYS \"p\"", &[("p", "p")]);
        let mut config = EvaluationConfig::new(profile_all_modes(vec![0.2, 0.5, 0.8]));
        config.modes = vec![EvaluationMode::OverallConsistency];
        let report = evaluate(&config, &spec, &EvaluationInput::Trace(&trace)).unwrap();
        let mode = &report.modes[&EvaluationMode::OverallConsistency];
        assert_eq!(mode.satisfaction_probability, 1.0);
        assert_eq!(mode.score, 1.0);
        assert_eq!(report.final_score, 1.0);
        assert!(report.failures.is_empty());
    }

    #[test]
    fn figure_confidences_reproduce_their_conjunction_probability() {
        let trace = TraceFile {
            propositions: vec![
                "p1".into(),
                "p2".into(),
                "p3".into(),
                "p4".into(),
                "p5".into(),
            ],
            window_size: 1,
            calibrated: true,
            windows: vec![vec![1.0, 1.0, 0.0, 0.8, 0.9]],
        };
        let spec = one_mode_spec(
            "\"p1\" AND \"p2\" AND NOT \"p3\" AND \"p4\" AND \"p5\"",
            &[
                ("p1", "p1"),
                ("p2", "p2"),
                ("p3", "p3"),
                ("p4", "p4"),
                ("p5", "p5"),
            ],
        );
        let mut config = EvaluationConfig::new(profile_all_modes(vec![0.5]));
        config.modes = vec![EvaluationMode::OverallConsistency];
        let report = evaluate(&config, &spec, &EvaluationInput::Trace(&trace)).unwrap();
        let mode = &report.modes[&EvaluationMode::OverallConsistency];
        assert!((mode.satisfaction_probability - 0.72).abs() < 1e-12);
    }

    #[test]
    fn missing_trace_proposition_is_a_recorded_failure() {
        let trace = TraceFile {
            propositions: vec!["p".into()],
            window_size: 1,
            calibrated: true,
            windows: vec![vec![1.0]],
        };
        let mut spec = one_mode_spec("ALWAYS \"p\"", &[("p", "p")]);
        spec.modes.insert(
            EvaluationMode::ObjectExistence,
            SpecFileMode {
                propositions: vec![SpecProposition {
                    id: "q".into(),
                    display: "q".into(),
                }],
                formula: "ALWAYS \"q\"".into(),
            },
        );
        let mut config = EvaluationConfig::new(profile_all_modes(vec![0.5]));
        config.modes = vec![
            EvaluationMode::ObjectExistence,
            EvaluationMode::OverallConsistency,
        ];
        let report = evaluate(&config, &spec, &EvaluationInput::Trace(&trace)).unwrap();
        assert_eq!(report.modes.len(), 1);
        assert_eq!(report.failures.len(), 1);
        assert!(report.failures[&EvaluationMode::ObjectExistence].contains("not in the trace"));
    }

    #[test]
    fn report_round_trips_through_json() {
        let trace = TraceFile {
            propositions: vec!["p".into()],
            window_size: 1,
            calibrated: true,
            windows: vec![vec![0.75]],
        };
        let spec = one_mode_spec("EVENTUALLY \"p\"", &[("p", "p")]);
        let mut config = EvaluationConfig::new(profile_all_modes(vec![0.25, 0.5, 0.75]));
        config.modes = vec![EvaluationMode::OverallConsistency];
        config.video_id = Some("v1".into());
        let report = evaluate(&config, &spec, &EvaluationInput::Trace(&trace)).unwrap();
        let text = report.to_canonical_json().unwrap();
        let parsed = EvaluationReport::from_json(&text).unwrap();
        assert_eq!(parsed, report);
    }

    fn fixture_suite() -> Vec<PromptSuiteEntry> {
        let mut suite = Vec::new();
        for (i, (theme, complexity)) in [
            ("nature", "basic"),
            ("nature", "intermediate"),
            ("driving", "basic"),
            ("driving", "intermediate"),
            ("objects", "basic"),
            ("objects", "advanced"),
            ("activities", "basic"),
            ("activities", "advanced"),
        ]
        .iter()
        .enumerate()
        {
            suite.push(PromptSuiteEntry {
                id: format!("p{i}"),
                theme: theme.to_string(),
                complexity: complexity.to_string(),
                prompt: format!("prompt {i}"),
            });
        }
        suite
    }

    fn report_with_score(score: f64) -> EvaluationReport {
        EvaluationReport {
            schema_version: REPORT_SCHEMA_VERSION,
            video_id: None,
            prompt: "p".into(),
            modes: BTreeMap::new(),
            failures: BTreeMap::new(),
            final_score: score,
            warnings: vec![],
            provenance: Provenance {
                perception_client: "trace-file".into(),
                perception_model: "recorded".into(),
                profile_version: "test".into(),
                tool_version: "0".into(),
                timestamp: None,
            },
        }
    }

    #[test]
    fn self_annotated_benchmark_correlates_perfectly() {
        let suite = fixture_suite();
        let mut reports = BTreeMap::new();
        let mut annotations = BTreeMap::new();
        for (i, entry) in suite.iter().enumerate() {
            let score = 0.1 + 0.1 * i as f64;
            let video_id = format!("{}__m1", entry.id);
            reports.insert(video_id.clone(), report_with_score(score));
            annotations.insert(video_id, score);
        }
        let summary = benchmark(&suite, &reports, &annotations);
        assert_eq!(summary.models, vec!["m1"]);
        for group in &summary.groups {
            for stats in group.per_model.values() {
                if stats.n >= 2 {
                    let r = stats.pearson.expect("pearson should exist");
                    assert!((r - 1.0).abs() < 1e-12, "group {} r={r}", group.name);
                }
            }
        }
        // Overall row covers every prompt.
        let overall = summary.groups.iter().find(|g| g.kind == "overall").unwrap();
        assert_eq!(overall.per_model["m1"].n, suite.len());
        let expected_mean =
            (0..suite.len()).map(|i| 0.1 + 0.1 * i as f64).sum::<f64>() / suite.len() as f64;
        assert!((overall.per_model["m1"].mean_score - expected_mean).abs() < 1e-12);
    }

    #[test]
    fn reversed_annotations_anticorrelate() {
        let suite = fixture_suite();
        let mut reports = BTreeMap::new();
        let mut annotations = BTreeMap::new();
        for (i, entry) in suite.iter().enumerate() {
            let score = 0.1 + 0.1 * i as f64;
            let video_id = format!("{}__m1", entry.id);
            reports.insert(video_id.clone(), report_with_score(score));
            annotations.insert(video_id, 1.0 - score);
        }
        let summary = benchmark(&suite, &reports, &annotations);
        let overall = summary.groups.iter().find(|g| g.kind == "overall").unwrap();
        assert!(overall.per_model["m1"].pearson.unwrap() < 0.0);
    }

    #[test]
    fn zero_variance_is_surfaced_per_group() {
        let suite = fixture_suite();
        let mut reports = BTreeMap::new();
        let mut annotations = BTreeMap::new();
        for entry in &suite {
            let video_id = format!("{}__m1", entry.id);
            reports.insert(video_id.clone(), report_with_score(0.5));
            annotations.insert(video_id, 0.7);
        }
        let summary = benchmark(&suite, &reports, &annotations);
        let overall = summary.groups.iter().find(|g| g.kind == "overall").unwrap();
        let stats = &overall.per_model["m1"];
        assert!(stats.pearson.is_none());
        assert!(stats.pearson_error.as_deref().unwrap().contains("variance"));
    }

    #[test]
    fn missing_reports_are_warned() {
        let suite = fixture_suite();
        let mut reports = BTreeMap::new();
        let mut annotations = BTreeMap::new();
        for entry in suite.iter().take(3) {
            let video_id = format!("{}__m1", entry.id);
            reports.insert(video_id.clone(), report_with_score(0.4));
            annotations.insert(video_id, 0.4);
        }
        let summary = benchmark(&suite, &reports, &annotations);
        assert!(summary
            .warnings
            .iter()
            .any(|w| w.contains("missing report")));
    }
}
