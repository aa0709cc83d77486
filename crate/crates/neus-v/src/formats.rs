//! File formats shared between the library and the CLI: specification files,
//! confidence trace files, calibration profiles, prompt suites, and human
//! annotations, plus the canonical JSON writer used for deterministic output.
//!
//! Canonical JSON: object keys sorted (the default `serde_json` map is
//! ordered), floats rounded to 12 significant digits, two-space indentation,
//! trailing newline. Two runs over the same inputs produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::automaton::{AutomatonError, ConfidenceTrace};
use crate::scoring::{build_ecdf, EcdfDistribution, EvaluationMode, ScoringError};
use crate::tl::{parse_formula, Formula, Proposition, PropositionSet, TlError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error(transparent)]
    Tl(#[from] TlError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

fn read_to_string(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|source| FormatError::Json {
        path: path.display().to_string(),
        source,
    })
}

fn write_string(path: &Path, contents: &str) -> Result<(), FormatError> {
    fs::write(path, contents).map_err(|source| FormatError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Rounds to 12 significant digits. Serializing the rounded value with the
/// shortest round-trip representation gives platform-independent text.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig12(f)) {
                        *n = rounded;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Serializes any value to canonical JSON text.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    Ok(text)
}

/// One proposition entry of a specification file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecProposition {
    pub id: String,
    pub display: String,
}

impl SpecProposition {
    pub fn from_proposition(p: &Proposition) -> Self {
        SpecProposition {
            id: p.id().to_string(),
            display: p.display().to_string(),
        }
    }
}

/// Per-mode propositions and specification text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFileMode {
    pub propositions: Vec<SpecProposition>,
    pub formula: String,
}

/// Specification file: the prompt and its per-mode compiled specifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub prompt: String,
    pub modes: BTreeMap<EvaluationMode, SpecFileMode>,
}

impl SpecFile {
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = read_to_string(path)?;
        let spec: SpecFile = parse_json(path, &text)?;
        spec.validate().map_err(|message| FormatError::Invalid {
            path: path.display().to_string(),
            message,
        })?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        let text = to_canonical_json(self).map_err(|source| FormatError::Json {
            path: path.display().to_string(),
            source,
        })?;
        write_string(path, &text)
    }

    /// Checks that every mode's formula parses against its propositions.
    pub fn validate(&self) -> Result<(), String> {
        for (mode, entry) in &self.modes {
            self.compile_mode(*mode, entry)
                .map_err(|e| format!("mode {mode}: {e}"))?;
        }
        Ok(())
    }

    fn compile_mode(
        &self,
        _mode: EvaluationMode,
        entry: &SpecFileMode,
    ) -> Result<(PropositionSet, Formula), TlError> {
        let mut props = PropositionSet::empty();
        for sp in &entry.propositions {
            let prop = Proposition::new(&sp.display)?;
            if prop.id() != sp.id {
                return Err(TlError::UnknownAtom {
                    phrase: format!("{} (stored id {} does not match)", sp.display, sp.id),
                });
            }
            props.push(prop)?;
        }
        let formula = parse_formula(&entry.formula, &props)?;
        Ok((props, formula))
    }

    /// Parses one mode into its proposition set and formula.
    pub fn mode(&self, mode: EvaluationMode) -> Option<Result<(PropositionSet, Formula), TlError>> {
        self.modes
            .get(&mode)
            .map(|entry| self.compile_mode(mode, entry))
    }
}

/// Confidence trace file: per-window, per-proposition scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub propositions: Vec<String>,
    pub window_size: usize,
    pub calibrated: bool,
    pub windows: Vec<Vec<f64>>,
}

impl TraceFile {
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = read_to_string(path)?;
        let trace: TraceFile = parse_json(path, &text)?;
        trace
            .to_confidence_trace()
            .map_err(|e| FormatError::Invalid {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        Ok(trace)
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        let text = to_canonical_json(self).map_err(|source| FormatError::Json {
            path: path.display().to_string(),
            source,
        })?;
        write_string(path, &text)
    }

    pub fn from_confidence_trace(trace: &ConfidenceTrace) -> Self {
        TraceFile {
            propositions: trace.props().ids().map(str::to_string).collect(),
            window_size: trace.window_size(),
            calibrated: trace.is_calibrated(),
            windows: trace.windows().to_vec(),
        }
    }

    pub fn to_confidence_trace(&self) -> Result<ConfidenceTrace, FormatError> {
        let mut props = PropositionSet::empty();
        for id in &self.propositions {
            props.push(Proposition::from_id(id)?)?;
        }
        Ok(ConfidenceTrace::new(
            props,
            self.window_size,
            self.windows.clone(),
            self.calibrated,
        )?)
    }
}

/// Calibration profile: the false-positive threshold and per-mode reference
/// distributions of satisfaction probabilities, plus provenance metadata
/// describing how the distributions were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    pub version: String,
    pub gamma_fp: f64,
    pub provenance: String,
    pub ecdf: BTreeMap<EvaluationMode, Vec<f64>>,
}

impl CalibrationProfile {
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = read_to_string(path)?;
        let profile: CalibrationProfile = parse_json(path, &text)?;
        profile.validate().map_err(|message| FormatError::Invalid {
            path: path.display().to_string(),
            message,
        })?;
        Ok(profile)
    }

    pub fn from_str_named(name: &str, text: &str) -> Result<Self, FormatError> {
        let path = Path::new(name);
        let profile: CalibrationProfile = parse_json(path, text)?;
        profile.validate().map_err(|message| FormatError::Invalid {
            path: name.to_string(),
            message,
        })?;
        Ok(profile)
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        let text = to_canonical_json(self).map_err(|source| FormatError::Json {
            path: path.display().to_string(),
            source,
        })?;
        write_string(path, &text)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.version.trim().is_empty() {
            return Err("profile version must not be empty".into());
        }
        if self.provenance.trim().is_empty() {
            return Err("profile provenance must not be empty".into());
        }
        if !(self.gamma_fp > 0.0 && self.gamma_fp < 1.0) {
            return Err(format!(
                "gamma_fp {} must lie strictly inside (0, 1)",
                self.gamma_fp
            ));
        }
        for (mode, samples) in &self.ecdf {
            if samples.is_empty() {
                return Err(format!("mode {mode}: empty sample set"));
            }
            for pair in samples.windows(2) {
                if pair[0] > pair[1] {
                    return Err(format!("mode {mode}: samples are not sorted ascending"));
                }
            }
            if samples.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
                return Err(format!("mode {mode}: sample outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// The reference distribution for one mode, if present.
    pub fn distribution(&self, mode: EvaluationMode) -> Option<EcdfDistribution> {
        self.ecdf
            .get(&mode)
            .and_then(|samples| build_ecdf(samples, mode).ok())
    }

    /// The tiny profile bundled with the repository, built from the fixture
    /// traces, so the pipeline runs offline out of the box.
    pub fn bundled() -> Self {
        let text = include_str!("../assets/profiles/bundled.json");
        Self::from_str_named("bundled.json", text).expect("bundled profile must be valid")
    }
}

/// One prompt of a benchmark suite (JSON Lines, one object per line).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSuiteEntry {
    pub id: String,
    pub theme: String,
    pub complexity: String,
    pub prompt: String,
}

pub fn load_prompt_suite(path: &Path) -> Result<Vec<PromptSuiteEntry>, FormatError> {
    let text = read_to_string(path)?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: PromptSuiteEntry =
            serde_json::from_str(line).map_err(|source| FormatError::Json {
                path: format!("{}:{}", path.display(), lineno + 1),
                source,
            })?;
        entries.push(entry);
    }
    if entries.is_empty() {
        return Err(FormatError::Invalid {
            path: path.display().to_string(),
            message: "prompt suite contains no entries".into(),
        });
    }
    Ok(entries)
}

/// Human annotation scores on the 1-5 scale, keyed by video id.
/// CSV columns: `video_id`, `alignment_score`.
pub fn load_annotations(path: &Path) -> Result<BTreeMap<String, f64>, FormatError> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| FormatError::Csv {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = BTreeMap::new();
    for record in reader.deserialize::<AnnotationRow>() {
        let row = record.map_err(|source| FormatError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        if !(1.0..=5.0).contains(&row.alignment_score) {
            return Err(FormatError::Invalid {
                path: path.display().to_string(),
                message: format!(
                    "alignment_score {} for {} is outside [1, 5]",
                    row.alignment_score, row.video_id
                ),
            });
        }
        out.insert(row.video_id, normalize_annotation(row.alignment_score));
    }
    if out.is_empty() {
        return Err(FormatError::Invalid {
            path: path.display().to_string(),
            message: "annotation file contains no rows".into(),
        });
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct AnnotationRow {
    video_id: String,
    alignment_score: f64,
}

/// Maps a 1-5 annotation onto [0, 1].
pub fn normalize_annotation(score: f64) -> f64 {
    (score - 1.0) / 4.0
}
